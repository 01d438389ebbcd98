use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

fn sibling(dir: &Path, tag: &str) -> PathBuf {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    dir.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

/// Writes `files` into `dir` as one unit.
///
/// Files go to a hidden staging directory beside `dir`, are synced, and the
/// staging directory is renamed into place, so readers never see a partial
/// run. An existing `dir` is an error unless `force` is set, in which case
/// it is swapped out and removed after the rename.
pub fn write_run_dir(dir: &Path, files: &[(String, Vec<u8>)], force: bool) -> Result<()> {
    if dir.exists() && !force {
        return Err(Error::OutputExists(dir.display().to_string()));
    }
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let staging = sibling(dir, "staging");
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;
    let staged = (|| -> Result<()> {
        for (name, bytes) in files {
            let mut file = fs::File::create(staging.join(name))?;
            file.write_all(bytes)?;
            file.sync_all()?;
        }
        Ok(())
    })();
    if let Err(e) = staged {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    if dir.exists() {
        let old = sibling(dir, "replaced");
        fs::rename(dir, &old)?;
        fs::rename(&staging, dir)?;
        fs::remove_dir_all(&old)?;
    } else {
        fs::rename(&staging, dir)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_to_overwrite_without_force() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        let files = vec![("a.txt".to_string(), b"one".to_vec())];
        write_run_dir(&dir, &files, false).unwrap();
        let again = vec![("b.txt".to_string(), b"two".to_vec())];
        assert!(matches!(write_run_dir(&dir, &again, false), Err(Error::OutputExists(_))));
        assert_eq!(fs::read(dir.join("a.txt")).unwrap(), b"one");
        write_run_dir(&dir, &again, true).unwrap();
        assert!(!dir.join("a.txt").exists());
        assert_eq!(fs::read(dir.join("b.txt")).unwrap(), b"two");
        let leftovers: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
