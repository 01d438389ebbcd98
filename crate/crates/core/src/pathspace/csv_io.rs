//! Path files: header `t,w1,...,wd`, one row per grid point, `.` decimals.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

use super::grid::TimeGrid;
use super::path::Path;

pub fn write_path_csv<W: Write>(path: &Path, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim()).map(|i| format!("w{i}")));
    wtr.write_record(&header)?;
    for k in 0..path.grid().len() {
        let mut rec = vec![path.grid().time(k).to_string()];
        rec.extend(path.row(k).iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(input: R) -> Result<Path> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let dim = header.len().saturating_sub(1);
    if dim == 0 || &header[0] != "t" {
        return Err(Error::PathFormat("header must be `t,w1,...,wd`".into()));
    }
    for (i, name) in header.iter().skip(1).enumerate() {
        if name != format!("w{}", i + 1) {
            return Err(Error::PathFormat(format!(
                "column {} must be named `w{}`, found `{name}`",
                i + 2,
                i + 1
            )));
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != dim + 1 {
            return Err(Error::PathFormat(format!(
                "row {} has {} fields, expected {}",
                line + 1,
                rec.len(),
                dim + 1
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::PathFormat(format!("row {}: `{s}`: {e}", line + 1)))
        };
        times.push(parse(&rec[0])?);
        for field in rec.iter().skip(1) {
            values.push(parse(field)?);
        }
    }
    let grid = Arc::new(TimeGrid::new(times)?);
    Path::new(grid, dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_expected_layout() {
        let grid = Arc::new(TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap());
        let p = Path::new(grid, 2, vec![0.0, 0.0, 0.25, -1.5, 1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,w1,w2\n0,0,0\n0.5,0.25,-1.5\n1,1,2\n");
        assert_eq!(read_path_csv(text.as_bytes()).unwrap(), p);
    }

    #[test]
    fn rejects_bad_headers_and_rows() {
        assert!(read_path_csv("x,w1\n0,0\n".as_bytes()).is_err());
        assert!(read_path_csv("t,w2\n0,0\n1,1\n".as_bytes()).is_err());
        assert!(read_path_csv("t,w1\n0,0\n1,abc\n".as_bytes()).is_err());
        assert!(read_path_csv("t,w1\n0,0\n0,1\n".as_bytes()).is_err());
    }
}
