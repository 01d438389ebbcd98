use crate::error::Result;
use crate::functional::{vertical_derivative_into, Functional};
use crate::report::{convergence_csv, csv_table, HedgeReport, RepresentationReport};
use crate::representation::{reconstruct_path, representation_residual};
use crate::pathspace::IntegrandPath;

use super::config::ExperimentConfig;
use super::run::{residual_ladder, rms_checks, slope_check, source_for, zero_check, Files};

/// Delta hedging with the vertical derivative as hedge ratio.
///
/// The functional is read as the price of its terminal value. The hedge
/// holds `grad F(t_k, W)` units of `W` over `[t_k, t_{k+1})`, so the
/// replication error at `T` equals the representation residual. Writes
/// `hedge.csv` (`t, w.., price, hedge.., replicated` along scenario 0) and
/// `replication.csv` (terminal error RMS per grid, `t,rms,se`).
pub fn hedge_demo(
    config: &ExperimentConfig,
    f: &dyn Functional,
    report: &mut RepresentationReport,
    files: &mut Files,
) -> Result<()> {
    let (stats, conv) = residual_ladder(config, |src| representation_residual(f, src, &config.bump))?;

    let src = source_for(config, stats.steps)?;
    let sample = 0;
    let path = src.generate(sample);
    let view = path.view();
    let grid = path.grid();
    let d = path.dim();
    let mut prices = Vec::with_capacity(grid.len());
    let mut hedge = vec![0.0; grid.steps() * d];
    for k in 0..grid.len() {
        prices.push(f.evaluate(k, &view)?);
        if k < grid.steps() {
            vertical_derivative_into(f, k, &view, config.bump.vertical, config.bump.scheme, &mut hedge[k * d..(k + 1) * d])?;
        }
    }
    let replicated = reconstruct_path(prices[0], &IntegrandPath::new(d, hedge.clone())?, &path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("w{i}")));
    header.push("price".into());
    header.extend((1..=d).map(|i| format!("hedge{i}")));
    header.push("replicated".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let table = csv_table(
        &header,
        (0..grid.len()).map(|k| {
            let mut row = vec![grid.time(k).to_string()];
            row.extend(path.row(k).iter().map(f64::to_string));
            row.push(prices[k].to_string());
            if k < grid.steps() {
                row.extend(hedge[k * d..(k + 1) * d].iter().map(f64::to_string));
            } else {
                row.extend((0..d).map(|_| String::new()));
            }
            row.push(replicated[k].to_string());
            row
        }),
    )?;

    match f.id() {
        "linear" => report.checks.push(zero_check("replication-exact", &stats)),
        "conditional-square" | "quadratic" => {
            let horizon = config.horizon;
            report.checks.extend(rms_checks(
                "replication-rms-vs-sqrt-2-t-dt",
                &stats,
                conv.as_ref(),
                0.2,
                move |dt| (2.0 * horizon * dt).sqrt(),
            ))
        }
        "anticipated-average" => {
            if let Some(c) = &conv {
                report.checks.push(slope_check("replication-slope", c, 0.9, f64::INFINITY));
            }
        }
        _ => {}
    }
    files.push(("hedge.csv".into(), table));
    if let Some(c) = &conv {
        files.push(("replication.csv".into(), convergence_csv(c)?));
    }
    report.hedge = Some(HedgeReport {
        initial_price: prices[0],
        replication_error_rms: stats.terminal_rms,
        replication_error_mean: stats.terminal_mean,
        replication_error_sup: stats.sup_quantiles,
        scenarios: stats.scenarios_used,
        sample_scenario: sample,
    });
    report.convergence = conv;
    Ok(())
}
