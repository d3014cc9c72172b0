//! `sgsim scan` — evaluate a parameter sweep into a regime map.

use sgsim::regime::{scan, write_scan_csv, write_scan_json, RegimeLabel, ScanContext};

use crate::config::{OutputFormat, RunConfig};
use crate::output::OutDir;
use crate::AppError;

pub fn run(config: &RunConfig, out: &OutDir) -> Result<(), AppError> {
    let types = config.build_types()?;
    let base = config.point_spec(&types.spins);
    let points = config.sweep_points(base)?;

    let ctx = ScanContext {
        thresholds: config.thresholds,
        jitter: types.jitter,
        n_samples: config.n_samples,
        seed: config.seed,
    };
    let outcomes = scan(&points, &ctx);

    let mut buf = Vec::new();
    let name = match config.format {
        OutputFormat::Csv => {
            write_scan_csv(&mut buf, &points, &outcomes, &ctx)
                .map_err(|e| AppError::io("scan output", e))?;
            "regime.csv"
        }
        OutputFormat::Json => {
            write_scan_json(&mut buf, &points, &outcomes, &ctx)
                .map_err(|e| AppError::io("scan output", e))?;
            "regime.json"
        }
    };
    out.write_atomic(name, &buf)?;
    out.write_atomic(
        "effective_config.txt",
        config.effective_text(&types.spins, None).as_bytes(),
    )?;

    let mut counts = [0usize; 3];
    let mut errors = 0usize;
    for outcome in &outcomes {
        match outcome {
            Ok(r) => match r.label {
                RegimeLabel::Measuring => counts[0] += 1,
                RegimeLabel::Transition => counts[1] += 1,
                RegimeLabel::NonResolving => counts[2] += 1,
            },
            Err(_) => errors += 1,
        }
    }
    println!(
        "scan: {} points -> {} measuring, {} transition, {} non-resolving, {} errors -> {}",
        points.len(),
        counts[0],
        counts[1],
        counts[2],
        errors,
        out.path().join(name).display()
    );
    Ok(())
}
