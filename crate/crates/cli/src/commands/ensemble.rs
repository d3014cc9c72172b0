//! `sgsim ensemble` — ensemble visibility over time under apparatus jitter.

use sgsim::coherence::CoherenceSeries;
use sgsim::fmt::float;

use crate::config::{OutputFormat, RunConfig};
use crate::output::OutDir;
use crate::AppError;

pub fn run(config: &RunConfig, out: &OutDir) -> Result<(), AppError> {
    let types = config.build_types()?;
    if config.n_samples < 2 {
        return Err(AppError::Usage(format!(
            "ensemble needs n_samples >= 2, got {}",
            config.n_samples
        )));
    }
    if config.t_final <= 0.0 {
        return Err(AppError::Usage("ensemble needs t_final > 0".into()));
    }

    // same output cadence as evolve: every snapshot_stride-th step plus the
    // final time
    let steps = (config.t_final / config.dt).round() as usize;
    let stride = config.snapshot_stride.max(1);
    let mut times: Vec<f64> = (0..=steps)
        .filter(|i| i % stride == 0 || *i == steps)
        .map(|i| {
            if i == steps {
                config.t_final
            } else {
                i as f64 * config.dt
            }
        })
        .collect();
    times.dedup();

    let series = CoherenceSeries::from_analytic_times(
        &types.packet,
        &types.params,
        &types.spins,
        &times,
        &types.jitter,
        config.n_samples,
        config.seed,
    )
    .map_err(AppError::physics)?;

    let mut buf = Vec::new();
    use std::io::Write as _;
    let name = match config.format {
        OutputFormat::Csv => {
            writeln!(
                buf,
                "# sgsim ensemble visibility (sgsim {})",
                env!("CARGO_PKG_VERSION")
            )
            .map_err(|e| AppError::io("ensemble output", e))?;
            writeln!(
                buf,
                "# jitter: target = {} delta = {} n_samples = {} seed = {}",
                types.jitter.target().label(),
                float(types.jitter.delta()),
                config.n_samples,
                config.seed
            )
            .map_err(|e| AppError::io("ensemble output", e))?;
            series
                .write_csv(&mut buf)
                .map_err(|e| AppError::io("ensemble output", e))?;
            "ensemble.csv"
        }
        OutputFormat::Json => {
            series
                .write_json(&mut buf)
                .map_err(|e| AppError::io("ensemble output", e))?;
            "ensemble.json"
        }
    };
    out.write_atomic(name, &buf)?;
    out.write_atomic(
        "effective_config.txt",
        config.effective_text(&types.spins, None).as_bytes(),
    )?;

    let final_v = *series.visibility().last().unwrap();
    println!(
        "ensemble: {} times, delta = {}, final visibility = {} -> {}",
        series.times().len(),
        float(types.jitter.delta()),
        float(final_v),
        out.path().join(name).display()
    );
    Ok(())
}
