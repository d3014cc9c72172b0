//! `sgsim evolve` — one spectral run, observable and coherence series out.

use sgsim::coherence::CoherenceSeries;
use sgsim::fmt::float;
use sgsim::model::{bohm_number, make_initial_state, Branch};
use sgsim::observables::ObservableSeries;
use sgsim::regime::{evaluate_point, ScanContext};
use sgsim::spectral::{evolve, write_snapshot};

use crate::config::{OutputFormat, RunConfig};
use crate::output::OutDir;
use crate::AppError;

pub fn run(config: &RunConfig, out: &OutDir) -> Result<(), AppError> {
    let types = config.build_types()?;
    let grid = config.resolve_grid(&types)?;

    let initial =
        make_initial_state(&types.packet, &types.spins, &grid).map_err(AppError::physics)?;
    let traj = evolve(
        &initial,
        &types.params,
        config.t_final,
        config.dt,
        config.snapshot_stride,
    )
    .map_err(AppError::physics)?;

    let observables = ObservableSeries::from_trajectory(&traj);
    let coherence = CoherenceSeries::from_trajectory(
        &traj,
        &types.packet,
        &types.params,
        &types.spins,
        &types.jitter,
        config.n_samples,
        config.seed,
    )
    .map_err(AppError::physics)?;

    match config.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            observables
                .write_csv(&mut buf)
                .map_err(|e| AppError::io("observables", e))?;
            out.write_atomic("observables.csv", &buf)?;
            let mut buf = Vec::new();
            coherence
                .write_csv(&mut buf)
                .map_err(|e| AppError::io("coherence", e))?;
            out.write_atomic("coherence.csv", &buf)?;
        }
        OutputFormat::Json => {
            let mut buf = Vec::new();
            observables
                .write_json(&mut buf)
                .map_err(|e| AppError::io("observables", e))?;
            out.write_atomic("observables.json", &buf)?;
            let mut buf = Vec::new();
            coherence
                .write_json(&mut buf)
                .map_err(|e| AppError::io("coherence", e))?;
            out.write_atomic("coherence.json", &buf)?;
        }
    }

    if config.dump_snapshots {
        let snapdir = out.subdir("snapshots")?;
        for (i, state) in traj.iter().enumerate() {
            let mut buf = Vec::new();
            write_snapshot(&mut buf, state, &types.params)
                .map_err(|e| AppError::io("snapshot", e))?;
            snapdir.write_atomic(&format!("snap_{i:04}.dat"), &buf)?;
        }
    }

    out.write_atomic(
        "effective_config.txt",
        config.effective_text(&types.spins, Some(&grid)).as_bytes(),
    )?;

    // summary: final means, Bohm number at the configured geometry, label
    let last = observables.len() - 1;
    let up = observables.sample(Branch::Up, last);
    let down = observables.sample(Branch::Down, last);
    let bohm = bohm_number(&types.params, &types.geometry).abs();
    let ctx = ScanContext {
        thresholds: config.thresholds,
        jitter: types.jitter,
        n_samples: config.n_samples,
        seed: config.seed,
    };
    let report =
        evaluate_point(&config.point_spec(&types.spins), &ctx).map_err(AppError::physics)?;
    println!(
        "evolve: t = {} <x>_up = {} <x>_down = {} <p>_up = {} <p>_down = {} B = {} label = {} -> {}",
        float(config.t_final),
        float(up.mean_x),
        float(down.mean_x),
        float(up.mean_p),
        float(down.mean_p),
        float(bohm),
        report.label.label(),
        out.path().display()
    );
    Ok(())
}
