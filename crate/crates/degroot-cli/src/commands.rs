//! The per-subcommand pipelines. Each returns the exit status it decided
//! on, or an error that the caller maps to an input/numerical exit code.

use rayon::prelude::*;

use degroot::io::{self, EstimationMode, GenKind, RunConfig};
use degroot::{
    consensus_preservation_check, derive_seed, estimate_static, estimate_time_varying,
    gen_network, gen_opinions, gen_resistance, hull_check, perturb, simulate as run_dynamics,
    EstimateStatus, OpinionState, Result, StopReason, Trajectory,
};

use crate::ExitStatus;

fn kind_str(kind: GenKind) -> &'static str {
    match kind {
        GenKind::Complete => "complete",
        GenKind::Ring => "ring",
        GenKind::Star => "star",
        GenKind::RandomSparse => "random-sparse",
    }
}

/// Generate the three system artifacts and the run manifest.
pub fn generate(config: &RunConfig) -> Result<ExitStatus> {
    let g = config.generate.as_ref().ok_or_else(|| {
        degroot::Error::InvalidParameter {
            reason: "generate needs a [generate] section or --gen-* flags".to_string(),
        }
    })?;
    let spec = g.network_spec(derive_seed(config.seed, 0))?;
    let network = gen_network(&spec)?;
    let resistance = gen_resistance(
        g.n,
        g.resistance_low,
        g.resistance_high,
        derive_seed(config.seed, 1),
    )?;
    let opinions = gen_opinions(g.n, g.m, g.opinions.dist(), derive_seed(config.seed, 2))?;

    io::write_network(&network, &config.paths.network)?;
    io::write_resistance(&resistance, &config.paths.resistance)?;
    io::write_opinions(&opinions, &config.paths.opinions)?;
    io::write_manifest(config, network.edge_count(), &config.paths.manifest)?;

    println!(
        "command=generate seed={} kind={} n={} m={} edges={} network={} resistance={} opinions={} manifest={}",
        config.seed,
        kind_str(g.kind),
        g.n,
        g.m,
        network.edge_count(),
        config.paths.network,
        config.paths.resistance,
        config.paths.opinions,
        config.paths.manifest,
    );
    Ok(ExitStatus::Success)
}

/// Run the dynamics from the artifact files and write the trajectory.
pub fn simulate(config: &RunConfig) -> Result<ExitStatus> {
    let network = io::read_network(&config.paths.network)?;
    let resistance = io::read_resistance(&config.paths.resistance)?;
    let opinions = io::read_opinions(&config.paths.opinions)?;
    let stop = config.simulate.stop_rule()?;

    let sim = run_dynamics(&network, &resistance, &opinions, stop)?;
    io::write_trajectory(&sim.trajectory, &config.paths.trajectory)?;

    let reason = match sim.reason {
        StopReason::HorizonReached => "horizon",
        StopReason::Converged => "converged",
        StopReason::StepCapReached => "step-cap",
    };
    let mut summary = format!(
        "command=simulate steps={} final_change={:e} reason={} trajectory={}",
        sim.steps(),
        sim.final_change,
        reason,
        config.paths.trajectory,
    );
    if sim.reason == StopReason::Converged {
        let last = sim.trajectory.last();
        for col in 0..last.m() {
            let mean: f64 =
                (0..last.n()).map(|i| last.get(i, col)).sum::<f64>() / last.n() as f64;
            summary.push_str(&format!(" consensus_{col}={mean}"));
        }
    }
    println!("{summary}");

    if sim.reason == StopReason::StepCapReached {
        eprintln!(
            "did not converge within {} steps (final change {:e})",
            sim.steps(),
            sim.final_change
        );
        return Ok(ExitStatus::NumericalFailure);
    }
    Ok(ExitStatus::Success)
}

/// Recover resistances and write the report.
pub fn estimate(config: &RunConfig) -> Result<ExitStatus> {
    let network = io::read_network(&config.paths.network)?;
    let trajectory = io::read_trajectory(&config.paths.trajectory)?;
    let report = match config.mode {
        EstimationMode::Static => estimate_static(&network, &trajectory, config.epsilon)?,
        EstimationMode::Varying => estimate_time_varying(&network, &trajectory, config.epsilon)?,
    };
    io::write_report(&report, &config.paths.report)?;

    let counts = report.status_counts();
    let rows = counts.ok
        + counts.degenerate
        + counts.boundary_zero
        + counts.boundary_one
        + counts.out_of_range();
    if rows > 0 && counts.degenerate == rows {
        eprintln!("warning: every estimate is degenerate; the trajectory carries no information");
    }

    let mut summary = format!(
        "command=estimate mode={} epsilon={:e} rows={} ok={} degenerate={} boundary_zero={} boundary_one={} out_of_range={} report={}",
        report.mode_str(),
        report.epsilon,
        rows,
        counts.ok,
        counts.degenerate,
        counts.boundary_zero,
        counts.boundary_one,
        counts.out_of_range(),
        config.paths.report,
    );
    if let degroot::ReportBody::TimeVarying { dispersion, .. } = &report.body {
        let flagged = dispersion.iter().filter(|d| d.flagged).count();
        summary.push_str(&format!(" dispersion_flagged={flagged}"));
    }
    println!("{summary}");

    if counts.out_of_range() > 0 {
        eprintln!(
            "{} estimate(s) fell outside (0, 1); the data does not fit the assumed process",
            counts.out_of_range()
        );
        return Ok(ExitStatus::ValidationFailure);
    }
    Ok(ExitStatus::Success)
}

/// Check hull containment and consensus preservation of a trajectory file.
pub fn validate(config: &RunConfig) -> Result<ExitStatus> {
    let trajectory = io::read_trajectory(&config.paths.trajectory)?;
    let hull = hull_check(&trajectory, config.validate.hull_tol);
    let consensus = consensus_preservation_check(&trajectory, config.validate.consensus_tol);

    for (column, &(low, high)) in hull.bounds.iter().enumerate() {
        let in_column: Vec<_> = hull
            .violations
            .iter()
            .filter(|v| v.column == column)
            .collect();
        let mut row = format!(
            "check=hull column={column} low={low} high={high} violations={}",
            in_column.len()
        );
        if let Some(first) = in_column.first() {
            row.push_str(&format!(
                " first_t={} first_node={} first_excess={:e}",
                first.t, first.node, first.excess
            ));
        }
        println!("{row}");
    }
    for col in &consensus.columns {
        println!(
            "check=consensus column={} initial_consensus={} preserved={} max_deviation={:e}",
            col.column,
            col.initial_consensus,
            col.preserved
                .map(|p| p.to_string())
                .unwrap_or_else(|| "na".to_string()),
            col.max_deviation,
        );
    }

    let consensus_ok = consensus.all_preserved();
    println!(
        "command=validate states={} hull_violations={} consensus_preserved={}",
        trajectory.len(),
        hull.violations.len(),
        if consensus.any_initial_consensus() {
            consensus_ok.to_string()
        } else {
            "na".to_string()
        },
    );

    if !hull.ok() || !consensus_ok {
        return Ok(ExitStatus::ValidationFailure);
    }
    Ok(ExitStatus::Success)
}

/// Affinely rescale a trajectory file.
pub fn rescale(config: &RunConfig) -> Result<ExitStatus> {
    let trajectory = io::read_trajectory(&config.paths.trajectory)?;
    let scaled = degroot::rescale(&trajectory, config.rescale.alpha, config.rescale.beta)?;
    io::write_trajectory(&scaled, &config.paths.rescaled)?;
    println!(
        "command=rescale alpha={} beta={} states={} output={}",
        config.rescale.alpha,
        config.rescale.beta,
        scaled.len(),
        config.paths.rescaled,
    );
    Ok(ExitStatus::Success)
}

struct SweepRow {
    sigma: f64,
    length: usize,
    systems: u64,
    estimates: usize,
    median_abs_error: Option<f64>,
    ok: usize,
    degenerate: usize,
    boundary_zero: usize,
    boundary_one: usize,
    out_of_range_low: usize,
    out_of_range_high: usize,
}

/// Noise-robustness sweep: per (sigma, length) cell, the median absolute
/// estimation error over freshly generated systems, plus status counts.
///
/// The same systems and noise-stream prefixes back every cell, so cells
/// differ only in the noise scale and the data the extra steps add. Cells
/// run in parallel; rows come out sorted by (sigma, length).
pub fn sweep(config: &RunConfig) -> Result<ExitStatus> {
    let g = config.generate.as_ref().ok_or_else(|| {
        degroot::Error::InvalidParameter {
            reason: "sweep needs a [generate] section or --gen-* flags".to_string(),
        }
    })?;
    if config.sweep.sigmas.is_empty() || config.sweep.lengths.is_empty() {
        return Err(degroot::Error::InvalidParameter {
            reason: "sweep needs at least one sigma and one length".to_string(),
        });
    }
    if config.sweep.seeds == 0 {
        return Err(degroot::Error::InvalidParameter {
            reason: "sweep needs at least one seed".to_string(),
        });
    }
    let longest = *config.sweep.lengths.iter().max().expect("nonempty");

    let mut systems = Vec::with_capacity(config.sweep.seeds as usize);
    for k in 0..config.sweep.seeds {
        let seed = derive_seed(config.seed, k);
        let spec = g.network_spec(derive_seed(seed, 0))?;
        let network = gen_network(&spec)?;
        let resistance = gen_resistance(
            g.n,
            g.resistance_low,
            g.resistance_high,
            derive_seed(seed, 1),
        )?;
        let opinions = gen_opinions(g.n, g.m, g.opinions.dist(), derive_seed(seed, 2))?;
        let sim = run_dynamics(
            &network,
            &resistance,
            &opinions,
            degroot::StopRule::Horizon(longest),
        )?;
        systems.push((network, resistance, sim.trajectory, derive_seed(seed, 3)));
    }

    let mut cells: Vec<(f64, usize)> = Vec::new();
    for &sigma in &config.sweep.sigmas {
        for &length in &config.sweep.lengths {
            cells.push((sigma, length));
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cells.dedup();

    let rows: Vec<Result<SweepRow>> = cells
        .par_iter()
        .map(|&(sigma, length)| sweep_cell(config, &systems, sigma, length))
        .collect();

    let mut out = String::from("# degroot sweep v1\n");
    out.push_str(
        "sigma,length,systems,estimates,median_abs_error,ok,degenerate,boundary_zero,boundary_one,out_of_range_low,out_of_range_high\n",
    );
    let cell_count = rows.len();
    for row in rows {
        let row = row?;
        let median = row
            .median_abs_error
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.sigma,
            row.length,
            row.systems,
            row.estimates,
            median,
            row.ok,
            row.degenerate,
            row.boundary_zero,
            row.boundary_one,
            row.out_of_range_low,
            row.out_of_range_high,
        ));
    }
    std::fs::write(&config.paths.sweep, &out).map_err(|e| degroot::Error::Io {
        path: config.paths.sweep.clone(),
        source: e,
    })?;

    println!(
        "command=sweep cells={} systems={} output={}",
        cell_count, config.sweep.seeds, config.paths.sweep,
    );
    Ok(ExitStatus::Success)
}

fn sweep_cell(
    config: &RunConfig,
    systems: &[(degroot::InfluenceMatrix, degroot::ResistanceProfile, Trajectory, u64)],
    sigma: f64,
    length: usize,
) -> Result<SweepRow> {
    let mut errors = Vec::new();
    let mut row = SweepRow {
        sigma,
        length,
        systems: systems.len() as u64,
        estimates: 0,
        median_abs_error: None,
        ok: 0,
        degenerate: 0,
        boundary_zero: 0,
        boundary_one: 0,
        out_of_range_low: 0,
        out_of_range_high: 0,
    };
    for (network, resistance, full, noise_seed) in systems {
        let states: Vec<OpinionState> = full.states()[..=length].to_vec();
        let trajectory = Trajectory::new(states)?;
        let noisy = perturb(&trajectory, sigma, *noise_seed)?;
        let report = estimate_static(network, &noisy, config.epsilon)?;
        for e in report.nodes().expect("static report") {
            match e.status {
                EstimateStatus::Ok => {
                    row.ok += 1;
                    errors.push((e.value.expect("ok carries a value") - resistance.get(e.node)).abs());
                }
                EstimateStatus::Degenerate => row.degenerate += 1,
                EstimateStatus::BoundaryZero => row.boundary_zero += 1,
                EstimateStatus::BoundaryOne => row.boundary_one += 1,
                EstimateStatus::OutOfRangeLow => row.out_of_range_low += 1,
                EstimateStatus::OutOfRangeHigh => row.out_of_range_high += 1,
            }
        }
    }
    row.estimates = errors.len();
    if !errors.is_empty() {
        errors.sort_by(|a, b| a.total_cmp(b));
        let mid = errors.len() / 2;
        row.median_abs_error = Some(if errors.len() % 2 == 1 {
            errors[mid]
        } else {
            0.5 * (errors[mid - 1] + errors[mid])
        });
    }
    Ok(row)
}
