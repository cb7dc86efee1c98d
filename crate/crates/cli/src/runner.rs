//! Dispatch a validated config to the experiment engines and collect the
//! output artifacts (CSV + JSON rows + optional SVG), all in memory so
//! nothing partial ever lands on disk.

use serde_json::json;

use randwave_core::error::Error as CoreError;
use randwave_core::experiments::{
    build_cover, coverage_failures, run_moment_sweep, run_sogge_sweep, run_tail_experiment_auto,
    run_uniform_experiment, run_weyl_diagnostics, SweepOutcome, SweepSpec,
};
use randwave_core::manifold::BallRegion;
use randwave_core::spectral::{kernel_profile, SpectralWindow};

use crate::config::{ExperimentKind, RunConfig};
use crate::report::{
    profile_csv, sogge_csv, svg_plot, sweep_csv, tail_csv, uniform_csv_with_centers, weyl_csv,
    PlotSpec,
};

pub struct RunOutput {
    pub csv: String,
    pub rows: serde_json::Value,
    pub svg: Option<String>,
}

pub fn execute(config: &RunConfig) -> Result<RunOutput, CoreError> {
    match config.experiment {
        ExperimentKind::Weyl => weyl(config),
        ExperimentKind::Sweep | ExperimentKind::Expectation | ExperimentKind::Variance => {
            sweep(config)
        }
        ExperimentKind::Tail => tail(config),
        ExperimentKind::Uniform => uniform(config),
        ExperimentKind::KernelProfile => profile(config),
        ExperimentKind::Sogge => sogge(config),
    }
}

fn weyl(config: &RunConfig) -> Result<RunOutput, CoreError> {
    let rows = run_weyl_diagnostics(config.manifold(), &config.lambda_grid)?;
    let svg = config.plot.then(|| {
        svg_plot(&PlotSpec {
            title: "Weyl remainder",
            x_label: "lambda",
            y_label: "|R(lambda)| / lambda",
            log_x: true,
            log_y: true,
            series: vec![(
                "|R|/lambda",
                rows.iter()
                    .filter(|r| r.lambda > 0.0)
                    .map(|r| (r.lambda, r.remainder_over_lambda.max(f64::MIN_POSITIVE)))
                    .collect(),
            )],
        })
    });
    Ok(RunOutput {
        csv: weyl_csv(&rows),
        rows: serde_json::to_value(&rows).expect("serializable rows"),
        svg,
    })
}

fn sweep(config: &RunConfig) -> Result<RunOutput, CoreError> {
    let spec = SweepSpec {
        manifold: config.manifold(),
        lambdas: config.lambda_grid.clone(),
        window_rule: config.window_rule(),
        radius_rule: config
            .radius_rule()
            .map_err(|e| CoreError::invalid(e.to_string()))?,
        center: config.center_point(),
        samples: config.samples,
        master_seed: config.seed,
    };
    let rows = run_moment_sweep(&spec)?;
    let svg = config.plot.then(|| {
        let data: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| match r {
                SweepOutcome::Row(row) => Some((row.lambda, row.var_ratio.max(f64::MIN_POSITIVE))),
                SweepOutcome::EmptyWindow { .. } => None,
            })
            .collect();
        let dev: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| match r {
                SweepOutcome::Row(row) => Some((
                    row.lambda,
                    (row.e_mc / row.target - 1.0).abs().max(f64::MIN_POSITIVE),
                )),
                SweepOutcome::EmptyWindow { .. } => None,
            })
            .collect();
        svg_plot(&PlotSpec {
            title: "ball-mass moments vs frequency",
            x_label: "lambda",
            y_label: "ratio",
            log_x: true,
            log_y: true,
            series: vec![("var_exact / Vol(B)^2", data), ("|E_mc/target - 1|", dev)],
        })
    });
    Ok(RunOutput {
        csv: sweep_csv(&rows),
        rows: serde_json::to_value(&rows).expect("serializable rows"),
        svg,
    })
}

fn tail(config: &RunConfig) -> Result<RunOutput, CoreError> {
    let m = config.manifold();
    let lambda = config.lambda_grid[0];
    let width = config.window_rule().width(lambda);
    let window = SpectralWindow::build(m, lambda, width)?;
    let radius = config
        .radius
        .ok_or_else(|| CoreError::invalid("tail experiment needs a constant radius 'r'"))?;
    let ball = BallRegion::new(m, config.center_point(), radius)?;
    let report = match config.t_max {
        None => {
            run_tail_experiment_auto(&window, &ball, config.samples, config.t_points, config.seed)?
        }
        Some(t_max) => {
            let grid: Vec<f64> = (0..config.t_points)
                .map(|i| t_max * i as f64 / (config.t_points - 1).max(1) as f64)
                .collect();
            randwave_core::experiments::run_tail_experiment(
                &window,
                &ball,
                config.samples,
                &grid,
                config.seed,
            )?
        }
    };
    let svg = config.plot.then(|| {
        svg_plot(&PlotSpec {
            title: "ball-mass concentration around the median",
            x_label: "t",
            y_label: "P(|F - median| > t)",
            log_x: false,
            log_y: true,
            series: vec![
                (
                    "empirical",
                    report
                        .thresholds
                        .iter()
                        .zip(&report.empirical)
                        .filter(|(_, e)| **e > 0.0)
                        .map(|(t, e)| (*t, *e))
                        .collect(),
                ),
                (
                    "Levy bound",
                    report
                        .thresholds
                        .iter()
                        .zip(&report.levy_bound)
                        .map(|(t, b)| (*t, *b))
                        .collect(),
                ),
            ],
        })
    });
    Ok(RunOutput {
        csv: tail_csv(&report),
        rows: serde_json::to_value(&report).expect("serializable rows"),
        svg,
    })
}

fn uniform(config: &RunConfig) -> Result<RunOutput, CoreError> {
    let m = config.manifold();
    let delta = config
        .delta
        .ok_or_else(|| CoreError::invalid("uniform experiment needs 'delta'"))?;
    let radius_rule = config
        .radius_rule()
        .map_err(|e| CoreError::invalid(e.to_string()))?;
    let mut reports = Vec::new();
    let mut json_rows = Vec::new();
    for &lambda in &config.lambda_grid {
        let width = config.window_rule().width(lambda);
        let window = SpectralWindow::build(m, lambda, width)?;
        let radius = radius_rule.radius(lambda);
        let cover = build_cover(m, radius, delta)?;
        let uncovered = coverage_failures(&cover, 10_000, config.seed ^ 0xC0FE);
        if uncovered > 0 {
            return Err(CoreError::NumericFailure(format!(
                "cover check failed: {uncovered} of 10000 probes uncovered"
            )));
        }
        let report = run_uniform_experiment(&window, &cover, config.samples, config.seed)?;
        json_rows.push(json!({
            "report": serde_json::to_value(&report).expect("serializable report"),
            "coverage_probes": 10_000,
            "uncovered": uncovered,
        }));
        reports.push((report, cover.centers));
    }
    let svg = config.plot.then(|| {
        svg_plot(&PlotSpec {
            title: "uniform-cover deviation probability",
            x_label: "lambda",
            y_label: "P(deviation on some ball)",
            log_x: true,
            log_y: false,
            series: vec![(
                "empirical",
                reports
                    .iter()
                    .map(|(r, _)| (r.lambda, r.empirical_prob))
                    .collect(),
            )],
        })
    });
    Ok(RunOutput {
        csv: uniform_csv_with_centers(&reports),
        rows: serde_json::Value::Array(json_rows),
        svg,
    })
}

fn profile(config: &RunConfig) -> Result<RunOutput, CoreError> {
    let m = config.manifold();
    let lambda = config.lambda_grid[0];
    let width = config.window_rule().width(lambda);
    let window = SpectralWindow::build(m, lambda, width)?;
    let p = kernel_profile(
        &window,
        config.center_point(),
        config.direction,
        config.max_separation,
        config.profile_points,
    )?;
    let svg = config.plot.then(|| {
        svg_plot(&PlotSpec {
            title: "projector kernel profile",
            x_label: "separation",
            y_label: "|E(x,y)|",
            log_x: true,
            log_y: true,
            series: vec![
                (
                    "|kernel|",
                    p.separations
                        .iter()
                        .zip(&p.values)
                        .filter(|(s, v)| **s > 0.0 && v.abs() > 0.0)
                        .map(|(s, v)| (*s, v.abs()))
                        .collect(),
                ),
                (
                    "envelope",
                    p.separations
                        .iter()
                        .zip(&p.bound_values)
                        .filter(|(s, _)| **s > 0.0)
                        .map(|(s, b)| (*s, *b))
                        .collect(),
                ),
            ],
        })
    });
    Ok(RunOutput {
        csv: profile_csv(&p),
        rows: serde_json::to_value(&p).expect("serializable rows"),
        svg,
    })
}

fn sogge(config: &RunConfig) -> Result<RunOutput, CoreError> {
    let m = config.manifold();
    let lambda = config.lambda_grid[0];
    let width = config.window_rule().width(lambda);
    let window = SpectralWindow::build(m, lambda, width)?;
    let rows = run_sogge_sweep(
        &window,
        config.center_point(),
        &config.radius_grid,
        randwave_core::analytics::DEFAULT_POWER_TOLERANCE,
    )?;
    let svg = config.plot.then(|| {
        svg_plot(&PlotSpec {
            title: "worst-case ball mass vs radius",
            x_label: "r",
            y_label: "lambda_max(M) / r",
            log_x: true,
            log_y: false,
            series: vec![(
                "lambda_max / r",
                rows.iter().map(|r| (r.radius, r.ratio)).collect(),
            )],
        })
    });
    Ok(RunOutput {
        csv: sogge_csv(&rows),
        rows: serde_json::to_value(&rows).expect("serializable rows"),
        svg,
    })
}
