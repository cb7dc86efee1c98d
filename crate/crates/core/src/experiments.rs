//! Orchestrated Monte Carlo experiments: moment sweeps, tail concentration,
//! uniform-cover deviation, Weyl diagnostics, and the cap-mass scaling sweep.
//!
//! Determinism contract: every experiment is a pure function of its spec and
//! master seed. Per-sample seeds come from `derive_seed(row_seed, index)`,
//! sample outputs are collected in index order, and all reductions are
//! fixed-tree pairwise sums, so results are bit-identical for any thread
//! count or chunking.

use serde::Serialize;

use crate::analytics::{
    expected_ball_mass, lipschitz_bound, sample_masses_direct, sample_masses_spectral,
    variance_ball_mass_exact, variance_ball_mass_large_n, worst_case_ball_mass, GramMatrix,
    NodeGram, DEFAULT_POWER_TOLERANCE, GRAM_DIMENSION_CAP,
};
use crate::ensemble::derive_seed;
use crate::error::{Error, Result};
use crate::manifold::{BallRegion, Manifold, Point};
use crate::spectral::{pointwise_weyl_remainder, weyl_remainder, SpectralWindow};
use crate::stats;

/// Window width as a function of the sweep frequency.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum WindowRule {
    Constant(f64),
    /// `W = coeff * lambda^exponent`.
    Power {
        coeff: f64,
        exponent: f64,
    },
    /// `W = lambda`: the cut-off frequency ensemble.
    Full,
}

impl WindowRule {
    pub fn width(&self, lambda: f64) -> f64 {
        match *self {
            WindowRule::Constant(w) => w,
            WindowRule::Power { coeff, exponent } => coeff * lambda.powf(exponent),
            WindowRule::Full => lambda,
        }
    }
}

/// Ball radius rule `r = coeff * lambda^{-alpha}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadiusRule {
    pub coeff: f64,
    pub alpha: f64,
}

impl RadiusRule {
    pub fn constant(r: f64) -> RadiusRule {
        RadiusRule {
            coeff: r,
            alpha: 0.0,
        }
    }

    pub fn radius(&self, lambda: f64) -> f64 {
        self.coeff * lambda.powf(-self.alpha)
    }
}

/// A scaling sweep: one ball-mass moment row per frequency.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub manifold: Manifold,
    pub lambdas: Vec<f64>,
    pub window_rule: WindowRule,
    pub radius_rule: RadiusRule,
    pub center: Point,
    pub samples: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub width: f64,
    pub radius: f64,
    pub dimension: usize,
    pub e_closed: f64,
    pub e_mc: f64,
    pub target: f64,
    pub var_exact: f64,
    pub var_mc: f64,
    pub var_large_n: f64,
    /// `var_exact / Vol(B)^2`, the equidistribution diagnostic.
    pub var_ratio: f64,
    /// Standard error of `e_mc`.
    pub e_mc_se: f64,
    /// Standard error of `var_mc`.
    pub var_mc_se: f64,
}

/// A sweep row either carries data or marks the empty window that stopped
/// the sweep.
#[derive(Debug, Clone, Serialize)]
pub enum SweepOutcome {
    Row(SweepRow),
    EmptyWindow { lambda: f64, width: f64 },
}

/// Radial quadrature order matched to the integrand: products of window
/// modes oscillate with total phase about `2 lambda r` across the ball, and
/// Gauss–Legendre needs roughly half that many nodes plus margin.
pub fn adaptive_ball_order(lambda: f64, radius: f64) -> usize {
    (((lambda * radius).ceil() as usize) + 16).clamp(24, 128)
}

/// Run the moment sweep. An empty window at some frequency appends an error
/// marker row and stops the sweep; any other failure aborts.
///
/// All rows share the per-sample seed stream (common random numbers), so
/// cross-row Monte Carlo comparisons are paired: the same draw index sees
/// the same underlying randomness at every frequency.
pub fn run_moment_sweep(spec: &SweepSpec) -> Result<Vec<SweepOutcome>> {
    let mut rows = Vec::with_capacity(spec.lambdas.len());
    for &lambda in &spec.lambdas {
        let width = spec.window_rule.width(lambda);
        let radius = spec.radius_rule.radius(lambda);
        let window = match SpectralWindow::build(spec.manifold, lambda, width) {
            Ok(w) => w,
            Err(Error::EmptyWindow { .. }) => {
                rows.push(SweepOutcome::EmptyWindow { lambda, width });
                return Ok(rows);
            }
            Err(e) => return Err(e),
        };
        let ball = BallRegion::new(spec.manifold, spec.center, radius)?;
        rows.push(SweepOutcome::Row(sweep_row(
            &window,
            &ball,
            spec.samples,
            spec.master_seed,
        )?));
    }
    Ok(rows)
}

fn sweep_row(
    window: &SpectralWindow,
    ball: &BallRegion,
    samples: usize,
    row_seed: u64,
) -> Result<SweepRow> {
    let n = window.dimension();
    let order = adaptive_ball_order(window.lambda, ball.radius);
    let target = ball.volume / window.manifold.volume();

    let (e_closed, var_exact, var_large_n, masses) = if n <= GRAM_DIMENSION_CAP {
        let g = GramMatrix::over_ball(window, ball, order)?;
        let masses = sample_masses_direct(&g, samples, |s| derive_seed(row_seed, s as u64));
        (
            expected_ball_mass(&g),
            variance_ball_mass_exact(&g)?,
            variance_ball_mass_large_n(&g),
            masses,
        )
    } else {
        let rule = window.manifold.ball_quadrature(ball, order)?;
        let ng = NodeGram::build(window, &rule);
        let masses = sample_masses_spectral(&ng, samples, |s| derive_seed(row_seed, s as u64));
        (
            ng.expected_ball_mass(),
            ng.variance_exact()?,
            ng.variance_large_n(),
            masses,
        )
    };

    Ok(SweepRow {
        lambda: window.lambda,
        width: window.width,
        radius: ball.radius,
        dimension: n,
        e_closed,
        e_mc: stats::mean(&masses),
        target,
        var_exact,
        var_mc: stats::sample_variance(&masses),
        var_large_n,
        var_ratio: var_exact / (ball.volume * ball.volume),
        e_mc_se: stats::mean_standard_error(&masses),
        var_mc_se: stats::variance_standard_error(&masses),
    })
}

/// Empirical concentration of the ball mass around its median, next to the
/// Levy bound `exp(-(d-1) t^2 / (2 L^2))` with `d = N - 1` and
/// `L = 2 lambda_max(M)`.
#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub thresholds: Vec<f64>,
    /// Empirical exceedance `P(|F - median| > t)` per threshold.
    pub empirical: Vec<f64>,
    pub levy_bound: Vec<f64>,
    pub n_samples: usize,
    pub median: f64,
    /// Closed-form expectation `trace(M)/N`.
    pub expectation: f64,
    /// The Lipschitz bound used in the exponent.
    pub lipschitz: f64,
    pub dimension: usize,
}

pub fn run_tail_experiment(
    window: &SpectralWindow,
    ball: &BallRegion,
    samples: usize,
    thresholds: &[f64],
    seed: u64,
) -> Result<TailReport> {
    if thresholds.is_empty() {
        return Err(Error::invalid("tail experiment needs a threshold grid"));
    }
    let g = tail_gram(window, ball, samples)?;
    tail_from_gram(&g, window.dimension(), samples, thresholds, seed)
}

/// Tail experiment with an automatic threshold grid: `points` values
/// spanning `[0, 6 sigma]`, `sigma` the exact closed-form deviation.
pub fn run_tail_experiment_auto(
    window: &SpectralWindow,
    ball: &BallRegion,
    samples: usize,
    points: usize,
    seed: u64,
) -> Result<TailReport> {
    if points < 2 {
        return Err(Error::invalid("tail grid needs at least 2 points"));
    }
    let g = tail_gram(window, ball, samples)?;
    let sigma = variance_ball_mass_exact(&g)?.max(0.0).sqrt();
    let grid: Vec<f64> = (0..points)
        .map(|i| 6.0 * sigma * i as f64 / (points - 1) as f64)
        .collect();
    tail_from_gram(&g, window.dimension(), samples, &grid, seed)
}

fn tail_gram(window: &SpectralWindow, ball: &BallRegion, samples: usize) -> Result<GramMatrix> {
    if samples < 1000 {
        return Err(Error::invalid(format!(
            "tail experiment needs at least 1000 samples, got {samples}"
        )));
    }
    let n = window.dimension();
    if n < 3 {
        return Err(Error::DegenerateWindow {
            dimension: n,
            required: 3,
        });
    }
    let order = adaptive_ball_order(window.lambda, ball.radius);
    GramMatrix::over_ball(window, ball, order)
}

fn tail_from_gram(
    g: &GramMatrix,
    dimension: usize,
    samples: usize,
    thresholds: &[f64],
    seed: u64,
) -> Result<TailReport> {
    let lipschitz = lipschitz_bound(g, DEFAULT_POWER_TOLERANCE)?;
    let masses = sample_masses_direct(g, samples, |s| derive_seed(seed, s as u64));
    let median = stats::median(&masses);
    let d = dimension as f64 - 1.0;

    let mut empirical = Vec::with_capacity(thresholds.len());
    let mut levy = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let count = masses.iter().filter(|&&f| (f - median).abs() > t).count();
        empirical.push(count as f64 / samples as f64);
        levy.push(
            (-(d - 1.0) * t * t / (2.0 * lipschitz * lipschitz))
                .exp()
                .min(1.0),
        );
    }

    Ok(TailReport {
        thresholds: thresholds.to_vec(),
        empirical,
        levy_bound: levy,
        n_samples: samples,
        median,
        expectation: expected_ball_mass(g),
        lipschitz,
        dimension,
    })
}

/// A finite set of ball centers covering the manifold, with the deviation
/// exponent for the uniform experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CoverSpec {
    pub manifold: Manifold,
    pub radius: f64,
    pub centers: Vec<Point>,
    pub delta: f64,
}

/// Grid of centers with spacing at most `r`: any point lies within
/// `r/sqrt(2)` of a center, so balls of radius `r` cover the manifold.
/// Torus: a square grid. Sphere: latitude bands with per-band azimuthal
/// spacing matched to the circumference.
pub fn build_cover(manifold: Manifold, radius: f64, delta: f64) -> Result<CoverSpec> {
    if !(radius > 0.0 && radius <= manifold.injectivity_radius()) {
        return Err(Error::invalid(format!(
            "cover radius {radius} outside (0, injectivity radius]"
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let pi = std::f64::consts::PI;
    let mut centers = Vec::new();
    match manifold {
        Manifold::Torus2 => {
            let n = (two_pi / radius).ceil() as usize;
            let h = two_pi / n as f64;
            for i in 0..n {
                for j in 0..n {
                    centers.push(Point::torus((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
                }
            }
        }
        Manifold::Sphere2 => {
            let bands = (pi / radius).ceil() as usize;
            let dtheta = pi / bands as f64;
            for i in 0..bands {
                let theta = (i as f64 + 0.5) * dtheta;
                let circumference = two_pi * theta.sin();
                let n_phi = (circumference / radius).ceil().max(1.0) as usize;
                let dphi = two_pi / n_phi as f64;
                for j in 0..n_phi {
                    centers.push(Point::sphere(theta, (j as f64 + 0.5) * dphi));
                }
            }
        }
    }
    Ok(CoverSpec {
        manifold,
        radius,
        centers,
        delta,
    })
}

/// Sample-based coverage check: every probe point must lie within the cover
/// radius of some center. Returns the number of uncovered probes.
pub fn coverage_failures(cover: &CoverSpec, probes: usize, seed: u64) -> usize {
    use rand::Rng;
    let mut rng = crate::ensemble::rng_for(seed);
    let mut failures = 0;
    for _ in 0..probes {
        let x = match cover.manifold {
            Manifold::Torus2 => Point::torus(
                rng.gen::<f64>() * 2.0 * std::f64::consts::PI,
                rng.gen::<f64>() * 2.0 * std::f64::consts::PI,
            ),
            Manifold::Sphere2 => {
                let c: f64 = rng.gen_range(-1.0..1.0);
                Point::sphere(c.acos(), rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
            }
        };
        let covered = cover
            .centers
            .iter()
            .any(|&c| cover.manifold.geodesic_distance(c, x) <= cover.radius);
        if !covered {
            failures += 1;
        }
    }
    failures
}

/// Which branch of the cover theorem a configuration sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoverRegime {
    /// `1/lambda <= r <= 1/W`
    SmallBall,
    /// `1/W < r <= Inj M`
    LargeBall,
    /// `r < 1/lambda`: below the Planck scale, outside the stated regimes.
    BelowPlanck,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformReport {
    pub lambda: f64,
    pub width: f64,
    pub radius: f64,
    pub delta: f64,
    /// Deviation threshold `r^2 * lambda^{-delta}`.
    pub threshold: f64,
    /// Equidistribution target `Vol(B)/Vol(M)`.
    pub target: f64,
    /// Fraction of samples deviating by at least the threshold on some ball.
    pub empirical_prob: f64,
    /// Per-ball deviation rates, in center order.
    pub per_ball_rates: Vec<f64>,
    pub n_samples: usize,
    pub n_balls: usize,
    pub regime: CoverRegime,
}

/// For each sample, evaluate the ball mass on every cover ball and flag the
/// sample if any mass deviates from the target by at least the threshold.
pub fn run_uniform_experiment(
    window: &SpectralWindow,
    cover: &CoverSpec,
    samples: usize,
    seed: u64,
) -> Result<UniformReport> {
    if cover.manifold != window.manifold {
        return Err(Error::invalid("cover and window manifolds differ"));
    }
    let n = window.dimension();
    if n > GRAM_DIMENSION_CAP {
        return Err(Error::GramCap {
            dimension: n,
            cap: GRAM_DIMENSION_CAP,
        });
    }
    let lambda = window.lambda;
    let threshold =
        cover.radius.powi(cover.manifold.dimension() as i32) * lambda.powf(-cover.delta);
    let ball0 = BallRegion::new(cover.manifold, cover.centers[0], cover.radius)?;
    let target = ball0.volume / cover.manifold.volume();
    let order = adaptive_ball_order(lambda, cover.radius);

    // one coefficient matrix for all balls, columns in sample order
    let mut a = nalgebra::DMatrix::zeros(n, samples);
    for s in 0..samples {
        let col = crate::ensemble::unit_sphere_vector(
            n,
            &mut crate::ensemble::rng_for(derive_seed(seed, s as u64)),
        );
        a.column_mut(s).copy_from_slice(&col);
    }

    let mut deviated = vec![false; samples];
    let mut per_ball_rates = Vec::with_capacity(cover.centers.len());
    for &center in &cover.centers {
        let ball = BallRegion::new(cover.manifold, center, cover.radius)?;
        let g = GramMatrix::over_ball(window, &ball, order)?;
        let p = &g.matrix * &a;
        let mut ball_count = 0usize;
        for (s, flag) in deviated.iter_mut().enumerate() {
            let mass = a.column(s).dot(&p.column(s));
            if (mass - target).abs() >= threshold {
                ball_count += 1;
                *flag = true;
            }
        }
        per_ball_rates.push(ball_count as f64 / samples as f64);
    }

    let dev_count = deviated.iter().filter(|&&d| d).count();
    let width = window.width;
    let regime = if cover.radius < 1.0 / lambda {
        CoverRegime::BelowPlanck
    } else if cover.radius <= 1.0 / width {
        CoverRegime::SmallBall
    } else {
        CoverRegime::LargeBall
    };

    Ok(UniformReport {
        lambda,
        width,
        radius: cover.radius,
        delta: cover.delta,
        threshold,
        target,
        empirical_prob: dev_count as f64 / samples as f64,
        per_ball_rates,
        n_samples: samples,
        n_balls: cover.centers.len(),
        regime,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylRow {
    pub lambda: f64,
    pub dimension: usize,
    /// Counting remainder `N(lambda) - Vol(M) lambda^2 / (4 pi)`.
    pub remainder: f64,
    /// Largest `|R(lambda, x)|` over the probe set.
    pub sup_pointwise: f64,
    /// `|R(lambda)| / lambda` (zero frequency reports the raw remainder).
    pub remainder_over_lambda: f64,
}

/// Deterministic probe set: 32 points including both sphere poles (where
/// the pointwise remainder growth is extremal for zonal harmonics).
pub fn weyl_probe_points(m: Manifold) -> Vec<Point> {
    let golden = 0.618_033_988_749_894_9_f64;
    let mut points = Vec::with_capacity(32);
    match m {
        Manifold::Torus2 => {
            for i in 0..32 {
                let t = i as f64;
                points.push(Point::torus(
                    2.0 * std::f64::consts::PI * ((t * golden) % 1.0),
                    2.0 * std::f64::consts::PI * ((t * golden * golden) % 1.0),
                ));
            }
        }
        Manifold::Sphere2 => {
            points.push(Point::north_pole());
            points.push(Point::sphere(std::f64::consts::PI, 0.0));
            for i in 0..30 {
                let c = -1.0 + 2.0 * (i as f64 + 0.5) / 30.0;
                let phi = 2.0 * std::f64::consts::PI * ((i as f64 * golden) % 1.0);
                points.push(Point::sphere(c.acos(), phi));
            }
        }
    }
    points
}

pub fn run_weyl_diagnostics(m: Manifold, lambda_grid: &[f64]) -> Result<Vec<WeylRow>> {
    let probes = weyl_probe_points(m);
    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let dimension = m.enumerate_modes(0.0, lambda)?.len();
        let remainder = weyl_remainder(m, lambda)?;
        let mut sup = 0.0f64;
        for &x in &probes {
            sup = sup.max(pointwise_weyl_remainder(m, lambda, x)?.abs());
        }
        let over = if lambda > 0.0 {
            remainder.abs() / lambda
        } else {
            remainder
        };
        rows.push(WeylRow {
            lambda,
            dimension,
            remainder,
            sup_pointwise: sup,
            remainder_over_lambda: over,
        });
    }
    Ok(rows)
}

/// One row of the worst-case cap-mass scaling sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SoggeRow {
    pub radius: f64,
    pub lambda_max: f64,
    /// `lambda_max / r`: constant across radii when the `c r` law is sharp.
    pub ratio: f64,
    pub dimension: usize,
}

/// Top Gram eigenvalue across cap radii at a fixed center.
pub fn run_sogge_sweep(
    window: &SpectralWindow,
    center: Point,
    radii: &[f64],
    tol: f64,
) -> Result<Vec<SoggeRow>> {
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let ball = BallRegion::new(window.manifold, center, r)?;
        let order = adaptive_ball_order(window.lambda, r);
        let g = GramMatrix::over_ball(window, &ball, order)?;
        let top = worst_case_ball_mass(&g, tol)?;
        rows.push(SoggeRow {
            radius: r,
            lambda_max: top,
            ratio: top / r,
            dimension: g.dimension(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sweep_rows_are_internally_consistent() {
        let spec = SweepSpec {
            manifold: Manifold::Torus2,
            lambdas: vec![8.0, 12.0],
            window_rule: WindowRule::Constant(3.0),
            radius_rule: RadiusRule::constant(0.4),
            center: Point::torus(0.0, 0.0),
            samples: 4000,
            master_seed: 99,
        };
        let rows = run_moment_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        for outcome in &rows {
            let SweepOutcome::Row(row) = outcome else {
                panic!("unexpected empty window");
            };
            assert!((row.e_mc - row.e_closed).abs() < 3.0 * row.e_mc_se);
            assert!((row.var_mc - row.var_exact).abs() < 3.0 * row.var_mc_se);
            assert!(row.var_exact >= 0.0);
            assert!(row.target > 0.0 && row.target < 1.0);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = SweepSpec {
            manifold: Manifold::Sphere2,
            lambdas: vec![9.0],
            window_rule: WindowRule::Constant(2.0),
            radius_rule: RadiusRule {
                coeff: 1.0,
                alpha: 0.5,
            },
            center: Point::north_pole(),
            samples: 500,
            master_seed: 7,
        };
        let a = run_moment_sweep(&spec).unwrap();
        let b = run_moment_sweep(&spec).unwrap();
        let (SweepOutcome::Row(ra), SweepOutcome::Row(rb)) = (&a[0], &b[0]) else {
            panic!();
        };
        assert_eq!(ra.e_mc.to_bits(), rb.e_mc.to_bits());
        assert_eq!(ra.var_mc.to_bits(), rb.var_mc.to_bits());
    }

    #[test]
    fn sweep_stops_at_an_empty_window() {
        // sphere frequency gaps exceed 1 between low degrees:
        // sqrt(30) = 5.4772 and sqrt(42) = 6.4807, so [5.478, 6.478] is empty.
        let spec = SweepSpec {
            manifold: Manifold::Sphere2,
            lambdas: vec![4.0, 6.478, 9.0],
            window_rule: WindowRule::Constant(1.0),
            radius_rule: RadiusRule::constant(0.5),
            center: Point::north_pole(),
            samples: 100,
            master_seed: 1,
        };
        let rows = run_moment_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2, "sweep must stop at the marker");
        assert!(matches!(rows[0], SweepOutcome::Row(_)));
        assert!(matches!(rows[1], SweepOutcome::EmptyWindow { .. }));
    }

    #[test]
    fn tail_report_bounds_and_median() {
        let m = Manifold::Torus2;
        let w = SpectralWindow::build(m, 12.0, 3.0).unwrap();
        let ball = BallRegion::new(m, Point::torus(2.0, 2.0), 0.4).unwrap();
        let var = {
            let g = GramMatrix::over_ball(&w, &ball, 32).unwrap();
            variance_ball_mass_exact(&g).unwrap()
        };
        let sigma = var.sqrt();
        let grid: Vec<f64> = (0..12).map(|i| i as f64 * sigma / 2.0).collect();
        let report = run_tail_experiment(&w, &ball, 2000, &grid, 13).unwrap();
        // t = 0: bound is 1 and dominates
        assert_eq!(report.levy_bound[0], 1.0);
        assert!(report.empirical[0] <= 1.0);
        // monotone nonincreasing empirical tail
        for pair in report.empirical.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        // every grid point dominated by the bound (generous desk-scale slack)
        for (e, b) in report.empirical.iter().zip(&report.levy_bound) {
            let se = (e.max(1e-4) * (1.0 - e.min(1.0)) / 2000.0).sqrt();
            assert!(*e <= 1.05 * b + 3.0 * se, "{e} vs bound {b}");
        }
        // median close to the closed-form expectation at this scale
        assert!((report.median - report.expectation).abs() <= 0.1 * ball.radius.powi(2));

        // sample floor enforced
        assert!(run_tail_experiment(&w, &ball, 10, &grid, 13).is_err());
    }

    #[test]
    fn covers_have_no_uncovered_probes_and_sane_counts() {
        for m in [Manifold::Torus2, Manifold::Sphere2] {
            for r in [0.1, 0.2, 0.4] {
                let cover = build_cover(m, r, 0.1).unwrap();
                assert_eq!(coverage_failures(&cover, 10_000, 5), 0, "{m:?} r={r}");
                let expected = m.volume() / (PI * r * r);
                let count = cover.centers.len() as f64;
                assert!(
                    count <= 4.0 * expected && count >= expected / 4.0,
                    "{m:?} r={r}: {count} centers vs Vol/(pi r^2) = {expected}"
                );
            }
        }
        // whole-torus cover: 2x2 grid suffices
        let cover = build_cover(Manifold::Torus2, PI, 0.0).unwrap();
        assert!(cover.centers.len() <= 8);
        assert_eq!(coverage_failures(&cover, 10_000, 6), 0);
    }

    #[test]
    fn unattainable_threshold_gives_zero_probability() {
        let m = Manifold::Torus2;
        let w = SpectralWindow::build(m, 6.0, 2.0).unwrap();
        // threshold r^2 lambda^{-delta} = 4 > 1 >= F, target < 1
        let cover = build_cover(m, 2.0, 0.0).unwrap();
        let report = run_uniform_experiment(&w, &cover, 200, 3).unwrap();
        assert!(report.threshold > 1.0);
        assert_eq!(report.empirical_prob, 0.0);
        assert!(report.per_ball_rates.iter().all(|&r| r == 0.0));
        assert_eq!(report.regime, CoverRegime::LargeBall);
    }

    #[test]
    fn weyl_rows_contain_frozen_values() {
        let rows = run_weyl_diagnostics(Manifold::Torus2, &[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(rows[0].dimension, 1);
        assert!((rows[0].remainder - 1.0).abs() < 1e-12);
        assert_eq!(rows[1].dimension, 81);
        assert!((rows[1].remainder - (81.0 - 25.0 * PI)).abs() < 1e-9);
        assert_eq!(rows[2].dimension, 317);
        assert!((rows[2].remainder - (317.0 - 100.0 * PI)).abs() < 1e-9);

        // sphere: R = L + 1 exactly, and the pointwise sup matches
        // ((L+1)^2 - lambda^2)/(4 pi) at every probe (constant diagonal)
        let l = 9u32;
        let lam = (l as f64 * (l as f64 + 1.0)).sqrt();
        let rows = run_weyl_diagnostics(Manifold::Sphere2, &[lam]).unwrap();
        assert!((rows[0].remainder - (l as f64 + 1.0)).abs() < 1e-9);
        let want = ((l as f64 + 1.0).powi(2) - lam * lam) / (4.0 * PI);
        assert!((rows[0].sup_pointwise - want.abs()).abs() < 1e-9);
    }

    #[test]
    fn sogge_sweep_reports_growing_mass() {
        let l = 12u32;
        let lam = (l as f64 * (l as f64 + 1.0)).sqrt();
        let w = SpectralWindow::build(Manifold::Sphere2, lam, 1.0).unwrap();
        let rows = run_sogge_sweep(&w, Point::north_pole(), &[0.2, 0.4, 0.8], 1e-10).unwrap();
        assert!(rows[0].lambda_max < rows[1].lambda_max);
        assert!(rows[1].lambda_max < rows[2].lambda_max);
        for row in &rows {
            assert!(row.lambda_max > 0.0 && row.lambda_max <= 1.0 + 1e-9);
        }
    }
}
