//! Random waves: coefficient sampling, evaluation, and ball masses.
//!
//! The canonical ensemble draws the coefficient vector uniformly from the
//! unit sphere `S^{N-1}` of the window's coefficient space. The Gaussian
//! variant draws i.i.d. normals with per-coordinate variance `1/N`, so the
//! expected squared L2 norm is one; normalizing it recovers the sphere law.
//!
//! All sampling is a pure function of a 64-bit seed. Batches derive one seed
//! per sample index through a SplitMix64 hash, so samples can be computed in
//! any order (or in parallel) and reproduced in isolation.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Result;
use crate::manifold::{BallRegion, Point};
use crate::quadrature::pairwise_sum;
use crate::spectral::SpectralWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    UnitSphere,
    GaussianRaw,
}

/// A sampled coefficient vector on a spectral window.
#[derive(Debug, Clone)]
pub struct RandomWave<'a> {
    pub window: &'a SpectralWindow,
    pub coefficients: Vec<f64>,
    pub seed: u64,
    pub normalization: Normalization,
}

/// Per-index seed derivation: SplitMix64 of `master + index * golden`.
/// Bijective in `index` for a fixed master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream RNG used everywhere sampling happens.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// I.i.d. standard normals, normalized to the unit sphere `S^{n-1}`.
pub fn unit_sphere_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(n >= 1);
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        if norm_sq > 0.0 {
            let inv = norm_sq.sqrt().recip();
            return v.into_iter().map(|x| x * inv).collect();
        }
    }
}

/// I.i.d. normals with per-coordinate variance `1/n`.
pub fn gaussian_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(n >= 1);
    let scale = (n as f64).sqrt().recip();
    (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            g * scale
        })
        .collect()
}

/// Uniform draw from the unit sphere of the window's coefficient space.
pub fn sample_unit_sphere(window: &SpectralWindow, seed: u64) -> RandomWave<'_> {
    let mut rng = rng_for(seed);
    RandomWave {
        window,
        coefficients: unit_sphere_vector(window.dimension(), &mut rng),
        seed,
        normalization: Normalization::UnitSphere,
    }
}

/// Gaussian draw with `E(a_i^2) = 1/N`, so `E(sum a_i^2) = 1`.
pub fn sample_gaussian(window: &SpectralWindow, seed: u64) -> RandomWave<'_> {
    let mut rng = rng_for(seed);
    RandomWave {
        window,
        coefficients: gaussian_vector(window.dimension(), &mut rng),
        seed,
        normalization: Normalization::GaussianRaw,
    }
}

impl RandomWave<'_> {
    /// `u(x) = sum a_j e_j(x)`.
    pub fn eval(&self, x: Point) -> f64 {
        let basis = self.window.eval_modes_at(x);
        self.coefficients
            .iter()
            .zip(&basis)
            .map(|(a, e)| a * e)
            .sum()
    }

    /// Squared L2 norm over the whole manifold (= `|a|^2` by orthonormality).
    pub fn l2_norm_squared(&self) -> f64 {
        self.coefficients.iter().map(|a| a * a).sum()
    }
}

/// `F(a) = int_B |u|^2` by ball quadrature at the given radial order.
pub fn ball_mass_with_order(u: &RandomWave<'_>, ball: &BallRegion, order: usize) -> Result<f64> {
    let w = u.window;
    let rule = w.manifold.ball_quadrature(ball, order)?;
    let mut basis = vec![0.0; w.dimension()];
    let vals: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &wt)| {
            w.manifold.eval_modes(&w.modes, x, &mut basis);
            let ux: f64 = u.coefficients.iter().zip(&basis).map(|(a, e)| a * e).sum();
            wt * ux * ux
        })
        .collect();
    Ok(pairwise_sum(&vals))
}

/// `ball_mass_with_order` at the default radial order.
pub fn ball_mass(u: &RandomWave<'_>, ball: &BallRegion) -> Result<f64> {
    ball_mass_with_order(u, ball, crate::manifold::DEFAULT_BALL_ORDER)
}

/// The amplitude tail law `mu_d(|u| > t) = (1 - t^2/s^2)^{(d-1)/2}` for
/// `t < s_norm`, else 0, with `d = N - 1` for `N` coefficients and `s_norm`
/// the length of the evaluation vector `(e_1(x), ..., e_N(x))`.
///
/// Caution: this closed form is exact for the squared two-coordinate
/// projection (equivalently, the modulus of a complex combination). For the
/// real ensemble used here, the distribution of `|u(x)|` is the
/// single-coordinate marginal [`coordinate_marginal_survival`]; the two laws
/// differ substantially (the real marginal has positive density at zero).
pub fn amplitude_tail(s_norm: f64, d: usize, t: f64) -> f64 {
    assert!(d >= 2, "sphere dimension must be at least 2");
    assert!(s_norm > 0.0, "evaluation vector must be nonzero");
    assert!(t >= 0.0);
    if t >= s_norm {
        return 0.0;
    }
    (1.0 - (t / s_norm).powi(2)).powf((d as f64 - 1.0) / 2.0)
}

/// Exact survival of `|u(x)| = |<a, s>|` for `a` uniform on the real sphere
/// `S^{n-1}`: the single-coordinate marginal
/// `P(|a_1| > t/s) = int_{t/s}^1 (1-y^2)^{(n-3)/2} dy / int_0^1 (...) dy`,
/// evaluated by Gauss–Legendre quadrature after `y = sin(phi)`.
pub fn coordinate_marginal_survival(s_norm: f64, n: usize, t: f64) -> f64 {
    assert!(n >= 2, "need at least two coefficients");
    assert!(s_norm > 0.0, "evaluation vector must be nonzero");
    assert!(t >= 0.0);
    let tau = t / s_norm;
    if tau >= 1.0 {
        return 0.0;
    }
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (nodes, weights) = RULE.get_or_init(|| crate::quadrature::gauss_legendre(256));
    let power = n as i32 - 2;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let segment = |a: f64, b: f64| -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| {
                let phi = mid + half * x;
                w * half * phi.cos().powi(power)
            })
            .sum()
    };
    segment(tau.asin(), half_pi) / segment(0.0, half_pi)
}

/// A reproducible batch: sample `index` always sees seed
/// `derive_seed(master_seed, index)`, independent of evaluation order.
#[derive(Debug, Clone, Copy)]
pub struct SampleBatch {
    pub master_seed: u64,
    pub count: usize,
}

impl SampleBatch {
    pub fn new(master_seed: u64, count: usize) -> SampleBatch {
        SampleBatch { master_seed, count }
    }

    pub fn seed_for(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }

    /// Evaluate a per-sample functional for every index, in parallel, with
    /// the output in index order (hence bit-identical for any thread count).
    pub fn collect<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(u64) -> f64 + Sync,
    {
        (0..self.count)
            .into_par_iter()
            .map(|i| f(self.seed_for(i)))
            .collect()
    }

    pub fn stats<F>(&self, f: F) -> BatchStats
    where
        F: Fn(u64) -> f64 + Sync,
    {
        BatchStats::from_values(&self.collect(f))
    }
}

/// Accumulated statistics of one recorded functional over a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStats {
    pub count: usize,
    pub mean: f64,
    /// Raw second moment `E[x^2]` (pairwise sum).
    pub second_moment: f64,
    pub min: f64,
    pub max: f64,
}

impl BatchStats {
    pub fn from_values(values: &[f64]) -> BatchStats {
        assert!(!values.is_empty());
        let n = values.len() as f64;
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        BatchStats {
            count: values.len(),
            mean: pairwise_sum(values) / n,
            second_moment: pairwise_sum(&sq) / n,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use crate::stats;

    #[test]
    fn seed_derivation_is_injective_over_a_range() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..100_000u64 {
            assert!(seen.insert(derive_seed(42, i)));
        }
    }

    #[test]
    fn one_dimensional_sphere_sample_is_a_sign() {
        let w = SpectralWindow::build_unchecked(Manifold::Torus2, 0.0, 0.0).unwrap();
        assert_eq!(w.dimension(), 1);
        for seed in 0..50 {
            let u = sample_unit_sphere(&w, seed);
            assert!((u.coefficients[0].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_sphere_second_and_fourth_moments() {
        // E(a_1^2) = 1/N and E(a_1^2 a_2^2) = 1/(N(N+2)), N = 50
        let n = 50;
        let samples = 20_000;
        let mut rng = rng_for(7);
        let mut sq = Vec::with_capacity(samples);
        let mut cross = Vec::with_capacity(samples);
        for _ in 0..samples {
            let v = unit_sphere_vector(n, &mut rng);
            sq.push(v[0] * v[0]);
            cross.push(v[0] * v[0] * v[1] * v[1]);
        }
        let want_sq = 1.0 / n as f64;
        let got_sq = stats::mean(&sq);
        assert!((got_sq - want_sq).abs() < 3.0 * stats::mean_standard_error(&sq));

        let want_cross = 1.0 / (n as f64 * (n as f64 + 2.0));
        let got_cross = stats::mean(&cross);
        assert!(
            (got_cross - want_cross).abs() < 3.0 * stats::mean_standard_error(&cross),
            "{got_cross} vs {want_cross}"
        );
    }

    #[test]
    fn gaussian_norm_has_unit_expectation() {
        let n = 100;
        let samples = 20_000;
        let mut rng = rng_for(11);
        let norms: Vec<f64> = (0..samples)
            .map(|_| {
                let v = gaussian_vector(n, &mut rng);
                v.iter().map(|x| x * x).sum::<f64>()
            })
            .collect();
        let got = stats::mean(&norms);
        assert!(
            (got - 1.0).abs() < 3.0 * stats::mean_standard_error(&norms),
            "{got}"
        );

        // N = 1: a_1 ~ N(0,1)
        let mut rng = rng_for(13);
        let sq: Vec<f64> = (0..20_000)
            .map(|_| {
                let v = gaussian_vector(1, &mut rng);
                v[0] * v[0]
            })
            .collect();
        let got = stats::mean(&sq);
        assert!((got - 1.0).abs() < 3.0 * stats::mean_standard_error(&sq));
    }

    #[test]
    fn normalized_gaussian_matches_sphere_law() {
        // two-sample KS on the first coordinate, p > 0.01
        let n = 40;
        let mut rng = rng_for(17);
        let a: Vec<f64> = (0..10_000)
            .map(|_| {
                let v = gaussian_vector(n, &mut rng);
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v[0] / norm
            })
            .collect();
        let b: Vec<f64> = (0..10_000)
            .map(|_| unit_sphere_vector(n, &mut rng)[0])
            .collect();
        let d = stats::ks_two_sample(&a, &b);
        let p = stats::ks_two_sample_p_value(d, a.len(), b.len());
        assert!(p > 0.01, "KS d = {d}, p = {p}");
    }

    #[test]
    fn unit_sphere_samples_have_unit_norm() {
        let w = SpectralWindow::build(Manifold::Sphere2, 9.0, 4.0).unwrap();
        for seed in 0..200 {
            let u = sample_unit_sphere(&w, seed);
            assert!((u.l2_norm_squared() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let w = SpectralWindow::build(Manifold::Torus2, 8.0, 3.0).unwrap();
        let a = sample_unit_sphere(&w, 99);
        let b = sample_unit_sphere(&w, 99);
        assert_eq!(a.coefficients, b.coefficients);
        let g1 = sample_gaussian(&w, 99);
        let g2 = sample_gaussian(&w, 99);
        assert_eq!(g1.coefficients, g2.coefficients);
        let c = sample_unit_sphere(&w, 100);
        assert_ne!(a.coefficients, c.coefficients);
    }

    #[test]
    fn wave_evaluation_is_linear_and_matches_modes() {
        let m = Manifold::Sphere2;
        let w = SpectralWindow::build(m, 6.0, 3.0).unwrap();
        let n = w.dimension();
        let x = Point::sphere(1.0, 2.0);

        // basis vector reproduces a single mode
        let mut coeffs = vec![0.0; n];
        coeffs[3] = 1.0;
        let u = RandomWave {
            window: &w,
            coefficients: coeffs,
            seed: 0,
            normalization: Normalization::UnitSphere,
        };
        assert!((u.eval(x) - m.eval_mode(&w.modes[3], x)).abs() < 1e-14);

        // linearity
        let a = sample_unit_sphere(&w, 1);
        let b = sample_unit_sphere(&w, 2);
        let (alpha, beta) = (0.3, -1.7);
        let combo = RandomWave {
            window: &w,
            coefficients: a
                .coefficients
                .iter()
                .zip(&b.coefficients)
                .map(|(p, q)| alpha * p + beta * q)
                .collect(),
            seed: 0,
            normalization: Normalization::UnitSphere,
        };
        let want = alpha * a.eval(x) + beta * b.eval(x);
        assert!((combo.eval(x) - want).abs() < 1e-12);
    }

    #[test]
    fn constant_window_wave_is_flat() {
        let w = SpectralWindow::build_unchecked(Manifold::Torus2, 0.0, 0.0).unwrap();
        let u = sample_unit_sphere(&w, 5);
        let want = u.coefficients[0] / (2.0 * std::f64::consts::PI);
        for x in [Point::torus(0.0, 0.0), Point::torus(3.0, 1.0)] {
            assert!((u.eval(x) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn ball_mass_bounds_and_whole_sphere() {
        let m = Manifold::Sphere2;
        let w = SpectralWindow::build(m, 7.0, 3.0).unwrap();
        let whole = BallRegion::new(m, Point::north_pole(), std::f64::consts::PI).unwrap();
        let cap = BallRegion::new(m, Point::sphere(0.8, 0.3), 0.5).unwrap();
        for seed in 0..5 {
            let u = sample_unit_sphere(&w, seed);
            let total = ball_mass(&u, &whole).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "{total}");
            let part = ball_mass(&u, &cap).unwrap();
            assert!(part >= 0.0 && part <= u.l2_norm_squared() + 1e-12);
        }
    }

    #[test]
    fn amplitude_tail_closed_form() {
        assert_eq!(amplitude_tail(2.0, 10, 0.0), 1.0);
        assert_eq!(amplitude_tail(2.0, 10, 2.0), 0.0);
        assert_eq!(amplitude_tail(2.0, 10, 5.0), 0.0);
        // d = 3, t = s/2: (1 - 1/4)^1 = 0.75
        assert!((amplitude_tail(2.0, 3, 1.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pointwise_value_distribution_matches_the_marginal_law() {
        let m = Manifold::Torus2;
        let w = SpectralWindow::build(m, 12.0, 1.0).unwrap();
        let n = w.dimension();
        let x = Point::torus(0.9, 4.1);
        let s_norm = crate::spectral::projector_kernel(&w, x, x).sqrt();
        let batch = SampleBatch::new(2024, 20_000);
        let values = batch.collect(|seed| sample_unit_sphere(&w, seed).eval(x).abs());

        // the real single-coordinate marginal is the exact law
        let ks = stats::ks_distance_to_cdf(&values, |t| {
            if t < 0.0 {
                0.0
            } else {
                1.0 - coordinate_marginal_survival(s_norm, n, t)
            }
        });
        assert!(ks < 0.015, "KS distance vs marginal law {ks}");

        // the power-law tail is the law of a two-coordinate projection and
        // visibly disagrees with the real scalar amplitude
        let ks_power = stats::ks_distance_to_cdf(&values, |t| {
            if t < 0.0 {
                0.0
            } else {
                1.0 - amplitude_tail(s_norm, n - 1, t)
            }
        });
        assert!(ks_power > 0.2, "power law unexpectedly close: {ks_power}");
    }

    #[test]
    fn marginal_survival_reduces_to_archimedes_on_s2() {
        // on S^2 the first coordinate is uniform: survival of |a_1| is 1 - t
        for &t in &[0.0, 0.3, 0.7, 0.99] {
            let got = coordinate_marginal_survival(1.0, 3, t);
            assert!((got - (1.0 - t)).abs() < 1e-12, "t={t}: {got}");
        }
        // amplitude_tail with the matching convention is the circle law
        // sqrt(1 - t^2), which differs except at the endpoints
        assert!((amplitude_tail(1.0, 2, 0.6) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn batch_statistics_reproduce_from_isolated_seeds() {
        let w = SpectralWindow::build(Manifold::Torus2, 6.0, 2.0).unwrap();
        let x = Point::torus(1.0, 1.0);
        let batch = SampleBatch::new(31337, 500);
        let functional = |seed: u64| sample_unit_sphere(&w, seed).eval(x);
        let stats_batch = batch.stats(functional);

        // re-run each sample in isolation, in reverse order
        let mut values = vec![0.0; batch.count];
        for i in (0..batch.count).rev() {
            values[i] = functional(batch.seed_for(i));
        }
        let stats_isolated = BatchStats::from_values(&values);
        assert_eq!(stats_batch, stats_isolated);
    }
}
