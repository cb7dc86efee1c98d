//! Closed-form ball-mass statistics through Gram matrices.
//!
//! For a window of dimension `N` and a region `B`, the Gram matrix
//! `M_ij = int_B e_i e_j` turns the ball mass `F(a) = int_B |u_a|^2` into the
//! quadratic form `a^T M a`. Under the uniform measure on `S^{N-1}`:
//!
//! * expectation: `E(F) = trace(M) / N`;
//! * exact variance: `Var(F) = 2 |M|_F^2 / (N(N+2)) - 2 trace(M)^2 / (N^2 (N+2))`,
//!   using the true sphere moments `E(a_i^4) = 3/(N(N+2))`,
//!   `E(a_i^2 a_j^2) = 1/(N(N+2))`;
//! * the large-N approximation `2 |M|_F^2 / N^2` (which replaces both mixed
//!   moments by `1/N^2`) is kept alongside, with the relative gap reported;
//! * worst case: `sup F = lambda_max(M)`, by power iteration;
//! * Lipschitz bound on the sphere: `|F|_Lip <= 2 lambda_max(M)`.
//!
//! Windows too large for a dense `N x N` matrix go through [`NodeGram`]:
//! with `B` the weight-scaled node evaluation matrix, `G = B B^T` is a small
//! `nodes x nodes` matrix sharing the nonzero spectrum (hence trace and
//! Frobenius norm) with `M = B^T B`. Ball masses are then sampled exactly in
//! distribution from the eigenvalues of `G` plus a chi-square tail for the
//! `N - nodes` zero directions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::Serialize;

use crate::ensemble::{rng_for, unit_sphere_vector};
use crate::error::{Error, Result};
use crate::manifold::{BallRegion, Manifold, QuadratureRule};
use crate::spectral::SpectralWindow;

/// Dense Gram matrices are refused above this window dimension.
pub const GRAM_DIMENSION_CAP: usize = 4000;
/// Default relative tolerance for the power iteration.
pub const DEFAULT_POWER_TOLERANCE: f64 = 1e-10;
const MAX_POWER_ITERATIONS: usize = 200_000;

/// Region a Gram matrix was integrated over.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum GramRegion {
    Ball(BallRegion),
    WholeManifold(Manifold),
}

impl GramRegion {
    pub fn manifold(&self) -> Manifold {
        match self {
            GramRegion::Ball(b) => b.manifold,
            GramRegion::WholeManifold(m) => *m,
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            GramRegion::Ball(b) => b.volume,
            GramRegion::WholeManifold(m) => m.volume(),
        }
    }

    /// The equidistribution target `Vol(region) / Vol(M)`.
    pub fn target(&self) -> f64 {
        self.measure() / self.manifold().volume()
    }
}

/// Symmetric positive semidefinite matrix `M_ij = int_B e_i e_j`, with its
/// trace and squared Frobenius norm cached.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    pub trace: f64,
    pub frobenius_sq: f64,
    /// `None` for synthetic matrices built directly from entries.
    pub region: Option<GramRegion>,
}

impl GramMatrix {
    /// Gram matrix over a geodesic ball, by ball quadrature at `order`.
    pub fn over_ball(w: &SpectralWindow, ball: &BallRegion, order: usize) -> Result<GramMatrix> {
        let rule = w.manifold.ball_quadrature(ball, order)?;
        Self::from_rule(w, &rule, Some(GramRegion::Ball(*ball)))
    }

    /// Gram matrix over the whole manifold (identity up to quadrature error).
    pub fn over_manifold(w: &SpectralWindow, order: usize) -> Result<GramMatrix> {
        let rule = w.manifold.manifold_quadrature(order);
        Self::from_rule(w, &rule, Some(GramRegion::WholeManifold(w.manifold)))
    }

    fn from_rule(
        w: &SpectralWindow,
        rule: &QuadratureRule,
        region: Option<GramRegion>,
    ) -> Result<GramMatrix> {
        let n = w.dimension();
        if n > GRAM_DIMENSION_CAP {
            return Err(Error::GramCap {
                dimension: n,
                cap: GRAM_DIMENSION_CAP,
            });
        }
        let b = w.weighted_eval_matrix(rule);
        let mut m = b.tr_mul(&b);
        // enforce exact symmetry: the upper triangle is the source of truth
        for j in 0..n {
            for i in 0..j {
                let v = m[(i, j)];
                m[(j, i)] = v;
            }
        }
        Ok(Self::from_symmetric_with_region(m, region))
    }

    /// Wrap an explicitly symmetric matrix (synthetic test inputs).
    pub fn from_symmetric(matrix: DMatrix<f64>) -> GramMatrix {
        Self::from_symmetric_with_region(matrix, None)
    }

    fn from_symmetric_with_region(matrix: DMatrix<f64>, region: Option<GramRegion>) -> GramMatrix {
        let trace = matrix.diagonal().iter().copied().sum();
        let frobenius_sq = matrix.iter().map(|v| v * v).sum();
        GramMatrix {
            matrix,
            trace,
            frobenius_sq,
            region,
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// `a^T M a`.
    pub fn quadratic_form(&self, a: &[f64]) -> f64 {
        let v = DVector::from_column_slice(a);
        let mv = &self.matrix * &v;
        v.dot(&mv)
    }
}

/// `E(F) = trace(M) / N`, exact under the unit-sphere measure.
pub fn expected_ball_mass(g: &GramMatrix) -> f64 {
    g.trace / g.dimension() as f64
}

/// Exact variance of `F` under the uniform unit-sphere measure.
pub fn variance_ball_mass_exact(g: &GramMatrix) -> Result<f64> {
    let n = g.dimension();
    if n < 2 {
        return Err(Error::DegenerateWindow {
            dimension: n,
            required: 2,
        });
    }
    let nf = n as f64;
    Ok(2.0 * g.frobenius_sq / (nf * (nf + 2.0)) - 2.0 * g.trace * g.trace / (nf * nf * (nf + 2.0)))
}

/// The large-N variance expression `2 |M|_F^2 / N^2`.
pub fn variance_ball_mass_large_n(g: &GramMatrix) -> f64 {
    let nf = g.dimension() as f64;
    2.0 * g.frobenius_sq / (nf * nf)
}

/// Top eigenvalue of `M` (the worst-case ball mass over unit coefficient
/// vectors) by power iteration from the normalized all-ones vector, with a
/// relative convergence tolerance on the Rayleigh quotient.
pub fn worst_case_ball_mass(g: &GramMatrix, tol: f64) -> Result<f64> {
    let n = g.dimension();
    let mut v = DVector::from_element(n, (n as f64).sqrt().recip());
    let mut prev = f64::NAN;
    for _ in 0..MAX_POWER_ITERATIONS {
        let y = &g.matrix * &v;
        let lambda = v.dot(&y);
        let norm = y.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = y / norm;
        if !prev.is_nan() && (lambda - prev).abs() <= tol * lambda.abs().max(1e-300) {
            return Ok(lambda);
        }
        prev = lambda;
    }
    Err(Error::NumericFailure(format!(
        "power iteration did not converge to relative {tol} in {MAX_POWER_ITERATIONS} iterations"
    )))
}

/// Rigorous Lipschitz bound of `F` on the coefficient sphere: `2 lambda_max(M)`.
pub fn lipschitz_bound(g: &GramMatrix, tol: f64) -> Result<f64> {
    Ok(2.0 * worst_case_ball_mass(g, tol)?)
}

/// Paper envelope regime of the Lipschitz constant (the `c r W` law), kept
/// for comparison against the quadratic-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LipschitzRegime {
    /// `r < 1/lambda`: below the Planck scale, outside the stated regime.
    BelowPlanck,
    /// `1/lambda <= r <= 1/W`: envelope proportional to `r W`.
    ScalesWithRadius,
    /// `r > 1/W`: the trivial envelope 1.
    Saturated,
}

pub fn lipschitz_regime(lambda: f64, width: f64, radius: f64) -> LipschitzRegime {
    if radius < 1.0 / lambda {
        LipschitzRegime::BelowPlanck
    } else if radius <= 1.0 / width {
        LipschitzRegime::ScalesWithRadius
    } else {
        LipschitzRegime::Saturated
    }
}

/// All eigenvalues of a symmetric matrix, descending. The dense reference
/// route used to validate the power iteration (practical to ~N = 2000).
pub fn dense_symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).expect("NaN eigenvalue"));
    vals
}

/// Closed-form moment summary for one region.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentReport {
    pub expectation: f64,
    pub variance_exact: f64,
    pub variance_large_n: f64,
    /// `(variance_large_n - variance_exact) / variance_exact`; the two agree
    /// to relative O(1/N) whenever `trace^2 <= N |M|_F^2`-style smallness
    /// holds, and diverge where the large-N expression breaks down.
    pub relative_gap: f64,
    /// Equidistribution target `Vol(B)/Vol(M)`.
    pub target: f64,
}

pub fn moment_report(g: &GramMatrix) -> Result<MomentReport> {
    let region = g
        .region
        .ok_or_else(|| Error::invalid("moment report needs a Gram matrix with a region"))?;
    let variance_exact = variance_ball_mass_exact(g)?;
    let variance_large_n = variance_ball_mass_large_n(g);
    Ok(MomentReport {
        expectation: expected_ball_mass(g),
        variance_exact,
        variance_large_n,
        relative_gap: (variance_large_n - variance_exact)
            / variance_exact.abs().max(f64::MIN_POSITIVE),
        target: region.target(),
    })
}

/// Ball masses `F_s = a_s^T M a_s` for unit-sphere samples with per-sample
/// seeds, batched through one GEMM per chunk. Output is in sample order and
/// independent of chunking or thread count.
pub fn sample_masses_direct(
    g: &GramMatrix,
    samples: usize,
    seed_for: impl Fn(usize) -> u64,
) -> Vec<f64> {
    const CHUNK: usize = 2048;
    let n = g.dimension();
    let mut out = Vec::with_capacity(samples);
    let mut start = 0;
    while start < samples {
        let len = CHUNK.min(samples - start);
        let mut a = DMatrix::zeros(n, len);
        for s in 0..len {
            let col = unit_sphere_vector(n, &mut rng_for(seed_for(start + s)));
            a.column_mut(s).copy_from_slice(&col);
        }
        let p = &g.matrix * &a;
        for s in 0..len {
            out.push(a.column(s).dot(&p.column(s)));
        }
        start += len;
    }
    out
}

/// Node-side Gram data for windows too large for a dense mode-side matrix.
#[derive(Debug, Clone)]
pub struct NodeGram {
    /// Eigenvalues of the region Gram form (descending, clamped at zero);
    /// at most `nodes` of them are nonzero.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    pub frobenius_sq: f64,
    /// Window dimension `N`.
    pub dimension: usize,
}

impl NodeGram {
    /// Build `G = B B^T` over the rule's nodes, accumulating mode chunks so
    /// the full node-by-mode matrix is never materialized.
    pub fn build(w: &SpectralWindow, rule: &QuadratureRule) -> NodeGram {
        const MODE_CHUNK: usize = 4096;
        let nodes = rule.len();
        let n = w.dimension();
        let mut g = DMatrix::<f64>::zeros(nodes, nodes);
        let mut start = 0;
        let mut row = vec![0.0; MODE_CHUNK];
        while start < n {
            let len = MODE_CHUNK.min(n - start);
            let chunk = &w.modes[start..start + len];
            let mut b = DMatrix::zeros(nodes, len);
            for (i, (&x, &wt)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                w.manifold.eval_modes(chunk, x, &mut row[..len]);
                let s = wt.sqrt();
                for (j, &v) in row[..len].iter().enumerate() {
                    b[(i, j)] = s * v;
                }
            }
            g.gemm(1.0, &b, &b.transpose(), 1.0);
            start += len;
        }
        // exact symmetry before the eigensolve
        for j in 0..nodes {
            for i in 0..j {
                let v = g[(i, j)];
                g[(j, i)] = v;
            }
        }
        let trace = g.diagonal().iter().copied().sum();
        let frobenius_sq = g.iter().map(|v| v * v).sum();
        // G shares its nonzero spectrum with the mode-side Gram matrix M;
        // M has exactly N eigenvalues, so keep the top min(nodes, N).
        let mut eigenvalues: Vec<f64> = dense_symmetric_eigenvalues(&g)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        eigenvalues.truncate(n);
        NodeGram {
            eigenvalues,
            trace,
            frobenius_sq,
            dimension: n,
        }
    }

    pub fn expected_ball_mass(&self) -> f64 {
        self.trace / self.dimension as f64
    }

    pub fn variance_exact(&self) -> Result<f64> {
        let n = self.dimension;
        if n < 2 {
            return Err(Error::DegenerateWindow {
                dimension: n,
                required: 2,
            });
        }
        let nf = n as f64;
        Ok(2.0 * self.frobenius_sq / (nf * (nf + 2.0))
            - 2.0 * self.trace * self.trace / (nf * nf * (nf + 2.0)))
    }

    pub fn variance_large_n(&self) -> f64 {
        let nf = self.dimension as f64;
        2.0 * self.frobenius_sq / (nf * nf)
    }

    pub fn worst_case_ball_mass(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// One draw of `F = a^T M a`, exact in distribution: in the eigenbasis
    /// `F = sum_i mu_i a_i^2` with `a` uniform on `S^{N-1}`, realized as
    /// normals on the spanned directions plus a chi-square remainder for the
    /// `N - k` null directions.
    pub fn sample_mass(&self, rng: &mut impl Rng) -> f64 {
        let k = self.eigenvalues.len();
        assert!(
            k <= self.dimension,
            "more node eigenvalues than window dimensions"
        );
        let mut num = 0.0;
        let mut den = 0.0;
        for &mu in &self.eigenvalues {
            let g: f64 = StandardNormal.sample(rng);
            num += mu * g * g;
            den += g * g;
        }
        let extra = self.dimension - k;
        if extra > 0 {
            let chi2 = Gamma::new(extra as f64 / 2.0, 2.0)
                .expect("valid gamma parameters")
                .sample(rng);
            den += chi2;
        }
        num / den
    }
}

/// Ball masses via the node-side spectrum, sample order deterministic.
pub fn sample_masses_spectral(
    ng: &NodeGram,
    samples: usize,
    seed_for: impl Fn(usize) -> u64 + Sync,
) -> Vec<f64> {
    use rayon::prelude::*;
    (0..samples)
        .into_par_iter()
        .map(|s| ng.sample_mass(&mut rng_for(seed_for(s))))
        .collect()
}

/// Deterministic Householder reflection `I - 2 v v^T` with `v` built from a
/// fixed seed; an orthogonal recombination for invariance tests.
pub fn householder_rotation(n: usize, seed: u64) -> DMatrix<f64> {
    let v = DVector::from_vec(unit_sphere_vector(n, &mut rng_for(seed)));
    DMatrix::identity(n, n) - 2.0 * &v * v.transpose()
}
