//! Spectral windows, projector kernels, and Weyl-law diagnostics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::legendre::legendre_p;
use crate::manifold::{EigenMode, Manifold, ModeLabel, Point, QuadratureRule};
use crate::quadrature::pairwise_sum;

/// The span of eigenfunctions with frequency in `[lambda - width, lambda]`
/// (closed at both ends), kept as an ordered mode list.
#[derive(Debug, Clone)]
pub struct SpectralWindow {
    pub manifold: Manifold,
    pub lambda: f64,
    pub width: f64,
    pub modes: Vec<EigenMode>,
}

impl SpectralWindow {
    /// Build the window `H_W(lambda)`. Requires `1 <= width <= lambda`;
    /// a window containing no eigenfrequency is an error, not a degenerate
    /// object.
    pub fn build(manifold: Manifold, lambda: f64, width: f64) -> Result<SpectralWindow> {
        if !(width >= 1.0 && width <= lambda) {
            return Err(Error::invalid(format!(
                "window width {width} violates 1 <= W <= lambda (lambda = {lambda})"
            )));
        }
        Self::build_unchecked(manifold, lambda, width)
    }

    /// Same as `build` but without the `width >= 1` constraint; used by
    /// tests that need designed sub-unit windows.
    pub fn build_unchecked(manifold: Manifold, lambda: f64, width: f64) -> Result<SpectralWindow> {
        let lo = lambda - width;
        if lo < 0.0 {
            return Err(Error::invalid(format!(
                "window [{lo}, {lambda}] extends below frequency zero"
            )));
        }
        let modes = manifold.enumerate_modes(lo, lambda)?;
        if modes.is_empty() {
            return Err(Error::EmptyWindow { lo, hi: lambda });
        }
        Ok(SpectralWindow {
            manifold,
            lambda,
            width,
            modes,
        })
    }

    pub fn dimension(&self) -> usize {
        self.modes.len()
    }

    pub fn lo(&self) -> f64 {
        self.lambda - self.width
    }

    /// Values of every window mode at `x`.
    pub fn eval_modes_at(&self, x: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.modes.len()];
        self.manifold.eval_modes(&self.modes, x, &mut out);
        out
    }

    /// Node-by-mode matrix with row `i` scaled by `sqrt(w_i)`, so that
    /// `B^T B` is the Gram matrix of the rule's region.
    pub fn weighted_eval_matrix(&self, rule: &QuadratureRule) -> DMatrix<f64> {
        self.eval_matrix_scaled(rule, |w| w.sqrt())
    }

    fn eval_matrix_scaled(
        &self,
        rule: &QuadratureRule,
        scale: impl Fn(f64) -> f64,
    ) -> DMatrix<f64> {
        let n = self.dimension();
        let mut b = DMatrix::zeros(rule.len(), n);
        let mut row = vec![0.0; n];
        for (i, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            self.manifold.eval_modes(&self.modes, x, &mut row);
            let s = scale(w);
            for (j, &v) in row.iter().enumerate() {
                b[(i, j)] = s * v;
            }
        }
        b
    }

    /// Degrees present in a sphere window (full multiplicity is guaranteed
    /// by construction).
    pub(crate) fn sphere_degrees(&self) -> Vec<u32> {
        let mut degrees = Vec::new();
        for mode in &self.modes {
            if let ModeLabel::SphereZonal { l } = mode.label {
                degrees.push(l);
            }
        }
        degrees
    }

    /// Lattice class representatives of a torus window plus whether the
    /// constant mode is present.
    pub(crate) fn torus_classes(&self) -> (bool, Vec<[i64; 2]>) {
        let mut has_const = false;
        let mut classes = Vec::new();
        for mode in &self.modes {
            match mode.label {
                ModeLabel::TorusConstant => has_const = true,
                ModeLabel::TorusCos { k } => classes.push(k),
                _ => {}
            }
        }
        (has_const, classes)
    }
}

/// Spectral projector kernel `E(x, y) = sum_i e_i(x) e_i(y)` over the
/// window, via the per-model fast path: the addition theorem per degree on
/// the sphere, the lattice-class cosine sum on the torus. Agrees with
/// `projector_kernel_direct` to 1e-8.
pub fn projector_kernel(w: &SpectralWindow, x: Point, y: Point) -> f64 {
    match w.manifold {
        Manifold::Torus2 => {
            let (has_const, classes) = w.torus_classes();
            let dx = x.a - y.a;
            let dy = x.b - y.b;
            let mut sum = if has_const { 0.5 } else { 0.0 };
            for k in classes {
                sum += (k[0] as f64 * dx + k[1] as f64 * dy).cos();
            }
            sum / (2.0 * PI * PI)
        }
        Manifold::Sphere2 => {
            let c = cos_angle(x, y);
            let mut sum = 0.0;
            for l in w.sphere_degrees() {
                sum += (2.0 * l as f64 + 1.0) * legendre_p(l, c);
            }
            sum / (4.0 * PI)
        }
    }
}

/// Reference implementation of the projector kernel by direct summation
/// over modes, in enumeration order.
pub fn projector_kernel_direct(w: &SpectralWindow, x: Point, y: Point) -> f64 {
    let vx = w.eval_modes_at(x);
    let vy = w.eval_modes_at(y);
    let prods: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a * b).collect();
    pairwise_sum(&prods)
}

fn cos_angle(x: Point, y: Point) -> f64 {
    let u = x.to_unit_vector();
    let v = y.to_unit_vector();
    (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0)
}

/// Pointwise Weyl remainder `R(lambda, x) = E_[0,lambda](x, x) - lambda^2 / (4 pi)`.
///
/// The subtracted term is the two-dimensional local Weyl law: unit-disk area
/// `pi` times `lambda^2 / (2 pi)^2`.
pub fn pointwise_weyl_remainder(m: Manifold, lambda: f64, x: Point) -> Result<f64> {
    let modes = m.enumerate_modes(0.0, lambda)?;
    let mut vals = vec![0.0; modes.len()];
    m.eval_modes(&modes, x, &mut vals);
    for v in vals.iter_mut() {
        *v *= *v;
    }
    let diag = pairwise_sum(&vals);
    Ok(diag - lambda * lambda / (4.0 * PI))
}

/// Counting-function Weyl remainder `R(lambda) = N(lambda) - Vol(M) lambda^2 / (4 pi)`
/// (for the torus, `N(lambda) - pi lambda^2`).
pub fn weyl_remainder(m: Manifold, lambda: f64) -> Result<f64> {
    let n = m.enumerate_modes(0.0, lambda)?.len();
    Ok(n as f64 - m.volume() * lambda * lambda / (4.0 * PI))
}

/// Projector kernel sampled along a geodesic, with the two-regime envelope
/// fitted to the observed profile.
#[derive(Debug, Clone, Serialize)]
pub struct KernelProfile {
    pub lambda: f64,
    pub width: f64,
    pub separations: Vec<f64>,
    pub values: Vec<f64>,
    /// Envelope evaluated at each separation: `near_constant * W * lambda`
    /// for `d <= 1/lambda`, else `far_constant * W * sqrt(lambda / d)`.
    pub bound_values: Vec<f64>,
    /// Fitted cap constant for the near-diagonal regime.
    pub near_constant: f64,
    /// Envelope constant for the far regime: the least-squares level plus
    /// two residual standard deviations, fitted on `d` in `(1/lambda, 10/lambda]`.
    pub far_constant: f64,
    /// Plain least-squares level of the far-field log-log fit.
    pub far_constant_ls: f64,
}

/// Sample `E(x, y_t)` along the geodesic from `x` with initial direction
/// `direction` (an angle in the tangent plane), at `samples` separations
/// spanning `[0, max_separation]`.
pub fn kernel_profile(
    w: &SpectralWindow,
    x: Point,
    direction: f64,
    max_separation: f64,
    samples: usize,
) -> Result<KernelProfile> {
    if !(max_separation > 0.0 && max_separation <= w.manifold.injectivity_radius()) {
        return Err(Error::invalid(format!(
            "max separation {max_separation} outside (0, injectivity radius]"
        )));
    }
    if samples < 2 {
        return Err(Error::invalid("kernel profile needs at least 2 samples"));
    }
    let mut separations = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = max_separation * i as f64 / (samples - 1) as f64;
        let y = walk_geodesic(w.manifold, x, direction, t);
        separations.push(t);
        values.push(projector_kernel(w, x, y));
    }

    let lam = w.lambda;
    let width = w.width;
    let near_limit = 1.0 / lam;
    let near_scale = width * lam;
    let far_scale = |d: f64| width * (lam / d).sqrt();

    let mut near_constant: f64 = 0.0;
    let mut far_logs = Vec::new();
    let k0 = values[0].abs().max(f64::MIN_POSITIVE);
    for (&d, &v) in separations.iter().zip(&values) {
        if d <= near_limit {
            near_constant = near_constant.max(v.abs() / near_scale);
        } else if d <= 10.0 * near_limit && v.abs() > 1e-12 * k0 {
            far_logs.push((v.abs() / far_scale(d)).ln());
        }
    }
    let (far_ls, far_env) = if far_logs.is_empty() {
        (near_constant, near_constant)
    } else {
        let mean = pairwise_sum(&far_logs) / far_logs.len() as f64;
        let var = far_logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / far_logs.len() as f64;
        (mean.exp(), (mean + 2.0 * var.sqrt()).exp())
    };

    let bound_values = separations
        .iter()
        .map(|&d| {
            if d <= near_limit {
                near_constant * near_scale
            } else {
                far_env * far_scale(d)
            }
        })
        .collect();

    Ok(KernelProfile {
        lambda: lam,
        width,
        separations,
        values,
        bound_values,
        near_constant,
        far_constant: far_env,
        far_constant_ls: far_ls,
    })
}

/// Point at arclength `t` along the geodesic from `x` with direction angle
/// `psi` (measured in the local frame: torus axes, sphere `(e_theta, e_phi)`).
pub fn walk_geodesic(m: Manifold, x: Point, psi: f64, t: f64) -> Point {
    match m {
        Manifold::Torus2 => {
            let (s, c) = psi.sin_cos();
            Point::torus(x.a + t * c, x.b + t * s)
        }
        Manifold::Sphere2 => {
            let u = x.to_unit_vector();
            let (st, ct) = x.a.sin_cos();
            let (sp, cp) = x.b.sin_cos();
            let e_theta = [ct * cp, ct * sp, -st];
            let e_phi = [-sp, cp, 0.0];
            let (spsi, cpsi) = psi.sin_cos();
            let d = [
                cpsi * e_theta[0] + spsi * e_phi[0],
                cpsi * e_theta[1] + spsi * e_phi[1],
                cpsi * e_theta[2] + spsi * e_phi[2],
            ];
            let (s, c) = t.sin_cos();
            Point::from_unit_vector([
                c * u[0] + s * d[0],
                c * u[1] + s * d[1],
                c * u[2] + s * d[2],
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::DEFAULT_MANIFOLD_ORDER;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(m: Manifold, rng: &mut impl Rng) -> Point {
        match m {
            Manifold::Torus2 => {
                Point::torus(rng.gen::<f64>() * 2.0 * PI, rng.gen::<f64>() * 2.0 * PI)
            }
            Manifold::Sphere2 => {
                let c: f64 = rng.gen_range(-1.0..1.0);
                Point::sphere(c.acos(), rng.gen::<f64>() * 2.0 * PI)
            }
        }
    }

    #[test]
    fn window_dimensions_match_enumeration_oracles() {
        // single sphere degree: no other degree's frequency within 1
        let lam = (10.0f64 * 11.0).sqrt();
        let w = SpectralWindow::build(Manifold::Sphere2, lam, 1.0).unwrap();
        assert_eq!(w.dimension(), 21);

        // all |k| <= 5, constant included since the interval is closed
        let w = SpectralWindow::build(Manifold::Torus2, 5.0, 5.0).unwrap();
        assert_eq!(w.dimension(), 81);

        // no sqrt-integer in [2.84, 2.99]
        let err = SpectralWindow::build_unchecked(Manifold::Torus2, 2.99, 0.15).unwrap_err();
        assert!(matches!(err, Error::EmptyWindow { .. }), "{err}");
    }

    #[test]
    fn window_preconditions() {
        assert!(SpectralWindow::build(Manifold::Torus2, 10.0, 0.5).is_err());
        assert!(SpectralWindow::build(Manifold::Torus2, 10.0, 11.0).is_err());
        assert!(SpectralWindow::build(Manifold::Torus2, 10.0, 10.0).is_ok());
    }

    #[test]
    fn kernel_fast_path_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let torus = SpectralWindow::build(Manifold::Torus2, 9.0, 3.0).unwrap();
        let sphere = SpectralWindow::build(Manifold::Sphere2, 12.0, 4.0).unwrap();
        for _ in 0..1000 {
            let (x, y) = (
                random_point(Manifold::Torus2, &mut rng),
                random_point(Manifold::Torus2, &mut rng),
            );
            let fast = projector_kernel(&torus, x, y);
            let direct = projector_kernel_direct(&torus, x, y);
            assert!((fast - direct).abs() < 1e-8, "{fast} vs {direct}");

            let (x, y) = (
                random_point(Manifold::Sphere2, &mut rng),
                random_point(Manifold::Sphere2, &mut rng),
            );
            let fast = projector_kernel(&sphere, x, y);
            let direct = projector_kernel_direct(&sphere, x, y);
            assert!((fast - direct).abs() < 1e-8, "{fast} vs {direct}");
        }
    }

    #[test]
    fn kernel_is_exactly_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [Manifold::Torus2, Manifold::Sphere2] {
            let w = SpectralWindow::build(m, 8.0, 2.0).unwrap();
            for _ in 0..100 {
                let (x, y) = (random_point(m, &mut rng), random_point(m, &mut rng));
                assert_eq!(projector_kernel(&w, x, y), projector_kernel(&w, y, x));
            }
        }
    }

    #[test]
    fn kernel_diagonal_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for m in [Manifold::Torus2, Manifold::Sphere2] {
            let w = SpectralWindow::build(m, 11.0, 5.0).unwrap();
            for _ in 0..50 {
                let x = random_point(m, &mut rng);
                assert!(projector_kernel(&w, x, x) > 0.0);
            }
        }
    }

    #[test]
    fn sphere_odd_degree_vanishes_at_quarter_turn() {
        // single degree l (odd): K at distance pi/2 is proportional to P_l(0) = 0
        let l = 11u32;
        let lam = (l as f64 * (l as f64 + 1.0)).sqrt();
        let w = SpectralWindow::build(Manifold::Sphere2, lam, 1.0).unwrap();
        assert_eq!(w.dimension(), (2 * l + 1) as usize);
        let x = Point::north_pole();
        let y = Point::sphere(PI / 2.0, 1.3);
        assert!(projector_kernel(&w, x, y).abs() < 1e-12);
        assert!(projector_kernel_direct(&w, x, y).abs() < 1e-10);
    }

    #[test]
    fn torus_diagonal_is_x_independent() {
        let w = SpectralWindow::build(Manifold::Torus2, 9.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let x = random_point(Manifold::Torus2, &mut rng);
            let v = projector_kernel(&w, x, x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(hi - lo < 1e-10, "spread {}", hi - lo);
        // and equals N / (4 pi^2)
        let want = w.dimension() as f64 / (4.0 * PI * PI);
        assert!(((hi - want) / want).abs() < 1e-12);
    }

    #[test]
    fn trace_identity_against_manifold_quadrature() {
        for m in [Manifold::Torus2, Manifold::Sphere2] {
            let w = SpectralWindow::build(m, 10.0, 4.0).unwrap();
            let rule = m.manifold_quadrature(DEFAULT_MANIFOLD_ORDER);
            let trace = rule.integrate(|x| projector_kernel(&w, x, x));
            let n = w.dimension() as f64;
            assert!(((trace - n) / n).abs() < 1e-6, "{m:?}: {trace} vs {n}");
        }
    }

    #[test]
    fn window_kernels_add_when_split() {
        // [0, 6] = [0, 3.5] + [3.5+, 6] pointwise
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for m in [Manifold::Torus2, Manifold::Sphere2] {
            let whole = SpectralWindow::build(m, 6.0, 6.0).unwrap();
            let low = SpectralWindow::build_unchecked(m, 3.5, 3.5).unwrap();
            let high = SpectralWindow::build_unchecked(m, 6.0, 6.0 - 3.5000001).unwrap();
            assert_eq!(whole.dimension(), low.dimension() + high.dimension());
            for _ in 0..200 {
                let (x, y) = (random_point(m, &mut rng), random_point(m, &mut rng));
                let sum = projector_kernel(&low, x, y) + projector_kernel(&high, x, y);
                assert!((projector_kernel(&whole, x, y) - sum).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn weyl_remainder_frozen_values() {
        // 317 - 100 pi and 81 - 25 pi from the lattice oracle
        let r10 = weyl_remainder(Manifold::Torus2, 10.0).unwrap();
        assert!((r10 - (317.0 - 100.0 * PI)).abs() < 1e-9);
        let r5 = weyl_remainder(Manifold::Torus2, 5.0).unwrap();
        assert!((r5 - (81.0 - 25.0 * PI)).abs() < 1e-9);

        // sphere: exactly L + 1 at lambda = sqrt(L(L+1))
        for l in [5u32, 12, 40] {
            let lam = (l as f64 * (l as f64 + 1.0)).sqrt();
            let r = weyl_remainder(Manifold::Sphere2, lam).unwrap();
            assert!((r - (l as f64 + 1.0)).abs() < 1e-9, "L={l}: {r}");
        }
    }

    #[test]
    fn pointwise_remainder_values() {
        // torus diagonal is x-independent: R(10, x) = 317/(4 pi^2) - 100/(4 pi)
        let want = 317.0 / (4.0 * PI * PI) - 100.0 / (4.0 * PI);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let x = random_point(Manifold::Torus2, &mut rng);
            let r = pointwise_weyl_remainder(Manifold::Torus2, 10.0, x).unwrap();
            assert!((r - want).abs() < 1e-9, "{r} vs {want}");
        }

        // sphere at the pole: diagonal (L+1)^2/(4 pi), checked against the
        // zonal-only sum (all other orders vanish at the pole)
        let l_top = 14u32;
        let lam = (l_top as f64 * (l_top as f64 + 1.0)).sqrt();
        let zonal_only: f64 = (0..=l_top)
            .map(|l| crate::legendre::theta_part(l, 0, 1.0, 0.0).powi(2))
            .sum();
        let want_diag = (l_top as f64 + 1.0).powi(2) / (4.0 * PI);
        assert!(((zonal_only - want_diag) / want_diag).abs() < 1e-12);
        let r = pointwise_weyl_remainder(Manifold::Sphere2, lam, Point::north_pole()).unwrap();
        assert!((r - (want_diag - lam * lam / (4.0 * PI))).abs() < 1e-9);

        // lambda = 0: only the constant mode
        let r = pointwise_weyl_remainder(Manifold::Torus2, 0.0, Point::torus(0.3, 0.4)).unwrap();
        assert!((r - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn profile_starts_at_the_diagonal() {
        let w = SpectralWindow::build(Manifold::Torus2, 12.0, 2.0).unwrap();
        let x = Point::torus(0.7, 1.9);
        let p = kernel_profile(&w, x, 0.3, 1.0, 50).unwrap();
        assert_eq!(p.separations[0], 0.0);
        assert!((p.values[0] - projector_kernel(&w, x, x)).abs() < 1e-12);
    }

    #[test]
    fn sphere_single_degree_profile_is_legendre() {
        let l = 9u32;
        let lam = (l as f64 * (l as f64 + 1.0)).sqrt();
        let w = SpectralWindow::build(Manifold::Sphere2, lam, 1.0).unwrap();
        let x = Point::sphere(0.9, 2.2);
        let p = kernel_profile(&w, x, 1.0, 2.0, 40).unwrap();
        for (&d, &v) in p.separations.iter().zip(&p.values) {
            let want = (2.0 * l as f64 + 1.0) / (4.0 * PI) * legendre_p(l, d.cos());
            assert!((v - want).abs() < 1e-10, "d={d}");
        }
    }

    #[test]
    fn far_field_envelope_majorizes_the_tail() {
        // fitted on (1/lambda, 10/lambda], tested from 20/lambda out
        let lam = 40.0;
        let w = SpectralWindow::build(Manifold::Torus2, lam, 1.0).unwrap();
        let x = Point::torus(0.25, 1.35);
        let p = kernel_profile(&w, x, 0.7, 1.5, 600).unwrap();
        let mut below = 0;
        let mut total = 0;
        for ((&d, &v), &b) in p.separations.iter().zip(&p.values).zip(&p.bound_values) {
            if d >= 20.0 / lam {
                total += 1;
                if v.abs() <= b {
                    below += 1;
                }
            }
        }
        assert!(total > 100);
        let frac = below as f64 / total as f64;
        assert!(
            frac >= 0.95,
            "only {frac} of tail samples below the envelope"
        );
    }

    #[test]
    fn geodesic_walk_has_unit_speed() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for m in [Manifold::Torus2, Manifold::Sphere2] {
            for _ in 0..50 {
                let x = random_point(m, &mut rng);
                let psi = rng.gen::<f64>() * 2.0 * PI;
                let t = rng.gen::<f64>() * 1.5;
                let y = walk_geodesic(m, x, psi, t);
                assert!((m.geodesic_distance(x, y) - t).abs() < 1e-10);
            }
        }
    }
}
