//! The two model geometries and their exact Laplace eigenbases.
//!
//! Both models have integer squared eigenfrequencies, which makes spectral
//! window membership exact: every eigenfrequency is the correctly rounded
//! square root of an integer, so comparing it against window endpoints in
//! f64 never needs a tie-breaking tolerance.
//!
//! * `Torus2`: the flat square torus `[0, 2pi)^2`, area `4 pi^2`. The real
//!   eigenbasis holds the constant mode plus a cosine and a sine per lattice
//!   class `{k, -k}`, with eigenfrequency `|k|`.
//! * `Sphere2`: the round unit sphere, area `4 pi`, coordinates
//!   `(theta, phi)`. The real eigenbasis is the real spherical harmonics of
//!   degree `l`, eigenfrequency `sqrt(l(l+1))`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::legendre::ThetaTable;
use crate::quadrature::{gauss_legendre_on, pairwise_sum};

/// Enumeration refuses torus frequencies above this cap (memory guard).
pub const TORUS_FREQUENCY_CAP: f64 = 512.0;
/// Spherical harmonics are evaluated up to this degree.
pub const SPHERE_DEGREE_CAP: u32 = 200;

/// Area of the unit disk: the two-dimensional Weyl constant `c_2`.
pub const WEYL_CONSTANT: f64 = PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Manifold {
    Torus2,
    Sphere2,
}

/// A point in chart coordinates: torus `(x1, x2)`, sphere `(theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub a: f64,
    pub b: f64,
}

impl Point {
    /// Torus point, coordinates wrapped into `[0, 2pi)`.
    pub fn torus(x1: f64, x2: f64) -> Point {
        let two_pi = 2.0 * PI;
        Point {
            a: x1.rem_euclid(two_pi),
            b: x2.rem_euclid(two_pi),
        }
    }

    /// Sphere point, reduced to `theta` in `[0, pi]`, `phi` in `[0, 2pi)`,
    /// with `phi = 0` at the poles.
    pub fn sphere(theta: f64, phi: f64) -> Point {
        let two_pi = 2.0 * PI;
        let mut t = theta.rem_euclid(two_pi);
        let mut p = phi;
        if t > PI {
            t = two_pi - t;
            p += PI;
        }
        let mut p = p.rem_euclid(two_pi);
        if t == 0.0 || t == PI {
            p = 0.0;
        }
        Point { a: t, b: p }
    }

    pub fn north_pole() -> Point {
        Point { a: 0.0, b: 0.0 }
    }

    /// Unit vector in R^3 for a sphere point.
    pub fn to_unit_vector(self) -> [f64; 3] {
        let (st, ct) = self.a.sin_cos();
        let (sp, cp) = self.b.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Point {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let ct = (v[2] / norm).clamp(-1.0, 1.0);
        let theta = ct.acos();
        let phi = v[1].atan2(v[0]);
        Point::sphere(theta, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeLabel {
    TorusConstant,
    TorusCos { k: [i64; 2] },
    TorusSin { k: [i64; 2] },
    SphereZonal { l: u32 },
    SphereCos { l: u32, m: u32 },
    SphereSin { l: u32, m: u32 },
}

/// One real orthonormal eigenfunction with its eigenfrequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenMode {
    /// Position in the deterministic enumeration that produced this mode.
    pub mode_id: usize,
    /// Eigenfrequency `lambda_j` (the Laplace eigenvalue is its square).
    pub frequency: f64,
    pub label: ModeLabel,
}

/// A geodesic ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BallRegion {
    pub manifold: Manifold,
    pub center: Point,
    pub radius: f64,
    /// Exact area: `pi r^2` on the torus, `2 pi (1 - cos r)` on the sphere.
    pub volume: f64,
}

impl BallRegion {
    /// Radii at or above the injectivity radius are rejected, except the
    /// whole-sphere diagnostic `r = pi`.
    pub fn new(manifold: Manifold, center: Point, radius: f64) -> Result<BallRegion> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        let inj = manifold.injectivity_radius();
        let whole_sphere = manifold == Manifold::Sphere2 && radius == PI;
        if radius >= inj && !whole_sphere {
            return Err(Error::invalid(format!(
                "ball radius {radius} must be below the injectivity radius {inj}"
            )));
        }
        let volume = match manifold {
            Manifold::Torus2 => PI * radius * radius,
            Manifold::Sphere2 => 2.0 * PI * (1.0 - radius.cos()),
        };
        Ok(BallRegion {
            manifold,
            center,
            radius,
            volume,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QuadTarget {
    Ball,
    WholeManifold,
}

/// Positive-weight quadrature rule over a ball or the whole manifold.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub manifold: Manifold,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub target: QuadTarget,
    /// Measure of the target region; the weights sum to it.
    pub measure: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate a scalar function over the rule's region.
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        let vals: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect();
        pairwise_sum(&vals)
    }
}

/// Default radial order for ball rules; the angular count is twice this.
pub const DEFAULT_BALL_ORDER: usize = 64;
/// Default order for whole-manifold rules.
pub const DEFAULT_MANIFOLD_ORDER: usize = 256;
const MIN_BALL_ORDER: usize = 4;

impl Manifold {
    pub fn volume(self) -> f64 {
        match self {
            Manifold::Torus2 => 4.0 * PI * PI,
            Manifold::Sphere2 => 4.0 * PI,
        }
    }

    pub fn injectivity_radius(self) -> f64 {
        PI
    }

    /// Both models are surfaces; kept as a named quantity so dimension-
    /// dependent formulas (thresholds `r^n`, Weyl powers) stay symbolic.
    pub fn dimension(self) -> u32 {
        2
    }

    pub fn name(self) -> &'static str {
        match self {
            Manifold::Torus2 => "torus2",
            Manifold::Sphere2 => "sphere2",
        }
    }

    pub fn parse(s: &str) -> Result<Manifold> {
        match s {
            "torus2" => Ok(Manifold::Torus2),
            "sphere2" => Ok(Manifold::Sphere2),
            other => Err(Error::invalid(format!(
                "unknown manifold '{other}' (expected torus2 or sphere2)"
            ))),
        }
    }

    pub fn frequency_cap(self) -> f64 {
        match self {
            Manifold::Torus2 => TORUS_FREQUENCY_CAP,
            // sqrt(l(l+1)) at the degree cap
            Manifold::Sphere2 => {
                let l = SPHERE_DEGREE_CAP as f64;
                (l * (l + 1.0)).sqrt()
            }
        }
    }

    /// Geodesic distance. Torus: minimum over lattice translates; sphere:
    /// central angle between unit vectors.
    pub fn geodesic_distance(self, x: Point, y: Point) -> f64 {
        match self {
            Manifold::Torus2 => {
                let d1 = torus_axis_distance(x.a, y.a);
                let d2 = torus_axis_distance(x.b, y.b);
                d1.hypot(d2)
            }
            Manifold::Sphere2 => {
                let u = x.to_unit_vector();
                let v = y.to_unit_vector();
                let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
                dot.clamp(-1.0, 1.0).acos()
            }
        }
    }

    /// All eigenmodes with frequency in the closed interval `[lo, hi]`, in
    /// the deterministic order (torus: `|k|^2`, then `k` lexicographic, then
    /// cos before sin; sphere: degree, then order, zonal first, cos before
    /// sin). Multiplicities are fully expanded.
    pub fn enumerate_modes(self, lo: f64, hi: f64) -> Result<Vec<EigenMode>> {
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::invalid(format!(
                "invalid frequency interval [{lo}, {hi}]"
            )));
        }
        if hi > self.frequency_cap() {
            return Err(Error::FrequencyCap {
                requested: hi,
                cap: self.frequency_cap(),
            });
        }
        let mut modes = Vec::new();
        match self {
            Manifold::Torus2 => {
                if lo <= 0.0 {
                    modes.push(EigenMode {
                        mode_id: 0,
                        frequency: 0.0,
                        label: ModeLabel::TorusConstant,
                    });
                }
                let kmax = hi.floor() as i64;
                // Canonical class representatives: k1 > 0, or k1 = 0 and k2 > 0.
                let mut reps: Vec<[i64; 2]> = Vec::new();
                for k1 in 0..=kmax {
                    for k2 in -kmax..=kmax {
                        if k1 == 0 && k2 <= 0 {
                            continue;
                        }
                        let n = k1 * k1 + k2 * k2;
                        let freq = (n as f64).sqrt();
                        if lo <= freq && freq <= hi {
                            reps.push([k1, k2]);
                        }
                    }
                }
                reps.sort_by_key(|k| (k[0] * k[0] + k[1] * k[1], k[0], k[1]));
                for k in reps {
                    let freq = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
                    let id = modes.len();
                    modes.push(EigenMode {
                        mode_id: id,
                        frequency: freq,
                        label: ModeLabel::TorusCos { k },
                    });
                    modes.push(EigenMode {
                        mode_id: id + 1,
                        frequency: freq,
                        label: ModeLabel::TorusSin { k },
                    });
                }
            }
            Manifold::Sphere2 => {
                for l in 0..=SPHERE_DEGREE_CAP {
                    let freq = (l as f64 * (l as f64 + 1.0)).sqrt();
                    if freq < lo || freq > hi {
                        continue;
                    }
                    let id = modes.len();
                    modes.push(EigenMode {
                        mode_id: id,
                        frequency: freq,
                        label: ModeLabel::SphereZonal { l },
                    });
                    for m in 1..=l {
                        let id = modes.len();
                        modes.push(EigenMode {
                            mode_id: id,
                            frequency: freq,
                            label: ModeLabel::SphereCos { l, m },
                        });
                        modes.push(EigenMode {
                            mode_id: id + 1,
                            frequency: freq,
                            label: ModeLabel::SphereSin { l, m },
                        });
                    }
                }
            }
        }
        Ok(modes)
    }

    /// Value of one eigenmode at a point.
    pub fn eval_mode(self, mode: &EigenMode, x: Point) -> f64 {
        match mode.label {
            ModeLabel::TorusConstant => 1.0 / (2.0 * PI),
            ModeLabel::TorusCos { k } => {
                let phase = k[0] as f64 * x.a + k[1] as f64 * x.b;
                phase.cos() * TORUS_PAIR_NORM
            }
            ModeLabel::TorusSin { k } => {
                let phase = k[0] as f64 * x.a + k[1] as f64 * x.b;
                phase.sin() * TORUS_PAIR_NORM
            }
            ModeLabel::SphereZonal { l } => {
                let (st, ct) = x.a.sin_cos();
                crate::legendre::theta_part(l, 0, ct, st)
            }
            ModeLabel::SphereCos { l, m } => {
                let (st, ct) = x.a.sin_cos();
                std::f64::consts::SQRT_2
                    * crate::legendre::theta_part(l, m, ct, st)
                    * (m as f64 * x.b).cos()
            }
            ModeLabel::SphereSin { l, m } => {
                let (st, ct) = x.a.sin_cos();
                std::f64::consts::SQRT_2
                    * crate::legendre::theta_part(l, m, ct, st)
                    * (m as f64 * x.b).sin()
            }
        }
    }

    /// Values of many modes at one point, written into `out`.
    ///
    /// On the sphere this builds one colatitude table per point instead of
    /// re-running the degree recurrence per mode; on the torus it shares the
    /// phase between the cos/sin pair of each lattice class.
    pub fn eval_modes(self, modes: &[EigenMode], x: Point, out: &mut [f64]) {
        assert_eq!(modes.len(), out.len());
        match self {
            Manifold::Torus2 => {
                let mut i = 0;
                while i < modes.len() {
                    match modes[i].label {
                        ModeLabel::TorusConstant => {
                            out[i] = 1.0 / (2.0 * PI);
                            i += 1;
                        }
                        ModeLabel::TorusCos { k } => {
                            let phase = k[0] as f64 * x.a + k[1] as f64 * x.b;
                            let (s, c) = phase.sin_cos();
                            out[i] = c * TORUS_PAIR_NORM;
                            if i + 1 < modes.len()
                                && modes[i + 1].label == (ModeLabel::TorusSin { k })
                            {
                                out[i + 1] = s * TORUS_PAIR_NORM;
                                i += 2;
                            } else {
                                i += 1;
                            }
                        }
                        ModeLabel::TorusSin { k } => {
                            let phase = k[0] as f64 * x.a + k[1] as f64 * x.b;
                            out[i] = phase.sin() * TORUS_PAIR_NORM;
                            i += 1;
                        }
                        _ => unreachable!("sphere mode on torus"),
                    }
                }
            }
            Manifold::Sphere2 => {
                let l_max = modes
                    .iter()
                    .map(|m| match m.label {
                        ModeLabel::SphereZonal { l }
                        | ModeLabel::SphereCos { l, .. }
                        | ModeLabel::SphereSin { l, .. } => l,
                        _ => unreachable!("torus mode on sphere"),
                    })
                    .max()
                    .unwrap_or(0);
                let (st, ct) = x.a.sin_cos();
                let table = ThetaTable::build(l_max, ct, st);
                for (mode, slot) in modes.iter().zip(out.iter_mut()) {
                    *slot = match mode.label {
                        ModeLabel::SphereZonal { l } => table.get(l, 0),
                        ModeLabel::SphereCos { l, m } => {
                            std::f64::consts::SQRT_2 * table.get(l, m) * (m as f64 * x.b).cos()
                        }
                        ModeLabel::SphereSin { l, m } => {
                            std::f64::consts::SQRT_2 * table.get(l, m) * (m as f64 * x.b).sin()
                        }
                        _ => unreachable!(),
                    };
                }
            }
        }
    }

    /// Quadrature rule over a geodesic ball: Gauss–Legendre radially (torus)
    /// or in `cos theta` (sphere), uniform in the angle, `order` radial nodes
    /// by `2 * order` angular nodes. On the sphere the rule is built in the
    /// polar frame and rotated so the cap sits at `ball.center`.
    pub fn ball_quadrature(self, ball: &BallRegion, order: usize) -> Result<QuadratureRule> {
        if order < MIN_BALL_ORDER {
            return Err(Error::invalid(format!(
                "ball quadrature order {order} below minimum {MIN_BALL_ORDER}"
            )));
        }
        let n_ang = 2 * order;
        let dphi = 2.0 * PI / n_ang as f64;
        let mut nodes = Vec::with_capacity(order * n_ang);
        let mut weights = Vec::with_capacity(order * n_ang);
        match self {
            Manifold::Torus2 => {
                let (rho, w_rho) = gauss_legendre_on(order, 0.0, ball.radius);
                for (&r, &wr) in rho.iter().zip(&w_rho) {
                    for j in 0..n_ang {
                        let alpha = (j as f64 + 0.5) * dphi;
                        let (s, c) = alpha.sin_cos();
                        nodes.push(Point::torus(ball.center.a + r * c, ball.center.b + r * s));
                        weights.push(wr * r * dphi);
                    }
                }
            }
            Manifold::Sphere2 => {
                let (cs, ws) = gauss_legendre_on(order, ball.radius.cos(), 1.0);
                let rot = RotationToCenter::new(ball.center);
                for (&c, &wc) in cs.iter().zip(&ws) {
                    let theta = c.clamp(-1.0, 1.0).acos();
                    for j in 0..n_ang {
                        let phi = (j as f64 + 0.5) * dphi;
                        nodes.push(rot.apply(Point::sphere(theta, phi)));
                        weights.push(wc * dphi);
                    }
                }
            }
        }
        Ok(QuadratureRule {
            manifold: self,
            nodes,
            weights,
            target: QuadTarget::Ball,
            measure: ball.volume,
        })
    }

    /// Whole-manifold rule: a periodic `order x order` grid on the torus
    /// (spectrally exact for band-limited integrands), Gauss–Legendre in
    /// `cos theta` times `2 * order` uniform azimuths on the sphere.
    pub fn manifold_quadrature(self, order: usize) -> QuadratureRule {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match self {
            Manifold::Torus2 => {
                let h = 2.0 * PI / order as f64;
                let w = h * h;
                for i in 0..order {
                    for j in 0..order {
                        nodes.push(Point::torus(i as f64 * h, j as f64 * h));
                        weights.push(w);
                    }
                }
            }
            Manifold::Sphere2 => {
                let n_ang = 2 * order;
                let dphi = 2.0 * PI / n_ang as f64;
                let (cs, ws) = gauss_legendre_on(order, -1.0, 1.0);
                for (&c, &wc) in cs.iter().zip(&ws) {
                    let theta = c.clamp(-1.0, 1.0).acos();
                    for j in 0..n_ang {
                        let phi = (j as f64 + 0.5) * dphi;
                        nodes.push(Point::sphere(theta, phi));
                        weights.push(wc * dphi);
                    }
                }
            }
        }
        QuadratureRule {
            manifold: self,
            nodes,
            weights,
            target: QuadTarget::WholeManifold,
            measure: self.volume(),
        }
    }
}

const TORUS_PAIR_NORM: f64 = 0.225_079_079_039_564_26; // 1 / (sqrt(2) pi)

/// Distance between two canonical coordinates along one torus axis.
/// Built from `|a - b|` so it is exactly symmetric in its arguments.
fn torus_axis_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    let two_pi = 2.0 * PI;
    let d = d.rem_euclid(two_pi);
    d.min(two_pi - d)
}

/// Rotation taking the north pole to a given center.
struct RotationToCenter {
    identity: bool,
    m: [[f64; 3]; 3],
}

impl RotationToCenter {
    fn new(center: Point) -> Self {
        if center.a == 0.0 {
            return RotationToCenter {
                identity: true,
                m: [[0.0; 3]; 3],
            };
        }
        // R_z(phi_c) * R_y(theta_c)
        let (st, ct) = center.a.sin_cos();
        let (sp, cp) = center.b.sin_cos();
        let m = [
            [ct * cp, -sp, st * cp],
            [ct * sp, cp, st * sp],
            [-st, 0.0, ct],
        ];
        RotationToCenter { identity: false, m }
    }

    fn apply(&self, p: Point) -> Point {
        if self.identity {
            return p;
        }
        let v = p.to_unit_vector();
        let w = [
            self.m[0][0] * v[0] + self.m[0][1] * v[1] + self.m[0][2] * v[2],
            self.m[1][0] * v[0] + self.m[1][1] * v[1] + self.m[1][2] * v[2],
            self.m[2][0] * v[0] + self.m[2][1] * v[1] + self.m[2][2] * v[2],
        ];
        Point::from_unit_vector(w)
    }
}
