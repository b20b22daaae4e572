//! Convex bodies in R⁴ described by support functions h(θ) = sup_{x∈K} x·θ.
//!
//! The margin m(x) = min_{|θ|=1} (h(θ) − x·θ) is the signed distance to the
//! boundary: positive inside, minus the distance to K outside. Analytic kinds
//! and their Minkowski combinations evaluate it by local minimization on S³
//! (exact up to round-off); sampled bodies fall back to the minimum over the
//! direction grid, which over-estimates it.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec4 = [f64; 4];

pub const DEFAULT_GRID_SIZE: usize = 4096;
/// Grid sizes below this are rejected.
pub const MIN_GRID_SIZE: usize = 4096;
/// Number of leading grid directions used to seed margin minimization.
const COARSE: usize = 512;

#[inline]
pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn norm(a: &Vec4) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &Vec4) -> Vec4 {
    let n = norm(a);
    a.map(|x| x / n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedBody {
    pub weight: f64,
    pub body: ConvexBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum BodyKind {
    Ball { center: Vec4, radius: f64 },
    /// Axis-aligned: Σ ((x_i − c_i)/r_i)² ≤ 1.
    Ellipsoid { center: Vec4, radii: Vec4 },
    /// Convex hull of the origin and the ball B((0,0,0,center_height), radius),
    /// inside the cone |x₁₂₃| < a·x₄.
    ConeHull { a: f64, center_height: f64, radius: f64 },
    /// Σ w_i K_i with w_i ≥ 0.
    Combination { parts: Vec<WeightedBody> },
    /// Support values on the direction grid of `grid_size`.
    Sampled { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    #[serde(flatten)]
    pub kind: BodyKind,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

fn default_grid() -> usize {
    DEFAULT_GRID_SIZE
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    pub epsilon: f64,
}

impl StripSpec {
    /// ε must be positive and below the body's inradius estimate.
    pub fn for_body(epsilon: f64, body: &ConvexBody) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Argument(format!("strip width {epsilon} must be positive")));
        }
        let r = body.inradius();
        if epsilon >= r {
            return Err(Error::Resolution(format!("strip width {epsilon} not below inradius {r}")));
        }
        Ok(Self { epsilon })
    }
}

/// Deterministic low-discrepancy directions on S³: an additive recurrence in
/// [0,1)³ with generator 1/g, 1/g², 1/g³ (g⁴ = g + 1), pushed to the sphere
/// by the equal-area map (u₁,u₂,u₃) ↦ (√(1−u₁)·(sin, cos)2πu₂, √u₁·(sin, cos)2πu₃).
pub fn direction_grid(n: usize) -> Arc<Vec<Vec4>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Vec4>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("direction cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let g = 1.220_744_084_605_759_5_f64;
            let alpha = [1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)];
            Arc::new(
                (0..n)
                    .map(|k| {
                        let u: [f64; 3] = std::array::from_fn(|i| (0.5 + alpha[i] * k as f64).fract());
                        let (r1, r2) = ((1.0 - u[0]).sqrt(), u[0].sqrt());
                        let (s2, c2) = (2.0 * PI * u[1]).sin_cos();
                        let (s3, c3) = (2.0 * PI * u[2]).sin_cos();
                        normalize(&[r1 * s2, r1 * c2, r2 * s3, r2 * c3])
                    })
                    .collect(),
            )
        })
        .clone()
}

impl ConvexBody {
    pub fn ball(center: Vec4, radius: f64) -> Result<Self> {
        Self::new(BodyKind::Ball { center, radius }, DEFAULT_GRID_SIZE)
    }

    pub fn unit_ball() -> Self {
        Self::ball([0.0; 4], 1.0).expect("unit ball is valid")
    }

    pub fn ellipsoid(center: Vec4, radii: Vec4) -> Result<Self> {
        Self::new(BodyKind::Ellipsoid { center, radii }, DEFAULT_GRID_SIZE)
    }

    /// Centered ellipsoid {Σ c_i x_i² < 1}.
    pub fn ellipsoid_from_coefficients(c: Vec4) -> Result<Self> {
        if c.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Argument("ellipsoid coefficients must be positive".into()));
        }
        Self::ellipsoid([0.0; 4], c.map(|x| 1.0 / x.sqrt()))
    }

    pub fn new(kind: BodyKind, grid_size: usize) -> Result<Self> {
        let b = Self { kind, grid_size };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < MIN_GRID_SIZE {
            return Err(Error::Argument(format!("grid_size {} below {MIN_GRID_SIZE}", self.grid_size)));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                if !finite(center) || !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::Argument("ball needs a finite center and positive radius".into()));
                }
            }
            BodyKind::Ellipsoid { center, radii } => {
                if !finite(center) || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return Err(Error::Argument("ellipsoid needs positive finite radii".into()));
                }
            }
            BodyKind::ConeHull { a, center_height, radius } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(Error::Argument(format!("cone slope a = {a} outside (0,1)")));
                }
                if !(*center_height > 0.0) || !(*radius > 0.0) {
                    return Err(Error::Argument("cone hull needs positive height and radius".into()));
                }
                let limit = center_height * a / (1.0 + a * a).sqrt();
                if !(*radius < limit) {
                    return Err(Error::ConeContainment(format!("radius {radius} >= {limit}")));
                }
            }
            BodyKind::Combination { parts } => {
                if parts.is_empty() {
                    return Err(Error::Argument("combination needs at least one part".into()));
                }
                for p in parts {
                    if !(p.weight >= 0.0) || !p.weight.is_finite() {
                        return Err(Error::Argument("combination weights must be non-negative".into()));
                    }
                    p.body.validate()?;
                }
                if parts.iter().all(|p| p.weight == 0.0) {
                    return Err(Error::Argument("combination weights are all zero".into()));
                }
            }
            BodyKind::Sampled { values } => {
                if values.len() != self.grid_size || !finite(values) {
                    return Err(Error::Argument("sampled support needs one finite value per grid direction".into()));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: ConvexBody = serde_json::from_str(s)?;
        b.validate()?;
        Ok(b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BodyKind::Ball { .. } => "ball",
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::ConeHull { .. } => "cone_hull",
            BodyKind::Combination { .. } => "combination",
            BodyKind::Sampled { .. } => "sampled",
        }
    }

    pub fn directions(&self) -> Arc<Vec<Vec4>> {
        direction_grid(self.grid_size)
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.kind, BodyKind::Sampled { .. })
    }

    /// Nonsmooth boundary (the cone-hull apex), anywhere in the body.
    pub fn has_vertex(&self) -> bool {
        match &self.kind {
            BodyKind::ConeHull { .. } => true,
            BodyKind::Combination { parts } => parts.iter().any(|p| p.weight > 0.0 && p.body.has_vertex()),
            _ => false,
        }
    }

    pub fn support_eval(&self, theta: &Vec4) -> Result<f64> {
        if (norm(theta) - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("direction norm {} is not 1", norm(theta))));
        }
        Ok(self.support(theta))
    }

    /// h(θ) for unit θ, no validation.
    pub fn support(&self, t: &Vec4) -> f64 {
        match &self.kind {
            BodyKind::Ball { center, radius } => dot(center, t) + radius,
            BodyKind::Ellipsoid { center, radii } => {
                let s: f64 = (0..4).map(|i| (radii[i] * t[i]).powi(2)).sum();
                dot(center, t) + s.sqrt()
            }
            BodyKind::ConeHull { center_height, radius, .. } => (center_height * t[3] + radius).max(0.0),
            BodyKind::Combination { parts } => parts.iter().map(|p| p.weight * p.body.support(t)).sum(),
            BodyKind::Sampled { values } => values[self.nearest_direction(t)],
        }
    }

    /// A point of the body attaining h(θ); `None` for sampled bodies.
    pub fn support_point(&self, t: &Vec4) -> Option<Vec4> {
        match &self.kind {
            BodyKind::Ball { center, radius } => Some(std::array::from_fn(|i| center[i] + radius * t[i])),
            BodyKind::Ellipsoid { center, radii } => {
                let s: f64 = (0..4).map(|i| (radii[i] * t[i]).powi(2)).sum::<f64>().sqrt();
                Some(std::array::from_fn(|i| center[i] + radii[i] * radii[i] * t[i] / s))
            }
            BodyKind::ConeHull { center_height, radius, .. } => {
                if center_height * t[3] + radius > 0.0 {
                    let mut p = t.map(|x| radius * x);
                    p[3] += center_height;
                    Some(p)
                } else {
                    Some([0.0; 4])
                }
            }
            BodyKind::Combination { parts } => {
                let mut acc = [0.0; 4];
                for p in parts {
                    let s = p.body.support_point(t)?;
                    for i in 0..4 {
                        acc[i] += p.weight * s[i];
                    }
                }
                Some(acc)
            }
            BodyKind::Sampled { .. } => None,
        }
    }

    fn nearest_direction(&self, t: &Vec4) -> usize {
        let dirs = self.directions();
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, d) in dirs.iter().enumerate() {
            let c = dot(d, t);
            if c > best.0 {
                best = (c, k);
            }
        }
        best.1
    }

    /// h on the direction grid.
    pub fn sampled_support(&self) -> Vec<f64> {
        self.directions().iter().map(|d| self.support(d)).collect()
    }

    pub fn to_sampled(&self) -> ConvexBody {
        ConvexBody { kind: BodyKind::Sampled { values: self.sampled_support() }, grid_size: self.grid_size }
    }

    /// A point well inside the body.
    pub fn center(&self) -> Vec4 {
        match &self.kind {
            BodyKind::Ball { center, .. } | BodyKind::Ellipsoid { center, .. } => *center,
            BodyKind::ConeHull { center_height, .. } => [0.0, 0.0, 0.0, *center_height],
            BodyKind::Combination { parts } => {
                let mut c = [0.0; 4];
                for p in parts {
                    let pc = p.body.center();
                    for i in 0..4 {
                        c[i] += p.weight * pc[i];
                    }
                }
                c
            }
            BodyKind::Sampled { .. } => [0.0; 4],
        }
    }

    /// Lower bound on the inradius (exact for balls, ellipsoids and cone hulls).
    pub fn inradius(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius, .. } => *radius,
            BodyKind::Ellipsoid { radii, .. } => radii.iter().cloned().fold(f64::INFINITY, f64::min),
            BodyKind::ConeHull { radius, .. } => *radius,
            BodyKind::Combination { parts } => parts.iter().map(|p| p.weight * p.body.inradius()).sum(),
            BodyKind::Sampled { .. } => self.margin(&[0.0; 4]).max(0.0),
        }
    }

    /// Per-axis [min, max] from the support function.
    pub fn bounding_box(&self) -> [[f64; 2]; 4] {
        std::array::from_fn(|i| {
            let mut e = [0.0; 4];
            e[i] = 1.0;
            let hi = self.support(&e);
            e[i] = -1.0;
            [-self.support(&e), hi]
        })
    }

    /// Signed distance to the boundary (see module docs).
    pub fn margin(&self, x: &Vec4) -> f64 {
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                let d: Vec4 = std::array::from_fn(|i| x[i] - center[i]);
                radius - norm(&d)
            }
            BodyKind::Ellipsoid { center, radii } => ellipsoid_margin(center, radii, x),
            BodyKind::ConeHull { center_height, radius, .. } => cone_margin(*center_height, *radius, x),
            BodyKind::Sampled { values } => self
                .directions()
                .iter()
                .zip(values)
                .map(|(d, h)| h - dot(x, d))
                .fold(f64::INFINITY, f64::min),
            _ => self.sphere_margin(x, false).0,
        }
    }

    /// Strictly inside.
    pub fn contains(&self, x: &Vec4) -> bool {
        match &self.kind {
            BodyKind::Ellipsoid { center, radii } => {
                let s: f64 = (0..4).map(|i| ((x[i] - center[i]) / radii[i]).powi(2)).sum();
                s < 1.0
            }
            BodyKind::Combination { .. } => self.sphere_margin(x, true).0 > 0.0,
            _ => self.margin(x) > 0.0,
        }
    }

    /// Distance s ∈ (0, len] from an inside point `p` along unit direction `d`
    /// to the boundary, if the boundary is crossed within `len`.
    pub fn ray_exit(&self, p: &Vec4, d: &Vec4, len: f64) -> Option<f64> {
        let end: Vec4 = std::array::from_fn(|i| p[i] + len * d[i]);
        if self.contains(&end) {
            return None;
        }
        let quad = |center: &Vec4, radii: &Vec4| {
            // Σ ((p + s d − c)/r)² = 1
            let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
            for i in 0..4 {
                let q = (p[i] - center[i]) / radii[i];
                let e = d[i] / radii[i];
                a += e * e;
                b += 2.0 * q * e;
                c += q * q;
            }
            let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
            // c < 0 inside: the positive root
            let s = if b >= 0.0 { 2.0 * c / (-b - disc) } else { (-b + disc) / (2.0 * a) };
            s.clamp(0.0, len)
        };
        match &self.kind {
            BodyKind::Ball { center, radius } => Some(quad(center, &[*radius; 4])),
            BodyKind::Ellipsoid { center, radii } => Some(quad(center, radii)),
            _ => Some(self.root_along(p, d, len)),
        }
    }

    /// Illinois iteration on the margin along the segment, bracket [0, len].
    fn root_along(&self, p: &Vec4, d: &Vec4, len: f64) -> f64 {
        let at = |s: f64| -> Vec4 { std::array::from_fn(|i| p[i] + s * d[i]) };
        // Descent-based margins restart from the outward normal found at the
        // far end instead of repeating the coarse search.
        let warm = matches!(self.kind, BodyKind::Ellipsoid { .. } | BodyKind::Combination { .. });
        let normal = if warm { self.sphere_margin(&at(len), false).1 } else { [0.0; 4] };
        let f = |s: f64| {
            let x = at(s);
            if warm {
                self.descend(&x, normal).0
            } else {
                self.margin(&x)
            }
        };
        let (mut a, mut b) = (0.0, len);
        let (mut fa, mut fb) = (f(a), f(b));
        if fb > 0.0 {
            // margin noise at the far end; the contains() test said outside
            fb = -f64::MIN_POSITIVE;
        }
        let mut side = 0i8;
        for _ in 0..200 {
            if (b - a).abs() <= 1e-13 * len {
                break;
            }
            let c = (a * fb - b * fa) / (fb - fa);
            let fc = f(c);
            if fc > 0.0 {
                a = c;
                fa = fc;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            } else if fc < 0.0 {
                b = c;
                fb = fc;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                return c;
            }
        }
        0.5 * (a + b)
    }

    /// min over S³ of h(θ) − x·θ by projected descent from several seeds.
    /// Returns the value and the minimizing direction.
    /// With `sign_only`, a clearly negative coarse value is returned as is.
    fn sphere_margin(&self, x: &Vec4, sign_only: bool) -> (f64, Vec4) {
        let dirs = self.directions();
        let g = |t: &Vec4| self.support(t) - dot(x, t);
        let mut seeds: Vec<(f64, Vec4)> = dirs.iter().take(COARSE).map(|t| (g(t), *t)).collect();
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sign_only && seeds[0].0 < 0.0 {
            return seeds[0];
        }
        seeds.truncate(3);
        let c = self.center();
        let r: Vec4 = std::array::from_fn(|i| x[i] - c[i]);
        if norm(&r) > 1e-12 {
            let t = normalize(&r);
            seeds.push((g(&t), t));
        }
        let mut best = (f64::INFINITY, [0.0; 4]);
        for (_, t0) in seeds {
            let r = self.descend(x, t0);
            if r.0 < best.0 {
                best = r;
            }
        }
        best
    }

    fn descend(&self, x: &Vec4, mut t: Vec4) -> (f64, Vec4) {
        let g = |t: &Vec4| self.support(t) - dot(x, t);
        let mut val = g(&t);
        let mut step = 0.5;
        for _ in 0..400 {
            let s = match self.support_point(&t) {
                Some(s) => s,
                None => return (val, t),
            };
            let mut grad: Vec4 = std::array::from_fn(|i| s[i] - x[i]);
            let radial = dot(&grad, &t);
            for i in 0..4 {
                grad[i] -= radial * t[i];
            }
            let gn = norm(&grad);
            if gn <= 1e-15 * (1.0 + norm(x)) {
                break;
            }
            let mut moved = false;
            while step > 1e-18 {
                let cand = normalize(&std::array::from_fn(|i| t[i] - step * grad[i]));
                let cv = g(&cand);
                if cv < val {
                    t = cand;
                    val = cv;
                    step *= 2.0;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (val, t)
    }

    /// Largest violation of h(θ₁+θ₂) ≤ h(θ₁) + h(θ₂) (homogeneous extension)
    /// over random pairs of grid directions.
    pub fn sublinearity_defect(&self, pairs: usize, seed: u64) -> f64 {
        let dirs = self.directions();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let a = dirs[rng.gen_range(0..dirs.len())];
            let b = dirs[rng.gen_range(0..dirs.len())];
            let s: Vec4 = std::array::from_fn(|i| a[i] + b[i]);
            let n = norm(&s);
            if n < 1e-8 {
                continue;
            }
            let lhs = n * self.support(&normalize(&s));
            worst = worst.max(lhs - self.support(&a) - self.support(&b));
        }
        worst
    }
}

/// Signed distance to an axis-aligned ellipsoid. The nearest boundary point
/// is y_i = r_i² q_i/(r_i² + λ) with q = x − c and λ the root of
/// φ(λ) = Σ (r_i q_i/(r_i² + λ))² − 1, which is decreasing on (−r_min², ∞).
fn ellipsoid_margin(center: &Vec4, radii: &Vec4, x: &Vec4) -> f64 {
    let q: Vec4 = std::array::from_fn(|i| x[i] - center[i]);
    let phi = |l: f64| (0..4).map(|i| (radii[i] * q[i] / (radii[i] * radii[i] + l)).powi(2)).sum::<f64>() - 1.0;
    let dist = |l: f64| {
        let d: Vec4 = std::array::from_fn(|i| q[i] * l / (radii[i] * radii[i] + l));
        norm(&d)
    };
    let s: f64 = (0..4).map(|i| (q[i] / radii[i]).powi(2)).sum();
    let rmin2 = radii.iter().fold(f64::INFINITY, |m, r| m.min(r * r));
    if s >= 1.0 {
        let mut hi = rmin2.max(1.0);
        while phi(hi) > 0.0 {
            hi *= 2.0;
        }
        return -dist(bisect(&phi, 0.0, hi));
    }
    let lo = -rmin2;
    if phi(lo * (1.0 - 1e-15)) > 0.0 {
        return dist(bisect(&phi, lo, 0.0));
    }
    // q vanishes along the shortest axes: the nearest point leaves that
    // coordinate plane with λ = −r_min².
    let mut off = 0.0;
    let mut d2 = 0.0;
    for i in 0..4 {
        let r2 = radii[i] * radii[i];
        if r2 > rmin2 {
            let y = r2 * q[i] / (r2 - rmin2);
            off += (y / radii[i]).powi(2);
            d2 += (q[i] - y).powi(2);
        } else {
            d2 += q[i] * q[i];
        }
    }
    (d2 + rmin2 * (1.0 - off).max(0.0)).sqrt()
}

/// Root of a decreasing function on [lo, hi] to full precision.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Signed distance for the cone hull by minimizing over the meridian circle
/// θ = (sin φ·ê, cos φ) through x, where ê is the direction of (x₁, x₂, x₃).
fn cone_margin(height: f64, radius: f64, x: &Vec4) -> f64 {
    let rho = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let z = x[3];
    let g = |phi: f64| {
        let (s, c) = phi.sin_cos();
        (height * c + radius).max(0.0) - rho * s - z * c
    };
    const N: usize = 720;
    let dphi = 2.0 * PI / N as f64;
    let samples: Vec<f64> = (0..N).map(|k| g(-PI + k as f64 * dphi)).collect();
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]));
    let mut best = samples[order[0]];
    for &k in order.iter().take(3) {
        let mid = -PI + k as f64 * dphi;
        best = best.min(golden(&g, mid - dphi, mid + dphi));
    }
    // the kink where the support switches to the apex
    let kink = (-radius / height).acos();
    for phi in [kink, -kink] {
        best = best.min(g(phi));
    }
    best
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..90 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// (1−t)·b1 + t·omega. The endpoints return clones of the inputs; interior
/// t gives an exact combination whose sampled support is the pointwise
/// convex combination on the grid.
pub fn minkowski_interpolate(b1: &ConvexBody, omega: &ConvexBody, t: f64) -> Result<ConvexBody> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Argument(format!("t = {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(b1.clone());
    }
    if t == 1.0 {
        return Ok(omega.clone());
    }
    let grid = b1.grid_size.max(omega.grid_size);
    if b1.is_sampled() || omega.is_sampled() {
        if b1.grid_size != omega.grid_size {
            return Err(Error::Argument("sampled bodies must share a direction grid".into()));
        }
        let (h1, h2) = (b1.sampled_support(), omega.sampled_support());
        let values = h1.iter().zip(&h2).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        return ConvexBody::new(BodyKind::Sampled { values }, grid);
    }
    ConvexBody::new(
        BodyKind::Combination {
            parts: vec![
                WeightedBody { weight: 1.0 - t, body: b1.clone() },
                WeightedBody { weight: t, body: omega.clone() },
            ],
        },
        grid,
    )
}

/// Hull of the origin and B((0,0,0,center_height), radius), which must sit
/// strictly inside the cone |x₁₂₃| < a·x₄.
pub fn cone_hull_body(a: f64, center_height: f64, radius: f64) -> Result<ConvexBody> {
    ConvexBody::new(BodyKind::ConeHull { a, center_height, radius }, DEFAULT_GRID_SIZE)
}

pub fn in_strip(body: &ConvexBody, x: &Vec4, strip: &StripSpec) -> Result<bool> {
    let d = body.margin(x);
    if d < 0.0 {
        return Err(Error::Domain(format!("point {x:?} lies outside the body (margin {d:e})")));
    }
    Ok(d > 0.0 && d <= strip.epsilon)
}
