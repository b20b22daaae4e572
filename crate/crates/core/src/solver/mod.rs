//! Damped Newton solver for the real form of the complex Monge–Ampère
//! Dirichlet problem on ℂ² ≅ ℝ⁴ (x = (x₁, x₂, y₁, y₂)):
//!
//!   (u₁₁ + u₃₃)(u₂₂ + u₄₄) − (u₁₂ + u₃₄)² − (u₁₄ − u₂₃)² = 16ψ,  u = 0 on ∂Ω.
//!
//! Second differences along the twelve stencil lines use Shortley–Weller
//! weights, so every line is exact on quadratics, including at cut nodes.
//! Mixed entries come from the diagonal lines: H_ij = (Q_{e_i+e_j} − Q_{e_i−e_j})/4.

pub mod grid;
pub mod sparse;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_bodies::{norm, Vec4};
use crate::error::{Error, Result};
use crate::report::{CertificateReport, CheckEntry};

pub use grid::{discretize, discretize_with_floor, Grid4, NodeClass, DEFAULT_FRACTION_FLOOR, N_LINES, NO_NODE};
pub use sparse::{bicgstab, Csr, LinearStats};

pub const DEFAULT_MAX_NEWTON: usize = 30;
pub const LINEAR_TOL: f64 = 1e-10;
pub const DAMPING_FLOOR: f64 = 1.0 / 1048576.0;
pub const HEURISTIC_RELAXATION: f64 = 10.0;

/// Values at the unknowns (interior and cut nodes) of a grid, in unknown order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &Grid4) -> Self {
        Self { values: vec![0.0; grid.n_unknowns()] }
    }

    /// Samples `f` at every unknown.
    pub fn from_fn(grid: &Grid4, f: impl Fn(&Vec4) -> f64 + Sync) -> Self {
        Self { values: grid.nodes.par_iter().map(|&k| f(&grid.position(k))).collect() }
    }

    /// Value at a node index; boundary, snapped and exterior nodes read 0.
    pub fn at_node(&self, grid: &Grid4, node: usize) -> f64 {
        match grid.unknown_of[node] {
            NO_NODE => 0.0,
            j => self.values[j as usize],
        }
    }

    /// Full node array in node-index order, zero off the unknowns.
    pub fn to_full(&self, grid: &Grid4) -> Vec<f64> {
        (0..grid.n_nodes()).map(|k| self.at_node(grid, k)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// heuristic exactly when the body has a boundary vertex
    #[default]
    Auto,
    Standard,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Max-norm residual target; None means 1e−8·16ψ.
    pub tol: Option<f64>,
    pub max_newton: usize,
    pub mode: SolveMode,
    pub linear_tol: f64,
    pub max_linear_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: None,
            max_newton: DEFAULT_MAX_NEWTON,
            mode: SolveMode::Auto,
            linear_tol: LINEAR_TOL,
            max_linear_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Max-norm residual before the first step and after every accepted step.
    pub residual_history: Vec<f64>,
    /// Total number of step halvings.
    pub damping_steps: usize,
    pub step_lengths: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub initial_psh_violations: usize,
    pub psh_violations: usize,
    pub tol: f64,
    pub heuristic: bool,
    pub converged: bool,
    pub unknowns: usize,
    pub cut_nodes: usize,
    /// Kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Second differences along the twelve lines at one unknown, plus the
/// (backward, centre, forward) weights that produced them.
fn line_data(grid: &Grid4, u: &[f64], j: usize) -> ([f64; N_LINES], [[f64; 3]; N_LINES]) {
    let h2 = grid.h * grid.h;
    let s = &grid.stencils[j];
    let u0 = u[j];
    let mut q = [0.0; N_LINES];
    let mut w = [[0.0; 3]; N_LINES];
    for l in 0..N_LINES {
        let (bk, fw) = s.arms[l];
        let (tl, tr) = (bk.frac, fw.frac);
        let ul = if bk.is_boundary() { 0.0 } else { u[bk.node as usize] };
        let ur = if fw.is_boundary() { 0.0 } else { u[fw.node as usize] };
        let wl = 2.0 / (tl * (tl + tr) * h2);
        let wr = 2.0 / (tr * (tl + tr) * h2);
        w[l] = [wl, -(wl + wr), wr];
        q[l] = wl * ul - (wl + wr) * u0 + wr * ur;
    }
    (q, w)
}

/// (a, b, c, d) with a = u₁₁+u₃₃, b = u₂₂+u₄₄, c = u₁₂+u₃₄, d = u₁₄−u₂₃.
#[inline]
fn abcd(q: &[f64; N_LINES]) -> [f64; 4] {
    let h01 = (q[4] - q[5]) / 4.0;
    let h23 = (q[6] - q[7]) / 4.0;
    let h03 = (q[8] - q[9]) / 4.0;
    let h12 = (q[10] - q[11]) / 4.0;
    [q[0] + q[2], q[1] + q[3], h01 + h23, h03 - h12]
}

#[inline]
fn ma(p: [f64; 4]) -> f64 {
    p[0] * p[1] - p[2] * p[2] - p[3] * p[3]
}

/// ∂M/∂Q_l for each line.
fn line_partials(p: [f64; 4]) -> [f64; N_LINES] {
    let [a, b, c, d] = p;
    let hc = c / 2.0;
    let hd = d / 2.0;
    [b, a, b, a, -hc, hc, -hc, hc, -hd, hd, hd, -hd]
}

/// Discrete Hessian entries [H00, H11, H22, H33, H01, H23, H03, H12] at an unknown.
pub fn discrete_hessian_entries(grid: &Grid4, u: &GridField, j: usize) -> [f64; 8] {
    let (q, _) = line_data(grid, &u.values, j);
    [q[0], q[1], q[2], q[3], (q[4] - q[5]) / 4.0, (q[6] - q[7]) / 4.0, (q[8] - q[9]) / 4.0, (q[10] - q[11]) / 4.0]
}

/// Left side minus 16ψ at every unknown.
pub fn ma_residual_field(grid: &Grid4, u: &GridField, psi: f64) -> GridField {
    let target = 16.0 * psi;
    let values = (0..grid.n_unknowns())
        .into_par_iter()
        .map(|j| ma(abcd(&line_data(grid, &u.values, j).0)) - target)
        .collect();
    GridField { values }
}

/// Unknowns where the discrete complex Hessian fails u₁₁̄ > 0 or det > 0.
pub fn psh_violations(grid: &Grid4, u: &GridField) -> usize {
    (0..grid.n_unknowns())
        .into_par_iter()
        .filter(|&j| {
            let p = abcd(&line_data(grid, &u.values, j).0);
            !(p[0] > 0.0 && ma(p) > 0.0)
        })
        .count()
}

fn jacobian(grid: &Grid4, u: &[f64]) -> Csr {
    let rows = (0..grid.n_unknowns())
        .into_par_iter()
        .map(|j| {
            let (q, w) = line_data(grid, u, j);
            let k = line_partials(abcd(&q));
            let s = &grid.stencils[j];
            let mut row = Vec::with_capacity(2 * N_LINES + 1);
            let mut diag = 0.0;
            for l in 0..N_LINES {
                diag += k[l] * w[l][1];
                let (bk, fw) = s.arms[l];
                if !bk.is_boundary() {
                    row.push((bk.node, k[l] * w[l][0]));
                }
                if !fw.is_boundary() {
                    row.push((fw.node, k[l] * w[l][2]));
                }
            }
            row.push((j as u32, diag));
            row
        })
        .collect();
    Csr::from_rows(rows)
}

/// Discrete Poisson problem Δu = 8√ψ with zero boundary data.
pub fn poisson_guess(grid: &Grid4, psi: f64, rtol: f64, max_iter: usize) -> Result<(GridField, LinearStats)> {
    let rows = (0..grid.n_unknowns()).into_par_iter().map(|j| poisson_row(grid, j)).collect();
    let a = Csr::from_rows(rows);
    let rhs = vec![8.0 * psi.sqrt(); grid.n_unknowns()];
    let (x, st) = bicgstab(&a, &rhs, rtol, max_iter)?;
    Ok((GridField { values: x }, st))
}

fn poisson_row(grid: &Grid4, j: usize) -> Vec<(u32, f64)> {
    let h2 = grid.h * grid.h;
    let s = &grid.stencils[j];
    let mut row = Vec::with_capacity(9);
    let mut diag = 0.0;
    for l in 0..4 {
        let (bk, fw) = s.arms[l];
        let (tl, tr) = (bk.frac, fw.frac);
        let wl = 2.0 / (tl * (tl + tr) * h2);
        let wr = 2.0 / (tr * (tl + tr) * h2);
        diag -= wl + wr;
        if !bk.is_boundary() {
            row.push((bk.node, wl));
        }
        if !fw.is_boundary() {
            row.push((fw.node, wr));
        }
    }
    row.push((j as u32, diag));
    row
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Damped Newton from the Poisson initial guess.
pub fn newton_solve(grid: &Grid4, psi: f64, config: &SolverConfig) -> Result<(GridField, SolveReport)> {
    if !(psi > 0.0) || !psi.is_finite() {
        return Err(Error::Argument(format!("psi = {psi} must be positive")));
    }
    if config.max_newton == 0 {
        return Err(Error::Argument("max_newton must be at least 1".into()));
    }
    let start = Instant::now();
    let heuristic = match config.mode {
        SolveMode::Auto => grid.body.has_vertex(),
        SolveMode::Standard => false,
        SolveMode::Heuristic => true,
    };
    let relax = if heuristic { HEURISTIC_RELAXATION } else { 1.0 };
    let tol = config.tol.unwrap_or(1e-8 * 16.0 * psi) * relax;
    let ltol = config.linear_tol * relax;

    let mut report = SolveReport {
        tol,
        heuristic,
        unknowns: grid.n_unknowns(),
        cut_nodes: grid.count(NodeClass::Cut),
        ..Default::default()
    };

    let (mut u, st) = poisson_guess(grid, psi, ltol, config.max_linear_iter)?;
    report.linear_iterations.push(st.iterations);
    let mut r = ma_residual_field(grid, &u, psi);
    let mut rmax = max_abs(&r.values);
    let mut psh = psh_violations(grid, &u);
    report.initial_psh_violations = psh;
    report.residual_history.push(rmax);

    while rmax > tol {
        if report.iterations >= config.max_newton {
            report.psh_violations = psh;
            report.wall_time_s = start.elapsed().as_secs_f64();
            return Err(Error::NonConvergence {
                reason: format!("{} Newton steps left residual {rmax:.3e} above {tol:.3e}", config.max_newton),
                report: Box::new(report),
            });
        }
        let jac = jacobian(grid, &u.values);
        let rhs: Vec<f64> = r.values.iter().map(|x| -x).collect();
        let (delta, st) = bicgstab(&jac, &rhs, ltol, config.max_linear_iter)?;
        report.linear_iterations.push(st.iterations);

        let mut lambda = 1.0;
        let mut psh_blocked;
        loop {
            let trial = GridField {
                values: u.values.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect(),
            };
            let rt = ma_residual_field(grid, &trial, psi);
            let rt_max = max_abs(&rt.values);
            let decreased = rt_max < rmax;
            let trial_psh = if decreased { psh_violations(grid, &trial) } else { usize::MAX };
            if decreased && trial_psh <= psh {
                u = trial;
                r = rt;
                rmax = rt_max;
                psh = trial_psh;
                break;
            }
            psh_blocked = decreased;
            lambda *= 0.5;
            report.damping_steps += 1;
            if lambda < DAMPING_FLOOR {
                report.psh_violations = psh;
                report.wall_time_s = start.elapsed().as_secs_f64();
                let reason = format!("damping floor 2^-20 reached at residual {rmax:.3e}");
                return Err(if psh_blocked {
                    Error::EllipticityLoss { reason, report: Box::new(report) }
                } else {
                    Error::NonConvergence { reason, report: Box::new(report) }
                });
            }
        }
        report.iterations += 1;
        report.step_lengths.push(lambda);
        report.residual_history.push(rmax);
    }
    report.converged = true;
    report.psh_violations = psh;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((u, report))
}

/// u = |x|² − 1 solves the problem on the unit ball with ψ = 1.
pub fn exact_ball_solution(x: &Vec4) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>() - 1.0
}

/// v = −√(−u/2) for the ball solution.
pub fn exact_ball_v(x: &Vec4) -> f64 {
    -(-exact_ball_solution(x) / 2.0).max(0.0).sqrt()
}

/// Comparison barrier w = (A/2)(x₁² + x₂² + y₁² − a²y₂²).
pub fn comparison_barrier(x: &Vec4, a: f64, big_a: f64) -> f64 {
    0.5 * big_a * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - a * a * x[3] * x[3])
}

/// Checks w ≤ u at every unknown; the tolerance is 1e−3·‖u‖∞.
pub fn comparison_check(grid: &Grid4, u: &GridField, a: f64, big_a: f64) -> CertificateReport {
    let mut rep = CertificateReport::new("comparison");
    let sup = u.sup_norm();
    let (worst, at) = grid
        .nodes
        .iter()
        .zip(&u.values)
        .map(|(&k, &uk)| (comparison_barrier(&grid.position(k), a, big_a) - uk, k))
        .fold((f64::NEG_INFINITY, 0), |m, e| if e.0 > m.0 { e } else { m });
    let worst = worst.max(0.0);
    rep.push(CheckEntry::at_most("normalization", (2.0 * big_a * big_a * (1.0 - a * a) - 1.0).abs(), 1e-12));
    rep.push(
        CheckEntry::at_most("worst_violation", worst, 1e-3 * sup)
            .with_note(format!("node {at} of {}; sup|u| = {sup:.6e}", u.values.len())),
    );
    rep
}

/// Multilinear interpolation of u; zero on non-unknown corners.
pub fn interpolate(grid: &Grid4, u: &GridField, x: &Vec4) -> Result<f64> {
    if grid.body.margin(x) < -1e-12 {
        return Err(Error::Domain(format!("{x:?} lies outside the body")));
    }
    let mut base = [0usize; 4];
    let mut frac = [0.0; 4];
    for a in 0..4 {
        let s = x[a] / grid.h - grid.offset[a] as f64;
        let i = s.floor();
        if i < 0.0 || i as usize + 1 >= grid.dims[a] {
            return Err(Error::Domain(format!("{x:?} lies outside the grid support")));
        }
        base[a] = i as usize;
        frac[a] = s - i;
    }
    let mut acc = 0.0;
    for corner in 0..16usize {
        let mut c = base;
        let mut w = 1.0;
        for a in 0..4 {
            if corner >> a & 1 == 1 {
                c[a] += 1;
                w *= frac[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if w != 0.0 {
            acc += w * u.at_node(grid, grid.index(c));
        }
    }
    Ok(acc)
}

pub const DECAY_T: [f64; 5] = [0.5, 0.4, 0.3, 0.2, 0.1];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub exponent: f64,
    pub alpha: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    /// t^{−1/α}·|u(tz)|
    pub scaled: Vec<f64>,
    /// scaled strictly decreases as t decreases
    pub scaled_decreasing: bool,
}

/// Least-squares slope of log|f| against log t.
pub fn fit_exponent(t: &[f64], f: &[f64]) -> f64 {
    let xs: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = f.iter().map(|v| v.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Decay of |u(tz)| as t → 0 along the segment from the origin to z.
pub fn decay_probe(grid: &Grid4, u: &GridField, z: &Vec4, alpha: f64) -> Result<DecayProbe> {
    if !(alpha > 0.0) {
        return Err(Error::Argument(format!("alpha = {alpha} must be positive")));
    }
    if norm(z) == 0.0 || grid.body.margin(z) < 0.0 {
        return Err(Error::Domain(format!("z = {z:?} is not in the body")));
    }
    let mut vals = Vec::with_capacity(DECAY_T.len());
    for &t in &DECAY_T {
        let x = z.map(|c| t * c);
        let v = interpolate(grid, u, &x)?;
        if v == 0.0 {
            return Err(Error::Domain(format!("u vanishes at t = {t}")));
        }
        vals.push(v);
    }
    let scaled: Vec<f64> = DECAY_T.iter().zip(&vals).map(|(t, v)| t.powf(-1.0 / alpha) * v.abs()).collect();
    Ok(DecayProbe {
        exponent: fit_exponent(&DECAY_T, &vals),
        alpha,
        t: DECAY_T.to_vec(),
        scaled_decreasing: scaled.windows(2).all(|w| w[1] < w[0]),
        u: vals,
        scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_bodies::ConvexBody;

    #[test]
    fn ball_grid_volume_fraction() {
        let g = discretize(&ConvexBody::unit_ball(), 1.0 / 6.0).unwrap();
        let inside = g.class.iter().filter(|&&c| c != NodeClass::Exterior).count() as f64;
        // box [-1,1]^4 holds (2/h)^4 unit cells, one lattice point each
        let box_nodes = 12f64.powi(4);
        let want = std::f64::consts::PI.powi(2) / 2.0 / 16.0 * box_nodes;
        assert!((inside - want).abs() / want < 0.1, "{inside} vs {want}");
        let o = g.node_at(&[0.0; 4]).unwrap();
        assert_eq!(g.class[o], NodeClass::Interior);
        assert!(g.min_fraction() > 0.0 && g.min_fraction() <= 1.0);
    }

    #[test]
    fn zero_field_residual_is_constant() {
        let g = discretize(&ConvexBody::unit_ball(), 0.25).unwrap();
        let r = ma_residual_field(&g, &GridField::zeros(&g), 0.7);
        assert!(r.values.iter().all(|&x| x == -16.0 * 0.7));
    }

    #[test]
    fn exact_quadratic_has_zero_residual() {
        let g = discretize(&ConvexBody::unit_ball(), 0.2).unwrap();
        let u = GridField::from_fn(&g, exact_ball_solution);
        let r = ma_residual_field(&g, &u, 1.0);
        assert!(max_abs(&r.values) < 1e-9, "{}", max_abs(&r.values));
    }

    #[test]
    fn ball_solve_small() {
        let g = discretize(&ConvexBody::unit_ball(), 0.25).unwrap();
        let (u, rep) = newton_solve(&g, 1.0, &SolverConfig::default()).unwrap();
        assert!(rep.converged && !rep.heuristic);
        let exact = GridField::from_fn(&g, exact_ball_solution);
        assert!(u.max_abs_diff(&exact) < 1e-8);
    }

    #[test]
    fn psi_zero_rejected() {
        let g = discretize(&ConvexBody::unit_ball(), 0.25).unwrap();
        assert!(matches!(newton_solve(&g, 0.0, &SolverConfig::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn barrier_values() {
        let a: f64 = 0.5;
        let big_a = 1.0 / (2.0 * (1.0 - a * a)).sqrt();
        let t = 0.3;
        let w = comparison_barrier(&[0.0, 0.0, 0.0, t], a, big_a);
        assert!((w + big_a * a * a * t * t / 2.0).abs() < 1e-15);
        assert!(comparison_barrier(&[a * 0.6, a * 0.8, 0.0, 1.0], a, big_a).abs() < 1e-15);
    }
}
