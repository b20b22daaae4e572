//! Audit of the power transform v = −√(−u/2) of a solved field: Hessians,
//! eigenvalues and rank over the domain, the boundary strip, the α-probe and
//! the deformation sweep from the unit ball.
//!
//! Derivatives are taken of u (smooth up to the boundary) and pushed through
//! the chain rule: v_i = −u_i/(4v), v_ij = −(u_ij + 4v_iv_j)/(4v).

use rayon::prelude::*;
use serde::Serialize;

use crate::convex_bodies::{in_strip, minkowski_interpolate, ConvexBody, StripSpec, Vec4};
use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::solver::{discretize, newton_solve, Grid4, GridField, NodeClass, SolveReport, SolverConfig};

pub const DEFAULT_RANK_TOL: f64 = 1e-6;
/// Audited nodes have only interior nodes within this Euclidean index radius.
pub const COLLAR: i32 = 2;

/// v = −√(−u/2) at every unknown.
pub fn v_field(grid: &Grid4, u: &GridField) -> Result<GridField> {
    let mut out = Vec::with_capacity(u.values.len());
    for (j, &x) in u.values.iter().enumerate() {
        if !(x < 0.0) {
            return Err(Error::Domain(format!(
                "u = {x:e} is not negative at node {} ({:?})",
                grid.nodes[j],
                grid.position(grid.nodes[j])
            )));
        }
        out.push(-(-x / 2.0).sqrt());
    }
    Ok(GridField { values: out })
}

/// Interior nodes farther than COLLAR·h from every cut, snapped or exterior node.
pub fn audited_nodes(grid: &Grid4) -> Vec<usize> {
    let r = COLLAR;
    let w = 2 * r + 1;
    let offsets: Vec<[i32; 4]> = (0..w.pow(4))
        .map(|m| [m / (w * w * w) - r, m / (w * w) % w - r, m / w % w - r, m % w - r])
        .filter(|o| o.iter().map(|c| c * c).sum::<i32>() <= r * r)
        .collect();
    grid.nodes
        .par_iter()
        .copied()
        .filter(|&k| {
            grid.class[k] == NodeClass::Interior
                && offsets
                    .iter()
                    .all(|o| grid.shifted(k, *o).is_some_and(|n| grid.class[n] == NodeClass::Interior))
        })
        .collect()
}

/// Central-difference value, gradient and Hessian of u at a node.
pub fn u_jet_at(grid: &Grid4, u: &GridField, node: usize) -> Result<(f64, [f64; 4], SymmetricMatrix)> {
    let h = grid.h;
    let val = |step: [i32; 4]| -> Result<f64> {
        let n = grid
            .shifted(node, step)
            .ok_or_else(|| Error::Stencil(format!("stencil of node {node} leaves the grid")))?;
        match grid.class[n] {
            NodeClass::Interior | NodeClass::Cut => Ok(u.at_node(grid, n)),
            _ => Err(Error::Stencil(format!("stencil of node {node} reaches boundary node {n}"))),
        }
    };
    let e = |i: usize, s: i32| -> [i32; 4] {
        let mut v = [0; 4];
        v[i] = s;
        v
    };
    let add = |a: [i32; 4], b: [i32; 4]| -> [i32; 4] { std::array::from_fn(|k| a[k] + b[k]) };
    let u0 = val([0; 4])?;
    let mut g = [0.0; 4];
    let mut hess = SymmetricMatrix::zeros(4);
    for i in 0..4 {
        let (p, m) = (val(e(i, 1))?, val(e(i, -1))?);
        g[i] = (p - m) / (2.0 * h);
        hess.set(i, i, (p - 2.0 * u0 + m) / (h * h));
        for j in i + 1..4 {
            let pp = val(add(e(i, 1), e(j, 1)))?;
            let pm = val(add(e(i, 1), e(j, -1)))?;
            let mp = val(add(e(i, -1), e(j, 1)))?;
            let mm = val(add(e(i, -1), e(j, -1)))?;
            hess.set(i, j, (pp - pm - mp + mm) / (4.0 * h * h));
        }
    }
    Ok((u0, g, hess))
}

/// ∇²v from the u-jet; u must be negative.
pub fn v_hessian_from_u(u0: f64, g: &[f64; 4], hu: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if !(u0 < 0.0) {
        return Err(Error::Domain(format!("u = {u0:e} is not negative")));
    }
    let v = -(-u0 / 2.0).sqrt();
    let vg: Vec<f64> = g.iter().map(|gi| -gi / (4.0 * v)).collect();
    Ok(SymmetricMatrix::from_fn(4, |i, j| -(hu.get(i, j) + 4.0 * vg[i] * vg[j]) / (4.0 * v)))
}

pub fn hessian_v_at(grid: &Grid4, u: &GridField, node: usize) -> Result<SymmetricMatrix> {
    let (u0, g, hu) = u_jet_at(grid, u, node)?;
    v_hessian_from_u(u0, &g, &hu)
}

/// Count of eigenvalues above rank_tol·λ_max.
pub fn numerical_rank(eigenvalues: &[f64], rank_tol: f64) -> usize {
    let lmax = eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    if !(lmax > 0.0) {
        return 0;
    }
    eigenvalues.iter().filter(|&&x| x > rank_tol * lmax).count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankNode {
    pub node: usize,
    pub position: Vec4,
    /// ascending
    pub eigenvalues: [f64; 4],
    pub rank: usize,
    pub in_strip: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankSummary {
    pub audited: usize,
    pub rank_tol: f64,
    pub epsilon: f64,
    pub min_rank: usize,
    pub max_rank: usize,
    /// audited nodes per rank 0..=4
    pub rank_counts: [usize; 5],
    pub constant_rank: bool,
    pub min_eigenvalue: f64,
    pub strip_nodes: usize,
    pub min_strip_eigenvalue: Option<f64>,
    /// nodes skipped because the stencil or transform was undefined
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankMap {
    pub nodes: Vec<RankNode>,
    pub summary: RankSummary,
}

pub fn rank_map(grid: &Grid4, u: &GridField, rank_tol: f64, strip: &StripSpec) -> RankMap {
    let audited = audited_nodes(grid);
    let per: Vec<Option<RankNode>> = audited
        .par_iter()
        .map(|&k| {
            let hv = hessian_v_at(grid, u, k).ok()?;
            let ev = hv.eigenvalues();
            let eigenvalues = [ev[0], ev[1], ev[2], ev[3]];
            let x = grid.position(k);
            Some(RankNode {
                node: k,
                position: x,
                eigenvalues,
                rank: numerical_rank(&eigenvalues, rank_tol),
                in_strip: in_strip(&grid.body, &x, strip).unwrap_or(false),
            })
        })
        .collect();
    let skipped = per.iter().filter(|p| p.is_none()).count();
    let nodes: Vec<RankNode> = per.into_iter().flatten().collect();
    let mut rank_counts = [0usize; 5];
    for n in &nodes {
        rank_counts[n.rank] += 1;
    }
    let min_rank = nodes.iter().map(|n| n.rank).min().unwrap_or(0);
    let max_rank = nodes.iter().map(|n| n.rank).max().unwrap_or(0);
    let min_eigenvalue = nodes.iter().map(|n| n.eigenvalues[0]).fold(f64::INFINITY, f64::min);
    let strip_eigs: Vec<f64> = nodes.iter().filter(|n| n.in_strip).map(|n| n.eigenvalues[0]).collect();
    let summary = RankSummary {
        audited: nodes.len(),
        rank_tol,
        epsilon: strip.epsilon,
        min_rank,
        max_rank,
        rank_counts,
        constant_rank: !nodes.is_empty() && min_rank == max_rank,
        min_eigenvalue,
        strip_nodes: strip_eigs.len(),
        min_strip_eigenvalue: strip_eigs.iter().copied().reduce(f64::min),
        skipped,
    };
    RankMap { nodes, summary }
}

/// Minimum λ_min(∇²v) over strip nodes.
pub fn strip_audit(map: &RankMap) -> Result<f64> {
    map.summary.min_strip_eigenvalue.ok_or_else(|| {
        Error::Resolution(format!("no audited node in the strip of width {}", map.summary.epsilon))
    })
}

/// Minimum eigenvalue of ∇²(−(−u)^α) over audited nodes.
pub fn alpha_probe(grid: &Grid4, u: &GridField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha = {alpha} outside (0, 1)")));
    }
    let mins: Vec<f64> = audited_nodes(grid)
        .par_iter()
        .filter_map(|&k| {
            let (u0, g, hu) = u_jet_at(grid, u, k).ok()?;
            if !(u0 < 0.0) {
                return None;
            }
            let m = -u0;
            let c1 = alpha * m.powf(alpha - 1.0);
            let c2 = alpha * (1.0 - alpha) * m.powf(alpha - 2.0);
            let gh = SymmetricMatrix::from_fn(4, |i, j| c1 * hu.get(i, j) + c2 * g[i] * g[j]);
            Some(gh.eigenvalues()[0])
        })
        .collect();
    mins.into_iter()
        .reduce(f64::min)
        .ok_or_else(|| Error::Resolution("no audited node for the alpha probe".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepStep {
    pub t: f64,
    pub body_kind: String,
    pub report: Option<SolveReport>,
    pub rank_map: Option<RankMap>,
    pub min_strip_eigenvalue: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub field: Option<GridField>,
}

impl SweepStep {
    /// Rank 4 at every audited node and a positive strip minimum.
    pub fn ok(&self) -> bool {
        match (&self.rank_map, self.min_strip_eigenvalue) {
            (Some(m), Some(s)) => m.summary.audited > 0 && m.summary.min_rank == 4 && m.summary.constant_rank && s > 0.0,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub steps: usize,
    pub passed_steps: usize,
    pub nonconstant_rank_findings: usize,
    pub failed_t: Vec<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub steps: Vec<SweepStep>,
    pub summary: SweepSummary,
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub solver: SolverConfig,
    pub rank_tol: f64,
    /// strip width in units of h
    pub strip_factor: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), rank_tol: DEFAULT_RANK_TOL, strip_factor: 4.0 }
    }
}

/// Solve and audit on Ω_t = (1 − t)B₁ + tΩ for each t; failures are recorded
/// per step and the sweep continues.
pub fn deformation_sweep(omega: &ConvexBody, t_values: &[f64], h: f64, psi: f64, cfg: &SweepConfig) -> SweepResult {
    let unit = ConvexBody::unit_ball();
    let mut steps = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let mut step = SweepStep {
            t,
            body_kind: String::new(),
            report: None,
            rank_map: None,
            min_strip_eigenvalue: None,
            error: None,
            field: None,
        };
        let run = (|| -> Result<()> {
            let body = minkowski_interpolate(&unit, omega, t)?;
            step.body_kind = body.kind_name().to_string();
            let grid = discretize(&body, h)?;
            let (u, rep) = newton_solve(&grid, psi, &cfg.solver)?;
            step.report = Some(rep);
            let strip = StripSpec::for_body(cfg.strip_factor * h, &body)?;
            let map = rank_map(&grid, &u, cfg.rank_tol, &strip);
            step.min_strip_eigenvalue = strip_audit(&map).ok();
            step.rank_map = Some(map);
            step.field = Some(u);
            Ok(())
        })();
        if let Err(e) = run {
            step.error = Some(e.to_string());
        }
        steps.push(step);
    }
    let failed_t: Vec<f64> = steps.iter().filter(|s| !s.ok()).map(|s| s.t).collect();
    let nonconstant = steps
        .iter()
        .filter(|s| s.rank_map.as_ref().is_some_and(|m| !m.summary.constant_rank))
        .count();
    SweepResult {
        summary: SweepSummary {
            steps: steps.len(),
            passed_steps: steps.len() - failed_t.len(),
            nonconstant_rank_findings: nonconstant,
            passed: failed_t.is_empty(),
            failed_t,
        },
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::exact_ball_solution;

    #[test]
    fn v_field_examples() {
        let g = discretize(&ConvexBody::unit_ball(), 0.25).unwrap();
        let mut u = GridField::from_fn(&g, |_| -2.0);
        assert!(v_field(&g, &u).unwrap().values.iter().all(|&v| v == -1.0));
        u.values[3] = 0.0;
        assert!(matches!(v_field(&g, &u), Err(Error::Domain(_))));
    }

    #[test]
    fn ball_hessian_closed_form() {
        let g = discretize(&ConvexBody::unit_ball(), 0.125).unwrap();
        let u = GridField::from_fn(&g, exact_ball_solution);
        let o = g.node_at(&[0.0; 4]).unwrap();
        let hv = hessian_v_at(&g, &u, o).unwrap();
        assert!(hv.max_abs_diff(&SymmetricMatrix::identity(4).scaled(std::f64::consts::FRAC_1_SQRT_2)) < 1e-9);
        let k = g.node_at(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        let hv = hessian_v_at(&g, &u, k).unwrap();
        let v = -(0.375f64).sqrt();
        let want = SymmetricMatrix::from_fn(4, |i, j| {
            let xx = if i == 0 && j == 0 { 0.25 / 0.75 } else { 0.0 };
            -1.0 / (2.0 * v) * (if i == j { 1.0 } else { 0.0 } + xx)
        });
        assert!(hv.max_abs_diff(&want) < 1e-9);
    }

    #[test]
    fn synthetic_rank_three() {
        // v affine in y₂ direction only through a constant: v = −1 + |x₁₂₃|²/4
        let g = discretize(&ConvexBody::unit_ball(), 0.125).unwrap();
        let u = GridField::from_fn(&g, |x| {
            let v = -1.0 + (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0;
            -2.0 * v * v
        });
        let o = g.node_at(&[0.0; 4]).unwrap();
        let ev = hessian_v_at(&g, &u, o).unwrap().eigenvalues();
        assert_eq!(numerical_rank(&ev, 1e-6), 3);
    }

    #[test]
    fn alpha_range_checked() {
        let g = discretize(&ConvexBody::unit_ball(), 0.25).unwrap();
        let u = GridField::from_fn(&g, exact_ball_solution);
        assert!(matches!(alpha_probe(&g, &u, 1.0), Err(Error::Argument(_))));
    }
}
