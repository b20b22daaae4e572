//! Exact checks of the constant-rank algebra at degenerate on-shell jets.
//!
//! A rank-r jet has Hessian diag(v₁₁, …, v_rr, 0, …) and F = 0 enforced by
//! solving for v₂₂. At such jets every "modulo φ" relation of the rank
//! argument becomes an identity, so the checks below carry no analytic slack.
//!
//! Third derivatives are passed as the vector X of the quadratic form:
//! rank 2 uses (v₁₁α, v₁₂α, v₂₂α), rank 3 uses
//! (v₁₁₄, v₂₂₄, v₃₃₄, v₁₃₄, v₁₂₄, v₂₃₄).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::congruence::{classify_definiteness, leading_minors, Definiteness, MinorSequence};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SymmetricMatrix};
use crate::ma_operator::{F_derivatives, F_eval, FDerivBundle, Jet2};
use crate::report::{relative, CertificateReport, CheckEntry};

pub const EXACT_TOL: f64 = 1e-12;
pub const FORMULA_TOL: f64 = 1e-10;
pub const CLAIM3_P2_TOL: f64 = 1e-9;
pub const CLAIM3_P3_TOL: f64 = 1e-8;
pub const DEFINITENESS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateJet {
    pub jet: Jet2,
    pub rank_level: u8,
}

impl DegenerateJet {
    fn h(&self, i: usize) -> f64 {
        self.jet.hess.get(i, i)
    }
}

#[derive(Clone, Debug)]
pub struct CertBundle {
    pub matrix: SymmetricMatrix,
    pub minors: MinorSequence,
    pub sub_blocks: Option<(SymmetricMatrix, SymmetricMatrix)>,
    pub residual_table: BTreeMap<String, f64>,
    pub verdict: Definiteness,
}

impl CertBundle {
    fn new(matrix: SymmetricMatrix) -> Self {
        let minors = leading_minors(&matrix);
        let verdict = classify_definiteness(&matrix, DEFINITENESS_TOL);
        Self { matrix, minors, sub_blocks: None, residual_table: BTreeMap::new(), verdict }
    }
}

#[derive(Clone, Debug)]
pub struct BlockReduction {
    pub a1: SymmetricMatrix,
    pub a2: SymmetricMatrix,
    pub transform: DenseMatrix,
    /// Largest entry coupling the two blocks, relative to max |A|.
    pub off_block: f64,
    /// max |C⁻ᵀ(A₁⊕A₂)C⁻¹ − A| relative to max |A|.
    pub reconstruction: f64,
    /// Distance of A₁, A₂ from their closed forms, relative to max |A|.
    pub closed_form: f64,
}

fn solve_v22(v: f64, grad: &[f64; 4], trace_g: f64) -> Result<f64> {
    // v²·t·v22 + v·p·t + v·q·v22 = 1 with t the sum of the other good
    // diagonal entries paired with v22 in Q.
    let p = grad[1] * grad[1] + grad[3] * grad[3];
    let q = grad[0] * grad[0] + grad[2] * grad[2];
    let num = 1.0 - v * p * trace_g;
    let den = v * v * trace_g + v * q;
    let v22 = num / den;
    if !v22.is_finite() || v22 <= 0.0 {
        return Err(Error::Infeasible(format!("solved v22 = {v22:e} is not positive")));
    }
    Ok(v22)
}

fn check_jet_args(v: f64, grad: &[f64; 4], diag: &[f64]) -> Result<()> {
    if !(v < 0.0) {
        return Err(Error::Infeasible(format!("v = {v} must be negative")));
    }
    if grad.iter().any(|g| !g.is_finite()) || diag.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::Infeasible("diagonal entries must be positive and finite".into()));
    }
    Ok(())
}

/// On-shell jet with Hessian diag(v₁₁, v₂₂, v₃₃, 0).
pub fn make_rank3_jet(v: f64, grad: [f64; 4], v11: f64, v33: f64) -> Result<DegenerateJet> {
    check_jet_args(v, &grad, &[v11, v33])?;
    let v22 = solve_v22(v, &grad, v11 + v33)?;
    Ok(DegenerateJet { jet: Jet2::diagonal(v, grad, [v11, v22, v33, 0.0]), rank_level: 3 })
}

/// On-shell jet with Hessian diag(v₁₁, v₂₂, 0, 0).
pub fn make_rank2_jet(v: f64, grad: [f64; 4], v11: f64) -> Result<DegenerateJet> {
    check_jet_args(v, &grad, &[v11])?;
    let v22 = solve_v22(v, &grad, v11)?;
    Ok(DegenerateJet { jet: Jet2::diagonal(v, grad, [v11, v22, 0.0, 0.0]), rank_level: 2 })
}

fn require_rank(d: &DegenerateJet, r: u8) -> Result<()> {
    if d.rank_level != r {
        return Err(Error::Precondition(format!("expected a rank-{r} jet, got rank {}", d.rank_level)));
    }
    Ok(())
}

struct Coef {
    v: f64,
    w: f64,
    f11: f64,
    f22: f64,
    f33: f64,
    f12: f64,
    f23: f64,
}

fn coef(b: &FDerivBundle, v: f64) -> Coef {
    Coef {
        v,
        w: v * b.d_v,
        f11: b.d_h[0][0],
        f22: b.d_h[1][1],
        f33: b.d_h[2][2],
        f12: b.d_h[0][1],
        f23: b.d_h[1][2],
    }
}

fn minor_scale(a: &SymmetricMatrix, k: usize) -> f64 {
    a.max_abs().powi(k as i32)
}

/// The 3×3 matrix of the rank-2 quadratic form in (v₁₁α, v₁₂α, v₂₂α).
pub fn claim1_matrix(djet: &DegenerateJet) -> Result<CertBundle> {
    require_rank(djet, 2)?;
    let b = F_derivatives(&djet.jet);
    let c = coef(&b, djet.jet.v);
    let (v11, v22) = (djet.h(0), djet.h(1));
    let ff = c.f11 * c.f22;
    let a = SymmetricMatrix::from_fn(3, |i, j| match (i, j) {
        (0, 0) => v22 / v11 * ff,
        (0, 1) => c.f12 / v11 * (c.w - 2.0 * c.f11 * v11),
        (0, 2) => -ff,
        (1, 1) => (c.w * c.w - 4.0 * v11 * v22 * c.f12 * c.f12) / (v11 * v22),
        (1, 2) => c.f12 / v22 * (c.w - 2.0 * c.f22 * v22),
        (2, 2) => v11 / v22 * ff,
        _ => unreachable!(),
    });
    let mut bundle = CertBundle::new(a);
    let m = &bundle.minors.minors;
    let p2_formula = c.w * c.w / (v11 * v11) * (c.f11 * c.f22 - c.f12 * c.f12);
    let p3_rel = m[2].abs() / minor_scale(&bundle.matrix, 3);
    let p2_rel = relative(m[1] - p2_formula, &[m[1], p2_formula]);
    let ev = bundle.matrix.eigenvalues();
    let lmax = ev.iter().fold(0.0f64, |x, e| x.max(e.abs()));
    bundle.residual_table.insert("p3_rel".into(), p3_rel);
    bundle.residual_table.insert("p2_formula_rel".into(), p2_rel);
    bundle.residual_table.insert("min_eigen_rel".into(), ev[0] / lmax);
    Ok(bundle)
}

/// Sum with a record of the largest single contribution.
#[derive(Default)]
struct Acc {
    sum: f64,
    max: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        self.sum += x;
        self.max = self.max.max(x.abs());
    }
}

type T3 = [[[f64; 4]; 4]; 4];

fn sym3(t: &mut T3, i: usize, j: usize, k: usize, x: f64) {
    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
        t[a][b][c] = x;
    }
}

/// Second variation of F along the bad direction `alpha`, with v_α
/// eliminated by the once-differentiated equation, plus the curvature term
/// 2Σ_{β good} (1/v_ββ) Σ_ij F^{ij} v_{αβi} v_{αβj}. Third derivatives with two
/// bad indices are taken as zero.
fn raw_second_variation(djet: &DegenerateJet, t: &T3, alpha: usize) -> (f64, f64) {
    let jet = &djet.jet;
    let b = F_derivatives(jet);
    let good = djet.rank_level as usize;
    let hs = jet.hess_array();
    let mut num = Acc::default();
    for i in 0..4 {
        for j in 0..4 {
            num.add(b.d_h[i][j] * t[i][j][alpha]);
        }
    }
    for k in 0..4 {
        num.add(b.d_g[k] * hs[k][alpha]);
    }
    let va = -num.sum / b.d_v;

    let mut acc = Acc::default();
    for i in 0..4 {
        for j in 0..4 {
            let tij = t[i][j][alpha];
            if tij == 0.0 {
                continue;
            }
            for k in 0..4 {
                for l in 0..4 {
                    acc.add(b.d2_hh[i][j][k][l] * tij * t[k][l][alpha]);
                }
                acc.add(2.0 * b.d2_hg[i][j][k] * tij * hs[k][alpha]);
            }
            acc.add(2.0 * b.d2_hv[i][j] * tij * va);
        }
    }
    for k in 0..4 {
        for l in 0..4 {
            acc.add(b.d2_gg[k][l] * hs[k][alpha] * hs[l][alpha]);
        }
        acc.add(2.0 * b.d2_gv[k] * hs[k][alpha] * va);
    }
    acc.add(b.d2_vv * va * va);
    for beta in 0..good {
        for i in 0..4 {
            for j in 0..4 {
                acc.add(2.0 / hs[beta][beta] * b.d_h[i][j] * t[alpha][beta][i] * t[alpha][beta][j]);
            }
        }
    }
    (acc.sum, acc.max)
}

fn equivalence_residual(raw: (f64, f64), a: &SymmetricMatrix, x: &[f64], w: f64) -> f64 {
    let rhs = 2.0 / (w * w) * a.quad_form(x);
    relative(raw.0 - rhs, &[raw.1, rhs])
}

/// Relative gap between the raw second variation and (2/(vFᵛ)²)·XᵀAX.
pub fn rank2_quadratic_equivalence(djet: &DegenerateJet, x: &[f64; 3]) -> Result<f64> {
    require_rank(djet, 2)?;
    let alpha = 2;
    let mut t = [[[0.0; 4]; 4]; 4];
    sym3(&mut t, 0, 0, alpha, x[0]);
    sym3(&mut t, 0, 1, alpha, x[1]);
    sym3(&mut t, 1, 1, alpha, x[2]);
    let raw = raw_second_variation(djet, &t, alpha);
    let a = claim1_matrix(djet)?.matrix;
    let w = djet.jet.v * F_derivatives(&djet.jet).d_v;
    Ok(equivalence_residual(raw, &a, x, w))
}

/// The 6×6 matrix of the rank-3 quadratic form, variable order
/// (v₁₁₄, v₂₂₄, v₃₃₄, v₁₃₄, v₁₂₄, v₂₃₄).
pub fn big_a_matrix(djet: &DegenerateJet) -> Result<CertBundle> {
    require_rank(djet, 3)?;
    let b = F_derivatives(&djet.jet);
    let Coef { v, w, f11, f22, f33, f12, f23 } = coef(&b, djet.jet.v);
    let (v11, v22, v33) = (djet.h(0), djet.h(1), djet.h(2));
    let vv = v * v;
    let ww = w * w;
    let mut a = SymmetricMatrix::zeros(6);
    a.set(0, 0, f11 / v11 * (vv * v22 * v33 * w + f22 * v22 + f33 * v33));
    a.set(0, 1, -f11 * f22);
    a.set(0, 2, -f11 * (vv * v22 * w + f11));
    a.set(0, 4, f12 / v11 * (vv * v22 * v33 * w + w - 2.0 * f11 * v11));
    a.set(0, 5, -f23 * (vv * v22 * w + 2.0 * f11));
    a.set(1, 1, f22 / v22 * (f11 * v11 + f33 * v33));
    a.set(1, 2, -f22 * f33);
    a.set(1, 4, f12 / v22 * (w - 2.0 * f22 * v22));
    a.set(1, 5, f23 / v22 * (w - 2.0 * f22 * v22));
    a.set(2, 2, f33 / v33 * (vv * v11 * v22 * w + f11 * v11 + f22 * v22));
    a.set(2, 4, -f12 * (vv * v22 * w + 2.0 * f33));
    a.set(2, 5, f23 / v33 * (vv * v11 * v22 * w + w - 2.0 * f33 * v33));
    a.set(3, 3, (f33 / v11 + f11 / v33) * ww);
    a.set(3, 4, f23 / v11 * ww);
    a.set(3, 5, f12 / v33 * ww);
    a.set(4, 4, (vv * v22 * v33 + 1.0 - f33 * v33) / (v11 * v22) * ww - 4.0 * f12 * f12);
    a.set(4, 5, -4.0 * f12 * f23);
    a.set(5, 5, (vv * v11 * v22 + 1.0 - f11 * v11) / (v22 * v33) * ww - 4.0 * f23 * f23);
    Ok(CertBundle::new(a))
}

/// Closed forms of the reduced blocks.
fn claim_blocks(djet: &DegenerateJet) -> (SymmetricMatrix, SymmetricMatrix) {
    let b = F_derivatives(&djet.jet);
    let Coef { v, w, f11, f22, f33, f12, f23 } = coef(&b, djet.jet.v);
    let (v11, v22, v33) = (djet.h(0), djet.h(1), djet.h(2));
    let vv = v * v;
    let ww = w * w;
    let a1 = SymmetricMatrix::from_fn(3, |i, j| match (i, j) {
        (0, 0) => f11 / v11 * (vv * v22 * v33 * w + f22 * v22 + f33 * v33),
        (0, 1) => -f11 * f22,
        (0, 2) => -f11 * (vv * v22 * w + f11),
        (1, 1) => f22 / v22 * (f11 * v11 + f33 * v33),
        (1, 2) => -f22 * f33,
        (2, 2) => f33 / v33 * (vv * v11 * v22 * w + f11 * v11 + f22 * v22),
        _ => unreachable!(),
    });
    let b11 = (f11 / v22 + f22 / v11 - vv) * ww
        - ((vv * v22 * v33 + 1.0) / (f11 * v11) + 1.0 / (f22 * v22)) * f12 * f12 * w;
    let b12 = f12 * f23 * (vv * v22 / f11 - 1.0 / (f22 * v22)) * w;
    let b22 = (f22 / v33 + f33 / v22 - vv) * ww
        - (1.0 / (f22 * v22) + (vv * v11 * v22 + 1.0) / (f33 * v33)) * f23 * f23 * w;
    let a2 = SymmetricMatrix::from_fn(3, |i, j| match (i, j) {
        (0, 0) => (f33 / v11 + f11 / v33) * ww,
        (0, 1) => f23 / v11 * ww,
        (0, 2) => f12 / v33 * ww,
        (1, 1) => b11,
        (1, 2) => b12,
        (2, 2) => b22,
        _ => unreachable!(),
    });
    (a1, a2)
}

fn column_op(n: usize, src: usize, dst: usize, f: f64) -> DenseMatrix {
    let mut c = DenseMatrix::identity(n);
    c.set(src, dst, f);
    c
}

/// Clears the coupling between (v₁₁₄, v₂₂₄, v₃₃₄) and (v₁₂₄, v₂₃₄) with four
/// simultaneous column-and-row operations.
pub fn block_reduce(bundle: &CertBundle, djet: &DegenerateJet) -> Result<BlockReduction> {
    require_rank(djet, 3)?;
    if bundle.matrix.n() != 6 {
        return Err(Error::Argument("block reduction needs the 6x6 matrix".into()));
    }
    let b = F_derivatives(&djet.jet);
    let c = coef(&b, djet.jet.v);
    if c.f11 == 0.0 || c.f22 == 0.0 {
        return Err(Error::ReductionUndefined(format!("F11 = {:e}, F22 = {:e}", c.f11, c.f22)));
    }
    let ops = [
        (0, 4, -c.f12 / c.f11),
        (1, 4, -c.f12 / c.f22),
        (2, 5, -c.f23 / c.f11),
        (1, 5, -c.f23 / c.f22),
    ];
    let mut t = DenseMatrix::identity(6);
    let mut tinv = DenseMatrix::identity(6);
    for &(s, d, f) in &ops {
        t = t.mul(&column_op(6, s, d, f));
        tinv = column_op(6, s, d, -f).mul(&tinv);
    }
    let a = &bundle.matrix;
    let scale = a.max_abs();
    let red = a.congruence(&t);
    let mut off = 0.0f64;
    for i in 0..3 {
        for j in 3..6 {
            off = off.max(red.get(i, j).abs());
        }
    }
    let a1 = red.sub_block(&[0, 1, 2]);
    let a2 = red.sub_block(&[3, 4, 5]);
    let mut split = SymmetricMatrix::zeros(6);
    for i in 0..3 {
        for j in 0..3 {
            split.set(i, j, a1.get(i, j));
            split.set(i + 3, j + 3, a2.get(i, j));
        }
    }
    let recon = split.congruence(&tinv);
    let (c1, c2) = claim_blocks(djet);
    let closed = a1.max_abs_diff(&c1).max(a2.max_abs_diff(&c2));
    Ok(BlockReduction {
        a1,
        a2,
        transform: t,
        off_block: off / scale,
        reconstruction: recon.max_abs_diff(a) / scale,
        closed_form: closed / scale,
    })
}

pub fn claim2_check(a1: &SymmetricMatrix, djet: &DegenerateJet) -> CertificateReport {
    let mut rep = CertificateReport::new("claim2");
    if let Err(e) = require_rank(djet, 3) {
        rep.push(CheckEntry::verdict("rank_level", false, e.to_string()));
        return rep;
    }
    let b = F_derivatives(&djet.jet);
    let c = coef(&b, djet.jet.v);
    let (v11, v22, v33) = (djet.h(0), djet.h(1), djet.h(2));
    let m = leading_minors(a1).minors;
    let p2 = c.f11 * c.f11 * c.f22 * v33 / (v11 * v22) * c.w * c.w;
    rep.push(CheckEntry::above("p1_positive", m[0], 0.0));
    rep.push(CheckEntry::at_most("p2_formula_rel", relative(m[1] - p2, &[m[1], p2]), FORMULA_TOL));
    rep.push(CheckEntry::at_most("p3_rel", m[2].abs() / minor_scale(a1, 3), FORMULA_TOL));
    let verdict = classify_definiteness(a1, DEFINITENESS_TOL);
    rep.push(CheckEntry::verdict(
        "semidefinite",
        verdict != Definiteness::Indefinite,
        format!("{verdict:?}"),
    ));
    rep
}

/// Closed form of the third leading minor of A₂.
pub fn claim3_p3_formula(djet: &DegenerateJet) -> f64 {
    let b = F_derivatives(&djet.jet);
    let Coef { v, w, f11, f22, f12, f23, .. } = coef(&b, djet.jet.v);
    let (v11, v22, v33) = (djet.h(0), djet.h(1), djet.h(2));
    let v2 = v * v;
    let v4 = v2 * v2;
    let g = f22 * v22;
    let bracket = v4 * v11 * v33 * g * g
        + v2 * v33 * v33 * g * (v2 + f12 * f12)
        + v2 * v11 * v11 * g * (v2 + f23 * f23)
        + v4 * v11 * v33
        + v2 * v11 * v33 * (f12 * f12 + f23 * f23);
    let vol = v11 * v22 * v33;
    w.powi(6) / ((v11 + v33) * vol * vol * f11 * f22 * f22) * bracket
}

pub fn claim3_check(a2: &SymmetricMatrix, djet: &DegenerateJet) -> CertificateReport {
    let mut rep = CertificateReport::new("claim3");
    if let Err(e) = require_rank(djet, 3) {
        rep.push(CheckEntry::verdict("rank_level", false, e.to_string()));
        return rep;
    }
    let b = F_derivatives(&djet.jet);
    let c = coef(&b, djet.jet.v);
    let (v11, v22, v33) = (djet.h(0), djet.h(1), djet.h(2));
    let m = leading_minors(a2).minors;
    let w4 = c.w.powi(4);
    let p1 = (c.f33 / v11 + c.f11 / v33) * c.w * c.w;
    let p2 = (c.v * c.v + c.f23 * c.f23) / (v11 * v22 * v33 * c.f22) * w4 + c.v * c.v / (v11 * v11) * w4;
    let p3 = claim3_p3_formula(djet);
    rep.push(CheckEntry::at_most("p1_formula_rel", relative(m[0] - p1, &[m[0], p1]), FORMULA_TOL));
    rep.push(CheckEntry::above("p1_positive", m[0], 0.0));
    rep.push(CheckEntry::at_most("p2_formula_rel", relative(m[1] - p2, &[m[1], p2]), CLAIM3_P2_TOL));
    rep.push(CheckEntry::above("p2_positive", m[1], 0.0));
    rep.push(CheckEntry::at_most("p3_formula_rel", relative(m[2] - p3, &[m[2], p3]), CLAIM3_P3_TOL));
    rep.push(CheckEntry::above("p3_positive", m[2], 0.0));
    let verdict = classify_definiteness(a2, DEFINITENESS_TOL);
    rep.push(CheckEntry::verdict(
        "positive_definite",
        verdict == Definiteness::PositiveDefinite,
        format!("{verdict:?}"),
    ));
    rep
}

pub fn rank3_quadratic_equivalence(djet: &DegenerateJet, x: &[f64; 6]) -> Result<f64> {
    require_rank(djet, 3)?;
    let alpha = 3;
    let mut t = [[[0.0; 4]; 4]; 4];
    sym3(&mut t, 0, 0, alpha, x[0]);
    sym3(&mut t, 1, 1, alpha, x[1]);
    sym3(&mut t, 2, 2, alpha, x[2]);
    sym3(&mut t, 0, 2, alpha, x[3]);
    sym3(&mut t, 0, 1, alpha, x[4]);
    sym3(&mut t, 1, 2, alpha, x[5]);
    let raw = raw_second_variation(djet, &t, alpha);
    let a = big_a_matrix(djet)?.matrix;
    let w = djet.jet.v * F_derivatives(&djet.jet).d_v;
    Ok(equivalence_residual(raw, &a, x, w))
}

/// Largest relative residual among F¹¹F²² − (F¹²)² − (F²³)² = v²,
/// vFᵛ = v²(v₁₁+v₃₃)v₂₂ + 1 and vFᵛ = F¹¹v₁₁ + F²²v₂₂ + F³³v₃₃.
pub fn identity_3_40(djet: &DegenerateJet) -> Result<f64> {
    require_rank(djet, 3)?;
    let b = F_derivatives(&djet.jet);
    let c = coef(&b, djet.jet.v);
    let (v11, v22, v33) = (djet.h(0), djet.h(1), djet.h(2));
    let vv = c.v * c.v;
    let (a, p, q) = (c.f11 * c.f22, c.f12 * c.f12, c.f23 * c.f23);
    let r1 = relative(a - p - q - vv, &[a, p, q, vv]);
    let t = vv * (v11 + v33) * v22;
    let r2 = relative(c.w - t - 1.0, &[c.w, t, 1.0]);
    let (t1, t2, t3) = (c.f11 * v11, c.f22 * v22, c.f33 * v33);
    let r3 = relative(c.w - t1 - t2 - t3, &[c.w, t1, t2, t3]);
    Ok(r1.max(r2).max(r3))
}

// ---------------------------------------------------------------------------
// Random suites

pub const SAMPLE_V: (f64, f64) = (-3.0, -0.2);
pub const SAMPLE_GRAD: (f64, f64) = (-1.0, 1.0);
pub const SAMPLE_HESS: (f64, f64) = (0.1, 5.0);
pub const V22_RANGE: (f64, f64) = (1e-3, 1e3);

fn accept(d: &DegenerateJet) -> bool {
    let v22 = d.h(1);
    v22 > V22_RANGE.0 && v22 < V22_RANGE.1 && F_eval(&d.jet).abs() <= EXACT_TOL
}

/// Draws `n` feasible jets of the given rank, rejecting configurations
/// whose solved v₂₂ leaves (1e−3, 1e3).
pub fn sample_jets(rank: u8, n: usize, rng: &mut ChaCha8Rng) -> Vec<DegenerateJet> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = rng.gen_range(SAMPLE_V.0..SAMPLE_V.1);
        let grad: [f64; 4] = std::array::from_fn(|_| rng.gen_range(SAMPLE_GRAD.0..SAMPLE_GRAD.1));
        let v11 = rng.gen_range(SAMPLE_HESS.0..SAMPLE_HESS.1);
        let d = if rank == 2 {
            make_rank2_jet(v, grad, v11)
        } else {
            let v33 = rng.gen_range(SAMPLE_HESS.0..SAMPLE_HESS.1);
            make_rank3_jet(v, grad, v11, v33)
        };
        if let Ok(d) = d {
            if accept(&d) {
                out.push(d);
            }
        }
    }
    out
}

fn random_x<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    std::array::from_fn(|_| rng.gen_range(-1.0..1.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteRow {
    pub index: usize,
    pub v: f64,
    pub grad: [f64; 4],
    pub hess_diag: [f64; 4],
    /// Residuals in a fixed column order, see `SuiteResult::columns`.
    pub values: Vec<f64>,
    pub verdicts: Vec<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub rank_level: u8,
    pub jets: usize,
    pub seed: u64,
    pub x_per_jet: usize,
    /// Column name -> maximum over jets.
    pub max_values: BTreeMap<String, f64>,
    /// Column name -> tolerance.
    pub tolerances: BTreeMap<String, f64>,
    /// Verdict name -> number of jets failing it.
    pub verdict_failures: BTreeMap<String, usize>,
    pub failure_count: usize,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub columns: Vec<&'static str>,
    pub verdict_columns: Vec<&'static str>,
    pub rows: Vec<SuiteRow>,
    pub summary: SuiteSummary,
}

const RANK2_COLS: [(&str, f64); 5] = [
    ("identity_rel", EXACT_TOL),
    ("p3_rel", FORMULA_TOL),
    ("p2_formula_rel", FORMULA_TOL),
    ("equivalence_max", FORMULA_TOL),
    ("neg_min_eigen_rel", DEFINITENESS_TOL),
];

const RANK3_COLS: [(&str, f64); 11] = [
    ("identity_3_40", EXACT_TOL),
    ("off_block", EXACT_TOL),
    ("reconstruction", EXACT_TOL),
    ("closed_form", FORMULA_TOL),
    ("claim2_p2_rel", FORMULA_TOL),
    ("claim2_p3_rel", FORMULA_TOL),
    ("claim3_p1_rel", FORMULA_TOL),
    ("claim3_p2_rel", CLAIM3_P3_TOL),
    ("claim3_p3_rel", CLAIM3_P3_TOL),
    ("equivalence_max", FORMULA_TOL),
    ("zero_entries", 0.0),
];

fn rank2_row(index: usize, d: &DegenerateJet, xs: &[[f64; 3]]) -> Result<SuiteRow> {
    let ident = crate::ma_operator::identity_suite(&d.jet);
    let idmax = ident
        .entries
        .iter()
        .filter(|e| e.kind == crate::report::CheckKind::AtMost)
        .fold(0.0f64, |m, e| m.max(e.value));
    let bundle = claim1_matrix(d)?;
    let mut eq = 0.0f64;
    for x in xs {
        eq = eq.max(rank2_quadratic_equivalence(d, x)?);
    }
    let t = &bundle.residual_table;
    let values = vec![idmax, t["p3_rel"], t["p2_formula_rel"], eq, (-t["min_eigen_rel"]).max(0.0)];
    let verdicts = vec![bundle.verdict != Definiteness::Indefinite];
    Ok(row(index, d, values, verdicts))
}

fn rank3_row(index: usize, d: &DegenerateJet, xs: &[[f64; 6]]) -> Result<SuiteRow> {
    let bundle = big_a_matrix(d)?;
    let red = block_reduce(&bundle, d)?;
    let c2 = claim2_check(&red.a1, d);
    let c3 = claim3_check(&red.a2, d);
    let mut eq = 0.0f64;
    for x in xs {
        eq = eq.max(rank3_quadratic_equivalence(d, x)?);
    }
    let m = &bundle.matrix;
    let zeros = m.get(0, 3).abs().max(m.get(1, 3).abs()).max(m.get(2, 3).abs());
    let val = |r: &CertificateReport, k: &str| r.get(k).map(|e| e.value).unwrap_or(f64::NAN);
    let values = vec![
        identity_3_40(d)?,
        red.off_block,
        red.reconstruction,
        red.closed_form,
        val(&c2, "p2_formula_rel"),
        val(&c2, "p3_rel"),
        val(&c3, "p1_formula_rel"),
        val(&c3, "p2_formula_rel"),
        val(&c3, "p3_formula_rel"),
        eq,
        zeros,
    ];
    let pass = |r: &CertificateReport, k: &str| r.get(k).map(|e| e.passed).unwrap_or(false);
    let verdicts = vec![
        pass(&c2, "p1_positive"),
        pass(&c2, "semidefinite"),
        pass(&c3, "p1_positive") && pass(&c3, "p2_positive") && pass(&c3, "p3_positive"),
        pass(&c3, "positive_definite"),
    ];
    Ok(row(index, d, values, verdicts))
}

fn row(index: usize, d: &DegenerateJet, values: Vec<f64>, verdicts: Vec<bool>) -> SuiteRow {
    let h = d.jet.hess.diagonal();
    SuiteRow { index, v: d.jet.v, grad: d.jet.grad, hess_diag: [h[0], h[1], h[2], h[3]], values, verdicts }
}

fn summarize(
    rank: u8,
    seed: u64,
    x_per_jet: usize,
    cols: &[(&'static str, f64)],
    vcols: &[&'static str],
    rows: Vec<SuiteRow>,
) -> SuiteResult {
    let mut max_values = BTreeMap::new();
    let mut tolerances = BTreeMap::new();
    let mut failures = 0usize;
    for (c, (name, tol)) in cols.iter().enumerate() {
        // NaN propagates as a failure.
        let m = rows.iter().fold(0.0f64, |m, r| if r.values[c].is_nan() || m.is_nan() { f64::NAN } else { m.max(r.values[c]) });
        max_values.insert(name.to_string(), m);
        tolerances.insert(name.to_string(), *tol);
        failures += rows.iter().filter(|r| !(r.values[c] <= *tol)).count();
    }
    let mut verdict_failures = BTreeMap::new();
    for (c, name) in vcols.iter().enumerate() {
        let k = rows.iter().filter(|r| !r.verdicts[c]).count();
        failures += k;
        verdict_failures.insert(name.to_string(), k);
    }
    SuiteResult {
        columns: cols.iter().map(|c| c.0).collect(),
        verdict_columns: vcols.to_vec(),
        summary: SuiteSummary {
            rank_level: rank,
            jets: rows.len(),
            seed,
            x_per_jet,
            max_values,
            tolerances,
            verdict_failures,
            failure_count: failures,
            passed: failures == 0,
        },
        rows,
    }
}

/// Rank-2 suite: `n` jets, `x_per_jet` random third-derivative vectors each.
/// Sampling is sequential from `seed`; evaluation may run in parallel and is
/// collected in index order.
pub fn run_rank2_suite(n: usize, seed: u64, x_per_jet: usize) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jets = sample_jets(2, n, &mut rng);
    let xs: Vec<Vec<[f64; 3]>> = (0..n).map(|_| (0..x_per_jet).map(|_| random_x(&mut rng)).collect()).collect();
    let rows: Result<Vec<SuiteRow>> =
        jets.par_iter().zip(xs.par_iter()).enumerate().map(|(i, (d, x))| rank2_row(i, d, x)).collect();
    Ok(summarize(2, seed, x_per_jet, &RANK2_COLS, &["semidefinite"], rows?))
}

pub fn run_rank3_suite(n: usize, seed: u64, x_per_jet: usize) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jets = sample_jets(3, n, &mut rng);
    let xs: Vec<Vec<[f64; 6]>> = (0..n).map(|_| (0..x_per_jet).map(|_| random_x(&mut rng)).collect()).collect();
    let rows: Result<Vec<SuiteRow>> =
        jets.par_iter().zip(xs.par_iter()).enumerate().map(|(i, (d, x))| rank3_row(i, d, x)).collect();
    Ok(summarize(
        3,
        seed,
        x_per_jet,
        &RANK3_COLS,
        &["claim2_p1_positive", "claim2_semidefinite", "claim3_minors_positive", "claim3_definite"],
        rows?,
    ))
}
