//! Real form of the complex Monge-Ampère operator on C² ≅ R⁴ with coordinates
//! ordered (x₁, x₂, y₁, y₂), and the transformed operator
//!
//!   F(D²v, Dv, v) = v²·Q(D²v) + v·L(D²v, Dv) − 1,
//!
//! obtained from det(u_{ij̄}) = ψ through u = −2v².
//!
//! Derivatives treat all sixteen Hessian slots v_ij as independent, which is
//! the convention in which F^{12,21} = −v² and F^{11,22} = v².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::report::{relative, CertificateReport, CheckEntry};

pub const DEFAULT_PSI: f64 = 1.0;

/// Tolerance for identities that hold exactly in exact arithmetic.
pub const IDENTITY_TOL: f64 = 1e-12;

pub type M4 = [[f64; 4]; 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet2 {
    pub v: f64,
    pub grad: [f64; 4],
    pub hess: SymmetricMatrix,
}

impl Jet2 {
    pub fn new(v: f64, grad: [f64; 4], hess: SymmetricMatrix) -> Result<Self> {
        if hess.n() != 4 {
            return Err(Error::Argument(format!("jet Hessian must be 4x4, got {}", hess.n())));
        }
        if !v.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Argument("jet entries must be finite".into()));
        }
        Ok(Self { v, grad, hess })
    }

    pub fn diagonal(v: f64, grad: [f64; 4], d: [f64; 4]) -> Self {
        Self { v, grad, hess: SymmetricMatrix::from_diagonal(&d) }
    }

    pub fn hess_array(&self) -> M4 {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.hess.get(i, j);
            }
        }
        m
    }
}

/// Every first and second partial of F at one jet.
#[derive(Clone, Debug, PartialEq)]
pub struct FDerivBundle {
    pub f: f64,
    /// F^{ij}
    pub d_h: M4,
    /// F^{v_k}
    pub d_g: [f64; 4],
    /// F^v
    pub d_v: f64,
    /// F^{ij,kl}, indexed [i][j][k][l]
    pub d2_hh: [[M4; 4]; 4],
    /// F^{ij,v_k}, indexed [i][j][k]
    pub d2_hg: [[[f64; 4]; 4]; 4],
    /// F^{ij,v}
    pub d2_hv: M4,
    /// F^{v_k,v_l}
    pub d2_gg: M4,
    /// F^{v_k,v}
    pub d2_gv: [f64; 4],
    /// F^{v,v}
    pub d2_vv: f64,
}

impl FDerivBundle {
    /// (F^{ij}) as a symmetric matrix; the slots agree pairwise for
    /// symmetric Hessians.
    pub fn d_h_matrix(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(4, |i, j| 0.5 * (self.d_h[i][j] + self.d_h[j][i]))
    }
}

/// Hermitian 2×2 matrix (u_{11̄}, u_{22̄}, Re u_{12̄}, Im u_{12̄}).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexHessian {
    pub u11: f64,
    pub u22: f64,
    pub re12: f64,
    pub im12: f64,
}

impl ComplexHessian {
    pub fn det(&self) -> f64 {
        self.u11 * self.u22 - self.re12 * self.re12 - self.im12 * self.im12
    }

    /// Positive definite as a Hermitian matrix.
    pub fn is_psh(&self) -> bool {
        self.u11 > 0.0 && self.det() > 0.0
    }
}

// Linear combinations of Hessian slots entering Q and L.
struct Slots {
    a: f64,  // m11 + m33
    b: f64,  // m22 + m44
    cc: f64, // m12 + m34
    cr: f64, // m21 + m43
    d: f64,  // m14 − m32
    e: f64,  // m41 − m23
}

fn slots(m: &M4) -> Slots {
    Slots {
        a: m[0][0] + m[2][2],
        b: m[1][1] + m[3][3],
        cc: m[0][1] + m[2][3],
        cr: m[1][0] + m[3][2],
        d: m[0][3] - m[2][1],
        e: m[3][0] - m[1][2],
    }
}

// Gradient polynomials p = v2²+v4², q = v1²+v3², r = v1v2+v3v4, s = v1v4−v2v3.
fn gpolys(g: &[f64; 4]) -> [f64; 4] {
    [
        g[1] * g[1] + g[3] * g[3],
        g[0] * g[0] + g[2] * g[2],
        g[0] * g[1] + g[2] * g[3],
        g[0] * g[3] - g[1] * g[2],
    ]
}

fn gpoly_grads(g: &[f64; 4]) -> [[f64; 4]; 4] {
    [
        [0.0, 2.0 * g[1], 0.0, 2.0 * g[3]],
        [2.0 * g[0], 0.0, 2.0 * g[2], 0.0],
        [g[1], g[0], g[3], g[2]],
        [g[3], -g[2], -g[1], g[0]],
    ]
}

fn gpoly_hessians() -> [M4; 4] {
    let mut h = [[[0.0; 4]; 4]; 4];
    h[0][1][1] = 2.0;
    h[0][3][3] = 2.0;
    h[1][0][0] = 2.0;
    h[1][2][2] = 2.0;
    for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
        h[2][i][j] = 1.0;
    }
    for (i, j, s) in [(0, 3, 1.0), (3, 0, 1.0), (1, 2, -1.0), (2, 1, -1.0)] {
        h[3][i][j] = s;
    }
    h
}

/// L = Σ coef_ij(g)·m_ij; slot (i,j) carries `sign × poly[k]`.
fn l_slot(i: usize, j: usize) -> Option<(usize, f64)> {
    match (i, j) {
        (0, 0) | (2, 2) => Some((0, 1.0)),
        (1, 1) | (3, 3) => Some((1, 1.0)),
        (0, 1) | (2, 3) | (1, 0) | (3, 2) => Some((2, -1.0)),
        (0, 3) | (3, 0) => Some((3, -1.0)),
        (1, 2) | (2, 1) => Some((3, 1.0)),
        _ => None,
    }
}

fn q_value(s: &Slots) -> f64 {
    s.a * s.b - s.cc * s.cr - s.d * s.e
}

fn q_grad(s: &Slots) -> M4 {
    let mut g = [[0.0; 4]; 4];
    g[0][0] = s.b;
    g[2][2] = s.b;
    g[1][1] = s.a;
    g[3][3] = s.a;
    g[0][1] = -s.cr;
    g[2][3] = -s.cr;
    g[1][0] = -s.cc;
    g[3][2] = -s.cc;
    g[0][3] = -s.e;
    g[2][1] = s.e;
    g[3][0] = -s.d;
    g[1][2] = s.d;
    g
}

fn q_hess() -> [[M4; 4]; 4] {
    let mut h = [[[[0.0; 4]; 4]; 4]; 4];
    let mut put = |a: (usize, usize), b: (usize, usize), x: f64| {
        h[a.0][a.1][b.0][b.1] = x;
        h[b.0][b.1][a.0][a.1] = x;
    };
    for a in [(0, 0), (2, 2)] {
        for b in [(1, 1), (3, 3)] {
            put(a, b, 1.0);
        }
    }
    for a in [(0, 1), (2, 3)] {
        for b in [(1, 0), (3, 2)] {
            put(a, b, -1.0);
        }
    }
    put((0, 3), (3, 0), -1.0);
    put((0, 3), (1, 2), 1.0);
    put((2, 1), (3, 0), 1.0);
    put((2, 1), (1, 2), -1.0);
    h
}

fn l_value(s: &Slots, p: &[f64; 4]) -> f64 {
    p[0] * s.a + p[1] * s.b - p[2] * (s.cc + s.cr) - p[3] * (s.d + s.e)
}

/// F on a raw 16-slot Hessian.
pub fn f_general(v: f64, g: &[f64; 4], m: &M4) -> f64 {
    let s = slots(m);
    v * v * q_value(&s) + v * l_value(&s, &gpolys(g)) - 1.0
}

#[allow(non_snake_case)]
pub fn F_eval(jet: &Jet2) -> f64 {
    f_general(jet.v, &jet.grad, &jet.hess_array())
}

pub fn derivatives_general(v: f64, g: &[f64; 4], m: &M4) -> FDerivBundle {
    let s = slots(m);
    let p = gpolys(g);
    let dp = gpoly_grads(g);
    let hp = gpoly_hessians();
    let q = q_value(&s);
    let l = l_value(&s, &p);
    let dq = q_grad(&s);

    let mut lc = [[0.0; 4]; 4];
    let mut d2_hg = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if let Some((k, sign)) = l_slot(i, j) {
                lc[i][j] = sign * p[k];
                for c in 0..4 {
                    d2_hg[i][j][c] = v * sign * dp[k][c];
                }
            }
        }
    }
    let combo = [s.a, s.b, -(s.cc + s.cr), -(s.d + s.e)];
    let mut dl_dg = [0.0; 4];
    let mut d2l_gg = [[0.0; 4]; 4];
    for k in 0..4 {
        for c in 0..4 {
            dl_dg[c] += combo[k] * dp[k][c];
            for e in 0..4 {
                d2l_gg[c][e] += combo[k] * hp[k][c][e];
            }
        }
    }

    let mut d_h = [[0.0; 4]; 4];
    let mut d2_hv = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            d_h[i][j] = v * v * dq[i][j] + v * lc[i][j];
            d2_hv[i][j] = 2.0 * v * dq[i][j] + lc[i][j];
        }
    }
    let mut d2_hh = q_hess();
    for a in d2_hh.iter_mut().flatten().flatten().flatten() {
        *a *= v * v;
    }
    let mut d2_gg = d2l_gg;
    for x in d2_gg.iter_mut().flatten() {
        *x *= v;
    }
    FDerivBundle {
        f: v * v * q + v * l - 1.0,
        d_h,
        d_g: dl_dg.map(|x| v * x),
        d_v: 2.0 * v * q + l,
        d2_hh,
        d2_hg,
        d2_hv,
        d2_gg,
        d2_gv: dl_dg,
        d2_vv: 2.0 * q,
    }
}

#[allow(non_snake_case)]
pub fn F_derivatives(jet: &Jet2) -> FDerivBundle {
    derivatives_general(jet.v, &jet.grad, &jet.hess_array())
}

pub fn real_to_complex_hessian(hu: &SymmetricMatrix) -> ComplexHessian {
    ComplexHessian {
        u11: 0.25 * (hu.get(0, 0) + hu.get(2, 2)),
        u22: 0.25 * (hu.get(1, 1) + hu.get(3, 3)),
        re12: 0.25 * (hu.get(0, 1) + hu.get(2, 3)),
        im12: 0.25 * (hu.get(0, 3) - hu.get(2, 1)),
    }
}

/// 16·det(u_{ij̄}) − 16ψ written in real second derivatives.
pub fn ma_residual_u(hu: &SymmetricMatrix, psi: f64) -> f64 {
    let g = |i: usize, j: usize| hu.get(i, j);
    (g(0, 0) + g(2, 2)) * (g(1, 1) + g(3, 3))
        - (g(0, 1) + g(2, 3)) * (g(1, 0) + g(3, 2))
        - (g(0, 3) - g(2, 1)) * (g(3, 0) - g(1, 2))
        - 16.0 * psi
}

/// Inverts u = −2v², u_i = −4v v_i, u_ij = −4(v v_ij + v_i v_j).
pub fn transform_u_to_v(u: f64, grad_u: &[f64; 4], hu: &SymmetricMatrix) -> Result<Jet2> {
    if !(u < 0.0) {
        return Err(Error::Domain(format!("u = {u:e} must be negative for the square-root transform")));
    }
    let v = -(-u / 2.0).sqrt();
    let g = grad_u.map(|ui| -ui / (4.0 * v));
    let hess = SymmetricMatrix::from_fn(4, |i, j| -(hu.get(i, j) + 4.0 * g[i] * g[j]) / (4.0 * v));
    Jet2::new(v, g, hess)
}

/// Forward chain rule from a v-jet to (u, ∇u, ∇²u).
pub fn transform_v_to_u(jet: &Jet2) -> (f64, [f64; 4], SymmetricMatrix) {
    let v = jet.v;
    let g = jet.grad;
    let hu = SymmetricMatrix::from_fn(4, |i, j| -4.0 * (v * jet.hess.get(i, j) + g[i] * g[j]));
    (-2.0 * v * v, g.map(|gi| -4.0 * v * gi), hu)
}

/// On-shell identities of a diagonal jet. Checks whose preconditions fail
/// are recorded as skipped.
pub fn identity_suite(jet: &Jet2) -> CertificateReport {
    let mut rep = CertificateReport::new("identity_suite");
    let b = F_derivatives(jet);
    let v = jet.v;
    let h = jet.hess.diagonal();
    let w = v * b.d_v;
    let diagonal = jet.hess.is_diagonal(crate::symfun::DIAGONAL_TOL) || jet.hess.max_abs() == 0.0;
    let on_shell = b.f.abs() <= IDENTITY_TOL;
    let rank2 = diagonal && h[2] == 0.0 && h[3] == 0.0;

    if diagonal {
        let terms: Vec<f64> = (0..4).map(|i| b.d_h[i][i] * h[i]).collect();
        let r = terms.iter().sum::<f64>() - w;
        let mut all = terms.clone();
        all.push(w);
        rep.push(CheckEntry::at_most("trace_euler", relative(r, &all), IDENTITY_TOL));
    } else {
        rep.push(CheckEntry::skipped("trace_euler", "Hessian not diagonal"));
    }
    if diagonal && on_shell {
        let t = v * v * (h[0] + h[2]) * (h[1] + h[3]);
        rep.push(CheckEntry::at_most("on_shell_trace", relative(w - t - 1.0, &[w, t, 1.0]), IDENTITY_TOL));
    } else {
        rep.push(CheckEntry::skipped("on_shell_trace", "requires a diagonal on-shell jet"));
    }
    if rank2 {
        let (t1, t2) = (b.d_h[0][0] * h[0], b.d_h[1][1] * h[1]);
        rep.push(CheckEntry::at_most("rank2_trace", relative(w - t1 - t2, &[w, t1, t2]), IDENTITY_TOL));
    } else {
        rep.push(CheckEntry::skipped("rank2_trace", "requires diag(v11, v22, 0, 0)"));
    }
    if rank2 && on_shell {
        let t = v * v * h[0] * h[1];
        rep.push(CheckEntry::at_most("rank2_on_shell", relative(w - t - 1.0, &[w, t, 1.0]), IDENTITY_TOL));
    } else {
        rep.push(CheckEntry::skipped("rank2_on_shell", "requires an on-shell diag(v11, v22, 0, 0) jet"));
    }
    rep
}
