//! Independent oracles shared by the integration tests: cofactor
//! determinants, σ_k as a sum of principal minors, and central differences.

#![allow(dead_code)]

use powercvx::linalg::SymmetricMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

/// Laplace expansion along the first row.
pub fn cofactor_det(m: &Mat) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..n)
            .map(|j| {
                let minor: Mat = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| *x).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][j] * cofactor_det(&minor)
            })
            .sum(),
    }
}

pub fn leading_minors_cofactor(m: &Mat) -> Vec<f64> {
    (1..=m.len())
        .map(|k| cofactor_det(&m[..k].iter().map(|r| r[..k].to_vec()).collect()))
        .collect()
}

/// σ_k of a general square matrix: the sum of its k×k principal minors.
pub fn sigma_minors(m: &Mat, k: usize) -> f64 {
    let n = m.len();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sub: Mat = idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect();
        total += cofactor_det(&sub);
    }
    total
}

/// σ_k of a vector by subset enumeration.
pub fn sigma_subsets(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| x[i]).product::<f64>())
        .sum()
}

pub fn diag_mat(d: &[f64]) -> Mat {
    let n = d.len();
    (0..n).map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect()
}

pub fn to_mat(a: &SymmetricMatrix) -> Mat {
    a.rows()
}

/// ∂f/∂A_ij by central differences, each entry perturbed on its own.
pub fn fd_gradient(f: &dyn Fn(&Mat) -> f64, a: &Mat, eps: f64) -> Mat {
    let n = a.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut p = a.clone();
            let mut m = a.clone();
            p[i][j] += eps;
            m[i][j] -= eps;
            g[i][j] = (f(&p) - f(&m)) / (2.0 * eps);
        }
    }
    g
}

/// ∂²f/∂A_ij∂A_pq by the four-point mixed central difference.
pub fn fd_second(f: &dyn Fn(&Mat) -> f64, a: &Mat, (i, j): (usize, usize), (p, q): (usize, usize), eps: f64) -> f64 {
    let eval = |s1: f64, s2: f64| {
        let mut b = a.clone();
        b[i][j] += s1 * eps;
        b[p][q] += s2 * eps;
        f(&b)
    };
    (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * eps * eps)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, range: f64) -> SymmetricMatrix {
    let mut a = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            a.set(i, j, rng.gen_range(-range..range));
        }
    }
    a
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Worst relative mismatch between the closed-form σ_k / q derivatives at
/// diag(d) and central differences of the principal-minor oracle. Each
/// object is compared relative to its own largest entry.
pub fn calculus_errors(d: &[f64]) -> f64 {
    use powercvx::symfun::{q_gradient, q_hessian, sigma_gradient, sigma_hessian};
    let n = d.len();
    let h = SymmetricMatrix::from_diagonal(d);
    let a = diag_mat(d);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut worst = 0.0f64;
    let mut compare = |exact: &dyn Fn(usize, usize) -> f64,
                       exact2: &dyn Fn((usize, usize), (usize, usize)) -> f64,
                       f: &dyn Fn(&Mat) -> f64| {
        let g = fd_gradient(f, &a, 1e-6);
        let gscale = max_abs(&g);
        let gscale = if gscale > 1e-6 { gscale } else { 1.0 };
        for &(i, j) in &pairs {
            worst = worst.max((g[i][j] - exact(i, j)).abs() / gscale);
        }
        let mut second = Vec::new();
        for &ij in &pairs {
            for &pq in &pairs {
                second.push((fd_second(f, &a, ij, pq, 1e-4), exact2(ij, pq)));
            }
        }
        // σ₁ has a vanishing second derivative: compare absolutely there
        let hscale = second.iter().fold(0.0f64, |m, (x, _)| m.max(x.abs()));
        let hscale = if hscale > 1e-6 { hscale } else { 1.0 };
        for (fd, ex) in second {
            worst = worst.max((fd - ex).abs() / hscale);
        }
    };
    for k in 1..=n as i64 {
        let g = sigma_gradient(&h, k).unwrap();
        let t = sigma_hessian(&h, k).unwrap();
        let ku = k as usize;
        compare(
            &|i, j| g.get(i, j),
            &|(i, j), (p, q)| t.get(i, j, p, q),
            &|m: &Mat| sigma_minors(m, ku),
        );
    }
    for l in 0..n.saturating_sub(1) {
        let g = q_gradient(&h, l).unwrap();
        let t = q_hessian(&h, l).unwrap();
        compare(
            &|i, j| g.get(i, j),
            &|(i, j), (p, q)| t.get(i, j, p, q),
            &|m: &Mat| sigma_minors(m, l + 2) / sigma_minors(m, l + 1),
        );
    }
    worst
}

/// Lemma-limit error at scale s for H = diag(g, s·b), rank level |g|.
pub fn lemma_error(g: &[f64], b: &[f64], s: f64) -> f64 {
    use powercvx::symfun::{lemma_limit, q_gradient};
    let mut d = g.to_vec();
    d.extend(b.iter().map(|x| s * x));
    let grad = q_gradient(&SymmetricMatrix::from_diagonal(&d), g.len()).unwrap();
    let lim = lemma_limit(b);
    (0..b.len()).map(|i| (grad.get(g.len() + i, g.len() + i) - lim[i]).abs()).fold(0.0, f64::max)
}

/// Matrices whose leading minors all exceed `floor` in size relative to
/// (max |a|)^k, drawn by rejection.
pub fn well_posed(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> SymmetricMatrix {
    loop {
        let a = random_symmetric(rng, n, 2.0);
        let m = leading_minors_cofactor(&to_mat(&a));
        let s = a.max_abs();
        if m.iter().enumerate().all(|(k, p)| p.abs() >= floor * s.powi(k as i32 + 1)) {
            return a;
        }
    }
}

/// (off-diagonal, minor-ratio mismatch, |det C − 1|) of the congruence
/// diagonalization, the first two relative to max |a|.
pub fn congruence_errors(a: &SymmetricMatrix) -> (f64, f64, f64) {
    let res = powercvx::congruence::congruent_diagonalize(a).unwrap();
    let d = a.congruence(&res.transform);
    let minors = leading_minors_cofactor(&to_mat(a));
    let scale = a.max_abs();
    let off = d.max_off_diagonal() / scale;
    let ratio = (0..a.n())
        .map(|k| {
            let want = if k == 0 { minors[0] } else { minors[k] / minors[k - 1] };
            let e = |x: f64| (x - want).abs() / want.abs().max(scale);
            e(d.get(k, k)).max(e(res.diagonal[k]))
        })
        .fold(0.0, f64::max);
    (off, ratio, (res.transform.determinant() - 1.0).abs())
}
