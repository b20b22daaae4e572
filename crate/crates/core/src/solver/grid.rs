//! Uniform 4D grid over a convex body with Shortley–Weller boundary data.
//!
//! Nodes sit at integer multiples of h, so the origin is a node whenever it
//! lies in the padded bounding box. Node index order is row-major with the
//! last axis fastest: idx = ((i₀·n₁ + i₁)·n₂ + i₂)·n₃ + i₃.
//!
//! Each unknown carries twelve stencil lines: the four axes and the two
//! diagonals of the planes (x₁,x₂), (y₁,y₂), (x₁,y₂), (x₂,y₁), which are
//! the only mixed second derivatives the operator reads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_bodies::{ConvexBody, Vec4};
use crate::error::{Error, Result};

pub const N_LINES: usize = 12;
pub const DEFAULT_FRACTION_FLOOR: f64 = 1e-3;

/// Line directions in grid units.
pub const LINES: [[i32; 4]; N_LINES] = [
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 1, 0],
    [0, 0, 0, 1],
    [1, 1, 0, 0],
    [1, -1, 0, 0],
    [0, 0, 1, 1],
    [0, 0, 1, -1],
    [1, 0, 0, 1],
    [1, 0, 0, -1],
    [0, 1, 1, 0],
    [0, 1, -1, 0],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum NodeClass {
    Exterior = 0,
    Interior = 1,
    Cut = 2,
    /// Inside, but closer to the boundary than the fraction floor allows;
    /// carries the boundary value 0.
    Snapped = 3,
}

pub const NO_NODE: u32 = u32::MAX;

/// One end of a stencil line: an unknown, or the boundary at `frac`·(step).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arm {
    pub node: u32,
    pub frac: f64,
}

impl Arm {
    pub fn is_boundary(&self) -> bool {
        self.node == NO_NODE
    }
}

#[derive(Clone, Debug)]
pub struct Stencil {
    /// (backward, forward) per line.
    pub arms: [(Arm, Arm); N_LINES],
}

#[derive(Clone, Debug)]
pub struct Grid4 {
    pub body: ConvexBody,
    pub h: f64,
    /// Integer coordinates of node (0,0,0,0) in units of h.
    pub offset: [i64; 4],
    pub dims: [usize; 4],
    pub class: Vec<NodeClass>,
    /// node -> unknown index, or NO_NODE
    pub unknown_of: Vec<u32>,
    /// unknown -> node index
    pub nodes: Vec<usize>,
    pub stencils: Vec<Stencil>,
    pub fraction_floor: f64,
}

impl Grid4 {
    pub fn n_nodes(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn n_unknowns(&self) -> usize {
        self.nodes.len()
    }

    pub fn origin(&self) -> Vec4 {
        self.offset.map(|k| k as f64 * self.h)
    }

    #[inline]
    pub fn index(&self, c: [usize; 4]) -> usize {
        ((c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]) * self.dims[3] + c[3]
    }

    #[inline]
    pub fn coords(&self, mut idx: usize) -> [usize; 4] {
        let mut c = [0; 4];
        for a in (0..4).rev() {
            c[a] = idx % self.dims[a];
            idx /= self.dims[a];
        }
        c
    }

    pub fn position(&self, idx: usize) -> Vec4 {
        let c = self.coords(idx);
        std::array::from_fn(|a| (self.offset[a] + c[a] as i64) as f64 * self.h)
    }

    /// Node index shifted by `step` grid units, if inside the array.
    pub fn shifted(&self, idx: usize, step: [i32; 4]) -> Option<usize> {
        let c = self.coords(idx);
        let mut out = [0usize; 4];
        for a in 0..4 {
            let k = c[a] as i64 + step[a] as i64;
            if k < 0 || k >= self.dims[a] as i64 {
                return None;
            }
            out[a] = k as usize;
        }
        Some(self.index(out))
    }

    /// Node whose position is nearest to `x`, if inside the array.
    pub fn node_at(&self, x: &Vec4) -> Option<usize> {
        let mut c = [0usize; 4];
        for a in 0..4 {
            let k = (x[a] / self.h).round() as i64 - self.offset[a];
            if k < 0 || k >= self.dims[a] as i64 {
                return None;
            }
            c[a] = k as usize;
        }
        Some(self.index(c))
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.class.iter().filter(|&&c| c == class).count()
    }

    /// Classification run-length encoded as (class, run) pairs in node order.
    pub fn class_rle(&self) -> Vec<(u8, usize)> {
        let mut out: Vec<(u8, usize)> = Vec::new();
        for &c in &self.class {
            match out.last_mut() {
                Some((k, n)) if *k == c as u8 => *n += 1,
                _ => out.push((c as u8, 1)),
            }
        }
        out
    }

    /// Smallest boundary fraction kept in any stencil.
    pub fn min_fraction(&self) -> f64 {
        self.stencils
            .iter()
            .flat_map(|s| s.arms.iter().flat_map(|(a, b)| [a.frac, b.frac]))
            .fold(1.0, f64::min)
    }
}

/// Builds the grid with the default fraction floor.
pub fn discretize(body: &ConvexBody, h: f64) -> Result<Grid4> {
    discretize_with_floor(body, h, DEFAULT_FRACTION_FLOOR)
}

pub fn discretize_with_floor(body: &ConvexBody, h: f64, floor: f64) -> Result<Grid4> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Argument(format!("grid spacing h = {h} must be positive")));
    }
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::Argument(format!("fraction floor {floor} outside [0, 1)")));
    }
    let r = body.inradius();
    if !(r > 2.0 * h) {
        return Err(Error::Resolution(format!("inradius {r} not above 2h = {}", 2.0 * h)));
    }
    let bb = body.bounding_box();
    let mut offset = [0i64; 4];
    let mut dims = [0usize; 4];
    for a in 0..4 {
        let lo = ((bb[a][0] - h) / h).floor() as i64;
        let hi = ((bb[a][1] + h) / h).ceil() as i64;
        offset[a] = lo;
        dims[a] = (hi - lo + 1) as usize;
    }
    let mut grid = Grid4 {
        body: body.clone(),
        h,
        offset,
        dims,
        class: Vec::new(),
        unknown_of: Vec::new(),
        nodes: Vec::new(),
        stencils: Vec::new(),
        fraction_floor: floor,
    };
    let n = grid.n_nodes();
    let inside: Vec<bool> = (0..n).into_par_iter().map(|k| body.contains(&grid.position(k))).collect();

    // Boundary fractions for every inside node and line end.
    let raw: Vec<Option<[(f64, f64); N_LINES]>> = (0..n)
        .into_par_iter()
        .map(|k| {
            if !inside[k] {
                return None;
            }
            let x = grid.position(k);
            let mut fr = [(1.0, 1.0); N_LINES];
            for (l, dir) in LINES.iter().enumerate() {
                let len = (dir.iter().map(|&d| (d * d) as f64).sum::<f64>()).sqrt();
                let unit: Vec4 = std::array::from_fn(|a| dir[a] as f64 / len);
                let mut pair = [1.0; 2];
                for (s, sign) in [-1i32, 1].iter().enumerate() {
                    let step: [i32; 4] = std::array::from_fn(|a| sign * dir[a]);
                    let nb = grid.shifted(k, step).expect("padded box holds all neighbours");
                    if !inside[nb] {
                        let u: Vec4 = unit.map(|c| *sign as f64 * c);
                        let s_exit = body.ray_exit(&x, &u, len * h).unwrap_or(len * h);
                        pair[s] = (s_exit / (len * h)).clamp(0.0, 1.0);
                    }
                }
                fr[l] = (pair[0], pair[1]);
            }
            Some(fr)
        })
        .collect();

    // a zero floor still snaps nodes lying exactly on the boundary
    let lo = floor.max(f64::MIN_POSITIVE);
    let mut class = vec![NodeClass::Exterior; n];
    for k in 0..n {
        if let Some(fr) = &raw[k] {
            let small = fr.iter().any(|(a, b)| a.min(*b) < lo);
            class[k] = if small { NodeClass::Snapped } else { NodeClass::Interior };
        }
    }
    let mut unknown_of = vec![NO_NODE; n];
    let mut nodes = Vec::new();
    for k in 0..n {
        if class[k] == NodeClass::Interior {
            unknown_of[k] = nodes.len() as u32;
            nodes.push(k);
        }
    }
    if nodes.is_empty() {
        return Err(Error::Resolution("no interior node at this spacing".into()));
    }
    let mut stencils = Vec::with_capacity(nodes.len());
    for &k in &nodes {
        let fr = raw[k].as_ref().expect("unknowns are inside");
        let mut cut = false;
        let arms: [(Arm, Arm); N_LINES] = std::array::from_fn(|l| {
            let arm = |sign: i32, frac: f64| {
                let step: [i32; 4] = std::array::from_fn(|a| sign * LINES[l][a]);
                let nb = grid.shifted(k, step).expect("padded box holds all neighbours");
                if frac >= 1.0 && unknown_of[nb] != NO_NODE {
                    Arm { node: unknown_of[nb], frac: 1.0 }
                } else {
                    // the boundary, or a snapped node standing in for it
                    Arm { node: NO_NODE, frac: if inside[nb] { 1.0 } else { frac } }
                }
            };
            (arm(-1, fr[l].0), arm(1, fr[l].1))
        });
        for (a, b) in &arms {
            cut |= a.is_boundary() || b.is_boundary();
        }
        if cut {
            class[k] = NodeClass::Cut;
        }
        stencils.push(Stencil { arms });
    }
    grid.class = class;
    grid.unknown_of = unknown_of;
    grid.nodes = nodes;
    grid.stencils = stencils;
    Ok(grid)
}
