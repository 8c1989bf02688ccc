//! Red-black storage and relaxation kernels.
//!
//! With an odd node count per axis the flat index `p` has the parity of
//! `i + j + k`, so node `p` of colour `c = p % 2` lives at slot `p / 2` of
//! the colour-`c` array and every axis neighbour lives in the other array at
//! a constant slot offset. Updating one colour then only reads the other.

use super::CutNode;
use crate::grid::{Grid, NodeMask, ScalarField};
use crate::par::{self, Schedule};

/// A cut node in colour-local form.
struct CutSlot {
    slot: usize,
    weights: [f64; 6],
    /// Boundary contribution plus `h² f`.
    constant: f64,
    inv_diagonal: f64,
}

pub(crate) struct RedBlack {
    values: [Vec<f64>; 2],
    free: [Vec<bool>; 2],
    /// `h² f` per node.
    rhs: [Vec<f64>; 2],
    /// Slot offsets into the opposite colour, per colour.
    offsets: [Vec<isize>; 2],
    inv_degree: f64,
    /// Free nodes with boundary-fitted stencils; `free` is false for them so
    /// the uniform kernel skips them.
    cut: [Vec<CutSlot>; 2],
    len: usize,
}

fn split<T: Copy>(all: &[T]) -> [Vec<T>; 2] {
    let even = all.iter().step_by(2).copied().collect();
    let odd = all.iter().skip(1).step_by(2).copied().collect();
    [even, odd]
}

impl RedBlack {
    /// `pinned` must contain the far-field layer.
    pub(crate) fn new(grid: &Grid, pinned: &NodeMask, source: &ScalarField, cut: &[CutNode], start: &ScalarField) -> Self {
        debug_assert!((0..grid.len()).all(|p| !grid.is_far_field(p) || pinned.get(p)));
        let h2 = grid.h() * grid.h();
        let mut free: Vec<bool> = pinned.flags().iter().map(|&f| !f).collect();
        let mut cut_slots: [Vec<CutSlot>; 2] = [Vec::new(), Vec::new()];
        for c in cut {
            debug_assert!(free[c.node]);
            free[c.node] = false;
            cut_slots[c.node % 2].push(CutSlot {
                slot: c.node / 2,
                weights: c.weights,
                constant: c.boundary + h2 * source[c.node],
                inv_diagonal: 1.0 / c.diagonal,
            });
        }
        let rhs: Vec<f64> = source.values().iter().map(|f| h2 * f).collect();
        let deltas = grid.neighbor_offsets();
        // Neighbour p + d of a colour-c node at slot q sits at slot
        // q + (d - 1 + 2c) / 2 of colour 1 - c.
        let offsets = [0isize, 1].map(|c| deltas.iter().map(|d| (d - 1 + 2 * c) / 2).collect());
        RedBlack {
            values: split(start.values()),
            free: split(&free),
            rhs: split(&rhs),
            offsets,
            inv_degree: 1.0 / deltas.len() as f64,
            cut: cut_slots,
            len: grid.len(),
        }
    }

    /// One relaxation sweep over colour `color`; returns the largest natural
    /// residual met before each update.
    pub(crate) fn sweep(&mut self, color: usize, omega: f64, project: bool, schedule: Schedule) -> f64 {
        let [even, odd] = &mut self.values;
        let (dst, src): (&mut Vec<f64>, &Vec<f64>) = if color == 0 { (even, odd) } else { (odd, even) };
        let free = &self.free[color];
        let rhs = &self.rhs[color];
        let offs = &self.offsets[color];
        let inv = self.inv_degree;
        let res = match offs.len() {
            2 => sweep_colour::<2>(dst, src, free, rhs, offs, inv, omega, project, schedule),
            4 => sweep_colour::<4>(dst, src, free, rhs, offs, inv, omega, project, schedule),
            6 => sweep_colour::<6>(dst, src, free, rhs, offs, inv, omega, project, schedule),
            k => unreachable!("unsupported stencil size {k}"),
        };
        let mut cut_res: f64 = 0.0;
        for c in &self.cut[color] {
            let gs = cut_gs(c, src, offs);
            let old = dst[c.slot];
            let relaxed = old + omega * (gs - old);
            if project {
                cut_res = cut_res.max((old - gs.max(0.0)).abs());
                dst[c.slot] = relaxed.max(0.0);
            } else {
                cut_res = cut_res.max((old - gs).abs());
                dst[c.slot] = relaxed;
            }
        }
        res.max(cut_res)
    }

    /// `(pde, complementarity)` residuals in units of the unknown:
    /// `pde = max (gs - w)⁺`, `complementarity = max |w - max(0, gs)|`, where
    /// `gs - w = -(h²/2n)(-Δ_h w - f)`.
    pub(crate) fn residuals(&self, project: bool, schedule: Schedule) -> (f64, f64) {
        let mut pde: f64 = 0.0;
        let mut comp: f64 = 0.0;
        for color in 0..2 {
            let vals = &self.values[color];
            let src = &self.values[1 - color];
            let free = &self.free[color];
            let rhs = &self.rhs[color];
            let offs = &self.offsets[color];
            let inv = self.inv_degree;
            let gs_minus_w = |q: usize| {
                let mut s = rhs[q];
                for &o in offs {
                    s += src[(q as isize + o) as usize];
                }
                s * inv - vals[q]
            };
            pde = pde.max(par::max_over(schedule, vals.len(), |q| {
                if free[q] { gs_minus_w(q).max(0.0) } else { 0.0 }
            }));
            let natural = |w: f64, d: f64| {
                if project {
                    // w - max(0, gs) = min(w, w - gs)
                    w.min(-d).abs()
                } else {
                    d.abs()
                }
            };
            comp = comp.max(par::max_over(schedule, vals.len(), |q| {
                if free[q] { natural(vals[q], gs_minus_w(q)) } else { 0.0 }
            }));
            for c in &self.cut[color] {
                let d = cut_gs(c, src, offs) - vals[c.slot];
                pde = pde.max(d.max(0.0));
                comp = comp.max(natural(vals[c.slot], d));
            }
        }
        (pde, comp)
    }

    pub(crate) fn into_field(self) -> ScalarField {
        let [even, odd] = self.values;
        let mut out = Vec::with_capacity(self.len);
        for p in 0..self.len {
            out.push(if p % 2 == 0 { even[p / 2] } else { odd[p / 2] });
        }
        ScalarField::from_vec(out)
    }
}

fn cut_gs(c: &CutSlot, src: &[f64], offs: &[isize]) -> f64 {
    let mut s = c.constant;
    for (w, &o) in c.weights.iter().zip(offs) {
        if *w != 0.0 {
            s += w * src[(c.slot as isize + o) as usize];
        }
    }
    s * c.inv_diagonal
}

#[allow(clippy::too_many_arguments)]
fn sweep_colour<const K: usize>(
    dst: &mut [f64],
    src: &[f64],
    free: &[bool],
    rhs: &[f64],
    offs: &[isize],
    inv: f64,
    omega: f64,
    project: bool,
    schedule: Schedule,
) -> f64 {
    let offs: [isize; K] = offs.try_into().expect("stencil size");
    par::chunks_max(schedule, dst, |base, chunk| {
        let mut res: f64 = 0.0;
        for (k, w) in chunk.iter_mut().enumerate() {
            let q = base + k;
            if !free[q] {
                continue;
            }
            let mut s = rhs[q];
            for o in offs {
                s += src[(q as isize + o) as usize];
            }
            let gs = s * inv;
            let old = *w;
            let relaxed = old + omega * (gs - old);
            if project {
                res = res.max((old - gs.max(0.0)).abs());
                *w = relaxed.max(0.0);
            } else {
                res = res.max((old - gs).abs());
                *w = relaxed;
            }
        }
        res
    })
}
