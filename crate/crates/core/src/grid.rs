//! Uniform Cartesian grids on the box `[-extent, extent]^n`, node roles and
//! the finite-difference Laplacian.
//!
//! Nodes are stored in a flat array with axis 0 fastest. Because the number
//! of nodes per axis is odd, the parity of the flat index equals the parity
//! of `i + j + k`, which the red-black solver relies on.

use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::par::{self, Schedule};

/// A point in space. Components beyond the grid dimension are zero.
pub type Point = [f64; 3];

pub fn norm(x: &Point) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    extent: f64,
    nodes_per_axis: usize,
    h: f64,
}

impl Grid {
    /// Builds a grid with `nodes` nodes per axis on `[-extent, extent]^dim`.
    ///
    /// `nodes` must be odd (the origin is a node) and at least 9.
    pub fn new(dim: usize, extent: f64, nodes: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        Self::with_any_dim(dim, extent, nodes)
    }

    /// Same as [`Grid::new`] but also admits `dim = 1`, which the solver
    /// tests use for problems with closed-form solutions.
    #[doc(hidden)]
    pub fn with_any_dim(dim: usize, extent: f64, nodes: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("unsupported dimension {dim}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {extent}"
            )));
        }
        if nodes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "node count per axis must be odd, got {nodes}"
            )));
        }
        if nodes < 9 {
            return Err(Error::InvalidGrid(format!(
                "need at least 9 nodes per axis, got {nodes}"
            )));
        }
        Ok(Grid {
            dim,
            extent,
            nodes_per_axis: nodes,
            h: 2.0 * extent / (nodes - 1) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index strides per axis.
    pub fn strides(&self) -> [usize; 3] {
        let n = self.nodes_per_axis;
        [1, n, n * n]
    }

    /// Signed flat-index offsets of the `2·dim` axis neighbours.
    pub fn neighbor_offsets(&self) -> Vec<isize> {
        let strides = self.strides();
        (0..self.dim)
            .flat_map(|a| [strides[a] as isize, -(strides[a] as isize)])
            .collect()
    }

    pub fn multi_index(&self, p: usize) -> [usize; 3] {
        let n = self.nodes_per_axis;
        let mut idx = [0usize; 3];
        let mut rest = p;
        for slot in idx.iter_mut().take(self.dim) {
            *slot = rest % n;
            rest /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let s = self.strides();
        (0..self.dim).map(|a| idx[a] * s[a]).sum()
    }

    pub fn origin_index(&self) -> usize {
        let c = self.nodes_per_axis / 2;
        self.flat_index([c, c, c])
    }

    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.h
    }

    pub fn coord(&self, p: usize) -> Point {
        let idx = self.multi_index(p);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.axis_coord(idx[a]);
        }
        x
    }

    /// Distance of node `p` from the origin.
    pub fn radius(&self, p: usize) -> f64 {
        norm(&self.coord(p))
    }

    /// Whether `p` lies on the outermost node layer.
    pub fn is_far_field(&self, p: usize) -> bool {
        let idx = self.multi_index(p);
        let last = self.nodes_per_axis - 1;
        idx[..self.dim].iter().any(|&i| i == 0 || i == last)
    }

    /// Whether `x` lies inside the closed box.
    pub fn contains(&self, x: &Point) -> bool {
        x[..self.dim].iter().all(|c| c.abs() <= self.extent)
    }

    /// Multilinear interpolation of `field` at `x`; `None` outside the box.
    pub fn interpolate(&self, field: &ScalarField, x: &Point) -> Option<f64> {
        if !self.contains(x) {
            return None;
        }
        let last = self.nodes_per_axis - 1;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim {
            let s = (x[a] + self.extent) / self.h;
            let i = (s.floor() as usize).min(last - 1);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let strides = self.strides();
        let p0 = self.flat_index(base);
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut p = p0;
            for a in 0..self.dim {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    p += strides[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * field[p];
            }
        }
        Some(acc)
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarField {
            values: vec![value; grid.len()],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    /// Samples `f` at every node coordinate.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Sync + Send,
    {
        let mut values = vec![0.0; grid.len()];
        par::fill(Schedule::default(), &mut values, |p| f(&grid.coord(p)));
        ScalarField { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, p: usize) -> &f64 {
        &self.values[p]
    }
}

impl IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, p: usize) -> &mut f64 {
        &mut self.values[p]
    }
}

/// One boolean flag per grid node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMask {
    flags: Vec<bool>,
}

impl NodeMask {
    pub fn empty(grid: &Grid) -> Self {
        NodeMask {
            flags: vec![false; grid.len()],
        }
    }

    pub fn from_vec(flags: Vec<bool>) -> Self {
        NodeMask { flags }
    }

    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn(usize) -> bool,
    {
        NodeMask {
            flags: (0..grid.len()).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn get(&self, p: usize) -> bool {
        self.flags[p]
    }

    pub fn set(&mut self, p: usize, value: bool) {
        self.flags[p] = value;
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn any(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }

    /// Indices of flagged nodes in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(p, &f)| f.then_some(p))
    }

    pub fn is_subset_of(&self, other: &NodeMask) -> bool {
        self.flags
            .iter()
            .zip(&other.flags)
            .all(|(&a, &b)| !a || b)
    }
}

/// The closed ball `|x - center| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn centered(radius: f64) -> Self {
        Ball {
            center: [0.0; 3],
            radius,
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        norm(&d) <= self.radius
    }

    pub fn mask(&self, grid: &Grid) -> Result<NodeMask> {
        ball_mask(grid, &self.center, self.radius)
    }
}

/// Flags nodes with `|x - center| <= r`.
///
/// The ball must lie strictly inside the box.
pub fn ball_mask(grid: &Grid, center: &Point, r: f64) -> Result<NodeMask> {
    if !(r > 0.0) {
        return Err(Error::InvalidMask(format!("radius must be positive, got {r}")));
    }
    if center[..grid.dim()]
        .iter()
        .any(|c| c.abs() + r >= grid.extent())
    {
        return Err(Error::InvalidMask(format!(
            "ball of radius {r} does not fit strictly inside the box of half-width {}",
            grid.extent()
        )));
    }
    Ok(NodeMask::from_fn(grid, |p| {
        let x = grid.coord(p);
        let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
        norm(&d) <= r
    }))
}

/// Flags nodes with `max_i |x_i - center_i| <= r`.
pub fn cube_mask(grid: &Grid, center: &Point, r: f64) -> Result<NodeMask> {
    if !(r > 0.0) {
        return Err(Error::InvalidMask(format!("half-side must be positive, got {r}")));
    }
    if center[..grid.dim()]
        .iter()
        .any(|c| c.abs() + r >= grid.extent())
    {
        return Err(Error::InvalidMask(format!(
            "cube of half-side {r} does not fit strictly inside the box"
        )));
    }
    Ok(NodeMask::from_fn(grid, |p| {
        let x = grid.coord(p);
        (0..grid.dim()).all(|a| (x[a] - center[a]).abs() <= r)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    /// Fixed core `K`, pinned to the boundary datum.
    Core,
    /// Initial wet region `Ω₀` outside the core.
    Initial,
    /// Outermost node layer, pinned to zero.
    FarField,
    Interior,
}

/// Disjoint role assignment for every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRoles {
    roles: Vec<NodeRole>,
}

impl NodeRoles {
    /// Assigns roles from a core mask and an initial-set mask.
    ///
    /// The core must be nonempty, contained in the initial set and away from
    /// the far-field layer.
    pub fn new(grid: &Grid, core: &NodeMask, initial: &NodeMask) -> Result<Self> {
        if core.len() != grid.len() || initial.len() != grid.len() {
            return Err(Error::InvalidMask("mask size does not match grid".into()));
        }
        if !core.any() {
            return Err(Error::InvalidMask("core mask is empty".into()));
        }
        if !core.is_subset_of(initial) {
            return Err(Error::InvalidMask(
                "core is not contained in the initial set".into(),
            ));
        }
        let mut roles = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let role = if grid.is_far_field(p) {
                if initial.get(p) {
                    return Err(Error::InvalidMask(
                        "initial set reaches the far-field layer".into(),
                    ));
                }
                NodeRole::FarField
            } else if core.get(p) {
                NodeRole::Core
            } else if initial.get(p) {
                NodeRole::Initial
            } else {
                NodeRole::Interior
            };
            roles.push(role);
        }
        Ok(NodeRoles { roles })
    }

    pub fn role(&self, p: usize) -> NodeRole {
        self.roles[p]
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn mask_of(&self, role: NodeRole) -> NodeMask {
        NodeMask::from_vec(self.roles.iter().map(|&r| r == role).collect())
    }
}

/// Five/seven-point Laplacian `(Σ neighbours − 2n f)/h²` at interior nodes,
/// zero on the far-field layer.
pub fn apply_laplacian(grid: &Grid, f: &ScalarField) -> ScalarField {
    let offsets = grid.neighbor_offsets();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let center = offsets.len() as f64;
    let mut out = vec![0.0; grid.len()];
    par::fill(Schedule::default(), &mut out, |p| {
        if grid.is_far_field(p) {
            return 0.0;
        }
        let sum: f64 = offsets
            .iter()
            .map(|&d| f[(p as isize + d) as usize])
            .sum();
        (sum - center * f[p]) * inv_h2
    });
    ScalarField::from_vec(out)
}
