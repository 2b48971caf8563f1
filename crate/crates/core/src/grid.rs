//! Truncated velocity lattice and the quadrature rule behind every `dv`
//! integral.
//!
//! The lattice is a uniform midpoint-rule tensor grid on `[-v_max, v_max]^3`.
//! Node `k = (ix * n + iy) * n + iz` sits at `(axis[ix], axis[iy], axis[iz])`
//! with `axis[i] = (2i + 1 - n) * (v_max / n)`, so the node set is exactly
//! closed under `v -> -v` (index `i` pairs with `n - 1 - i`). All weights
//! equal `(2 v_max / n)^3`.
//!
//! Integration sums `weight[k] * field[k]` in ascending node index; this
//! fixed order is part of the determinism contract. A compensated variant is
//! available behind [`VelocityGrid::integrate_compensated`].

use crate::error::Error;
use crate::Result;

/// Minimum nodes per axis; fewer cannot resolve a unit Gaussian.
pub const MIN_NODES_PER_AXIS: usize = 8;
/// Minimum half-width of the velocity box.
pub const MIN_V_MAX: f64 = 4.0;

/// Uniform midpoint-rule lattice on `[-v_max, v_max]^3`.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    n_per_axis: usize,
    v_max: f64,
    axis: Vec<f64>,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    uniform_weight: f64,
}

/// Validates lattice parameters: `n_per_axis` must be even and at least 8,
/// `v_max` at least 4; both floors signal under-resolved Gaussians.
pub fn check_grid_parameters(n_per_axis: usize, v_max: f64) -> Result<()> {
    if n_per_axis % 2 != 0 {
        return Err(Error::OddNodeCount(n_per_axis));
    }
    if n_per_axis < MIN_NODES_PER_AXIS {
        return Err(Error::TooFewNodes(n_per_axis));
    }
    if v_max < MIN_V_MAX {
        return Err(Error::DomainTooSmall(v_max));
    }
    Ok(())
}

/// Builds the lattice after [`check_grid_parameters`].
pub fn build_grid(n_per_axis: usize, v_max: f64) -> Result<VelocityGrid> {
    check_grid_parameters(n_per_axis, v_max)?;
    let n = n_per_axis;
    let half_h = v_max / n as f64;
    let h = 2.0 * half_h;
    // axis[i] = (2i + 1 - n) * h/2; the integer factor makes the v -> -v
    // symmetry exact in floating point.
    let axis: Vec<f64> = (0..n)
        .map(|i| (2 * i as i64 + 1 - n as i64) as f64 * half_h)
        .collect();
    let mut nodes = Vec::with_capacity(n * n * n);
    for &vx in &axis {
        for &vy in &axis {
            for &vz in &axis {
                nodes.push([vx, vy, vz]);
            }
        }
    }
    let uniform_weight = h * h * h;
    let weights = vec![uniform_weight; nodes.len()];
    Ok(VelocityGrid {
        n_per_axis,
        v_max,
        axis,
        nodes,
        weights,
        uniform_weight,
    })
}

impl VelocityGrid {
    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Per-axis node coordinates, ascending.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The common midpoint-rule weight `(2 v_max / n)^3`.
    pub fn uniform_weight(&self) -> f64 {
        self.uniform_weight
    }

    pub fn node_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n_per_axis + iy) * self.n_per_axis + iz
    }

    /// Quadrature of a per-node field: `sum_k weight_k field_k`, ascending k.
    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        if field.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                got: field.len(),
            });
        }
        let mut acc = 0.0;
        for (w, f) in self.weights.iter().zip(field) {
            acc += w * f;
        }
        Ok(acc)
    }

    /// Kahan-compensated variant of [`integrate`](Self::integrate); same
    /// ascending order, optional where the plain sum's rounding matters.
    pub fn integrate_compensated(&self, field: &[f64]) -> Result<f64> {
        if field.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                got: field.len(),
            });
        }
        let mut sum = 0.0;
        let mut carry = 0.0;
        for (w, f) in self.weights.iter().zip(field) {
            let term = w * f - carry;
            let next = sum + term;
            carry = (next - sum) - term;
            sum = next;
        }
        Ok(sum)
    }

    /// `L^2_v` inner product of two per-node fields.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), self.nodes.len());
        assert_eq!(b.len(), self.nodes.len());
        let mut acc = 0.0;
        for k in 0..a.len() {
            acc += a[k] * b[k];
        }
        acc * self.uniform_weight
    }

    /// `L^2_v` norm of a per-node field.
    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }
}

/// Whether a field stores the absolute distribution `F` or the perturbation
/// `f = (F - m) / sqrt(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Absolute,
    Perturbation,
}

/// Values over spatial cells x velocity nodes, cell-major: the slice
/// `values[c * n_nodes .. (c + 1) * n_nodes]` is cell `c`.
#[derive(Debug, Clone)]
pub struct DistributionField {
    pub n_cells: usize,
    pub n_nodes: usize,
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

impl DistributionField {
    pub fn new(n_cells: usize, n_nodes: usize, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_cells * n_nodes {
            return Err(Error::LengthMismatch {
                expected: n_cells * n_nodes,
                got: values.len(),
            });
        }
        Ok(DistributionField {
            n_cells,
            n_nodes,
            kind,
            values,
        })
    }

    pub fn zeros(n_cells: usize, n_nodes: usize, kind: FieldKind) -> Self {
        DistributionField {
            n_cells,
            n_nodes,
            kind,
            values: vec![0.0; n_cells * n_nodes],
        }
    }

    /// Single-cell field from per-node values.
    pub fn single_cell(kind: FieldKind, values: Vec<f64>) -> Self {
        DistributionField {
            n_cells: 1,
            n_nodes: values.len(),
            kind,
            values,
        }
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.values[c * self.n_nodes..(c + 1) * self.n_nodes]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * self.n_nodes..(c + 1) * self.n_nodes]
    }

    /// All values finite (no NaN/Inf).
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
