//! Macroscopic fields of a distribution and the derived `(G, H)` moments.
//!
//! All centered moments are assembled from raw moments gathered in a single
//! quadrature pass (no shifted re-integration), and the temperature is
//! defined as `trace(Theta) / 3`, which makes the trace relation exact by
//! construction.

use crate::error::Error;
use crate::grid::{DistributionField, VelocityGrid};
use crate::Result;

/// Density floor below which a cell is treated as vacuum.
pub const RHO_MIN: f64 = 1e-8;

/// Index pairs for the symmetric 3x3 tensors stored as 6-vectors, in the
/// order {11, 22, 33, 12, 23, 31}.
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)];

/// Position of `(i, j)` (any order) in the 6-vector layout.
pub fn sym_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (1, 2) => 4,
        (0, 2) => 5,
        _ => unreachable!("indices out of range"),
    }
}

/// Macroscopic state `(rho, U, T, Theta, q)` of one spatial cell. `theta`
/// uses the 6-vector ordering of [`SYM_PAIRS`]; `temperature` is always the
/// trace of `theta` divided by three.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    pub rho: f64,
    pub u: [f64; 3],
    pub temperature: f64,
    pub theta: [f64; 6],
    pub q: [f64; 3],
}

impl MacroState {
    pub fn new(rho: f64, u: [f64; 3], theta: [f64; 6], q: [f64; 3]) -> Self {
        MacroState {
            rho,
            u,
            temperature: (theta[0] + theta[1] + theta[2]) / 3.0,
            theta,
            q,
        }
    }

    /// State with isotropic stress `Theta = T I`.
    pub fn isotropic(rho: f64, u: [f64; 3], temperature: f64) -> Self {
        MacroState::new(
            rho,
            u,
            [temperature, temperature, temperature, 0.0, 0.0, 0.0],
            [0.0; 3],
        )
    }

    /// The global equilibrium `(1, 0, 1, I, 0)`.
    pub fn equilibrium() -> Self {
        MacroState::isotropic(1.0, [0.0; 3], 1.0)
    }

    pub fn theta_get(&self, i: usize, j: usize) -> f64 {
        self.theta[sym_index(i, j)]
    }

    pub fn theta_trace(&self) -> f64 {
        self.theta[0] + self.theta[1] + self.theta[2]
    }

    pub fn speed_squared(&self) -> f64 {
        self.u[0] * self.u[0] + self.u[1] * self.u[1] + self.u[2] * self.u[2]
    }
}

/// The moments `G` (6-vector, [`SYM_PAIRS`] order) and `H` (3-vector)
/// obtained from the macroscopic fields by the quadratic change of variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhMoments {
    pub g: [f64; 6],
    pub h: [f64; 3],
}

/// Raw velocity moments of one cell: `m0 = int F`, `m1_i = int F v_i`,
/// `m2` against `v_i v_j` (6-vector), `m3_i = int F v_i |v|^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RawMoments {
    pub m0: f64,
    pub m1: [f64; 3],
    pub m2: [f64; 6],
    pub m3: [f64; 3],
}

impl RawMoments {
    pub fn m2_get(&self, i: usize, j: usize) -> f64 {
        self.m2[sym_index(i, j)]
    }

    pub fn m2_trace(&self) -> f64 {
        self.m2[0] + self.m2[1] + self.m2[2]
    }
}

/// Gathers the thirteen raw moments of a per-node field in one deterministic
/// ascending-index pass.
pub fn raw_moments(cell: &[f64], grid: &VelocityGrid) -> RawMoments {
    assert_eq!(cell.len(), grid.n_nodes());
    let mut m = RawMoments::default();
    for (v, &fk) in grid.nodes().iter().zip(cell) {
        let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        m.m0 += fk;
        m.m1[0] += fk * v[0];
        m.m1[1] += fk * v[1];
        m.m1[2] += fk * v[2];
        m.m2[0] += fk * v[0] * v[0];
        m.m2[1] += fk * v[1] * v[1];
        m.m2[2] += fk * v[2] * v[2];
        m.m2[3] += fk * v[0] * v[1];
        m.m2[4] += fk * v[1] * v[2];
        m.m2[5] += fk * v[2] * v[0];
        m.m3[0] += fk * v[0] * r2;
        m.m3[1] += fk * v[1] * r2;
        m.m3[2] += fk * v[2] * r2;
    }
    let w = grid.uniform_weight();
    m.m0 *= w;
    for i in 0..3 {
        m.m1[i] *= w;
        m.m3[i] *= w;
    }
    for i in 0..6 {
        m.m2[i] *= w;
    }
    m
}

/// Macroscopic state from raw moments. Fails on vacuum (`m0 <= RHO_MIN`).
pub fn macro_from_raw(m: &RawMoments, cell: usize) -> Result<MacroState> {
    if m.m0 <= RHO_MIN {
        return Err(Error::Vacuum {
            cell,
            rho: m.m0,
            floor: RHO_MIN,
        });
    }
    let rho = m.m0;
    let u = [m.m1[0] / rho, m.m1[1] / rho, m.m1[2] / rho];
    let mut theta = [0.0; 6];
    for (s, &(i, j)) in SYM_PAIRS.iter().enumerate() {
        theta[s] = m.m2[s] / rho - u[i] * u[j];
    }
    let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let m2tr = m.m2_trace();
    let mut q = [0.0; 3];
    for i in 0..3 {
        let mut cross = 0.0;
        for j in 0..3 {
            cross += u[j] * m.m2_get(i, j);
        }
        q[i] = m.m3[i] - 2.0 * cross - u[i] * m2tr + 2.0 * rho * u[i] * u2;
    }
    Ok(MacroState::new(rho, u, theta, q))
}

/// Macroscopic fields of one cell of an absolute distribution field.
pub fn compute_macro(
    field: &DistributionField,
    grid: &VelocityGrid,
    cell: usize,
) -> Result<MacroState> {
    if cell >= field.n_cells {
        return Err(Error::CellOutOfRange {
            cell,
            n_cells: field.n_cells,
        });
    }
    let m = raw_moments(field.cell(cell), grid);
    macro_from_raw(&m, cell)
}

/// The `(G, H)` moments of a state:
/// `G_ii = (rho Theta_ii + rho U_i^2 - rho) / 2`,
/// `G_ij = rho Theta_ij + rho U_i U_j` for `i != j`, and
/// `H_i = (q_i + 2 sum_j rho U_j Theta_ij + rho U_i |U|^2
///         + rho U_i tr(Theta) - 5 rho U_i) / sqrt(10)`.
pub fn compute_gh(state: &MacroState) -> GhMoments {
    let rho = state.rho;
    let u = state.u;
    let u2 = state.speed_squared();
    let tr = state.theta_trace();
    let mut g = [0.0; 6];
    for (s, &(i, j)) in SYM_PAIRS.iter().enumerate() {
        if i == j {
            g[s] = 0.5 * (rho * state.theta[s] + rho * u[i] * u[i] - rho);
        } else {
            g[s] = rho * state.theta[s] + rho * u[i] * u[j];
        }
    }
    let mut h = [0.0; 3];
    let sqrt10 = 10.0f64.sqrt();
    for i in 0..3 {
        let mut cross = 0.0;
        for j in 0..3 {
            cross += 2.0 * rho * u[j] * state.theta_get(i, j);
        }
        h[i] = (state.q[i] + cross + rho * u[i] * u2 + rho * u[i] * tr - 5.0 * rho * u[i]) / sqrt10;
    }
    GhMoments { g, h }
}
