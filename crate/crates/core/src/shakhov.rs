//! The Shakhov relaxation target, the local Maxwellian, the relaxation time,
//! and the operator-level diagnostics (heat-flux cancellation, H-functional,
//! positivity minima).
//!
//! The target reads
//! `S_Pr(F) = M(F) [1 + (1-Pr)/5 * q.(v-U) / (rho T^2) * (|v-U|^2/(2T) - 5/2)]`
//! with `M(F)` the local Maxwellian of `F`'s macroscopic state. At `Pr = 1`
//! the bracket is identically one and the target coincides bitwise with
//! `M(F)`; both are evaluated by the same routine.

use crate::error::Error;
use crate::grid::{DistributionField, FieldKind, VelocityGrid};
use crate::moments::{compute_macro, MacroState};
use crate::Result;
use rayon::prelude::*;

/// Floor applied inside the logarithm of the H-functional; `x ln x -> 0`
/// makes the clamped integrand consistent at vanishing `F`.
pub const H_LOG_FLOOR: f64 = 1e-30;

/// Threshold below which a distribution minimum is flagged as a positivity
/// violation.
pub const POSITIVITY_FLAG: f64 = -1e-12;

/// Model parameters: Prandtl number and the relaxation-time law
/// `1/tau = rho^eta T^w / tau0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub pr: f64,
    pub tau0: f64,
    pub eta: f64,
    pub w: f64,
}

impl ModelParams {
    pub fn new(pr: f64, tau0: f64, eta: f64, w: f64) -> Result<Self> {
        if !(pr >= 0.0) {
            return Err(Error::InvalidParameter(format!("pr must be >= 0, got {pr}")));
        }
        if !(tau0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau0 must be > 0, got {tau0}"
            )));
        }
        if !(eta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be >= 0, got {eta}"
            )));
        }
        if !w.is_finite() {
            return Err(Error::InvalidParameter(format!("w must be finite, got {w}")));
        }
        Ok(ModelParams { pr, tau0, eta, w })
    }

    /// BGK-limit parameters `(Pr, tau0, eta, w) = (1, 1, 1, 0.5)` with the
    /// Prandtl number replaced by `pr`.
    pub fn with_pr(self, pr: f64) -> Self {
        ModelParams { pr, ..self }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            pr: 2.0 / 3.0,
            tau0: 1.0,
            eta: 1.0,
            w: 0.5,
        }
    }
}

/// Inverse relaxation time `1/tau = rho^eta T^w / tau0`.
pub fn inverse_relaxation_time(state: &MacroState, params: &ModelParams) -> Result<f64> {
    if state.rho <= 0.0 {
        return Err(Error::NonpositiveDensity(state.rho));
    }
    if state.temperature <= 0.0 {
        return Err(Error::NonpositiveTemperature(state.temperature));
    }
    Ok(state.rho.powf(params.eta) * state.temperature.powf(params.w) / params.tau0)
}

/// Shakhov target of a macroscopic state, evaluated at every grid node.
/// The Gaussian factor is evaluated separably per axis, which pins one
/// deterministic floating-point path for Maxwellian and target alike.
pub fn shakhov_values(state: &MacroState, pr: f64, grid: &VelocityGrid) -> Result<Vec<f64>> {
    if state.rho <= 0.0 {
        return Err(Error::NonpositiveDensity(state.rho));
    }
    let t = state.temperature;
    if t <= 0.0 {
        return Err(Error::NonpositiveTemperature(t));
    }
    let n = grid.n_per_axis();
    let axis = grid.axis();
    let inv2t = 1.0 / (2.0 * t);
    let st = (2.0 * std::f64::consts::PI * t).sqrt();
    let norm = state.rho / (st * st * st);
    // (1 - Pr)/5 * 1/(rho T^2); the bracket is exactly 1 when this vanishes
    let cq = (1.0 - pr) / (5.0 * state.rho * t * t);

    let mut dv = vec![[0.0f64; 3]; n]; // v_i - U_i per axis
    let mut ex = vec![[0.0f64; 3]; n]; // exp(-(v_i - U_i)^2 / 2T) per axis
    for i in 0..n {
        for a in 0..3 {
            let d = axis[i] - state.u[a];
            dv[i][a] = d;
            ex[i][a] = (-d * d * inv2t).exp();
        }
    }

    let mut out = vec![0.0; grid.n_nodes()];
    let q = state.q;
    let mut k = 0;
    for ix in 0..n {
        let dx = dv[ix][0];
        let gx = ex[ix][0] * norm;
        let qx = q[0] * dx;
        let rx = dx * dx;
        for iy in 0..n {
            let dy = dv[iy][1];
            let gxy = gx * ex[iy][1];
            let qxy = qx + q[1] * dy;
            let rxy = rx + dy * dy;
            for iz in 0..n {
                let dz = dv[iz][2];
                let m_val = gxy * ex[iz][2];
                let qdv = qxy + q[2] * dz;
                let r2 = rxy + dz * dz;
                let bracket = 1.0 + cq * qdv * (r2 * inv2t - 2.5);
                out[k] = m_val * bracket;
                k += 1;
            }
        }
    }
    Ok(out)
}

/// Local Maxwellian `rho / (2 pi T)^{3/2} exp(-|v-U|^2 / 2T)` at every node.
pub fn maxwellian(state: &MacroState, grid: &VelocityGrid) -> Result<Vec<f64>> {
    // Pr = 1 zeroes the heat-flux bracket exactly.
    shakhov_values(state, 1.0, grid)
}

/// The normalized global Maxwellian `m(v)` at every node.
pub fn global_maxwellian(grid: &VelocityGrid) -> Vec<f64> {
    maxwellian(&MacroState::equilibrium(), grid).expect("equilibrium state is valid")
}

/// Applies the Shakhov target cellwise: `S = S_Pr(macro(F))` per cell.
pub fn shakhov_apply(
    field: &DistributionField,
    params: &ModelParams,
    grid: &VelocityGrid,
) -> Result<DistributionField> {
    let n_nodes = grid.n_nodes();
    let mut out = DistributionField::zeros(field.n_cells, n_nodes, FieldKind::Absolute);
    out.values
        .par_chunks_mut(n_nodes)
        .enumerate()
        .try_for_each(|(c, row)| -> Result<()> {
            let state = compute_macro(field, grid, c)?;
            let s = shakhov_values(&state, params.pr, grid)?;
            row.copy_from_slice(&s);
            Ok(())
        })?;
    Ok(out)
}

/// Residual of the cancellation identity
/// `int (S_Pr(F) - F)(v_i - U_i)|v - U|^2 dv = -Pr q_i`
/// for one cell, i.e. the quadrature value of the left side plus `Pr q_i`.
pub fn cancellation_residual(
    field: &DistributionField,
    params: &ModelParams,
    grid: &VelocityGrid,
    cell: usize,
) -> Result<[f64; 3]> {
    let state = compute_macro(field, grid, cell)?;
    let s = shakhov_values(&state, params.pr, grid)?;
    let f_cell = field.cell(cell);
    let mut acc = [0.0f64; 3];
    for (k, v) in grid.nodes().iter().enumerate() {
        let d = [v[0] - state.u[0], v[1] - state.u[1], v[2] - state.u[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let diff = s[k] - f_cell[k];
        for i in 0..3 {
            acc[i] += diff * d[i] * r2;
        }
    }
    let w = grid.uniform_weight();
    let mut res = [0.0; 3];
    for i in 0..3 {
        res[i] = acc[i] * w + params.pr * state.q[i];
    }
    Ok(res)
}

/// `sum_cells dx * int F ln F dv`, with `F` clamped below at [`H_LOG_FLOOR`]
/// inside the logarithm.
pub fn h_functional(field: &DistributionField, grid: &VelocityGrid, dx: f64) -> f64 {
    let w = grid.uniform_weight();
    let mut total = 0.0;
    for c in 0..field.n_cells {
        let mut cell_sum = 0.0;
        for &fk in field.cell(c) {
            cell_sum += fk * fk.max(H_LOG_FLOOR).ln();
        }
        total += cell_sum * w * dx;
    }
    total
}

/// Global minima of a distribution and its Shakhov target, with argmin
/// locations. A run is flagged when either minimum drops below
/// [`POSITIVITY_FLAG`].
#[derive(Debug, Clone, Copy)]
pub struct PositivityReport {
    pub min_f: f64,
    pub argmin_f: (usize, usize),
    pub min_s: f64,
    pub argmin_s: (usize, usize),
    pub flagged: bool,
}

pub fn positivity_report(f: &DistributionField, s: &DistributionField) -> PositivityReport {
    let scan = |field: &DistributionField| {
        let mut min = f64::INFINITY;
        let mut arg = (0usize, 0usize);
        for c in 0..field.n_cells {
            for (k, &val) in field.cell(c).iter().enumerate() {
                if val < min {
                    min = val;
                    arg = (c, k);
                }
            }
        }
        (min, arg)
    };
    let (min_f, argmin_f) = scan(f);
    let (min_s, argmin_s) = scan(s);
    PositivityReport {
        min_f,
        argmin_f,
        min_s,
        argmin_s,
        flagged: min_f < POSITIVITY_FLAG || min_s < POSITIVITY_FLAG,
    }
}
