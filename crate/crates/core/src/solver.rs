//! Time integration of the Shakhov model on a periodic 1D-in-x, 3D-in-v
//! domain (one cell = space-homogeneous), via Strang splitting
//! transport(dt/2) -> relaxation(dt) -> transport(dt/2).
//!
//! Transport is first-order upwind per velocity node along x with periodic
//! wrap; with the CFL bound each update is a convex combination of
//! neighboring cells, so per-node spatial sums are conserved to round-off
//! and nonnegativity is preserved. Relaxation advances
//! `dF/dt = (1/tau(F)) (S_Pr(F) - F)` per cell with explicit two-stage
//! SSP-RK2 under `dt <= 0.5 tau`.

use crate::diagnostics::{self, DiagnosticsRecord, EnergyTracker};
use crate::error::Error;
use crate::grid::{build_grid, DistributionField, FieldKind, VelocityGrid};
use crate::linear;
use crate::moments::{macro_from_raw, raw_moments};
use crate::shakhov::{self, ModelParams};
use crate::Result;
use rayon::prelude::*;

/// Advective CFL bound for the upwind transport sweep.
pub const CFL_LIMIT: f64 = 0.9;
/// Fraction of the local relaxation time the explicit stage may take.
pub const STABILITY_FRACTION: f64 = 0.5;

/// Initial data families. The sine family perturbs `(rho, U_1, T)` of a
/// local Maxwellian; the heat-flux family seeds the non-conservative mode
/// `ebar_6(v) cos(2 pi mode x / L)` (mode 0 gives a homogeneous seed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Equilibrium,
    MaxwellianSine { amplitude: f64, mode: u32 },
    HeatFluxMode { amplitude: f64, mode: u32 },
}

impl InitialCondition {
    pub fn kind_str(&self) -> &'static str {
        match self {
            InitialCondition::Equilibrium => "equilibrium",
            InitialCondition::MaxwellianSine { .. } => "maxwellian-sine",
            InitialCondition::HeatFluxMode { .. } => "heat-flux-mode",
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            InitialCondition::Equilibrium => 0.0,
            InitialCondition::MaxwellianSine { amplitude, .. }
            | InitialCondition::HeatFluxMode { amplitude, .. } => *amplitude,
        }
    }

    pub fn mode(&self) -> u32 {
        match self {
            InitialCondition::Equilibrium => 0,
            InitialCondition::MaxwellianSine { mode, .. }
            | InitialCondition::HeatFluxMode { mode, .. } => *mode,
        }
    }
}

/// Full run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub n_per_axis: usize,
    pub v_max: f64,
    pub n_cells: usize,
    pub domain_length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: usize,
    pub ic: InitialCondition,
    pub enforce_third_moment_zero: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            params: ModelParams::default(),
            n_per_axis: 24,
            v_max: 8.0,
            n_cells: 1,
            domain_length: 2.0 * std::f64::consts::PI,
            dt: 0.01,
            t_end: 10.0,
            output_every: 10,
            ic: InitialCondition::Equilibrium,
            enforce_third_moment_zero: false,
        }
    }
}

impl SimConfig {
    pub fn dx(&self) -> f64 {
        self.domain_length / self.n_cells as f64
    }

    /// Checks the structural invariants: positive sizes, the advective CFL
    /// bound (spatial runs only), and the relaxation stability bound
    /// `dt <= 0.5 tau` evaluated at the global equilibrium.
    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 1 {
            return Err(Error::InvalidConfig("n_cells must be >= 1".into()));
        }
        if !(self.domain_length > 0.0) {
            return Err(Error::InvalidConfig("domain_length must be > 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be > 0".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidConfig("t_end must be > 0".into()));
        }
        if self.output_every < 1 {
            return Err(Error::InvalidConfig("output_every must be >= 1".into()));
        }
        crate::grid::check_grid_parameters(self.n_per_axis, self.v_max)?;
        if !(self.ic.amplitude().is_finite()) {
            return Err(Error::InvalidConfig("ic.amplitude must be finite".into()));
        }
        if self.n_cells > 1 {
            let ratio = self.v_max * self.dt / self.dx();
            if ratio > CFL_LIMIT {
                return Err(Error::CflViolation {
                    ratio,
                    limit: CFL_LIMIT,
                });
            }
        }
        // at the global equilibrium 1/tau = 1/tau0
        let bound = STABILITY_FRACTION * self.params.tau0;
        if self.dt > bound {
            return Err(Error::RelaxationUnstable {
                dt: self.dt,
                fraction: STABILITY_FRACTION,
                bound,
            });
        }
        Ok(())
    }

    pub fn build_velocity_grid(&self) -> Result<VelocityGrid> {
        build_grid(self.n_per_axis, self.v_max)
    }
}

/// Builds the initial distribution for a configuration. The sine family is
/// post-adjusted so its total mass, momentum, and energy match the global
/// Maxwellian exactly (the standing normalization of the near-equilibrium
/// setting); the heat-flux family has matching totals by construction.
pub fn initial_state(config: &SimConfig, grid: &VelocityGrid) -> Result<DistributionField> {
    let n_nodes = grid.n_nodes();
    let n_cells = config.n_cells;
    let dx = config.dx();
    let m = shakhov::global_maxwellian(grid);
    let mut field = DistributionField::zeros(n_cells, n_nodes, FieldKind::Absolute);

    match config.ic {
        InitialCondition::Equilibrium => {
            for c in 0..n_cells {
                field.cell_mut(c).copy_from_slice(&m);
            }
        }
        InitialCondition::MaxwellianSine { amplitude, mode } => {
            let k = 2.0 * std::f64::consts::PI * mode as f64 / config.domain_length;
            for c in 0..n_cells {
                let x = (c as f64 + 0.5) * dx;
                let s = (k * x).sin();
                let state = crate::moments::MacroState::isotropic(
                    1.0 + amplitude * s,
                    [amplitude * s, 0.0, 0.0],
                    1.0 + amplitude * (k * x).cos(),
                );
                let values = shakhov::maxwellian(&state, grid)?;
                field.cell_mut(c).copy_from_slice(&values);
            }
            remove_conserved_mismatch(&mut field, grid, dx, config.domain_length);
        }
        InitialCondition::HeatFluxMode { amplitude, mode } => {
            let k = 2.0 * std::f64::consts::PI * mode as f64 / config.domain_length;
            let basis = linear::build_bases(grid);
            let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
            for c in 0..n_cells {
                let x = (c as f64 + 0.5) * dx;
                let amp = amplitude * (k * x).cos();
                let row = field.cell_mut(c);
                for kk in 0..n_nodes {
                    row[kk] = m[kk] + sm[kk] * amp * basis.ebar[5][kk];
                }
            }
        }
    }

    if config.enforce_third_moment_zero {
        remove_total_third_moment(&mut field, grid, dx, config.domain_length);
    }
    Ok(field)
}

/// Subtracts the spatially uniform conservative components of the
/// perturbation so the total mass, momentum, and energy of `F` equal those
/// of the global Maxwellian at the quadrature level.
fn remove_conserved_mismatch(
    field: &mut DistributionField,
    grid: &VelocityGrid,
    dx: f64,
    domain_length: f64,
) {
    let basis = linear::build_bases(grid);
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    let n_nodes = grid.n_nodes();
    // mean ebar_i coefficient of f over x, for the five conservative fields
    let mut gamma = [0.0f64; 5];
    for c in 0..field.n_cells {
        let row = field.cell(c);
        for i in 0..5 {
            let mut acc = 0.0;
            for k in 0..n_nodes {
                // <f, ebar_i> with f = (F - m)/sqrt(m): the sqrt(m) factors cancel
                acc += (row[k] - m[k]) * basis.ebar[i][k] / sm[k];
            }
            gamma[i] += acc * grid.uniform_weight() * dx;
        }
    }
    for g in gamma.iter_mut() {
        *g /= domain_length;
    }
    for c in 0..field.n_cells {
        let row = field.cell_mut(c);
        for k in 0..n_nodes {
            let mut corr = 0.0;
            for i in 0..5 {
                corr += gamma[i] * basis.ebar[i][k];
            }
            row[k] -= sm[k] * corr;
        }
    }
}

/// Subtracts the right multiple of the spatially uniform heat-flux modes so
/// the total third moment `int int F v |v|^2 dv dx` vanishes exactly at the
/// quadrature level. The calibration constant is the grid value of
/// `int sqrt(m) ebar_{5+i} v_i |v|^2 dv` (analytically `sqrt(10)`).
pub fn remove_total_third_moment(
    field: &mut DistributionField,
    grid: &VelocityGrid,
    dx: f64,
    domain_length: f64,
) {
    let basis = linear::build_bases(grid);
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    let n_nodes = grid.n_nodes();
    let t3 = diagnostics::total_third_moment(field, grid, dx);
    let mut kappa = [0.0f64; 3];
    for i in 0..3 {
        let kernel: Vec<f64> = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                sm[k] * basis.ebar[5 + i][k] * v[i] * r2
            })
            .collect();
        let cal = grid.integrate(&kernel).unwrap();
        kappa[i] = t3[i] / (cal * domain_length);
    }
    for c in 0..field.n_cells {
        let row = field.cell_mut(c);
        for k in 0..n_nodes {
            let corr = kappa[0] * basis.ebar[5][k]
                + kappa[1] * basis.ebar[6][k]
                + kappa[2] * basis.ebar[7][k];
            row[k] -= sm[k] * corr;
        }
    }
}

/// One upwind transport sweep of size `dt`. No-op for a single cell.
pub fn transport_step(
    field: &DistributionField,
    dt: f64,
    grid: &VelocityGrid,
    dx: f64,
) -> Result<DistributionField> {
    if field.n_cells == 1 {
        return Ok(field.clone());
    }
    let n = grid.n_per_axis();
    let axis = grid.axis();
    let max_ratio = axis
        .iter()
        .map(|v| v.abs() * dt / dx)
        .fold(0.0f64, f64::max);
    if max_ratio > CFL_LIMIT {
        return Err(Error::CflViolation {
            ratio: max_ratio,
            limit: CFL_LIMIT,
        });
    }
    let n_nodes = grid.n_nodes();
    let n_cells = field.n_cells;
    let block = n * n; // nodes sharing one v1 value are contiguous
    let mut out = DistributionField::zeros(n_cells, n_nodes, field.kind);
    out.values
        .par_chunks_mut(n_nodes)
        .enumerate()
        .for_each(|(c, row)| {
            let here = field.cell(c);
            let left = field.cell((c + n_cells - 1) % n_cells);
            let right = field.cell((c + 1) % n_cells);
            for ix in 0..n {
                let nu = axis[ix] * dt / dx;
                let lo = ix * block;
                let hi = lo + block;
                if axis[ix] > 0.0 {
                    for k in lo..hi {
                        row[k] = here[k] - nu * (here[k] - left[k]);
                    }
                } else {
                    for k in lo..hi {
                        row[k] = here[k] - nu * (right[k] - here[k]);
                    }
                }
            }
        });
    Ok(out)
}

/// One SSP-RK2 relaxation step of size `dt`, cell by cell.
pub fn relaxation_step(
    field: &DistributionField,
    dt: f64,
    params: &ModelParams,
    grid: &VelocityGrid,
) -> Result<DistributionField> {
    let n_nodes = grid.n_nodes();
    let mut out = DistributionField::zeros(field.n_cells, n_nodes, FieldKind::Absolute);
    out.values
        .par_chunks_mut(n_nodes)
        .enumerate()
        .try_for_each(|(c, row)| relax_cell(field.cell(c), row, c, dt, params, grid))?;
    Ok(out)
}

fn relax_cell(
    cell: &[f64],
    out: &mut [f64],
    cell_index: usize,
    dt: f64,
    params: &ModelParams,
    grid: &VelocityGrid,
) -> Result<()> {
    let rate = |values: &[f64]| -> Result<(f64, Vec<f64>)> {
        let state = macro_from_raw(&raw_moments(values, grid), cell_index)?;
        let inv_tau = shakhov::inverse_relaxation_time(&state, params)?;
        if dt * inv_tau > STABILITY_FRACTION * (1.0 + 1e-12) {
            return Err(Error::RelaxationUnstable {
                dt,
                fraction: STABILITY_FRACTION,
                bound: STABILITY_FRACTION / inv_tau,
            });
        }
        let s = shakhov::shakhov_values(&state, params.pr, grid)?;
        Ok((inv_tau, s))
    };
    let (it0, s0) = rate(cell)?;
    let stage: Vec<f64> = cell
        .iter()
        .zip(&s0)
        .map(|(f, s)| f + dt * it0 * (s - f))
        .collect();
    let (it1, s1) = rate(&stage)?;
    for k in 0..cell.len() {
        let r0 = it0 * (s0[k] - cell[k]);
        let r1 = it1 * (s1[k] - stage[k]);
        out[k] = cell[k] + 0.5 * dt * (r0 + r1);
    }
    Ok(())
}

/// One Strang step: transport(dt/2), relaxation(dt), transport(dt/2).
pub fn strang_step(
    field: &DistributionField,
    dt: f64,
    params: &ModelParams,
    grid: &VelocityGrid,
    dx: f64,
) -> Result<DistributionField> {
    if field.n_cells == 1 {
        return relaxation_step(field, dt, params, grid);
    }
    let half = transport_step(field, 0.5 * dt, grid, dx)?;
    let relaxed = relaxation_step(&half, dt, params, grid)?;
    transport_step(&relaxed, 0.5 * dt, grid, dx)
}

/// Outcome of a run: one diagnostics record per output interval, the final
/// state, and the abort reason if a step failed (records up to the last
/// good step are kept).
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: DistributionField,
    pub grid: VelocityGrid,
    pub aborted: Option<String>,
}

/// Runs a configuration to `t_end`, emitting a [`DiagnosticsRecord`] every
/// `output_every` steps (plus the initial and final states).
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    config.validate()?;
    let grid = config.build_velocity_grid()?;
    let mut state = initial_state(config, &grid)?;
    let dx = config.dx();
    let n_steps = (config.t_end / config.dt).round().max(1.0) as usize;

    let mut tracker = EnergyTracker::new();
    let mut records = Vec::new();
    let mut aborted = None;

    let first = diagnostics::collect_record(&state, &grid, &config.params, dx, 0.0, &mut tracker)?;
    records.push(first);

    for step in 1..=n_steps {
        let t = step as f64 * config.dt;
        match strang_step(&state, config.dt, &config.params, &grid, dx) {
            Ok(next) => state = next,
            Err(e) => {
                aborted = Some(format!("step {step} (t = {t:.6}): {e}"));
                break;
            }
        }
        if step % config.output_every == 0 || step == n_steps {
            match diagnostics::collect_record(&state, &grid, &config.params, dx, t, &mut tracker) {
                Ok(rec) => records.push(rec),
                Err(e) => {
                    aborted = Some(format!("diagnostics at t = {t:.6}: {e}"));
                    break;
                }
            }
        }
    }

    Ok(RunOutput {
        records,
        final_state: state,
        grid,
        aborted,
    })
}

/// Centered-in-time check of the third-moment evolution law. Steps a copy of
/// the state twice by `dt_window`, returning
/// `lhs_i = (T3(t + 2 dt) - T3(t)) / (2 dt)` and the law's right side
/// `rhs_i = sum_x dx (1/tau) (-Pr q_i + 2 U_i rho T - 2 sum_j rho U_j Theta_ij)`
/// evaluated at the midpoint state.
pub fn third_moment_balance(
    field: &DistributionField,
    params: &ModelParams,
    grid: &VelocityGrid,
    dx: f64,
    dt_window: f64,
) -> Result<([f64; 3], [f64; 3])> {
    let t3_0 = diagnostics::total_third_moment(field, grid, dx);
    let mid = strang_step(field, dt_window, params, grid, dx)?;
    let end = strang_step(&mid, dt_window, params, grid, dx)?;
    let t3_2 = diagnostics::total_third_moment(&end, grid, dx);

    let mut lhs = [0.0; 3];
    for i in 0..3 {
        lhs[i] = (t3_2[i] - t3_0[i]) / (2.0 * dt_window);
    }

    let mut rhs = [0.0; 3];
    for c in 0..mid.n_cells {
        let state = macro_from_raw(&raw_moments(mid.cell(c), grid), c)?;
        let inv_tau = shakhov::inverse_relaxation_time(&state, params)?;
        for i in 0..3 {
            let mut cross = 0.0;
            for j in 0..3 {
                cross += 2.0 * state.rho * state.u[j] * state.theta_get(i, j);
            }
            rhs[i] += dx
                * inv_tau
                * (-params.pr * state.q[i]
                    + 2.0 * state.u[i] * state.rho * state.temperature
                    - cross);
        }
    }
    Ok((lhs, rhs))
}
