//! Per-output diagnostics of a run: conserved totals, perturbation norms,
//! the discrete energy functional, the H-functional, positivity minima,
//! macroscopic extrema, and the micro-macro coefficients, plus the CSV
//! writer for the diagnostics stream and the decay-rate fit.

use crate::error::Error;
use crate::grid::{DistributionField, VelocityGrid};
use crate::moments::{macro_from_raw, raw_moments};
use crate::shakhov::{self, ModelParams};
use crate::Result;

/// Micro-macro expansion coefficients of `P_Pr f` at one cell:
/// `a = <f, sqrt(m)> - <f, (|v|^2-3) sqrt(m)> / 2`,
/// `b_i = <f, v_i sqrt(m)> - <f, v_i (|v|^2-5) sqrt(m)> / 2`,
/// `c = <f, (|v|^2-3) sqrt(m)> / 6`,
/// `d_i = <f, v_i (|v|^2-5) sqrt(m)> / 10`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MicroMacroCoeffs {
    pub a: f64,
    pub b: [f64; 3],
    pub c: f64,
    pub d: [f64; 3],
}

/// Coefficients from a per-node perturbation.
pub fn micro_macro_coeffs(f: &[f64], grid: &VelocityGrid) -> MicroMacroCoeffs {
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    micro_macro_with_sqrt_m(f, grid, &sm)
}

pub(crate) fn micro_macro_with_sqrt_m(
    f: &[f64],
    grid: &VelocityGrid,
    sqrt_m: &[f64],
) -> MicroMacroCoeffs {
    let mut m0 = 0.0; // <f, sqrt m>
    let mut mt = 0.0; // <f, (|v|^2 - 3) sqrt m>
    let mut mv = [0.0; 3]; // <f, v_i sqrt m>
    let mut mq = [0.0; 3]; // <f, v_i (|v|^2 - 5) sqrt m>
    for ((v, &s), &fk) in grid.nodes().iter().zip(sqrt_m).zip(f) {
        let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let g = fk * s;
        m0 += g;
        mt += g * (r2 - 3.0);
        for i in 0..3 {
            mv[i] += g * v[i];
            mq[i] += g * v[i] * (r2 - 5.0);
        }
    }
    let w = grid.uniform_weight();
    m0 *= w;
    mt *= w;
    for i in 0..3 {
        mv[i] *= w;
        mq[i] *= w;
    }
    MicroMacroCoeffs {
        a: m0 - 0.5 * mt,
        b: [mv[0] - 0.5 * mq[0], mv[1] - 0.5 * mq[1], mv[2] - 0.5 * mq[2]],
        c: mt / 6.0,
        d: [mq[0] / 10.0, mq[1] / 10.0, mq[2] / 10.0],
    }
}

/// Spatially integrated moments of `F` against `1, v, |v|^2`.
pub fn conserved_totals(
    field: &DistributionField,
    grid: &VelocityGrid,
    dx: f64,
) -> (f64, [f64; 3], f64) {
    let mut mass = 0.0;
    let mut momentum = [0.0; 3];
    let mut energy = 0.0;
    for c in 0..field.n_cells {
        let raw = raw_moments(field.cell(c), grid);
        mass += dx * raw.m0;
        for i in 0..3 {
            momentum[i] += dx * raw.m1[i];
        }
        energy += dx * raw.m2_trace();
    }
    (mass, momentum, energy)
}

/// Spatially integrated third moment `int int F v_i |v|^2 dv dx`.
pub fn total_third_moment(field: &DistributionField, grid: &VelocityGrid, dx: f64) -> [f64; 3] {
    let mut t3 = [0.0; 3];
    for c in 0..field.n_cells {
        let raw = raw_moments(field.cell(c), grid);
        for i in 0..3 {
            t3[i] += dx * raw.m3[i];
        }
    }
    t3
}

/// One diagnostics output. `min_f`/`min_s` are the global minima of the
/// distribution and its Shakhov target; the `mm_*` fields carry the
/// spatially integrated micro-macro coefficients and their per-cell extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub third_moment: [f64; 3],
    pub l2_norm_f: f64,
    pub energy_instant: f64,
    pub energy_production: f64,
    pub h_value: f64,
    pub min_f: f64,
    pub min_s: f64,
    pub max_rho_dev: f64,
    pub max_speed: f64,
    pub max_theta_dev: f64,
    pub max_q: f64,
    pub mm_total: MicroMacroCoeffs,
    pub mm_max: [f64; 4],
}

/// Incremental record-to-record state for the discrete energy functional
/// `E = (1/2) (||f||^2 + ||d_x f||^2 + ||d_t f||^2)` plus the trapezoid
/// accumulation of the same sum (the production integral). The time
/// derivative is a backward difference between consecutive records and is
/// zero at the first one.
#[derive(Debug, Default)]
pub struct EnergyTracker {
    prev: Option<(f64, Vec<f64>, f64)>, // (t, f values, g)
    production: f64,
}

impl EnergyTracker {
    pub fn new() -> Self {
        EnergyTracker::default()
    }
}

/// Builds the diagnostics record at time `t`, updating the energy tracker.
pub fn collect_record(
    field: &DistributionField,
    grid: &VelocityGrid,
    params: &ModelParams,
    dx: f64,
    t: f64,
    tracker: &mut EnergyTracker,
) -> Result<DiagnosticsRecord> {
    let n_nodes = grid.n_nodes();
    let n_cells = field.n_cells;
    for c in 0..n_cells {
        if field.cell(c).iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell: c });
        }
    }
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();

    // perturbation values for norms and micro-macro coefficients
    let mut f_vals = vec![0.0; field.values.len()];
    for c in 0..n_cells {
        let row = field.cell(c);
        let dst = &mut f_vals[c * n_nodes..(c + 1) * n_nodes];
        for k in 0..n_nodes {
            dst[k] = (row[k] - m[k]) / sm[k];
        }
    }

    let w = grid.uniform_weight();
    let l2_sq = |vals: &[f64]| -> f64 {
        let mut acc = 0.0;
        for chunk in vals.chunks(n_nodes) {
            let mut cell = 0.0;
            for &x in chunk {
                cell += x * x;
            }
            acc += cell * w * dx;
        }
        acc
    };

    let norm_sq = l2_sq(&f_vals);
    // central x-derivative (periodic); identically zero for one cell
    let mut g = norm_sq;
    if n_cells > 1 {
        let mut dxf = vec![0.0; f_vals.len()];
        for c in 0..n_cells {
            let left = (c + n_cells - 1) % n_cells;
            let right = (c + 1) % n_cells;
            for k in 0..n_nodes {
                dxf[c * n_nodes + k] =
                    (f_vals[right * n_nodes + k] - f_vals[left * n_nodes + k]) / (2.0 * dx);
            }
        }
        g += l2_sq(&dxf);
    }
    if let Some((t_prev, f_prev, _)) = &tracker.prev {
        let dt_rec = t - t_prev;
        if dt_rec > 0.0 {
            let mut dtf = vec![0.0; f_vals.len()];
            for k in 0..f_vals.len() {
                dtf[k] = (f_vals[k] - f_prev[k]) / dt_rec;
            }
            g += l2_sq(&dtf);
        }
    }
    if let Some((t_prev, _, g_prev)) = &tracker.prev {
        tracker.production += 0.5 * (t - t_prev) * (g_prev + g);
    }
    tracker.prev = Some((t, f_vals.clone(), g));

    // macroscopic extrema and micro-macro coefficients
    let mut mm_total = MicroMacroCoeffs::default();
    let mut mm_max = [0.0f64; 4];
    let mut max_rho_dev: f64 = 0.0;
    let mut max_speed: f64 = 0.0;
    let mut max_theta_dev: f64 = 0.0;
    let mut max_q: f64 = 0.0;
    let mut mass = 0.0;
    let mut momentum = [0.0; 3];
    let mut energy = 0.0;
    let mut third_moment = [0.0; 3];
    for c in 0..n_cells {
        let raw = raw_moments(field.cell(c), grid);
        mass += dx * raw.m0;
        for i in 0..3 {
            momentum[i] += dx * raw.m1[i];
            third_moment[i] += dx * raw.m3[i];
        }
        energy += dx * raw.m2_trace();

        let state = macro_from_raw(&raw, c)?;
        max_rho_dev = max_rho_dev.max((state.rho - 1.0).abs());
        for i in 0..3 {
            max_speed = max_speed.max(state.u[i].abs());
            max_q = max_q.max(state.q[i].abs());
        }
        for (k, &(i, j)) in crate::moments::SYM_PAIRS.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            max_theta_dev = max_theta_dev.max((state.theta[k] - target).abs());
        }

        let f_cell = &f_vals[c * n_nodes..(c + 1) * n_nodes];
        let mm = micro_macro_with_sqrt_m(f_cell, grid, &sm);
        mm_total.a += dx * mm.a;
        mm_total.c += dx * mm.c;
        for i in 0..3 {
            mm_total.b[i] += dx * mm.b[i];
            mm_total.d[i] += dx * mm.d[i];
        }
        mm_max[0] = mm_max[0].max(mm.a.abs());
        mm_max[1] = mm_max[1].max(mm.b.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        mm_max[2] = mm_max[2].max(mm.c.abs());
        mm_max[3] = mm_max[3].max(mm.d.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }

    let s_field = shakhov::shakhov_apply(field, params, grid)?;
    let report = shakhov::positivity_report(field, &s_field);

    Ok(DiagnosticsRecord {
        t,
        mass,
        momentum,
        energy,
        third_moment,
        l2_norm_f: norm_sq.sqrt(),
        energy_instant: 0.5 * g,
        energy_production: tracker.production,
        h_value: shakhov::h_functional(field, grid, dx),
        min_f: report.min_f,
        min_s: report.min_s,
        max_rho_dev,
        max_speed,
        max_theta_dev,
        max_q,
        mm_total,
        mm_max,
    })
}

/// Discrete energy functional of an explicit history of perturbation fields
/// sampled at `times`: returns `(instant, production_integral)` at the last
/// sample, with backward time differences and central periodic x
/// differences. Mirrors the incremental tracker used by `solver::run`.
pub fn energy_functional(
    times: &[f64],
    history: &[DistributionField],
    grid: &VelocityGrid,
    dx: f64,
) -> (f64, f64) {
    assert_eq!(times.len(), history.len());
    assert!(!history.is_empty());
    let w = grid.uniform_weight();
    let n_nodes = grid.n_nodes();
    let l2_sq = |vals: &[f64]| -> f64 {
        let mut acc = 0.0;
        for chunk in vals.chunks(n_nodes) {
            let mut cell = 0.0;
            for &x in chunk {
                cell += x * x;
            }
            acc += cell * w * dx;
        }
        acc
    };
    let g_at = |idx: usize| -> f64 {
        let f = &history[idx];
        let n_cells = f.n_cells;
        let mut g = l2_sq(&f.values);
        if n_cells > 1 {
            let mut dxf = vec![0.0; f.values.len()];
            for c in 0..n_cells {
                let left = (c + n_cells - 1) % n_cells;
                let right = (c + 1) % n_cells;
                for k in 0..n_nodes {
                    dxf[c * n_nodes + k] = (f.values[right * n_nodes + k]
                        - f.values[left * n_nodes + k])
                        / (2.0 * dx);
                }
            }
            g += l2_sq(&dxf);
        }
        if idx > 0 {
            let dt = times[idx] - times[idx - 1];
            if dt > 0.0 {
                let prev = &history[idx - 1];
                let mut dtf = vec![0.0; f.values.len()];
                for k in 0..f.values.len() {
                    dtf[k] = (f.values[k] - prev.values[k]) / dt;
                }
                g += l2_sq(&dtf);
            }
        }
        g
    };
    let gs: Vec<f64> = (0..history.len()).map(g_at).collect();
    let mut production = 0.0;
    for i in 1..gs.len() {
        production += 0.5 * (times[i] - times[i - 1]) * (gs[i - 1] + gs[i]);
    }
    (0.5 * gs[gs.len() - 1], production)
}

/// Decay-fit window of a record stream: samples from `window_start` onward
/// whose norms sit above `1e3` times the stream's terminal floor (the
/// quadrature noise level a decaying run settles at). Runs that never
/// approach a floor keep the whole window.
pub fn decay_series(records: &[DiagnosticsRecord], window_start: f64) -> Vec<(f64, f64)> {
    let floor = records
        .iter()
        .map(|r| r.l2_norm_f)
        .fold(f64::INFINITY, f64::min);
    let filtered: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= window_start && r.l2_norm_f >= 1e3 * floor)
        .map(|r| (r.t, r.l2_norm_f))
        .collect();
    if filtered.len() >= 10 {
        return filtered;
    }
    records
        .iter()
        .filter(|r| r.t >= window_start)
        .map(|r| (r.t, r.l2_norm_f))
        .collect()
}

/// Least-squares exponential fit through `(t, ||f||)`: returns
/// `(rate, r_squared)` of the line through `(t, ln ||f||)`, with
/// `rate = -slope`. Samples at or below the `1e-14` norm floor are dropped;
/// at least ten must remain.
pub fn fit_decay(series: &[(f64, f64)]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, n)| *n > 1e-14)
        .map(|&(t, n)| (t, n.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::DegenerateFitWindow {
            needed: 10,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::DegenerateFitWindow {
            needed: 10,
            got: 0,
        });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, y) in &pts {
        ss_res += (y - (slope * t + intercept)).powi(2);
        ss_tot += (y - mean).powi(2);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((-slope, r_squared))
}

/// CSV column order; floating-point fields are written with 17 significant
/// digits (lossless for f64).
pub const CSV_HEADER: &str = "t,mass,momentum_x,momentum_y,momentum_z,energy,\
third_moment_x,third_moment_y,third_moment_z,l2_norm_f,energy_instant,\
energy_production,h_value,min_F,min_S,max_rho_dev,max_speed,max_theta_dev,\
max_q,mm_a,mm_b_x,mm_b_y,mm_b_z,mm_c,mm_d_x,mm_d_y,mm_d_z,\
mm_max_a,mm_max_b,mm_max_c,mm_max_d";

fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn record_to_csv_line(r: &DiagnosticsRecord) -> String {
    let fields = [
        r.t,
        r.mass,
        r.momentum[0],
        r.momentum[1],
        r.momentum[2],
        r.energy,
        r.third_moment[0],
        r.third_moment[1],
        r.third_moment[2],
        r.l2_norm_f,
        r.energy_instant,
        r.energy_production,
        r.h_value,
        r.min_f,
        r.min_s,
        r.max_rho_dev,
        r.max_speed,
        r.max_theta_dev,
        r.max_q,
        r.mm_total.a,
        r.mm_total.b[0],
        r.mm_total.b[1],
        r.mm_total.b[2],
        r.mm_total.c,
        r.mm_total.d[0],
        r.mm_total.d[1],
        r.mm_total.d[2],
        r.mm_max[0],
        r.mm_max[1],
        r.mm_max[2],
        r.mm_max[3],
    ];
    let parts: Vec<String> = fields.iter().map(|&x| fmt(x)).collect();
    parts.join(",")
}

pub fn records_to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_to_csv_line(r));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &std::path::Path, records: &[DiagnosticsRecord]) -> Result<()> {
    std::fs::write(path, records_to_csv(records))?;
    Ok(())
}
