//! The executable identity-check suites behind the `verify-operator` and
//! `verify-linear` subcommands. Each check reports its worst residual over
//! the sampled states, the tolerance, and the index of the worst sample;
//! everything is deterministic in the master seed.

use crate::grid::build_grid;
use crate::linear::{self, Projection};
use crate::moments::{compute_macro, raw_moments};
use crate::sampling;
use crate::shakhov::{self, ModelParams};
use crate::Result;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64, detail: String) -> Self {
        let passed = residual <= tolerance;
        CheckOutcome {
            name: name.into(),
            residual,
            tolerance,
            passed,
            detail,
        }
    }
}

/// Options shared by both suites.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub n_states: usize,
    pub n_per_axis: usize,
    pub v_max: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            n_states: 100,
            n_per_axis: 24,
            v_max: 8.0,
        }
    }
}

const PR_SET: [f64; 5] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.5];

struct Worst {
    value: f64,
    index: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: 0.0,
            index: 0,
        }
    }
    fn update(&mut self, value: f64, index: usize) {
        if value > self.value {
            self.value = value;
            self.index = index;
        }
    }
}

/// Conservation, cancellation, BGK-reduction, and fixed-point checks on
/// seeded random near-equilibrium states.
pub fn operator_checks(params: &ModelParams, opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let grid = build_grid(opts.n_per_axis, opts.v_max)?;
    let mut out = Vec::new();

    let mut mass = Worst::new();
    let mut momentum = Worst::new();
    let mut energy = Worst::new();
    let mut rng = sampling::rng_for(opts.seed, 1);
    let mut fields = Vec::with_capacity(opts.n_states);
    for _ in 0..opts.n_states {
        fields.push(sampling::near_equilibrium_field(&mut rng, &grid, 0.08));
    }
    for (idx, f) in fields.iter().enumerate() {
        let state = compute_macro(f, &grid, 0)?;
        let s = shakhov::shakhov_values(&state, params.pr, &grid)?;
        let raw = raw_moments(&s, &grid);
        mass.update((raw.m0 - state.rho).abs(), idx);
        let mut mom_dev: f64 = 0.0;
        for i in 0..3 {
            mom_dev = mom_dev.max((raw.m1[i] - state.rho * state.u[i]).abs());
        }
        momentum.update(mom_dev, idx);
        let centered = raw.m2_trace() - 2.0 * (0..3).map(|i| state.u[i] * raw.m1[i]).sum::<f64>()
            + state.speed_squared() * raw.m0;
        energy.update(
            (centered - 3.0 * state.rho * state.temperature).abs(),
            idx,
        );
    }
    out.push(CheckOutcome::new(
        "conservation-mass",
        mass.value,
        1e-6,
        format!("worst state {}", mass.index),
    ));
    out.push(CheckOutcome::new(
        "conservation-momentum",
        momentum.value,
        1e-6,
        format!("worst state {}", momentum.index),
    ));
    out.push(CheckOutcome::new(
        "conservation-energy",
        energy.value,
        1e-6,
        format!("worst state {}", energy.index),
    ));

    // cancellation across the standard Prandtl set plus the configured value
    let mut prandtls: Vec<f64> = PR_SET.to_vec();
    if !prandtls.iter().any(|&p| (p - params.pr).abs() < 1e-12) {
        prandtls.push(params.pr);
    }
    for pr in prandtls {
        let p = params.with_pr(pr);
        let mut worst = Worst::new();
        for (idx, f) in fields.iter().enumerate() {
            let state = compute_macro(f, &grid, 0)?;
            let qn = state.q.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let r = shakhov::cancellation_residual(f, &p, &grid, 0)?;
            let dev = r.iter().map(|x| x.abs()).fold(0.0, f64::max) / (1.0 + qn);
            worst.update(dev, idx);
        }
        out.push(CheckOutcome::new(
            format!("cancellation-rq(pr={pr:.4})"),
            worst.value,
            1e-6,
            format!("worst state {}", worst.index),
        ));
    }

    // BGK reduction at Pr = 1 must be bitwise
    let mut worst = Worst::new();
    for (idx, f) in fields.iter().enumerate() {
        let state = compute_macro(f, &grid, 0)?;
        let s = shakhov::shakhov_values(&state, 1.0, &grid)?;
        let m = shakhov::maxwellian(&state, &grid)?;
        let dev = s
            .iter()
            .zip(&m)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst.update(dev, idx);
    }
    out.push(CheckOutcome::new(
        "bgk-reduction(pr=1)",
        worst.value,
        0.0,
        format!("worst state {}", worst.index),
    ));

    // equilibrium fixed point
    let m = shakhov::global_maxwellian(&grid);
    let s = shakhov::shakhov_values(&crate::moments::MacroState::equilibrium(), params.pr, &grid)?;
    let dev = s
        .iter()
        .zip(&m)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(CheckOutcome::new(
        "equilibrium-fixed-point",
        dev,
        1e-12,
        String::new(),
    ));

    Ok(out)
}

/// Orthonormality, projection algebra, kernel structure, coercivity
/// sampling, Jacobian product, nonlinear-residual scaling, and first-order
/// consistency checks.
pub fn linear_checks(params: &ModelParams, opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let grid = build_grid(opts.n_per_axis, opts.v_max)?;
    let basis = linear::build_bases(&grid);
    let mut out = Vec::new();

    out.push(CheckOutcome::new(
        "gram-identity",
        basis.gram_defect(),
        1e-8,
        String::new(),
    ));
    let mut ortho: f64 = 0.0;
    for i in 0..5 {
        for j in 5..8 {
            ortho = ortho.max(basis.gram_ebar[i][j].abs());
        }
    }
    out.push(CheckOutcome::new(
        "pc-pnc-orthogonality",
        ortho,
        1e-8,
        String::new(),
    ));

    // projection algebra on random perturbations
    let mut rng = sampling::rng_for(opts.seed, 2);
    let mut worst = Worst::new();
    for idx in 0..50 {
        let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
        let pc = linear::project(&f, Projection::Conservative, &basis, &grid);
        let pnc = linear::project(&f, Projection::NonConservative, &basis, &grid);
        let pc2 = linear::project(&pc, Projection::Conservative, &basis, &grid);
        let pnc2 = linear::project(&pnc, Projection::NonConservative, &basis, &grid);
        let cross = linear::project(&pnc, Projection::Conservative, &basis, &grid);
        let mut dev: f64 = 0.0;
        let diff_norm = |a: &[f64], b: &[f64]| {
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            grid.norm(&d)
        };
        dev = dev.max(diff_norm(&pc2, &pc));
        dev = dev.max(diff_norm(&pnc2, &pnc));
        dev = dev.max(grid.norm(&cross));
        worst.update(dev, idx);
    }
    out.push(CheckOutcome::new(
        "projection-idempotency",
        worst.value,
        1e-8,
        format!("worst sample {}", worst.index),
    ));

    // kernel dimensions: 5 for the configured Pr when positive, 8 at Pr = 0
    let kernel_tol = 1e-8;
    let pr_pos = if params.pr > 0.0 { params.pr } else { 2.0 / 3.0 };
    let kernel_dim = |pr: f64| -> usize {
        (0..8)
            .filter(|&i| {
                let lf = linear::apply_linearized(&basis.ebar[i], pr, &basis, &grid);
                grid.norm(&lf) <= kernel_tol
            })
            .count()
    };
    let dim_pos = kernel_dim(pr_pos);
    out.push(CheckOutcome::new(
        format!("kernel-dimension(pr={pr_pos:.4})"),
        (dim_pos as f64 - 5.0).abs(),
        0.0,
        format!("measured dimension {dim_pos}"),
    ));
    let dim_zero = kernel_dim(0.0);
    out.push(CheckOutcome::new(
        "kernel-dimension(pr=0)",
        (dim_zero as f64 - 8.0).abs(),
        0.0,
        format!("measured dimension {dim_zero}"),
    ));
    // the microscopic complement carries eigenvalue -1
    let mut worst = Worst::new();
    let mut rng = sampling::rng_for(opts.seed, 3);
    for idx in 0..50 {
        let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
        let p8 = linear::project(&f, Projection::Shakhov(0.0), &basis, &grid);
        let fperp: Vec<f64> = f.iter().zip(&p8).map(|(a, c)| a - c).collect();
        let lf = linear::apply_linearized(&fperp, pr_pos, &basis, &grid);
        let dev: Vec<f64> = lf.iter().zip(&fperp).map(|(a, c)| a + c).collect();
        worst.update(grid.norm(&dev), idx);
    }
    out.push(CheckOutcome::new(
        "microscopic-eigenvalue",
        worst.value,
        1e-8,
        format!("worst sample {}", worst.index),
    ));

    // coercivity dichotomy
    let mut rng = sampling::rng_for(opts.seed, 4);
    let mut worst = Worst::new();
    for &pr in &[0.1, 2.0 / 3.0, 1.0, 1.5] {
        for idx in 0..opts.n_states {
            let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
            let (lhs, bound) = linear::coercivity_form(&f, pr, &basis, &grid);
            worst.update(lhs - bound, idx);
        }
    }
    out.push(CheckOutcome::new(
        "coercivity-inequality(pr>0)",
        worst.value.max(0.0),
        1e-10,
        format!("worst sample {}", worst.index),
    ));
    let mut worst = Worst::new();
    for idx in 0..opts.n_states {
        let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
        let (lhs, bound) = linear::coercivity_form(&f, 0.0, &basis, &grid);
        worst.update((lhs - bound).abs(), idx);
    }
    out.push(CheckOutcome::new(
        "coercivity-equality(pr=0)",
        worst.value,
        1e-10,
        format!("worst sample {}", worst.index),
    ));

    // Jacobian pair on wide admissible states
    let mut rng = sampling::rng_for(opts.seed, 5);
    let mut worst = Worst::new();
    for idx in 0..opts.n_states {
        let state = sampling::wide_state(&mut rng);
        let j = linear::jacobian(&state)?;
        let jinv = linear::jacobian_inverse(&state)?;
        worst.update(linear::product_identity_defect(&j, &jinv), idx);
    }
    out.push(CheckOutcome::new(
        "jacobian-product",
        worst.value,
        1e-10,
        format!("worst state {}", worst.index),
    ));
    let jinv = linear::jacobian_inverse(&crate::moments::MacroState::equilibrium())?;
    let s10 = 10.0f64.sqrt();
    let diag = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, s10, s10, s10];
    let mut dev: f64 = 0.0;
    for r in 0..13 {
        for c in 0..13 {
            let expected = if r == c { diag[r] } else { 0.0 };
            dev = dev.max((jinv.entries[r][c] - expected).abs());
        }
    }
    out.push(CheckOutcome::new(
        "jacobian-equilibrium-diagonal",
        dev,
        0.0,
        String::new(),
    ));

    // nonlinear residual: quadratic scaling and vanishing invariant moments
    let mut rng = sampling::rng_for(opts.seed, 6);
    let mut worst_scale = Worst::new();
    let mut worst_moment = Worst::new();
    for idx in 0..20 {
        let f = sampling::random_perturbation(&mut rng, &grid, 1.0);
        let ratio_at = |eps: f64| -> Result<f64> {
            let scaled: Vec<f64> = f.iter().map(|x| eps * x).collect();
            let g = linear::gamma_residual(&scaled, params, &basis, &grid)?;
            Ok(grid.norm(&g) / (eps * eps))
        };
        let r2 = ratio_at(1e-2)?;
        let r3 = ratio_at(1e-3)?;
        worst_scale.update((r2 / r3 - 1.0).abs(), idx);

        let scaled: Vec<f64> = f.iter().map(|x| 0.05 * x).collect();
        let g = linear::gamma_residual(&scaled, params, &basis, &grid)?;
        for i in 0..5 {
            worst_moment.update(grid.inner(&g, &basis.ebar[i]).abs(), idx);
        }
    }
    out.push(CheckOutcome::new(
        "gamma-quadratic-scaling",
        worst_scale.value,
        0.1,
        format!("worst sample {}", worst_scale.index),
    ));
    out.push(CheckOutcome::new(
        "gamma-invariant-moments",
        worst_moment.value,
        1e-8,
        format!("worst sample {}", worst_moment.index),
    ));

    // first-order consistency: Taylor defect stable under amplitude scaling
    let mut rng = sampling::rng_for(opts.seed, 7);
    let mut worst = Worst::new();
    for idx in 0..10 {
        let f = sampling::random_perturbation(&mut rng, &grid, 1.0);
        let norm = grid.norm(&f);
        let defect_at = |eps: f64| -> Result<f64> {
            let scaled: Vec<f64> = f.iter().map(|x| eps * x / norm).collect();
            linear::first_order_consistency(&scaled, params, &basis, &grid)
        };
        let d2 = defect_at(1e-2)?;
        let d3 = defect_at(1e-3)?;
        worst.update((d2 / d3 - 1.0).abs(), idx);
    }
    out.push(CheckOutcome::new(
        "first-order-consistency",
        worst.value,
        0.1,
        format!("worst sample {}", worst.index),
    ));

    Ok(out)
}

/// Convenience used by reports: grid echo for a suite run.
pub fn describe_grid(opts: &VerifyOptions) -> String {
    format!(
        "{n}^3 nodes, v_max = {v}",
        n = opts.n_per_axis,
        v = opts.v_max
    )
}

/// Evaluates a run's conserved-totals drift against the initial record.
/// Momentum drift is normalized by the total mass (the natural thermal
/// scale), the rest by their initial magnitudes.
pub fn conservation_drift(records: &[crate::diagnostics::DiagnosticsRecord]) -> (f64, f64, f64) {
    let first = &records[0];
    let mut mass_drift: f64 = 0.0;
    let mut mom_drift: f64 = 0.0;
    let mut energy_drift: f64 = 0.0;
    for r in records {
        mass_drift = mass_drift.max((r.mass - first.mass).abs() / first.mass.abs());
        for i in 0..3 {
            mom_drift = mom_drift.max((r.momentum[i] - first.momentum[i]).abs() / first.mass);
        }
        energy_drift = energy_drift.max((r.energy - first.energy).abs() / first.energy.abs());
    }
    (mass_drift, mom_drift, energy_drift)
}

/// Largest step-to-step increase of the H-functional over a record stream.
pub fn max_h_increase(records: &[crate::diagnostics::DiagnosticsRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| w[1].h_value - w[0].h_value)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_suite_passes_on_default_grid() {
        let opts = VerifyOptions {
            n_states: 20,
            ..VerifyOptions::default()
        };
        let checks = operator_checks(&ModelParams::default(), &opts).unwrap();
        for c in &checks {
            assert!(c.passed, "{}: residual {} > {}", c.name, c.residual, c.tolerance);
        }
    }

    #[test]
    fn operator_suite_detects_underresolved_grids() {
        let opts = VerifyOptions {
            n_states: 20,
            n_per_axis: 8,
            v_max: 4.0,
            ..VerifyOptions::default()
        };
        let checks = operator_checks(&ModelParams::default(), &opts).unwrap();
        assert!(
            checks.iter().any(|c| !c.passed),
            "coarse grid unexpectedly passed every check"
        );
    }

    #[test]
    fn linear_suite_passes_on_default_grid() {
        let opts = VerifyOptions {
            n_states: 50,
            ..VerifyOptions::default()
        };
        let checks = linear_checks(&ModelParams::default(), &opts).unwrap();
        for c in &checks {
            assert!(c.passed, "{}: residual {} > {}", c.name, c.residual, c.tolerance);
        }
    }

    #[test]
    fn suites_are_deterministic_in_the_seed() {
        let opts = VerifyOptions {
            n_states: 5,
            ..VerifyOptions::default()
        };
        let a = operator_checks(&ModelParams::default(), &opts).unwrap();
        let b = operator_checks(&ModelParams::default(), &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.residual.to_bits(), y.residual.to_bits());
        }
    }
}
