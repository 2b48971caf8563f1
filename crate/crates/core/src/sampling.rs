//! Seeded generators for admissible random states and perturbations, shared
//! by the verification subcommands and the test suites.
//!
//! Two regimes are exposed. The *near-equilibrium* generator stays within
//! `|rho - 1| <= 0.1`, `|U_i| <= 0.1`, `|Theta - I| <= 0.1`, `|q_i| <= 0.1`,
//! which keeps Gaussian tails well inside the default velocity box so that
//! quadrature-level identity checks hold at 1e-6. The *wide* generator
//! (`rho` in [0.5, 2], `U_i` in [-0.5, 0.5], stress eigenvalues in
//! [0.6, 1.4], `q_i` in [-0.5, 0.5]) feeds the closed-form Jacobian checks,
//! which involve no quadrature.

use crate::grid::{DistributionField, FieldKind, VelocityGrid};
use crate::moments::MacroState;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a given master seed and stream index.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Macroscopic state close to the global equilibrium.
pub fn near_equilibrium_state(rng: &mut ChaCha8Rng) -> MacroState {
    random_state(rng, 0.1, 0.1, 0.1, 0.05, 0.1)
}

/// Macroscopic state over the wide admissible box used by the Jacobian
/// property checks.
pub fn wide_state(rng: &mut ChaCha8Rng) -> MacroState {
    let rho = rng.gen_range(0.5..2.0);
    let mut u = [0.0; 3];
    let mut q = [0.0; 3];
    for i in 0..3 {
        u[i] = rng.gen_range(-0.5..0.5);
        q[i] = rng.gen_range(-0.5..0.5);
    }
    let mut theta = [0.0; 6];
    for (k, t) in theta.iter_mut().enumerate() {
        // Gershgorin keeps the eigenvalues inside [0.6, 1.4]
        *t = if k < 3 {
            1.0 + rng.gen_range(-0.2..0.2)
        } else {
            rng.gen_range(-0.1..0.1)
        };
    }
    MacroState::new(rho, u, theta, q)
}

fn random_state(
    rng: &mut ChaCha8Rng,
    d_rho: f64,
    d_u: f64,
    d_theta_diag: f64,
    d_theta_off: f64,
    d_q: f64,
) -> MacroState {
    let rho = 1.0 + rng.gen_range(-d_rho..d_rho);
    let mut u = [0.0; 3];
    let mut q = [0.0; 3];
    for i in 0..3 {
        u[i] = rng.gen_range(-d_u..d_u);
        q[i] = rng.gen_range(-d_q..d_q);
    }
    let mut theta = [0.0; 6];
    for (k, t) in theta.iter_mut().enumerate() {
        *t = if k < 3 {
            1.0 + rng.gen_range(-d_theta_diag..d_theta_diag)
        } else {
            rng.gen_range(-d_theta_off..d_theta_off)
        };
    }
    MacroState::new(rho, u, theta, q)
}

/// Random perturbation `f` spanning the thirteen moment directions plus a
/// degree-four microscopic component, with coefficients uniform in
/// `[-amplitude, amplitude]`.
pub fn random_perturbation(
    rng: &mut ChaCha8Rng,
    grid: &VelocityGrid,
    amplitude: f64,
) -> Vec<f64> {
    let mut c = [0.0f64; 14];
    for ck in c.iter_mut() {
        *ck = rng.gen_range(-amplitude..amplitude);
    }
    perturbation_from_coefficients(&c, grid)
}

/// Deterministic perturbation built from fixed coefficients; basis order:
/// 1, v_i, (v_i^2 - 1), v1 v2, v2 v3, v3 v1, v_i (|v|^2 - 5), and the
/// normalized fourth Hermite polynomial in v1. Everything is multiplied by
/// `sqrt(m)`.
pub fn perturbation_from_coefficients(c: &[f64; 14], grid: &VelocityGrid) -> Vec<f64> {
    let m = crate::shakhov::global_maxwellian(grid);
    let he4_norm = 24.0f64.sqrt();
    grid.nodes()
        .iter()
        .zip(&m)
        .map(|(v, mk)| {
            let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let poly = c[0]
                + c[1] * v[0]
                + c[2] * v[1]
                + c[3] * v[2]
                + c[4] * (v[0] * v[0] - 1.0)
                + c[5] * (v[1] * v[1] - 1.0)
                + c[6] * (v[2] * v[2] - 1.0)
                + c[7] * v[0] * v[1]
                + c[8] * v[1] * v[2]
                + c[9] * v[2] * v[0]
                + c[10] * v[0] * (r2 - 5.0)
                + c[11] * v[1] * (r2 - 5.0)
                + c[12] * v[2] * (r2 - 5.0)
                + c[13] * (v[0] * v[0] * v[0] * v[0] - 6.0 * v[0] * v[0] + 3.0) / he4_norm;
            poly * mk.sqrt()
        })
        .collect()
}

/// Centered unit-mass Gaussian with prescribed stress tensor (6-vector in
/// the `{11,22,33,12,23,31}` ordering): the anisotropic initial data of the
/// stress-relaxation oracle.
pub fn anisotropic_gaussian(grid: &VelocityGrid, theta: [f64; 6]) -> DistributionField {
    let t = |i: usize, j: usize| theta[crate::moments::sym_index(i, j)];
    let det = t(0, 0) * (t(1, 1) * t(2, 2) - t(1, 2) * t(1, 2))
        - t(0, 1) * (t(0, 1) * t(2, 2) - t(1, 2) * t(0, 2))
        + t(0, 2) * (t(0, 1) * t(1, 2) - t(1, 1) * t(0, 2));
    let mut inv = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b, c, d) = match (i, j) {
                (0, 0) => (t(1, 1), t(2, 2), t(1, 2), t(1, 2)),
                (0, 1) | (1, 0) => (t(1, 2), t(0, 2), t(0, 1), t(2, 2)),
                (0, 2) | (2, 0) => (t(0, 1), t(1, 2), t(1, 1), t(0, 2)),
                (1, 1) => (t(0, 0), t(2, 2), t(0, 2), t(0, 2)),
                (1, 2) | (2, 1) => (t(0, 1), t(0, 2), t(0, 0), t(1, 2)),
                (2, 2) => (t(0, 0), t(1, 1), t(0, 1), t(0, 1)),
                _ => unreachable!(),
            };
            inv[i][j] = (a * b - c * d) / det;
        }
    }
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).powi(3) * det).sqrt();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|v| {
            let mut quad = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    quad += v[i] * inv[i][j] * v[j];
                }
            }
            norm * (-0.5 * quad).exp()
        })
        .collect();
    DistributionField::single_cell(FieldKind::Absolute, values)
}

/// Single-cell near-equilibrium distribution `F = m + sqrt(m) f` with a
/// random perturbation of the given amplitude.
pub fn near_equilibrium_field(
    rng: &mut ChaCha8Rng,
    grid: &VelocityGrid,
    amplitude: f64,
) -> DistributionField {
    let m = crate::shakhov::global_maxwellian(grid);
    let f = random_perturbation(rng, grid, amplitude);
    let values: Vec<f64> = m
        .iter()
        .zip(&f)
        .map(|(mk, fk)| mk + mk.sqrt() * fk)
        .collect();
    DistributionField::single_cell(FieldKind::Absolute, values)
}
