//! Linearization toolbox around the global Maxwellian: the perturbation
//! transform `F = m + sqrt(m) f`, the 13-element moment basis and the
//! orthonormal 8-element basis, the macroscopic projections, the linearized
//! operator `L_Pr f = P_Pr f - f`, the exact nonlinear residual, and the
//! Jacobian pair of the change of variables
//! `(rho, U, Theta, q) <-> (rho, rho U, G, H)`.
//!
//! Basis inner products are evaluated with the grid quadrature, so
//! orthonormality defects measure grid quality; closed-form Gaussian moments
//! serve as the independent reference in the tests.

use crate::error::Error;
use crate::grid::{DistributionField, FieldKind, VelocityGrid};
use crate::moments::{compute_macro, MacroState, SYM_PAIRS};
use crate::shakhov::{self, ModelParams};
use crate::Result;

/// The 13 moment fields `e_1..e_13` and the orthonormal fields
/// `ebar_1..ebar_8`, evaluated on the grid, plus the computed Gram matrix of
/// the latter.
pub struct BasisSet {
    pub e: Vec<Vec<f64>>,
    pub ebar: Vec<Vec<f64>>,
    pub gram_ebar: [[f64; 8]; 8],
    n_nodes: usize,
}

/// Builds both bases:
/// `e_1 = sqrt(m)`, `e_{1+i} = v_i sqrt(m)`, `e_{4+i} = (v_i^2-1)/2 sqrt(m)`,
/// `e_8 = v1 v2 sqrt(m)`, `e_9 = v2 v3 sqrt(m)`, `e_10 = v1 v3 sqrt(m)`,
/// `e_{10+i} = v_i (|v|^2 - 5) sqrt(m) / sqrt(10)`; and
/// `ebar_1 = sqrt(m)`, `ebar_{1+i} = v_i sqrt(m)`,
/// `ebar_5 = (|v|^2 - 3) sqrt(m) / sqrt(6)`,
/// `ebar_{5+i} = v_i (|v|^2 - 5) sqrt(m) / sqrt(10)`.
pub fn build_bases(grid: &VelocityGrid) -> BasisSet {
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    let nodes = grid.nodes();
    let s10 = 10.0f64.sqrt();
    let s6 = 6.0f64.sqrt();

    let per_node = |f: &dyn Fn(&[f64; 3], f64) -> f64| -> Vec<f64> {
        nodes
            .iter()
            .zip(&sm)
            .map(|(v, &s)| {
                let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                f(v, r2) * s
            })
            .collect()
    };

    let mut e: Vec<Vec<f64>> = Vec::with_capacity(13);
    e.push(sm.clone());
    for i in 0..3 {
        e.push(per_node(&|v, _| v[i]));
    }
    for i in 0..3 {
        e.push(per_node(&|v, _| (v[i] * v[i] - 1.0) / 2.0));
    }
    e.push(per_node(&|v, _| v[0] * v[1]));
    e.push(per_node(&|v, _| v[1] * v[2]));
    e.push(per_node(&|v, _| v[0] * v[2]));
    for i in 0..3 {
        e.push(per_node(&|v, r2| v[i] * (r2 - 5.0) / s10));
    }

    let mut ebar: Vec<Vec<f64>> = Vec::with_capacity(8);
    ebar.push(sm.clone());
    for i in 0..3 {
        ebar.push(e[1 + i].clone());
    }
    ebar.push(per_node(&|_, r2| (r2 - 3.0) / s6));
    for i in 0..3 {
        ebar.push(e[10 + i].clone());
    }

    let mut gram_ebar = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            gram_ebar[i][j] = grid.inner(&ebar[i], &ebar[j]);
        }
    }

    BasisSet {
        e,
        ebar,
        gram_ebar,
        n_nodes: grid.n_nodes(),
    }
}

impl BasisSet {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Largest deviation of the `ebar` Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.gram_ebar[i][j] - target).abs());
            }
        }
        worst
    }
}

/// Perturbation transform `f = (F - m) / sqrt(m)` applied nodewise.
pub fn to_perturbation(field: &DistributionField, grid: &VelocityGrid) -> DistributionField {
    let m = shakhov::global_maxwellian(grid);
    let inv_sm: Vec<f64> = m.iter().map(|x| 1.0 / x.sqrt()).collect();
    let n = grid.n_nodes();
    let mut out = DistributionField::zeros(field.n_cells, n, FieldKind::Perturbation);
    for c in 0..field.n_cells {
        let src = field.cell(c);
        let dst = out.cell_mut(c);
        for k in 0..n {
            dst[k] = (src[k] - m[k]) * inv_sm[k];
        }
    }
    out
}

/// Inverse transform `F = m + sqrt(m) f`.
pub fn from_perturbation(field: &DistributionField, grid: &VelocityGrid) -> DistributionField {
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    let n = grid.n_nodes();
    let mut out = DistributionField::zeros(field.n_cells, n, FieldKind::Absolute);
    for c in 0..field.n_cells {
        let src = field.cell(c);
        let dst = out.cell_mut(c);
        for k in 0..n {
            dst[k] = m[k] + sm[k] * src[k];
        }
    }
    out
}

/// Selects a macroscopic projection: the conservative part (span of
/// `ebar_1..ebar_5`), the non-conservative heat-flux part (`ebar_6..ebar_8`),
/// or the Shakhov combination `P_c + (1 - Pr) P_nc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Conservative,
    NonConservative,
    Shakhov(f64),
}

/// Applies the selected projection to a per-node perturbation.
pub fn project(
    f: &[f64],
    which: Projection,
    basis: &BasisSet,
    grid: &VelocityGrid,
) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    let mut add_range = |lo: usize, hi: usize, scale: f64| {
        for i in lo..hi {
            let coeff = scale * grid.inner(f, &basis.ebar[i]);
            for (o, b) in out.iter_mut().zip(&basis.ebar[i]) {
                *o += coeff * b;
            }
        }
    };
    match which {
        Projection::Conservative => add_range(0, 5, 1.0),
        Projection::NonConservative => add_range(5, 8, 1.0),
        Projection::Shakhov(pr) => {
            add_range(0, 5, 1.0);
            add_range(5, 8, 1.0 - pr);
        }
    }
    out
}

/// The linearized relaxation operator `L_Pr f = P_Pr f - f`.
pub fn apply_linearized(f: &[f64], pr: f64, basis: &BasisSet, grid: &VelocityGrid) -> Vec<f64> {
    let mut out = project(f, Projection::Shakhov(pr), basis, grid);
    for (o, fk) in out.iter_mut().zip(f) {
        *o -= fk;
    }
    out
}

/// The quadratic form of the coercivity dichotomy. Returns
/// `(lhs, bound) = (<L_Pr f, f>, -min{Pr,1} ||(I-P_c) f||^2)` for `Pr > 0`,
/// and `(<L_0 f, f>, -||(I-P_c-P_nc) f||^2)` at `Pr = 0`; the first case
/// satisfies `lhs <= bound`, the second is an identity.
pub fn coercivity_form(
    f: &[f64],
    pr: f64,
    basis: &BasisSet,
    grid: &VelocityGrid,
) -> (f64, f64) {
    let lf = apply_linearized(f, pr, basis, grid);
    let lhs = grid.inner(&lf, f);
    let bound = if pr > 0.0 {
        let pc = project(f, Projection::Conservative, basis, grid);
        let residual: Vec<f64> = f.iter().zip(&pc).map(|(a, b)| a - b).collect();
        -pr.min(1.0) * grid.inner(&residual, &residual)
    } else {
        let p8 = project(f, Projection::Shakhov(0.0), basis, grid);
        let residual: Vec<f64> = f.iter().zip(&p8).map(|(a, b)| a - b).collect();
        -grid.inner(&residual, &residual)
    };
    (lhs, bound)
}

/// Exact nonlinear residual of the perturbation equation:
/// `Gamma(f) = (1/tau) (S_Pr(m + sqrt(m) f) - (m + sqrt(m) f)) / sqrt(m)
///             - (1/tau0) L_Pr f`.
pub fn gamma_residual(
    f: &[f64],
    params: &ModelParams,
    basis: &BasisSet,
    grid: &VelocityGrid,
) -> Result<Vec<f64>> {
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    let values: Vec<f64> = m
        .iter()
        .zip(&sm)
        .zip(f)
        .map(|((mk, smk), fk)| mk + smk * fk)
        .collect();
    let field = DistributionField::single_cell(FieldKind::Absolute, values);
    let state = compute_macro(&field, grid, 0)?;
    let inv_tau = shakhov::inverse_relaxation_time(&state, params)?;
    let s = shakhov::shakhov_values(&state, params.pr, grid)?;
    let lf = apply_linearized(f, params.pr, basis, grid);
    let inv_tau0 = 1.0 / params.tau0;
    let out = (0..f.len())
        .map(|k| inv_tau * (s[k] - field.values[k]) / sm[k] - inv_tau0 * lf[k])
        .collect();
    Ok(out)
}

/// Second-order Taylor defect of the linearization:
/// `||S_Pr(m + sqrt(m) f) - m - sqrt(m) P_Pr f|| / ||f||^2`.
/// The contract requires `||f|| <= 0.1`.
pub fn first_order_consistency(
    f: &[f64],
    params: &ModelParams,
    basis: &BasisSet,
    grid: &VelocityGrid,
) -> Result<f64> {
    let norm_f = grid.norm(f);
    if norm_f > 0.1 {
        return Err(Error::PerturbationTooLarge(norm_f));
    }
    if norm_f == 0.0 {
        return Ok(0.0);
    }
    let m = shakhov::global_maxwellian(grid);
    let sm: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    let values: Vec<f64> = m
        .iter()
        .zip(&sm)
        .zip(f)
        .map(|((mk, smk), fk)| mk + smk * fk)
        .collect();
    let field = DistributionField::single_cell(FieldKind::Absolute, values);
    let state = compute_macro(&field, grid, 0)?;
    let s = shakhov::shakhov_values(&state, params.pr, grid)?;
    let pf = project(f, Projection::Shakhov(params.pr), basis, grid);
    let defect: Vec<f64> = (0..f.len())
        .map(|k| s[k] - m[k] - sm[k] * pf[k])
        .collect();
    Ok(grid.norm(&defect) / (norm_f * norm_f))
}

/// A 13x13 Jacobian of the macroscopic change of variables, together with
/// the state it was evaluated at. Coordinate order on both axes follows
/// `(rho, U_1..U_3, Theta_{11,22,33}, Theta_{12,23,31}, q_1..q_3)` for the
/// primitive side and `(rho, rho U, G, H)` (same tensor ordering) for the
/// transformed side.
#[derive(Debug, Clone)]
pub struct JacobianMatrix {
    pub entries: [[f64; 13]; 13],
    pub state: MacroState,
}

/// `J = d(rho, rho U, G, H) / d(rho, U, Theta, q)`.
pub fn jacobian(state: &MacroState) -> Result<JacobianMatrix> {
    if state.rho <= 0.0 {
        return Err(Error::NonpositiveDensity(state.rho));
    }
    let rho = state.rho;
    let u = state.u;
    let u2 = state.speed_squared();
    let tr = state.theta_trace();
    let s10 = 10.0f64.sqrt();
    let mut j = [[0.0f64; 13]; 13];

    j[0][0] = 1.0;
    for i in 0..3 {
        j[1 + i][0] = u[i];
        j[1 + i][1 + i] = rho;
    }
    for i in 0..3 {
        j[4 + i][0] = (state.theta[i] + u[i] * u[i] - 1.0) / 2.0;
        j[4 + i][1 + i] = rho * u[i];
        j[4 + i][4 + i] = rho / 2.0;
    }
    for a in 0..3 {
        let (p, q) = SYM_PAIRS[3 + a];
        j[7 + a][0] = state.theta[3 + a] + u[p] * u[q];
        j[7 + a][1 + p] = rho * u[q];
        j[7 + a][1 + q] = rho * u[p];
        j[7 + a][7 + a] = rho;
    }
    for i in 0..3 {
        let mut cross = 0.0;
        for k in 0..3 {
            cross += u[k] * state.theta_get(i, k);
        }
        j[10 + i][0] = (2.0 * cross + u[i] * u2 + u[i] * tr - 5.0 * u[i]) / s10;
        for jj in 0..3 {
            let diag = if i == jj { rho * tr + rho * u2 - 5.0 * rho } else { 0.0 };
            j[10 + i][1 + jj] =
                (2.0 * rho * state.theta_get(i, jj) + 2.0 * rho * u[i] * u[jj] + diag) / s10;
            let delta = if i == jj { 2.0 } else { 0.0 };
            j[10 + i][4 + jj] = rho * u[i] * (delta + 1.0) / s10;
        }
        for a in 0..3 {
            let (p, q) = SYM_PAIRS[3 + a];
            let mut val = 0.0;
            if i == p {
                val += u[q];
            }
            if i == q {
                val += u[p];
            }
            j[10 + i][7 + a] = 2.0 * rho * val / s10;
        }
        j[10 + i][10 + i] = 1.0 / s10;
    }

    Ok(JacobianMatrix {
        entries: j,
        state: *state,
    })
}

/// `J^{-1} = d(rho, U, Theta, q) / d(rho, rho U, G, H)`, in closed form.
pub fn jacobian_inverse(state: &MacroState) -> Result<JacobianMatrix> {
    if state.rho <= 0.0 {
        return Err(Error::NonpositiveDensity(state.rho));
    }
    let rho = state.rho;
    let u = state.u;
    let u2 = state.speed_squared();
    let tr = state.theta_trace();
    let s10 = 10.0f64.sqrt();
    let mut j = [[0.0f64; 13]; 13];

    j[0][0] = 1.0;
    for i in 0..3 {
        j[1 + i][0] = -u[i] / rho;
        j[1 + i][1 + i] = 1.0 / rho;
    }
    for i in 0..3 {
        j[4 + i][0] = (-state.theta[i] + u[i] * u[i] + 1.0) / rho;
        j[4 + i][1 + i] = -2.0 * u[i] / rho;
        j[4 + i][4 + i] = 2.0 / rho;
    }
    for a in 0..3 {
        let (p, q) = SYM_PAIRS[3 + a];
        j[7 + a][0] = (-state.theta[3 + a] + u[p] * u[q]) / rho;
        j[7 + a][1 + p] = -u[q] / rho;
        j[7 + a][1 + q] = -u[p] / rho;
        j[7 + a][7 + a] = 1.0 / rho;
    }
    for i in 0..3 {
        let mut cross = 0.0;
        for k in 0..3 {
            cross += u[k] * state.theta_get(i, k);
        }
        j[10 + i][0] = 2.0 * cross - u[i] * u2 + u[i] * tr - 5.0 * u[i];
        for jj in 0..3 {
            let diag = if i == jj { 5.0 + u2 - tr } else { 0.0 };
            j[10 + i][1 + jj] = -2.0 * state.theta_get(i, jj) + 2.0 * u[i] * u[jj] + diag;
            let delta = if i == jj { 4.0 } else { 0.0 };
            j[10 + i][4 + jj] = -u[i] * (delta + 2.0);
        }
        for a in 0..3 {
            let (p, q) = SYM_PAIRS[3 + a];
            let mut val = 0.0;
            if i == p {
                val += u[q];
            }
            if i == q {
                val += u[p];
            }
            j[10 + i][7 + a] = -2.0 * val;
        }
        j[10 + i][10 + i] = s10;
    }

    Ok(JacobianMatrix {
        entries: j,
        state: *state,
    })
}

/// Max-norm deviation of `a * b` from the identity.
pub fn product_identity_defect(a: &JacobianMatrix, b: &JacobianMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..13 {
        for c in 0..13 {
            let mut acc = 0.0;
            for k in 0..13 {
                acc += a.entries[r][k] * b.entries[k][c];
            }
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::moments::compute_gh;
    use crate::reference::std_gaussian_moment;
    use crate::sampling;
    use proptest::prelude::*;

    fn default_grid() -> VelocityGrid {
        build_grid(24, 8.0).unwrap()
    }

    /// Wider, finer lattice for checks with 1e-10 tolerances: at v_max = 8
    /// the degree-six Gaussian tails cost ~1e-9 in the Gram matrix.
    fn verification_grid() -> VelocityGrid {
        build_grid(32, 10.0).unwrap()
    }

    #[test]
    fn basis_norms_and_orthogonality() {
        let grid = default_grid();
        let b = build_bases(&grid);
        assert!((grid.inner(&b.ebar[4], &b.ebar[4]) - 1.0).abs() < 1e-8);
        assert!(grid.inner(&b.ebar[0], &b.ebar[4]).abs() < 1e-10);
        // ||e11||^2 = E[v1^2 (|v|^2-5)^2] / 10 = 1, cross-checked against the
        // closed-form moments
        let e_v12_v4 = std_gaussian_moment([6, 0, 0])
            + std_gaussian_moment([2, 4, 0])
            + std_gaussian_moment([2, 0, 4])
            + 2.0 * std_gaussian_moment([4, 2, 0])
            + 2.0 * std_gaussian_moment([4, 0, 2])
            + 2.0 * std_gaussian_moment([2, 2, 2]);
        let e_v12_v2 = std_gaussian_moment([4, 0, 0]) + 2.0 * std_gaussian_moment([2, 2, 0]);
        let closed = (e_v12_v4 - 10.0 * e_v12_v2 + 25.0) / 10.0;
        assert_eq!(closed, 1.0);
        assert!((grid.inner(&b.e[10], &b.e[10]) - closed).abs() < 1e-8);
    }

    #[test]
    fn thirteen_basis_moments_are_the_macroscopic_quantities() {
        // <f, e_i> recovers (rho - 1, rho U, G, H) of F = m + sqrt(m) f
        let grid = default_grid();
        let b = build_bases(&grid);
        let mut rng = sampling::rng_for(29, 0);
        for _ in 0..5 {
            let f = sampling::random_perturbation(&mut rng, &grid, 0.08);
            let field = from_perturbation(
                &DistributionField::single_cell(FieldKind::Perturbation, f.clone()),
                &grid,
            );
            let state = compute_macro(&field, &grid, 0).unwrap();
            let gh = compute_gh(&state);
            assert!((grid.inner(&f, &b.e[0]) - (state.rho - 1.0)).abs() < 1e-8);
            for i in 0..3 {
                let p = grid.inner(&f, &b.e[1 + i]);
                assert!((p - state.rho * state.u[i]).abs() < 1e-8);
            }
            for k in 0..6 {
                let p = grid.inner(&f, &b.e[4 + k]);
                assert!((p - gh.g[k]).abs() < 1e-8, "G[{k}]");
            }
            for i in 0..3 {
                let p = grid.inner(&f, &b.e[10 + i]);
                assert!((p - gh.h[i]).abs() < 1e-8, "H[{i}]");
            }
        }
    }

    #[test]
    fn gram_matrix_is_identity_on_default_grid() {
        let grid = default_grid();
        let b = build_bases(&grid);
        assert!(b.gram_defect() < 1e-8, "gram defect {}", b.gram_defect());
        // conservative block orthogonal to the heat-flux block
        for i in 0..5 {
            for j in 5..8 {
                assert!(b.gram_ebar[i][j].abs() < 1e-8);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let grid = default_grid();
        let b = build_bases(&grid);
        let p3 = project(&b.ebar[2], Projection::Conservative, &b, &grid);
        let dev: f64 = p3
            .iter()
            .zip(&b.ebar[2])
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8);
        let p7 = project(&b.ebar[6], Projection::Conservative, &b, &grid);
        assert!(grid.norm(&p7) < 1e-8);
        for &pr in &[0.0, 0.5, 1.0, 1.5] {
            let pp = project(&b.ebar[5], Projection::Shakhov(pr), &b, &grid);
            let expected: Vec<f64> = b.ebar[5].iter().map(|x| (1.0 - pr) * x).collect();
            let dev: f64 = pp
                .iter()
                .zip(&expected)
                .map(|(a, c)| (a - c).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-8, "pr = {pr}");
        }
    }

    #[test]
    fn projection_algebra_on_verification_grid() {
        let grid = verification_grid();
        let b = build_bases(&grid);
        let mut rng = sampling::rng_for(2, 0);
        for _ in 0..10 {
            let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
            let pc = project(&f, Projection::Conservative, &b, &grid);
            let pnc = project(&f, Projection::NonConservative, &b, &grid);
            // idempotency
            let pc2 = project(&pc, Projection::Conservative, &b, &grid);
            let pnc2 = project(&pnc, Projection::NonConservative, &b, &grid);
            let dev_c: Vec<f64> = pc2.iter().zip(&pc).map(|(a, c)| a - c).collect();
            let dev_nc: Vec<f64> = pnc2.iter().zip(&pnc).map(|(a, c)| a - c).collect();
            assert!(grid.norm(&dev_c) < 1e-10);
            assert!(grid.norm(&dev_nc) < 1e-10);
            // mutual annihilation
            let pcnc = project(&pnc, Projection::Conservative, &b, &grid);
            assert!(grid.norm(&pcnc) < 1e-10);
            // Pythagoras for P_c and P_c + P_nc
            let nf2 = grid.inner(&f, &f);
            for p in [&pc, &{
                let mut s = pc.clone();
                for (a, c) in s.iter_mut().zip(&pnc) {
                    *a += c;
                }
                s
            }] {
                let rest: Vec<f64> = f.iter().zip(p.iter()).map(|(a, c)| a - c).collect();
                let sum = grid.inner(p, p) + grid.inner(&rest, &rest);
                assert!((sum - nf2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kernel_and_eigenstructure() {
        let grid = verification_grid();
        let b = build_bases(&grid);
        let pr = 2.0 / 3.0;
        for i in 0..5 {
            let lf = apply_linearized(&b.ebar[i], pr, &b, &grid);
            assert!(grid.norm(&lf) < 1e-10, "ebar_{} not in kernel", i + 1);
        }
        // eigenvalue -Pr on the heat-flux directions
        for i in 5..8 {
            let lf = apply_linearized(&b.ebar[i], pr, &b, &grid);
            let dev: Vec<f64> = lf
                .iter()
                .zip(&b.ebar[i])
                .map(|(a, c)| a + pr * c)
                .collect();
            assert!(grid.norm(&dev) < 1e-10);
        }
        // at Pr = 0 the kernel grows to all eight directions
        for i in 0..8 {
            let lf = apply_linearized(&b.ebar[i], 0.0, &b, &grid);
            assert!(grid.norm(&lf) < 1e-10);
        }
        // eigenvalue -1 on the microscopic complement
        let mut rng = sampling::rng_for(6, 0);
        for _ in 0..50 {
            let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
            let p8 = project(&f, Projection::Shakhov(0.0), &b, &grid);
            let fperp: Vec<f64> = f.iter().zip(&p8).map(|(a, c)| a - c).collect();
            let lf = apply_linearized(&fperp, pr, &b, &grid);
            let dev: Vec<f64> = lf.iter().zip(&fperp).map(|(a, c)| a + c).collect();
            assert!(grid.norm(&dev) < 1e-10 * (1.0 + grid.norm(&fperp)));
        }
    }

    #[test]
    fn coercivity_examples_and_sampling() {
        let grid = verification_grid();
        let b = build_bases(&grid);
        let (lhs, bound) = coercivity_form(&b.ebar[0], 0.5, &b, &grid);
        assert!(lhs.abs() < 1e-10 && bound.abs() < 1e-10);
        let (lhs, bound) = coercivity_form(&b.ebar[5], 0.5, &b, &grid);
        assert!((lhs + 0.5).abs() < 1e-8);
        assert!((bound + 0.5).abs() < 1e-8);
        assert!(lhs <= bound + 1e-10);

        let mut rng = sampling::rng_for(8, 0);
        for &pr in &[0.1, 2.0 / 3.0, 1.0, 1.5] {
            for _ in 0..100 {
                let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
                let (lhs, bound) = coercivity_form(&f, pr, &b, &grid);
                assert!(lhs <= bound + 1e-10, "pr = {pr}: {lhs} > {bound}");
            }
        }
        for _ in 0..100 {
            let f = sampling::random_perturbation(&mut rng, &grid, 0.1);
            let (lhs, bound) = coercivity_form(&f, 0.0, &b, &grid);
            assert!((lhs - bound).abs() < 1e-10);
        }
    }

    #[test]
    fn gamma_vanishes_at_zero_and_keeps_invariant_moments() {
        let grid = default_grid();
        let b = build_bases(&grid);
        let params = ModelParams::default();
        let zero = vec![0.0; grid.n_nodes()];
        let g = gamma_residual(&zero, &params, &b, &grid).unwrap();
        assert!(grid.norm(&g) < 1e-10);

        let mut rng = sampling::rng_for(12, 0);
        for _ in 0..5 {
            let f = sampling::random_perturbation(&mut rng, &grid, 0.05);
            let g = gamma_residual(&f, &params, &b, &grid).unwrap();
            for i in 0..5 {
                let moment = grid.inner(&g, &b.ebar[i]);
                assert!(moment.abs() < 1e-8, "ebar_{} moment {moment}", i + 1);
            }
        }
    }

    #[test]
    fn gamma_scales_quadratically() {
        let grid = default_grid();
        let b = build_bases(&grid);
        let params = ModelParams::default();
        let mut rng = sampling::rng_for(13, 0);
        let f = sampling::random_perturbation(&mut rng, &grid, 1.0);
        let ratio_at = |eps: f64| {
            let scaled: Vec<f64> = f.iter().map(|x| eps * x).collect();
            let g = gamma_residual(&scaled, &params, &b, &grid).unwrap();
            grid.norm(&g) / (eps * eps)
        };
        let r2 = ratio_at(1e-2);
        let r3 = ratio_at(1e-3);
        assert!(
            (r2 / r3 - 1.0).abs() < 0.1,
            "quadratic ratios {r2} vs {r3}"
        );
    }

    #[test]
    fn first_order_consistency_examples() {
        let grid = default_grid();
        let b = build_bases(&grid);
        let params = ModelParams::default();

        // pure density scaling is linearized exactly
        let eps = 1e-3;
        let f1: Vec<f64> = b.ebar[0].iter().map(|x| eps * x).collect();
        let defect = first_order_consistency(&f1, &params, &b, &grid).unwrap();
        let numerator = defect * grid.inner(&f1, &f1);
        assert!(numerator < 1e-12, "numerator {numerator}");

        // pure heat-flux directions are exactly linear: the target is affine
        // in q at fixed (rho, U, T), so the Taylor remainder is quadrature
        // noise only
        let f6: Vec<f64> = b.ebar[5].iter().map(|x| 1e-2 * x).collect();
        let d6 = first_order_consistency(&f6, &params, &b, &grid).unwrap();
        assert!(d6 * grid.inner(&f6, &f6) < 1e-12);

        // temperature direction: genuine quadratic term, defect stable
        // under amplitude scaling
        let defects: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| {
                let f: Vec<f64> = b.ebar[4].iter().map(|x| e * x).collect();
                first_order_consistency(&f, &params, &b, &grid).unwrap()
            })
            .collect();
        assert!((defects[0] / defects[1] - 1.0).abs() < 0.1);
        assert!((defects[1] / defects[2] - 1.0).abs() < 0.1);

        let too_big = vec![1.0; grid.n_nodes()];
        assert!(matches!(
            first_order_consistency(&too_big, &params, &b, &grid),
            Err(Error::PerturbationTooLarge(_))
        ));
    }

    #[test]
    fn jacobian_equilibrium_diagonals() {
        let eq = MacroState::equilibrium();
        let j = jacobian(&eq).unwrap();
        let jinv = jacobian_inverse(&eq).unwrap();
        let s10 = 10.0f64.sqrt();
        let inv_diag = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, s10, s10, s10];
        for r in 0..13 {
            for c in 0..13 {
                let expect_inv = if r == c { inv_diag[r] } else { 0.0 };
                assert_eq!(jinv.entries[r][c], expect_inv, "J^-1[{r}][{c}]");
                let expect_fwd = if r == c { 1.0 / inv_diag[r] } else { 0.0 };
                assert!((j.entries[r][c] - expect_fwd).abs() < 1e-15);
            }
        }
        // documented sparsity: first row is (1, 0, ..., 0)
        assert_eq!(j.entries[0][0], 1.0);
        assert!(j.entries[0][1..].iter().all(|&x| x == 0.0));
    }

    /// The forward map as a plain function of the 13 primitive coordinates,
    /// for finite-difference cross-checking.
    fn forward_map(x: &[f64; 13]) -> [f64; 13] {
        let state = MacroState::new(
            x[0],
            [x[1], x[2], x[3]],
            [x[4], x[5], x[6], x[7], x[8], x[9]],
            [x[10], x[11], x[12]],
        );
        let gh = compute_gh(&state);
        let mut y = [0.0; 13];
        y[0] = state.rho;
        for i in 0..3 {
            y[1 + i] = state.rho * state.u[i];
        }
        for k in 0..6 {
            y[4 + k] = gh.g[k];
        }
        for i in 0..3 {
            y[10 + i] = gh.h[i];
        }
        y
    }

    /// The inverse map (rho, rho U, G, H) -> (rho, U, Theta, q).
    fn inverse_map(y: &[f64; 13]) -> [f64; 13] {
        let rho = y[0];
        let u = [y[1] / rho, y[2] / rho, y[3] / rho];
        let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let mut theta = [0.0; 6];
        for i in 0..3 {
            theta[i] = 2.0 * y[4 + i] / rho + 1.0 - u[i] * u[i];
        }
        for a in 0..3 {
            let (p, q) = SYM_PAIRS[3 + a];
            theta[3 + a] = y[7 + a] / rho - u[p] * u[q];
        }
        let tr = theta[0] + theta[1] + theta[2];
        let s10 = 10.0f64.sqrt();
        let mut x = [0.0; 13];
        x[0] = rho;
        for i in 0..3 {
            x[1 + i] = u[i];
        }
        for k in 0..6 {
            x[4 + k] = theta[k];
        }
        let state = MacroState::new(rho, u, theta, [0.0; 3]);
        for i in 0..3 {
            let mut cross = 0.0;
            for k in 0..3 {
                cross += u[k] * state.theta_get(i, k);
            }
            x[10 + i] =
                s10 * y[10 + i] - 2.0 * rho * cross - rho * u[i] * u2 - rho * u[i] * tr
                    + 5.0 * rho * u[i];
        }
        x
    }

    #[test]
    fn jacobians_match_finite_differences_and_invert() {
        let mut rng = sampling::rng_for(21, 0);
        let h = 1e-6;
        for _ in 0..100 {
            let state = sampling::wide_state(&mut rng);
            let j = jacobian(&state).unwrap();
            let jinv = jacobian_inverse(&state).unwrap();
            assert!(
                product_identity_defect(&j, &jinv) < 1e-10,
                "J J^-1 defect at {state:?}"
            );
            assert!(product_identity_defect(&jinv, &j) < 1e-10);

            let mut x = [0.0; 13];
            x[0] = state.rho;
            for i in 0..3 {
                x[1 + i] = state.u[i];
                x[10 + i] = state.q[i];
            }
            for k in 0..6 {
                x[4 + k] = state.theta[k];
            }
            // central differences of the forward map
            for c in 0..13 {
                let mut xp = x;
                let mut xm = x;
                xp[c] += h;
                xm[c] -= h;
                let yp = forward_map(&xp);
                let ym = forward_map(&xm);
                for r in 0..13 {
                    let fd = (yp[r] - ym[r]) / (2.0 * h);
                    assert!(
                        (fd - j.entries[r][c]).abs() < 1e-6,
                        "J[{r}][{c}]: fd {fd} vs {}",
                        j.entries[r][c]
                    );
                }
            }
            // central differences of the inverse map around the image point
            let y0 = forward_map(&x);
            for c in 0..13 {
                let mut yp = y0;
                let mut ym = y0;
                yp[c] += h;
                ym[c] -= h;
                let xp = inverse_map(&yp);
                let xm = inverse_map(&ym);
                for r in 0..13 {
                    let fd = (xp[r] - xm[r]) / (2.0 * h);
                    assert!(
                        (fd - jinv.entries[r][c]).abs() < 1e-5,
                        "J^-1[{r}][{c}]: fd {fd} vs {}",
                        jinv.entries[r][c]
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_rejects_nonpositive_density() {
        let mut s = MacroState::equilibrium();
        s.rho = -1.0;
        assert!(jacobian(&s).is_err());
        assert!(jacobian_inverse(&s).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn perturbation_round_trip(seed in 0u64..1000) {
            let grid = build_grid(8, 4.0).unwrap();
            let mut rng = sampling::rng_for(seed, 0);
            let f = sampling::near_equilibrium_field(&mut rng, &grid, 0.1);
            let p = to_perturbation(&f, &grid);
            prop_assert_eq!(p.kind, FieldKind::Perturbation);
            let back = from_perturbation(&p, &grid);
            for (a, b) in f.values.iter().zip(&back.values) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn perturbation_of_equilibrium_is_zero_and_density_mode_round_trips() {
        let grid = default_grid();
        let m = shakhov::global_maxwellian(&grid);
        let f = DistributionField::single_cell(FieldKind::Absolute, m.clone());
        let p = to_perturbation(&f, &grid);
        assert!(p.values.iter().all(|&x| x == 0.0));

        // f = ebar_1 corresponds to F = 2m
        let b = build_bases(&grid);
        let pert = DistributionField::single_cell(FieldKind::Perturbation, b.ebar[0].clone());
        let back = from_perturbation(&pert, &grid);
        for (a, mk) in back.values.iter().zip(&m) {
            assert!((a - 2.0 * mk).abs() < 1e-15 * (1.0 + mk));
        }
    }
}
