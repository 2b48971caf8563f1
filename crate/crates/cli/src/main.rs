//! `shakhov` command line: run configurations and execute the identity
//! verification suites.
//!
//! Exit codes: 0 on success, 1 when a verification check fails or a run
//! aborts, 2 on usage or configuration errors.

mod config;

use clap::{Parser, Subcommand};
use config::{parse_config, render_config, CliConfig};
use shakhov_core::verify::{self, CheckOutcome, VerifyOptions};
use shakhov_core::{diagnostics, solver};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "shakhov", version, about = "Shakhov-model solver and verification suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration to t_end and write CSV diagnostics.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conservation, cancellation, BGK-reduction, and fixed-point checks.
    VerifyOperator {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Basis, projection, coercivity, Jacobian, and residual checks.
    VerifyLinear {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out.as_deref()),
        Command::VerifyOperator { config, seed, out } => {
            cmd_verify(&config, seed, out.as_deref(), false)
        }
        Command::VerifyLinear { config, seed, out } => {
            cmd_verify(&config, seed, out.as_deref(), true)
        }
    };
    std::process::exit(code);
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<CliConfig, i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(2);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return Err(2);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_run(path: &Path, seed: Option<u64>, out: Option<&Path>) -> i32 {
    let cfg = match load_config(path, seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let output = match solver::run(&cfg.sim) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: run setup failed: {e}");
            return 2;
        }
    };
    let csv_path = out
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from(&cfg.output_path));
    if let Err(e) = diagnostics::write_csv(&csv_path, &output.records) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return 2;
    }
    println!(
        "run: {} records written to {}",
        output.records.len(),
        csv_path.display()
    );
    print_run_summary(&cfg, &output);
    match &output.aborted {
        Some(reason) => {
            let last_t = output.records.last().map(|r| r.t).unwrap_or(0.0);
            eprintln!("run aborted ({reason}); last good record at t = {last_t}");
            1
        }
        None => 0,
    }
}

fn print_run_summary(cfg: &CliConfig, output: &solver::RunOutput) {
    let records = &output.records;
    let (mass_drift, momentum_drift, energy_drift) = verify::conservation_drift(records);
    println!("conservation drift: mass {mass_drift:.3e}, momentum {momentum_drift:.3e}, energy {energy_drift:.3e}");

    // decay fit after one transport period (spatial runs), above the
    // terminal quadrature floor
    let window_start = if cfg.sim.n_cells > 1 {
        cfg.sim.domain_length
    } else {
        0.0
    };
    let series = diagnostics::decay_series(records, window_start);
    match diagnostics::fit_decay(&series) {
        Ok((rate, r2)) => {
            println!("decay fit (t >= {window_start:.3}): rate {rate:.6e}, R^2 {r2:.6}")
        }
        Err(e) => println!("decay fit: not available ({e})"),
    }

    // the frozen-flux demonstration at Pr = 0: total third moment drift
    let first = &records[0];
    let t3_drift = records
        .iter()
        .flat_map(|r| {
            (0..3).map(move |i| (r.third_moment[i] - first.third_moment[i]).abs())
        })
        .fold(0.0f64, f64::max);
    println!("third-moment total drift: {t3_drift:.3e}");

    let max_h_rise = verify::max_h_increase(records);
    let verdict = if max_h_rise <= 1e-10 {
        "nonincreasing"
    } else {
        "VIOLATED"
    };
    println!("H-functional: {verdict} (max record-to-record increase {max_h_rise:.3e})");

    let min_f = records.iter().map(|r| r.min_f).fold(f64::INFINITY, f64::min);
    let min_s = records.iter().map(|r| r.min_s).fold(f64::INFINITY, f64::min);
    println!("positivity minima: min F {min_f:.3e}, min S {min_s:.3e}");

    match solver::third_moment_balance(
        &output.final_state,
        &cfg.sim.params,
        &output.grid,
        cfg.sim.dx(),
        cfg.sim.dt,
    ) {
        Ok((lhs, rhs)) => {
            let res = (0..3).map(|i| (lhs[i] - rhs[i]).abs()).fold(0.0, f64::max);
            println!("third-moment balance residual at t_end: {res:.3e}");
        }
        Err(e) => println!("third-moment balance: not available ({e})"),
    }
}

fn cmd_verify(path: &Path, seed: Option<u64>, out: Option<&Path>, linear: bool) -> i32 {
    let cfg = match load_config(path, seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let opts = VerifyOptions {
        seed: cfg.seed,
        n_states: 100,
        n_per_axis: cfg.sim.n_per_axis,
        v_max: cfg.sim.v_max,
    };
    let (suite, checks) = if linear {
        (
            "verify-linear",
            verify::linear_checks(&cfg.sim.params, &opts),
        )
    } else {
        (
            "verify-operator",
            verify::operator_checks(&cfg.sim.params, &opts),
        )
    };
    let checks = match checks {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {suite} could not complete: {e}");
            return 1;
        }
    };
    let report = format_report(suite, &cfg, &opts, &checks);
    print!("{report}");
    if let Some(p) = out {
        // file reports carry the effective configuration for provenance
        let mut file_report = report.clone();
        file_report.push_str("\n# effective configuration\n");
        for line in render_config(&cfg).lines() {
            file_report.push_str("# ");
            file_report.push_str(line);
            file_report.push('\n');
        }
        if let Err(e) = std::fs::write(p, &file_report) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return 2;
        }
    }
    if checks.iter().all(|c| c.passed) {
        0
    } else {
        1
    }
}

fn format_report(
    suite: &str,
    cfg: &CliConfig,
    opts: &VerifyOptions,
    checks: &[CheckOutcome],
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{suite}: grid {}, pr = {:?}, seed = {}, {} random states\n",
        verify::describe_grid(opts),
        cfg.sim.params.pr,
        opts.seed,
        opts.n_states
    ));
    for c in checks {
        let status = if c.passed { " ok " } else { "FAIL" };
        let detail = if c.detail.is_empty() {
            String::new()
        } else {
            format!("  [{}]", c.detail)
        };
        out.push_str(&format!(
            "[{status}] {:<32} max residual {:.6e} (tol {:.1e}){detail}\n",
            c.name, c.residual, c.tolerance
        ));
    }
    let failing: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failing.is_empty() {
        out.push_str(&format!("all {} checks passed\n", checks.len()));
    } else {
        out.push_str(&format!(
            "{} of {} checks failed: {}\n",
            failing.len(),
            checks.len(),
            failing.join(", ")
        ));
    }
    out
}
