//! Flat `key = value` run configuration with `#` comments. Unknown keys are
//! rejected by name, unparsable values by line number, and violated
//! invariants by the invariant's own message. Missing keys take the
//! documented defaults:
//!
//! ```text
//! pr = 0.6666666666666666      tau0 = 1.0    eta = 1.0    w = 0.5
//! n_v = 24                     v_max = 8.0
//! n_cells = 1                  domain_length = 2 pi
//! dt = 0.01                    t_end = 10.0  output_every = 10
//! ic.kind = equilibrium        ic.amplitude = 0.01        ic.mode = 1
//! enforce_third_moment_zero = false
//! output_path = diagnostics.csv
//! seed = 0
//! ```

use shakhov_core::solver::{InitialCondition, SimConfig};
use shakhov_core::ModelParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: expected 'key = value', got '{text}'")]
    BadSyntax { line: usize, text: String },

    #[error("line {line}: cannot parse value '{value}' for key '{key}'")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },

    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },

    #[error("invalid configuration: {0}")]
    Invariant(String),
}

/// A parsed configuration: the solver part plus the CLI-level output path
/// and random seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub sim: SimConfig,
    pub output_path: String,
    pub seed: u64,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            sim: SimConfig::default(),
            output_path: "diagnostics.csv".to_string(),
            seed: 0,
        }
    }
}

const KEYS: [&str; 17] = [
    "pr",
    "tau0",
    "eta",
    "w",
    "n_v",
    "v_max",
    "n_cells",
    "domain_length",
    "dt",
    "t_end",
    "output_every",
    "ic.kind",
    "ic.amplitude",
    "ic.mode",
    "enforce_third_moment_zero",
    "output_path",
    "seed",
];

pub fn parse_config(text: &str) -> Result<CliConfig, ConfigError> {
    let defaults = CliConfig::default();
    let mut pr = defaults.sim.params.pr;
    let mut tau0 = defaults.sim.params.tau0;
    let mut eta = defaults.sim.params.eta;
    let mut w = defaults.sim.params.w;
    let mut n_v = defaults.sim.n_per_axis;
    let mut v_max = defaults.sim.v_max;
    let mut n_cells = defaults.sim.n_cells;
    let mut domain_length = defaults.sim.domain_length;
    let mut dt = defaults.sim.dt;
    let mut t_end = defaults.sim.t_end;
    let mut output_every = defaults.sim.output_every;
    let mut ic_kind = "equilibrium".to_string();
    let mut ic_amplitude = 0.01f64;
    let mut ic_mode = 1u32;
    let mut enforce = false;
    let mut output_path = defaults.output_path.clone();
    let mut seed = defaults.seed;

    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadSyntax {
            line: line_no,
            text: raw.trim().to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line: line_no,
                key: key.to_string(),
            });
        }
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            });
        }
        seen.push(key.to_string());

        macro_rules! parse_as {
            ($t:ty) => {
                value
                    .parse::<$t>()
                    .map_err(|_| ConfigError::BadValue {
                        line: line_no,
                        key: key.to_string(),
                        value: value.to_string(),
                    })?
            };
        }
        match key {
            "pr" => pr = parse_as!(f64),
            "tau0" => tau0 = parse_as!(f64),
            "eta" => eta = parse_as!(f64),
            "w" => w = parse_as!(f64),
            "n_v" => n_v = parse_as!(usize),
            "v_max" => v_max = parse_as!(f64),
            "n_cells" => n_cells = parse_as!(usize),
            "domain_length" => domain_length = parse_as!(f64),
            "dt" => dt = parse_as!(f64),
            "t_end" => t_end = parse_as!(f64),
            "output_every" => output_every = parse_as!(usize),
            "ic.kind" => {
                let known = ["equilibrium", "maxwellian-sine", "heat-flux-mode"];
                if !known.contains(&value) {
                    return Err(ConfigError::BadValue {
                        line: line_no,
                        key: key.to_string(),
                        value: value.to_string(),
                    });
                }
                ic_kind = value.to_string();
            }
            "ic.amplitude" => ic_amplitude = parse_as!(f64),
            "ic.mode" => ic_mode = parse_as!(u32),
            "enforce_third_moment_zero" => enforce = parse_as!(bool),
            "output_path" => output_path = value.to_string(),
            "seed" => seed = parse_as!(u64),
            _ => unreachable!(),
        }
    }

    let params =
        ModelParams::new(pr, tau0, eta, w).map_err(|e| ConfigError::Invariant(e.to_string()))?;
    let ic = match ic_kind.as_str() {
        "equilibrium" => InitialCondition::Equilibrium,
        "maxwellian-sine" => InitialCondition::MaxwellianSine {
            amplitude: ic_amplitude,
            mode: ic_mode,
        },
        "heat-flux-mode" => InitialCondition::HeatFluxMode {
            amplitude: ic_amplitude,
            mode: ic_mode,
        },
        _ => unreachable!(),
    };
    let sim = SimConfig {
        params,
        n_per_axis: n_v,
        v_max,
        n_cells,
        domain_length,
        dt,
        t_end,
        output_every,
        ic,
        enforce_third_moment_zero: enforce,
    };
    sim.validate()
        .map_err(|e| ConfigError::Invariant(e.to_string()))?;
    Ok(CliConfig {
        sim,
        output_path,
        seed,
    })
}

/// Canonical rendering; `parse_config(render(c)) == c` for any valid config.
pub fn render_config(config: &CliConfig) -> String {
    let s = &config.sim;
    format!(
        "pr = {pr:?}\ntau0 = {tau0:?}\neta = {eta:?}\nw = {w:?}\nn_v = {nv}\n\
         v_max = {vmax:?}\nn_cells = {nc}\ndomain_length = {dl:?}\ndt = {dt:?}\n\
         t_end = {te:?}\noutput_every = {oe}\nic.kind = {kind}\n\
         ic.amplitude = {amp:?}\nic.mode = {mode}\n\
         enforce_third_moment_zero = {enf}\noutput_path = {out}\nseed = {seed}\n",
        pr = s.params.pr,
        tau0 = s.params.tau0,
        eta = s.params.eta,
        w = s.params.w,
        nv = s.n_per_axis,
        vmax = s.v_max,
        nc = s.n_cells,
        dl = s.domain_length,
        dt = s.dt,
        te = s.t_end,
        oe = s.output_every,
        kind = s.ic.kind_str(),
        amp = s.ic.amplitude(),
        mode = s.ic.mode(),
        enf = s.enforce_third_moment_zero,
        out = config.output_path,
        seed = config.seed,
    )
}
