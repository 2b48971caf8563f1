//! Version-tagged text checkpoints: a configuration echo, the current time,
//! and the flat state array.
//!
//! Layout (all text, one item per line):
//! ```text
//! shakhov-checkpoint v1
//! <key> = <value>        # configuration echo, one line per key
//! t = <time>
//! kind = absolute | perturbation
//! n_values = <n_cells * n_nodes>
//! <value>                # n_values lines, 17 significant digits each
//! ```
//! Values are written with 17 significant digits, which round-trips `f64`
//! exactly.

use crate::error::Error;
use crate::grid::{DistributionField, FieldKind};
use crate::solver::SimConfig;
use crate::Result;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const FORMAT_TAG: &str = "shakhov-checkpoint v1";

/// A loaded checkpoint: the raw configuration echo, the time stamp, and the
/// state array shaped by the echoed `n_cells`.
#[derive(Debug)]
pub struct Checkpoint {
    pub echo: Vec<(String, String)>,
    pub t: f64,
    pub field: DistributionField,
}

impl Checkpoint {
    pub fn echo_value(&self, key: &str) -> Option<&str> {
        self.echo
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn config_echo(config: &SimConfig) -> Vec<(String, String)> {
    vec![
        ("pr".into(), format!("{:?}", config.params.pr)),
        ("tau0".into(), format!("{:?}", config.params.tau0)),
        ("eta".into(), format!("{:?}", config.params.eta)),
        ("w".into(), format!("{:?}", config.params.w)),
        ("n_v".into(), config.n_per_axis.to_string()),
        ("v_max".into(), format!("{:?}", config.v_max)),
        ("n_cells".into(), config.n_cells.to_string()),
        (
            "domain_length".into(),
            format!("{:?}", config.domain_length),
        ),
        ("dt".into(), format!("{:?}", config.dt)),
        ("t_end".into(), format!("{:?}", config.t_end)),
        ("output_every".into(), config.output_every.to_string()),
        ("ic.kind".into(), config.ic.kind_str().to_string()),
        ("ic.amplitude".into(), format!("{:?}", config.ic.amplitude())),
        ("ic.mode".into(), config.ic.mode().to_string()),
        (
            "enforce_third_moment_zero".into(),
            config.enforce_third_moment_zero.to_string(),
        ),
    ]
}

pub fn save_checkpoint(
    path: &Path,
    config: &SimConfig,
    t: f64,
    field: &DistributionField,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{FORMAT_TAG}")?;
    for (k, v) in config_echo(config) {
        writeln!(out, "{k} = {v}")?;
    }
    writeln!(out, "t = {t:?}")?;
    let kind = match field.kind {
        FieldKind::Absolute => "absolute",
        FieldKind::Perturbation => "perturbation",
    };
    writeln!(out, "kind = {kind}")?;
    writeln!(out, "n_values = {}", field.values.len())?;
    for v in &field.values {
        writeln!(out, "{:.16e}", v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::CheckpointFormat("empty file".into()))??;
    if header.trim() != FORMAT_TAG {
        return Err(Error::CheckpointFormat(format!(
            "unrecognized header '{header}'"
        )));
    }
    let mut echo = Vec::new();
    let mut t = None;
    let mut kind = None;
    let mut n_values = None;
    for line in lines.by_ref() {
        let line = line?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::CheckpointFormat(format!("malformed line '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "t" => {
                t = Some(value.parse::<f64>().map_err(|_| {
                    Error::CheckpointFormat(format!("bad time value '{value}'"))
                })?)
            }
            "kind" => {
                kind = Some(match value {
                    "absolute" => FieldKind::Absolute,
                    "perturbation" => FieldKind::Perturbation,
                    other => {
                        return Err(Error::CheckpointFormat(format!("unknown kind '{other}'")))
                    }
                })
            }
            "n_values" => {
                n_values = Some(value.parse::<usize>().map_err(|_| {
                    Error::CheckpointFormat(format!("bad n_values '{value}'"))
                })?);
                break;
            }
            _ => echo.push((key.to_string(), value.to_string())),
        }
    }
    let t = t.ok_or_else(|| Error::CheckpointFormat("missing t".into()))?;
    let kind = kind.ok_or_else(|| Error::CheckpointFormat("missing kind".into()))?;
    let n_values = n_values.ok_or_else(|| Error::CheckpointFormat("missing n_values".into()))?;
    let mut values = Vec::with_capacity(n_values);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(line.trim().parse::<f64>().map_err(|_| {
            Error::CheckpointFormat(format!("bad value '{line}'"))
        })?);
    }
    if values.len() != n_values {
        return Err(Error::CheckpointFormat(format!(
            "expected {n_values} values, found {}",
            values.len()
        )));
    }
    let n_cells: usize = echo
        .iter()
        .find(|(k, _)| k == "n_cells")
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| Error::CheckpointFormat("missing n_cells in echo".into()))?;
    if n_values % n_cells != 0 {
        return Err(Error::CheckpointFormat(
            "n_values not divisible by n_cells".into(),
        ));
    }
    let field = DistributionField::new(n_cells, n_values / n_cells, kind, values)?;
    Ok(Checkpoint { echo, t, field })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{initial_state, InitialCondition};

    #[test]
    fn round_trip_is_bit_exact() {
        let config = SimConfig {
            n_per_axis: 8,
            v_max: 4.0,
            n_cells: 4,
            dt: 0.005,
            ic: InitialCondition::MaxwellianSine {
                amplitude: 1e-2,
                mode: 1,
            },
            ..SimConfig::default()
        };
        let grid = config.build_velocity_grid().unwrap();
        let field = initial_state(&config, &grid).unwrap();
        let dir = std::env::temp_dir().join("shakhov-checkpoint-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.chk");
        save_checkpoint(&path, &config, 1.25, &field).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.t, 1.25);
        assert_eq!(loaded.field.n_cells, 4);
        assert_eq!(loaded.field.kind, FieldKind::Absolute);
        assert_eq!(loaded.echo_value("ic.kind"), Some("maxwellian-sine"));
        assert_eq!(loaded.echo_value("n_v"), Some("8"));
        for (a, b) in field.values.iter().zip(&loaded.field.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_foreign_headers() {
        let dir = std::env::temp_dir().join("shakhov-checkpoint-bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.chk");
        std::fs::write(&path, "not a checkpoint\n").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CheckpointFormat(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}
