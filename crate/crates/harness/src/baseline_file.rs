//! Persistence for accumulated baselines.
//!
//! A baseline file is sectioned text: a prelude of `key = value` lines
//! (format marker, version, dataset count, floor policy, section sizes),
//! a `[freqs]` section with one frequency per line, and one `[pair a s]`
//! section per actuator-sensor pair with four statistics per bin. The
//! declared sizes make truncation detectable, and all floats carry 17
//! significant digits so save and load are mutually inverse down to the bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use adi_core::baseline::{Baseline, PairStats, StdFloorPolicy};
use adi_core::{AdiError, PairKey, TransducerId};

use crate::error::{HarnessError, Result};
use crate::fsio;

pub const BASELINE_FORMAT: &str = "adi-baseline";
pub const BASELINE_VERSION: u32 = 1;

pub fn save_baseline(baseline: &Baseline, path: &Path) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "format = {BASELINE_FORMAT}");
    let _ = writeln!(text, "version = {BASELINE_VERSION}");
    let _ = writeln!(text, "n_datasets = {}", baseline.n_datasets);
    let _ = writeln!(
        text,
        "floor_mag_rel = {}",
        fsio::fmt_f64(baseline.floor_policy.mag_rel)
    );
    let _ = writeln!(
        text,
        "floor_mag_abs = {}",
        fsio::fmt_f64(baseline.floor_policy.mag_abs)
    );
    let _ = writeln!(
        text,
        "floor_phase_abs = {}",
        fsio::fmt_f64(baseline.floor_policy.phase_abs)
    );
    let _ = writeln!(text, "bins = {}", baseline.freqs_hz.len());
    let _ = writeln!(text, "pairs = {}", baseline.pairs.len());
    text.push('\n');
    text.push_str("[freqs]\n");
    for &f in &baseline.freqs_hz {
        let _ = writeln!(text, "{}", fsio::fmt_f64(f));
    }
    for (&(actuator, sensor), stats) in &baseline.pairs {
        text.push('\n');
        let _ = writeln!(text, "[pair {actuator} {sensor}]");
        for k in 0..baseline.freqs_hz.len() {
            fsio::push_f64_row(
                &mut text,
                &[
                    stats.mag_mean[k],
                    stats.mag_std[k],
                    stats.phase_mean[k],
                    stats.phase_std[k],
                ],
            );
        }
    }
    fsio::write_atomic(path, &text)
}

pub fn load_baseline(path: &Path) -> Result<Baseline> {
    let name = path.display().to_string();
    let text = fsio::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut n_datasets = None;
    let mut floor = StdFloorPolicy::default();
    let mut bins = None;
    let mut pair_count = None;
    let mut format_seen = false;

    // Prelude runs until the [freqs] header.
    let mut pending_section: Option<(usize, String)> = None;
    for (line, content) in lines.by_ref() {
        if content.starts_with('[') {
            pending_section = Some((line, content.to_string()));
            break;
        }
        let (key, value) = fsio::split_key_value(content, &name, line)?;
        match key {
            "format" => {
                if value != BASELINE_FORMAT {
                    return Err(HarnessError::Parse {
                        path: name.clone(),
                        line,
                        message: format!("expected format {BASELINE_FORMAT}, found {value:?}"),
                    });
                }
                format_seen = true;
            }
            "version" => {
                let v = fsio::parse_u32(value, &name, line)?;
                if v != BASELINE_VERSION {
                    return Err(HarnessError::UnsupportedVersion {
                        path: name.clone(),
                        what: "baseline",
                        found: value.to_string(),
                        expected: BASELINE_VERSION,
                    });
                }
            }
            "n_datasets" => n_datasets = Some(fsio::parse_usize(value, &name, line)?),
            "floor_mag_rel" => floor.mag_rel = fsio::parse_f64(value, &name, line)?,
            "floor_mag_abs" => floor.mag_abs = fsio::parse_f64(value, &name, line)?,
            "floor_phase_abs" => floor.phase_abs = fsio::parse_f64(value, &name, line)?,
            "bins" => bins = Some(fsio::parse_usize(value, &name, line)?),
            "pairs" => pair_count = Some(fsio::parse_usize(value, &name, line)?),
            other => {
                return Err(HarnessError::Parse {
                    path: name.clone(),
                    line,
                    message: format!("unknown baseline key {other:?}"),
                })
            }
        }
    }

    if !format_seen {
        return Err(HarnessError::Parse {
            path: name.clone(),
            line: 0,
            message: format!("missing required key format (= {BASELINE_FORMAT})"),
        });
    }
    let missing = |field: &str| HarnessError::Parse {
        path: name.clone(),
        line: 0,
        message: format!("missing required key {field}"),
    };
    let n_datasets = n_datasets.ok_or_else(|| missing("n_datasets"))?;
    let bins = bins.ok_or_else(|| missing("bins"))?;
    let pair_count = pair_count.ok_or_else(|| missing("pairs"))?;
    if n_datasets < 3 {
        return Err(HarnessError::Core(AdiError::InsufficientData(format!(
            "baseline file declares n_datasets = {n_datasets}, need at least 3"
        ))));
    }
    floor.validate().map_err(HarnessError::Core)?;

    let (header_line, header) = match pending_section {
        Some(h) => h,
        None => {
            return Err(HarnessError::Parse {
                path: name.clone(),
                line: 0,
                message: "file ends before the [freqs] section".into(),
            })
        }
    };
    if header != "[freqs]" {
        return Err(HarnessError::Parse {
            path: name.clone(),
            line: header_line,
            message: format!("expected [freqs], found {header:?}"),
        });
    }
    let mut freqs_hz = Vec::with_capacity(bins);
    for _ in 0..bins {
        let (line, content) = lines.next().ok_or_else(|| HarnessError::Parse {
            path: name.clone(),
            line: 0,
            message: format!("truncated [freqs] section: expected {bins} frequencies"),
        })?;
        freqs_hz.push(fsio::parse_f64(content, &name, line)?);
    }

    let mut pairs: BTreeMap<PairKey, PairStats> = BTreeMap::new();
    for _ in 0..pair_count {
        let (line, header) = lines.next().ok_or_else(|| HarnessError::Parse {
            path: name.clone(),
            line: 0,
            message: format!(
                "truncated pair table: expected {pair_count} sections, found {}",
                pairs.len()
            ),
        })?;
        let inner = header
            .strip_prefix("[pair ")
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| HarnessError::Parse {
                path: name.clone(),
                line,
                message: format!("expected a [pair a s] header, found {header:?}"),
            })?;
        let mut ids = inner.split_whitespace();
        let actuator = TransducerId(fsio::parse_u32(
            ids.next().unwrap_or_default(),
            &name,
            line,
        )?);
        let sensor = TransducerId(fsio::parse_u32(
            ids.next().unwrap_or_default(),
            &name,
            line,
        )?);
        if ids.next().is_some() {
            return Err(HarnessError::Parse {
                path: name.clone(),
                line,
                message: format!("expected exactly two ids in {header:?}"),
            });
        }
        if actuator == sensor {
            return Err(HarnessError::Parse {
                path: name.clone(),
                line,
                message: format!("self-pair {actuator} -> {sensor} is not allowed"),
            });
        }
        let mut stats = PairStats {
            mag_mean: Vec::with_capacity(bins),
            mag_std: Vec::with_capacity(bins),
            phase_mean: Vec::with_capacity(bins),
            phase_std: Vec::with_capacity(bins),
        };
        for _ in 0..bins {
            let (line, content) = lines.next().ok_or_else(|| HarnessError::Parse {
                path: name.clone(),
                line: 0,
                message: format!(
                    "truncated [pair {actuator} {sensor}] section: expected {bins} rows"
                ),
            })?;
            let cells: Vec<&str> = content.split_whitespace().collect();
            if cells.len() != 4 {
                return Err(HarnessError::Parse {
                    path: name.clone(),
                    line,
                    message: format!("expected 4 statistics per row, found {}", cells.len()),
                });
            }
            stats.mag_mean.push(fsio::parse_f64(cells[0], &name, line)?);
            stats.mag_std.push(fsio::parse_f64(cells[1], &name, line)?);
            stats.phase_mean.push(fsio::parse_f64(cells[2], &name, line)?);
            stats.phase_std.push(fsio::parse_f64(cells[3], &name, line)?);
        }
        if pairs.insert((actuator, sensor), stats).is_some() {
            return Err(HarnessError::Parse {
                path: name.clone(),
                line,
                message: format!("duplicate section for pair {actuator} -> {sensor}"),
            });
        }
    }
    if let Some((line, content)) = lines.next() {
        return Err(HarnessError::Parse {
            path: name.clone(),
            line,
            message: format!("unexpected content after the pair table: {content:?}"),
        });
    }

    let baseline = Baseline {
        freqs_hz,
        n_datasets,
        floor_policy: floor,
        pairs,
    };
    let ids = baseline.transducer_ids();
    for &a in &ids {
        for &s in &ids {
            if a != s && !baseline.pairs.contains_key(&(a, s)) {
                return Err(HarnessError::Parse {
                    path: name.clone(),
                    line: 0,
                    message: format!(
                        "pair table is not a complete round robin: missing {a} -> {s}"
                    ),
                });
            }
        }
    }
    Ok(baseline)
}
