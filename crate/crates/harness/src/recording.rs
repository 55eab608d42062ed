//! Persistence for time-series interrogation records.
//!
//! A recording is a pair of sibling files: `<stem>.meta` holds `key = value`
//! metadata (sample rate, actuator, channel list, excitation settings, seed)
//! and `<stem>.csv` holds the sample table, one row per instant with the
//! header `t,excitation,ch<id>,...`. Samples are rendered with 17
//! significant digits so a load returns bit-identical values. Metadata keys
//! this build does not recognize are carried through a round trip untouched.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use adi_core::spectral::{ExcitationConfig, ExcitationKind, TimeSeriesRecord};
use adi_core::TransducerId;

use crate::error::{HarnessError, Result};
use crate::fsio;

pub const RECORDING_FORMAT: &str = "adi-recording";
pub const RECORDING_VERSION: u32 = 1;

/// Provenance stored alongside the raw samples: how the structure was driven
/// and which seed produced the realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingMeta {
    pub excitation: ExcitationConfig,
    pub seed: u64,
    /// Interrogation cycle this record belongs to; records sharing a label
    /// are grouped into one signature set.
    pub cycle_label: Option<String>,
    /// Unrecognized metadata keys, preserved in file order.
    pub extra: Vec<(String, String)>,
}

fn kind_name(kind: ExcitationKind) -> &'static str {
    match kind {
        ExcitationKind::LinearChirp => "linear-chirp",
        ExcitationKind::BandLimitedRandom => "band-limited-random",
    }
}

fn kind_from_name(name: &str, path: &str, line: usize) -> Result<ExcitationKind> {
    match name {
        "linear-chirp" => Ok(ExcitationKind::LinearChirp),
        "band-limited-random" => Ok(ExcitationKind::BandLimitedRandom),
        other => Err(HarnessError::Parse {
            path: path.to_string(),
            line,
            message: format!("unknown excitation kind {other:?}"),
        }),
    }
}

fn samples_path(meta_path: &Path) -> PathBuf {
    let mut p = meta_path.to_path_buf();
    p.set_extension("csv");
    p
}

/// Writes `<stem>.meta` and `<stem>.csv` for the record. `path` names the
/// metadata file; the sample table lands next to it.
pub fn save_recording(
    record: &TimeSeriesRecord,
    meta: &RecordingMeta,
    path: &Path,
) -> Result<()> {
    record.validate().map_err(HarnessError::Core)?;
    if meta.excitation.sample_rate_hz != record.sample_rate_hz {
        return Err(HarnessError::Config(format!(
            "metadata sample rate {} Hz disagrees with the record's {} Hz",
            meta.excitation.sample_rate_hz, record.sample_rate_hz
        )));
    }

    let mut text = String::new();
    let _ = writeln!(text, "format = {RECORDING_FORMAT}");
    let _ = writeln!(text, "version = {RECORDING_VERSION}");
    let _ = writeln!(text, "sample_rate_hz = {}", fsio::fmt_f64(record.sample_rate_hz));
    let _ = writeln!(text, "actuator_id = {}", record.actuator_id);
    let ids: Vec<String> = record.responses.keys().map(|id| id.to_string()).collect();
    let _ = writeln!(text, "transducers = {}", ids.join(","));
    let _ = writeln!(text, "excitation_kind = {}", kind_name(meta.excitation.kind));
    let _ = writeln!(
        text,
        "excitation_band_low_hz = {}",
        fsio::fmt_f64(meta.excitation.band_low_hz)
    );
    let _ = writeln!(
        text,
        "excitation_band_high_hz = {}",
        fsio::fmt_f64(meta.excitation.band_high_hz)
    );
    let _ = writeln!(
        text,
        "excitation_amplitude = {}",
        fsio::fmt_f64(meta.excitation.amplitude)
    );
    let _ = writeln!(
        text,
        "excitation_duration_s = {}",
        fsio::fmt_f64(meta.excitation.duration_s)
    );
    let _ = writeln!(text, "seed = {}", meta.seed);
    if let Some(label) = &meta.cycle_label {
        let _ = writeln!(text, "cycle_label = {label}");
    }
    for (key, value) in &meta.extra {
        let _ = writeln!(text, "{key} = {value}");
    }
    fsio::write_atomic(path, &text)?;

    let mut table = String::with_capacity(record.excitation.len() * 32);
    table.push_str("t,excitation");
    for id in record.responses.keys() {
        let _ = write!(table, ",ch{id}");
    }
    table.push('\n');
    let dt = 1.0 / record.sample_rate_hz;
    for i in 0..record.excitation.len() {
        let _ = write!(table, "{}", fsio::fmt_f64(i as f64 * dt));
        let _ = write!(table, ",{}", fsio::fmt_f64(record.excitation[i]));
        for series in record.responses.values() {
            let _ = write!(table, ",{}", fsio::fmt_f64(series[i]));
        }
        table.push('\n');
    }
    fsio::write_atomic(&samples_path(path), &table)
}

struct MetaFields {
    sample_rate_hz: Option<f64>,
    actuator_id: Option<TransducerId>,
    transducers: Option<Vec<TransducerId>>,
    kind: Option<ExcitationKind>,
    band_low_hz: Option<f64>,
    band_high_hz: Option<f64>,
    amplitude: Option<f64>,
    duration_s: Option<f64>,
    seed: Option<u64>,
    cycle_label: Option<String>,
    extra: Vec<(String, String)>,
}

fn parse_meta(text: &str, path: &str) -> Result<MetaFields> {
    let mut fields = MetaFields {
        sample_rate_hz: None,
        actuator_id: None,
        transducers: None,
        kind: None,
        band_low_hz: None,
        band_high_hz: None,
        amplitude: None,
        duration_s: None,
        seed: None,
        cycle_label: None,
        extra: Vec::new(),
    };
    let mut format_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = fsio::split_key_value(trimmed, path, line)?;
        match key {
            "format" => {
                if value != RECORDING_FORMAT {
                    return Err(HarnessError::Parse {
                        path: path.to_string(),
                        line,
                        message: format!(
                            "expected format {RECORDING_FORMAT}, found {value:?}"
                        ),
                    });
                }
                format_seen = true;
            }
            "version" => {
                let v = fsio::parse_u32(value, path, line)?;
                if v != RECORDING_VERSION {
                    return Err(HarnessError::UnsupportedVersion {
                        path: path.to_string(),
                        what: "recording",
                        found: value.to_string(),
                        expected: RECORDING_VERSION,
                    });
                }
            }
            "sample_rate_hz" => {
                fields.sample_rate_hz = Some(fsio::parse_f64(value, path, line)?)
            }
            "actuator_id" => {
                fields.actuator_id =
                    Some(TransducerId(fsio::parse_u32(value, path, line)?))
            }
            "transducers" => {
                let mut ids = Vec::new();
                for token in value.split(',') {
                    ids.push(TransducerId(fsio::parse_u32(token, path, line)?));
                }
                fields.transducers = Some(ids);
            }
            "excitation_kind" => fields.kind = Some(kind_from_name(value, path, line)?),
            "excitation_band_low_hz" => {
                fields.band_low_hz = Some(fsio::parse_f64(value, path, line)?)
            }
            "excitation_band_high_hz" => {
                fields.band_high_hz = Some(fsio::parse_f64(value, path, line)?)
            }
            "excitation_amplitude" => {
                fields.amplitude = Some(fsio::parse_f64(value, path, line)?)
            }
            "excitation_duration_s" => {
                fields.duration_s = Some(fsio::parse_f64(value, path, line)?)
            }
            "seed" => fields.seed = Some(fsio::parse_u64(value, path, line)?),
            "cycle_label" => fields.cycle_label = Some(value.to_string()),
            other => fields.extra.push((other.to_string(), value.to_string())),
        }
    }
    if !format_seen {
        return Err(HarnessError::Parse {
            path: path.to_string(),
            line: 0,
            message: format!("missing required key format (= {RECORDING_FORMAT})"),
        });
    }
    Ok(fields)
}

fn require<T>(field: Option<T>, name: &str, path: &str) -> Result<T> {
    field.ok_or_else(|| HarnessError::Parse {
        path: path.to_string(),
        line: 0,
        message: format!("missing required key {name}"),
    })
}

/// Reads a `<stem>.meta` / `<stem>.csv` pair back into a record plus its
/// provenance.
pub fn load_recording(path: &Path) -> Result<(TimeSeriesRecord, RecordingMeta)> {
    let meta_name = path.display().to_string();
    let fields = parse_meta(&fsio::read_to_string(path)?, &meta_name)?;

    let sample_rate_hz = require(fields.sample_rate_hz, "sample_rate_hz", &meta_name)?;
    let actuator_id = require(fields.actuator_id, "actuator_id", &meta_name)?;
    let declared = require(fields.transducers, "transducers", &meta_name)?;
    let excitation = ExcitationConfig {
        kind: require(fields.kind, "excitation_kind", &meta_name)?,
        band_low_hz: require(fields.band_low_hz, "excitation_band_low_hz", &meta_name)?,
        band_high_hz: require(
            fields.band_high_hz,
            "excitation_band_high_hz",
            &meta_name,
        )?,
        amplitude: require(fields.amplitude, "excitation_amplitude", &meta_name)?,
        duration_s: require(fields.duration_s, "excitation_duration_s", &meta_name)?,
        sample_rate_hz,
    };
    let seed = require(fields.seed, "seed", &meta_name)?;

    let table_path = samples_path(path);
    let table_name = table_path.display().to_string();
    let table = fsio::read_to_string(&table_path)?;
    let mut lines = table.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| HarnessError::Parse {
        path: table_name.clone(),
        line: 0,
        message: "empty sample table".into(),
    })?;
    let mut columns = header.split(',');
    if columns.next() != Some("t") || columns.next() != Some("excitation") {
        return Err(HarnessError::Parse {
            path: table_name.clone(),
            line: 1,
            message: format!("header must start with `t,excitation`, found {header:?}"),
        });
    }
    let mut channel_ids = Vec::new();
    for column in columns {
        let id = column.strip_prefix("ch").ok_or_else(|| HarnessError::Parse {
            path: table_name.clone(),
            line: 1,
            message: format!("expected a ch<id> column, found {column:?}"),
        })?;
        channel_ids.push(TransducerId(fsio::parse_u32(id, &table_name, 1)?));
    }
    let mut expected = declared.clone();
    expected.sort();
    let mut sorted = channel_ids.clone();
    sorted.sort();
    if sorted != expected {
        return Err(HarnessError::Parse {
            path: table_name.clone(),
            line: 1,
            message: format!(
                "channel columns {channel_ids:?} do not match the declared \
                 transducers {declared:?}"
            ),
        });
    }

    let mut excitation_samples = Vec::new();
    let mut responses: BTreeMap<TransducerId, Vec<f64>> =
        channel_ids.iter().map(|&id| (id, Vec::new())).collect();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 + channel_ids.len() {
            return Err(HarnessError::Parse {
                path: table_name.clone(),
                line,
                message: format!(
                    "ragged row: expected {} columns, found {}",
                    2 + channel_ids.len(),
                    cells.len()
                ),
            });
        }
        excitation_samples.push(fsio::parse_f64(cells[1], &table_name, line)?);
        for (k, &id) in channel_ids.iter().enumerate() {
            let v = fsio::parse_f64(cells[2 + k], &table_name, line)?;
            responses.get_mut(&id).expect("channel preallocated").push(v);
        }
    }

    let record = TimeSeriesRecord {
        actuator_id,
        sample_rate_hz,
        excitation: excitation_samples,
        responses,
    };
    record.validate().map_err(HarnessError::Core)?;
    let meta = RecordingMeta {
        excitation,
        seed,
        cycle_label: fields.cycle_label,
        extra: fields.extra,
    };
    Ok((record, meta))
}
