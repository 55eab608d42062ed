//! Diagnosis reports: the tabulated outcome of an interrogation campaign.
//!
//! A report row carries one case's damage indices plus the detection and
//! localization decisions. Rows can also arrive undecided, as a prepared
//! index table; [`DiagnosisReport::decide`] then applies the detector so the
//! decision columns are always derived from the indices by the same code
//! path the live pipeline uses. Rendering matches the familiar tabulated
//! layout: two-decimal indices, yes/no detection, a transducer number or a
//! dash in the location column.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use adi_core::interrogation::{detect, DamageIndexVector};
use adi_core::TransducerId;

use crate::error::{HarnessError, Result};
use crate::fsio;

pub const REPORT_FORMAT: &str = "adi-report";
pub const REPORT_VERSION: u32 = 1;

/// One case's indices and, once decided, its diagnosis.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub label: String,
    pub baseline_id: String,
    pub di: BTreeMap<TransducerId, f64>,
    /// Absent until a threshold has been applied.
    pub detected: Option<bool>,
    /// Transducer with the largest index; populated only on detection.
    pub location_argmax: Option<TransducerId>,
    /// Weighted position estimate in meters, when geometry was available.
    pub location_estimate_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisReport {
    /// Threshold the decisions were made at; absent for prepared tables.
    pub threshold: Option<f64>,
    /// Column order for rendering and persistence.
    pub transducers: Vec<TransducerId>,
    pub rows: Vec<CaseRow>,
}

impl DiagnosisReport {
    /// Checks internal consistency: unique labels, and every row scoring
    /// exactly the declared transducer set.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for row in &self.rows {
            if !seen.insert(&row.label) {
                return Err(HarnessError::Config(format!(
                    "duplicate case label {:?}",
                    row.label
                )));
            }
            let ids: Vec<TransducerId> = row.di.keys().copied().collect();
            if ids != self.transducers {
                return Err(HarnessError::Config(format!(
                    "case {:?} scores transducers {ids:?}, expected {:?}",
                    row.label, self.transducers
                )));
            }
        }
        Ok(())
    }

    /// Applies the detector to every row, overwriting any previous decision.
    /// The argmax location is populated exactly when the detector fires,
    /// through the same routine the live pipeline uses.
    pub fn decide(&mut self, threshold: f64) -> Result<()> {
        for row in &mut self.rows {
            let div = DamageIndexVector {
                di: row.di.clone(),
                per_pair_cads: Vec::new(),
                baseline_id: row.baseline_id.clone(),
                timestamp: None,
            };
            let diag = detect(&div, threshold)
                .map_err(|e| HarnessError::for_case(&row.label, e.into()))?;
            row.detected = Some(diag.detected);
            row.location_argmax = diag.location_argmax;
        }
        self.threshold = Some(threshold);
        Ok(())
    }

    /// Renders the aligned text table. Indices print with two decimals; the
    /// location columns print a dash when empty.
    pub fn render_table(&self) -> String {
        let mut header: Vec<String> = vec!["Case".into(), "Baseline".into()];
        for id in &self.transducers {
            header.push(format!("DI {id}"));
        }
        header.push("Detected".into());
        header.push("Location".into());
        header.push("Estimate (m)".into());

        let mut body: Vec<Vec<String>> = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut cells = vec![row.label.clone(), row.baseline_id.clone()];
            for id in &self.transducers {
                cells.push(format!("{:.2}", row.di[id]));
            }
            cells.push(match row.detected {
                Some(true) => "yes".into(),
                Some(false) => "no".into(),
                None => "-".into(),
            });
            cells.push(
                row.location_argmax
                    .map(|id| id.to_string())
                    .unwrap_or_else(|| "-".into()),
            );
            cells.push(
                row.location_estimate_m
                    .map(|x| format!("{x:.3}"))
                    .unwrap_or_else(|| "-".into()),
            );
            body.push(cells);
        }

        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for cells in &body {
            for (w, cell) in widths.iter_mut().zip(cells) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let write_row = |out: &mut String, cells: &[String]| {
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                let _ = write!(out, "{cell:<w$}", w = *w);
            }
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        };
        write_row(&mut out, &header);
        for cells in &body {
            write_row(&mut out, cells);
        }
        if let Some(t) = self.threshold {
            let _ = writeln!(out, "threshold: {t}");
        }
        out
    }
}

pub fn save_report(report: &DiagnosisReport, path: &Path) -> Result<()> {
    report.validate()?;
    let mut text = String::new();
    let _ = writeln!(text, "format = {REPORT_FORMAT}");
    let _ = writeln!(text, "version = {REPORT_VERSION}");
    if let Some(t) = report.threshold {
        let _ = writeln!(text, "threshold = {}", fsio::fmt_f64(t));
    }
    let ids: Vec<String> = report.transducers.iter().map(|id| id.to_string()).collect();
    let _ = writeln!(text, "transducers = {}", ids.join(","));
    let _ = writeln!(text, "cases = {}", report.rows.len());
    for row in &report.rows {
        text.push('\n');
        let _ = writeln!(text, "[case {}]", row.label);
        let _ = writeln!(text, "baseline = {}", row.baseline_id);
        for (id, di) in &row.di {
            let _ = writeln!(text, "di {id} = {}", fsio::fmt_f64(*di));
        }
        if let Some(flag) = row.detected {
            let _ = writeln!(text, "detected = {}", if flag { "yes" } else { "no" });
        }
        if let Some(id) = row.location_argmax {
            let _ = writeln!(text, "location_argmax = {id}");
        }
        if let Some(x) = row.location_estimate_m {
            let _ = writeln!(text, "location_estimate_m = {}", fsio::fmt_f64(x));
        }
    }
    fsio::write_atomic(path, &text)
}

pub fn load_report(path: &Path) -> Result<DiagnosisReport> {
    let name = path.display().to_string();
    let text = fsio::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();

    let mut threshold = None;
    let mut transducers: Option<Vec<TransducerId>> = None;
    let mut declared_cases = None;
    let mut format_seen = false;
    while let Some(&(line, content)) = lines.peek() {
        if content.starts_with('[') {
            break;
        }
        lines.next();
        let (key, value) = fsio::split_key_value(content, &name, line)?;
        match key {
            "format" => {
                if value != REPORT_FORMAT {
                    return Err(HarnessError::Parse {
                        path: name.clone(),
                        line,
                        message: format!("expected format {REPORT_FORMAT}, found {value:?}"),
                    });
                }
                format_seen = true;
            }
            "version" => {
                let v = fsio::parse_u32(value, &name, line)?;
                if v != REPORT_VERSION {
                    return Err(HarnessError::UnsupportedVersion {
                        path: name.clone(),
                        what: "report",
                        found: value.to_string(),
                        expected: REPORT_VERSION,
                    });
                }
            }
            "threshold" => threshold = Some(fsio::parse_f64(value, &name, line)?),
            "transducers" => {
                let mut ids = Vec::new();
                for token in value.split(',') {
                    ids.push(TransducerId(fsio::parse_u32(token, &name, line)?));
                }
                transducers = Some(ids);
            }
            "cases" => declared_cases = Some(fsio::parse_usize(value, &name, line)?),
            other => {
                return Err(HarnessError::Parse {
                    path: name.clone(),
                    line,
                    message: format!("unknown report key {other:?}"),
                })
            }
        }
    }
    if !format_seen {
        return Err(HarnessError::Parse {
            path: name.clone(),
            line: 0,
            message: format!("missing required key format (= {REPORT_FORMAT})"),
        });
    }
    let transducers = transducers.ok_or_else(|| HarnessError::Parse {
        path: name.clone(),
        line: 0,
        message: "missing required key transducers".into(),
    })?;
    let declared_cases = declared_cases.ok_or_else(|| HarnessError::Parse {
        path: name.clone(),
        line: 0,
        message: "missing required key cases".into(),
    })?;

    let mut rows = Vec::with_capacity(declared_cases);
    while let Some((line, header)) = lines.next() {
        let label = header
            .strip_prefix("[case ")
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| HarnessError::Parse {
                path: name.clone(),
                line,
                message: format!("expected a [case <label>] header, found {header:?}"),
            })?
            .to_string();
        let mut row = CaseRow {
            label,
            baseline_id: String::new(),
            di: BTreeMap::new(),
            detected: None,
            location_argmax: None,
            location_estimate_m: None,
        };
        let mut baseline_seen = false;
        while let Some(&(line, content)) = lines.peek() {
            if content.starts_with('[') {
                break;
            }
            lines.next();
            let (key, value) = fsio::split_key_value(content, &name, line)?;
            if let Some(id) = key.strip_prefix("di ") {
                let id = TransducerId(fsio::parse_u32(id, &name, line)?);
                row.di.insert(id, fsio::parse_f64(value, &name, line)?);
                continue;
            }
            match key {
                "baseline" => {
                    row.baseline_id = value.to_string();
                    baseline_seen = true;
                }
                "detected" => {
                    row.detected = Some(match value {
                        "yes" => true,
                        "no" => false,
                        other => {
                            return Err(HarnessError::Parse {
                                path: name.clone(),
                                line,
                                message: format!("detected must be yes or no, found {other:?}"),
                            })
                        }
                    })
                }
                "location_argmax" => {
                    row.location_argmax =
                        Some(TransducerId(fsio::parse_u32(value, &name, line)?))
                }
                "location_estimate_m" => {
                    row.location_estimate_m = Some(fsio::parse_f64(value, &name, line)?)
                }
                other => {
                    return Err(HarnessError::Parse {
                        path: name.clone(),
                        line,
                        message: format!("unknown case key {other:?}"),
                    })
                }
            }
        }
        if !baseline_seen {
            return Err(HarnessError::Parse {
                path: name.clone(),
                line,
                message: format!("case {:?} is missing its baseline id", row.label),
            });
        }
        rows.push(row);
    }
    if rows.len() != declared_cases {
        return Err(HarnessError::Parse {
            path: name.clone(),
            line: 0,
            message: format!(
                "truncated report: declared {declared_cases} cases, found {}",
                rows.len()
            ),
        });
    }

    let report = DiagnosisReport {
        threshold,
        transducers,
        rows,
    };
    report.validate().map_err(|e| match e {
        HarnessError::Config(message) => HarnessError::Parse {
            path: name.clone(),
            line: 0,
            message,
        },
        other => other,
    })?;
    Ok(report)
}
