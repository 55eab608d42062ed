//! Declarative interrogation campaigns.
//!
//! A scenario bundles everything one deterministic run needs: the chain
//! model and its instrumentation, the excitation protocol, spectral
//! estimation settings, reference baselines (healthy or deliberately
//! damaged), and a list of measurement cases that each score against a named
//! baseline. Every random draw descends from the master seed, so the same
//! configuration always yields the same report, byte for byte.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use adi_core::baseline::{accumulate_baseline, Baseline, SignatureSet, StdFloorPolicy};
use adi_core::interrogation::{
    detect, interrogate_cycle, localize_weighted, DEFAULT_NULL_LEVEL, DEFAULT_THRESHOLD,
    DEFAULT_WEIGHT_EXPONENT, DEFAULT_WINDOW_BINS,
};
use adi_core::seeds::derive_seed;
use adi_core::spectral::{ExcitationConfig, ExcitationKind, SpectralParams, WindowKind};
use adi_core::structsim::{apply_damage, run_cycle, DamageSpec, StructureModel};
use adi_core::{AdiError, Band, TransducerId};

use crate::error::{HarnessError, Result};
use crate::report::{CaseRow, DiagnosisReport};

/// The simulator accepts tiny chains for unit work, but a scenario is meant
/// to resemble an instrumented structure: enough nodes that transducer
/// patches and damage sites are distinguishable.
pub const MIN_SCENARIO_NODES: usize = 8;

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_window_bins() -> usize {
    DEFAULT_WINDOW_BINS
}

fn default_null_level() -> f64 {
    DEFAULT_NULL_LEVEL
}

fn default_weight_exponent() -> f64 {
    DEFAULT_WEIGHT_EXPONENT
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Root of the seed tree; every cycle seed is derived from it.
    pub master_seed: u64,
    /// Measurement noise as a fraction of each channel's clean RMS.
    pub noise_std: f64,
    /// Interrogation cycles averaged into each baseline.
    pub baseline_cycles: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_window_bins")]
    pub window_bins: usize,
    #[serde(default = "default_null_level")]
    pub localization_null_level: f64,
    #[serde(default = "default_weight_exponent")]
    pub localization_weight_exponent: f64,
    pub model: ModelSection,
    pub excitation: ExcitationSection,
    pub spectral: SpectralSection,
    #[serde(default)]
    pub baselines: Vec<BaselineSection>,
    #[serde(default)]
    pub cases: Vec<CaseSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub nodes: usize,
    pub mass_kg: f64,
    pub stiffness_n_per_m: f64,
    pub rayleigh_alpha: f64,
    pub rayleigh_beta: f64,
    pub node_pitch_m: f64,
    pub transducers: Vec<TransducerPlacement>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransducerPlacement {
    pub id: u32,
    pub node: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExcitationKindName {
    LinearChirp,
    BandLimitedRandom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationSection {
    pub kind: ExcitationKindName,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub amplitude: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowName {
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub segment_length: usize,
    pub overlap_fraction: f64,
    pub window: WindowName,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageEntry {
    pub site_node: usize,
    pub severity: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub id: String,
    #[serde(default)]
    pub damage: Vec<DamageEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub label: String,
    /// Baseline the case is scored against; must name a `[[baselines]]` id.
    pub baseline: String,
    #[serde(default)]
    pub damage: Vec<DamageEntry>,
}

fn damage_specs(entries: &[DamageEntry]) -> Vec<DamageSpec> {
    entries
        .iter()
        .map(|d| DamageSpec {
            site_node: d.site_node,
            severity: d.severity,
        })
        .collect()
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| HarnessError::Parse {
                path: origin.to_string(),
                line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
                message: e.message().to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.nodes < MIN_SCENARIO_NODES {
            return Err(HarnessError::Config(format!(
                "a scenario chain needs at least {MIN_SCENARIO_NODES} nodes, got {}",
                self.model.nodes
            )));
        }
        if self.baseline_cycles < 3 {
            return Err(HarnessError::Config(format!(
                "baseline_cycles must be at least 3, got {}",
                self.baseline_cycles
            )));
        }
        let mut baseline_ids = BTreeSet::new();
        for b in &self.baselines {
            if !baseline_ids.insert(&b.id) {
                return Err(HarnessError::Config(format!(
                    "duplicate baseline id {:?}",
                    b.id
                )));
            }
        }
        let mut labels = BTreeSet::new();
        for case in &self.cases {
            if !labels.insert(&case.label) {
                return Err(HarnessError::Config(format!(
                    "duplicate case label {:?}",
                    case.label
                )));
            }
            if !baseline_ids.contains(&case.baseline) {
                return Err(HarnessError::Config(format!(
                    "case {:?} references unknown baseline {:?}",
                    case.label, case.baseline
                )));
            }
        }
        // Building the domain objects runs their own validation too.
        let model = self.model()?;
        let excitation = self.excitation();
        excitation.validate().map_err(HarnessError::Core)?;
        self.spectral()?
            .validate(excitation.sample_rate_hz)
            .map_err(HarnessError::Core)?;
        if !(self.localization_null_level.is_finite() && self.localization_null_level >= 0.0) {
            return Err(HarnessError::Config(format!(
                "localization_null_level must be finite and non-negative, got {}",
                self.localization_null_level
            )));
        }
        if !(self.localization_weight_exponent.is_finite()
            && self.localization_weight_exponent > 0.0)
        {
            return Err(HarnessError::Config(format!(
                "localization_weight_exponent must be finite and positive, got {}",
                self.localization_weight_exponent
            )));
        }
        for b in &self.baselines {
            apply_damage(&model, &damage_specs(&b.damage)).map_err(HarnessError::Core)?;
        }
        for case in &self.cases {
            apply_damage(&model, &damage_specs(&case.damage))
                .map_err(|e| HarnessError::for_case(&case.label, e.into()))?;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<StructureModel> {
        let placements: Vec<(TransducerId, usize)> = self
            .model
            .transducers
            .iter()
            .map(|t| (TransducerId(t.id), t.node))
            .collect();
        StructureModel::uniform_chain(
            self.model.nodes,
            self.model.mass_kg,
            self.model.stiffness_n_per_m,
            self.model.rayleigh_alpha,
            self.model.rayleigh_beta,
            self.model.node_pitch_m,
            &placements,
        )
        .map_err(HarnessError::Core)
    }

    pub fn excitation(&self) -> ExcitationConfig {
        ExcitationConfig {
            kind: match self.excitation.kind {
                ExcitationKindName::LinearChirp => ExcitationKind::LinearChirp,
                ExcitationKindName::BandLimitedRandom => ExcitationKind::BandLimitedRandom,
            },
            band_low_hz: self.excitation.band_low_hz,
            band_high_hz: self.excitation.band_high_hz,
            amplitude: self.excitation.amplitude,
            duration_s: self.excitation.duration_s,
            sample_rate_hz: self.excitation.sample_rate_hz,
        }
    }

    pub fn spectral(&self) -> Result<SpectralParams> {
        Ok(SpectralParams {
            segment_length: self.spectral.segment_length,
            overlap_fraction: self.spectral.overlap_fraction,
            window: match self.spectral.window {
                WindowName::Hann => WindowKind::Hann,
                WindowName::Rectangular => WindowKind::Rectangular,
            },
            band: Band::new(self.spectral.band_low_hz, self.spectral.band_high_hz)
                .map_err(HarnessError::Core)?,
        })
    }

    pub fn transducer_ids(&self) -> Vec<TransducerId> {
        let mut ids: Vec<TransducerId> = self
            .model
            .transducers
            .iter()
            .map(|t| TransducerId(t.id))
            .collect();
        ids.sort();
        ids
    }

    /// Seed for cycle `index` of the named baseline.
    pub fn baseline_cycle_seed(&self, baseline_id: &str, index: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &format!("baseline:{baseline_id}"),
            index as u64,
        )
    }

    /// Seed for the named case's measurement cycle.
    pub fn case_seed(&self, label: &str) -> u64 {
        derive_seed(self.master_seed, &format!("case:{label}"), 0)
    }
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// The stock campaign: a 64-node chain with four transducers, two healthy
/// cases, an escalating single-site series, compound damage at a second
/// site, and the same compound cases scored against a reference that already
/// contains the first site's damage, so only the new damage registers.
impl Default for ScenarioConfig {
    fn default() -> Self {
        let site1 = 26;
        let site2 = 34;
        let dmg = |site_node: usize, severity: f64| DamageEntry {
            site_node,
            severity,
        };
        let case = |label: &str, baseline: &str, damage: Vec<DamageEntry>| CaseSection {
            label: label.to_string(),
            baseline: baseline.to_string(),
            damage,
        };
        ScenarioConfig {
            master_seed: 42,
            noise_std: 0.05,
            baseline_cycles: 13,
            threshold: DEFAULT_THRESHOLD,
            window_bins: DEFAULT_WINDOW_BINS,
            localization_null_level: DEFAULT_NULL_LEVEL,
            localization_weight_exponent: DEFAULT_WEIGHT_EXPONENT,
            model: ModelSection {
                nodes: 64,
                mass_kg: 0.05,
                stiffness_n_per_m: 2.0e6,
                rayleigh_alpha: 100.0,
                rayleigh_beta: 6.0e-5,
                node_pitch_m: 0.02,
                transducers: [(1, 24), (2, 32), (3, 40), (4, 48)]
                    .into_iter()
                    .map(|(id, node)| TransducerPlacement { id, node })
                    .collect(),
            },
            excitation: ExcitationSection {
                kind: ExcitationKindName::LinearChirp,
                band_low_hz: 350.0,
                band_high_hz: 1300.0,
                amplitude: 1.0,
                duration_s: 2.0,
                sample_rate_hz: 4096.0,
            },
            spectral: SpectralSection {
                segment_length: 2048,
                overlap_fraction: 0.5,
                window: WindowName::Hann,
                band_low_hz: 400.0,
                band_high_hz: 1200.0,
            },
            baselines: vec![
                BaselineSection {
                    id: "pristine".into(),
                    damage: vec![],
                },
                BaselineSection {
                    id: "accepted-damage".into(),
                    damage: vec![dmg(site1, 0.30)],
                },
            ],
            cases: vec![
                case("case-01", "pristine", vec![]),
                case("case-02", "pristine", vec![]),
                case("case-03", "pristine", vec![dmg(site1, 0.05)]),
                case("case-04", "pristine", vec![dmg(site1, 0.15)]),
                case("case-05", "pristine", vec![dmg(site1, 0.30)]),
                case(
                    "case-06",
                    "pristine",
                    vec![dmg(site1, 0.30), dmg(site2, 0.05)],
                ),
                case(
                    "case-07",
                    "pristine",
                    vec![dmg(site1, 0.30), dmg(site2, 0.15)],
                ),
                case(
                    "case-08",
                    "pristine",
                    vec![dmg(site1, 0.30), dmg(site2, 0.30)],
                ),
                case(
                    "case-09",
                    "accepted-damage",
                    vec![dmg(site1, 0.30), dmg(site2, 0.05)],
                ),
                case(
                    "case-10",
                    "accepted-damage",
                    vec![dmg(site1, 0.30), dmg(site2, 0.15)],
                ),
                case(
                    "case-11",
                    "accepted-damage",
                    vec![dmg(site1, 0.30), dmg(site2, 0.30)],
                ),
            ],
        }
    }
}

/// Builds every baseline declared by the scenario. Exposed separately so the
/// CLI can persist them without rerunning the cases.
pub fn build_baselines(config: &ScenarioConfig) -> Result<BTreeMap<String, Baseline>> {
    let model = config.model()?;
    let excitation = config.excitation();
    let params = config.spectral()?;
    let ids = config.transducer_ids();
    let mut baselines = BTreeMap::new();
    for section in &config.baselines {
        let reference =
            apply_damage(&model, &damage_specs(&section.damage)).map_err(HarnessError::Core)?;
        let sets: Vec<SignatureSet> = (0..config.baseline_cycles)
            .map(|i| {
                run_cycle(
                    &reference,
                    &ids,
                    &excitation,
                    &params,
                    config.noise_std,
                    config.baseline_cycle_seed(&section.id, i),
                    &format!("{}-{i}", section.id),
                )
                .map_err(HarnessError::Core)
            })
            .collect::<Result<_>>()?;
        let baseline = accumulate_baseline(&sets, &StdFloorPolicy::default())
            .map_err(HarnessError::Core)?;
        baselines.insert(section.id.clone(), baseline);
    }
    Ok(baselines)
}

/// Runs the whole campaign: builds each referenced baseline, measures each
/// case, scores it, and assembles the decided report. Rows are merged in
/// case-label order, so the outcome does not depend on execution order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<DiagnosisReport> {
    config.validate()?;
    let model = config.model()?;
    let excitation = config.excitation();
    let params = config.spectral()?;
    let ids = config.transducer_ids();
    let positions = model.transducer_positions();
    let baselines = build_baselines(config)?;

    let mut rows = Vec::with_capacity(config.cases.len());
    for case in &config.cases {
        let attach = |e: HarnessError| HarnessError::for_case(&case.label, e);
        let damaged = apply_damage(&model, &damage_specs(&case.damage))
            .map_err(|e| attach(e.into()))?;
        let set = run_cycle(
            &damaged,
            &ids,
            &excitation,
            &params,
            config.noise_std,
            config.case_seed(&case.label),
            &case.label,
        )
        .map_err(|e| attach(e.into()))?;
        let baseline = &baselines[&case.baseline];
        let div = interrogate_cycle(
            &set,
            baseline,
            config.window_bins,
            &params.band,
            &case.baseline,
        )
        .map_err(|e| attach(e.into()))?;
        let diag = detect(&div, config.threshold).map_err(|e| attach(e.into()))?;
        let estimate = if diag.detected {
            match localize_weighted(
                &div,
                &positions,
                config.localization_null_level,
                config.localization_weight_exponent,
            ) {
                Ok(x) => Some(x),
                // Too few transducers above the null level to triangulate;
                // the argmax column still carries the coarse answer.
                Err(AdiError::LocalizationUndefined) => None,
                Err(e) => return Err(attach(e.into())),
            }
        } else {
            None
        };
        rows.push(CaseRow {
            label: case.label.clone(),
            baseline_id: case.baseline.clone(),
            di: div.di,
            detected: Some(diag.detected),
            location_argmax: diag.location_argmax,
            location_estimate_m: estimate,
        });
    }
    rows.sort_by(|a, b| a.label.cmp(&b.label));

    Ok(DiagnosisReport {
        threshold: Some(config.threshold),
        transducers: ids,
        rows,
    })
}
