//! Command-line front end for the interrogation pipeline.
//!
//! Subcommands mirror the campaign stages: `simulate` produces recordings,
//! `baseline` folds reference recordings into a baseline file, `interrogate`
//! scores monitoring recordings against a baseline, `report` renders or
//! re-decides a diagnosis table, `export-deviation` emits plot-ready
//! deviation spectra, and `roc` sweeps detection thresholds. Exit codes:
//! 0 success, 1 I/O, 2 configuration, 3 data, 4 numerical trouble.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use adi_core::baseline::{accumulate_baseline, SignatureSet, StdFloorPolicy};
use adi_core::interrogation::{
    detect, interrogate_cycle, DEFAULT_THRESHOLD, DEFAULT_WINDOW_BINS,
};
use adi_core::spectral::{estimate_transfer_function, SpectralParams, TimeSeriesRecord};
use adi_core::structsim::{apply_damage, cycle_records, harmonize_grids};
use adi_core::{Band, TransducerId};

use adi_harness::baseline_file::{load_baseline, save_baseline};
use adi_harness::recording::{load_recording, save_recording, RecordingMeta};
use adi_harness::report::{load_report, save_report, CaseRow, DiagnosisReport};
use adi_harness::scenario::ScenarioConfig;
use adi_harness::{export, fsio, roc, HarnessError};

#[derive(Parser)]
#[command(
    name = "adi",
    about = "Active damage interrogation: simulate, baseline, interrogate, report"
)]
struct Cli {
    /// Master seed override for scenario-driven commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenario configuration file (TOML); omitted means the built-in
    /// default campaign.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every baseline and case cycle of the scenario and write the
    /// recordings to a directory (--out, default `recordings`).
    Simulate,
    /// Estimate signatures from reference recordings and accumulate them
    /// into a baseline file (--out required).
    Baseline(BaselineArgs),
    /// Score monitoring recordings against a baseline and print the
    /// diagnosis table; --out also writes the structured report.
    Interrogate(InterrogateArgs),
    /// Render a report or prepared index table, re-deriving the decision
    /// columns at the given threshold.
    Report(ReportArgs),
    /// Write the deviation spectrum of one pair from one monitoring cycle.
    ExportDeviation(ExportArgs),
    /// Calibrate a detection threshold from healthy and damaged index
    /// samples and write the sweep table.
    Roc(RocArgs),
}

#[derive(Args)]
struct BaselineArgs {
    /// Metadata files of the reference recordings, grouped by cycle label.
    #[arg(required = true)]
    recordings: Vec<PathBuf>,
}

#[derive(Args)]
struct InterrogateArgs {
    /// Baseline file to score against.
    #[arg(long)]
    baseline: PathBuf,
    /// Metadata files of the monitoring recordings; each cycle label
    /// becomes one report row.
    #[arg(required = true)]
    recordings: Vec<PathBuf>,
    /// Detection threshold in baseline standard deviations.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Width of the centered smoothing window, in bins (odd).
    #[arg(long, default_value_t = DEFAULT_WINDOW_BINS)]
    window_bins: usize,
    /// Analysis band as `low:high` in Hz; defaults to the scenario band.
    #[arg(long)]
    band: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report or prepared index table to render.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    baseline: PathBuf,
    /// Metadata files of exactly one monitoring cycle.
    #[arg(required = true)]
    recordings: Vec<PathBuf>,
    /// Actuator id of the exported pair.
    #[arg(long)]
    actuator: u32,
    /// Sensor id of the exported pair.
    #[arg(long)]
    sensor: u32,
    #[arg(long, default_value_t = DEFAULT_WINDOW_BINS)]
    window_bins: usize,
}

#[derive(Args)]
struct RocArgs {
    /// Text file of healthy damage indices, one per line.
    #[arg(long)]
    healthy: PathBuf,
    /// Text file of damaged damage indices, one per line.
    #[arg(long)]
    damaged: PathBuf,
    /// Cost of a false alarm.
    #[arg(long, default_value_t = 1.0)]
    fa_cost: f64,
    /// Cost of a missed detection.
    #[arg(long, default_value_t = 1.0)]
    miss_cost: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> adi_harness::Result<()> {
    let config = load_config(&cli)?;
    match &cli.command {
        Command::Simulate => simulate(&cli, &config),
        Command::Baseline(args) => build_baseline(&cli, &config, args),
        Command::Interrogate(args) => interrogate(&cli, &config, args),
        Command::Report(args) => render_report(&cli, args),
        Command::ExportDeviation(args) => export_deviation(&cli, &config, args),
        Command::Roc(args) => roc_cmd(&cli, args),
    }
}

fn load_config(cli: &Cli) -> adi_harness::Result<ScenarioConfig> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::from_toml(
            &fsio::read_to_string(path)?,
            &path.display().to_string(),
        )?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn simulate(cli: &Cli, config: &ScenarioConfig) -> adi_harness::Result<()> {
    config.validate()?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("recordings"));
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let model = config.model()?;
    let excitation = config.excitation();
    let ids = config.transducer_ids();
    let mut written = 0usize;

    for section in &config.baselines {
        let specs: Vec<_> = section
            .damage
            .iter()
            .map(|d| adi_core::structsim::DamageSpec {
                site_node: d.site_node,
                severity: d.severity,
            })
            .collect();
        let reference = apply_damage(&model, &specs).map_err(HarnessError::Core)?;
        for i in 0..config.baseline_cycles {
            let seed = config.baseline_cycle_seed(&section.id, i);
            let records = cycle_records(&reference, &ids, &excitation, config.noise_std, seed)
                .map_err(HarnessError::Core)?;
            written += write_cycle(
                &dir,
                &records,
                &excitation,
                seed,
                &format!("{}-{i}", section.id),
            )?;
        }
    }
    for case in &config.cases {
        let specs: Vec<_> = case
            .damage
            .iter()
            .map(|d| adi_core::structsim::DamageSpec {
                site_node: d.site_node,
                severity: d.severity,
            })
            .collect();
        let damaged = apply_damage(&model, &specs)
            .map_err(|e| HarnessError::for_case(&case.label, e.into()))?;
        let seed = config.case_seed(&case.label);
        let records = cycle_records(&damaged, &ids, &excitation, config.noise_std, seed)
            .map_err(|e| HarnessError::for_case(&case.label, e.into()))?;
        written += write_cycle(&dir, &records, &excitation, seed, &case.label)?;
    }
    println!("wrote {written} recordings to {}", dir.display());
    Ok(())
}

fn write_cycle(
    dir: &Path,
    records: &[TimeSeriesRecord],
    excitation: &adi_core::spectral::ExcitationConfig,
    seed: u64,
    label: &str,
) -> adi_harness::Result<usize> {
    for record in records {
        let meta = RecordingMeta {
            excitation: excitation.clone(),
            seed,
            cycle_label: Some(label.to_string()),
            extra: Vec::new(),
        };
        let path = dir.join(format!("{label}-act{}.meta", record.actuator_id));
        save_recording(record, &meta, &path)?;
    }
    Ok(records.len())
}

/// Loads recordings and groups them into cycles by label, sorted by
/// actuator id within each cycle.
fn load_cycles(
    paths: &[PathBuf],
) -> adi_harness::Result<BTreeMap<String, Vec<(TimeSeriesRecord, RecordingMeta)>>> {
    let mut cycles: BTreeMap<String, Vec<(TimeSeriesRecord, RecordingMeta)>> = BTreeMap::new();
    for path in paths {
        let (record, meta) = load_recording(path)?;
        let label = meta.cycle_label.clone().ok_or_else(|| {
            HarnessError::Config(format!(
                "{} has no cycle_label; cannot group it into a cycle",
                path.display()
            ))
        })?;
        cycles.entry(label).or_default().push((record, meta));
    }
    for group in cycles.values_mut() {
        group.sort_by_key(|(record, _)| record.actuator_id);
    }
    Ok(cycles)
}

/// Estimates the round-robin signature set of one recorded cycle.
fn signature_set(
    label: &str,
    group: &[(TimeSeriesRecord, RecordingMeta)],
    params: &SpectralParams,
) -> adi_harness::Result<SignatureSet> {
    let fs = group[0].0.sample_rate_hz;
    for (record, _) in group {
        if record.sample_rate_hz != fs {
            return Err(HarnessError::Config(format!(
                "cycle {label:?} mixes sample rates {} and {} Hz",
                fs, record.sample_rate_hz
            )));
        }
    }
    params.validate(fs).map_err(HarnessError::Core)?;
    let ids: Vec<TransducerId> = group.iter().map(|(r, _)| r.actuator_id).collect();
    let mut tfs = Vec::with_capacity(ids.len() * (ids.len() - 1));
    for (record, _) in group {
        for &sensor in &ids {
            if sensor != record.actuator_id {
                tfs.push(
                    estimate_transfer_function(record, sensor, params)
                        .map_err(HarnessError::Core)?,
                );
            }
        }
    }
    let tfs = harmonize_grids(tfs).map_err(HarnessError::Core)?;
    SignatureSet::new(label, tfs).map_err(HarnessError::Core)
}

fn build_baseline(
    cli: &Cli,
    config: &ScenarioConfig,
    args: &BaselineArgs,
) -> adi_harness::Result<()> {
    let out = cli.out.clone().ok_or_else(|| {
        HarnessError::Config("baseline needs --out for the baseline file".into())
    })?;
    let params = config.spectral()?;
    let cycles = load_cycles(&args.recordings)?;
    let mut sets = Vec::with_capacity(cycles.len());
    for (label, group) in &cycles {
        sets.push(signature_set(label, group, &params)?);
    }
    let baseline =
        accumulate_baseline(&sets, &StdFloorPolicy::default()).map_err(HarnessError::Core)?;
    save_baseline(&baseline, &out)?;
    println!(
        "accumulated {} cycles into {}",
        sets.len(),
        out.display()
    );
    Ok(())
}

fn parse_band(text: &str) -> adi_harness::Result<Band> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| {
        HarnessError::Config(format!("band must be `low:high` in Hz, got {text:?}"))
    })?;
    let parse = |s: &str| {
        s.trim().parse::<f64>().map_err(|_| {
            HarnessError::Config(format!("band bound {s:?} is not a number"))
        })
    };
    Band::new(parse(lo)?, parse(hi)?).map_err(HarnessError::Core)
}

fn interrogate(
    cli: &Cli,
    config: &ScenarioConfig,
    args: &InterrogateArgs,
) -> adi_harness::Result<()> {
    let baseline = load_baseline(&args.baseline)?;
    let params = config.spectral()?;
    let band = match &args.band {
        Some(text) => parse_band(text)?,
        None => params.band,
    };
    let baseline_id = args
        .baseline
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| args.baseline.display().to_string());

    let cycles = load_cycles(&args.recordings)?;
    let mut rows = Vec::with_capacity(cycles.len());
    for (label, group) in &cycles {
        let attach = |e: HarnessError| HarnessError::for_case(label, e);
        let set = signature_set(label, group, &params).map_err(attach)?;
        let div = interrogate_cycle(&set, &baseline, args.window_bins, &band, &baseline_id)
            .map_err(|e| attach(e.into()))?;
        let diag = detect(&div, args.threshold).map_err(|e| attach(e.into()))?;
        rows.push(CaseRow {
            label: label.clone(),
            baseline_id: baseline_id.clone(),
            di: div.di,
            detected: Some(diag.detected),
            location_argmax: diag.location_argmax,
            location_estimate_m: None,
        });
    }
    let report = DiagnosisReport {
        threshold: Some(args.threshold),
        transducers: baseline.transducer_ids(),
        rows,
    };
    print!("{}", report.render_table());
    if let Some(out) = &cli.out {
        save_report(&report, out)?;
    }
    Ok(())
}

fn render_report(cli: &Cli, args: &ReportArgs) -> adi_harness::Result<()> {
    let mut report = load_report(&args.input)?;
    report.decide(args.threshold)?;
    print!("{}", report.render_table());
    if let Some(out) = &cli.out {
        save_report(&report, out)?;
    }
    Ok(())
}

fn export_deviation(
    cli: &Cli,
    config: &ScenarioConfig,
    args: &ExportArgs,
) -> adi_harness::Result<()> {
    let baseline = load_baseline(&args.baseline)?;
    let params = config.spectral()?;
    let cycles = load_cycles(&args.recordings)?;
    if cycles.len() != 1 {
        return Err(HarnessError::Config(format!(
            "export expects recordings from exactly one cycle, found {} labels",
            cycles.len()
        )));
    }
    let (label, group) = cycles.iter().next().expect("one cycle present");
    let set = signature_set(label, group, &params)?;
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("deviation.csv"));
    export::export_deviation(
        &baseline,
        &set,
        (TransducerId(args.actuator), TransducerId(args.sensor)),
        args.window_bins,
        &out,
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

fn roc_cmd(cli: &Cli, args: &RocArgs) -> adi_harness::Result<()> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("roc.csv"));
    let load_samples = |path: &Path| -> adi_harness::Result<Vec<f64>> {
        let name = path.display().to_string();
        let mut values = Vec::new();
        for (idx, line) in fsio::read_to_string(path)?.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            values.push(fsio::parse_f64(trimmed, &name, idx + 1)?);
        }
        Ok(values)
    };
    let healthy = load_samples(&args.healthy)?;
    let damaged = load_samples(&args.damaged)?;
    let calibration = roc::roc_sweep(&healthy, &damaged, args.fa_cost, args.miss_cost, &out)?;
    let chosen = calibration
        .table
        .iter()
        .find(|p| p.threshold == calibration.threshold);
    match chosen {
        Some(p) => println!(
            "chosen threshold {} (pd {}, far {})",
            calibration.threshold, p.pd, p.far
        ),
        None => println!("chosen threshold {}", calibration.threshold),
    }
    println!("wrote {}", out.display());
    Ok(())
}
