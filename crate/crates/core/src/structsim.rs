//! Synthetic test structure: a grounded mass-spring chain.
//!
//! The chain stands in for an instrumented structure when no hardware is on
//! the bench. Node 0 hangs from a ground spring, consecutive nodes are
//! coupled by springs, and Rayleigh damping (C = alpha*M + beta*K) keeps the
//! response finite at resonance. Damage is a local stiffness knockdown of
//! the springs flanking a node. Because the stiffness matrix is tridiagonal,
//! exact frequency responses come from an O(n) pivoted solve per frequency,
//! which makes both closed-form spot checks and bulk Monte Carlo generation
//! cheap.
//!
//! Spring slots mirror the node layout: slot 0 is the ground spring at node
//! 0, slot i couples nodes i-1 and i. The top node has no spring above it.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::baseline::SignatureSet;
use crate::error::{AdiError, Result};
use crate::fft::{real_from_spectrum, spectrum_of_real};
use crate::seeds::derive_seed;
use crate::spectral::{
    estimate_transfer_function, generate_excitation, wrap_value, ExcitationConfig,
    SpectralParams, TimeSeriesRecord, TransferFunction,
};
use crate::types::TransducerId;

/// Lumped-parameter chain with a transducer at a subset of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureModel {
    masses_kg: Vec<f64>,
    stiffnesses_n_per_m: Vec<f64>,
    rayleigh_alpha: f64,
    rayleigh_beta: f64,
    node_pitch_m: f64,
    transducer_nodes: BTreeMap<TransducerId, usize>,
}

impl StructureModel {
    pub fn new(
        masses_kg: Vec<f64>,
        stiffnesses_n_per_m: Vec<f64>,
        rayleigh_alpha: f64,
        rayleigh_beta: f64,
        node_pitch_m: f64,
        transducer_nodes: BTreeMap<TransducerId, usize>,
    ) -> Result<Self> {
        let n = masses_kg.len();
        if n == 0 {
            return Err(AdiError::Config("a chain needs at least one node".into()));
        }
        if stiffnesses_n_per_m.len() != n {
            return Err(AdiError::Config(format!(
                "{} masses but {} spring slots; the chain carries one spring per node",
                n,
                stiffnesses_n_per_m.len()
            )));
        }
        for (i, &m) in masses_kg.iter().enumerate() {
            if !m.is_finite() || m <= 0.0 {
                return Err(AdiError::Config(format!(
                    "mass at node {i} must be positive and finite, got {m}"
                )));
            }
        }
        for (i, &k) in stiffnesses_n_per_m.iter().enumerate() {
            if !k.is_finite() || k <= 0.0 {
                return Err(AdiError::Config(format!(
                    "stiffness in slot {i} must be positive and finite, got {k}"
                )));
            }
        }
        for (name, v) in [
            ("rayleigh_alpha", rayleigh_alpha),
            ("rayleigh_beta", rayleigh_beta),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(AdiError::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !node_pitch_m.is_finite() || node_pitch_m <= 0.0 {
            return Err(AdiError::Config(format!(
                "node_pitch_m must be positive and finite, got {node_pitch_m}"
            )));
        }
        let mut seen_nodes = BTreeMap::new();
        for (&id, &node) in &transducer_nodes {
            if node >= n {
                return Err(AdiError::Config(format!(
                    "transducer {id} sits at node {node}, but the chain has {n} nodes"
                )));
            }
            if let Some(&other) = seen_nodes.get(&node) {
                return Err(AdiError::Config(format!(
                    "transducers {other} and {id} both sit at node {node}"
                )));
            }
            seen_nodes.insert(node, id);
        }
        Ok(Self {
            masses_kg,
            stiffnesses_n_per_m,
            rayleigh_alpha,
            rayleigh_beta,
            node_pitch_m,
            transducer_nodes,
        })
    }

    /// Chain with identical masses and springs at every node.
    pub fn uniform_chain(
        n_nodes: usize,
        mass_kg: f64,
        stiffness_n_per_m: f64,
        rayleigh_alpha: f64,
        rayleigh_beta: f64,
        node_pitch_m: f64,
        transducers: &[(TransducerId, usize)],
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(id, node) in transducers {
            if map.insert(id, node).is_some() {
                return Err(AdiError::Config(format!(
                    "transducer {id} is listed twice"
                )));
            }
        }
        Self::new(
            vec![mass_kg; n_nodes],
            vec![stiffness_n_per_m; n_nodes],
            rayleigh_alpha,
            rayleigh_beta,
            node_pitch_m,
            map,
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.masses_kg.len()
    }

    pub fn masses_kg(&self) -> &[f64] {
        &self.masses_kg
    }

    pub fn stiffnesses_n_per_m(&self) -> &[f64] {
        &self.stiffnesses_n_per_m
    }

    pub fn rayleigh_alpha(&self) -> f64 {
        self.rayleigh_alpha
    }

    pub fn rayleigh_beta(&self) -> f64 {
        self.rayleigh_beta
    }

    pub fn node_pitch_m(&self) -> f64 {
        self.node_pitch_m
    }

    pub fn transducer_nodes(&self) -> &BTreeMap<TransducerId, usize> {
        &self.transducer_nodes
    }

    pub fn transducer_at(&self, node: usize) -> Option<TransducerId> {
        self.transducer_nodes
            .iter()
            .find(|&(_, &n)| n == node)
            .map(|(&id, _)| id)
    }

    pub fn node_of(&self, id: TransducerId) -> Result<usize> {
        self.transducer_nodes
            .get(&id)
            .copied()
            .ok_or_else(|| AdiError::Data(format!("no transducer {id} on this structure")))
    }

    /// Position of a transducer along the chain axis, node index times pitch.
    pub fn transducer_position(&self, id: TransducerId) -> Result<f64> {
        Ok(self.node_of(id)? as f64 * self.node_pitch_m)
    }

    pub fn transducer_positions(&self) -> BTreeMap<TransducerId, f64> {
        self.transducer_nodes
            .iter()
            .map(|(&id, &node)| (id, node as f64 * self.node_pitch_m))
            .collect()
    }
}

/// Stiffness knockdown of the springs flanking one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamageSpec {
    pub site_node: usize,
    /// Fractional stiffness loss in [0, 1); the flanking springs keep
    /// (1 - severity) of their value.
    pub severity: f64,
}

/// Returns a copy of the model with each damage applied; the original is
/// untouched. Severity 0 is the identity, and applying two specs in one
/// call equals applying them in sequence.
pub fn apply_damage(model: &StructureModel, damage: &[DamageSpec]) -> Result<StructureModel> {
    let n = model.n_nodes();
    let mut stiffnesses = model.stiffnesses_n_per_m.clone();
    for spec in damage {
        if spec.site_node >= n {
            return Err(AdiError::Config(format!(
                "damage site {} is outside the {}-node chain",
                spec.site_node, n
            )));
        }
        if !spec.severity.is_finite() || !(0.0..1.0).contains(&spec.severity) {
            return Err(AdiError::Config(format!(
                "severity must lie in [0, 1), got {}",
                spec.severity
            )));
        }
        let keep = 1.0 - spec.severity;
        stiffnesses[spec.site_node] *= keep;
        if spec.site_node + 1 < n {
            stiffnesses[spec.site_node + 1] *= keep;
        }
    }
    let mut damaged = model.clone();
    damaged.stiffnesses_n_per_m = stiffnesses;
    Ok(damaged)
}

/// Direct frequency-domain solver for the chain.
///
/// At each frequency it factors the tridiagonal dynamic stiffness matrix
/// K*(1 + i*w*beta) + M*(-w^2 + i*w*alpha) with partial pivoting and solves
/// for a unit force column, giving the exact receptance at every node. An
/// exact zero pivot (possible only without damping, at a natural frequency)
/// is reported as singular.
struct DynamicSolver {
    kdiag: Vec<f64>,
    koff: Vec<f64>,
    masses: Vec<f64>,
    alpha: f64,
    beta: f64,
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    x: Vec<Complex64>,
}

impl DynamicSolver {
    fn new(model: &StructureModel) -> Self {
        let n = model.n_nodes();
        let k = &model.stiffnesses_n_per_m;
        let mut kdiag = vec![0.0; n];
        let mut koff = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            kdiag[i] = k[i] + if i + 1 < n { k[i + 1] } else { 0.0 };
        }
        for i in 0..n.saturating_sub(1) {
            koff[i] = -k[i + 1];
        }
        let zero = Complex64::new(0.0, 0.0);
        Self {
            kdiag,
            koff,
            masses: model.masses_kg.clone(),
            alpha: model.rayleigh_alpha,
            beta: model.rayleigh_beta,
            dl: vec![zero; n],
            d: vec![zero; n],
            du: vec![zero; n],
            du2: vec![zero; n],
            x: vec![zero; n],
        }
    }

    /// Response of every node to a unit force at `force_node`, or None when
    /// the matrix is exactly singular at this frequency.
    fn column(&mut self, freq_hz: f64, force_node: usize) -> Option<&[Complex64]> {
        let n = self.masses.len();
        let w = TAU * freq_hz;
        let kz = Complex64::new(1.0, w * self.beta);
        let mz = Complex64::new(-w * w, w * self.alpha);
        let zero = Complex64::new(0.0, 0.0);
        for i in 0..n {
            self.d[i] = kz.scale(self.kdiag[i]) + mz.scale(self.masses[i]);
            self.x[i] = zero;
        }
        for i in 0..n - 1 {
            let off = kz.scale(self.koff[i]);
            self.dl[i] = off;
            self.du[i] = off;
            self.du2[i] = zero;
        }
        self.x[force_node] = Complex64::new(1.0, 0.0);

        // Elimination with row swaps whenever the subdiagonal dominates.
        for i in 0..n - 1 {
            if self.d[i].l1_norm() >= self.dl[i].l1_norm() {
                if self.dl[i].l1_norm() != 0.0 {
                    let fact = self.dl[i] / self.d[i];
                    self.d[i + 1] -= fact * self.du[i];
                    let xi = self.x[i];
                    self.x[i + 1] -= fact * xi;
                }
            } else {
                let fact = self.d[i] / self.dl[i];
                self.d[i] = self.dl[i];
                let temp = self.du[i];
                self.du[i] = self.d[i + 1];
                self.d[i + 1] = temp - fact * self.d[i + 1];
                if i + 2 < n {
                    self.du2[i] = self.du[i + 1];
                    self.du[i + 1] = -fact * self.du[i + 1];
                }
                self.x.swap(i, i + 1);
                let xi = self.x[i];
                self.x[i + 1] -= fact * xi;
            }
        }

        // Back substitution; a zero divisor means a truly singular matrix.
        if self.d[n - 1] == zero {
            return None;
        }
        self.x[n - 1] /= self.d[n - 1];
        if n >= 2 {
            if self.d[n - 2] == zero {
                return None;
            }
            let correction = self.du[n - 2] * self.x[n - 1];
            self.x[n - 2] = (self.x[n - 2] - correction) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            if self.d[i] == zero {
                return None;
            }
            let correction = self.du[i] * self.x[i + 1] + self.du2[i] * self.x[i + 2];
            self.x[i] = (self.x[i] - correction) / self.d[i];
        }
        Some(&self.x)
    }
}

fn singular_error(bin: usize, freq_hz: f64) -> AdiError {
    AdiError::Numerical(format!(
        "dynamic stiffness matrix is singular at bin {bin} ({freq_hz} Hz); \
         an undamped chain cannot be evaluated exactly at a natural frequency"
    ))
}

/// Exact receptance between two nodes on an explicit frequency grid.
///
/// Nodes are chain indices, not transducer ids; when a transducer sits on
/// the node its id labels the result, otherwise the node index does.
/// Coherence is reported as 1 because the response is noise free.
pub fn analytic_frf(
    model: &StructureModel,
    actuator_node: usize,
    sensor_node: usize,
    freqs_hz: &[f64],
) -> Result<TransferFunction> {
    let n = model.n_nodes();
    if actuator_node >= n || sensor_node >= n {
        return Err(AdiError::Config(format!(
            "nodes {actuator_node} and {sensor_node} must lie inside the {n}-node chain"
        )));
    }
    if freqs_hz.is_empty() {
        return Err(AdiError::Config("frequency grid is empty".into()));
    }
    for &f in freqs_hz {
        if !f.is_finite() || f < 0.0 {
            return Err(AdiError::Config(format!(
                "frequencies must be finite and non-negative, got {f}"
            )));
        }
    }
    for w in freqs_hz.windows(2) {
        if !(w[1] > w[0]) {
            return Err(AdiError::Config(format!(
                "frequency grid must be strictly ascending, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut solver = DynamicSolver::new(model);
    let mut magnitude = Vec::with_capacity(freqs_hz.len());
    let mut phase_rad = Vec::with_capacity(freqs_hz.len());
    for (bin, &f) in freqs_hz.iter().enumerate() {
        let col = solver
            .column(f, actuator_node)
            .ok_or_else(|| singular_error(bin, f))?;
        let h = col[sensor_node];
        magnitude.push(h.norm());
        phase_rad.push(wrap_value(h.arg()));
    }
    let id_for = |node: usize| {
        model
            .transducer_at(node)
            .unwrap_or(TransducerId(node as u32))
    };
    let tf = TransferFunction {
        actuator_id: id_for(actuator_node),
        sensor_id: id_for(sensor_node),
        freqs_hz: freqs_hz.to_vec(),
        magnitude,
        phase_rad,
        coherence: vec![1.0; freqs_hz.len()],
    };
    tf.validate()?;
    Ok(tf)
}

/// Synthesizes one actuation run: the excitation drives the named transducer
/// and every transducer channel (the actuator's own included) is recorded,
/// with optional sensor noise.
///
/// The response is built in the frequency domain from the exact receptance,
/// so the only modeling gap between this and `analytic_frf` is the noise.
/// Noise is i.i.d. Gaussian per channel with standard deviation
/// `noise_std` times that channel's clean RMS, seeded per channel so runs
/// are reproducible.
pub fn simulate_response(
    model: &StructureModel,
    actuator: TransducerId,
    excitation: &ExcitationConfig,
    noise_std: f64,
    seed: u64,
) -> Result<TimeSeriesRecord> {
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(AdiError::Config(format!(
            "noise_std must be finite and non-negative, got {noise_std}"
        )));
    }
    let actuator_node = model.node_of(actuator)?;
    if model.transducer_nodes.len() < 1 {
        return Err(AdiError::Config("the model has no transducers".into()));
    }
    let x = generate_excitation(excitation, derive_seed(seed, "excitation", actuator.0 as u64))?;
    let n = x.len();
    let fs = excitation.sample_rate_hz;
    let spec = spectrum_of_real(&x);

    let mut solver = DynamicSolver::new(model);
    let zero = Complex64::new(0.0, 0.0);
    let channel_ids: Vec<TransducerId> = model.transducer_nodes.keys().copied().collect();
    let mut channel_specs: Vec<Vec<Complex64>> = vec![vec![zero; n]; channel_ids.len()];
    for k in 0..=n / 2 {
        let f = k as f64 * fs / n as f64;
        let col = solver
            .column(f, actuator_node)
            .ok_or_else(|| singular_error(k, f))?;
        for (ci, &id) in channel_ids.iter().enumerate() {
            let node = model.transducer_nodes[&id];
            let y = spec[k] * col[node];
            let cs = &mut channel_specs[ci];
            if k == 0 || 2 * k == n {
                // DC and Nyquist bins of a real signal carry no imaginary
                // part; dropping the residue keeps the spectrum Hermitian.
                cs[k] = Complex64::new(y.re, 0.0);
            } else {
                cs[k] = y;
                cs[n - k] = y.conj();
            }
        }
    }

    let mut responses = BTreeMap::new();
    for (ci, &id) in channel_ids.iter().enumerate() {
        let mut y = real_from_spectrum(&mut channel_specs[ci]);
        if noise_std > 0.0 {
            let rms = (y.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            let sigma = noise_std * rms;
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, "noise", id.0 as u64));
            let normal = StandardNormal;
            for v in y.iter_mut() {
                let draw: f64 = normal.sample(&mut rng);
                *v += sigma * draw;
            }
        }
        responses.insert(id, y);
    }

    let record = TimeSeriesRecord {
        actuator_id: actuator,
        sample_rate_hz: fs,
        excitation: x,
        responses,
    };
    record.validate()?;
    Ok(record)
}

/// Restricts every transfer function to the bins all of them share. Grids
/// can only diverge when the drive-power floor drops different bins per
/// actuation run, which is rare but must not poison the whole cycle. Public
/// so callers assembling a signature set from separately estimated transfer
/// functions (for instance, loaded from recordings) get the same treatment.
pub fn harmonize_grids(tfs: Vec<TransferFunction>) -> Result<Vec<TransferFunction>> {
    let identical = tfs.iter().all(|tf| tf.freqs_hz == tfs[0].freqs_hz);
    if identical {
        return Ok(tfs);
    }
    let mut common: Vec<u64> = tfs[0].freqs_hz.iter().map(|f| f.to_bits()).collect();
    for tf in &tfs[1..] {
        let bits: std::collections::BTreeSet<u64> =
            tf.freqs_hz.iter().map(|f| f.to_bits()).collect();
        common.retain(|b| bits.contains(b));
    }
    if common.is_empty() {
        return Err(AdiError::Estimation(
            "actuation runs share no usable frequency bins".into(),
        ));
    }
    let keep: std::collections::BTreeSet<u64> = common.into_iter().collect();
    Ok(tfs
        .into_iter()
        .map(|tf| {
            let mut freqs_hz = Vec::new();
            let mut magnitude = Vec::new();
            let mut phase_rad = Vec::new();
            let mut coherence = Vec::new();
            for k in 0..tf.freqs_hz.len() {
                if keep.contains(&tf.freqs_hz[k].to_bits()) {
                    freqs_hz.push(tf.freqs_hz[k]);
                    magnitude.push(tf.magnitude[k]);
                    phase_rad.push(tf.phase_rad[k]);
                    coherence.push(tf.coherence[k]);
                }
            }
            TransferFunction {
                freqs_hz,
                magnitude,
                phase_rad,
                coherence,
                ..tf
            }
        })
        .collect())
}

/// One full interrogation cycle: every transducer in `transducers` actuates
/// in turn while the others listen, and the estimated transfer functions are
/// assembled into a round-robin signature set.
pub fn run_cycle(
    model: &StructureModel,
    transducers: &[TransducerId],
    excitation: &ExcitationConfig,
    params: &SpectralParams,
    noise_std: f64,
    seed: u64,
    label: &str,
) -> Result<SignatureSet> {
    let records = cycle_records(model, transducers, excitation, noise_std, seed)?;
    let ids: Vec<TransducerId> = records.iter().map(|r| r.actuator_id).collect();
    let mut tfs = Vec::with_capacity(ids.len() * (ids.len() - 1));
    for record in &records {
        for &sensor in &ids {
            if sensor != record.actuator_id {
                tfs.push(estimate_transfer_function(record, sensor, params)?);
            }
        }
    }
    SignatureSet::new(label, harmonize_grids(tfs)?)
}

/// Simulates the raw records of one interrogation cycle, one per actuator in
/// ascending id order, each with a seed derived from the cycle seed. This is
/// the acquisition half of [`run_cycle`]; estimating transfer functions from
/// these records with the same spectral parameters reproduces its signature
/// set exactly.
pub fn cycle_records(
    model: &StructureModel,
    transducers: &[TransducerId],
    excitation: &ExcitationConfig,
    noise_std: f64,
    seed: u64,
) -> Result<Vec<TimeSeriesRecord>> {
    let mut set: Vec<TransducerId> = transducers.to_vec();
    set.sort();
    set.dedup();
    if set.len() < 2 {
        return Err(AdiError::Config(format!(
            "an interrogation cycle needs at least 2 distinct transducers, got {}",
            set.len()
        )));
    }
    for &id in &set {
        model.node_of(id)?;
    }
    set.iter()
        .map(|&actuator| {
            simulate_response(
                model,
                actuator,
                excitation,
                noise_std,
                derive_seed(seed, "actuation", actuator.0 as u64),
            )
        })
        .collect()
}
