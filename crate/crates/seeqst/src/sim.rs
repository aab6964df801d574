//! Circuit execution on reference states.
//!
//! Two engines share the gate set: a statevector path for noiseless pure
//! states (up to [`MAX_STATEVECTOR_QUBITS`] qubits) and a density-matrix
//! path with per-layer noise channels (up to [`MAX_DENSITY_QUBITS`]).
//! Noise is applied to every qubit, idle ones included, after every gate
//! layer; the terminal measurement layer is not a gate layer. Sampling is
//! reproducible: a ChaCha8 generator is seeded per circuit by hashing the
//! master seed with the subset mask and circuit label.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::{bit_pos, dim, fnv1a64, format_bitstring};
use crate::circuits::{Circuit, Gate};
use crate::error::{Error, Result};

/// Statevector engine limit.
pub const MAX_STATEVECTOR_QUBITS: usize = 12;
/// Density-matrix engine limit.
pub const MAX_DENSITY_QUBITS: usize = 6;

/// Name of the sampling generator, recorded in output metadata.
pub const RNG_GENERATOR: &str = "chacha8";
/// Stream-splitting rule, recorded in output metadata.
pub const RNG_STREAM_RULE: &str = "fnv1a64(master_seed_le || subset_mask_le || label_utf8)";

/// A 2^N x 2^N Hermitian, PSD, trace-1 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validate and wrap a matrix: Hermitian and unit trace within 1e-10,
    /// eigenvalues above -1e-10.
    pub fn new(n_qubits: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        let d = dim(n_qubits);
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: mat.nrows(),
            });
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace is {trace}, expected 1"
            )));
        }
        for r in 0..d {
            for c in r..d {
                let delta = (mat[(r, c)] - mat[(c, r)].conj()).norm();
                if delta > 1e-10 {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not Hermitian at ({r}, {c}): asymmetry {delta:.2e}"
                    )));
                }
            }
        }
        let min_eig = mat
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:.2e}"
            )));
        }
        Ok(Self { n_qubits, mat })
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, mat: DMatrix<Complex64>) -> Self {
        Self { n_qubits, mat }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        dim(self.n_qubits)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    /// Diagonal as real populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }
}

/// A pure state as a normalized amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != dim(n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: dim(n_qubits),
                got: amps.len(),
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "statevector norm {norm}, expected 1"
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn basis(n_qubits: usize, idx: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim(n_qubits)];
        amps[idx] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// |psi><psi| as a density matrix (subject to the density-engine limit).
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        check_capacity("density-matrix", MAX_DENSITY_QUBITS, self.n_qubits)?;
        let d = dim(self.n_qubits);
        let mat = DMatrix::from_fn(d, d, |r, c| self.amps[r] * self.amps[c].conj());
        Ok(DensityMatrix::from_matrix_unchecked(self.n_qubits, mat))
    }
}

/// Per-layer, per-qubit noise channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Kraus pair K0 = diag(1, sqrt(1-gamma)), K1 = sqrt(gamma)|0><1|.
    AmplitudeDamping { gamma: f64 },
    /// rho -> (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z).
    Depolarizing { p: f64 },
}

impl NoiseSpec {
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidNoiseParameter { value: gamma });
        }
        Ok(NoiseSpec::AmplitudeDamping { gamma })
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidNoiseParameter { value: p });
        }
        Ok(NoiseSpec::Depolarizing { p })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    /// Canonical CLI/manifest spelling: `none`, `ad:<gamma>`, `depol:<p>`.
    pub fn as_string(&self) -> String {
        match self {
            NoiseSpec::None => "none".to_string(),
            NoiseSpec::AmplitudeDamping { gamma } => format!("ad:{gamma}"),
            NoiseSpec::Depolarizing { p } => format!("depol:{p}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(NoiseSpec::None);
        }
        if let Some(v) = s.strip_prefix("ad:") {
            let gamma: f64 = v
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("noise spec {s:?}")))?;
            return Self::amplitude_damping(gamma);
        }
        if let Some(v) = s.strip_prefix("depol:") {
            let p: f64 = v
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("noise spec {s:?}")))?;
            return Self::depolarizing(p);
        }
        Err(Error::InvalidConfig(format!("noise spec {s:?}")))
    }
}

/// Observed counts for one executed circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub circuit_label: String,
    pub subset_mask: usize,
    pub n_qubits: usize,
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
}

impl MeasurementRecord {
    /// Outcome frequencies as a dense vector indexed by basis state.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let d = dim(self.n_qubits);
        let mut freqs = vec![0.0; d];
        for (bits, &count) in &self.counts {
            let idx = crate::bits::parse_bitstring(bits, self.n_qubits)?;
            freqs[idx] = count as f64 / self.shots as f64;
        }
        Ok(freqs)
    }
}

fn check_capacity(engine: &'static str, limit: usize, n_qubits: usize) -> Result<()> {
    if n_qubits > limit {
        return Err(Error::Capacity {
            engine,
            limit,
            n_qubits,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gate application
// ---------------------------------------------------------------------------

fn apply_single_to_amps(amps: &mut [Complex64], m: &[Complex64; 4], pos: usize) {
    let stride = 1usize << pos;
    let period = stride << 1;
    let mut start = 0;
    while start < amps.len() {
        for idx in start..start + stride {
            let a = amps[idx];
            let b = amps[idx + stride];
            amps[idx] = m[0] * a + m[1] * b;
            amps[idx + stride] = m[2] * a + m[3] * b;
        }
        start += period;
    }
}

fn apply_cnot_to_amps(amps: &mut [Complex64], cpos: usize, tpos: usize) {
    let cbit = 1usize << cpos;
    let tbit = 1usize << tpos;
    for idx in 0..amps.len() {
        if idx & cbit != 0 && idx & tbit == 0 {
            amps.swap(idx, idx | tbit);
        }
    }
}

/// Apply one gate to a statevector.
pub(crate) fn apply_gate_to_amps(amps: &mut [Complex64], gate: &Gate, n_qubits: usize) {
    match gate {
        Gate::MeasureAll => {}
        Gate::Cnot { control, target } => apply_cnot_to_amps(
            amps,
            bit_pos(*control, n_qubits),
            bit_pos(*target, n_qubits),
        ),
        g => {
            let m = g.single_qubit_matrix().expect("single-qubit gate");
            let q = g.qubits()[0];
            apply_single_to_amps(amps, &m, bit_pos(q, n_qubits));
        }
    }
}

/// rho -> (G (x) I) rho (G (x) I)^dagger for a single-qubit gate, or the
/// CNOT permutation on rows and columns.
pub(crate) fn apply_gate_to_density(rho: &mut DMatrix<Complex64>, gate: &Gate, n_qubits: usize) {
    let d = dim(n_qubits);
    match gate {
        Gate::MeasureAll => {}
        Gate::Cnot { control, target } => {
            let cbit = 1usize << bit_pos(*control, n_qubits);
            let tbit = 1usize << bit_pos(*target, n_qubits);
            for idx in 0..d {
                if idx & cbit != 0 && idx & tbit == 0 {
                    rho.swap_rows(idx, idx | tbit);
                }
            }
            for idx in 0..d {
                if idx & cbit != 0 && idx & tbit == 0 {
                    rho.swap_columns(idx, idx | tbit);
                }
            }
        }
        g => {
            let m = g.single_qubit_matrix().expect("single-qubit gate");
            let pos = bit_pos(g.qubits()[0], n_qubits);
            let mut scratch = vec![Complex64::new(0.0, 0.0); d];
            // left multiply: transform each column
            for c in 0..d {
                for r in 0..d {
                    scratch[r] = rho[(r, c)];
                }
                apply_single_to_amps(&mut scratch, &m, pos);
                for r in 0..d {
                    rho[(r, c)] = scratch[r];
                }
            }
            // right multiply by G^dagger: transform each row with conj(G)
            let mc = [m[0].conj(), m[1].conj(), m[2].conj(), m[3].conj()];
            for r in 0..d {
                for c in 0..d {
                    scratch[c] = rho[(r, c)];
                }
                apply_single_to_amps(&mut scratch, &mc, pos);
                for c in 0..d {
                    rho[(r, c)] = scratch[c];
                }
            }
        }
    }
}

fn apply_noise_to_qubit(rho: &mut DMatrix<Complex64>, noise: &NoiseSpec, pos: usize) {
    let d = rho.nrows();
    let qbit = 1usize << pos;
    match *noise {
        NoiseSpec::None => {}
        NoiseSpec::AmplitudeDamping { gamma } => {
            let keep = (1.0 - gamma).sqrt();
            for r in 0..d {
                if r & qbit != 0 {
                    continue;
                }
                let r1 = r | qbit;
                for c in 0..d {
                    if c & qbit != 0 {
                        continue;
                    }
                    let c1 = c | qbit;
                    let hot = rho[(r1, c1)];
                    rho[(r, c)] += hot * gamma;
                    rho[(r1, c1)] = hot * (1.0 - gamma);
                    rho[(r, c1)] *= keep;
                    rho[(r1, c)] *= keep;
                }
            }
        }
        NoiseSpec::Depolarizing { p } => {
            let mix = 2.0 * p / 3.0;
            let shrink = 1.0 - 4.0 * p / 3.0;
            for r in 0..d {
                if r & qbit != 0 {
                    continue;
                }
                let r1 = r | qbit;
                for c in 0..d {
                    if c & qbit != 0 {
                        continue;
                    }
                    let c1 = c | qbit;
                    let a = rho[(r, c)];
                    let dd = rho[(r1, c1)];
                    rho[(r, c)] = a * (1.0 - mix) + dd * mix;
                    rho[(r1, c1)] = dd * (1.0 - mix) + a * mix;
                    rho[(r, c1)] *= shrink;
                    rho[(r1, c)] *= shrink;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

/// Outcome probabilities of a circuit on a density matrix, applying the
/// noise channel to every qubit after every gate layer.
pub fn exact_probabilities(
    rho: &DensityMatrix,
    circuit: &Circuit,
    noise: &NoiseSpec,
) -> Result<Vec<f64>> {
    if rho.n_qubits() != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: dim(circuit.n_qubits()),
            got: rho.dim(),
        });
    }
    check_capacity("density-matrix", MAX_DENSITY_QUBITS, rho.n_qubits())?;
    let n = rho.n_qubits();
    let mut mat = rho.matrix().clone();
    for layer in circuit.gate_layers() {
        for gate in layer {
            apply_gate_to_density(&mut mat, gate, n);
        }
        if !noise.is_none() {
            for q in 1..=n {
                apply_noise_to_qubit(&mut mat, noise, bit_pos(q, n));
            }
        }
    }
    let probs: Vec<f64> = (0..mat.nrows()).map(|i| mat[(i, i)].re.max(0.0)).collect();
    debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    Ok(probs)
}

/// Outcome probabilities of a circuit on a pure state (noiseless path).
pub fn exact_probabilities_pure(state: &PureState, circuit: &Circuit) -> Result<Vec<f64>> {
    if state.n_qubits() != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: dim(circuit.n_qubits()),
            got: state.amps.len(),
        });
    }
    check_capacity("statevector", MAX_STATEVECTOR_QUBITS, state.n_qubits())?;
    let mut amps = state.amps.clone();
    for layer in circuit.gate_layers() {
        for gate in layer {
            apply_gate_to_amps(&mut amps, gate, state.n_qubits());
        }
    }
    Ok(amps.iter().map(|a| a.norm_sqr()).collect())
}

/// Dense unitary of a circuit (columns are images of basis states),
/// excluding the measurement.
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<Complex64>> {
    check_capacity("statevector", MAX_STATEVECTOR_QUBITS, circuit.n_qubits())?;
    let d = dim(circuit.n_qubits());
    let mut u = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        amps[col] = Complex64::new(1.0, 0.0);
        for layer in circuit.gate_layers() {
            for gate in layer {
                apply_gate_to_amps(&mut amps, gate, circuit.n_qubits());
            }
        }
        for row in 0..d {
            u[(row, col)] = amps[row];
        }
    }
    Ok(u)
}

/// Seed for one circuit's sampling stream.
pub fn derive_record_seed(master_seed: u64, subset_mask: usize, label: &str) -> u64 {
    let mut bytes = Vec::with_capacity(16 + label.len());
    bytes.extend_from_slice(&master_seed.to_le_bytes());
    bytes.extend_from_slice(&(subset_mask as u64).to_le_bytes());
    bytes.extend_from_slice(label.as_bytes());
    fnv1a64(&bytes)
}

/// Multinomial draw of `shots` samples from `probs`, reproducible for a
/// fixed seed. Keys of the returned map are bitstrings with qubit 1
/// leftmost; only observed outcomes appear.
pub fn sample_counts(probs: &[f64], shots: u64, seed: u64) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if !probs.len().is_power_of_two() || probs.is_empty() {
        return Err(Error::InvalidProbabilities(format!(
            "length {} is not a power of two",
            probs.len()
        )));
    }
    let n_qubits = probs.len().trailing_zeros() as usize;
    if let Some(&bad) = probs.iter().find(|&&p| p < -1e-9) {
        return Err(Error::InvalidProbabilities(format!(
            "negative probability {bad}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities(format!(
            "probabilities sum to {total}"
        )));
    }

    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p.max(0.0);
        cumulative.push(acc);
    }
    let scale = acc;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * scale;
        let idx = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
        tallies[idx] += 1;
    }

    let mut counts = BTreeMap::new();
    for (idx, &count) in tallies.iter().enumerate() {
        if count > 0 {
            counts.insert(format_bitstring(idx, n_qubits), count);
        }
    }
    Ok(counts)
}

/// Prepared input state for execution: pure statevector or density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum PreparedState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl PreparedState {
    pub fn n_qubits(&self) -> usize {
        match self {
            PreparedState::Pure(s) => s.n_qubits(),
            PreparedState::Mixed(r) => r.n_qubits(),
        }
    }

    /// Route to the statevector engine when pure and noiseless, the
    /// density-matrix engine otherwise.
    pub fn probabilities(&self, circuit: &Circuit, noise: &NoiseSpec) -> Result<Vec<f64>> {
        match (self, noise.is_none()) {
            (PreparedState::Pure(s), true) => exact_probabilities_pure(s, circuit),
            (PreparedState::Pure(s), false) => {
                exact_probabilities(&s.density_matrix()?, circuit, noise)
            }
            (PreparedState::Mixed(r), _) => exact_probabilities(r, circuit, noise),
        }
    }

    /// Densify (subject to the density-engine limit).
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        match self {
            PreparedState::Pure(s) => s.density_matrix(),
            PreparedState::Mixed(r) => Ok(r.clone()),
        }
    }
}

/// Execute a circuit list: one record per circuit, with per-circuit seeds
/// derived from the master seed. Circuits are simulated in parallel;
/// results keep the input order.
pub fn run_plan(
    state: &PreparedState,
    circuits: &[Circuit],
    shots: u64,
    noise: &NoiseSpec,
    master_seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    if circuits.is_empty() {
        return Err(Error::EmptyInput("circuit list"));
    }
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let n = state.n_qubits();
    for c in circuits {
        if c.n_qubits() != n {
            return Err(Error::MixedQubitCounts(n, c.n_qubits()));
        }
    }
    circuits
        .par_iter()
        .map(|c| {
            let probs = state.probabilities(c, noise)?;
            let label = c.label().as_string();
            let seed = derive_record_seed(master_seed, c.subset_mask(), &label);
            let counts = sample_counts(&probs, shots, seed)?;
            Ok(MeasurementRecord {
                circuit_label: label,
                subset_mask: c.subset_mask(),
                n_qubits: n,
                shots,
                seed,
                counts,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// reference states
// ---------------------------------------------------------------------------

/// Built-in reference states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceState {
    /// (|0> + i|1>)^(x)N / 2^(N/2); every density-matrix element is nonzero.
    PlusY { n_qubits: usize },
    /// (|0...0> - i|1...1>)/sqrt(2).
    GhzMinusI { n_qubits: usize },
    /// Ginibre draw G G^dagger / tr(G G^dagger); full rank almost surely.
    RandomFullRank { n_qubits: usize, seed: u64 },
}

impl ReferenceState {
    pub fn n_qubits(&self) -> usize {
        match *self {
            ReferenceState::PlusY { n_qubits }
            | ReferenceState::GhzMinusI { n_qubits }
            | ReferenceState::RandomFullRank { n_qubits, .. } => n_qubits,
        }
    }

    /// CLI spelling: `plusy`, `ghz-i`, `random:<seed>`.
    pub fn as_string(&self) -> String {
        match *self {
            ReferenceState::PlusY { .. } => "plusy".to_string(),
            ReferenceState::GhzMinusI { .. } => "ghz-i".to_string(),
            ReferenceState::RandomFullRank { seed, .. } => format!("random:{seed}"),
        }
    }

    pub fn parse(s: &str, n_qubits: usize) -> Result<Self> {
        match s {
            "plusy" => Ok(ReferenceState::PlusY { n_qubits }),
            "ghz-i" => Ok(ReferenceState::GhzMinusI { n_qubits }),
            _ => {
                if let Some(v) = s.strip_prefix("random:") {
                    let seed: u64 = v
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("state spec {s:?}")))?;
                    return Ok(ReferenceState::RandomFullRank { n_qubits, seed });
                }
                Err(Error::InvalidConfig(format!("state spec {s:?}")))
            }
        }
    }

    /// Prepare in the cheapest faithful representation.
    pub fn prepare(&self) -> Result<PreparedState> {
        match *self {
            ReferenceState::PlusY { n_qubits } => {
                check_capacity("statevector", MAX_STATEVECTOR_QUBITS, n_qubits)?;
                let d = dim(n_qubits);
                let scale = 1.0 / (d as f64).sqrt();
                let amps = (0..d)
                    .map(|idx| {
                        let ones = (idx as u32).count_ones() % 4;
                        match ones {
                            0 => Complex64::new(scale, 0.0),
                            1 => Complex64::new(0.0, scale),
                            2 => Complex64::new(-scale, 0.0),
                            _ => Complex64::new(0.0, -scale),
                        }
                    })
                    .collect();
                Ok(PreparedState::Pure(PureState::new(n_qubits, amps)?))
            }
            ReferenceState::GhzMinusI { n_qubits } => {
                check_capacity("statevector", MAX_STATEVECTOR_QUBITS, n_qubits)?;
                let d = dim(n_qubits);
                let amp = std::f64::consts::FRAC_1_SQRT_2;
                let mut amps = vec![Complex64::new(0.0, 0.0); d];
                amps[0] = Complex64::new(amp, 0.0);
                amps[d - 1] = Complex64::new(0.0, -amp);
                Ok(PreparedState::Pure(PureState::new(n_qubits, amps)?))
            }
            ReferenceState::RandomFullRank { n_qubits, seed } => {
                check_capacity("density-matrix", MAX_DENSITY_QUBITS, n_qubits)?;
                let d = dim(n_qubits);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut gauss = || {
                    // Box-Muller; the 1 - u shift keeps the log argument positive
                    let u1: f64 = 1.0 - rng.random::<f64>();
                    let u2: f64 = rng.random::<f64>();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                };
                let g = DMatrix::from_fn(d, d, |_, _| Complex64::new(gauss(), gauss()));
                let mut rho = &g * g.adjoint();
                let trace = rho.trace().re;
                rho /= Complex64::new(trace, 0.0);
                // symmetrize away rounding asymmetry
                let rho = (rho.clone() + rho.adjoint()) * Complex64::new(0.5, 0.0);
                Ok(PreparedState::Mixed(DensityMatrix::from_matrix_unchecked(
                    n_qubits, rho,
                )))
            }
        }
    }

    /// The state as a density matrix (subject to the density-engine limit).
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        self.prepare()?.density_matrix()
    }
}

/// Build one of the reference states as a density matrix.
pub fn make_reference_state(spec: &ReferenceState) -> Result<DensityMatrix> {
    spec.density_matrix()
}
