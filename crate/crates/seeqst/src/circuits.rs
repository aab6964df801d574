//! Measurement-circuit construction.
//!
//! For a subset with M >= 1 off-diagonal qubits, the two settings are the
//! inverse of a GHZ preparation on those qubits: the CNOT entangler run in
//! reverse, then a pi/2 rotation on the pivot qubit (Ry-type for the even-Y
//! observables, Rx-type for the odd-Y ones), then a computational-basis
//! measurement of all qubits. The diagonal subset needs only the
//! measurement. A local variant replaces the entangler with per-qubit
//! rotations at the cost of 2^M settings per subset.

use std::collections::BTreeSet;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bits::{bit_pos, dim};
use crate::error::{Error, Result};
use crate::subsets::SubsetKey;

/// A circuit element. Qubits are labeled 1..=N (qubit 1 is the most
/// significant bit of a basis index). Rotations are fixed at +-pi/2 with
/// the convention R_a(theta) = exp(-i theta sigma_a / 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Rx90(usize),
    Ry90(usize),
    Rx90Dag(usize),
    Ry90Dag(usize),
    H(usize),
    Cnot { control: usize, target: usize },
    MeasureAll,
}

impl Gate {
    /// Qubits the gate touches (empty for the terminal measurement).
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx90(q) | Gate::Ry90(q) | Gate::Rx90Dag(q) | Gate::Ry90Dag(q) | Gate::H(q) => {
                vec![q]
            }
            Gate::Cnot { control, target } => vec![control, target],
            Gate::MeasureAll => vec![],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Rx90(_) => "RX90",
            Gate::Ry90(_) => "RY90",
            Gate::Rx90Dag(_) => "RX90DAG",
            Gate::Ry90Dag(_) => "RY90DAG",
            Gate::H(_) => "H",
            Gate::Cnot { .. } => "CNOT",
            Gate::MeasureAll => "MEASURE_ALL",
        }
    }

    /// The inverse gate (measurement is its own marker).
    pub fn dagger(&self) -> Gate {
        match *self {
            Gate::Rx90(q) => Gate::Rx90Dag(q),
            Gate::Rx90Dag(q) => Gate::Rx90(q),
            Gate::Ry90(q) => Gate::Ry90Dag(q),
            Gate::Ry90Dag(q) => Gate::Ry90(q),
            g => g,
        }
    }

    /// 2x2 matrix of a single-qubit gate, row-major.
    pub fn single_qubit_matrix(&self) -> Option<[Complex64; 4]> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re = |v: f64| Complex64::new(v, 0.0);
        let im = |v: f64| Complex64::new(0.0, v);
        match self {
            Gate::Rx90(_) => Some([re(s), im(-s), im(-s), re(s)]),
            Gate::Rx90Dag(_) => Some([re(s), im(s), im(s), re(s)]),
            Gate::Ry90(_) => Some([re(s), re(-s), re(s), re(s)]),
            Gate::Ry90Dag(_) => Some([re(s), re(s), re(-s), re(s)]),
            Gate::H(_) => Some([re(s), re(s), re(s), re(-s)]),
            _ => None,
        }
    }
}

/// Which measurement setting a circuit realizes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CircuitLabel {
    Even,
    Odd,
    Diagonal,
    /// Per-qubit local pattern: 'I' (idle), 'X' (measure sigma_x) or
    /// 'Y' (measure sigma_y), qubit 1 leftmost.
    Local(String),
}

impl CircuitLabel {
    pub fn as_string(&self) -> String {
        match self {
            CircuitLabel::Even => "EVEN".to_string(),
            CircuitLabel::Odd => "ODD".to_string(),
            CircuitLabel::Diagonal => "DIAGONAL".to_string(),
            CircuitLabel::Local(p) => format!("LOCAL:{p}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "EVEN" => Ok(CircuitLabel::Even),
            "ODD" => Ok(CircuitLabel::Odd),
            "DIAGONAL" => Ok(CircuitLabel::Diagonal),
            _ => {
                if let Some(p) = s.strip_prefix("LOCAL:") {
                    if p.chars().all(|c| matches!(c, 'I' | 'X' | 'Y')) && !p.is_empty() {
                        return Ok(CircuitLabel::Local(p.to_string()));
                    }
                }
                Err(Error::InvalidGate(format!("circuit label {s:?}")))
            }
        }
    }

    /// For local patterns: mask of qubits measured in the Y basis.
    pub fn local_y_mask(&self, n_qubits: usize) -> Option<usize> {
        match self {
            CircuitLabel::Local(p) => {
                let mut mask = 0usize;
                for (i, c) in p.chars().enumerate() {
                    if c == 'Y' {
                        mask |= 1 << (n_qubits - 1 - i);
                    }
                }
                Some(mask)
            }
            _ => None,
        }
    }
}

/// Ordered layers of gates; gates within a layer touch disjoint qubits and
/// the final layer is the measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    subset_mask: usize,
    label: CircuitLabel,
    layers: Vec<Vec<Gate>>,
}

impl Circuit {
    pub fn new(
        n_qubits: usize,
        subset_mask: usize,
        label: CircuitLabel,
        layers: Vec<Vec<Gate>>,
    ) -> Result<Self> {
        if subset_mask >= dim(n_qubits) {
            return Err(Error::MaskOutOfRange {
                mask: subset_mask,
                n_qubits,
            });
        }
        match layers.last() {
            Some(last) if last.as_slice() == [Gate::MeasureAll] => {}
            _ => {
                return Err(Error::InvalidGate(
                    "final layer must be the measurement".to_string(),
                ))
            }
        }
        for layer in &layers {
            let mut seen = BTreeSet::new();
            for g in layer {
                if let Gate::Cnot { control, target } = g {
                    if control == target {
                        return Err(Error::InvalidGate("CNOT with control == target".into()));
                    }
                }
                for q in g.qubits() {
                    if q == 0 || q > n_qubits {
                        return Err(Error::InvalidGate(format!(
                            "qubit {q} out of range 1..={n_qubits}"
                        )));
                    }
                    if !seen.insert(q) {
                        return Err(Error::InvalidGate(format!(
                            "qubit {q} used twice in one layer"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            n_qubits,
            subset_mask,
            label,
            layers,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn subset_mask(&self) -> usize {
        self.subset_mask
    }

    pub fn subset_key(&self) -> SubsetKey {
        SubsetKey::new(self.subset_mask, self.n_qubits).expect("validated at construction")
    }

    pub fn label(&self) -> &CircuitLabel {
        &self.label
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    /// Gate layers excluding the terminal measurement.
    pub fn gate_layers(&self) -> &[Vec<Gate>] {
        &self.layers[..self.layers.len() - 1]
    }

    /// CNOT gates in time order.
    pub fn cnots(&self) -> Vec<(usize, usize)> {
        self.gate_layers()
            .iter()
            .flatten()
            .filter_map(|g| match *g {
                Gate::Cnot { control, target } => Some((control, target)),
                _ => None,
            })
            .collect()
    }

    /// Number of layers containing at least one two-qubit gate.
    pub fn two_qubit_layers(&self) -> usize {
        self.gate_layers()
            .iter()
            .filter(|l| l.iter().any(|g| matches!(g, Gate::Cnot { .. })))
            .count()
    }

    /// Pre-image data of a measured bitstring for even/odd/diagonal
    /// circuits: the index u and sign s such that the state the circuit
    /// maps to |z> is (|u> + s*c*|u ^ mask>)/sqrt(2) with c = 1 for EVEN
    /// and c = i for ODD (and plain |z> for the diagonal circuit).
    ///
    /// Undoing the entangler is GF(2)-linear: replaying the circuit's
    /// CNOTs in reverse time order on the bit vector with the pivot bit
    /// cleared recovers u.
    pub fn outcome_preimage(&self, z: usize) -> Result<(usize, f64)> {
        match self.label {
            CircuitLabel::Diagonal => Ok((z, 1.0)),
            CircuitLabel::Even | CircuitLabel::Odd => {
                let pivot = self
                    .subset_key()
                    .off_diagonal_qubits()
                    .first()
                    .copied()
                    .ok_or_else(|| Error::InvalidGate("even/odd circuit with mask 0".into()))?;
                let pivot_bit = 1usize << bit_pos(pivot, self.n_qubits);
                let sign = if z & pivot_bit == 0 { 1.0 } else { -1.0 };
                let mut u = z & !pivot_bit;
                for &(control, target) in self.cnots().iter().rev() {
                    let cbit = 1usize << bit_pos(control, self.n_qubits);
                    let tbit = 1usize << bit_pos(target, self.n_qubits);
                    if u & cbit != 0 {
                        u ^= tbit;
                    }
                }
                Ok((u, sign))
            }
            CircuitLabel::Local(_) => Err(Error::InvalidGate(
                "local circuits have product pre-images".into(),
            )),
        }
    }
}

/// Two-qubit-gate scheduling target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// Sequential CNOT cascade: M - 1 layers.
    Chain,
    /// Doubling fan-out: ceil(log2 M) layers.
    AllToAll,
    /// Closed-form heavy-hex upper bound (reporting only).
    HeavyHexBound,
}

impl Connectivity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Connectivity::Chain => "CHAIN",
            Connectivity::AllToAll => "ALL_TO_ALL",
            Connectivity::HeavyHexBound => "HEAVY_HEX_BOUND",
        }
    }
}

/// Full-tomography plan flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanVariant {
    /// GHZ-basis circuits, two per off-diagonal subset.
    Seeqst,
    /// Single-qubit rotations only, 2^M circuits per subset.
    Local,
}

/// Two-qubit depth summary for one subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthReport {
    pub two_qubit_layers: usize,
    pub total_two_qubit_gates: usize,
    pub connectivity: Connectivity,
}

fn ceil_log2(m: usize) -> usize {
    m.next_power_of_two().trailing_zeros() as usize
}

/// GHZ depth on an infinite heavy-hex lattice: smallest k with
/// (2k + 1)^2 >= 8M - 3.
fn heavy_hex_ghz_depth(m: usize) -> usize {
    let rhs = 8 * m - 3;
    let mut k = 0usize;
    while (2 * k + 1) * (2 * k + 1) < rhs {
        k += 1;
    }
    k
}

/// CNOT layers of the entangler in preparation order, scheduled for the
/// requested connectivity.
fn entangler_prep_layers(off_diag: &[usize], schedule: Connectivity) -> Result<Vec<Vec<Gate>>> {
    let m = off_diag.len();
    if m <= 1 {
        return Ok(Vec::new());
    }
    match schedule {
        Connectivity::Chain => Ok((0..m - 1)
            .map(|i| {
                vec![Gate::Cnot {
                    control: off_diag[i],
                    target: off_diag[i + 1],
                }]
            })
            .collect()),
        Connectivity::AllToAll => {
            let mut layers = Vec::new();
            let mut entangled = 1usize;
            while entangled < m {
                let step = entangled.min(m - entangled);
                let layer = (0..step)
                    .map(|i| Gate::Cnot {
                        control: off_diag[i],
                        target: off_diag[entangled + i],
                    })
                    .collect();
                layers.push(layer);
                entangled += step;
            }
            Ok(layers)
        }
        Connectivity::HeavyHexBound => Err(Error::InvalidConfig(
            "HEAVY_HEX_BOUND is a depth bound, not a gate schedule".to_string(),
        )),
    }
}

/// Build the measurement circuits for one subset: a single
/// computational-basis measurement for the diagonal subset, otherwise the
/// EVEN and ODD settings. The pivot carrying the pi/2 rotation is the
/// lowest-index off-diagonal qubit and the CNOT fan-out emanates from it.
pub fn build_subset_circuits(k: &SubsetKey, schedule: Connectivity) -> Result<Vec<Circuit>> {
    let n = k.n_qubits();
    if k.is_diagonal() {
        return Ok(vec![Circuit::new(
            n,
            0,
            CircuitLabel::Diagonal,
            vec![vec![Gate::MeasureAll]],
        )?]);
    }
    let off_diag = k.off_diagonal_qubits();
    let pivot = off_diag[0];
    let prep = entangler_prep_layers(&off_diag, schedule)?;

    let build = |label: CircuitLabel, rotation: Gate| -> Result<Circuit> {
        let mut layers: Vec<Vec<Gate>> = prep.iter().rev().cloned().collect();
        layers.push(vec![rotation]);
        layers.push(vec![Gate::MeasureAll]);
        Circuit::new(n, k.mask(), label, layers)
    };

    Ok(vec![
        build(CircuitLabel::Even, Gate::Ry90Dag(pivot))?,
        build(CircuitLabel::Odd, Gate::Rx90(pivot))?,
    ])
}

/// Build the 2^M single-qubit-only circuits for one subset: each
/// off-diagonal qubit gets a sigma_x- or sigma_y-basis rotation, diagonal
/// qubits idle. The diagonal subset yields the single measurement circuit.
pub fn build_local_circuits(k: &SubsetKey) -> Vec<Circuit> {
    let n = k.n_qubits();
    let off_diag = k.off_diagonal_qubits();
    let m = off_diag.len();
    (0..1usize << m)
        .map(|t| {
            let mut pattern: Vec<char> = vec!['I'; n];
            let mut rotations = Vec::new();
            for (j, &q) in off_diag.iter().enumerate() {
                // bit j of t counts from the leftmost off-diagonal qubit,
                // so patterns enumerate X before Y, qubit 1 outermost
                let measure_y = (t >> (m - 1 - j)) & 1 == 1;
                pattern[q - 1] = if measure_y { 'Y' } else { 'X' };
                rotations.push(if measure_y {
                    Gate::Rx90(q)
                } else {
                    Gate::Ry90Dag(q)
                });
            }
            let mut layers = Vec::new();
            if !rotations.is_empty() {
                layers.push(rotations);
            }
            layers.push(vec![Gate::MeasureAll]);
            Circuit::new(
                n,
                k.mask(),
                CircuitLabel::Local(pattern.into_iter().collect()),
                layers,
            )
            .expect("local layers are disjoint by construction")
        })
        .collect()
}

/// The full-tomography circuit list: 2^(N+1) - 1 circuits for the
/// GHZ-basis variant, 3^N distinct circuits for the local variant.
pub fn full_qst_plan(
    n_qubits: usize,
    variant: PlanVariant,
    schedule: Connectivity,
) -> Result<Vec<Circuit>> {
    let mut circuits = Vec::new();
    // a local pattern determines the whole circuit, so label-level dedup
    // is global dedup of gate content
    let mut seen = BTreeSet::new();
    for mask in 0..dim(n_qubits) {
        let k = SubsetKey::new(mask, n_qubits)?;
        let batch = match variant {
            PlanVariant::Seeqst => build_subset_circuits(&k, schedule)?,
            PlanVariant::Local => build_local_circuits(&k),
        };
        for c in batch {
            let dedup_key = match variant {
                PlanVariant::Seeqst => (c.label().as_string(), c.subset_mask()),
                PlanVariant::Local => (c.label().as_string(), 0),
            };
            if seen.insert(dedup_key) {
                circuits.push(c);
            }
        }
    }
    Ok(circuits)
}

/// Two-qubit depth summary for the subset under a connectivity assumption.
pub fn depth_report(k: &SubsetKey, connectivity: Connectivity) -> DepthReport {
    let m = k.block_size();
    let gates = m.saturating_sub(1);
    let layers = if m <= 1 {
        0
    } else {
        match connectivity {
            Connectivity::Chain => m - 1,
            Connectivity::AllToAll => ceil_log2(m),
            Connectivity::HeavyHexBound => 3 * heavy_hex_ghz_depth(m),
        }
    };
    DepthReport {
        two_qubit_layers: layers,
        total_two_qubit_gates: gates,
        connectivity,
    }
}

/// Which half of the observable split a GHZ-basis circuit serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitHalf {
    Even,
    Odd,
}

/// The simultaneous eigenstates the EVEN/ODD circuits are built to map
/// onto the computational basis: (|u> + s*c*|u ^ mask>)/sqrt(2) with the
/// pivot bit of u fixed to 0 (c = 1 for EVEN, i for ODD), together with
/// every diagonal-register value. Enumerated with u ascending, + before -.
/// For the diagonal subset the eigenbasis is the computational basis.
pub fn eigenstates(k: &SubsetKey, half: SplitHalf) -> Vec<DVector<Complex64>> {
    let n = k.n_qubits();
    let d = dim(n);
    if k.is_diagonal() {
        return (0..d)
            .map(|i| {
                let mut v = DVector::zeros(d);
                v[i] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
    }
    let pivot = k.off_diagonal_qubits()[0];
    let pivot_bit = 1usize << bit_pos(pivot, n);
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let c = match half {
        SplitHalf::Even => Complex64::new(amp, 0.0),
        SplitHalf::Odd => Complex64::new(0.0, amp),
    };
    let mut states = Vec::with_capacity(d);
    for u in 0..d {
        if u & pivot_bit != 0 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let mut v = DVector::zeros(d);
            v[u] = Complex64::new(amp, 0.0);
            v[u ^ k.mask()] = c * sign;
            states.push(v);
        }
    }
    states
}
