//! Reconstruction of density-matrix elements from measurement data.
//!
//! Direct estimation inverts one subset at a time in closed form: each
//! element is a fixed linear combination of the Pauli expectation values
//! its two (or 2^M local) settings determine. Maximum-likelihood
//! estimation optimizes a Cholesky-parameterized full density matrix over
//! any circuit collection. A least-squares sensing-matrix solver is kept
//! alongside the closed form as an independent cross-check.

mod metrics;
mod mle;
mod scaling;

pub use metrics::{delta_err, fidelity, fidelity_hermitian};
pub use mle::{mle_estimate, mle_loss_and_gradient, MleConfig, MleOutcome};
pub use scaling::{fit_scaling, scaling_predict, Observation, ScalingFit, ScalingModel, ScalingVariant};

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bits::{dim, parity_sign};
use crate::circuits::{Circuit, CircuitLabel};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::sim::MeasurementRecord;
use crate::subsets::{
    decompose_projector, elements_of_subset, observable_set, ElementIndex, SubsetKey,
};

/// How a set of element values was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMethod {
    Direct,
    Mle,
}

impl EstimationMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimationMethod::Direct => "DIRECT",
            EstimationMethod::Mle => "MLE",
        }
    }
}

/// Estimated values for the elements of one subset.
#[derive(Debug, Clone)]
pub struct SubsetEstimate {
    pub key: SubsetKey,
    pub values: BTreeMap<ElementIndex, Complex64>,
    pub method: EstimationMethod,
}

/// A circuit paired with its outcome distribution (frequencies from
/// counts, or exact probabilities in the infinite-shot limit).
#[derive(Debug, Clone)]
pub struct CircuitDistribution<'a> {
    pub circuit: &'a Circuit,
    pub probs: Vec<f64>,
}

impl<'a> CircuitDistribution<'a> {
    pub fn new(circuit: &'a Circuit, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != dim(circuit.n_qubits()) {
            return Err(Error::DimensionMismatch {
                expected: dim(circuit.n_qubits()),
                got: probs.len(),
            });
        }
        Ok(Self { circuit, probs })
    }
}

/// Pair each record with its producing circuit by (label, subset mask).
pub fn distributions_from_records<'a>(
    circuits: &'a [Circuit],
    records: &[MeasurementRecord],
) -> Result<Vec<CircuitDistribution<'a>>> {
    records
        .iter()
        .map(|r| {
            let circuit = circuits
                .iter()
                .find(|c| {
                    c.subset_mask() == r.subset_mask && c.label().as_string() == r.circuit_label
                })
                .ok_or_else(|| Error::RecordMismatch {
                    mask: r.subset_mask,
                    reason: format!("no circuit for record {:?}", r.circuit_label),
                })?;
            CircuitDistribution::new(circuit, r.frequencies()?)
        })
        .collect()
}

/// The subset observables a single circuit pins down.
pub fn measurable_observables(circuit: &Circuit) -> Vec<PauliString> {
    let n = circuit.n_qubits();
    let mask = circuit.subset_mask();
    let d = dim(n);
    match circuit.label() {
        CircuitLabel::Diagonal => (0..d)
            .map(|z| PauliString::from_masks(n, 0, z).expect("in range"))
            .collect(),
        CircuitLabel::Even => (0..d)
            .filter(|z| (z & mask).count_ones() % 2 == 0)
            .map(|z| PauliString::from_masks(n, mask, z).expect("in range"))
            .collect(),
        CircuitLabel::Odd => (0..d)
            .filter(|z| (z & mask).count_ones() % 2 == 1)
            .map(|z| PauliString::from_masks(n, mask, z).expect("in range"))
            .collect(),
        CircuitLabel::Local(_) => {
            let y_mask = circuit.label().local_y_mask(n).expect("local label");
            // spread the free bits over the diagonal-parity positions
            let free_positions: Vec<usize> =
                (0..n).rev().filter(|b| mask & (1 << b) == 0).collect();
            (0..1usize << free_positions.len())
                .map(|t| {
                    let mut z = y_mask;
                    for (j, &b) in free_positions.iter().enumerate() {
                        if (t >> (free_positions.len() - 1 - j)) & 1 == 1 {
                            z |= 1 << b;
                        }
                    }
                    PauliString::from_masks(n, mask, z).expect("in range")
                })
                .collect()
        }
    }
}

/// Eigenvalue of observable `p` on the state the circuit maps to outcome
/// `z`. `p` must belong to [`measurable_observables`] of the circuit.
pub fn outcome_eigenvalue(circuit: &Circuit, p: &PauliString, z: usize) -> Result<f64> {
    match circuit.label() {
        CircuitLabel::Diagonal | CircuitLabel::Local(_) => {
            Ok(parity_sign(z & p.support()))
        }
        CircuitLabel::Even | CircuitLabel::Odd => {
            let (u, sign) = circuit.outcome_preimage(z)?;
            let phase = p.apply_to_basis(u).1;
            // the pre-image eigenstate is (|u> + s c |u ^ mask>)/sqrt(2);
            // its eigenvalue is s Re(phase) for even-Y observables and
            // s Im(phase) for odd-Y ones
            if p.y_count() % 2 == 0 {
                Ok(sign * phase.re)
            } else {
                Ok(sign * phase.im)
            }
        }
    }
}

/// Expectation values of the subset's observables from the provided
/// settings. Requires a covering collection (EVEN and ODD for a GHZ-basis
/// pair, all 2^M patterns for the local variant); observables measured by
/// several settings are averaged.
pub fn pauli_expectations(
    dists: &[CircuitDistribution],
    k: &SubsetKey,
) -> Result<BTreeMap<PauliString, f64>> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("measurement records"));
    }
    let mut sums: BTreeMap<PauliString, (f64, usize)> = BTreeMap::new();
    for dist in dists {
        if dist.circuit.subset_mask() != k.mask() || dist.circuit.n_qubits() != k.n_qubits() {
            return Err(Error::RecordMismatch {
                mask: k.mask(),
                reason: format!(
                    "record for subset {:#b} offered to subset {:#b}",
                    dist.circuit.subset_mask(),
                    k.mask()
                ),
            });
        }
        for p in measurable_observables(dist.circuit) {
            let mut value = 0.0;
            for (z, &prob) in dist.probs.iter().enumerate() {
                if prob != 0.0 {
                    value += outcome_eigenvalue(dist.circuit, &p, z)? * prob;
                }
            }
            let slot = sums.entry(p).or_insert((0.0, 0));
            slot.0 += value;
            slot.1 += 1;
        }
    }

    let expected: BTreeSet<PauliString> = observable_set(k).into_iter().collect();
    let got: BTreeSet<PauliString> = sums.keys().cloned().collect();
    if got != expected {
        let missing = expected.difference(&got).count();
        return Err(Error::RecordMismatch {
            mask: k.mask(),
            reason: format!("{missing} observables uncovered (counterpart setting missing?)"),
        });
    }

    Ok(sums
        .into_iter()
        .map(|(p, (total, hits))| (p, total / hits as f64))
        .collect())
}

/// Closed-form recovery of every element of the subset from its settings:
/// rho_(row,col) = sum_P a_P \<P\> with a_P the expansion coefficients of
/// |col><row|. In the infinite-shot limit this reproduces tr(rho Pi)
/// exactly.
pub fn direct_estimate(dists: &[CircuitDistribution], k: &SubsetKey) -> Result<SubsetEstimate> {
    let expectations = pauli_expectations(dists, k)?;
    let mut values = BTreeMap::new();
    for element in elements_of_subset(k) {
        let decomposition = decompose_projector(&element);
        let mut value = Complex64::new(0.0, 0.0);
        for (p, a) in &decomposition.terms {
            value += a * expectations[p];
        }
        values.insert(element, value);
    }
    Ok(SubsetEstimate {
        key: *k,
        values,
        method: EstimationMethod::Direct,
    })
}

/// Convenience wrapper pairing records to circuits first.
pub fn direct_estimate_from_records(
    circuits: &[Circuit],
    records: &[MeasurementRecord],
    k: &SubsetKey,
) -> Result<SubsetEstimate> {
    let relevant: Vec<MeasurementRecord> = records
        .iter()
        .filter(|r| r.subset_mask == k.mask())
        .cloned()
        .collect();
    let dists = distributions_from_records(circuits, &relevant)?;
    direct_estimate(&dists, k)
}

/// Independent least-squares route: solve min ||A x - d||_2 where x is the
/// real parameterization of the subset's elements and d the measured
/// expectation vector. Coincides with [`direct_estimate`] because the
/// sensing system is square and invertible.
pub fn sensing_estimate(dists: &[CircuitDistribution], k: &SubsetKey) -> Result<SubsetEstimate> {
    let expectations = pauli_expectations(dists, k)?;
    let observables = observable_set(k);
    let d = dim(k.n_qubits());
    let b = DVector::from_iterator(d, observables.iter().map(|p| expectations[p]));

    let mut a = DMatrix::<f64>::zeros(d, d);
    if k.is_diagonal() {
        // <P> = sum_r rho_rr P[r, r]
        for (row, p) in observables.iter().enumerate() {
            for r in 0..d {
                a[(row, r)] = p.entry(r, r).re;
            }
        }
    } else {
        let reps: Vec<usize> = (0..d).filter(|r| *r < r ^ k.mask()).collect();
        for (row, p) in observables.iter().enumerate() {
            for (j, &r) in reps.iter().enumerate() {
                // <P> += 2 Re(rho_(r, r^mask) * P[r^mask, r])
                let w = p.entry(r ^ k.mask(), r);
                a[(row, 2 * j)] = 2.0 * w.re;
                a[(row, 2 * j + 1)] = -2.0 * w.im;
            }
        }
    }

    let solution = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("sensing solve failed: {e}")))?;

    let mut values = BTreeMap::new();
    if k.is_diagonal() {
        for r in 0..d {
            values.insert(
                ElementIndex::new(r, r, k.n_qubits())?,
                Complex64::new(solution[r], 0.0),
            );
        }
    } else {
        let reps: Vec<usize> = (0..d).filter(|r| *r < r ^ k.mask()).collect();
        for (j, &r) in reps.iter().enumerate() {
            let value = Complex64::new(solution[2 * j], solution[2 * j + 1]);
            values.insert(ElementIndex::new(r, r ^ k.mask(), k.n_qubits())?, value);
            values.insert(
                ElementIndex::new(r ^ k.mask(), r, k.n_qubits())?,
                value.conj(),
            );
        }
    }
    Ok(SubsetEstimate {
        key: *k,
        values,
        method: EstimationMethod::Direct,
    })
}

/// Assemble subset estimates into a full (Hermitian but possibly
/// non-positive) matrix; missing elements stay zero.
pub fn assemble_matrix(estimates: &[SubsetEstimate], n_qubits: usize) -> DMatrix<Complex64> {
    let d = dim(n_qubits);
    let mut m = DMatrix::zeros(d, d);
    for est in estimates {
        for (e, v) in &est.values {
            m[(e.row(), e.col())] = *v;
        }
    }
    m
}
