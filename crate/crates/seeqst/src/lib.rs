//! Selective and efficient quantum state tomography (SEEQST).
//!
//! An N-qubit density matrix splits into 2^N parity subsets of 2^N
//! elements each; any subset is recoverable from two GHZ-basis
//! measurement settings, so the full matrix needs 2^(N+1) - 1 circuits
//! instead of the 3^N of local-basis tomography. This crate plans those
//! measurements, simulates them on reference states with optional noise
//! and finite shots, and reconstructs the requested elements by direct
//! inversion or maximum-likelihood estimation.
//!
//! The layers compose through plain data and are usable independently:
//!
//! - [`subsets`]: parity classification, observable sets, even/odd
//!   commuting splits, projector decompositions, measurement planning.
//! - [`circuits`]: the two measurement circuits per subset, the
//!   single-qubit-only variant, CNOT scheduling and depth bounds.
//! - [`sim`]: statevector and density-matrix engines, per-layer noise
//!   channels, seeded multinomial sampling, reference states.
//! - [`estimate`]: Pauli expectations, per-subset direct inversion,
//!   Cholesky-parameterized MLE, fidelity, error metrics, and the
//!   empirical error-scaling model.
//! - [`json`]: the on-disk document formats of the CLI pipeline.
//! - [`verify`]: self-check suites over the structural invariants.

pub mod bits;
pub mod circuits;
pub mod error;
pub mod estimate;
pub mod json;
pub mod pauli;
pub mod sim;
pub mod subsets;
pub mod verify;

pub use circuits::{
    build_local_circuits, build_subset_circuits, depth_report, full_qst_plan, Circuit,
    CircuitLabel, Connectivity, DepthReport, Gate, PlanVariant,
};
pub use error::{Error, Result};
pub use estimate::{
    delta_err, direct_estimate, fidelity, fit_scaling, mle_estimate, pauli_expectations,
    scaling_predict, CircuitDistribution, EstimationMethod, MleConfig, MleOutcome, Observation,
    ScalingModel, ScalingVariant, SubsetEstimate,
};
pub use pauli::{PauliLetter, PauliString};
pub use sim::{
    exact_probabilities, make_reference_state, run_plan, sample_counts, DensityMatrix,
    MeasurementRecord, NoiseSpec, PreparedState, PureState, ReferenceState,
};
pub use subsets::{
    decompose_projector, elements_of_subset, eo_split, observable_set, plan_subsets,
    subset_of_element, threshold_plan, ElementIndex, ObservableSplit, ProjectorDecomposition,
    SubsetKey,
};
