//! Maximum-likelihood reconstruction.
//!
//! The physical state is parameterized as rho = T^dag T / tr(T^dag T)
//! with T a full complex matrix, so any iterate is Hermitian, PSD, and
//! trace-1 by construction. Gradient descent minimizes the negative
//! log-likelihood L = -sum_i d_i log p_i over all (circuit, outcome)
//! pairs; d_i are per-circuit outcome frequencies and p_i the model
//! probabilities obtained by propagating rho through the (noiseless)
//! circuit. Predicted probabilities are floored at 1e-12 inside the log.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::dim;
use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::sim::DensityMatrix;

use super::CircuitDistribution;

const PROB_FLOOR: f64 = 1e-12;

/// Gradient-descent settings. The learning rate decays geometrically per
/// iteration; the stop test is a relative decrease of the loss below
/// `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct MleConfig {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Number of circuits per stochastic gradient step; full batch when
    /// absent.
    pub minibatch: Option<usize>,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            learning_rate: 0.05,
            lr_decay: 0.999,
            tolerance: 1e-9,
            seed: 7,
            minibatch: None,
        }
    }
}

impl MleConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if self.learning_rate <= 0.0 || self.lr_decay <= 0.0 || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig(
                "learning_rate, lr_decay, and tolerance must be positive".into(),
            ));
        }
        if self.minibatch == Some(0) {
            return Err(Error::InvalidConfig("minibatch must be positive".into()));
        }
        Ok(())
    }
}

/// Result of an MLE run. `converged` is false when the iteration budget
/// ran out before the loss plateaued; the best iterate is returned either
/// way.
#[derive(Debug, Clone)]
pub struct MleOutcome {
    pub rho: DensityMatrix,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn rho_of_t(t: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let gram = t.adjoint() * t;
    let tau = gram.trace().re;
    (gram / Complex64::new(tau, 0.0), tau)
}

fn forward_probs(rho: &DMatrix<Complex64>, circuit: &Circuit) -> Vec<f64> {
    let n = circuit.n_qubits();
    let mut evolved = rho.clone();
    for layer in circuit.gate_layers() {
        for gate in layer {
            apply_gate(&mut evolved, gate, n, false);
        }
    }
    (0..evolved.nrows()).map(|i| evolved[(i, i)].re).collect()
}

/// Apply one gate (or its inverse) as rho -> U rho U^dag.
fn apply_gate(mat: &mut DMatrix<Complex64>, gate: &crate::circuits::Gate, n: usize, adjoint: bool) {
    let g = if adjoint { gate.dagger() } else { *gate };
    crate::sim::apply_gate_to_density(mat, &g, n);
}

/// Negative log-likelihood and its gradient with respect to T (as the
/// matrix dL/dRe(T) + i dL/dIm(T)), over the given circuit subset.
pub fn mle_loss_and_gradient(
    t: &DMatrix<Complex64>,
    dists: &[CircuitDistribution],
    batch: &[usize],
) -> (f64, DMatrix<Complex64>) {
    let d = t.nrows();
    let (rho, tau) = rho_of_t(t);
    let mut loss = 0.0;
    // G = -sum_c U_c^dag diag(d_z / p_z) U_c, so dL = tr(G drho)
    let mut g = DMatrix::<Complex64>::zeros(d, d);
    for &ci in batch {
        let dist = &dists[ci];
        let probs = forward_probs(&rho, dist.circuit);
        let mut weights = DMatrix::<Complex64>::zeros(d, d);
        for z in 0..d {
            let f = dist.probs[z];
            if f == 0.0 {
                continue;
            }
            let p = probs[z];
            loss -= f * p.max(PROB_FLOOR).ln();
            if p > PROB_FLOOR {
                weights[(z, z)] = Complex64::new(-f / p, 0.0);
            }
        }
        // back-transform the measured-frame diagonal: U^dag W U
        let n = dist.circuit.n_qubits();
        for layer in dist.circuit.gate_layers().iter().rev() {
            for gate in layer.iter().rev() {
                apply_gate(&mut weights, gate, n, true);
            }
        }
        g += weights;
    }
    let trace_g_rho = (&g * &rho).trace().re;
    let w = (t * (&g - DMatrix::from_diagonal_element(d, d, Complex64::new(trace_g_rho, 0.0))))
        / Complex64::new(tau, 0.0);
    (loss, w * Complex64::new(2.0, 0.0))
}

fn loss_only(t: &DMatrix<Complex64>, dists: &[CircuitDistribution], batch: &[usize]) -> f64 {
    let (rho, _) = rho_of_t(t);
    let mut loss = 0.0;
    for &ci in batch {
        let dist = &dists[ci];
        let probs = forward_probs(&rho, dist.circuit);
        for (p, &f) in probs.iter().zip(&dist.probs) {
            if f != 0.0 {
                loss -= f * p.max(PROB_FLOOR).ln();
            }
        }
    }
    loss
}

/// Warm start near the maximally mixed state: I/sqrt(2^N) plus a small
/// seeded complex Gaussian perturbation.
fn initial_t(d: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = move || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let scale = 1.0 / (d as f64).sqrt();
    let mut t = DMatrix::from_diagonal_element(d, d, Complex64::new(scale, 0.0));
    for c in 0..d {
        for r in 0..d {
            t[(r, c)] += Complex64::new(gauss(), gauss()) * 0.01;
        }
    }
    t
}

/// Maximum-likelihood estimate over any circuit collection.
pub fn mle_estimate(
    dists: &[CircuitDistribution],
    n_qubits: usize,
    cfg: &MleConfig,
) -> Result<MleOutcome> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("measurement records"));
    }
    cfg.validate()?;
    for dist in dists {
        if dist.circuit.n_qubits() != n_qubits {
            return Err(Error::MixedQubitCounts(n_qubits, dist.circuit.n_qubits()));
        }
    }
    let d = dim(n_qubits);
    let full_batch: Vec<usize> = (0..dists.len()).collect();
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut t = initial_t(d, cfg.seed);
    let mut loss = loss_only(&t, dists, &full_batch);
    let mut best_t = t.clone();
    let mut best_loss = loss;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..cfg.max_iters {
        iterations = iter + 1;
        let lr = cfg.learning_rate * cfg.lr_decay.powi(iter as i32);

        let batch: Vec<usize> = match cfg.minibatch {
            None => full_batch.clone(),
            Some(k) => {
                let k = k.min(dists.len());
                let mut picks = full_batch.clone();
                for i in 0..k {
                    let j = batch_rng.random_range(i..picks.len());
                    picks.swap(i, j);
                }
                picks.truncate(k);
                picks
            }
        };

        let (_, grad) = mle_loss_and_gradient(&t, dists, &batch);

        if cfg.minibatch.is_none() {
            // deterministic descent: backtrack the scheduled step until the
            // full loss does not increase
            let mut step = lr;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &t - &grad * Complex64::new(step, 0.0);
                let cand_loss = loss_only(&cand, dists, &full_batch);
                if cand_loss <= loss {
                    let decrease = loss - cand_loss;
                    t = cand;
                    loss = cand_loss;
                    accepted = true;
                    if loss < best_loss {
                        best_loss = loss;
                        best_t = t.clone();
                    }
                    if decrease <= cfg.tolerance * loss.abs().max(1.0) {
                        converged = true;
                    }
                    break;
                }
                step *= 0.5;
            }
            if !accepted || converged {
                converged = true;
                break;
            }
        } else {
            t -= &grad * Complex64::new(lr, 0.0);
            loss = loss_only(&t, dists, &full_batch);
            if loss < best_loss {
                best_loss = loss;
                best_t = t.clone();
            }
        }
    }

    let (rho_raw, _) = rho_of_t(&best_t);
    // T^dag T is PSD by construction; symmetrize rounding noise and
    // renormalize the trace before validating
    let rho_sym = (rho_raw.clone() + rho_raw.adjoint()) * Complex64::new(0.5, 0.0);
    let trace = rho_sym.trace().re;
    let rho = DensityMatrix::new(n_qubits, rho_sym / Complex64::new(trace, 0.0))?;
    Ok(MleOutcome {
        rho,
        final_loss: best_loss,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_subset_circuits, full_qst_plan, Connectivity, PlanVariant};
    use crate::estimate::fidelity;
    use crate::sim::{run_plan, NoiseSpec, ReferenceState};
    use crate::subsets::SubsetKey;

    #[test]
    fn fair_coin_mle() {
        let k = SubsetKey::new(0, 1).unwrap();
        let circuits = build_subset_circuits(&k, Connectivity::Chain).unwrap();
        let dist = CircuitDistribution::new(&circuits[0], vec![0.5, 0.5]).unwrap();
        let out = mle_estimate(&[dist], 1, &MleConfig::default()).unwrap();
        assert!((out.rho.entry(0, 0).re - 0.5).abs() < 1e-3);
        assert!((out.rho.entry(1, 1).re - 0.5).abs() < 1e-3);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let n = 2;
        let circuits = full_qst_plan(n, PlanVariant::Seeqst, Connectivity::Chain).unwrap();
        let state = ReferenceState::RandomFullRank { n_qubits: n, seed: 31 }
            .prepare()
            .unwrap();
        let records = run_plan(&state, &circuits, 4096, &NoiseSpec::None, 5).unwrap();
        let dists = crate::estimate::distributions_from_records(&circuits, &records).unwrap();

        let d = dim(n);
        let t = initial_t(d, 123);
        let batch: Vec<usize> = (0..dists.len()).collect();
        let (_, grad) = mle_loss_and_gradient(&t, &dists, &batch);

        let h = 1e-6;
        for (r, c) in [(0usize, 0usize), (1, 2), (3, 1), (2, 2)] {
            for part in [0, 1] {
                let mut plus = t.clone();
                let mut minus = t.clone();
                let delta = if part == 0 {
                    Complex64::new(h, 0.0)
                } else {
                    Complex64::new(0.0, h)
                };
                plus[(r, c)] += delta;
                minus[(r, c)] -= delta;
                let num =
                    (loss_only(&plus, &dists, &batch) - loss_only(&minus, &dists, &batch)) / (2.0 * h);
                let ana = if part == 0 { grad[(r, c)].re } else { grad[(r, c)].im };
                let rel = (num - ana).abs() / num.abs().max(1e-12);
                assert!(
                    rel < 1e-4,
                    "gradient mismatch at ({r},{c}) part {part}: {num} vs {ana}"
                );
            }
        }
    }

    #[test]
    fn mle_output_is_physical_and_accurate_noiselessly() {
        let n = 2;
        let circuits = full_qst_plan(n, PlanVariant::Seeqst, Connectivity::Chain).unwrap();
        let reference = ReferenceState::PlusY { n_qubits: n };
        let records =
            run_plan(&reference.prepare().unwrap(), &circuits, 16384, &NoiseSpec::None, 11)
                .unwrap();
        let dists = crate::estimate::distributions_from_records(&circuits, &records).unwrap();
        let out = mle_estimate(&dists, n, &MleConfig::default()).unwrap();
        let truth = reference.density_matrix().unwrap();
        let f = fidelity(&out.rho, &truth).unwrap();
        assert!(f >= 0.99, "fidelity {f}");
    }

    #[test]
    fn minibatch_runs() {
        let n = 1;
        let circuits = full_qst_plan(n, PlanVariant::Seeqst, Connectivity::Chain).unwrap();
        let state = ReferenceState::PlusY { n_qubits: n }.prepare().unwrap();
        let records = run_plan(&state, &circuits, 2048, &NoiseSpec::None, 3).unwrap();
        let dists = crate::estimate::distributions_from_records(&circuits, &records).unwrap();
        let cfg = MleConfig {
            minibatch: Some(2),
            max_iters: 300,
            ..MleConfig::default()
        };
        let out = mle_estimate(&dists, n, &cfg).unwrap();
        assert!(out.final_loss.is_finite());
    }

    #[test]
    fn iteration_cap_reported_as_non_convergence() {
        let n = 1;
        let circuits = full_qst_plan(n, PlanVariant::Seeqst, Connectivity::Chain).unwrap();
        let state = ReferenceState::PlusY { n_qubits: n }.prepare().unwrap();
        let records = run_plan(&state, &circuits, 4096, &NoiseSpec::None, 13).unwrap();
        let dists = crate::estimate::distributions_from_records(&circuits, &records).unwrap();
        let cfg = MleConfig {
            max_iters: 2,
            tolerance: 1e-15,
            ..MleConfig::default()
        };
        let out = mle_estimate(&dists, n, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
        // the best iterate is still a valid state
        assert!((out.rho.matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = MleConfig {
            max_iters: 0,
            ..MleConfig::default()
        };
        let k = SubsetKey::new(0, 1).unwrap();
        let circuits = build_subset_circuits(&k, Connectivity::Chain).unwrap();
        let dist = CircuitDistribution::new(&circuits[0], vec![1.0, 0.0]).unwrap();
        assert!(mle_estimate(&[dist], 1, &cfg).is_err());
    }
}
