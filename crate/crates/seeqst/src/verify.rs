//! Self-check suites over the planning and circuit layers.
//!
//! These are the structural properties everything else leans on: the
//! observable sets tile the Pauli basis, the even/odd halves commute
//! internally and anti-commute across the off-diagonal block, the built
//! circuits map the advertised eigenbasis onto the computational basis,
//! and projector decompositions reproduce their projectors.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::dim;
use crate::circuits::{
    build_subset_circuits, eigenstates, full_qst_plan, Connectivity, PlanVariant, SplitHalf,
};
use crate::error::Result;
use crate::pauli::PauliString;
use crate::sim::circuit_unitary;
use crate::subsets::{
    decompose_projector, elements_of_subset, eo_split, observable_set, ElementIndex, SubsetKey,
};

/// One named check with a pass/fail verdict.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl CheckOutcome {
    fn pass(name: &str, details: String) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            details,
        }
    }

    fn fail(name: &str, details: String) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            details,
        }
    }
}

/// Suite depth knobs; defaults match the documented desk-scale checks.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub max_symplectic_n: usize,
    pub max_dense_n: usize,
    pub max_contract_n: usize,
    pub random_projector_elements: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_symplectic_n: 8,
            max_dense_n: 4,
            max_contract_n: 4,
            random_projector_elements: 100,
        }
    }
}

/// Worst deviation of the eigenbasis contract for one subset and
/// schedule: every eigenstate must land on its own basis state and every
/// observable of the matching half must be diagonalized with +-1 entries.
pub fn eigenbasis_contract_deviation(k: &SubsetKey, schedule: Connectivity) -> Result<f64> {
    let circuits = build_subset_circuits(k, schedule)?;
    let split = eo_split(k);
    let halves: Vec<(usize, SplitHalf, &Vec<PauliString>)> = if k.is_diagonal() {
        vec![(0, SplitHalf::Even, &split.even)]
    } else {
        vec![
            (0, SplitHalf::Even, &split.even),
            (1, SplitHalf::Odd, &split.odd),
        ]
    };

    let d = dim(k.n_qubits());
    let mut worst: f64 = 0.0;
    for (ci, half, observables) in halves {
        let u = circuit_unitary(&circuits[ci])?;

        let mut targets = BTreeSet::new();
        for state in eigenstates(k, half) {
            let image = &u * state;
            let (argmax, peak) = image
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .expect("nonempty");
            worst = worst.max((peak.norm() - 1.0).abs());
            for (i, amp) in image.iter().enumerate() {
                if i != argmax {
                    worst = worst.max(amp.norm());
                }
            }
            targets.insert(argmax);
        }
        if targets.len() != d {
            worst = worst.max(1.0);
        }

        for p in observables {
            let conjugated = &u * p.matrix() * u.adjoint();
            for r in 0..d {
                for c in 0..d {
                    if r == c {
                        worst = worst.max(conjugated[(r, c)].im.abs());
                        worst = worst.max((conjugated[(r, c)].re.abs() - 1.0).abs());
                    } else {
                        worst = worst.max(conjugated[(r, c)].norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn check_plan_counts() -> CheckOutcome {
    for n in 1..=8 {
        let plan = match full_qst_plan(n, PlanVariant::Seeqst, Connectivity::Chain) {
            Ok(p) => p,
            Err(e) => return CheckOutcome::fail("plan-counts", e.to_string()),
        };
        if plan.len() != 2 * dim(n) - 1 {
            return CheckOutcome::fail(
                "plan-counts",
                format!("GHZ-basis plan at n={n}: {} circuits", plan.len()),
            );
        }
    }
    for n in 1..=6 {
        let plan = match full_qst_plan(n, PlanVariant::Local, Connectivity::Chain) {
            Ok(p) => p,
            Err(e) => return CheckOutcome::fail("plan-counts", e.to_string()),
        };
        if plan.len() != 3usize.pow(n as u32) {
            return CheckOutcome::fail(
                "plan-counts",
                format!("local plan at n={n}: {} circuits", plan.len()),
            );
        }
    }
    CheckOutcome::pass(
        "plan-counts",
        "2^(N+1)-1 GHZ-basis circuits (N<=8), 3^N local circuits (N<=6)".into(),
    )
}

fn check_basis_partition(max_n: usize) -> CheckOutcome {
    for n in 1..=max_n {
        let mut seen = BTreeSet::new();
        for mask in 0..dim(n) {
            let k = SubsetKey::new(mask, n).expect("valid mask");
            for p in observable_set(&k) {
                if !seen.insert(p) {
                    return CheckOutcome::fail(
                        "pauli-partition",
                        format!("{p} appears in two subsets at n={n}"),
                    );
                }
            }
        }
        if seen.len() != dim(n) * dim(n) {
            return CheckOutcome::fail(
                "pauli-partition",
                format!("n={n}: {} of {} strings covered", seen.len(), dim(n) * dim(n)),
            );
        }
    }
    CheckOutcome::pass(
        "pauli-partition",
        format!("subsets tile all 4^N Pauli strings exactly once (N<={max_n})"),
    )
}

fn check_subset_closure(max_n: usize) -> CheckOutcome {
    for n in 1..=max_n {
        for mask in 0..dim(n) {
            let k = SubsetKey::new(mask, n).expect("valid mask");
            let members = elements_of_subset(&k);
            if members.len() != dim(n) {
                return CheckOutcome::fail(
                    "subset-closure",
                    format!("{} has {} members at n={n}", k.name(), members.len()),
                );
            }
            let set: BTreeSet<(usize, usize)> =
                members.iter().map(|e| (e.row(), e.col())).collect();
            for e in &members {
                if e.row() ^ e.col() != mask {
                    return CheckOutcome::fail(
                        "subset-closure",
                        format!("member of {} has wrong parity", k.name()),
                    );
                }
                for flip in 0..dim(n) {
                    if !set.contains(&(e.row() ^ flip, e.col() ^ flip)) {
                        return CheckOutcome::fail(
                            "subset-closure",
                            format!("{} not closed under bit flips", k.name()),
                        );
                    }
                }
            }
        }
    }
    CheckOutcome::pass(
        "subset-closure",
        format!("2^N members per subset, closed under simultaneous bit flips (N<={max_n})"),
    )
}

fn check_commutation_symplectic(max_n: usize) -> CheckOutcome {
    for n in 1..=max_n {
        for mask in 0..dim(n) {
            let k = SubsetKey::new(mask, n).expect("valid mask");
            let split = eo_split(&k);
            for (label, half) in [("even", &split.even), ("odd", &split.odd)] {
                for (i, a) in half.iter().enumerate() {
                    for b in &half[i + 1..] {
                        if !a.commutes_with(b) {
                            return CheckOutcome::fail(
                                "commutation",
                                format!("{label} half of {} at n={n}: [{a}, {b}] != 0", k.name()),
                            );
                        }
                    }
                }
            }
            for a in &split.even {
                for b in &split.odd {
                    if a.symplectic_product(b, mask) != 1 {
                        return CheckOutcome::fail(
                            "commutation",
                            format!("{} at n={n}: {a} and {b} commute on the block", k.name()),
                        );
                    }
                }
            }
        }
    }
    CheckOutcome::pass(
        "commutation",
        format!("intra-half commutation and cross-half block anti-commutation (N<={max_n})"),
    )
}

fn check_commutation_dense(max_n: usize) -> CheckOutcome {
    for n in 1..=max_n {
        for mask in 0..dim(n) {
            let k = SubsetKey::new(mask, n).expect("valid mask");
            let split = eo_split(&k);
            for half in [&split.even, &split.odd] {
                for (i, a) in half.iter().enumerate() {
                    for b in &half[i..] {
                        let ma = a.matrix();
                        let mb = b.matrix();
                        let comm = &ma * &mb - &mb * &ma;
                        if comm.iter().any(|c| c.norm() > 1e-12) {
                            return CheckOutcome::fail(
                                "commutation-dense",
                                format!("[{a}, {b}] != 0 at n={n}"),
                            );
                        }
                    }
                }
            }
        }
    }
    CheckOutcome::pass(
        "commutation-dense",
        format!("matrix commutators vanish inside both halves (N<={max_n})"),
    )
}

fn check_eigenbasis_contract(max_n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        for mask in 0..dim(n) {
            let k = SubsetKey::new(mask, n).expect("valid mask");
            for schedule in [Connectivity::Chain, Connectivity::AllToAll] {
                match eigenbasis_contract_deviation(&k, schedule) {
                    Ok(dev) => worst = worst.max(dev),
                    Err(e) => return CheckOutcome::fail("eigenbasis-contract", e.to_string()),
                }
            }
        }
    }
    if worst < 1e-10 {
        CheckOutcome::pass(
            "eigenbasis-contract",
            format!("max deviation {worst:.2e} over all subsets and schedules (N<={max_n})"),
        )
    } else {
        CheckOutcome::fail("eigenbasis-contract", format!("max deviation {worst:.2e}"))
    }
}

fn projector_deviation(e: &ElementIndex) -> f64 {
    let d = dim(e.n_qubits());
    let decomposition = decompose_projector(e);
    let mut rebuilt = DMatrix::<Complex64>::zeros(d, d);
    for (p, a) in &decomposition.terms {
        for col in 0..d {
            let (row, phase) = p.apply_to_basis(col);
            rebuilt[(row, col)] += a * phase;
        }
    }
    let mut worst: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let expect = if r == e.col() && c == e.row() { 1.0 } else { 0.0 };
            worst = worst.max((rebuilt[(r, c)] - Complex64::new(expect, 0.0)).norm());
        }
    }
    worst
}

fn check_projector_round_trip(max_exhaustive_n: usize, random_elements: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for n in 1..=max_exhaustive_n {
        for row in 0..dim(n) {
            for col in 0..dim(n) {
                let e = ElementIndex::new(row, col, n).expect("in range");
                worst = worst.max(projector_deviation(&e));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20260808);
    for n in (max_exhaustive_n + 1)..=8 {
        for _ in 0..random_elements {
            let row = rng.random_range(0..dim(n));
            let col = rng.random_range(0..dim(n));
            let e = ElementIndex::new(row, col, n).expect("in range");
            worst = worst.max(projector_deviation(&e));
        }
    }
    if worst < 1e-12 {
        CheckOutcome::pass(
            "projector-round-trip",
            format!(
                "max reconstruction deviation {worst:.2e} (exhaustive N<={max_exhaustive_n}, random N<=8)"
            ),
        )
    } else {
        CheckOutcome::fail("projector-round-trip", format!("deviation {worst:.2e}"))
    }
}

fn check_unitarity(max_n: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        for mask in 0..dim(n) {
            let k = SubsetKey::new(mask, n).expect("valid mask");
            for schedule in [Connectivity::Chain, Connectivity::AllToAll] {
                let circuits = match build_subset_circuits(&k, schedule) {
                    Ok(c) => c,
                    Err(e) => return CheckOutcome::fail("unitarity", e.to_string()),
                };
                for c in circuits {
                    let u = match circuit_unitary(&c) {
                        Ok(u) => u,
                        Err(e) => return CheckOutcome::fail("unitarity", e.to_string()),
                    };
                    let gram = u.adjoint() * &u;
                    let d = gram.nrows();
                    for r in 0..d {
                        for col in 0..d {
                            let expect = if r == col { 1.0 } else { 0.0 };
                            worst =
                                worst.max((gram[(r, col)] - Complex64::new(expect, 0.0)).norm());
                        }
                    }
                }
            }
        }
    }
    if worst < 1e-10 {
        CheckOutcome::pass(
            "unitarity",
            format!("max |U^dag U - I| = {worst:.2e} (N<={max_n})"),
        )
    } else {
        CheckOutcome::fail("unitarity", format!("max |U^dag U - I| = {worst:.2e}"))
    }
}

/// Run the whole suite.
pub fn run_all(options: &VerifyOptions) -> Vec<CheckOutcome> {
    vec![
        check_plan_counts(),
        check_basis_partition(options.max_symplectic_n.min(8)),
        check_subset_closure(options.max_dense_n.max(3)),
        check_commutation_symplectic(options.max_symplectic_n),
        check_commutation_dense(options.max_dense_n),
        check_eigenbasis_contract(options.max_contract_n),
        check_projector_round_trip(options.max_dense_n, options.random_projector_elements),
        check_unitarity(options.max_dense_n),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let opts = VerifyOptions {
            max_symplectic_n: 6,
            max_dense_n: 3,
            max_contract_n: 3,
            random_projector_elements: 20,
        };
        for outcome in run_all(&opts) {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.details);
        }
    }
}
