//! Parity classification of density-matrix elements.
//!
//! An N-qubit density matrix splits into 2^N subsets of 2^N elements each:
//! the subset of element (row, col) is identified by the mask row XOR col,
//! which flags the qubits whose row/col bits differ. Each subset has a
//! 2^N-element Pauli observable set that splits into two mutually commuting
//! halves by Y-letter parity, so two measurement settings recover every
//! element of the subset.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::bits::dim;
use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Position (row, col) of one density-matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementIndex {
    row: usize,
    col: usize,
    n_qubits: usize,
}

impl ElementIndex {
    pub fn new(row: usize, col: usize, n_qubits: usize) -> Result<Self> {
        let d = dim(n_qubits);
        if n_qubits == 0 || row >= d || col >= d {
            return Err(Error::IndexOutOfRange { row, col, n_qubits });
        }
        Ok(Self { row, col, n_qubits })
    }

    pub fn row(&self) -> usize {
        self.row
    }

    pub fn col(&self) -> usize {
        self.col
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// The element with row and col swapped (its Hermitian partner).
    pub fn transposed(&self) -> Self {
        Self {
            row: self.col,
            col: self.row,
            n_qubits: self.n_qubits,
        }
    }
}

/// N-bit parity mask identifying one of the 2^N subsets.
///
/// Bit of qubit l is set exactly when the row and col bits of that qubit
/// differ. The traditional subset name is S_k with k = mask + 1, so S_1 is
/// the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetKey {
    mask: usize,
    n_qubits: usize,
}

impl SubsetKey {
    pub fn new(mask: usize, n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || mask >= dim(n_qubits) {
            return Err(Error::MaskOutOfRange { mask, n_qubits });
        }
        Ok(Self { mask, n_qubits })
    }

    pub fn mask(&self) -> usize {
        self.mask
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of off-diagonal qubits M.
    pub fn block_size(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// True for the diagonal subset (mask 0).
    pub fn is_diagonal(&self) -> bool {
        self.mask == 0
    }

    /// Reporting name "S_k" with k = mask + 1.
    pub fn name(&self) -> String {
        format!("S_{}", self.mask + 1)
    }

    /// Qubit labels (1-based, ascending) whose parity differs.
    pub fn off_diagonal_qubits(&self) -> Vec<usize> {
        (1..=self.n_qubits)
            .filter(|&q| (self.mask >> (self.n_qubits - q)) & 1 == 1)
            .collect()
    }
}

/// The even-Y / odd-Y split of a subset's observable set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservableSplit {
    pub even: Vec<PauliString>,
    pub odd: Vec<PauliString>,
}

/// Expansion of |col><row| over the subset's observable set.
#[derive(Debug, Clone)]
pub struct ProjectorDecomposition {
    pub element: ElementIndex,
    pub terms: BTreeMap<PauliString, Complex64>,
}

/// Subset of the element: mask = row XOR col.
pub fn subset_of_element(e: &ElementIndex) -> SubsetKey {
    SubsetKey {
        mask: e.row ^ e.col,
        n_qubits: e.n_qubits,
    }
}

/// All 2^N elements (row, row XOR mask) of the subset, row ascending.
pub fn elements_of_subset(k: &SubsetKey) -> Vec<ElementIndex> {
    (0..dim(k.n_qubits))
        .map(|row| ElementIndex {
            row,
            col: row ^ k.mask,
            n_qubits: k.n_qubits,
        })
        .collect()
}

/// The 2^N Pauli strings supporting the subset: {I,Z} on same-parity
/// qubits, {X,Y} on differing-parity qubits. Enumerated with the Z/Y
/// pattern ascending, which reads as a per-qubit Cartesian product with
/// (I before Z) and (X before Y), leftmost qubit outermost.
pub fn observable_set(k: &SubsetKey) -> Vec<PauliString> {
    (0..dim(k.n_qubits))
        .map(|z| PauliString::from_masks(k.n_qubits, k.mask, z).expect("mask in range"))
        .collect()
}

/// Split the observable set by Y-count parity. Both halves are mutually
/// commuting; restricted to the off-diagonal qubits, members of opposite
/// halves anti-commute.
pub fn eo_split(k: &SubsetKey) -> ObservableSplit {
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for p in observable_set(k) {
        if p.y_count() % 2 == 0 {
            even.push(p);
        } else {
            odd.push(p);
        }
    }
    ObservableSplit { even, odd }
}

/// Expand |col><row| as sum_P a_P P with a_P = tr(|col><row| P) / 2^N.
/// Only the element's subset observables receive nonzero coefficients.
pub fn decompose_projector(e: &ElementIndex) -> ProjectorDecomposition {
    let k = subset_of_element(e);
    let d = dim(e.n_qubits) as f64;
    let mut terms = BTreeMap::new();
    for p in observable_set(&k) {
        // tr(|col><row| P) = <row| P |col> = P[row, col]
        let coeff = p.entry(e.row, e.col) / d;
        debug_assert!(coeff.norm() > 0.0);
        terms.insert(p, coeff);
    }
    ProjectorDecomposition { element: *e, terms }
}

/// Deduplicated subset keys covering the requested elements, mask ascending.
pub fn plan_subsets(elements: &[ElementIndex]) -> Result<Vec<SubsetKey>> {
    if elements.is_empty() {
        return Err(Error::EmptyInput("element list"));
    }
    let n = elements[0].n_qubits;
    let mut masks: Vec<usize> = Vec::new();
    for e in elements {
        if e.n_qubits != n {
            return Err(Error::MixedQubitCounts(n, e.n_qubits));
        }
        masks.push(e.row ^ e.col);
    }
    masks.sort_unstable();
    masks.dedup();
    Ok(masks
        .into_iter()
        .map(|mask| SubsetKey { mask, n_qubits: n })
        .collect())
}

/// Prune the subset plan with a significance threshold on the measured
/// diagonal: keep a subset only if one of its requested elements (i, j)
/// satisfies sqrt(rho_ii * rho_jj) >= t. The diagonal subset is always kept
/// when requested.
pub fn threshold_plan(
    diagonal: &[f64],
    elements: &[ElementIndex],
    t: f64,
) -> Result<Vec<SubsetKey>> {
    if t < 0.0 {
        return Err(Error::NegativeThreshold(t));
    }
    let all = plan_subsets(elements)?;
    let n = elements[0].n_qubits;
    let d = dim(n);
    if diagonal.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: diagonal.len(),
        });
    }
    if let Some(&bad) = diagonal.iter().find(|&&p| p < -1e-9) {
        return Err(Error::InvalidProbabilities(format!(
            "negative diagonal entry {bad}"
        )));
    }
    let total: f64 = diagonal.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidProbabilities(format!(
            "diagonal sums to {total}, expected 1"
        )));
    }

    let kept = all
        .into_iter()
        .filter(|k| {
            if k.is_diagonal() {
                return true;
            }
            elements
                .iter()
                .filter(|e| e.row ^ e.col == k.mask)
                .any(|e| {
                    let p = diagonal[e.row].max(0.0) * diagonal[e.col].max(0.0);
                    p.sqrt() >= t
                })
        })
        .collect();
    Ok(kept)
}
