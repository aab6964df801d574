//! N-qubit Pauli strings in the symplectic (x, z) bit representation.
//!
//! A string is stored as two bit masks over the basis-index convention of
//! [`crate::bits`]: bit of qubit l is set in `x` when the letter on l has an
//! X component (X or Y) and set in `z` when it has a Z component (Z or Y).
//! Every Pauli matrix is a signed permutation, so products with states and
//! traces against matrices reduce to bit arithmetic.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bits::{bit_pos, dim, parity_sign};
use crate::error::{Error, Result};

/// One single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    fn from_xz(x: usize, z: usize) -> Self {
        match (x, z) {
            (0, 0) => PauliLetter::I,
            (1, 0) => PauliLetter::X,
            (1, 1) => PauliLetter::Y,
            (0, 1) => PauliLetter::Z,
            _ => unreachable!(),
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// An N-qubit tensor product of {I, X, Y, Z}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: usize,
    z: usize,
}

impl PauliString {
    pub fn from_masks(n_qubits: usize, x: usize, z: usize) -> Result<Self> {
        let full = dim(n_qubits) - 1;
        if x & !full != 0 || z & !full != 0 {
            return Err(Error::MaskOutOfRange {
                mask: x | z,
                n_qubits,
            });
        }
        Ok(Self { n_qubits, x, z })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x: 0, z: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Mask of qubits carrying an X component (X or Y).
    pub fn x_mask(&self) -> usize {
        self.x
    }

    /// Mask of qubits carrying a Z component (Z or Y).
    pub fn z_mask(&self) -> usize {
        self.z
    }

    /// Mask of qubits carrying a non-identity letter.
    pub fn support(&self) -> usize {
        self.x | self.z
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        let pos = bit_pos(qubit, self.n_qubits);
        PauliLetter::from_xz((self.x >> pos) & 1, (self.z >> pos) & 1)
    }

    pub fn letters(&self) -> Vec<PauliLetter> {
        (1..=self.n_qubits).map(|q| self.letter(q)).collect()
    }

    /// Number of Y letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// True when the two strings commute (symplectic product is 0).
    pub fn commutes_with(&self, other: &Self) -> bool {
        self.symplectic_product(other, usize::MAX) == 0
    }

    /// Symplectic product restricted to the qubits in `mask`
    /// (`usize::MAX` for all qubits). 0 means commuting, 1 anti-commuting,
    /// when both strings are supported inside `mask`.
    pub fn symplectic_product(&self, other: &Self, mask: usize) -> u32 {
        let a = (self.x & other.z & mask).count_ones();
        let b = (self.z & other.x & mask).count_ones();
        (a + b) % 2
    }

    /// The action on a basis state: P |idx> = phase * |idx ^ x_mask>.
    ///
    /// The phase is i^y_count * (-1)^popcount(idx & z_mask); it is returned
    /// as an exact complex unit.
    pub fn apply_to_basis(&self, idx: usize) -> (usize, Complex64) {
        let sign = parity_sign(idx & self.z);
        let phase = match self.y_count() % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        };
        (idx ^ self.x, phase)
    }

    /// Matrix entry P[row, col]; nonzero only when row == col ^ x_mask.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        if row != col ^ self.x {
            return Complex64::new(0.0, 0.0);
        }
        self.apply_to_basis(col).1
    }

    /// Dense matrix, for small-N checks.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = dim(self.n_qubits);
        let mut m = DMatrix::zeros(d, d);
        for col in 0..d {
            let (row, phase) = self.apply_to_basis(col);
            m[(row, col)] = phase;
        }
        m
    }

    /// tr(rho * P) evaluated sparsely.
    pub fn trace_with(&self, rho: &DMatrix<Complex64>) -> Complex64 {
        let d = rho.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..d {
            let (row, phase) = self.apply_to_basis(col);
            // (rho * P)[col, col] = rho[col, row] * P[row, col]
            acc += rho[(col, row)] * phase;
        }
        acc
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 1..=self.n_qubits {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.len();
        if n == 0 {
            return Err(Error::EmptyInput("Pauli string"));
        }
        let mut x = 0usize;
        let mut z = 0usize;
        for c in s.chars() {
            x <<= 1;
            z <<= 1;
            match c {
                'I' => {}
                'X' => x |= 1,
                'Y' => {
                    x |= 1;
                    z |= 1;
                }
                'Z' => z |= 1,
                _ => return Err(Error::InvalidGate(format!("Pauli letter {c:?}"))),
            }
        }
        Ok(Self { n_qubits: n, x, z })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn display_round_trip() {
        for s in ["I", "XZ", "YI", "XYZI", "ZZZZZ"] {
            assert_eq!(p(s).to_string(), s);
        }
    }

    #[test]
    fn masks_follow_msb_convention() {
        let xz = p("XZ");
        assert_eq!(xz.x_mask(), 0b10);
        assert_eq!(xz.z_mask(), 0b01);
        assert_eq!(xz.letter(1), PauliLetter::X);
        assert_eq!(xz.letter(2), PauliLetter::Z);
    }

    #[test]
    fn single_qubit_matrices() {
        let i = Complex64::new(0.0, 1.0);
        let y = p("Y").matrix();
        assert_eq!(y[(0, 1)], -i);
        assert_eq!(y[(1, 0)], i);
        let z = p("Z").matrix();
        assert_eq!(z[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn symplectic_matches_matrix_commutator() {
        let strings = ["II", "XI", "YZ", "ZZ", "XY", "YY", "IZ", "ZX"];
        for a in strings {
            for b in strings {
                let pa = p(a);
                let pb = p(b);
                let ma = pa.matrix();
                let mb = pb.matrix();
                let comm = &ma * &mb - &mb * &ma;
                let commutes = comm.iter().all(|c| c.norm() < 1e-12);
                assert_eq!(
                    pa.commutes_with(&pb),
                    commutes,
                    "commutation mismatch for {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn trace_with_matches_dense() {
        let rho = DMatrix::from_fn(4, 4, |r, c| Complex64::new((r + 2 * c) as f64, r as f64 - c as f64));
        for s in ["II", "XZ", "YX", "ZY", "IY"] {
            let dense = (&rho * p(s).matrix()).trace();
            let sparse = p(s).trace_with(&rho);
            assert!((dense - sparse).norm() < 1e-12, "{s}");
        }
    }
}
