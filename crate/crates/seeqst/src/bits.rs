//! Bit-level helpers shared across the crate.
//!
//! Qubits are labeled 1..=N and qubit 1 is the most significant bit of a
//! basis-state index, so the index of |b_1 b_2 ... b_N> is the integer with
//! binary digits b_1 b_2 ... b_N read left to right. Bitstrings use the same
//! order: character 1 (leftmost) is qubit 1.

use crate::error::{Error, Result};

/// Hilbert-space dimension 2^n.
pub fn dim(n_qubits: usize) -> usize {
    1usize << n_qubits
}

/// Bit position (shift amount) of qubit `q` in an N-qubit index.
pub fn bit_pos(q: usize, n_qubits: usize) -> usize {
    debug_assert!(q >= 1 && q <= n_qubits);
    n_qubits - q
}

/// Value (0 or 1) of qubit `q` in basis index `idx`.
pub fn bit_of(idx: usize, q: usize, n_qubits: usize) -> usize {
    (idx >> bit_pos(q, n_qubits)) & 1
}

/// Parity sign (-1)^popcount(x).
pub fn parity_sign(x: usize) -> f64 {
    if x.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Render a basis index as an N-character bitstring, qubit 1 leftmost.
pub fn format_bitstring(idx: usize, n_qubits: usize) -> String {
    (1..=n_qubits)
        .map(|q| if bit_of(idx, q, n_qubits) == 1 { '1' } else { '0' })
        .collect()
}

/// Parse an N-character bitstring back into a basis index.
pub fn parse_bitstring(s: &str, n_qubits: usize) -> Result<usize> {
    if s.len() != n_qubits {
        return Err(Error::InvalidBitstring(s.to_string(), n_qubits));
    }
    let mut idx = 0usize;
    for c in s.chars() {
        idx <<= 1;
        match c {
            '0' => {}
            '1' => idx |= 1,
            _ => return Err(Error::InvalidBitstring(s.to_string(), n_qubits)),
        }
    }
    Ok(idx)
}

/// FNV-1a 64-bit hash, used to derive per-circuit RNG streams and to tag
/// output files with a manifest fingerprint. Stable across platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_one_is_most_significant() {
        // idx 5 for 3 qubits is 101: qubit 1 -> 1, qubit 2 -> 0, qubit 3 -> 1
        assert_eq!(bit_of(5, 1, 3), 1);
        assert_eq!(bit_of(5, 2, 3), 0);
        assert_eq!(bit_of(5, 3, 3), 1);
        assert_eq!(format_bitstring(5, 3), "101");
    }

    #[test]
    fn bitstring_round_trip() {
        for n in 1..=6 {
            for idx in 0..dim(n) {
                let s = format_bitstring(idx, n);
                assert_eq!(parse_bitstring(&s, n).unwrap(), idx);
            }
        }
    }

    #[test]
    fn rejects_bad_bitstrings() {
        assert!(parse_bitstring("01", 3).is_err());
        assert!(parse_bitstring("0a1", 3).is_err());
    }

    #[test]
    fn fnv_is_stable() {
        // Reference value for the empty input per the FNV-1a definition.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_ne!(fnv1a64(b"EVEN"), fnv1a64(b"ODD"));
    }
}
