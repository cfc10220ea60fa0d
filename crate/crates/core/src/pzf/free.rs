//! Packing of the free entries of the equivalent channels into one vector.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::ZeroPattern;

/// The non-forced entries of `A^(1) .. A^(N-1)`, row-major per slot with the
/// pattern positions skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeVector {
    slots: Vec<Vec<Complex64>>,
}

impl FreeVector {
    pub fn from_slots(slots: Vec<Vec<Complex64>>, pattern: &ZeroPattern) -> Result<Self> {
        if slots.len() != pattern.n_slots() {
            return Err(Error::LengthMismatch {
                expected: pattern.n_slots(),
                got: slots.len(),
            });
        }
        for (n, x) in slots.iter().enumerate() {
            let expected = pattern.free_in_slot(n + 1);
            if x.len() != expected {
                return Err(Error::LengthMismatch {
                    expected,
                    got: x.len(),
                });
            }
        }
        Ok(FreeVector { slots })
    }

    /// Splits a concatenated vector `[x^(1), .., x^(N-1)]` by slot.
    pub fn from_concatenated(x: &[Complex64], pattern: &ZeroPattern) -> Result<Self> {
        let total = total_free(pattern);
        if x.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                got: x.len(),
            });
        }
        let mut offset = 0;
        let slots = (1..=pattern.n_slots())
            .map(|n| {
                let len = pattern.free_in_slot(n);
                let part = x[offset..offset + len].to_vec();
                offset += len;
                part
            })
            .collect();
        Ok(FreeVector { slots })
    }

    pub fn zeros(pattern: &ZeroPattern) -> Self {
        FreeVector {
            slots: (1..=pattern.n_slots())
                .map(|n| vec![Complex64::new(0.0, 0.0); pattern.free_in_slot(n)])
                .collect(),
        }
    }

    /// `x^(n)` for 1-based slot `n`.
    pub fn slot(&self, n: usize) -> &[Complex64] {
        &self.slots[n - 1]
    }

    pub fn slots(&self) -> &[Vec<Complex64>] {
        &self.slots
    }

    pub fn into_slots(self) -> Vec<Vec<Complex64>> {
        self.slots
    }

    /// `W`, the total number of free entries.
    pub fn len(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn concatenated(&self) -> Vec<Complex64> {
        self.slots.iter().flatten().copied().collect()
    }
}

/// Total number of free entries over all slots.
pub fn total_free(pattern: &ZeroPattern) -> usize {
    (1..=pattern.n_slots()).map(|n| pattern.free_in_slot(n)).sum()
}

/// Row-major free entries of one `N x N` matrix (flat row-major input).
pub(crate) fn pack_slot(a: &[Complex64], mask: &[bool]) -> Vec<Complex64> {
    a.iter()
        .zip(mask)
        .filter(|(_, zero)| !**zero)
        .map(|(v, _)| *v)
        .collect()
}

/// Writes `x` into the free positions of a flat row-major matrix, zeros elsewhere.
pub(crate) fn unpack_slot_into(x: &[Complex64], mask: &[bool], out: &mut [Complex64]) {
    let mut it = x.iter();
    for (o, zero) in out.iter_mut().zip(mask) {
        *o = if *zero {
            Complex64::new(0.0, 0.0)
        } else {
            *it.next().expect("free vector shorter than pattern")
        };
    }
}

pub(crate) fn to_flat(a: &CMatrix) -> Vec<Complex64> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..a.ncols() {
            out.push(a[(r, c)]);
        }
    }
    out
}

pub(crate) fn from_flat(a: &[Complex64], n: usize) -> CMatrix {
    CMatrix::from_row_slice(n, n, a)
}

/// Collects the free entries of `A^(1) .. A^(N-1)`.
pub fn pack(matrices: &[CMatrix], pattern: &ZeroPattern) -> Result<FreeVector> {
    let n = pattern.n_users();
    if matrices.len() != pattern.n_slots() {
        return Err(Error::LengthMismatch {
            expected: pattern.n_slots(),
            got: matrices.len(),
        });
    }
    if let Some(bad) = matrices.iter().find(|a| a.nrows() != n || a.ncols() != n) {
        return Err(Error::DimensionMismatch(format!(
            "equivalent channel is {}x{}, expected {n}x{n}",
            bad.nrows(),
            bad.ncols()
        )));
    }
    let slots = matrices
        .iter()
        .enumerate()
        .map(|(slot, a)| pack_slot(&to_flat(a), pattern.mask0(slot)))
        .collect();
    Ok(FreeVector { slots })
}

/// Rebuilds `A^(1) .. A^(N-1)` with zeros at the pattern positions.
pub fn unpack(x: &FreeVector, pattern: &ZeroPattern) -> Result<Vec<CMatrix>> {
    let n = pattern.n_users();
    FreeVector::from_slots(x.slots.clone(), pattern)?;
    Ok(x.slots
        .iter()
        .enumerate()
        .map(|(slot, xs)| {
            let mut flat = vec![Complex64::new(0.0, 0.0); n * n];
            unpack_slot_into(xs, pattern.mask0(slot), &mut flat);
            from_flat(&flat, n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{zero_pattern, NetworkConfig, Strategy as BcStrategy};
    use proptest::prelude::*;

    fn pattern(n: usize) -> ZeroPattern {
        zero_pattern(&NetworkConfig::new(n, n).unwrap())
    }

    #[test]
    fn lengths_for_three_users() {
        let p = pattern(3);
        assert_eq!(p.free_in_slot(1), 6);
        assert_eq!(p.free_in_slot(2), 9);
        assert_eq!(total_free(&p), 15);
    }

    #[test]
    fn counting_formulas_hold() {
        for n in 2..=8 {
            let p = pattern(n);
            for slot in 1..n {
                assert_eq!(p.free_in_slot(slot), (slot + 1) * n);
            }
            assert_eq!(total_free(&p), (n + 2) * n * (n - 1) / 2);
        }
    }

    #[test]
    fn hybrid_lengths_follow_pattern() {
        let c = NetworkConfig::new(4, 4)
            .unwrap()
            .with_strategy(BcStrategy::HybridUniMulticast {
                unicast_source: 2,
                multicast_order: vec![4, 1, 3],
            })
            .unwrap();
        let p = zero_pattern(&c);
        for slot in 1..4 {
            assert_eq!(p.free_in_slot(slot), 16 - p.zeros_in_slot(slot));
        }
    }

    #[test]
    fn zero_vector_unpacks_to_zero_matrices() {
        let p = pattern(4);
        for a in unpack(&FreeVector::zeros(&p), &p).unwrap() {
            assert!(a.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn length_errors() {
        let p = pattern(3);
        let short = vec![Complex64::new(1.0, 0.0); 14];
        assert_eq!(
            FreeVector::from_concatenated(&short, &p),
            Err(Error::LengthMismatch {
                expected: 15,
                got: 14
            })
        );
        assert!(pack(&[CMatrix::zeros(3, 3)], &p).is_err());
    }

    fn arb_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), len)
            .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
    }

    fn arb_input() -> impl Strategy<Value = (usize, Vec<Complex64>)> {
        (2usize..7).prop_flat_map(|n| (Just(n), arb_vec(total_free(&pattern(n)))))
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip((n, x) in arb_input()) {
            let p = pattern(n);
            let fv = FreeVector::from_concatenated(&x, &p).unwrap();
            let mats = unpack(&fv, &p).unwrap();
            for (i, j, slot) in p.tuples() {
                prop_assert_eq!(mats[slot - 1][(i - 1, j - 1)], Complex64::new(0.0, 0.0));
            }
            let back = pack(&mats, &p).unwrap();
            prop_assert_eq!(back.concatenated(), x);
            prop_assert_eq!(unpack(&back, &p).unwrap(), mats);
        }
    }
}
