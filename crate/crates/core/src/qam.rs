//! Square Gray-labelled QAM with unit average energy.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Qam {
    order: usize,
    bits_per_axis: u32,
    levels: usize,
    spacing: f64,
}

fn gray(j: usize) -> usize {
    j ^ (j >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut j = g;
    while g > 1 {
        g >>= 1;
        j ^= g;
    }
    j
}

impl Qam {
    /// `order` must be an even power of two (4, 16, 64, ...).
    pub fn new(order: usize) -> Result<Self> {
        let bits = order.trailing_zeros();
        if order < 4 || !order.is_power_of_two() || !bits.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "QAM order must be 4, 16, 64, ..., got {order}"
            )));
        }
        let levels = 1usize << (bits / 2);
        Ok(Qam {
            order,
            bits_per_axis: bits / 2,
            levels,
            // mean of (2j - L + 1)^2 over j is (L^2 - 1) / 3 per axis
            spacing: (3.0 / (2.0 * (order as f64 - 1.0))).sqrt(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis as usize
    }

    fn amplitude(&self, level: usize) -> f64 {
        (2.0 * level as f64 - (self.levels as f64 - 1.0)) * self.spacing
    }

    fn nearest_level(&self, v: f64) -> usize {
        let j = ((v / self.spacing + self.levels as f64 - 1.0) / 2.0).round();
        j.clamp(0.0, (self.levels - 1) as f64) as usize
    }

    /// Constellation point of a symbol label in `0..order`. The high half of
    /// the label's bits selects the in-phase level, the low half the quadrature.
    pub fn point(&self, label: usize) -> Complex64 {
        debug_assert!(label < self.order);
        let mask = self.levels - 1;
        let i = gray_inverse(label >> self.bits_per_axis);
        let q = gray_inverse(label & mask);
        Complex64::new(self.amplitude(i), self.amplitude(q))
    }

    /// Label of the nearest constellation point.
    pub fn nearest(&self, z: Complex64) -> usize {
        let i = gray(self.nearest_level(z.re));
        let q = gray(self.nearest_level(z.im));
        (i << self.bits_per_axis) | q
    }

    /// Maps `bits_per_symbol()` bits, most significant first.
    pub fn map(&self, bits: &[bool]) -> Result<Complex64> {
        if bits.len() != self.bits_per_symbol() {
            return Err(Error::LengthMismatch {
                expected: self.bits_per_symbol(),
                got: bits.len(),
            });
        }
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Ok(self.point(label))
    }

    /// Nearest-neighbour hard decision, most significant bit first.
    pub fn demap(&self, z: Complex64) -> Vec<bool> {
        let label = self.nearest(z);
        (0..self.bits_per_symbol())
            .rev()
            .map(|b| (label >> b) & 1 == 1)
            .collect()
    }
}

impl Default for Qam {
    fn default() -> Self {
        Qam::new(4).expect("4-QAM is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn four_qam_round_trips() {
        let qam = Qam::default();
        for label in 0..4 {
            let bits = [label & 2 == 2, label & 1 == 1];
            let z = qam.map(&bits).unwrap();
            assert_eq!(qam.demap(z), bits.to_vec());
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_average_energy() {
        for order in [4, 16, 64, 256] {
            let qam = Qam::new(order).unwrap();
            let e: f64 = (0..order).map(|l| qam.point(l).norm_sqr()).sum::<f64>() / order as f64;
            assert!((e - 1.0).abs() < 1e-12, "order {order}: {e}");
        }
    }

    #[test]
    fn neighbours_differ_in_one_bit() {
        let qam = Qam::new(16).unwrap();
        let d = 2.0 * (3.0f64 / 30.0).sqrt();
        for a in 0..16 {
            for b in 0..16 {
                if ((qam.point(a) - qam.point(b)).norm() - d).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn every_label_is_its_own_nearest_point() {
        for order in [4, 16, 64] {
            let qam = Qam::new(order).unwrap();
            for l in 0..order {
                assert_eq!(qam.nearest(qam.point(l) * 0.999), l);
            }
        }
    }

    #[test]
    fn invalid_orders() {
        for order in [0, 2, 8, 12, 32] {
            assert!(Qam::new(order).is_err());
        }
        assert!(Qam::default().map(&[true]).is_err());
    }

    #[test]
    fn awgn_ser_matches_closed_form() {
        let qam = Qam::default();
        let es_n0: f64 = 10.0;
        let sigma = (0.5 / es_n0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let mut errors = 0;
        for _ in 0..n {
            let label = rng.random_range(0..4);
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            let r = qam.point(label) + Complex64::new(nr, ni) * sigma;
            if qam.nearest(r) != label {
                errors += 1;
            }
        }
        let q = 0.5 * statrs::function::erf::erfc(es_n0.sqrt() / std::f64::consts::SQRT_2);
        let expected = 2.0 * q - q * q;
        let ser = errors as f64 / n as f64;
        assert!((ser - expected).abs() < 0.1 * expected, "{ser} vs {expected}");
    }
}
