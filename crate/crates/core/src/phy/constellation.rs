//! Symbol alphabets and bit mappings.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Ordered unit-mean-power symbol alphabet with per-symbol bit labels.
///
/// Real alphabets (BPSK) have `signal_dim() == 1`, complex ones (QPSK)
/// `signal_dim() == 2`. Bit labels follow the usual conventions: BPSK maps
/// bit 0 to `+1` and bit 1 to `-1`; QPSK is Gray-labeled on
/// `(+-1 +- j)/sqrt(2)` with bit 0 on the real axis sign and bit 1 on the
/// imaginary axis sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<Vec<u8>>,
    bits_per_symbol: usize,
    signal_dim: usize,
}

impl Constellation {
    /// Builds and validates an alphabet: `2^bits_per_symbol` points, unit
    /// mean power within `1e-12`, distinct labels.
    pub fn new(
        points: Vec<Complex64>,
        labels: Vec<Vec<u8>>,
        bits_per_symbol: usize,
        signal_dim: usize,
    ) -> Result<Self> {
        let m = 1usize << bits_per_symbol;
        if points.len() != m || labels.len() != m {
            return Err(Error::InvalidConfig(format!(
                "expected {m} points and labels for {bits_per_symbol} bits/symbol"
            )));
        }
        if !(signal_dim == 1 || signal_dim == 2) {
            return Err(Error::InvalidConfig("signal dimension must be 1 or 2".into()));
        }
        let mean_power: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
        if (mean_power - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "mean symbol power {mean_power} != 1"
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.len() != bits_per_symbol || l.iter().any(|&b| b > 1) {
                return Err(Error::InvalidConfig(format!("bad label at index {i}")));
            }
            if labels[..i].contains(l) {
                return Err(Error::InvalidConfig(format!("duplicate label at index {i}")));
            }
        }
        Ok(Constellation {
            points,
            labels,
            bits_per_symbol,
            signal_dim,
        })
    }

    /// Binary phase-shift keying: `+1` labeled 0, `-1` labeled 1.
    pub fn bpsk() -> Self {
        Constellation::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            vec![vec![0], vec![1]],
            1,
            1,
        )
        .expect("bpsk alphabet is valid")
    }

    /// Gray-labeled QPSK on `(+-1 +- j)/sqrt(2)`.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Constellation::new(
            vec![
                Complex64::new(a, a),
                Complex64::new(a, -a),
                Complex64::new(-a, a),
                Complex64::new(-a, -a),
            ],
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            2,
            2,
        )
        .expect("qpsk alphabet is valid")
    }

    /// Number of constellation points `M`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// 1 for real alphabets, 2 for complex ones.
    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit label of the point at `index`.
    pub fn label(&self, index: usize) -> &[u8] {
        &self.labels[index]
    }

    /// Index of a symbol, rejecting values that are not constellation points.
    pub fn index_of(&self, symbol: Complex64) -> Result<usize> {
        self.points
            .iter()
            .position(|p| (p - symbol).norm() < 1e-9)
            .ok_or_else(|| Error::InvalidInput(format!("{symbol} is not a constellation point")))
    }

    /// Maps a bit string to symbols; its length must divide into symbols.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self
            .modulate_indices(bits)?
            .into_iter()
            .map(|i| self.points[i])
            .collect())
    }

    /// Like [`Constellation::modulate`] but returns point indices.
    pub fn modulate_indices(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::InvalidInput(format!(
                "bit string length {} is not a multiple of {}",
                bits.len(),
                self.bits_per_symbol
            )));
        }
        bits.chunks(self.bits_per_symbol)
            .map(|chunk| {
                self.labels
                    .iter()
                    .position(|l| l == chunk)
                    .ok_or_else(|| Error::InvalidInput(format!("no label {chunk:?}")))
            })
            .collect()
    }

    /// Hard bit decision: the label of the exact constellation point.
    pub fn demodulate_hard(&self, symbol: Complex64) -> Result<Vec<u8>> {
        Ok(self.labels[self.index_of(symbol)?].clone())
    }

    /// One-hot encoding of a symbol (1.0 at its constellation index).
    pub fn one_hot(&self, symbol: Complex64) -> Result<Vec<f64>> {
        Ok(self.one_hot_index(self.index_of(symbol)?))
    }

    pub fn one_hot_index(&self, index: usize) -> Vec<f64> {
        let mut q = vec![0.0; self.size()];
        q[index] = 1.0;
        q
    }

    /// Indices of the points whose `bit`-th label bit equals `value`.
    pub fn bit_partition(&self, bit: usize, value: u8) -> Vec<usize> {
        (0..self.size())
            .filter(|&i| self.labels[i][bit] == value)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabets_have_unit_mean_power() {
        for c in [Constellation::bpsk(), Constellation::qpsk()] {
            let power: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.size() as f64;
            assert!((power - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bpsk_mapping_and_demodulation() {
        let c = Constellation::bpsk();
        let syms = c.modulate(&[0, 1]).unwrap();
        assert_eq!(syms[0], Complex64::new(1.0, 0.0));
        assert_eq!(syms[1], Complex64::new(-1.0, 0.0));
        assert_eq!(c.demodulate_hard(Complex64::new(1.0, 0.0)).unwrap(), vec![0]);
    }

    #[test]
    fn one_hot_marks_the_point_index() {
        let c = Constellation::bpsk();
        assert_eq!(c.one_hot(c.point(0)).unwrap(), vec![1.0, 0.0]);
        assert_eq!(c.one_hot(c.point(1)).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn qpsk_round_trip_on_all_points() {
        let c = Constellation::qpsk();
        for i in 0..c.size() {
            let bits = c.label(i).to_vec();
            let syms = c.modulate(&bits).unwrap();
            assert_eq!(syms.len(), 1);
            assert_eq!(c.demodulate_hard(syms[0]).unwrap(), bits);
        }
    }

    #[test]
    fn foreign_symbol_is_rejected() {
        let c = Constellation::bpsk();
        assert!(c.demodulate_hard(Complex64::new(0.3, 0.0)).is_err());
        assert!(c.one_hot(Complex64::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn odd_bit_length_rejected_for_qpsk() {
        let c = Constellation::qpsk();
        assert!(c.modulate(&[0, 1, 0]).is_err());
    }

    #[test]
    fn bit_partitions_cover_the_alphabet() {
        let c = Constellation::qpsk();
        for bit in 0..2 {
            let zeros = c.bit_partition(bit, 0);
            let ones = c.bit_partition(bit, 1);
            assert_eq!(zeros.len() + ones.len(), c.size());
        }
    }
}
