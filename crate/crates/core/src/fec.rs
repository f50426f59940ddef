//! Rate-1/2 convolutional code with octal generators [7, 5].
//!
//! Constraint length 3, zero-tail terminated: two flush zeros are appended
//! so every codeword ends in the all-zero state and blocks decode
//! independently. Decoders: hard-decision Viterbi (Hamming metric),
//! soft-decision Viterbi over per-bit LLRs, and an exhaustive
//! maximum-likelihood search used as an oracle for short blocks.

use crate::error::{Error, Result};

const NUM_STATES: usize = 4;
/// Flush bits appended by the encoder (constraint length - 1).
pub const TAIL_BITS: usize = 2;

/// Per-state transition tables derived from the generator taps, not written
/// out by hand: `next[state][input]` and `output[state][input]` (2 coded
/// bits packed little-endian as `g1 | g2 << 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    next: [[u8; 2]; NUM_STATES],
    output: [[u8; 2]; NUM_STATES],
}

impl Trellis {
    fn from_generators(g1: u8, g2: u8) -> Self {
        let mut next = [[0u8; 2]; NUM_STATES];
        let mut output = [[0u8; 2]; NUM_STATES];
        for state in 0..NUM_STATES {
            for input in 0..2usize {
                // Register window, newest bit first: [input, s1, s2].
                let window = ((input << 2) | state) as u8;
                let c1 = (window & g1).count_ones() & 1;
                let c2 = (window & g2).count_ones() & 1;
                output[state][input] = (c1 | (c2 << 1)) as u8;
                next[state][input] = ((input << 1) | (state >> 1)) as u8;
            }
        }
        Trellis { next, output }
    }

    fn output_bits(&self, state: usize, input: usize) -> (u8, u8) {
        let packed = self.output[state][input];
        (packed & 1, packed >> 1)
    }
}

/// The [7, 5] code. Stateless; owns its trellis.
#[derive(Debug, Clone)]
pub struct ConvCode {
    trellis: Trellis,
}

impl Default for ConvCode {
    fn default() -> Self {
        Self::new()
    }
}

/// Which decoding metric the exhaustive search optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Minimize Hamming distance to hard bit decisions.
    Hamming,
    /// Maximize the LLR correlation `sum_j (1 - 2 c_j) L_j / 2`.
    Correlation,
}

/// Coded-domain observation handed to the exhaustive ML search.
#[derive(Debug, Clone, Copy)]
pub enum CodedObservation<'a> {
    Hard(&'a [u8]),
    Soft(&'a [f64]),
}

impl ConvCode {
    pub const GENERATORS_OCTAL: (u8, u8) = (7, 5);
    pub const CONSTRAINT_LENGTH: usize = 3;

    pub fn new() -> Self {
        ConvCode {
            trellis: Trellis::from_generators(0o7, 0o5),
        }
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    /// Coded length for a given number of information bits, tail included.
    pub fn coded_len(info_len: usize) -> usize {
        2 * (info_len + TAIL_BITS)
    }

    /// Encodes `info` and the zero tail: per step `g1 = in ^ s1 ^ s2`,
    /// `g2 = in ^ s2`. Output length is `2 * (len + 2)`.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.is_empty() {
            return Err(Error::InvalidInput("cannot encode an empty block".into()));
        }
        if let Some(b) = info.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidInput(format!("info bit {b} is not binary")));
        }
        let mut out = Vec::with_capacity(Self::coded_len(info.len()));
        let mut state = 0usize;
        for &bit in info.iter().chain([0u8; TAIL_BITS].iter()) {
            let (c1, c2) = self.trellis.output_bits(state, bit as usize);
            out.push(c1);
            out.push(c2);
            state = self.trellis.next[state][bit as usize] as usize;
        }
        debug_assert_eq!(state, 0, "zero tail must flush the register");
        Ok(out)
    }

    fn check_coded_len(&self, coded_len: usize) -> Result<usize> {
        if coded_len % 2 != 0 || coded_len / 2 <= TAIL_BITS {
            return Err(Error::InvalidInput(format!(
                "coded length {coded_len} is not 2*(info+{TAIL_BITS}) for any info length"
            )));
        }
        Ok(coded_len / 2 - TAIL_BITS)
    }

    /// Maximum-likelihood sequence under the Hamming metric, constrained to
    /// end in the zero state. Survivor ties pick the lower predecessor state.
    pub fn viterbi_hard(&self, coded: &[u8]) -> Result<Vec<u8>> {
        if let Some(b) = coded.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidInput(format!("coded bit {b} is not binary")));
        }
        let info_len = self.check_coded_len(coded.len())?;
        let steps = info_len + TAIL_BITS;
        // Path metrics to minimize; u32::MAX marks unreachable states.
        let mut metric = [u32::MAX; NUM_STATES];
        metric[0] = 0;
        let mut decisions = vec![[0u8; NUM_STATES]; steps];

        for step in 0..steps {
            let (r1, r2) = (coded[2 * step], coded[2 * step + 1]);
            let mut next_metric = [u32::MAX; NUM_STATES];
            let mut chosen_prev = [0u8; NUM_STATES];
            for prev in 0..NUM_STATES {
                if metric[prev] == u32::MAX {
                    continue;
                }
                for input in 0..2usize {
                    let (c1, c2) = self.trellis.output_bits(prev, input);
                    let branch = ((c1 != r1) as u32) + ((c2 != r2) as u32);
                    let cand = metric[prev] + branch;
                    let ns = self.trellis.next[prev][input] as usize;
                    // Strict improvement keeps the lower predecessor on ties
                    // because prev iterates in increasing order.
                    if cand < next_metric[ns] {
                        next_metric[ns] = cand;
                        chosen_prev[ns] = prev as u8;
                    }
                }
            }
            metric = next_metric;
            decisions[step] = chosen_prev;
        }
        self.traceback(&decisions, info_len)
    }

    /// Maximum-likelihood sequence under the correlation metric
    /// `sum_j (1 - 2 c_j) L_j / 2`, for per-coded-bit LLRs with
    /// positive meaning bit 0. Reduces to [`ConvCode::viterbi_hard`] when
    /// the LLRs are `+-const`.
    pub fn viterbi_soft(&self, llrs: &[f64]) -> Result<Vec<u8>> {
        if let Some(l) = llrs.iter().find(|l| !l.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite LLR {l}")));
        }
        let info_len = self.check_coded_len(llrs.len())?;
        let steps = info_len + TAIL_BITS;
        let mut metric = [f64::NEG_INFINITY; NUM_STATES];
        metric[0] = 0.0;
        let mut decisions = vec![[0u8; NUM_STATES]; steps];

        for step in 0..steps {
            let (l1, l2) = (llrs[2 * step], llrs[2 * step + 1]);
            let mut next_metric = [f64::NEG_INFINITY; NUM_STATES];
            let mut chosen_prev = [0u8; NUM_STATES];
            for prev in 0..NUM_STATES {
                if metric[prev] == f64::NEG_INFINITY {
                    continue;
                }
                for input in 0..2usize {
                    let (c1, c2) = self.trellis.output_bits(prev, input);
                    let branch = bit_score(c1, l1) + bit_score(c2, l2);
                    let cand = metric[prev] + branch;
                    let ns = self.trellis.next[prev][input] as usize;
                    if cand > next_metric[ns] {
                        next_metric[ns] = cand;
                        chosen_prev[ns] = prev as u8;
                    }
                }
            }
            metric = next_metric;
            decisions[step] = chosen_prev;
        }
        self.traceback(&decisions, info_len)
    }

    /// Walks survivors backwards from the zero state; the input that caused
    /// each transition is the new state's top register bit.
    fn traceback(&self, decisions: &[[u8; NUM_STATES]], info_len: usize) -> Result<Vec<u8>> {
        let steps = decisions.len();
        let mut bits = vec![0u8; steps];
        let mut state = 0usize;
        for step in (0..steps).rev() {
            bits[step] = (state >> 1) as u8;
            state = decisions[step][state] as usize;
        }
        bits.truncate(info_len);
        Ok(bits)
    }
}

/// Contribution of one coded bit to the soft path metric.
pub fn bit_score(coded_bit: u8, llr: f64) -> f64 {
    (1.0 - 2.0 * coded_bit as f64) * llr / 2.0
}

/// Hamming distance between equal-length bit slices.
pub fn hamming_distance(a: &[u8], b: &[u8]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x != y) as u32).sum()
}

/// Soft metric of a full codeword against the observed LLRs.
pub fn soft_metric(codeword: &[u8], llrs: &[f64]) -> f64 {
    debug_assert_eq!(codeword.len(), llrs.len());
    codeword
        .iter()
        .zip(llrs)
        .map(|(&c, &l)| bit_score(c, l))
        .sum()
}

/// Largest info length the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_INFO: usize = 14;

/// Exhaustive maximum-likelihood decoder: tries every information word and
/// keeps the metric-optimal one (first-found on exact ties). Same metric
/// definitions as the Viterbi decoders; rejects blocks longer than
/// [`BRUTE_FORCE_MAX_INFO`] info bits.
pub fn brute_force_ml(code: &ConvCode, observation: CodedObservation) -> Result<Vec<u8>> {
    let coded_len = match observation {
        CodedObservation::Hard(bits) => bits.len(),
        CodedObservation::Soft(llrs) => llrs.len(),
    };
    let info_len = code.check_coded_len(coded_len)?;
    if info_len > BRUTE_FORCE_MAX_INFO {
        return Err(Error::InvalidInput(format!(
            "exhaustive search limited to {BRUTE_FORCE_MAX_INFO} info bits, got {info_len}"
        )));
    }
    let mut best_word = Vec::new();
    let mut best_hamming = u32::MAX;
    let mut best_soft = f64::NEG_INFINITY;
    for value in 0u32..(1u32 << info_len) {
        let info: Vec<u8> = (0..info_len).map(|i| ((value >> i) & 1) as u8).collect();
        let codeword = code.encode(&info)?;
        match observation {
            CodedObservation::Hard(bits) => {
                let d = hamming_distance(&codeword, bits);
                if d < best_hamming {
                    best_hamming = d;
                    best_word = info;
                }
            }
            CodedObservation::Soft(llrs) => {
                let s = soft_metric(&codeword, llrs);
                if s > best_soft {
                    best_soft = s;
                    best_word = info;
                }
            }
        }
    }
    Ok(best_word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn encode_register_traces() {
        let code = ConvCode::new();
        assert_eq!(code.encode(&[1]).unwrap(), vec![1, 1, 1, 0, 1, 1]);
        assert_eq!(
            code.encode(&[1, 0, 1, 1]).unwrap(),
            vec![1, 1, 1, 0, 0, 0, 0, 1, 0, 1, 1, 1]
        );
        let zeros = code.encode(&[0; 6]).unwrap();
        assert!(zeros.iter().all(|&b| b == 0));
    }

    #[test]
    fn encode_rejects_bad_input() {
        let code = ConvCode::new();
        assert!(code.encode(&[]).is_err());
        assert!(code.encode(&[0, 2]).is_err());
    }

    #[test]
    fn encoder_is_linear() {
        let code = ConvCode::new();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let n = rng.random_range(1..20);
            let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            let b: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            let xor: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ca = code.encode(&a).unwrap();
            let cb = code.encode(&b).unwrap();
            let cx = code.encode(&xor).unwrap();
            let sum: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            assert_eq!(cx, sum);
        }
    }

    #[test]
    fn free_distance_is_five() {
        let code = ConvCode::new();
        let mut min_weight = u32::MAX;
        for len in 1..=12usize {
            for value in 1u32..(1 << len) {
                let info: Vec<u8> = (0..len).map(|i| ((value >> i) & 1) as u8).collect();
                let weight: u32 = code.encode(&info).unwrap().iter().map(|&b| b as u32).sum();
                min_weight = min_weight.min(weight);
            }
        }
        assert_eq!(min_weight, 5);
    }

    #[test]
    fn hard_round_trip_all_short_blocks() {
        let code = ConvCode::new();
        for len in 1..=12usize {
            for value in 0u32..(1 << len) {
                let info: Vec<u8> = (0..len).map(|i| ((value >> i) & 1) as u8).collect();
                let coded = code.encode(&info).unwrap();
                assert_eq!(code.viterbi_hard(&coded).unwrap(), info);
            }
        }
    }

    #[test]
    fn single_bit_flips_are_always_corrected() {
        // Free distance 5 corrects any two errors; sweep every single flip.
        let code = ConvCode::new();
        let info = [1, 0, 1, 1];
        let coded = code.encode(&info).unwrap();
        for flip in 0..coded.len() {
            let mut corrupted = coded.clone();
            corrupted[flip] ^= 1;
            assert_eq!(code.viterbi_hard(&corrupted).unwrap(), info.to_vec(), "flip {flip}");
        }
    }

    #[test]
    fn malformed_lengths_rejected() {
        let code = ConvCode::new();
        assert!(code.viterbi_hard(&[1, 0, 1]).is_err());
        assert!(code.viterbi_hard(&[1, 0, 1, 1]).is_err()); // implies 0 info bits
        assert!(code.viterbi_soft(&[1.0; 7]).is_err());
        assert!(code.viterbi_soft(&[1.0, f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn confident_llrs_recover_the_block() {
        let code = ConvCode::new();
        let info = [1, 1, 0, 1, 0, 0, 1];
        let coded = code.encode(&info).unwrap();
        let llrs: Vec<f64> = coded.iter().map(|&c| if c == 0 { 10.0 } else { -10.0 }).collect();
        assert_eq!(code.viterbi_soft(&llrs).unwrap(), info.to_vec());
    }

    #[test]
    fn soft_equals_hard_on_constant_llrs() {
        let code = ConvCode::new();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let n = rng.random_range(1..=12usize);
            let info: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            let mut coded = code.encode(&info).unwrap();
            // Up to one flip keeps the hard decision unambiguous.
            if rng.random_range(0..2) == 1 {
                let flip = rng.random_range(0..coded.len());
                coded[flip] ^= 1;
            }
            let llrs: Vec<f64> =
                coded.iter().map(|&c| if c == 0 { 3.5 } else { -3.5 }).collect();
            assert_eq!(code.viterbi_soft(&llrs).unwrap(), code.viterbi_hard(&coded).unwrap());
        }
    }

    #[test]
    fn erasure_llr_still_recovers() {
        let code = ConvCode::new();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let n = rng.random_range(1..=12usize);
            let info: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            let coded = code.encode(&info).unwrap();
            let mut llrs: Vec<f64> =
                coded.iter().map(|&c| if c == 0 { 8.0 } else { -8.0 }).collect();
            let erased = rng.random_range(0..llrs.len());
            llrs[erased] = 0.0;
            assert_eq!(code.viterbi_soft(&llrs).unwrap(), info);
        }
    }

    #[test]
    fn brute_force_noiseless_and_length_bound() {
        let code = ConvCode::new();
        let info = [1, 0, 0, 1, 1];
        let coded = code.encode(&info).unwrap();
        assert_eq!(
            brute_force_ml(&code, CodedObservation::Hard(&coded)).unwrap(),
            info.to_vec()
        );
        let long = code.encode(&vec![1u8; 15]).unwrap();
        assert!(brute_force_ml(&code, CodedObservation::Hard(&long)).is_err());
    }

    #[test]
    fn viterbi_hard_matches_brute_force_under_random_flips() {
        let code = ConvCode::new();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..1000 {
            let n = 10;
            let info: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            let mut coded = code.encode(&info).unwrap();
            for _ in 0..3 {
                let flip = rng.random_range(0..coded.len());
                coded[flip] ^= 1;
            }
            let viterbi = code.viterbi_hard(&coded).unwrap();
            let brute = brute_force_ml(&code, CodedObservation::Hard(&coded)).unwrap();
            // Both must achieve the optimal metric; on a unique optimum the
            // words are identical.
            let dv = hamming_distance(&code.encode(&viterbi).unwrap(), &coded);
            let db = hamming_distance(&code.encode(&brute).unwrap(), &coded);
            // Words may differ only when two codewords are equidistant.
            assert_eq!(dv, db, "trial {trial}");
        }
    }

    #[test]
    fn viterbi_soft_matches_brute_force_on_random_llrs() {
        let code = ConvCode::new();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..1000 {
            let n = 10;
            let llrs: Vec<f64> = (0..ConvCode::coded_len(n))
                .map(|_| rng.random_range(-4.0..4.0))
                .collect();
            let viterbi = code.viterbi_soft(&llrs).unwrap();
            let brute = brute_force_ml(&code, CodedObservation::Soft(&llrs)).unwrap();
            // Continuous metrics: ties have measure zero, words must agree.
            assert_eq!(viterbi, brute);
        }
    }
}
