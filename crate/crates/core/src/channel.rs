//! Pooled test execution under an optional Z-channel noise model.
//!
//! A pool is a set of member indices; its noiseless outcome is the OR of the
//! members' infection bits. Under Z-channel noise a truly positive outcome
//! flips to negative with probability `z`, while negative outcomes never flip.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::designs::TestMatrix;
use crate::error::{Error, Result};
use crate::model::{check_probability, CommunityStructure, InfectionState, Seed};

/// A set of member indices tested together (sorted, duplicates collapsed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    indices: Vec<usize>,
}

impl Pool {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Pool { indices }
    }

    pub fn empty() -> Self {
        Pool { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl FromIterator<usize> for Pool {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Pool::new(iter.into_iter().collect())
    }
}

/// Test noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Noiseless,
    /// Positive outcomes flip to negative with probability `z`.
    ZChannel { z: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Noiseless => Ok(()),
            NoiseModel::ZChannel { z } => check_probability(*z, "z"),
        }
    }
}

/// Outcomes of a batch of tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeVector {
    bits: Vec<bool>,
}

impl OutcomeVector {
    pub fn new(bits: Vec<bool>) -> Self {
        OutcomeVector { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, test: usize) -> bool {
        self.bits[test]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Serialize as a 0/1 string, one character per test.
    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::parse(format!("invalid outcome character {ch:?}"))),
            }
        }
        Ok(OutcomeVector { bits })
    }
}

/// Stateful pooled-test executor: holds the ground truth, the noise model, a
/// private RNG, and a monotone counter of tests served.
///
/// One oracle per trial; adaptive algorithms draw their sampling randomness
/// from the same generator so that a `(seed, stream)` pair fixes a whole run.
#[derive(Debug)]
pub struct TestOracle<'a> {
    state: &'a InfectionState,
    noise: NoiseModel,
    rng: ChaCha8Rng,
    tests_used: u64,
}

impl<'a> TestOracle<'a> {
    pub fn new(state: &'a InfectionState, noise: NoiseModel, seed: Seed) -> Result<Self> {
        noise.validate()?;
        Ok(TestOracle {
            state,
            noise,
            rng: seed.rng(),
            tests_used: 0,
        })
    }

    /// Number of pooled tests served so far.
    pub fn tests_used(&self) -> u64 {
        self.tests_used
    }

    pub fn state(&self) -> &InfectionState {
        self.state
    }

    /// RNG for algorithmic sampling (e.g. representative selection) so that a
    /// single seed drives the whole trial.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Execute one pooled test: OR of member bits, then the Z-channel.
    ///
    /// A noise variate is drawn only for truly positive outcomes, so negative
    /// pools never advance the RNG.
    pub fn pool_result(&mut self, pool: &Pool) -> Result<bool> {
        let n = self.state.population();
        if let Some(&bad) = pool.indices().iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!(
                "pool index {bad} out of range for population {n}"
            )));
        }
        self.tests_used += 1;
        let truth = pool.indices().iter().any(|&i| self.state.member(i));
        let outcome = match self.noise {
            NoiseModel::Noiseless => truth,
            NoiseModel::ZChannel { z } => truth && self.rng.gen::<f64>() >= z,
        };
        Ok(outcome)
    }

    /// Execute every row of a matrix independently, in row order.
    pub fn run_matrix(&mut self, matrix: &TestMatrix) -> Result<OutcomeVector> {
        if matrix.width() != self.state.population() {
            return Err(Error::invalid(format!(
                "matrix width {} does not match population {}",
                matrix.width(),
                self.state.population()
            )));
        }
        let mut bits = Vec::with_capacity(matrix.tests());
        for t in 0..matrix.tests() {
            let pool = Pool::new(matrix.row(t).to_vec());
            bits.push(self.pool_result(&pool)?);
        }
        Ok(OutcomeVector { bits })
    }
}

/// One-shot matrix execution with a fresh oracle.
pub fn run_matrix(
    matrix: &TestMatrix,
    state: &InfectionState,
    noise: NoiseModel,
    seed: Seed,
) -> Result<OutcomeVector> {
    let mut oracle = TestOracle::new(state, noise, seed)?;
    oracle.run_matrix(matrix)
}

/// The pool backing a family's mixed sample: the representative members
/// `representatives` of `family`, all of which must belong to that family.
pub fn mixed_sample_pool(
    structure: &CommunityStructure,
    family: usize,
    representatives: &[usize],
) -> Result<Pool> {
    if family >= structure.families() {
        return Err(Error::invalid(format!(
            "family {family} out of range ({} families)",
            structure.families()
        )));
    }
    let members = structure.members_of(family);
    if let Some(&bad) = representatives.iter().find(|&&i| !members.contains(&i)) {
        return Err(Error::invalid(format!(
            "representative {bad} does not belong to family {family}"
        )));
    }
    Ok(Pool::new(representatives.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PerFamily;

    fn tiny_state(bits: &[bool]) -> (CommunityStructure, InfectionState) {
        let s = CommunityStructure::new(&[bits.len()]).unwrap();
        let st = InfectionState::from_member_bits(&s, bits.to_vec()).unwrap();
        (s, st)
    }

    #[test]
    fn empty_pool_is_negative() {
        let (_, st) = tiny_state(&[true, true, true]);
        let mut oracle = TestOracle::new(&st, NoiseModel::Noiseless, Seed::new(0)).unwrap();
        assert!(!oracle.pool_result(&Pool::empty()).unwrap());
        assert_eq!(oracle.tests_used(), 1);
    }

    #[test]
    fn infected_pool_positive_noiseless() {
        let (_, st) = tiny_state(&[false, true, false]);
        let mut oracle = TestOracle::new(&st, NoiseModel::Noiseless, Seed::new(0)).unwrap();
        assert!(oracle.pool_result(&Pool::new(vec![0, 1])).unwrap());
        assert!(!oracle.pool_result(&Pool::new(vec![0, 2])).unwrap());
    }

    #[test]
    fn degenerate_flip_probabilities() {
        let (_, st) = tiny_state(&[true, false]);
        let mut all_flip = TestOracle::new(&st, NoiseModel::ZChannel { z: 1.0 }, Seed::new(1)).unwrap();
        for _ in 0..20 {
            assert!(!all_flip.pool_result(&Pool::new(vec![0])).unwrap());
        }
        let mut healthy = TestOracle::new(&st, NoiseModel::ZChannel { z: 0.7 }, Seed::new(1)).unwrap();
        for _ in 0..20 {
            assert!(!healthy.pool_result(&Pool::new(vec![1])).unwrap());
        }
    }

    #[test]
    fn out_of_range_index_rejected() {
        let (_, st) = tiny_state(&[true, false]);
        let mut oracle = TestOracle::new(&st, NoiseModel::Noiseless, Seed::new(0)).unwrap();
        assert!(oracle.pool_result(&Pool::new(vec![5])).is_err());
    }

    #[test]
    fn run_matrix_identity_recovers_truth() {
        let (_, st) = tiny_state(&[true, false, true, false]);
        let m = crate::designs::repetition_matrix(4, 1).unwrap();
        let y = run_matrix(&m, &st, NoiseModel::Noiseless, Seed::new(0)).unwrap();
        assert_eq!(y.bits(), st.member_bits());
    }

    #[test]
    fn run_matrix_or_semantics() {
        // Rows {1,2} and {2,3} over U = (1,0,0) give Y = (1,0).
        let (_, st) = tiny_state(&[true, false, false]);
        let m = TestMatrix::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let y = run_matrix(&m, &st, NoiseModel::Noiseless, Seed::new(0)).unwrap();
        assert_eq!(y.bits(), &[true, false]);
    }

    #[test]
    fn run_matrix_width_mismatch_rejected() {
        let (_, st) = tiny_state(&[true, false, false]);
        let m = TestMatrix::new(5, vec![vec![0]]).unwrap();
        assert!(run_matrix(&m, &st, NoiseModel::Noiseless, Seed::new(0)).is_err());
    }

    #[test]
    fn z_channel_positive_rate() {
        // Single all-ones row over an infected population: P(Y=1) = 1 - z.
        let (_, st) = tiny_state(&[true, false, false]);
        let m = TestMatrix::new(3, vec![vec![0, 1, 2]]).unwrap();
        let z = 0.3;
        let trials = 10_000u64;
        let mut positives = 0u64;
        for t in 0..trials {
            let y = run_matrix(&m, &st, NoiseModel::ZChannel { z }, Seed::new(2).with_stream(t)).unwrap();
            if y.get(0) {
                positives += 1;
            }
        }
        let freq = positives as f64 / trials as f64;
        let p = 1.0 - z;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma, "frequency {freq} vs {p}");
    }

    #[test]
    fn counter_additivity_over_matrix() {
        let s = CommunityStructure::symmetric(4, 2).unwrap();
        let st = crate::model::sample_probabilistic(&s, 0.5, &PerFamily::Same(0.5), Seed::new(9)).unwrap();
        let m = crate::designs::bernoulli_matrix(13, 8, 0.4, Seed::new(10)).unwrap();
        let mut oracle = TestOracle::new(&st, NoiseModel::Noiseless, Seed::new(11)).unwrap();
        oracle.run_matrix(&m).unwrap();
        assert_eq!(oracle.tests_used(), 13);
    }

    #[test]
    fn mixed_sample_pools() {
        let s = CommunityStructure::new(&[3, 3]).unwrap();
        // Family 1, first two members -> pool {3, 4}.
        let p = mixed_sample_pool(&s, 1, &[3, 4]).unwrap();
        assert_eq!(p.indices(), &[3, 4]);
        // Whole family.
        let p = mixed_sample_pool(&s, 0, &[0, 1, 2]).unwrap();
        assert_eq!(p.len(), 3);
        // Empty representative set -> empty pool.
        let p = mixed_sample_pool(&s, 1, &[]).unwrap();
        assert!(p.is_empty());
        // Representative outside the family.
        assert!(mixed_sample_pool(&s, 0, &[3]).is_err());
    }

    #[test]
    fn invalid_noise_rejected() {
        let (_, st) = tiny_state(&[true]);
        assert!(TestOracle::new(&st, NoiseModel::ZChannel { z: 1.5 }, Seed::new(0)).is_err());
    }
}
