//! Community structure and ground-truth infection sampling.
//!
//! A population of `n` members is partitioned into `F` disjoint families of
//! sizes `M_j`, laid out contiguously (family 0 owns indices `0..M_0`, family
//! 1 the next `M_1` indices, and so on). Ground truth is sampled under two
//! models: a combinatorial one with fixed infected counts, and a probabilistic
//! one with Bernoulli family/member infections.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reproducible RNG seed with an explicit stream index.
///
/// Identical `(value, stream)` pairs reproduce identical draws; distinct
/// streams of the same base seed are independent, which is what parallel
/// trials use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed { value, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Seed {
            value: self.value,
            stream,
        }
    }

    /// Instantiate the deterministic generator for this seed/stream pair.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.value);
        rng.set_stream(self.stream);
        rng
    }
}

/// A value defined per family: either one shared value or one entry per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerFamily<T> {
    Same(T),
    Each(Vec<T>),
}

impl<T: Copy> PerFamily<T> {
    pub fn get(&self, family: usize) -> T {
        match self {
            PerFamily::Same(v) => *v,
            PerFamily::Each(vs) => vs[family],
        }
    }

    pub fn check_len(&self, families: usize) -> Result<()> {
        match self {
            PerFamily::Same(_) => Ok(()),
            PerFamily::Each(vs) if vs.len() == families => Ok(()),
            PerFamily::Each(vs) => Err(Error::invalid(format!(
                "per-family sequence has {} entries but the structure has {} families",
                vs.len(),
                families
            ))),
        }
    }
}

/// Partition of the population into families with contiguous member indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityStructure {
    family_sizes: Vec<usize>,
    /// Prefix sums; `offsets[j]..offsets[j+1]` are family j's members.
    offsets: Vec<usize>,
}

impl CommunityStructure {
    /// Build from per-family sizes. Rejects an empty sequence and zero sizes.
    pub fn new(family_sizes: &[usize]) -> Result<Self> {
        if family_sizes.is_empty() {
            return Err(Error::invalid("community must contain at least one family"));
        }
        if let Some(j) = family_sizes.iter().position(|&m| m == 0) {
            return Err(Error::invalid(format!("family {j} has zero members")));
        }
        let mut offsets = Vec::with_capacity(family_sizes.len() + 1);
        let mut total = 0usize;
        offsets.push(0);
        for &m in family_sizes {
            total += m;
            offsets.push(total);
        }
        Ok(CommunityStructure {
            family_sizes: family_sizes.to_vec(),
            offsets,
        })
    }

    /// Symmetric helper: `families` families of `family_size` members each.
    pub fn symmetric(families: usize, family_size: usize) -> Result<Self> {
        CommunityStructure::new(&vec![family_size; families])
    }

    /// Number of families F.
    pub fn families(&self) -> usize {
        self.family_sizes.len()
    }

    /// Population size n.
    pub fn population(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn family_size(&self, family: usize) -> usize {
        self.family_sizes[family]
    }

    pub fn family_sizes(&self) -> &[usize] {
        &self.family_sizes
    }

    /// The family that member `i` belongs to.
    pub fn family_of(&self, member: usize) -> usize {
        debug_assert!(member < self.population());
        // offsets is strictly increasing; find the last offset <= member.
        self.offsets.partition_point(|&o| o <= member) - 1
    }

    /// Member indices of `family` (contiguous range).
    pub fn members_of(&self, family: usize) -> std::ops::Range<usize> {
        self.offsets[family]..self.offsets[family + 1]
    }

    /// `Some(M)` when every family has the same size M.
    pub fn symmetric_size(&self) -> Option<usize> {
        let m = self.family_sizes[0];
        if self.family_sizes.iter().all(|&s| s == m) {
            Some(m)
        } else {
            None
        }
    }
}

/// Ground-truth infection status: member bits U and family bits V.
///
/// Invariant: a member can only be infected when its family bit is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfectionState {
    member_bits: Vec<bool>,
    family_bits: Vec<bool>,
}

impl InfectionState {
    /// Build from explicit bit vectors, validating lengths and consistency.
    pub fn from_bits(
        structure: &CommunityStructure,
        member_bits: Vec<bool>,
        family_bits: Vec<bool>,
    ) -> Result<Self> {
        if member_bits.len() != structure.population() {
            return Err(Error::invalid(format!(
                "member bit vector has length {} but population is {}",
                member_bits.len(),
                structure.population()
            )));
        }
        if family_bits.len() != structure.families() {
            return Err(Error::invalid(format!(
                "family bit vector has length {} but there are {} families",
                family_bits.len(),
                structure.families()
            )));
        }
        for j in 0..structure.families() {
            if !family_bits[j] && structure.members_of(j).any(|i| member_bits[i]) {
                return Err(Error::invalid(format!(
                    "family {j} is marked healthy but has an infected member"
                )));
            }
        }
        Ok(InfectionState {
            member_bits,
            family_bits,
        })
    }

    /// Build from member bits alone; a family bit is set iff some member is infected.
    pub fn from_member_bits(structure: &CommunityStructure, member_bits: Vec<bool>) -> Result<Self> {
        if member_bits.len() != structure.population() {
            return Err(Error::invalid(format!(
                "member bit vector has length {} but population is {}",
                member_bits.len(),
                structure.population()
            )));
        }
        let family_bits = (0..structure.families())
            .map(|j| structure.members_of(j).any(|i| member_bits[i]))
            .collect();
        Ok(InfectionState {
            member_bits,
            family_bits,
        })
    }

    pub fn population(&self) -> usize {
        self.member_bits.len()
    }

    pub fn member(&self, i: usize) -> bool {
        self.member_bits[i]
    }

    pub fn family(&self, j: usize) -> bool {
        self.family_bits[j]
    }

    pub fn member_bits(&self) -> &[bool] {
        &self.member_bits
    }

    pub fn family_bits(&self) -> &[bool] {
        &self.family_bits
    }

    pub fn infected_members(&self) -> usize {
        self.member_bits.iter().filter(|&&b| b).count()
    }

    pub fn infected_families(&self) -> usize {
        self.family_bits.iter().filter(|&&b| b).count()
    }
}

/// Infection model parameters, as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum InfectionModelSpec {
    /// Fixed counts: `infected_families` families, each with a fixed number of
    /// infected members (shared scalar or one count per family).
    Combinatorial {
        infected_families: usize,
        infected_per_family: PerFamily<usize>,
    },
    /// Bernoulli family infection with probability `family_probability`, then
    /// Bernoulli member infection inside infected families.
    Probabilistic {
        family_probability: f64,
        member_probability: PerFamily<f64>,
    },
}

impl InfectionModelSpec {
    pub fn validate(&self, structure: &CommunityStructure) -> Result<()> {
        match self {
            InfectionModelSpec::Combinatorial {
                infected_families,
                infected_per_family,
            } => {
                if *infected_families > structure.families() {
                    return Err(Error::invalid(format!(
                        "infected_families {} exceeds family count {}",
                        infected_families,
                        structure.families()
                    )));
                }
                infected_per_family.check_len(structure.families())?;
                for j in 0..structure.families() {
                    if infected_per_family.get(j) > structure.family_size(j) {
                        return Err(Error::invalid(format!(
                            "family {} has {} members but {} infections requested",
                            j,
                            structure.family_size(j),
                            infected_per_family.get(j)
                        )));
                    }
                }
                Ok(())
            }
            InfectionModelSpec::Probabilistic {
                family_probability,
                member_probability,
            } => {
                check_probability(*family_probability, "family_probability")?;
                member_probability.check_len(structure.families())?;
                for j in 0..structure.families() {
                    check_probability(member_probability.get(j), "member_probability")?;
                }
                Ok(())
            }
        }
    }

    /// Sample a ground-truth state under this model.
    pub fn sample(&self, structure: &CommunityStructure, seed: Seed) -> Result<InfectionState> {
        match self {
            InfectionModelSpec::Combinatorial {
                infected_families,
                infected_per_family,
            } => sample_combinatorial(structure, *infected_families, infected_per_family, seed),
            InfectionModelSpec::Probabilistic {
                family_probability,
                member_probability,
            } => sample_probabilistic(structure, *family_probability, member_probability, seed),
        }
    }
}

pub(crate) fn check_probability(p: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{name} = {p} is outside [0, 1]")));
    }
    Ok(())
}

/// Sample model (I): exactly `infected_families` family bits set uniformly at
/// random; inside each infected family j, exactly `infected_per_family[j]`
/// member bits set uniformly at random. A selected family with a zero count
/// keeps its family bit set and all member bits clear.
pub fn sample_combinatorial(
    structure: &CommunityStructure,
    infected_families: usize,
    infected_per_family: &PerFamily<usize>,
    seed: Seed,
) -> Result<InfectionState> {
    let spec = InfectionModelSpec::Combinatorial {
        infected_families,
        infected_per_family: infected_per_family.clone(),
    };
    spec.validate(structure)?;

    let mut rng = seed.rng();
    let mut family_bits = vec![false; structure.families()];
    let mut member_bits = vec![false; structure.population()];

    let chosen = rand::seq::index::sample(&mut rng, structure.families(), infected_families);
    let mut chosen: Vec<usize> = chosen.into_iter().collect();
    chosen.sort_unstable();
    for &j in &chosen {
        family_bits[j] = true;
        let count = infected_per_family.get(j);
        let start = structure.members_of(j).start;
        for offset in rand::seq::index::sample(&mut rng, structure.family_size(j), count) {
            member_bits[start + offset] = true;
        }
    }
    Ok(InfectionState {
        member_bits,
        family_bits,
    })
}

/// Sample model (II): family bits i.i.d. Bernoulli(q); member bits of an
/// infected family j i.i.d. Bernoulli(p_j); everyone else healthy.
pub fn sample_probabilistic(
    structure: &CommunityStructure,
    family_probability: f64,
    member_probability: &PerFamily<f64>,
    seed: Seed,
) -> Result<InfectionState> {
    let spec = InfectionModelSpec::Probabilistic {
        family_probability,
        member_probability: member_probability.clone(),
    };
    spec.validate(structure)?;

    let mut rng = seed.rng();
    let mut family_bits = vec![false; structure.families()];
    let mut member_bits = vec![false; structure.population()];
    for j in 0..structure.families() {
        if rng.gen::<f64>() < family_probability {
            family_bits[j] = true;
            let p = member_probability.get(j);
            for i in structure.members_of(j) {
                member_bits[i] = rng.gen::<f64>() < p;
            }
        }
    }
    Ok(InfectionState {
        member_bits,
        family_bits,
    })
}
