//! Non-adaptive test matrix constructions.
//!
//! Matrices are stored sparsely: one sorted support per test row. The text
//! serialization is a header line `T n` followed by one line of member
//! indices per test.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{check_probability, CommunityStructure, Seed};

/// Sparse binary test matrix: `tests` rows over `width` member columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestMatrix {
    width: usize,
    rows: Vec<Vec<usize>>,
}

impl TestMatrix {
    /// Build from row supports; indices are validated, sorted, and deduped.
    pub fn new(width: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut canonical = Vec::with_capacity(rows.len());
        for (t, mut row) in rows.into_iter().enumerate() {
            if let Some(&bad) = row.iter().find(|&&i| i >= width) {
                return Err(Error::invalid(format!(
                    "row {t} references member {bad} but the matrix width is {width}"
                )));
            }
            row.sort_unstable();
            row.dedup();
            canonical.push(row);
        }
        Ok(TestMatrix {
            width,
            rows: canonical,
        })
    }

    pub fn empty(width: usize) -> Self {
        TestMatrix {
            width,
            rows: Vec::new(),
        }
    }

    /// Number of tests T.
    pub fn tests(&self) -> usize {
        self.rows.len()
    }

    /// Number of member columns n.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, test: usize) -> &[usize] {
        &self.rows[test]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Tests containing each member, i.e. the column supports.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.width];
        for (t, row) in self.rows.iter().enumerate() {
            for &i in row {
                cols[i].push(t);
            }
        }
        cols
    }

    pub fn column_weight(&self, member: usize) -> usize {
        self.rows.iter().filter(|row| row.binary_search(&member).is_ok()).count()
    }

    /// Serialize to the sparse row format: `T n` header, one line per test.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.tests(), self.width);
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|i| i.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("empty matrix file"))?;
        let mut parts = header.split_whitespace();
        let tests: usize = parts
            .next()
            .ok_or_else(|| Error::parse("missing test count in header"))?
            .parse()
            .map_err(|_| Error::parse("invalid test count in header"))?;
        let width: usize = parts
            .next()
            .ok_or_else(|| Error::parse("missing width in header"))?
            .parse()
            .map_err(|_| Error::parse("invalid width in header"))?;
        let mut rows = Vec::with_capacity(tests);
        for _ in 0..tests {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse("fewer rows than the header promises"))?;
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                let idx: usize = tok
                    .parse()
                    .map_err(|_| Error::parse(format!("invalid member index {tok:?}")))?;
                row.push(idx);
            }
            rows.push(row);
        }
        TestMatrix::new(width, rows)
    }
}

/// Rows of `top` followed by rows of `bottom`; widths must agree.
pub fn stack(top: &TestMatrix, bottom: &TestMatrix) -> Result<TestMatrix> {
    if top.width() != bottom.width() {
        return Err(Error::invalid(format!(
            "cannot stack matrices of widths {} and {}",
            top.width(),
            bottom.width()
        )));
    }
    let mut rows = top.rows.clone();
    rows.extend(bottom.rows.iter().cloned());
    Ok(TestMatrix {
        width: top.width(),
        rows,
    })
}

/// Each entry is 1 independently with probability `density`.
pub fn bernoulli_matrix(tests: usize, width: usize, density: f64, seed: Seed) -> Result<TestMatrix> {
    check_probability(density, "density")?;
    if tests == 0 {
        return Err(Error::invalid("a Bernoulli design needs at least one test"));
    }
    let mut rng = seed.rng();
    let rows = (0..tests)
        .map(|_| (0..width).filter(|_| rng.gen::<f64>() < density).collect())
        .collect();
    Ok(TestMatrix { width, rows })
}

/// Every column has weight exactly `column_weight`; columns are independent
/// and each column's test set is uniform over all subsets of that size.
pub fn constant_column_weight_matrix(
    tests: usize,
    width: usize,
    column_weight: usize,
    seed: Seed,
) -> Result<TestMatrix> {
    if column_weight > tests {
        return Err(Error::invalid(format!(
            "column weight {column_weight} exceeds test count {tests}"
        )));
    }
    let mut rng = seed.rng();
    let mut rows = vec![Vec::new(); tests];
    for member in 0..width {
        for t in rand::seq::index::sample(&mut rng, tests, column_weight) {
            rows[t].push(member);
        }
    }
    for row in &mut rows {
        row.sort_unstable();
    }
    Ok(TestMatrix { width, rows })
}

/// `repeats` stacked identity matrices: member i is tested in rows
/// `{i, i+n, ..., i+(repeats-1)n}`.
pub fn repetition_matrix(width: usize, repeats: usize) -> Result<TestMatrix> {
    if repeats == 0 {
        return Err(Error::invalid("repetition design needs at least one repeat"));
    }
    let rows = (0..repeats * width).map(|t| vec![t % width]).collect();
    Ok(TestMatrix { width, rows })
}

/// Block layout for the member-identification sub-matrix G2: `capacities[i]`
/// families share block row i, so `sum(capacities)` family slots exist. When
/// the slot count exceeds the family count the surplus slots stay empty
/// (auxiliary families), which upper-bounds the error formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDesignSpec {
    capacities: Vec<usize>,
    families: usize,
}

impl BlockDesignSpec {
    /// Explicit per-row family counts; they must sum to the family count.
    pub fn explicit(capacities: Vec<usize>, families: usize) -> Result<Self> {
        if capacities.is_empty() {
            return Err(Error::invalid("block design needs at least one block row"));
        }
        if capacities.iter().any(|&c| c == 0) {
            return Err(Error::invalid("block rows must hold at least one family"));
        }
        let total: usize = capacities.iter().sum();
        if total != families {
            return Err(Error::invalid(format!(
                "block row counts sum to {total} but there are {families} families"
            )));
        }
        Ok(BlockDesignSpec {
            capacities,
            families,
        })
    }

    /// Balanced layout over `block_rows` rows with equal capacity
    /// `ceil(families / block_rows)`; pads with empty slots when the family
    /// count does not factor.
    pub fn symmetric(families: usize, block_rows: usize) -> Result<Self> {
        if block_rows == 0 {
            return Err(Error::invalid("block design needs at least one block row"));
        }
        if families == 0 {
            return Err(Error::invalid("block design needs at least one family"));
        }
        let per_row = families.div_ceil(block_rows);
        Ok(BlockDesignSpec {
            capacities: vec![per_row; block_rows],
            families,
        })
    }

    pub fn block_rows(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn is_padded(&self) -> bool {
        self.capacities.iter().sum::<usize>() > self.families
    }
}

/// How families are placed into block rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockAssignment {
    /// Round-robin over block rows in family order, skipping full rows.
    Canonical,
    /// Uniformly random placement into the available slots.
    Random(Seed),
}

/// The member-identification sub-matrix G2.
///
/// Every family contributes one identity block, so each member appears in
/// exactly one of the `block_rows * M` tests; families assigned to the same
/// block row share that row's M tests offset-for-offset.
pub fn community_g2(
    structure: &CommunityStructure,
    spec: &BlockDesignSpec,
    assignment: BlockAssignment,
) -> Result<TestMatrix> {
    let family_size = structure
        .symmetric_size()
        .ok_or_else(|| Error::invalid("G2 requires equal family sizes"))?;
    if spec.families != structure.families() {
        return Err(Error::invalid(format!(
            "block design is for {} families but the structure has {}",
            spec.families,
            structure.families()
        )));
    }
    // One slot per (block row, family seat); families fill F of them.
    let mut slots: Vec<usize> = Vec::new();
    for (row, &cap) in spec.capacities.iter().enumerate() {
        slots.extend(std::iter::repeat(row).take(cap));
    }
    let placement: Vec<usize> = match assignment {
        BlockAssignment::Canonical => {
            let mut remaining = spec.capacities.clone();
            let rows = spec.block_rows();
            let mut placement = Vec::with_capacity(structure.families());
            let mut cursor = 0usize;
            for _ in 0..structure.families() {
                while remaining[cursor % rows] == 0 {
                    cursor += 1;
                }
                let row = cursor % rows;
                remaining[row] -= 1;
                placement.push(row);
                cursor += 1;
            }
            placement
        }
        BlockAssignment::Random(seed) => {
            let mut rng = seed.rng();
            slots.shuffle(&mut rng);
            slots[..structure.families()].to_vec()
        }
    };

    let tests = spec.block_rows() * family_size;
    let mut rows = vec![Vec::new(); tests];
    for (family, &block_row) in placement.iter().enumerate() {
        let start = structure.members_of(family).start;
        for offset in 0..family_size {
            rows[block_row * family_size + offset].push(start + offset);
        }
    }
    for row in &mut rows {
        row.sort_unstable();
    }
    Ok(TestMatrix {
        width: structure.population(),
        rows,
    })
}

/// Layout of the family-identification sub-matrix G1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum G1Mode {
    /// One test per family: T1 = F.
    OnePerFamily,
    /// Constant-column-weight design over the F family mixed samples:
    /// each family participates in `family_weight` of the `tests` rows.
    Sparse { tests: usize, family_weight: usize },
}

/// The family-identification sub-matrix G1: each family is represented by a
/// mixed sample of `representatives` members drawn uniformly without
/// replacement, and that member set is replicated into every test the family
/// participates in.
pub fn community_g1(
    structure: &CommunityStructure,
    mode: &G1Mode,
    representatives: usize,
    seed: Seed,
) -> Result<TestMatrix> {
    let mut rng = seed.rng();
    let mut reps: Vec<Vec<usize>> = Vec::with_capacity(structure.families());
    for j in 0..structure.families() {
        let size = structure.family_size(j);
        if representatives > size {
            return Err(Error::invalid(format!(
                "family {j} has {size} members but {representatives} representatives requested"
            )));
        }
        let start = structure.members_of(j).start;
        let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, size, representatives)
            .into_iter()
            .map(|o| start + o)
            .collect();
        chosen.sort_unstable();
        reps.push(chosen);
    }

    let rows = match mode {
        G1Mode::OnePerFamily => reps,
        G1Mode::Sparse {
            tests,
            family_weight,
        } => {
            if family_weight > tests {
                return Err(Error::invalid(format!(
                    "family weight {family_weight} exceeds test count {tests}"
                )));
            }
            let mut rows = vec![Vec::new(); *tests];
            for family_reps in &reps {
                for t in rand::seq::index::sample(&mut rng, *tests, *family_weight) {
                    rows[t].extend_from_slice(family_reps);
                }
            }
            for row in &mut rows {
                row.sort_unstable();
                row.dedup();
            }
            rows
        }
    };
    Ok(TestMatrix {
        width: structure.population(),
        rows,
    })
}
