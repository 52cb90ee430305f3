//! Binary code families used to multiplex element signals.
//!
//! Three families are provided:
//!
//! - **Rademacher** (divide-by-two) codes, `log2(L) + 1` per length.
//! - **Walsh-Hadamard** codes in sequency order. Row `s` equals the product of
//!   the Rademacher codes selected by the bits of `gray(s)`, so the family is
//!   closed under the elementwise product and the product index is
//!   `gray⁻¹(gray(a) ^ gray(b))`.
//! - **m-sequences and Gold codes** generated by linear feedback shift
//!   registers.
//!
//! A set of codes has *balanced orthogonal code products* (BOCP) when every
//! member is balanced, the members are mutually orthogonal and every pairwise
//! product is balanced and distinct from all other products and all members.
//! Inside a Walsh family this is a Sidon-type condition on the Rademacher
//! bitmasks, which [`select_bocp`] searches by backtracking.

use std::fmt;
use std::time::{Duration, Instant};

use crate::error::CodegenError;

/// A sequence of ±1 chips.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Code {
    chips: Vec<i8>,
}

impl Code {
    pub fn new(chips: Vec<i8>) -> Result<Self, CodegenError> {
        if chips.is_empty() {
            return Err(CodegenError::EmptyCode);
        }
        if let Some(pos) = chips.iter().position(|&c| c != 1 && c != -1) {
            return Err(CodegenError::InvalidChip {
                position: pos,
                value: chips[pos],
            });
        }
        Ok(Self { chips })
    }

    /// All-ones code (`R_0` / `W_0`).
    pub fn ones(len: usize) -> Self {
        Self {
            chips: vec![1; len.max(1)],
        }
    }

    /// Maps LFSR bits to chips: bit 0 → +1, bit 1 → −1.
    pub fn from_bits(bits: &[u8]) -> Result<Self, CodegenError> {
        Self::new(bits.iter().map(|&b| if b & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn sum(&self) -> i64 {
        self.chips.iter().map(|&c| c as i64).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.sum() == 0
    }

    pub fn dot(&self, other: &Code) -> Result<i64, CodegenError> {
        check_len(self, other)?;
        Ok(self
            .chips
            .iter()
            .zip(&other.chips)
            .map(|(&a, &b)| (a * b) as i64)
            .sum())
    }

    pub fn product(&self, other: &Code) -> Result<Code, CodegenError> {
        code_product(self, other)
    }

    /// Chip value as `f64`, convenient for correlators.
    pub fn chip_f64(&self, t: usize) -> f64 {
        self.chips[t] as f64
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &c in &self.chips {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn check_len(a: &Code, b: &Code) -> Result<(), CodegenError> {
    if a.len() != b.len() {
        return Err(CodegenError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Elementwise product of two equal-length codes.
pub fn code_product(a: &Code, b: &Code) -> Result<Code, CodegenError> {
    check_len(a, b)?;
    Ok(Code {
        chips: a.chips.iter().zip(&b.chips).map(|(&x, &y)| x * y).collect(),
    })
}

/// Returns `m` where `len = 2^m`, `m >= 1`.
fn log2_len(len: usize) -> Result<u32, CodegenError> {
    if len < 2 || !len.is_power_of_two() {
        return Err(CodegenError::InvalidLength(len));
    }
    Ok(len.trailing_zeros())
}

#[inline]
pub fn gray(s: usize) -> usize {
    s ^ (s >> 1)
}

#[inline]
pub fn inverse_gray(mut g: usize) -> usize {
    let mut s = 0;
    while g != 0 {
        s ^= g;
        g >>= 1;
    }
    s
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    x.reverse_bits() >> (usize::BITS - bits)
}

/// Rademacher codes `R_0..R_m` for `len = 2^m`; `R_k` alternates sign in
/// blocks of `len / 2^k`.
pub fn gen_rademacher(len: usize) -> Result<Vec<Code>, CodegenError> {
    let m = log2_len(len)?;
    Ok((0..=m).map(|k| rademacher_row(len, m, k)).collect())
}

fn rademacher_row(len: usize, m: u32, k: u32) -> Code {
    if k == 0 {
        return Code::ones(len);
    }
    let shift = m - k;
    Code {
        chips: (0..len)
            .map(|t| if (t >> shift) & 1 == 0 { 1 } else { -1 })
            .collect(),
    }
}

/// Walsh code with sequency index `s` (number of sign changes) of length
/// `2^m`.
fn walsh_row(len: usize, m: u32, s: usize) -> Code {
    // Bit j of gray(s) selects R_{j+1}, which flips on bit (m-1-j) of t.
    let mask = bit_reverse(gray(s), m);
    Code {
        chips: (0..len)
            .map(|t| if (t & mask).count_ones().is_multiple_of(2) { 1 } else { -1 })
            .collect(),
    }
}

/// Complete Walsh family of length `len` in sequency order.
pub fn gen_walsh(len: usize) -> Result<Vec<Code>, CodegenError> {
    let m = log2_len(len)?;
    Ok((0..len).map(|s| walsh_row(len, m, s)).collect())
}

/// A single sequency-ordered Walsh code.
pub fn walsh_code(len: usize, index: usize) -> Result<Code, CodegenError> {
    let m = log2_len(len)?;
    if index >= len {
        return Err(CodegenError::IndexOutOfRange { index, len });
    }
    Ok(walsh_row(len, m, index))
}

/// Maps a sequency index to the row of the natural-order (Sylvester)
/// Hadamard matrix, whose row `h` has chip `(-1)^popcount(h & t)`.
pub fn sequency_to_natural(index: usize, len: usize) -> Result<usize, CodegenError> {
    let m = log2_len(len)?;
    Ok(bit_reverse(gray(index), m))
}

pub fn natural_to_sequency(row: usize, len: usize) -> Result<usize, CodegenError> {
    let m = log2_len(len)?;
    Ok(inverse_gray(bit_reverse(row, m)))
}

/// Sequency index of the product of two sequency-ordered Walsh codes.
pub fn walsh_product_index(a: usize, b: usize) -> usize {
    inverse_gray(gray(a) ^ gray(b))
}

/// Sequency index of Rademacher code `R_k` within the Walsh family.
pub fn rademacher_walsh_index(k: u32) -> usize {
    if k == 0 {
        0
    } else {
        (1usize << k) - 1
    }
}

// ---------------------------------------------------------------------------
// BOCP verification and search
// ---------------------------------------------------------------------------

/// First property a candidate code set fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BocpViolation {
    Empty,
    LengthMismatch { member: usize },
    Unbalanced { member: usize },
    NotOrthogonal { a: usize, b: usize },
    ProductUnbalanced { a: usize, b: usize },
    ProductCollidesWithMember { a: usize, b: usize, member: usize },
    ProductsCollide { first: (usize, usize), second: (usize, usize) },
    ProductNotOrthogonal { first: (usize, usize), second: (usize, usize) },
    ProductNotOrthogonalToMember { a: usize, b: usize, member: usize },
}

impl fmt::Display for BocpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "empty code set"),
            Self::LengthMismatch { member } => write!(f, "member {member} has a different length"),
            Self::Unbalanced { member } => write!(f, "member {member} is not balanced"),
            Self::NotOrthogonal { a, b } => write!(f, "members {a} and {b} are not orthogonal"),
            Self::ProductUnbalanced { a, b } => write!(f, "product {a}*{b} is not balanced"),
            Self::ProductCollidesWithMember { a, b, member } => {
                write!(f, "product {a}*{b} equals member {member}")
            }
            Self::ProductsCollide { first, second } => write!(
                f,
                "products {}*{} and {}*{} coincide",
                first.0, first.1, second.0, second.1
            ),
            Self::ProductNotOrthogonal { first, second } => write!(
                f,
                "products {}*{} and {}*{} are not orthogonal",
                first.0, first.1, second.0, second.1
            ),
            Self::ProductNotOrthogonalToMember { a, b, member } => {
                write!(f, "product {a}*{b} is not orthogonal to member {member}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BocpReport {
    pub ok: bool,
    pub first_violation: Option<BocpViolation>,
}

impl BocpReport {
    fn fail(v: BocpViolation) -> Self {
        Self {
            ok: false,
            first_violation: Some(v),
        }
    }
}

/// Checks the BOCP properties in a fixed order and reports the first failure.
pub fn verify_bocp(set: &[Code]) -> BocpReport {
    let Some(first) = set.first() else {
        return BocpReport::fail(BocpViolation::Empty);
    };
    let len = first.len();
    for (i, c) in set.iter().enumerate() {
        if c.len() != len {
            return BocpReport::fail(BocpViolation::LengthMismatch { member: i });
        }
    }
    for (i, c) in set.iter().enumerate() {
        if !c.is_balanced() {
            return BocpReport::fail(BocpViolation::Unbalanced { member: i });
        }
    }
    for a in 0..set.len() {
        for b in a + 1..set.len() {
            if set[a].dot(&set[b]).unwrap_or(1) != 0 {
                return BocpReport::fail(BocpViolation::NotOrthogonal { a, b });
            }
        }
    }

    let mut products: Vec<((usize, usize), Code)> = Vec::new();
    for a in 0..set.len() {
        for b in a + 1..set.len() {
            let p = code_product(&set[a], &set[b]).expect("lengths checked");
            if !p.is_balanced() {
                return BocpReport::fail(BocpViolation::ProductUnbalanced { a, b });
            }
            if let Some(member) = set.iter().position(|c| *c == p) {
                return BocpReport::fail(BocpViolation::ProductCollidesWithMember { a, b, member });
            }
            if let Some((first, _)) = products.iter().find(|(_, q)| *q == p) {
                return BocpReport::fail(BocpViolation::ProductsCollide {
                    first: *first,
                    second: (a, b),
                });
            }
            products.push(((a, b), p));
        }
    }
    for (x, (pair_x, px)) in products.iter().enumerate() {
        for (member, c) in set.iter().enumerate() {
            if px.dot(c).unwrap_or(1) != 0 {
                return BocpReport::fail(BocpViolation::ProductNotOrthogonalToMember {
                    a: pair_x.0,
                    b: pair_x.1,
                    member,
                });
            }
        }
        for (pair_y, py) in products.iter().skip(x + 1) {
            if px.dot(py).unwrap_or(1) != 0 {
                return BocpReport::fail(BocpViolation::ProductNotOrthogonal {
                    first: *pair_x,
                    second: *pair_y,
                });
            }
        }
    }
    BocpReport {
        ok: true,
        first_violation: None,
    }
}

/// A BOCP subset of a Walsh family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BocpSet {
    pub members: Vec<Code>,
    /// Sequency index of each member within the length-`L` Walsh family.
    pub walsh_indices: Vec<usize>,
}

impl BocpSet {
    pub fn from_walsh_indices(len: usize, indices: &[usize]) -> Result<Self, CodegenError> {
        let members = indices
            .iter()
            .map(|&i| walsh_code(len, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            members,
            walsh_indices: indices.to_vec(),
        })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn code_length(&self) -> usize {
        self.members.first().map_or(0, Code::len)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BocpSearchOptions {
    pub time_limit: Duration,
}

impl Default for BocpSearchOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(60),
        }
    }
}

/// Searches the length-`len` Walsh family for `wanted` codes with balanced
/// orthogonal code products, using the default 60 s limit.
pub fn select_bocp(len: usize, wanted: usize) -> Result<BocpSet, CodegenError> {
    select_bocp_with(len, wanted, BocpSearchOptions::default())
}

pub fn select_bocp_with(
    len: usize,
    wanted: usize,
    opts: BocpSearchOptions,
) -> Result<BocpSet, CodegenError> {
    log2_len(len)?;
    if wanted == 0 {
        return Err(CodegenError::InvalidCount(0));
    }
    let mut search = SidonSearch::new(len, wanted, opts.time_limit);
    let found = search.run();
    let to_set = |masks: &[usize]| {
        let idx: Vec<usize> = masks.iter().map(|&g| inverse_gray(g)).collect();
        BocpSet::from_walsh_indices(len, &idx)
    };
    if found {
        return to_set(&search.chosen);
    }
    let best = to_set(&search.best)?;
    Err(CodegenError::BocpInfeasible {
        len,
        wanted,
        best_size: best.len(),
        timed_out: search.timed_out,
        best: Box::new(best),
    })
}

/// Backtracking over Rademacher bitmasks (`gray(s)` for sequency index `s`),
/// visiting candidates in increasing sequency order. A mask is admissible when
/// it is not already "occupied": occupied masks are 0, the members and all
/// pairwise XORs of members. Adding a member occupies its XOR with every
/// existing member, and each of those must have been free.
struct SidonSearch {
    len: usize,
    wanted: usize,
    occupied: Vec<bool>,
    chosen: Vec<usize>,
    best: Vec<usize>,
    deadline: Instant,
    timed_out: bool,
    nodes: u64,
}

impl SidonSearch {
    fn new(len: usize, wanted: usize, limit: Duration) -> Self {
        let mut occupied = vec![false; len];
        occupied[0] = true;
        Self {
            len,
            wanted,
            occupied,
            chosen: Vec::new(),
            best: Vec::new(),
            deadline: Instant::now() + limit,
            timed_out: false,
            nodes: 0,
        }
    }

    fn run(&mut self) -> bool {
        if self.wanted > self.len - 1 {
            // more codes than non-constant Walsh rows
            self.greedy_best();
            return false;
        }
        self.dfs(1)
    }

    fn greedy_best(&mut self) {
        for s in 1..self.len {
            let g = gray(s);
            if let Some(new) = self.admissible(g) {
                self.push(g, &new);
            }
        }
        self.best = self.chosen.clone();
    }

    fn admissible(&self, g: usize) -> Option<Vec<usize>> {
        if self.occupied[g] {
            return None;
        }
        let mut new = Vec::with_capacity(self.chosen.len() + 1);
        new.push(g);
        for &x in &self.chosen {
            let p = g ^ x;
            if self.occupied[p] {
                return None;
            }
            new.push(p);
        }
        Some(new)
    }

    fn push(&mut self, g: usize, new: &[usize]) {
        for &p in new {
            self.occupied[p] = true;
        }
        self.chosen.push(g);
    }

    fn pop(&mut self, new: &[usize]) {
        for &p in new {
            self.occupied[p] = false;
        }
        self.chosen.pop();
    }

    fn dfs(&mut self, start: usize) -> bool {
        self.nodes += 1;
        if self.chosen.len() > self.best.len() {
            self.best = self.chosen.clone();
        }
        if self.chosen.len() >= self.wanted {
            return true;
        }
        if self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return false;
        }
        let free: Vec<usize> = (start..self.len)
            .filter(|&s| !self.occupied[gray(s)])
            .collect();
        if self.chosen.len() + free.len() < self.wanted {
            return false;
        }
        for s in free {
            let g = gray(s);
            let Some(new) = self.admissible(g) else {
                continue;
            };
            self.push(g, &new);
            if self.dfs(s + 1) {
                return true;
            }
            self.pop(&new);
            if self.timed_out {
                return false;
            }
        }
        false
    }
}

// ---------------------------------------------------------------------------
// LFSR, m-sequences and Gold codes
// ---------------------------------------------------------------------------

/// Fibonacci shift register: stage 1 receives the XOR of the tapped stages and
/// the output is taken from stage `n`. Bit `i - 1` of `seed` is stage `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfsrSpec {
    stages: u32,
    taps: Vec<u32>,
    seed: u32,
}

impl LfsrSpec {
    pub fn new(stages: u32, taps: &[u32], seed: u32) -> Result<Self, CodegenError> {
        if !(2..=31).contains(&stages) {
            return Err(CodegenError::InvalidLfsr(format!(
                "stage count {stages} outside 2..=31"
            )));
        }
        if taps.is_empty() {
            return Err(CodegenError::InvalidLfsr("no taps".into()));
        }
        let mut sorted = taps.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != taps.len() {
            return Err(CodegenError::InvalidLfsr(format!("duplicate taps in {taps:?}")));
        }
        if sorted[0] < 1 || *sorted.last().unwrap() != stages {
            return Err(CodegenError::InvalidLfsr(format!(
                "taps {taps:?} must lie in 1..={stages} and include {stages}"
            )));
        }
        let mask = (1u32 << stages) - 1;
        if seed & mask == 0 {
            return Err(CodegenError::ZeroSeed);
        }
        Ok(Self {
            stages,
            taps: taps.to_vec(),
            seed: seed & mask,
        })
    }

    /// Register initialised to all ones.
    pub fn with_ones(stages: u32, taps: &[u32]) -> Result<Self, CodegenError> {
        Self::new(stages, taps, u32::MAX)
    }

    pub fn stages(&self) -> u32 {
        self.stages
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    /// Maximal period `2^n - 1`.
    pub fn max_period(&self) -> usize {
        (1usize << self.stages) - 1
    }

    fn step(&self, state: u32) -> (u8, u32) {
        let out = ((state >> (self.stages - 1)) & 1) as u8;
        let fb = self
            .taps
            .iter()
            .fold(0u32, |acc, &t| acc ^ ((state >> (t - 1)) & 1));
        let mask = (1u32 << self.stages) - 1;
        (out, ((state << 1) | fb) & mask)
    }
}

/// One period of LFSR output bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MSequence {
    pub bits: Vec<u8>,
    pub period: usize,
    pub maximal: bool,
}

impl MSequence {
    pub fn to_code(&self) -> Code {
        Code::from_bits(&self.bits).expect("LFSR output is never empty")
    }
}

/// Runs the register until its state repeats. Primitive taps give a period of
/// `2^n - 1`; any other feedback yields the shorter actual period.
pub fn gen_msequence(spec: &LfsrSpec) -> MSequence {
    let max = spec.max_period();
    let mut bits = Vec::with_capacity(max);
    let mut state = spec.seed;
    loop {
        let (out, next) = spec.step(state);
        bits.push(out);
        state = next;
        if state == spec.seed || bits.len() > max {
            break;
        }
    }
    let period = if state == spec.seed { bits.len() } else { max };
    // A non-primitive register may enter a cycle that excludes the seed.
    bits.truncate(period);
    let maximal = period == max;
    if !maximal {
        log::warn!(
            "taps {:?} on {} stages are not maximal: period {} < {}",
            spec.taps,
            spec.stages,
            period,
            max
        );
    }
    MSequence {
        bits,
        period,
        maximal,
    }
}

/// Gold code: `seq1[i] XOR seq2[(i + shift) mod T]`.
pub fn gen_gold(seq1: &LfsrSpec, seq2: &LfsrSpec, shift: usize) -> Result<Vec<u8>, CodegenError> {
    let a = gen_msequence(seq1);
    let b = gen_msequence(seq2);
    gold_from_sequences(&a.bits, &b.bits, shift)
}

pub fn gold_from_sequences(a: &[u8], b: &[u8], shift: usize) -> Result<Vec<u8>, CodegenError> {
    if a.len() != b.len() {
        return Err(CodegenError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let period = a.len();
    if shift >= period {
        return Err(CodegenError::ShiftOutOfRange { shift, period });
    }
    Ok(a
        .iter()
        .enumerate()
        .map(|(i, &x)| x ^ b[(i + shift) % period])
        .collect())
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(codes: &[Code]) -> Vec<Vec<i8>> {
        codes.iter().map(|c| c.chips().to_vec()).collect()
    }

    #[test]
    fn rademacher_smallest() {
        assert_eq!(rows(&gen_rademacher(2).unwrap()), vec![vec![1, 1], vec![1, -1]]);
    }

    #[test]
    fn rademacher_16_first_divider() {
        let r = gen_rademacher(16).unwrap();
        assert_eq!(r.len(), 5);
        let mut expect = vec![1i8; 8];
        expect.extend([-1i8; 8]);
        assert_eq!(r[1].chips(), &expect[..]);
    }

    #[test]
    fn invalid_lengths() {
        for len in [0, 1, 3, 12] {
            assert!(matches!(gen_rademacher(len), Err(CodegenError::InvalidLength(_))));
            assert!(matches!(gen_walsh(len), Err(CodegenError::InvalidLength(_))));
        }
    }

    #[test]
    fn walsh_smallest() {
        assert_eq!(rows(&gen_walsh(2).unwrap()), vec![vec![1, 1], vec![1, -1]]);
    }

    #[test]
    fn walsh_sequency_counts_sign_changes() {
        for (s, w) in gen_walsh(32).unwrap().iter().enumerate() {
            let changes = w.chips().windows(2).filter(|p| p[0] != p[1]).count();
            assert_eq!(changes, s);
        }
    }

    #[test]
    fn natural_order_map_round_trips() {
        let len = 64;
        for s in 0..len {
            let h = sequency_to_natural(s, len).unwrap();
            assert_eq!(natural_to_sequency(h, len).unwrap(), s);
            let w = walsh_code(len, s).unwrap();
            for t in 0..len {
                let expect = if (h & t).count_ones() % 2 == 0 { 1 } else { -1 };
                assert_eq!(w.chips()[t], expect);
            }
        }
    }

    #[test]
    fn self_product_is_all_ones() {
        let w = walsh_code(16, 11).unwrap();
        assert_eq!(code_product(&w, &w).unwrap(), Code::ones(16));
    }

    #[test]
    fn rademacher_pair_product_is_third_walsh_row() {
        let r = gen_rademacher(8).unwrap();
        let p = code_product(&r[1], &r[2]).unwrap();
        assert_eq!(p.chips(), &[1, 1, -1, -1, -1, -1, 1, 1]);
        assert_eq!(p, gen_walsh(8).unwrap()[2]);
    }

    #[test]
    fn product_length_mismatch() {
        let err = code_product(&Code::ones(4), &Code::ones(8)).unwrap_err();
        assert!(matches!(err, CodegenError::LengthMismatch { left: 4, right: 8 }));
    }

    #[test]
    fn invalid_chip_rejected() {
        assert!(Code::new(vec![1, 0, -1]).is_err());
        assert!(Code::new(vec![]).is_err());
    }

    #[test]
    fn rademacher_set_is_bocp() {
        let r = gen_rademacher(8).unwrap();
        assert!(verify_bocp(&r[1..]).ok);
    }

    #[test]
    fn colliding_walsh_set_names_member() {
        // Rows 1, 2, 3 are R_1, R_1R_2, R_2; the first product lands on R_2.
        let w = gen_walsh(8).unwrap();
        let report = verify_bocp(&[w[1].clone(), w[2].clone(), w[3].clone()]);
        assert!(!report.ok);
        assert_eq!(
            report.first_violation,
            Some(BocpViolation::ProductCollidesWithMember { a: 0, b: 1, member: 2 })
        );
    }

    #[test]
    fn singleton_balanced_is_bocp() {
        let w = walsh_code(8, 5).unwrap();
        assert!(verify_bocp(&[w]).ok);
        let report = verify_bocp(&[Code::ones(8)]);
        assert_eq!(report.first_violation, Some(BocpViolation::Unbalanced { member: 0 }));
    }

    #[test]
    fn empty_set_reported() {
        assert_eq!(verify_bocp(&[]).first_violation, Some(BocpViolation::Empty));
    }

    #[test]
    fn select_bocp_length_8() {
        let set = select_bocp(8, 3).unwrap();
        assert_eq!(set.walsh_indices, vec![1, 2, 4]);
        assert!(verify_bocp(&set.members).ok);
    }

    #[test]
    fn select_bocp_proven_impossible() {
        // Exhaustive: no four Walsh rows of length 8 have BOCP.
        match select_bocp(8, 4) {
            Err(CodegenError::BocpInfeasible {
                best_size,
                timed_out,
                ..
            }) => {
                assert_eq!(best_size, 3);
                assert!(!timed_out);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn select_bocp_times_out_with_best_so_far() {
        let opts = BocpSearchOptions {
            time_limit: Duration::from_millis(50),
        };
        // 200 codes far exceeds any Sidon-type subset of 2^12 masks.
        match select_bocp_with(1 << 12, 200, opts) {
            Err(CodegenError::BocpInfeasible {
                timed_out, best, best_size, ..
            }) => {
                assert!(timed_out);
                assert_eq!(best.len(), best_size);
                assert!(best_size > 10);
                assert!(verify_bocp(&best.members).ok);
            }
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn lfsr_validation() {
        assert!(matches!(LfsrSpec::new(5, &[5, 3], 0), Err(CodegenError::ZeroSeed)));
        assert!(LfsrSpec::new(5, &[], 1).is_err());
        assert!(LfsrSpec::new(5, &[4, 3], 1).is_err());
        assert!(LfsrSpec::new(5, &[5, 5], 1).is_err());
        assert!(LfsrSpec::new(5, &[6, 3], 1).is_err());
    }

    #[test]
    fn three_stage_msequence_balance() {
        let m = gen_msequence(&LfsrSpec::with_ones(3, &[3, 2]).unwrap());
        assert_eq!(m.period, 7);
        assert!(m.maximal);
        assert_eq!(m.bits.iter().filter(|&&b| b == 1).count(), 4);
    }

    #[test]
    fn non_primitive_taps_report_short_period() {
        // x^4 + x^2 + 1 is not primitive.
        let m = gen_msequence(&LfsrSpec::with_ones(4, &[4, 2]).unwrap());
        assert!(!m.maximal);
        assert!(m.period < 15);
        assert_eq!(m.bits.len(), m.period);
    }

    #[test]
    fn gold_errors() {
        let a = LfsrSpec::with_ones(5, &[5, 3]).unwrap();
        let b = LfsrSpec::with_ones(4, &[4, 3]).unwrap();
        assert!(matches!(gen_gold(&a, &b, 0), Err(CodegenError::LengthMismatch { .. })));
        assert!(matches!(
            gen_gold(&a, &a, 31),
            Err(CodegenError::ShiftOutOfRange { .. })
        ));
    }

    #[test]
    fn bits_map_to_bpsk_chips() {
        let c = Code::from_bits(&[0, 1, 1, 0]).unwrap();
        assert_eq!(c.chips(), &[1, -1, -1, 1]);
    }
}
