//! Set partitions of finite ground sets, in particular of the signed set
//! `[±m] = {-1, 1, -2, 2, ..., -m, m}`.
//!
//! Ground elements are nonzero `i32`s ordered by `(|k|, sign)` so that `-k`
//! precedes `k`. A partition is stored canonically as a restricted growth
//! string over that order: blocks are numbered by their first element.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Enumeration of all partitions is refused beyond this many ground elements.
pub const ENUMERATION_CAP: usize = 12;

/// Pairings are generated directly, so they can be listed on larger ground sets.
pub const PAIRING_ENUMERATION_CAP: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("ground set of size {size} exceeds the enumeration cap of {cap}")]
    GroundTooLarge { size: usize, cap: usize },
    #[error("symmetry is only defined on signed ground sets")]
    NotSigned,
    #[error("partitions live on different ground sets")]
    GroundMismatch,
    #[error("element {0} is not in the ground set")]
    NotInGround(i32),
    #[error("ground sets overlap at element {0}")]
    Overlap(i32),
    #[error("invalid ground set: {0}")]
    InvalidGround(String),
    #[error("invalid blocks: {0}")]
    InvalidBlocks(String),
    #[error("index value {value} is outside 1..={n}")]
    ValueOutOfRange { value: usize, n: usize },
    #[error("could not parse partition: {0}")]
    Parse(String),
}

/// Total order on ground elements: `-1 < 1 < -2 < 2 < ...`.
pub fn element_cmp(a: i32, b: i32) -> Ordering {
    (a.unsigned_abs(), a > 0).cmp(&(b.unsigned_abs(), b > 0))
}

/// A finite ordered set of nonzero integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundSet {
    elements: Vec<i32>,
}

impl GroundSet {
    /// `[±m]`.
    pub fn signed(m: usize) -> Self {
        let m = m as i32;
        Self {
            elements: (1..=m).flat_map(|k| [-k, k]).collect(),
        }
    }

    /// `[m] = {1, ..., m}`.
    pub fn plain(m: usize) -> Self {
        Self {
            elements: (1..=m as i32).collect(),
        }
    }

    pub fn from_elements(elements: impl IntoIterator<Item = i32>) -> Result<Self, PartitionError> {
        let mut elements: Vec<i32> = elements.into_iter().collect();
        if elements.contains(&0) {
            return Err(PartitionError::InvalidGround("0 is not a valid element".into()));
        }
        elements.sort_by(|a, b| element_cmp(*a, *b));
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(PartitionError::InvalidGround(format!("duplicate element {}", w[0])));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[i32] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, k: i32) -> Option<usize> {
        self.elements.binary_search_by(|e| element_cmp(*e, k)).ok()
    }

    pub fn contains(&self, k: i32) -> bool {
        self.position(k).is_some()
    }

    /// True when the set is closed under negation and nonempty.
    pub fn is_signed(&self) -> bool {
        !self.is_empty() && self.elements.iter().all(|&k| self.contains(-k))
    }
}

/// Which partitions an enumeration yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionFilter {
    All,
    /// Every block has even cardinality.
    Even,
    /// Every block has exactly two elements.
    Pairings,
    /// Pairings closed under negation of blocks (signed ground sets only).
    SymmetricPairings,
}

/// A set partition in canonical form.
#[derive(Debug, Clone)]
pub struct SetPartition {
    ground: GroundSet,
    labels: Vec<usize>,
    blocks: Vec<Vec<i32>>,
}

impl PartialEq for SetPartition {
    fn eq(&self, other: &Self) -> bool {
        self.ground == other.ground && self.labels == other.labels
    }
}

impl Eq for SetPartition {}

impl std::hash::Hash for SetPartition {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ground.hash(state);
        self.labels.hash(state);
    }
}

impl PartialOrd for SetPartition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SetPartition {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.ground, &self.labels).cmp(&(&other.ground, &other.labels))
    }
}

fn canonical_labels(raw: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    raw.iter()
        .map(|r| match map.iter().find(|(k, _)| k == r) {
            Some(&(_, v)) => v,
            None => {
                let v = map.len();
                map.push((*r, v));
                v
            }
        })
        .collect()
}

impl SetPartition {
    /// Builds a partition from any block labelling aligned with the ground order.
    pub fn from_labels(ground: GroundSet, raw: &[usize]) -> Result<Self, PartitionError> {
        if raw.len() != ground.len() {
            return Err(PartitionError::InvalidBlocks(format!(
                "{} labels for a ground set of size {}",
                raw.len(),
                ground.len()
            )));
        }
        let labels = canonical_labels(raw);
        let count = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (pos, &l) in labels.iter().enumerate() {
            blocks[l].push(ground.elements[pos]);
        }
        Ok(Self { ground, labels, blocks })
    }

    /// Builds a partition from explicit blocks that must exactly cover `ground`.
    pub fn from_blocks(ground: GroundSet, blocks: &[Vec<i32>]) -> Result<Self, PartitionError> {
        let mut raw = vec![usize::MAX; ground.len()];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::InvalidBlocks("empty block".into()));
            }
            for &k in block {
                let pos = ground.position(k).ok_or(PartitionError::NotInGround(k))?;
                if raw[pos] != usize::MAX {
                    return Err(PartitionError::InvalidBlocks(format!("element {k} appears twice")));
                }
                raw[pos] = b;
            }
        }
        if let Some(pos) = raw.iter().position(|&r| r == usize::MAX) {
            return Err(PartitionError::InvalidBlocks(format!(
                "element {} is not covered",
                ground.elements[pos]
            )));
        }
        Self::from_labels(ground, &raw)
    }

    /// Blocks given explicitly; the ground set is their union.
    pub fn from_block_list(blocks: &[Vec<i32>]) -> Result<Self, PartitionError> {
        let ground = GroundSet::from_elements(blocks.iter().flatten().copied())?;
        Self::from_blocks(ground, blocks)
    }

    /// The partition of `ground` into one block.
    pub fn one(ground: GroundSet) -> Self {
        let raw = vec![0; ground.len()];
        Self::from_labels(ground, &raw).expect("labels match ground")
    }

    /// The partition of `ground` into singletons.
    pub fn zero(ground: GroundSet) -> Self {
        let raw: Vec<usize> = (0..ground.len()).collect();
        Self::from_labels(ground, &raw).expect("labels match ground")
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn blocks(&self) -> &[Vec<i32>] {
        &self.blocks
    }

    /// Block labels aligned with the ground order.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing `k`.
    pub fn block_of(&self, k: i32) -> Option<usize> {
        self.ground.position(k).map(|p| self.labels[p])
    }

    pub fn is_even(&self) -> bool {
        self.blocks.iter().all(|b| b.len() % 2 == 0)
    }

    pub fn is_pairing(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    /// True when `-B` is a block for every block `B`.
    pub fn is_symmetric(&self) -> Result<bool, PartitionError> {
        if !self.ground.is_signed() {
            return Err(PartitionError::NotSigned);
        }
        let mut image = vec![usize::MAX; self.blocks.len()];
        for (pos, &k) in self.ground.elements.iter().enumerate() {
            let neg = self.block_of(-k).expect("signed ground");
            let l = self.labels[pos];
            if image[l] == usize::MAX {
                image[l] = neg;
            } else if image[l] != neg {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True when every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &SetPartition) -> Result<bool, PartitionError> {
        if self.ground != other.ground {
            return Err(PartitionError::GroundMismatch);
        }
        Ok(self
            .blocks
            .iter()
            .all(|b| b.iter().all(|&k| other.block_of(k) == other.block_of(b[0]))))
    }

    /// Restriction to `subset`, which must be contained in the ground set.
    pub fn restrict(&self, subset: &GroundSet) -> Result<SetPartition, PartitionError> {
        let raw = subset
            .elements
            .iter()
            .map(|&k| self.block_of(k).ok_or(PartitionError::NotInGround(k)))
            .collect::<Result<Vec<_>, _>>()?;
        SetPartition::from_labels(subset.clone(), &raw)
    }

    /// Partition of the disjoint union of the two ground sets.
    pub fn disjoint_union(&self, other: &SetPartition) -> Result<SetPartition, PartitionError> {
        if let Some(&k) = other.ground.elements.iter().find(|&&k| self.ground.contains(k)) {
            return Err(PartitionError::Overlap(k));
        }
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        SetPartition::from_block_list(&blocks)
    }

    /// Image of every element under `f`, keeping the block structure.
    pub fn relabel(&self, f: impl Fn(i32) -> i32) -> Result<SetPartition, PartitionError> {
        let blocks: Vec<Vec<i32>> = self.blocks.iter().map(|b| b.iter().map(|&k| f(k)).collect()).collect();
        SetPartition::from_block_list(&blocks)
    }

    /// One of the four parity views used when splitting a partition of `[±m]`.
    pub fn parity_view(&self, view: ParityView) -> Result<SetPartition, PartitionError> {
        match view {
            ParityView::EvenRestriction | ParityView::OddRestriction => {
                let want = if view == ParityView::EvenRestriction { 0 } else { 1 };
                let subset =
                    GroundSet::from_elements(self.ground.elements.iter().copied().filter(|k| k.rem_euclid(2) == want))?;
                self.restrict(&subset)
            }
            ParityView::EvenRelabel => self.relabel(|k| 2 * k),
            ParityView::OddRelabel => self.relabel(|k| 2 * k - k.signum()),
        }
    }
}

/// Restrictions and relabellings that separate even and odd edge labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityView {
    /// Restriction to the even elements of the ground set.
    EvenRestriction,
    /// Restriction to the odd elements of the ground set.
    OddRestriction,
    /// Relabelling `k -> 2k`.
    EvenRelabel,
    /// Relabelling `k -> 2k - sign(k)`.
    OddRelabel,
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, k) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{k}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for SetPartition {
    type Err = PartitionError;

    /// Parses `{{-1,2},{1,-2}}`; whitespace is ignored and the outer braces are optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = if s.starts_with("{{") && s.ends_with("}}") {
            &s[1..s.len() - 1]
        } else {
            s.as_str()
        };
        let mut blocks = Vec::new();
        let mut rest = inner;
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('{')
                .ok_or_else(|| PartitionError::Parse(format!("expected '{{' at '{rest}'")))?;
            let close = open
                .find('}')
                .ok_or_else(|| PartitionError::Parse("unbalanced braces".into()))?;
            let block = open[..close]
                .split(',')
                .map(|t| {
                    t.parse::<i32>()
                        .map_err(|e| PartitionError::Parse(format!("'{t}': {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            blocks.push(block);
            rest = &open[close + 1..];
            rest = rest.strip_prefix(',').unwrap_or(rest);
        }
        if blocks.is_empty() {
            return Err(PartitionError::Parse("no blocks".into()));
        }
        SetPartition::from_block_list(&blocks)
    }
}

/// Iterator over partitions of a ground set in restricted-growth-string order.
pub struct Partitions {
    ground: GroundSet,
    filter: PartitionFilter,
    rgs: Vec<usize>,
    done: bool,
    listed: Option<std::vec::IntoIter<SetPartition>>,
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if let Some(listed) = &mut self.listed {
            return listed.next();
        }
        while !self.done {
            let current = SetPartition::from_labels(self.ground.clone(), &self.rgs).expect("valid rgs");
            self.advance();
            if self.accepts(&current) {
                return Some(current);
            }
        }
        None
    }
}

impl Partitions {
    fn advance(&mut self) {
        let n = self.rgs.len();
        if n == 0 {
            self.done = true;
            return;
        }
        let mut prefix_max = vec![0usize; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(self.rgs[i - 1]);
        }
        for i in (1..n).rev() {
            if self.rgs[i] <= prefix_max[i] {
                self.rgs[i] += 1;
                for r in &mut self.rgs[i + 1..] {
                    *r = 0;
                }
                return;
            }
        }
        self.done = true;
    }

    fn accepts(&self, p: &SetPartition) -> bool {
        match self.filter {
            PartitionFilter::All => true,
            PartitionFilter::Even => p.is_even(),
            PartitionFilter::Pairings => p.is_pairing(),
            PartitionFilter::SymmetricPairings => p.is_pairing() && p.is_symmetric().unwrap_or(false),
        }
    }
}

/// All partitions of `ground` passing `filter`, in canonical order.
///
/// General enumeration is capped at [`ENUMERATION_CAP`] elements; the pairing
/// filters build their output directly and allow [`PAIRING_ENUMERATION_CAP`].
pub fn enumerate(ground: &GroundSet, filter: PartitionFilter) -> Result<Partitions, PartitionError> {
    let pairing = matches!(filter, PartitionFilter::Pairings | PartitionFilter::SymmetricPairings);
    let cap = if pairing {
        PAIRING_ENUMERATION_CAP
    } else {
        ENUMERATION_CAP
    };
    if ground.len() > cap {
        return Err(PartitionError::GroundTooLarge {
            size: ground.len(),
            cap,
        });
    }
    if filter == PartitionFilter::SymmetricPairings && !ground.is_signed() {
        return Err(PartitionError::NotSigned);
    }
    let listed = pairing.then(|| {
        let mut out = Vec::new();
        if !ground.is_empty() && ground.len().is_multiple_of(2) {
            let symmetric = filter == PartitionFilter::SymmetricPairings;
            collect_pairings(ground, &mut vec![usize::MAX; ground.len()], 0, symmetric, &mut out);
        }
        out.sort();
        out.into_iter()
    });
    Ok(Partitions {
        ground: ground.clone(),
        filter,
        rgs: vec![0; ground.len()],
        done: ground.is_empty(),
        listed,
    })
}

/// Pairs the first unassigned element with each later unassigned one; in the
/// symmetric case the mirror pair `{-a, -b}` is assigned at the same time.
fn collect_pairings(
    ground: &GroundSet,
    labels: &mut Vec<usize>,
    next_label: usize,
    symmetric: bool,
    out: &mut Vec<SetPartition>,
) {
    let Some(first) = labels.iter().position(|&l| l == usize::MAX) else {
        out.push(SetPartition::from_labels(ground.clone(), labels).expect("complete labelling"));
        return;
    };
    let a = ground.elements[first];
    for second in first + 1..labels.len() {
        if labels[second] != usize::MAX {
            continue;
        }
        let b = ground.elements[second];
        let mut assigned = vec![first, second];
        let mut used = 1;
        if symmetric && b != -a {
            let (na, nb) = (
                ground.position(-a).expect("signed"),
                ground.position(-b).expect("signed"),
            );
            if labels[na] != usize::MAX || labels[nb] != usize::MAX {
                continue;
            }
            assigned.extend([na, nb]);
            used = 2;
        }
        for (i, &pos) in assigned.iter().enumerate() {
            labels[pos] = next_label + i / 2;
        }
        collect_pairings(ground, labels, next_label + used, symmetric, out);
        for &pos in &assigned {
            labels[pos] = usize::MAX;
        }
    }
}

/// Möbius function of the partition lattice: zero unless `pi <= theta`,
/// otherwise the product over blocks of `theta` of `(-1)^(c-1) (c-1)!` where
/// `c` counts the blocks of `pi` inside that block.
pub fn mobius(pi: &SetPartition, theta: &SetPartition) -> Result<i64, PartitionError> {
    if !pi.refines(theta)? {
        return Ok(0);
    }
    let mut counts = vec![0usize; theta.block_count()];
    for b in &pi.blocks {
        counts[theta.block_of(b[0]).expect("same ground")] += 1;
    }
    Ok(counts.iter().map(|&c| mobius_chain(c)).product())
}

/// `(-1)^(c-1) (c-1)!`, the Möbius value from the finest to the coarsest
/// partition of a `c`-element set.
pub fn mobius_chain(c: usize) -> i64 {
    let f: i64 = (1..c as i64).product();
    if c.is_multiple_of(2) {
        -f
    } else {
        f
    }
}

/// A function from a ground set into `{1, ..., n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexTuple {
    domain: GroundSet,
    values: Vec<usize>,
    n: usize,
}

impl IndexTuple {
    /// `values` are aligned with the ground order of `domain` and lie in `1..=n`.
    pub fn new(domain: GroundSet, values: Vec<usize>, n: usize) -> Result<Self, PartitionError> {
        if values.len() != domain.len() {
            return Err(PartitionError::InvalidBlocks("tuple length differs from domain".into()));
        }
        if let Some(&value) = values.iter().find(|&&v| v == 0 || v > n) {
            return Err(PartitionError::ValueOutOfRange { value, n });
        }
        Ok(Self { domain, values, n })
    }

    pub fn domain(&self) -> &GroundSet {
        &self.domain
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: i32) -> Option<usize> {
        self.domain.position(k).map(|p| self.values[p])
    }

    /// `k ~ l` iff the tuple takes the same value at `k` and `l`.
    pub fn kernel(&self) -> SetPartition {
        SetPartition::from_labels(self.domain.clone(), &self.values).expect("aligned")
    }

    /// `k -> self(sigma(k))`.
    pub fn compose(&self, sigma: &SignedPermutationMap) -> Result<IndexTuple, PartitionError> {
        if sigma.domain != self.domain {
            return Err(PartitionError::GroundMismatch);
        }
        let values = sigma
            .images
            .iter()
            .map(|&s| self.get(s).expect("same domain"))
            .collect();
        IndexTuple::new(self.domain.clone(), values, self.n)
    }
}

/// A bijection of a ground set onto itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedPermutationMap {
    domain: GroundSet,
    images: Vec<i32>,
}

impl SignedPermutationMap {
    /// `images[i]` is the image of the `i`-th ground element.
    pub fn new(domain: GroundSet, images: Vec<i32>) -> Result<Self, PartitionError> {
        if images.len() != domain.len() {
            return Err(PartitionError::InvalidBlocks(
                "image list length differs from domain".into(),
            ));
        }
        let mut seen = vec![false; domain.len()];
        for &k in &images {
            let p = domain.position(k).ok_or(PartitionError::NotInGround(k))?;
            if seen[p] {
                return Err(PartitionError::InvalidBlocks(format!("{k} is hit twice")));
            }
            seen[p] = true;
        }
        Ok(Self { domain, images })
    }

    pub fn from_fn(domain: GroundSet, f: impl Fn(i32) -> i32) -> Result<Self, PartitionError> {
        let images = domain.elements.iter().map(|&k| f(k)).collect();
        Self::new(domain, images)
    }

    pub fn identity(domain: GroundSet) -> Self {
        let images = domain.elements.clone();
        Self { domain, images }
    }

    pub fn domain(&self) -> &GroundSet {
        &self.domain
    }

    pub fn apply(&self, k: i32) -> Option<i32> {
        self.domain.position(k).map(|p| self.images[p])
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.images.len()];
        for (p, &img) in self.images.iter().enumerate() {
            images[self.domain.position(img).expect("bijection")] = self.domain.elements[p];
        }
        Self {
            domain: self.domain.clone(),
            images,
        }
    }

    /// `k -> self(other(k))`.
    pub fn compose(&self, other: &Self) -> Result<Self, PartitionError> {
        if self.domain != other.domain {
            return Err(PartitionError::GroundMismatch);
        }
        let images = other
            .images
            .iter()
            .map(|&k| self.apply(k).expect("same domain"))
            .collect();
        Ok(Self {
            domain: self.domain.clone(),
            images,
        })
    }

    /// `self^t` for any integer `t`.
    pub fn power(&self, t: i64) -> Self {
        let base = if t < 0 { self.inverse() } else { self.clone() };
        let mut out = Self::identity(self.domain.clone());
        for _ in 0..t.unsigned_abs() {
            out = base.compose(&out).expect("same domain");
        }
        out
    }

    /// The partition `{ self(B) : B in pi }`.
    pub fn act(&self, pi: &SetPartition) -> Result<SetPartition, PartitionError> {
        if pi.ground != self.domain {
            return Err(PartitionError::GroundMismatch);
        }
        pi.relabel(|k| self.apply(k).expect("same domain"))
    }

    /// Lengths of the cycles, in order of their smallest element.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = vec![false; self.domain.len()];
        let mut out = Vec::new();
        for start in 0..self.domain.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut p = start;
            while !seen[p] {
                seen[p] = true;
                len += 1;
                p = self.domain.position(self.images[p]).expect("bijection");
            }
            out.push(len);
        }
        out
    }
}
