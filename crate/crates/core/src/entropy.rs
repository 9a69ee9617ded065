//! Relative logarithmic size, balls and castle entropy over finite
//! cross-sections, plus block-entropy estimators for symbolic systems.
//!
//! All entropies are in bits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::error::EntropyError;
use crate::group::{Element, ElementSet, GroupModel};
use crate::rng;
use crate::section::{self, Castle, SectionSample};
use crate::stats;
use crate::systems::{self, SymbolicSystem};

/// Default ceiling on the base size for exhaustive search.
pub const EXACT_CAP: usize = 8;
/// Fewest samples accepted by the block estimators.
pub const MIN_SAMPLES: usize = 10_000;
/// Shards used for the seed-split standard error.
pub const SHARDS: usize = 100;

/// A labeling of the sample points by `0..size`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Partition {
    labels: Vec<u32>,
    size: usize,
}

impl Partition {
    pub fn new(labels: Vec<u32>) -> Self {
        let size = labels.iter().copied().max().map_or(1, |m| m as usize + 1);
        Partition { labels, size }
    }

    pub fn trivial(n: usize) -> Self {
        Partition::new(alloc::vec![0; n])
    }

    pub fn label(&self, x: usize) -> u32 {
        self.labels[x]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of parts `|P|`.
    pub fn size(&self) -> usize {
        self.size
    }
}

/// Atoms of the conditioning sub-σ-algebra, one id per point.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiberPartition {
    fiber: Vec<u32>,
}

impl FiberPartition {
    pub fn new(fiber: Vec<u32>) -> Self {
        FiberPartition { fiber }
    }

    /// One fiber holding every point.
    pub fn trivial(n: usize) -> Self {
        FiberPartition { fiber: alloc::vec![0; n] }
    }

    pub fn fiber(&self, x: usize) -> u32 {
        self.fiber[x]
    }

    pub fn len(&self) -> usize {
        self.fiber.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fiber.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurabilityReport {
    pub consistent: bool,
    pub checked: usize,
    pub mismatched: usize,
}

/// Fiber-mates outside the window collar must see the same addresses within `ball(radius)`.
pub fn fiber_measurability(sample: &SectionSample, fibers: &FiberPartition, radius: u32) -> MeasurabilityReport {
    let g = sample.group();
    let ball = g.ball(radius);
    let collar = sample.collar(&ball);
    let mut reference: HashMap<u32, Vec<Element>> = HashMap::new();
    let mut checked = 0;
    let mut mismatched = 0;
    for x in 0..sample.len() {
        if collar[x] {
            continue;
        }
        checked += 1;
        let spectrum: Vec<Element> = ball.iter().filter(|a| sample.neighbor(x, a).is_some()).copied().collect();
        match reference.get(&fibers.fiber(x)) {
            None => {
                reference.insert(fibers.fiber(x), spectrum);
            }
            Some(r) if *r != spectrum => mismatched += 1,
            Some(_) => {}
        }
    }
    MeasurabilityReport {
        consistent: mismatched == 0,
        checked,
        mismatched,
    }
}

#[inline]
fn log_plus(n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        stats::log2(n as f64)
    }
}

/// `Σ_{x∈A} μ(x) log⁺ #{i : C_i meets the fiber of x}`.
pub fn rls(
    sample: &SectionSample,
    cover: &[Vec<usize>],
    fibers: &FiberPartition,
    base: &[usize],
) -> Result<f64, EntropyError> {
    let in_base: HashSet<usize> = base.iter().copied().collect();
    let mut meets: HashMap<u32, usize> = HashMap::new();
    for (i, c) in cover.iter().enumerate() {
        if c.iter().any(|x| !in_base.contains(x)) {
            return Err(EntropyError::CoverNotInBase(i));
        }
        let fs: BTreeSet<u32> = c.iter().map(|x| fibers.fiber(*x)).collect();
        for f in fs {
            *meets.entry(f).or_default() += 1;
        }
    }
    let terms: Vec<f64> = base
        .iter()
        .map(|x| sample.weight(*x) * log_plus(meets.get(&fibers.fiber(*x)).copied().unwrap_or(0)))
        .collect();
    Ok(section::pairwise_sum(&terms))
}

/// `|E| > (1-ε)|T|`, read as `|E| = |T|` when `ε = 0`.
pub fn covers_enough(e: usize, t: usize, eps: f64) -> bool {
    if eps <= 0.0 {
        e >= t
    } else {
        e as f64 > (1.0 - eps) * t as f64
    }
}

/// `(B, E, φ)` with `φ(x,e)` resolved through the address map `a(fiber(x), e)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ball {
    /// Base points.
    pub members: Vec<usize>,
    /// `|E|`; addresses are `0..alphabet`.
    pub alphabet: usize,
    /// `a(fiber, e)`, one row per fiber met by the members.
    pub addresses: BTreeMap<u32, Vec<Element>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BallFailure {
    NotInBase,
    MissingAddressMap,
    OutsideTower,
    Coverage,
    Labels,
    NotInjective,
}

/// Check the three ball conditions and injectivity; reports the first failure.
pub fn validate_ball(
    sample: &SectionSample,
    castle: &Castle,
    p: &Partition,
    fibers: &FiberPartition,
    ball: &Ball,
    eps: f64,
) -> Result<(), BallFailure> {
    let mut seen = HashSet::new();
    let mut word: Vec<Option<u32>> = alloc::vec![None; ball.alphabet];
    for &x in &ball.members {
        let i = castle.tower_index(x).ok_or(BallFailure::NotInBase)?;
        let row = ball.addresses.get(&fibers.fiber(x)).ok_or(BallFailure::MissingAddressMap)?;
        if row.len() != ball.alphabet {
            return Err(BallFailure::MissingAddressMap);
        }
        let mut image = HashSet::new();
        for (e, a) in row.iter().enumerate() {
            let y = sample.neighbor(x, a).ok_or(BallFailure::OutsideTower)?;
            if castle.owner(y) != Some(i) {
                return Err(BallFailure::OutsideTower);
            }
            image.insert(y);
            if !seen.insert(y) {
                return Err(BallFailure::NotInjective);
            }
            match word[e] {
                None => word[e] = Some(p.label(y)),
                Some(l) if l != p.label(y) => return Err(BallFailure::Labels),
                Some(_) => {}
            }
        }
        if !covers_enough(image.len(), castle.towers()[i].len(), eps) {
            return Err(BallFailure::Coverage);
        }
    }
    Ok(())
}

/// Names of the towers: `address → label`, sorted by address.
fn names(sample: &SectionSample, castle: &Castle, p: &Partition) -> Vec<Vec<(Element, u32)>> {
    (0..castle.len())
        .map(|i| {
            castle
                .addresses(sample, i)
                .into_iter()
                .map(|(a, t)| (a, p.label(t)))
                .collect()
        })
        .collect()
}

/// Largest valid ball on the given towers, if one exists.
///
/// Within a fiber all members share the addresses; across fibers the address
/// rows may differ, so the alphabet is bounded per label by the smallest
/// fiber's count of agreeing common addresses.
pub fn largest_ball(
    sample: &SectionSample,
    castle: &Castle,
    p: &Partition,
    fibers: &FiberPartition,
    towers: &[usize],
    eps: f64,
) -> Option<Ball> {
    let names = towers
        .iter()
        .map(|i| {
            castle
                .addresses(sample, *i)
                .into_iter()
                .map(|(a, t)| (a, p.label(t)))
                .collect::<BTreeMap<_, _>>()
        })
        .collect::<Vec<_>>();
    ball_from_names(castle, fibers, towers, &names, eps)
}

fn ball_from_names(
    castle: &Castle,
    fibers: &FiberPartition,
    towers: &[usize],
    names: &[BTreeMap<Element, u32>],
    eps: f64,
) -> Option<Ball> {
    let mut by_fiber: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (j, i) in towers.iter().enumerate() {
        by_fiber.entry(fibers.fiber(castle.base()[*i])).or_default().push(j);
    }
    // per fiber: label -> common addresses carrying it
    let mut agreeing: BTreeMap<u32, BTreeMap<u32, Vec<Element>>> = BTreeMap::new();
    for (f, js) in &by_fiber {
        let mut per_label: BTreeMap<u32, Vec<Element>> = BTreeMap::new();
        for (a, l) in &names[js[0]] {
            if js[1..].iter().all(|j| names[*j].get(a) == Some(l)) {
                per_label.entry(*l).or_default().push(*a);
            }
        }
        agreeing.insert(*f, per_label);
    }
    let labels: BTreeSet<u32> = agreeing.values().flat_map(|m| m.keys().copied()).collect();
    let mut word = Vec::new();
    for l in labels {
        let n = agreeing
            .values()
            .map(|m| m.get(&l).map_or(0, |v| v.len()))
            .min()
            .unwrap_or(0);
        word.extend(core::iter::repeat_n(l, n));
    }
    let alphabet = word.len();
    if towers
        .iter()
        .any(|i| !covers_enough(alphabet, castle.towers()[*i].len(), eps))
    {
        return None;
    }
    let mut addresses = BTreeMap::new();
    for (f, per_label) in agreeing {
        let mut used: BTreeMap<u32, usize> = BTreeMap::new();
        let row = word
            .iter()
            .map(|l| {
                let k = used.entry(*l).or_default();
                *k += 1;
                per_label[l][*k - 1]
            })
            .collect();
        addresses.insert(f, row);
    }
    Some(Ball {
        members: towers.iter().map(|i| castle.base()[*i]).collect(),
        alphabet,
        addresses,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CastleEntropy {
    /// `rls` of the cover found.
    pub value: f64,
    /// Base points of each ball, in cover order.
    pub cover: Vec<Vec<usize>>,
}

/// Greedy cover: trim each tower's name, then group identical trimmed names.
///
/// Addresses are ranked by cross-tower disagreement (towers lacking the
/// address plus towers outvoted at it), highest first, ties in address order.
/// Each tower drops its leading ranked addresses while the rest still covers
/// more than `1-ε` of it.
pub fn castle_entropy_upper(
    sample: &SectionSample,
    castle: &Castle,
    p: &Partition,
    eps: f64,
    fibers: &FiberPartition,
) -> Result<CastleEntropy, EntropyError> {
    let names = names(sample, castle, p);
    let total = castle.len();
    let mut votes: BTreeMap<Element, Vec<usize>> = BTreeMap::new();
    for name in &names {
        for (a, l) in name {
            let v = votes.entry(*a).or_insert_with(|| alloc::vec![0; p.size()]);
            v[*l as usize] += 1;
        }
    }
    let mut ranked: Vec<(usize, Element)> = votes
        .iter()
        .map(|(a, v)| {
            let present: usize = v.iter().sum();
            let top = v.iter().copied().max().unwrap_or(0);
            (total - present + present - top, *a)
        })
        .collect();
    ranked.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    let rank: HashMap<Element, usize> = ranked.iter().enumerate().map(|(r, (_, a))| (*a, r)).collect();

    let mut groups: BTreeMap<Vec<(Element, u32)>, Vec<usize>> = BTreeMap::new();
    for (i, name) in names.into_iter().enumerate() {
        let t = name.len();
        let mut drop = 0;
        while drop < t && covers_enough(t - drop - 1, t, eps) {
            drop += 1;
        }
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by_key(|j| rank[&name[*j].0]);
        let dropped: HashSet<usize> = order[..drop].iter().copied().collect();
        let kept: Vec<(Element, u32)> = name
            .into_iter()
            .enumerate()
            .filter(|(j, _)| !dropped.contains(j))
            .map(|(_, v)| v)
            .collect();
        groups.entry(kept).or_default().push(castle.base()[i]);
    }
    let mut cover: Vec<Vec<usize>> = groups.into_values().collect();
    cover.sort();
    let value = rls(sample, &cover, fibers, castle.base())?;
    Ok(CastleEntropy { value, cover })
}

/// Minimum `rls` over all covers of the base by valid balls.
pub fn castle_entropy_exact(
    sample: &SectionSample,
    castle: &Castle,
    p: &Partition,
    eps: f64,
    fibers: &FiberPartition,
    cap: usize,
) -> Result<CastleEntropy, EntropyError> {
    let n = castle.len();
    if n > cap {
        return Err(EntropyError::CapExceeded { size: n, cap });
    }
    let names: Vec<BTreeMap<Element, u32>> = names(sample, castle, p)
        .into_iter()
        .map(|v| v.into_iter().collect())
        .collect();
    let mut valid = alloc::vec![false; 1 << n];
    for mask in 1usize..(1 << n) {
        let towers: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sub: Vec<BTreeMap<Element, u32>> = towers.iter().map(|i| names[*i].clone()).collect();
        valid[mask] = ball_from_names(castle, fibers, &towers, &sub, eps).is_some();
    }
    let fiber_of: Vec<u32> = castle.base().iter().map(|x| fibers.fiber(*x)).collect();
    let weights: Vec<f64> = castle.base().iter().map(|x| sample.weight(*x)).collect();
    let mut best = f64::INFINITY;
    let mut best_parts: Vec<usize> = Vec::new();
    let mut parts: Vec<usize> = Vec::new();
    search(0, n, &valid, &mut parts, &fiber_of, &weights, &mut best, &mut best_parts);
    if !best.is_finite() {
        return Err(EntropyError::Invalid(String::from("no cover by valid balls")));
    }
    let cover: Vec<Vec<usize>> = best_parts
        .iter()
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| castle.base()[i]).collect())
        .collect();
    let value = rls(sample, &cover, fibers, castle.base())?;
    Ok(CastleEntropy { value, cover })
}

#[allow(clippy::too_many_arguments)]
fn search(
    i: usize,
    n: usize,
    valid: &[bool],
    parts: &mut Vec<usize>,
    fiber_of: &[u32],
    weights: &[f64],
    best: &mut f64,
    best_parts: &mut Vec<usize>,
) {
    if i == n {
        let v = partition_rls(parts, fiber_of, weights);
        if v < *best - 1e-15 {
            *best = v;
            *best_parts = parts.clone();
        }
        return;
    }
    for j in 0..parts.len() {
        let m = parts[j] | (1 << i);
        if valid[m] {
            let old = parts[j];
            parts[j] = m;
            search(i + 1, n, valid, parts, fiber_of, weights, best, best_parts);
            parts[j] = old;
        }
    }
    if valid[1 << i] {
        parts.push(1 << i);
        search(i + 1, n, valid, parts, fiber_of, weights, best, best_parts);
        parts.pop();
    }
}

fn partition_rls(parts: &[usize], fiber_of: &[u32], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for (x, f) in fiber_of.iter().enumerate() {
        let meets = parts
            .iter()
            .filter(|m| (0..fiber_of.len()).any(|y| *m >> y & 1 == 1 && fiber_of[y] == *f))
            .count();
        total += weights[x] * log_plus(meets);
    }
    total
}

/// How a castle entropy was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Evaluation {
    Exact,
    Greedy,
}

fn castle_entropy(
    sample: &SectionSample,
    castle: &Castle,
    p: &Partition,
    eps: f64,
    fibers: &FiberPartition,
) -> Result<(f64, Evaluation), EntropyError> {
    if castle.len() <= EXACT_CAP {
        Ok((castle_entropy_exact(sample, castle, p, eps, fibers, EXACT_CAP)?.value, Evaluation::Exact))
    } else {
        Ok((castle_entropy_upper(sample, castle, p, eps, fibers)?.value, Evaluation::Greedy))
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    /// `h_{T'}^{4ε}`.
    pub lhs: f64,
    /// `h_T^ε + 2ε + ε log|P|`.
    pub rhs: f64,
    pub lhs_method: Evaluation,
    pub rhs_method: Evaluation,
    pub holds: bool,
}

/// Compare `h_{T'}^{4ε}(P|G)` with `h_T^ε(P|G) + 2ε + ε log|P|`.
pub fn comparison_check(
    sample: &SectionSample,
    p: &Partition,
    castle: &Castle,
    finer: &Castle,
    eps: f64,
    fibers: &FiberPartition,
) -> Result<ComparisonReport, EntropyError> {
    for c in [castle, finer] {
        let coverage = c.range_measure(sample);
        if !(coverage > 1.0 - eps) {
            return Err(EntropyError::Coverage {
                coverage,
                need: 1.0 - eps,
            });
        }
    }
    let (lhs, lhs_method) = castle_entropy(sample, finer, p, 4.0 * eps, fibers)?;
    let (h, rhs_method) = castle_entropy(sample, castle, p, eps, fibers)?;
    let rhs = h + 2.0 * eps + eps * stats::log2(p.size() as f64);
    Ok(ComparisonReport {
        lhs,
        rhs,
        lhs_method,
        rhs_method,
        holds: lhs <= rhs,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockEstimate {
    /// `H(F) - H(F \ {last})`, Miller–Madow corrected.
    pub estimate: f64,
    pub stderr: f64,
    /// `H(F) / |F|`, Miller–Madow corrected.
    pub per_point: f64,
    pub samples: usize,
    pub distinct_patterns: usize,
    pub seed: u64,
}

enum Counts {
    Packed {
        radix: u64,
        full: HashMap<u64, u64>,
        head: HashMap<u64, u64>,
    },
    Words {
        full: HashMap<Vec<u32>, u64>,
        head: HashMap<Vec<u32>, u64>,
    },
}

impl Counts {
    fn new(alphabet: usize, len: usize) -> Self {
        let fits = alphabet > 0 && (len as f64) * stats::log2(alphabet as f64) < 63.0;
        if fits {
            Counts::Packed {
                radix: alphabet as u64,
                full: HashMap::new(),
                head: HashMap::new(),
            }
        } else {
            Counts::Words {
                full: HashMap::new(),
                head: HashMap::new(),
            }
        }
    }

    fn add(&mut self, pattern: &[u32]) {
        let last = pattern.len() - 1;
        match self {
            Counts::Packed { radix, full, head } => {
                let mut k = 0u64;
                for s in &pattern[..last] {
                    k = k * *radix + *s as u64;
                }
                *head.entry(k).or_default() += 1;
                *full.entry(k * *radix + pattern[last] as u64).or_default() += 1;
            }
            Counts::Words { full, head } => {
                *head.entry(pattern[..last].to_vec()).or_default() += 1;
                *full.entry(pattern.to_vec()).or_default() += 1;
            }
        }
    }

    /// Deterministically ordered count tables `(full, head)`.
    fn tables(&self) -> (Vec<u64>, Vec<u64>) {
        fn sorted<K: Ord>(m: &HashMap<K, u64>) -> Vec<u64> {
            let mut v: Vec<(&K, &u64)> = m.iter().collect();
            v.sort_by(|a, b| a.0.cmp(b.0));
            v.into_iter().map(|(_, c)| *c).collect()
        }
        match self {
            Counts::Packed { full, head, .. } => (sorted(full), sorted(head)),
            Counts::Words { full, head } => (sorted(full), sorted(head)),
        }
    }

    fn merge(&mut self, other: Counts) {
        match (self, other) {
            (Counts::Packed { full, head, .. }, Counts::Packed { full: f2, head: h2, .. }) => {
                for (k, c) in f2 {
                    *full.entry(k).or_default() += c;
                }
                for (k, c) in h2 {
                    *head.entry(k).or_default() += c;
                }
            }
            (Counts::Words { full, head }, Counts::Words { full: f2, head: h2 }) => {
                for (k, c) in f2 {
                    *full.entry(k).or_default() += c;
                }
                for (k, c) in h2 {
                    *head.entry(k).or_default() += c;
                }
            }
            _ => unreachable!("shards share a representation"),
        }
    }
}

fn conditional(c: &Counts, len: usize) -> (f64, f64, usize) {
    let (full, head) = c.tables();
    let hf = stats::miller_madow(&full);
    let hh = if len > 1 { stats::miller_madow(&head) } else { 0.0 };
    (hf - hh, hf / len as f64, full.len())
}

fn check_guard(len: usize, alphabet: usize) -> Result<(), EntropyError> {
    let bits = len as f64 * stats::log2(alphabet.max(1) as f64);
    if bits > 40.0 {
        return Err(EntropyError::PatternGuard(bits));
    }
    Ok(())
}

/// Pattern distribution of `system` on `F`, from `sample_size` independent draws.
///
/// The estimate is the conditional block entropy of the last element of `F`
/// given the others; the per-point plug-in value is reported alongside.
pub fn block_entropy(
    system: &SymbolicSystem,
    f: &ElementSet,
    sample_size: usize,
    seed: u64,
) -> Result<BlockEstimate, EntropyError> {
    if f.is_empty() {
        return Err(EntropyError::EmptyWindow);
    }
    if sample_size < MIN_SAMPLES {
        return Err(EntropyError::SampleTooSmall(sample_size));
    }
    if f.first().unwrap().rank() != system.group().rank() {
        return Err(EntropyError::Invalid(String::from("window does not match the system's group")));
    }
    let alphabet = system.alphabet();
    if alphabet > 0 {
        check_guard(f.len(), alphabet)?;
    }
    let len = f.len();
    let mut sampler = system.sampler();
    let mut total = Counts::new(alphabet, len);
    let mut shard_values = Vec::with_capacity(SHARDS);
    let mut observed = 0u32;
    for k in 0..SHARDS {
        let n = sample_size / SHARDS + usize::from(k < sample_size % SHARDS);
        let mut r = rng::stream(seed, k as u64);
        let mut c = Counts::new(alphabet, len);
        for _ in 0..n {
            let pattern = sampler.sample_at(&mut r, f.as_slice());
            observed = pattern.iter().fold(observed, |m, s| m.max(*s + 1));
            c.add(&pattern);
        }
        shard_values.push(conditional(&c, len).0);
        total.merge(c);
    }
    let (estimate, per_point, distinct) = conditional(&total, len);
    if alphabet == 0 {
        // interned excursion words: the observed symbol count stands in for the alphabet
        check_guard(len, observed as usize)?;
    }
    Ok(BlockEstimate {
        estimate,
        stderr: stats::shard_stderr(&shard_values),
        per_point,
        samples: sample_size,
        distinct_patterns: distinct,
        seed,
    })
}

/// The window `{0, .., len-1}` in `Z`.
pub fn interval(len: usize) -> ElementSet {
    let z = GroupModel::integers();
    (0..len as i64).map(|i| z.element(&[i]).unwrap()).collect()
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AbramovReport {
    pub estimate: BlockEstimate,
    pub base_entropy: f64,
    pub cylinder_measure: f64,
    /// `h / ν(A)`.
    pub target: f64,
    pub ratio: f64,
    pub relative_error: f64,
    pub mean_return_time: f64,
    pub return_time_stderr: f64,
    /// `1 / ν(A)`.
    pub kac_target: f64,
}

/// Entropy of the first-return process on `{x_0 ∈ cylinder}` against `h / ν(A)`,
/// together with the mean return time against `1 / ν(A)`.
pub fn abramov_check(
    base: &SymbolicSystem,
    cylinder: &[u32],
    window: usize,
    sample_size: usize,
    seed: u64,
) -> Result<AbramovReport, EntropyError> {
    let nu = base.cylinder_probability(cylinder)?;
    if !(nu > 0.0) {
        return Err(EntropyError::NullCylinder);
    }
    let induced = SymbolicSystem::induce(base.clone(), cylinder.to_vec())?;
    let h = base.analytic_entropy()?;
    let target = h / nu;
    let estimate = block_entropy(&induced, &interval(window), sample_size, seed)?;
    let times = systems::return_times(&induced, sample_size, seed ^ 0x5eed_0000_0000_0001)?;
    let tf: Vec<f64> = times.iter().map(|t| *t as f64).collect();
    let ratio = estimate.estimate / target;
    Ok(AbramovReport {
        base_entropy: h,
        cylinder_measure: nu,
        target,
        ratio,
        relative_error: (ratio - 1.0).abs(),
        mean_return_time: stats::mean(&tf),
        return_time_stderr: libm::sqrt(stats::variance(&tf) / tf.len() as f64),
        kac_target: 1.0 / nu,
        estimate,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransferReport {
    /// Estimate from box castles for the original cocycle.
    pub alpha_estimate: f64,
    /// Estimate from interval castles for the lexicographic integer cocycle.
    pub beta_estimate: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub alpha_towers: usize,
    pub beta_towers: usize,
    pub pass: bool,
}

/// Estimate castle entropy twice on one relation: boxes of side `side` for the
/// lattice cocycle and runs of `side^d` consecutive ranks for the integer one.
pub fn transfer_check(
    sample: &SectionSample,
    p: &Partition,
    fibers: &FiberPartition,
    side: i64,
    eps: f64,
    tolerance: f64,
) -> Result<TransferReport, EntropyError> {
    if p.labels().len() != sample.len() || fibers.len() != sample.len() {
        return Err(EntropyError::LabelMismatch);
    }
    let trivial = ElementSet::singleton(sample.group().identity());
    let alpha_ok = section::validate(sample, &trivial);
    let beta = sample.lexicographic_recode();
    let beta_ok = section::validate(&beta, &ElementSet::singleton(GroupModel::integers().identity()));
    if !alpha_ok.all_pass() || !beta_ok.all_pass() {
        return Err(EntropyError::Invalid(String::from("cocycle validation failed")));
    }
    let rank = sample.group().rank() as u32;
    let boxes = section::block_castle(sample, side);
    let runs = section::block_castle(&beta, side.pow(rank));
    for (c, s) in [(&boxes, sample), (&runs, &beta)] {
        let coverage = c.range_measure(s);
        if !(coverage > 1.0 - eps) {
            return Err(EntropyError::Coverage {
                coverage,
                need: 1.0 - eps,
            });
        }
    }
    let a = castle_entropy_upper(sample, &boxes, p, eps, fibers)?.value;
    let b = castle_entropy_upper(&beta, &runs, p, eps, fibers)?.value;
    let scale = a.abs().max(b.abs());
    let gap = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
    Ok(TransferReport {
        alpha_estimate: a,
        beta_estimate: b,
        relative_gap: gap,
        tolerance,
        alpha_towers: boxes.len(),
        beta_towers: runs.len(),
        pass: gap <= tolerance,
    })
}

/// `Q(u s) = P(s)` for `u ∈ U`, `s ∈ S`; the complement gets label `|P|`.
/// Returns one labeling of the window per class.
pub fn fatten(sample: &SectionSample, p: &Partition, u: &ElementSet) -> Result<Vec<Vec<u32>>, EntropyError> {
    if p.labels().len() != sample.len() {
        return Err(EntropyError::LabelMismatch);
    }
    let g = sample.group();
    let window = sample.window();
    let extra = p.size() as u32;
    let mut out = alloc::vec![alloc::vec![extra; window.len()]; sample.class_count()];
    let mut filled = alloc::vec![alloc::vec![false; window.len()]; sample.class_count()];
    for x in 0..sample.len() {
        let c = sample.class_of(x) as usize;
        for v in u {
            let target = g.op(v, &sample.position(x));
            if let Some(i) = window.position(&target) {
                if filled[c][i] {
                    return Err(EntropyError::Overlap(target));
                }
                filled[c][i] = true;
                out[c][i] = p.label(x);
            }
        }
    }
    Ok(out)
}

/// Render a count table as CSV rows `pattern,count`.
pub fn pattern_table(system: &SymbolicSystem, f: &ElementSet, sample_size: usize, seed: u64) -> Vec<(String, u64)> {
    let mut sampler = system.sampler();
    let mut r = rng::stream(seed, 0);
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for _ in 0..sample_size {
        *counts.entry(sampler.sample_at(&mut r, f.as_slice())).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| {
            let s: Vec<String> = k.iter().map(|v| format!("{v}")).collect();
            (s.join(" "), c)
        })
        .collect()
}
