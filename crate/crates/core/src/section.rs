//! Finite cross-section models, castles over them and the empirical ergodic
//! theorems.
//!
//! Points carry a window position `g_x` and a class id; the cocycle is
//! `α(x,y) = g_x g_y⁻¹`, so `α(x,y)` moves the position of `y` to that of `x`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::error::SectionError;
use crate::group::{Element, ElementSet, GroupModel};
use crate::index::{Counter, PointIndex, Probe};
use crate::rng;
use crate::systems::SymbolicSystem;
use crate::tiling;

const NONE: u32 = u32::MAX;

/// Where a section fires inside a sampled orbit window.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "symbols", rename_all = "lowercase"))]
pub enum SectionRule {
    Always,
    /// Fires where the symbol lies in the given set.
    Symbols(Vec<u32>),
    /// Fires only at the identity position.
    Origin,
}

impl SectionRule {
    pub fn fires(&self, g: &Element, symbol: u32) -> bool {
        match self {
            SectionRule::Always => true,
            SectionRule::Symbols(s) => s.contains(&symbol),
            SectionRule::Origin => g.coords().iter().all(|c| *c == 0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SectionSample {
    group: GroupModel,
    window: ElementSet,
    positions: Vec<Element>,
    class_of: Vec<u32>,
    classes: Vec<Vec<usize>>,
    weights: Vec<f64>,
    labels: Vec<u32>,
    ambient: Vec<Vec<u32>>,
    lookup: HashMap<(u32, Element), usize>,
    overrides: BTreeMap<(usize, usize), Element>,
    intensity: f64,
    dropped: usize,
}

impl SectionSample {
    /// Uniform-weight sample. `labels` is the default partition of the points.
    pub fn new(
        group: GroupModel,
        window: ElementSet,
        positions: Vec<Element>,
        class_of: Vec<u32>,
        labels: Vec<u32>,
    ) -> Result<Self, SectionError> {
        let n = positions.len();
        if class_of.len() != n || labels.len() != n {
            return Err(SectionError::InvalidSample(String::from("field lengths differ")));
        }
        if n == 0 {
            return Err(SectionError::InvalidSample(String::from("no points")));
        }
        if let Some(g) = positions.iter().find(|g| g.rank() != group.rank()) {
            return Err(SectionError::InvalidSample(format!("position {g:?} has the wrong rank")));
        }
        let nclass = class_of.iter().copied().max().unwrap() as usize + 1;
        let mut classes = alloc::vec![Vec::new(); nclass];
        for (i, c) in class_of.iter().enumerate() {
            classes[*c as usize].push(i);
        }
        for members in &mut classes {
            members.sort_by(|a, b| positions[*a].cmp(&positions[*b]));
        }
        let mut lookup = HashMap::with_capacity(n);
        for (i, g) in positions.iter().enumerate() {
            lookup.entry((class_of[i], *g)).or_insert(i);
        }
        let intensity = if window.is_empty() {
            1.0
        } else {
            n as f64 / (window.len() * nclass) as f64
        };
        Ok(SectionSample {
            group,
            window,
            positions,
            class_of,
            classes,
            weights: alloc::vec![1.0 / n as f64; n],
            labels,
            ambient: Vec::new(),
            lookup,
            overrides: BTreeMap::new(),
            intensity,
            dropped: 0,
        })
    }

    /// Replace the weights; they must be nonnegative and sum to 1.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, SectionError> {
        let s: f64 = weights.iter().sum();
        if weights.len() != self.len() || weights.iter().any(|w| !(*w >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(SectionError::InvalidSample(String::from("weights must be nonnegative and sum to 1")));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn group(&self) -> GroupModel {
        self.group
    }

    pub fn window(&self) -> &ElementSet {
        &self.window
    }

    pub fn position(&self, x: usize) -> Element {
        self.positions[x]
    }

    pub fn positions(&self) -> &[Element] {
        &self.positions
    }

    pub fn class_of(&self, x: usize) -> u32 {
        self.class_of[x]
    }

    pub fn class_ids(&self) -> &[u32] {
        &self.class_of
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Members of class `c`, sorted by position.
    pub fn class_members(&self, c: u32) -> &[usize] {
        &self.classes[c as usize]
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Hits per window point per kept orbit.
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// Orbits on which the rule never fired.
    pub fn dropped_orbits(&self) -> usize {
        self.dropped
    }

    /// Ambient symbol at `g` on the orbit of class `c`, when the orbit was sampled.
    pub fn ambient_label(&self, c: u32, g: &Element) -> Option<u32> {
        let labels = self.ambient.get(c as usize)?;
        self.window.position(g).map(|i| labels[i])
    }

    pub fn alpha(&self, x: usize, y: usize) -> Option<Element> {
        if self.class_of[x] != self.class_of[y] {
            return None;
        }
        if let Some(v) = self.overrides.get(&(x, y)) {
            return Some(*v);
        }
        Some(self.positional(x, y))
    }

    fn positional(&self, x: usize, y: usize) -> Element {
        let g = self.group;
        g.op(&self.positions[x], &g.invert(&self.positions[y]))
    }

    /// The point of class `c` at position `g`.
    pub fn at(&self, c: u32, g: &Element) -> Option<usize> {
        self.lookup.get(&(c, *g)).copied()
    }

    /// The unique `y` in the class of `x` with `α(x,y) = a`.
    pub fn neighbor(&self, x: usize, a: &Element) -> Option<usize> {
        let g = self.group;
        self.at(self.class_of[x], &g.op(&g.invert(a), &self.positions[x]))
    }

    /// Overwrite one cocycle value; the result generally violates the invariants.
    pub fn corrupt(&mut self, x: usize, y: usize, value: Element) {
        self.overrides.insert((x, y), value);
    }

    /// The same relation with the integer cocycle given by lexicographic rank
    /// inside each class.
    pub fn lexicographic_recode(&self) -> SectionSample {
        let z = GroupModel::integers();
        let mut positions = alloc::vec![z.identity(); self.len()];
        let mut longest = 0;
        for members in &self.classes {
            longest = longest.max(members.len());
            for (r, x) in members.iter().enumerate() {
                positions[*x] = Element::from_raw([r as i64, 0, 0, 0], 1);
            }
        }
        let window = (0..longest as i64)
            .map(|i| Element::from_raw([i, 0, 0, 0], 1))
            .collect();
        let mut s = SectionSample::new(z, window, positions, self.class_of.clone(), self.labels.clone())
            .expect("recoding preserves a valid sample");
        s.weights = self.weights.clone();
        s
    }

    /// Points whose `K`-neighbourhood `K⁻¹ g_x` leaves the window.
    pub fn collar(&self, k: &ElementSet) -> Vec<bool> {
        let g = self.group;
        if let (true, Some((klo, khi)), Some((wlo, whi))) = (
            g.is_abelian() && k.is_box() && self.window.is_box(),
            k.bounding_box(),
            self.window.bounding_box(),
        ) {
            return self
                .positions
                .iter()
                .map(|p| (0..g.rank()).any(|d| p.raw()[d] - khi[d] < wlo[d] || p.raw()[d] - klo[d] > whi[d]))
                .collect();
        }
        let kinv: Vec<Element> = k.iter().map(|e| g.invert(e)).collect();
        self.positions
            .iter()
            .map(|p| kinv.iter().any(|e| !self.window.contains(&g.op(e, p))))
            .collect()
    }

    /// `Σ μ(x) h(x)`.
    pub fn integral(&self, h: &[f64]) -> f64 {
        pairwise_sum(&self.weights.iter().zip(h).map(|(w, v)| w * v).collect::<Vec<_>>())
    }
}

/// Sum in a fixed pairwise order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().fold(0.0, |a, b| a + b);
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample `orbits` independent orbit windows and keep the positions where the rule fires.
pub fn from_orbit_window(
    system: &SymbolicSystem,
    window: &ElementSet,
    rule: &SectionRule,
    orbits: usize,
    seed: u64,
) -> Result<SectionSample, SectionError> {
    let group = system.group();
    if window.is_empty() {
        return Err(SectionError::InvalidSample(String::from("empty window")));
    }
    if window.first().unwrap().rank() != group.rank() {
        return Err(SectionError::InvalidSample(String::from("window does not match the system's group")));
    }
    let mut sampler = system.sampler();
    let mut positions = Vec::new();
    let mut class_of = Vec::new();
    let mut labels = Vec::new();
    let mut ambient = Vec::new();
    let mut dropped = 0;
    for o in 0..orbits {
        let mut r = rng::stream(seed, o as u64);
        let orbit = sampler.sample_at(&mut r, window.as_slice());
        let class = ambient.len() as u32;
        let before = positions.len();
        for (g, s) in window.iter().zip(&orbit) {
            if rule.fires(g, *s) {
                positions.push(*g);
                class_of.push(class);
                labels.push(*s);
            }
        }
        if positions.len() == before {
            dropped += 1;
        } else {
            ambient.push(orbit);
        }
    }
    if positions.is_empty() {
        return Err(SectionError::NoHits);
    }
    let mut s = SectionSample::new(group, window.clone(), positions, class_of, labels)?;
    s.ambient = ambient;
    s.dropped = dropped;
    Ok(s)
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub cocycle_identity: bool,
    pub identity_and_inverse: bool,
    pub free: bool,
    pub u_discrete: bool,
    pub weights: bool,
    /// First few violations, in detection order.
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.cocycle_identity && self.identity_and_inverse && self.free && self.u_discrete && self.weights
    }
}

const MAX_VIOLATIONS: usize = 16;

/// Check every sample invariant.
///
/// Positional values satisfy `α(x,y) = α(x,r) α(r,y)` for any `r`, so a
/// triple can fail only through an overwritten value. Taking `r` outside
/// every overwritten pair reduces the check to the overwritten pairs.
pub fn validate(sample: &SectionSample, u: &ElementSet) -> ValidationReport {
    let g = sample.group;
    let e = g.identity();
    let mut rep = ValidationReport {
        cocycle_identity: true,
        identity_and_inverse: true,
        free: true,
        u_discrete: true,
        weights: true,
        violations: Vec::new(),
    };
    let note = |rep: &mut ValidationReport, msg: String| {
        if rep.violations.len() < MAX_VIOLATIONS {
            rep.violations.push(msg);
        }
    };

    let s: f64 = sample.weights.iter().sum();
    if sample.weights.iter().any(|w| !(*w >= 0.0)) || (s - 1.0).abs() > 1e-9 {
        rep.weights = false;
        note(&mut rep, format!("weights sum to {s}"));
    }

    let touched: HashSet<usize> = sample.overrides.keys().flat_map(|(x, y)| [*x, *y]).collect();
    let mut roots: HashMap<u32, Option<usize>> = HashMap::new();
    for (&(x, y), v) in &sample.overrides {
        let c = sample.class_of[x];
        if c != sample.class_of[y] {
            continue;
        }
        if x == y && *v != e {
            rep.identity_and_inverse = false;
            note(&mut rep, format!("α({x},{x}) = {v:?}"));
        }
        let back = sample.alpha(y, x).unwrap();
        if g.op(v, &back) != e {
            rep.identity_and_inverse = false;
            note(&mut rep, format!("α({y},{x}) is not the inverse of α({x},{y})"));
        }
        let root = *roots
            .entry(c)
            .or_insert_with(|| sample.classes[c as usize].iter().copied().find(|r| !touched.contains(r)));
        let ok = match root {
            Some(r) => g.op(&sample.alpha(x, r).unwrap(), &sample.alpha(r, y).unwrap()) == *v,
            None => sample.classes[c as usize].iter().all(|&z| {
                g.op(&sample.alpha(x, z).unwrap(), &sample.alpha(z, y).unwrap()) == *v
            }),
        };
        if !ok {
            rep.cocycle_identity = false;
            note(&mut rep, format!("cocycle identity fails through α({x},{y})"));
        }
        if x != y && u.contains(v) {
            rep.u_discrete = false;
            note(&mut rep, format!("α({x},{y}) = {v:?} lies in U"));
        }
    }

    // freeness: distinct positions per class, and injectivity for touched rows
    if sample.lookup.len() != sample.len() {
        rep.free = false;
        note(&mut rep, String::from("two points of one class share a position"));
    }
    let mut rows: Vec<usize> = sample.overrides.keys().map(|(x, _)| *x).collect();
    rows.dedup();
    for x in rows {
        let c = sample.class_of[x];
        let mut seen = HashSet::new();
        for &y in &sample.classes[c as usize] {
            if !seen.insert(sample.alpha(x, y).unwrap()) {
                rep.free = false;
                note(&mut rep, format!("α({x},·) is not injective"));
                break;
            }
        }
    }

    // U-discreteness of positional values: no y at position u⁻¹ g_x for u ≠ e
    let uinv: Vec<Element> = u.iter().filter(|v| **v != e).map(|v| g.invert(v)).collect();
    'outer: for x in 0..sample.len() {
        for w in &uinv {
            if let Some(y) = sample.at(sample.class_of[x], &g.op(w, &sample.positions[x])) {
                if y != x && !sample.overrides.contains_key(&(x, y)) {
                    rep.u_discrete = false;
                    note(&mut rep, format!("α({x},{y}) lies in U"));
                    if rep.violations.len() >= MAX_VIOLATIONS {
                        break 'outer;
                    }
                }
            }
        }
    }
    rep
}

/// Per-point averages `h_F(x)` of `h` over `{y : α(x,y) ∈ F}`; zero on empty sets.
pub fn ergodic_average(sample: &SectionSample, h: &[f64], f: &ElementSet) -> Vec<f64> {
    if let Some(v) = interval_average(sample, h, f) {
        return v;
    }
    ergodic_average_direct(sample, h, f)
}

/// The defining sum, evaluated neighbour by neighbour.
pub fn ergodic_average_direct(sample: &SectionSample, h: &[f64], f: &ElementSet) -> Vec<f64> {
    (0..sample.len())
        .map(|x| {
            let mut n = 0usize;
            let mut s = 0.0;
            for a in f {
                if let Some(y) = sample.neighbor(x, a) {
                    n += 1;
                    s += h[y];
                }
            }
            if n == 0 {
                0.0
            } else {
                s / n as f64
            }
        })
        .collect()
}

/// Prefix-sum route for integer intervals on positional samples.
fn interval_average(sample: &SectionSample, h: &[f64], f: &ElementSet) -> Option<Vec<f64>> {
    if sample.group != GroupModel::integers() || !sample.overrides.is_empty() || f.is_empty() || !f.is_box() {
        return None;
    }
    let (lo, hi) = f.bounding_box()?;
    let (lo, hi) = (lo[0], hi[0]);
    let mut out = alloc::vec![0.0; sample.len()];
    for members in &sample.classes {
        let pos: Vec<i64> = members.iter().map(|x| sample.positions[*x].raw()[0]).collect();
        let mut prefix = Vec::with_capacity(members.len() + 1);
        prefix.push(0.0);
        for x in members {
            prefix.push(prefix.last().unwrap() + h[*x]);
        }
        for (i, x) in members.iter().enumerate() {
            // α(x,y) = p_x - p_y ∈ [lo, hi]  ⇔  p_y ∈ [p_x - hi, p_x - lo]
            let a = pos.partition_point(|p| *p < pos[i] - hi);
            let b = pos.partition_point(|p| *p <= pos[i] - lo);
            if b > a {
                out[*x] = (prefix[b] - prefix[a]) / (b - a) as f64;
            }
        }
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviationReport {
    pub mean: f64,
    pub tolerance: f64,
    /// Normalized measure of non-collar points with `|h_F(x) - mean| > tolerance`.
    pub deviation: f64,
    pub collar_mass: f64,
}

/// Companion statistic of the ergodic averages, excluding `collar`.
pub fn deviation_measure(sample: &SectionSample, h: &[f64], hf: &[f64], tol: f64, collar: &[bool]) -> DeviationReport {
    let mean = sample.integral(h);
    let mut bad = Vec::new();
    let mut kept = Vec::new();
    let mut excl = Vec::new();
    for x in 0..sample.len() {
        let w = sample.weights[x];
        if collar.get(x).copied().unwrap_or(false) {
            excl.push(w);
            continue;
        }
        kept.push(w);
        if (hf[x] - mean).abs() > tol {
            bad.push(w);
        }
    }
    let kept = pairwise_sum(&kept);
    DeviationReport {
        mean,
        tolerance: tol,
        deviation: if kept > 0.0 { pairwise_sum(&bad) / kept } else { 0.0 },
        collar_mass: pairwise_sum(&excl),
    }
}

/// Base points with pairwise-disjoint towers inside their classes.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Castle {
    base: Vec<usize>,
    towers: Vec<Vec<usize>>,
    owner: Vec<u32>,
}

impl Castle {
    /// Validates `x ∈ T_x`, disjointness and class membership.
    pub fn new(sample: &SectionSample, base: Vec<usize>, towers: Vec<Vec<usize>>) -> Result<Self, SectionError> {
        if base.len() != towers.len() {
            return Err(SectionError::InvalidCastle(String::from("base and towers differ in length")));
        }
        let n = sample.len();
        let mut owner = alloc::vec![NONE; n];
        let mut towers = towers;
        for (i, (x, t)) in base.iter().zip(towers.iter_mut()).enumerate() {
            t.sort_unstable();
            if *x >= n || t.iter().any(|y| *y >= n) {
                return Err(SectionError::InvalidCastle(format!("tower {i} names a point outside the sample")));
            }
            if t.binary_search(x).is_err() {
                return Err(SectionError::InvalidCastle(format!("base point {x} is not in its tower")));
            }
            for &y in t.iter() {
                if sample.class_of[y] != sample.class_of[*x] {
                    return Err(SectionError::InvalidCastle(format!("point {y} leaves the class of {x}")));
                }
                if owner[y] != NONE {
                    return Err(SectionError::InvalidCastle(format!("point {y} lies in two towers")));
                }
                owner[y] = i as u32;
            }
        }
        Ok(Castle { base, towers, owner })
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn towers(&self) -> &[Vec<usize>] {
        &self.towers
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Index of the tower over base point `x`.
    pub fn tower_index(&self, x: usize) -> Option<usize> {
        let i = *self.owner.get(x)?;
        (i != NONE && self.base[i as usize] == x).then_some(i as usize)
    }

    /// Index of the tower containing `y`.
    pub fn owner(&self, y: usize) -> Option<usize> {
        let i = *self.owner.get(y)?;
        (i != NONE).then_some(i as usize)
    }

    /// `μ_T` of the towers with the given indices.
    pub fn measure(&self, sample: &SectionSample, towers: &[usize]) -> f64 {
        pairwise_sum(
            &towers
                .iter()
                .map(|i| self.towers[*i].len() as f64 * sample.weights[self.base[*i]])
                .collect::<Vec<_>>(),
        )
    }

    /// `μ_T(A)`.
    pub fn total_measure(&self, sample: &SectionSample) -> f64 {
        self.measure(sample, &(0..self.len()).collect::<Vec<_>>())
    }

    /// `μ` of the union of the towers.
    pub fn range_measure(&self, sample: &SectionSample) -> f64 {
        pairwise_sum(&self.towers.iter().flatten().map(|y| sample.weights[*y]).collect::<Vec<_>>())
    }

    pub fn range_size(&self) -> usize {
        self.towers.iter().map(|t| t.len()).sum()
    }

    /// `(α(x,t), t)` for the tower over `base[i]`, sorted by address.
    pub fn addresses(&self, sample: &SectionSample, i: usize) -> Vec<(Element, usize)> {
        let x = self.base[i];
        let mut v: Vec<(Element, usize)> = self.towers[i]
            .iter()
            .map(|t| (sample.alpha(x, *t).unwrap(), *t))
            .collect();
        v.sort_unstable();
        v
    }
}

/// Castle whose towers are the groups of points sharing a class and a key.
/// The base point of each tower is its least position.
pub fn castle_by_key<K: Ord + Clone>(sample: &SectionSample, key: impl Fn(&Element) -> K) -> Castle {
    let mut groups: BTreeMap<(u32, K), Vec<usize>> = BTreeMap::new();
    for x in 0..sample.len() {
        groups
            .entry((sample.class_of[x], key(&sample.positions[x])))
            .or_default()
            .push(x);
    }
    let mut base = Vec::with_capacity(groups.len());
    let mut towers = Vec::with_capacity(groups.len());
    for (_, mut t) in groups {
        t.sort_by(|a, b| sample.positions[*a].cmp(&sample.positions[*b]));
        base.push(t[0]);
        towers.push(t);
    }
    Castle::new(sample, base, towers).expect("key groups are disjoint within classes")
}

/// Castle of lattice blocks `side·q + [0, side)^d`.
pub fn block_castle(sample: &SectionSample, side: i64) -> Castle {
    let rank = sample.group.rank();
    castle_by_key(sample, move |g| {
        let mut k = [0i64; 4];
        for d in 0..rank {
            k[d] = g.raw()[d].div_euclid(side);
        }
        k
    })
}

/// Castle from `δ`-disjoint tiles `F b` chosen greedily in every class.
///
/// Centres are points whose tile holds more than half the expected mass;
/// overlaps go to the earlier tile except that a centre always stays in its own tower.
pub fn tiling_castle(sample: &SectionSample, f: &ElementSet, delta: f64) -> Result<Castle, SectionError> {
    let g = sample.group;
    let mut base = Vec::new();
    let mut towers: Vec<Vec<usize>> = Vec::new();
    for c in 0..sample.classes.len() as u32 {
        let members = &sample.classes[c as usize];
        let a: ElementSet = members.iter().map(|x| sample.positions[*x]).collect();
        let intensity = a.len() as f64 / sample.window.len().max(1) as f64;
        let lam = intensity * f.len() as f64;
        if !(lam > 10.0) {
            return Err(SectionError::InvalidCastle(format!("expected tile mass {lam} is not above 10")));
        }
        let index = PointIndex::new(&a);
        let in_a = index.flags(&a);
        let counter = Counter::new(g, &index, &in_a);
        let probe = Probe::new(&g, f);
        let b: ElementSet = a
            .iter()
            .filter(|x| counter.count(&probe, x) as f64 > lam / 2.0)
            .copied()
            .collect();
        let centers = tiling::select_tile_centers(&g, &a, &b, f, delta, intensity)
            .map_err(|e| SectionError::InvalidCastle(format!("{e}")))?;
        let centre_points: HashSet<usize> = centers.iter().map(|p| sample.at(c, p).unwrap()).collect();
        let mut taken: HashSet<usize> = HashSet::new();
        let first = towers.len();
        for p in &centers {
            let x = sample.at(c, p).unwrap();
            taken.insert(x);
            let mut t = alloc::vec![x];
            for y in f {
                if let Some(z) = sample.at(c, &g.op(y, p)) {
                    if !centre_points.contains(&z) && taken.insert(z) {
                        t.push(z);
                    }
                }
            }
            base.push(x);
            towers.push(t);
        }
        debug_assert!(towers[first..].iter().all(|t| !t.is_empty()));
    }
    Castle::new(sample, base, towers)
}

/// `(int_K T_x, ∂_K T_x)` for base point `x`.
pub fn castle_interior(
    sample: &SectionSample,
    castle: &Castle,
    x: usize,
    k: &ElementSet,
) -> Result<(Vec<usize>, Vec<usize>), SectionError> {
    let i = castle.tower_index(x).ok_or(SectionError::NotInBase(x))?;
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for &t in &castle.towers[i] {
        let inside = k
            .iter()
            .all(|a| sample.neighbor(t, a).is_none_or(|r| castle.owner(r) == Some(i)));
        if inside {
            interior.push(t);
        } else {
            boundary.push(t);
        }
    }
    Ok((interior, boundary))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvarianceReport {
    pub invariant: bool,
    pub offending_mass: f64,
    pub total_mass: f64,
}

/// `(K, ε)`-invariance: towers with `|∂_K T_x| / |T_x| > ε` carry less than `ε μ_T(A)`.
pub fn is_castle_invariant(
    sample: &SectionSample,
    castle: &Castle,
    k: &ElementSet,
    eps: f64,
) -> Result<InvarianceReport, SectionError> {
    if !(eps > 0.0) {
        return Err(SectionError::InvalidEpsilon);
    }
    if castle.is_empty() {
        return Err(SectionError::EmptyBase);
    }
    let mut bad = Vec::new();
    for (i, &x) in castle.base.iter().enumerate() {
        let (_, boundary) = castle_interior(sample, castle, x, k)?;
        if boundary.len() as f64 / castle.towers[i].len() as f64 > eps {
            bad.push(i);
        }
    }
    let offending = castle.measure(sample, &bad);
    let total = castle.total_measure(sample);
    Ok(InvarianceReport {
        invariant: offending < eps * total,
        offending_mass: offending,
        total_mass: total,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CastleErgodicReport {
    pub mean: f64,
    pub delta: f64,
    /// `μ_T` of the largest admissible `B`: every tower whose average is within `δ` of the mean.
    pub good_mass: f64,
    pub total_mass: f64,
    pub good_towers: usize,
    pub towers: usize,
    pub pass: bool,
}

/// Search for `B ⊆ A` with `μ_T(B) > (1-δ) μ_T(A)` and tower averages within `δ` of `∫h dμ`.
pub fn castle_ergodic_check(
    sample: &SectionSample,
    castle: &Castle,
    h: &[f64],
    delta: f64,
) -> Result<CastleErgodicReport, SectionError> {
    if h.len() != sample.len() {
        return Err(SectionError::InvalidSample(String::from("h has the wrong length")));
    }
    let range = castle.range_measure(sample);
    if !(range > delta) {
        return Err(SectionError::RangeTooSmall { range, delta });
    }
    let mean = sample.integral(h);
    let good: Vec<usize> = castle
        .towers
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let avg = pairwise_sum(&t.iter().map(|y| h[*y]).collect::<Vec<_>>()) / t.len() as f64;
            (avg - mean).abs() < delta
        })
        .map(|(i, _)| i)
        .collect();
    let good_mass = castle.measure(sample, &good);
    let total = castle.total_measure(sample);
    Ok(CastleErgodicReport {
        mean,
        delta,
        good_mass,
        total_mass: total,
        good_towers: good.len(),
        towers: castle.len(),
        pass: good_mass > (1.0 - delta) * total,
    })
}
