//! Quasi-tilings of finite point patterns.
//!
//! [`select_tile_centers`] is the single-scale greedy selection; [`quasi_tile`]
//! runs it over a descending family of scales, shrinking the uncovered set
//! `A_k` and the admissible centres `B_k` after each scale, and stops once less
//! than `2δ|A|` remains uncovered. [`verify_tiling`] independently checks the
//! three conclusions: δ-disjointness within each scale, disjointness across
//! scales, and coverage above `(1 - 2δ)|A|`.
//!
//! Haar measure of a set `F` is `intensity * |F|`, where the intensity of an
//! instance is `|A| / |window|` for generated instances and 1 otherwise.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::{HashMap, HashSet};

use crate::error::TilingError;
use crate::group::{box_elements, ColumnSet, Element, ElementSet, GroupModel, MAX_RANK};
use crate::index::{Counter, Fenwick, PointIndex, Probe};
use crate::rng;

/// Default cap on the number of scales the parameter formula may demand.
pub const DEFAULT_MAX_SCALES: usize = 512;

/// ε is snapped to multiples of `1 / EPS_GRID`.
pub const EPS_GRID: u32 = 10_000;

/// Constants for a multi-scale tiling: δ, packing constant `c`, scale count `n`, ε.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TilingParams {
    pub delta: f64,
    pub c: u32,
    pub n: usize,
    pub eps: f64,
}

/// `ln δ / ln(1 - δ/(8c))` before rounding up.
pub fn scale_count_raw(delta: f64, c: u32) -> f64 {
    libm::log(delta) / libm::log(1.0 - delta / (8.0 * c as f64))
}

/// `(1-δ)(1-2ε) > (1-2δ)(1+δ+2ε)`.
pub fn growth_inequality(delta: f64, eps: f64) -> bool {
    (1.0 - delta) * (1.0 - 2.0 * eps) > (1.0 - 2.0 * delta) * (1.0 + delta + 2.0 * eps)
}

pub fn params_for(delta: f64, c: u32) -> Result<TilingParams, TilingError> {
    params_for_capped(delta, c, DEFAULT_MAX_SCALES)
}

pub fn params_for_capped(delta: f64, c: u32, cap: usize) -> Result<TilingParams, TilingError> {
    if !delta_in_range(delta) {
        return Err(TilingError::DeltaOutOfRange(delta));
    }
    if c == 0 {
        return Err(TilingError::InvalidPacking);
    }
    let n = libm::ceil(scale_count_raw(delta, c)) as usize;
    if n > cap {
        return Err(TilingError::ScaleCountExceeded { required: n, cap });
    }
    Ok(TilingParams {
        delta,
        c,
        n,
        eps: epsilon_for(delta)?,
    })
}

/// Largest grid value satisfying the growth inequality.
pub fn epsilon_for(delta: f64) -> Result<f64, TilingError> {
    // closed form of the boundary: ε* = δ² / (2 - 3δ)
    let bound = delta * delta / (2.0 - 3.0 * delta);
    let mut k = libm::floor(bound * EPS_GRID as f64) as i64 + 1;
    while k > 0 {
        let eps = k as f64 / EPS_GRID as f64;
        if growth_inequality(delta, eps) {
            return Ok(eps);
        }
        k -= 1;
    }
    Err(TilingError::NoValidEpsilon)
}

/// `|A_i ∩ ∪_{j<i} A_j| < eps |A_i|` for every `i`.
pub fn is_eps_disjoint(sets: &[ElementSet], eps: f64) -> Result<bool, TilingError> {
    if !(eps > 0.0) {
        return Err(crate::error::GroupError::InvalidEpsilon.into());
    }
    if let Some(i) = sets.iter().position(|s| s.is_empty()) {
        return Err(TilingError::EmptyMember(i));
    }
    let mut seen: HashSet<Element> = HashSet::new();
    let mut ok = true;
    for s in sets {
        let overlap = s.iter().filter(|g| seen.contains(*g)).count();
        if !((overlap as f64) < eps * s.len() as f64) {
            ok = false;
        }
        seen.extend(s.iter().copied());
    }
    Ok(ok)
}

/// The tiling hypotheses. Numbered ones are conditions 1–6 on an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Hypothesis {
    DeltaRange,
    NeighborhoodSquare,
    Packing,
    ScaleMass,
    Separation,
    BaseMass,
    NestedGrowth,
    HalfMass,
}

impl Hypothesis {
    /// Position in the list of instance conditions, if numbered.
    pub fn number(&self) -> Option<u8> {
        match self {
            Hypothesis::NeighborhoodSquare => Some(1),
            Hypothesis::Packing => Some(2),
            Hypothesis::ScaleMass => Some(3),
            Hypothesis::Separation => Some(4),
            Hypothesis::BaseMass => Some(5),
            Hypothesis::NestedGrowth => Some(6),
            _ => None,
        }
    }

    pub fn statement(&self) -> &'static str {
        match self {
            Hypothesis::DeltaRange => "0 < δ ≤ 0.1",
            Hypothesis::NeighborhoodSquare => "V·V ⊆ U",
            Hypothesis::Packing => "at most c·λ(F_i) disjoint V-translates centred in F_i",
            Hypothesis::ScaleMass => "λ(F_i) > 10",
            Hypothesis::Separation => "A is U-separated",
            Hypothesis::BaseMass => "B ⊆ A and |B| > (1-ε)|A|",
            Hypothesis::NestedGrowth => {
                "|(∪_{j<i} F_j)^-1 F_i b ∩ A| < (1+ε)|F_i b ∩ A| for all b in B"
            }
            Hypothesis::HalfMass => "|F_i b ∩ A| > λ(F_i)/2 for all b in B",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.number() {
            Some(n) => write!(f, "hypothesis {n} ({})", self.statement()),
            None => write!(f, "hypothesis {}", self.statement()),
        }
    }
}

/// A finite tiling problem: point pattern `A`, admissible centres `B ⊆ A`,
/// scales `F_1 .. F_M` (index 0 is the smallest), neighbourhoods `U`, `V`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TilingInstance {
    pub group: GroupModel,
    pub a: ElementSet,
    pub b: ElementSet,
    pub scales: Vec<ElementSet>,
    pub u: ElementSet,
    pub v: ElementSet,
    pub intensity: f64,
}

impl TilingInstance {
    /// Instance with unit intensity (Haar measure = counting measure).
    pub fn new(
        group: GroupModel,
        a: ElementSet,
        b: ElementSet,
        scales: Vec<ElementSet>,
        u: ElementSet,
        v: ElementSet,
    ) -> Self {
        TilingInstance {
            group,
            a,
            b,
            scales,
            u,
            v,
            intensity: 1.0,
        }
    }

    pub fn lambda(&self, f: &ElementSet) -> f64 {
        self.intensity * f.len() as f64
    }

    /// Upper bound on the number of disjoint `V`-translates centred in `F`: `⌊|VF| / |V|⌋`.
    pub fn packing_bound(&self, f: &ElementSet) -> usize {
        let vf = self
            .group
            .product_set(&self.v, f)
            .map(|s| s.len())
            .unwrap_or(0);
        vf / self.v.len().max(1)
    }

    /// Greedy maximal packing of disjoint translates `V f`, `f ∈ F`, in canonical order.
    pub fn greedy_packing(&self, f: &ElementSet) -> usize {
        let mut used: HashSet<Element> = HashSet::new();
        let mut count = 0;
        for x in f {
            let t: Vec<Element> = self.v.iter().map(|v| self.group.op(v, x)).collect();
            if t.iter().all(|y| !used.contains(y)) {
                used.extend(t);
                count += 1;
            }
        }
        count
    }

    /// Smallest `c` for which the packing condition holds on every scale.
    pub fn required_packing(&self) -> u32 {
        self.scales
            .iter()
            .map(|f| {
                let ratio = self.packing_bound(f) as f64 / self.lambda(f);
                libm::ceil(ratio - 1e-12).max(1.0) as u32
            })
            .max()
            .unwrap_or(1)
    }

    /// `(∪_{j<i} F_j)^-1 F_i`.
    pub fn removal_set(&self, i: usize) -> ElementSet {
        if i == 0 {
            return ElementSet::new();
        }
        let mut lower = ElementSet::new();
        for f in &self.scales[..i] {
            lower = lower.union(f);
        }
        let inv = self.group.inverse_set(&lower);
        self.group
            .product_set(&inv, &self.scales[i])
            .unwrap_or_default()
    }
}

/// Outcome of one hypothesis check: worst observed value against its bound.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreconditionCheck {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    pub observed: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreconditionReport {
    pub checks: Vec<PreconditionCheck>,
    /// Scales the parameter formula asks for.
    pub required_scales: usize,
    pub supplied_scales: usize,
    /// True when at least `n` scales are supplied, so coverage is guaranteed a priori.
    pub decay_guaranteed: bool,
}

impl PreconditionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&PreconditionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Evaluate conditions 1–6 and the half-mass hypothesis on every supplied scale.
pub fn check_preconditions(inst: &TilingInstance, params: &TilingParams) -> PreconditionReport {
    let g = &inst.group;
    let mut checks = Vec::new();
    let eps = params.eps;

    let delta_ok = delta_in_range(params.delta);
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::DeltaRange,
        passed: delta_ok,
        observed: params.delta,
        bound: 0.1,
        detail: String::new(),
    });

    let vv = g.product_set(&inst.v, &inst.v).unwrap_or_default();
    let missing = vv.difference(&inst.u).len();
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::NeighborhoodSquare,
        passed: missing == 0 && !inst.v.is_empty(),
        observed: missing as f64,
        bound: 0.0,
        detail: format!("{missing} elements of V·V outside U"),
    });

    let mut worst_pack = 0.0f64;
    let mut worst_mass = f64::INFINITY;
    for f in &inst.scales {
        let lam = inst.lambda(f);
        worst_pack = worst_pack.max(inst.packing_bound(f) as f64 / lam);
        worst_mass = worst_mass.min(lam);
    }
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::Packing,
        passed: !inst.scales.is_empty() && worst_pack <= params.c as f64 + 1e-12,
        observed: worst_pack,
        bound: params.c as f64,
        detail: String::from("packing bound per unit measure"),
    });
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::ScaleMass,
        passed: !inst.scales.is_empty() && worst_mass > 10.0,
        observed: worst_mass,
        bound: 10.0,
        detail: format!("{} scales supplied", inst.scales.len()),
    });

    let separated = g.is_separated(&inst.a, &inst.u);
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::Separation,
        passed: separated,
        observed: if separated { 0.0 } else { 1.0 },
        bound: 0.0,
        detail: String::new(),
    });

    let subset = inst.b.is_subset(&inst.a);
    let base_ratio = inst.b.len() as f64 / inst.a.len().max(1) as f64;
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::BaseMass,
        passed: subset && (inst.b.len() as f64) > (1.0 - eps) * inst.a.len() as f64,
        observed: base_ratio,
        bound: 1.0 - eps,
        detail: if subset {
            String::new()
        } else {
            String::from("B is not contained in A")
        },
    });

    let index = PointIndex::new(&inst.a);
    let in_a = index.flags(&inst.a);
    let counter = Counter::new(*g, &index, &in_a);
    let mut worst_growth = 0.0f64;
    let mut growth_fail = 0usize;
    let mut worst_half = f64::INFINITY;
    let mut half_fail = 0usize;
    for (i, f) in inst.scales.iter().enumerate() {
        let fp = Probe::new(g, f);
        let dp = Probe::new(g, &inst.removal_set(i));
        let half = inst.lambda(f) / 2.0;
        for b in &inst.b {
            let mass = counter.count(&fp, b);
            let grown = if dp.len() == 0 { 0 } else { counter.count(&dp, b) };
            if mass == 0 {
                growth_fail += 1;
                worst_growth = f64::INFINITY;
            } else {
                let r = grown as f64 / mass as f64;
                worst_growth = worst_growth.max(r);
                if !((grown as f64) < (1.0 + eps) * mass as f64) {
                    growth_fail += 1;
                }
            }
            worst_half = worst_half.min(mass as f64 / inst.lambda(f));
            if !(mass as f64 > half) {
                half_fail += 1;
            }
        }
    }
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::NestedGrowth,
        passed: growth_fail == 0,
        observed: worst_growth,
        bound: 1.0 + eps,
        detail: format!("{growth_fail} (centre, scale) pairs fail"),
    });
    checks.push(PreconditionCheck {
        hypothesis: Hypothesis::HalfMass,
        passed: half_fail == 0,
        observed: if inst.b.is_empty() { 1.0 } else { worst_half },
        bound: 0.5,
        detail: format!("{half_fail} (centre, scale) pairs fail"),
    });

    PreconditionReport {
        checks,
        required_scales: params.n,
        supplied_scales: inst.scales.len(),
        decay_guaranteed: inst.scales.len() >= params.n,
    }
}

/// Selected centres per scale (index 0 is the smallest scale).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TilingResult {
    pub centers: Vec<Vec<Element>>,
    pub covered: usize,
    pub coverage: f64,
    /// Scale at which the recursion stopped.
    pub last_scale: usize,
}

impl TilingResult {
    /// Tiles `F_i b ∩ A` for the centres of scale `i`, in selection order.
    pub fn tiles(&self, inst: &TilingInstance, i: usize) -> Vec<ElementSet> {
        self.centers[i]
            .iter()
            .map(|b| inst.group.right_translate(&inst.scales[i], b).intersection(&inst.a))
            .collect()
    }

    pub fn center_count(&self) -> usize {
        self.centers.iter().map(|c| c.len()).sum()
    }
}

struct Greedy<'a> {
    counter: &'a Counter<'a>,
    delta: f64,
}

impl Greedy<'_> {
    /// One pass of the selection over `order`, restricted to candidates and the live set.
    fn select(
        &self,
        probe: &Probe,
        order: &[Element],
        cand: &[bool],
        alive: &[bool],
    ) -> Vec<Element> {
        let index = self.counter.index;
        let g = self.counter.group;
        let mut covered = alloc::vec![false; index.slots()];
        let mut chosen = Vec::new();
        let mut slots = Vec::with_capacity(probe.len());
        let mut tree = match probe.lattice_box {
            Some(_) => Fenwick::new(index),
            None => None,
        };
        for b in order {
            match index.slot(b) {
                Some(s) if cand[s] => {}
                _ => continue,
            }
            let mass = self.counter.count(probe, b);
            let limit = self.delta * mass as f64;
            if mass == 0 {
                continue;
            }
            if let (Some(fw), Some((lo, hi))) = (&tree, probe.shifted_box(b)) {
                if fw.count(&lo, &hi) as f64 >= limit {
                    continue;
                }
            }
            let mut overlap = 0usize;
            let mut rejected = false;
            slots.clear();
            for f in &probe.elems {
                if let Some(t) = index.slot(&g.op(f, b)) {
                    if alive[t] {
                        if covered[t] {
                            overlap += 1;
                            if overlap as f64 >= limit {
                                rejected = true;
                                break;
                            }
                        } else {
                            slots.push(t);
                        }
                    }
                }
            }
            if !rejected {
                for &t in &slots {
                    covered[t] = true;
                    if let Some(fw) = tree.as_mut() {
                        fw.insert(t);
                    }
                }
                chosen.push(*b);
            }
        }
        chosen
    }
}

/// `0 < δ ≤ 0.1`; the endpoint is admitted so that δ = 0.1 is usable.
pub fn delta_in_range(delta: f64) -> bool {
    delta > 0.0 && delta <= 0.1
}

fn check_delta(delta: f64) -> Result<(), TilingError> {
    if delta_in_range(delta) {
        Ok(())
    } else {
        Err(TilingError::Precondition {
            hypothesis: Hypothesis::DeltaRange,
            detail: format!("delta = {delta}"),
        })
    }
}

/// Greedy single-scale selection: scan `B` in canonical order and keep `b`
/// when `F b ∩ A` meets the union of earlier tiles in less than `δ|F b ∩ A|`.
///
/// Haar measure is `intensity * |·|`.
pub fn select_tile_centers(
    group: &GroupModel,
    a: &ElementSet,
    b: &ElementSet,
    f: &ElementSet,
    delta: f64,
    intensity: f64,
) -> Result<Vec<Element>, TilingError> {
    check_delta(delta)?;
    if !b.is_subset(a) {
        return Err(TilingError::Precondition {
            hypothesis: Hypothesis::BaseMass,
            detail: String::from("B is not contained in A"),
        });
    }
    let lam = intensity * f.len() as f64;
    if !(lam > 10.0) {
        return Err(TilingError::Precondition {
            hypothesis: Hypothesis::ScaleMass,
            detail: format!("λ(F) = {lam}"),
        });
    }
    if b.is_empty() {
        return Ok(Vec::new());
    }
    let index = PointIndex::new(a);
    let in_a = index.flags(a);
    let counter = Counter::new(*group, &index, &in_a);
    let probe = Probe::new(group, f);
    for x in b {
        let m = counter.count(&probe, x);
        if !(m as f64 > lam / 2.0) {
            return Err(TilingError::Precondition {
                hypothesis: Hypothesis::HalfMass,
                detail: format!("|F b ∩ A| = {m} at b = {x:?}"),
            });
        }
    }
    let cand = index.flags(b);
    let greedy = Greedy {
        counter: &counter,
        delta,
    };
    Ok(greedy.select(&probe, b.as_slice(), &cand, &in_a))
}

/// `|F B̃ ∩ A| > δ/(4c) |B|`.
pub fn lemma_bound_holds(
    group: &GroupModel,
    a: &ElementSet,
    f: &ElementSet,
    centers: &[Element],
    b_len: usize,
    delta: f64,
    c: u32,
) -> bool {
    let mut union: HashSet<Element> = HashSet::new();
    for x in centers {
        for y in f {
            let z = group.op(y, x);
            if a.contains(&z) {
                union.insert(z);
            }
        }
    }
    union.len() as f64 > delta / (4.0 * c as f64) * b_len as f64
}

/// Multi-scale quasi-tiling. Fails with the first violated hypothesis.
pub fn quasi_tile(inst: &TilingInstance, params: &TilingParams) -> Result<TilingResult, TilingError> {
    let report = check_preconditions(inst, params);
    if let Some(c) = report.first_failure() {
        return Err(TilingError::Precondition {
            hypothesis: c.hypothesis,
            detail: format!("observed {} against bound {}; {}", c.observed, c.bound, c.detail),
        });
    }
    tile_checked(inst, params.delta)
}

fn tile_checked(inst: &TilingInstance, delta: f64) -> Result<TilingResult, TilingError> {
    let g = inst.group;
    let m = inst.scales.len();
    let index = PointIndex::new(&inst.a);
    let in_a = index.flags(&inst.a);
    let counter = Counter::new(g, &index, &in_a);
    let greedy = Greedy {
        counter: &counter,
        delta,
    };
    let total = inst.a.len();
    let mut alive = in_a.clone();
    let mut alive_count = total;
    let mut cand = index.flags(&inst.b);
    let mut cand_count = inst.b.len();
    let mut centers = alloc::vec![Vec::new(); m];
    let mut last_scale = m;

    for k in (0..m).rev() {
        last_scale = k;
        if alive_count as f64 > 2.0 * delta * total as f64 && !(cand_count as f64 > alive_count as f64 / 2.0) {
            return Err(TilingError::Internal(format!(
                "|B_k| = {cand_count} is not above |A_k|/2 = {} at scale {k}",
                alive_count as f64 / 2.0
            )));
        }
        let probe = Probe::new(&g, &inst.scales[k]);
        let chosen = greedy.select(&probe, inst.b.as_slice(), &cand, &alive);
        if k == 0 || (alive_count as f64) < 2.0 * delta * total as f64 {
            centers[k] = chosen;
            break;
        }
        for x in &chosen {
            for f in &probe.elems {
                if let Some(t) = index.slot(&g.op(f, x)) {
                    if alive[t] {
                        alive[t] = false;
                        alive_count -= 1;
                    }
                }
            }
        }
        let removal = inst.removal_set(k);
        for x in &chosen {
            for d in &removal {
                if let Some(t) = index.slot(&g.op(d, x)) {
                    if cand[t] && in_a[t] {
                        cand[t] = false;
                        cand_count -= 1;
                    }
                }
            }
        }
        centers[k] = chosen;
    }

    let mut covered_flags = alloc::vec![false; index.slots()];
    let mut covered = 0;
    for (k, cs) in centers.iter().enumerate() {
        for x in cs {
            for f in &inst.scales[k] {
                if let Some(t) = index.slot(&g.op(f, x)) {
                    if in_a[t] && !covered_flags[t] {
                        covered_flags[t] = true;
                        covered += 1;
                    }
                }
            }
        }
    }
    Ok(TilingResult {
        centers,
        covered,
        coverage: if total == 0 { 1.0 } else { covered as f64 / total as f64 },
        last_scale,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleDisjointness {
    pub scale: usize,
    pub tiles: usize,
    pub max_overlap_ratio: f64,
    pub passed: bool,
}

/// Result of checking the three tiling conclusions.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TilingReport {
    pub per_scale: Vec<ScaleDisjointness>,
    pub disjoint_within_scales: bool,
    pub cross_scale_overlap: usize,
    pub disjoint_across_scales: bool,
    pub coverage: f64,
    pub coverage_bound: f64,
    pub covers: bool,
    pub centers_in_b: bool,
}

impl TilingReport {
    pub fn all_pass(&self) -> bool {
        self.disjoint_within_scales && self.disjoint_across_scales && self.covers && self.centers_in_b
    }
}

/// Check the three conclusions directly from the tiles.
pub fn verify_tiling(inst: &TilingInstance, params: &TilingParams, result: &TilingResult) -> TilingReport {
    let g = inst.group;
    let delta = params.delta;
    let mut per_scale = Vec::new();
    let mut owner: HashMap<Element, usize> = HashMap::new();
    let mut cross = 0usize;
    let mut centers_in_b = true;
    for (i, cs) in result.centers.iter().enumerate() {
        let f = match inst.scales.get(i) {
            Some(f) => f,
            None => {
                centers_in_b = false;
                continue;
            }
        };
        let mut seen: HashSet<Element> = HashSet::new();
        let mut worst = 0.0f64;
        let mut ok = true;
        for x in cs {
            centers_in_b &= inst.b.contains(x);
            let tile: Vec<Element> = f
                .iter()
                .map(|y| g.op(y, x))
                .filter(|z| inst.a.contains(z))
                .collect();
            if tile.is_empty() {
                ok = false;
                worst = f64::INFINITY;
                continue;
            }
            let overlap = tile.iter().filter(|z| seen.contains(*z)).count();
            let r = overlap as f64 / tile.len() as f64;
            worst = worst.max(r);
            if !((overlap as f64) < delta * tile.len() as f64) {
                ok = false;
            }
            for z in tile {
                seen.insert(z);
            }
        }
        for z in seen {
            match owner.get(&z) {
                Some(&j) if j != i => cross += 1,
                Some(_) => {}
                None => {
                    owner.insert(z, i);
                }
            }
        }
        per_scale.push(ScaleDisjointness {
            scale: i,
            tiles: cs.len(),
            max_overlap_ratio: worst,
            passed: ok,
        });
    }
    let coverage = if inst.a.is_empty() {
        1.0
    } else {
        owner.len() as f64 / inst.a.len() as f64
    };
    let bound = 1.0 - 2.0 * delta;
    TilingReport {
        disjoint_within_scales: per_scale.iter().all(|s| s.passed),
        per_scale,
        cross_scale_overlap: cross,
        disjoint_across_scales: cross == 0,
        coverage,
        coverage_bound: bound,
        covers: coverage > bound,
        centers_in_b,
    }
}

/// Knobs for [`make_instance_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceOptions {
    pub delta: f64,
    /// `U` is the word ball of this radius; `V = {e}`.
    pub separation_radius: u32,
    /// Largest scale as a fraction of the window size.
    pub max_scale_fraction: f64,
    /// Upper bound on `|D_i| * |A|` for scales whose removal set is not a lattice box.
    pub work_budget: f64,
    pub family: ScaleFamily,
}

/// Shapes used for the generated scales.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleFamily {
    /// The group's Følner boxes.
    Folner,
    /// `{0} x [-r,r] x [-2r,2r]` in H3: no shear under right translation.
    Slab,
}

impl ScaleFamily {
    pub fn default_for(group: &GroupModel) -> Self {
        match group {
            GroupModel::Heisenberg => ScaleFamily::Slab,
            GroupModel::Lattice { .. } => ScaleFamily::Folner,
        }
    }

    fn bounds(&self, group: &GroupModel, r: u32) -> ([i64; MAX_RANK], [i64; MAX_RANK]) {
        match (self, group) {
            (ScaleFamily::Slab, GroupModel::Heisenberg) => {
                let r = r as i64;
                ([0, -r, -2 * r, 0], [0, r, 2 * r, 0])
            }
            _ => group.folner_bounds(r),
        }
    }

    pub fn set(&self, group: &GroupModel, r: u32) -> ElementSet {
        let (lo, hi) = self.bounds(group, r);
        box_elements(group.rank(), &lo, &hi)
    }

    fn size(&self, group: &GroupModel, r: u32) -> f64 {
        let (lo, hi) = self.bounds(group, r);
        (0..group.rank()).map(|d| (hi[d] - lo[d] + 1) as f64).product()
    }

    fn region(&self, group: &GroupModel, r: u32) -> ColumnSet {
        let (lo, hi) = self.bounds(group, r);
        ColumnSet::from_box(group.rank(), &lo, &hi)
    }
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions {
            delta: 0.1,
            separation_radius: 0,
            max_scale_fraction: 0.125,
            work_budget: 2.0e8,
            family: ScaleFamily::Folner,
        }
    }
}

/// Seeded instance over the Følner window at `window_scale`, with the default scale family for the group.
pub fn make_instance(
    group: &GroupModel,
    window_scale: u32,
    density: f64,
    seed: u64,
) -> Result<TilingInstance, TilingError> {
    let opts = InstanceOptions {
        family: ScaleFamily::default_for(group),
        ..InstanceOptions::default()
    };
    make_instance_with(group, window_scale, density, seed, &opts)
}

/// `|(∪ lower)^-1 F_r| / |F_r|` at group level.
fn growth_ratio(group: &GroupModel, family: ScaleFamily, lower_inv: &ElementSet, r: u32) -> f64 {
    let region = family.region(group, r);
    let e = ElementSet::singleton(group.identity());
    let grown = region.two_sided_product(group, lower_inv, &e);
    grown.len() as f64 / region.len() as f64
}

pub fn make_instance_with(
    group: &GroupModel,
    window_scale: u32,
    density: f64,
    seed: u64,
    opts: &InstanceOptions,
) -> Result<TilingInstance, TilingError> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(TilingError::InvalidDensity(density));
    }
    check_delta(opts.delta)?;
    let eps = epsilon_for(opts.delta)?;
    let window = group.folner(window_scale);
    let mut rng = rng::stream(seed, 0);
    let thinned: Vec<Element> = window
        .iter()
        .filter(|_| density >= 1.0 || rng::uniform(&mut rng) < density)
        .copied()
        .collect();

    let u = group.ball(opts.separation_radius);
    let e = group.identity();
    let mut kept: HashSet<Element> = HashSet::new();
    let mut a = Vec::with_capacity(thinned.len());
    for x in thinned {
        let clash = u.iter().filter(|k| **k != e).any(|k| {
            kept.contains(&group.op(k, &x)) || kept.contains(&group.op(&group.invert(k), &x))
        });
        if !clash {
            kept.insert(x);
            a.push(x);
        }
    }
    let a = ElementSet::from_vec(a);
    if a.is_empty() {
        return Err(TilingError::Unsatisfiable {
            hypothesis: Hypothesis::ScaleMass,
            hint: String::from("window is empty after thinning; use a larger window"),
        });
    }
    let intensity = a.len() as f64 / window.len() as f64;
    let cap = opts.max_scale_fraction * window.len() as f64;

    let fits = |q: u32| {
        let size = opts.family.size(group, q);
        size <= cap && (group.is_abelian() || size * a.len() as f64 <= opts.work_budget)
    };
    // smallest scale with measure above 10 whose half-mass margin is four standard deviations
    let mut r = 1u32;
    loop {
        let size = opts.family.size(group, r);
        let sd = libm::sqrt(intensity * (1.0 - intensity) * size);
        if intensity * size > 10.0 && intensity * size / 2.0 >= 4.0 * sd {
            break;
        }
        r += 1;
        if opts.family.size(group, r) > window.len() as f64 {
            break;
        }
    }
    if !fits(r) {
        return Err(TilingError::Unsatisfiable {
            hypothesis: Hypothesis::ScaleMass,
            hint: format!(
                "no Følner set of measure above 10 fits in the window at scale {window_scale}; use a larger window"
            ),
        });
    }
    let mut radii = alloc::vec![r];
    loop {
        let prev = *radii.last().unwrap();
        if !fits(prev + 1) {
            break;
        }
        let mut top = prev + 1;
        while fits(top.saturating_mul(2)) {
            top *= 2;
        }
        let (mut lo, mut hi) = (top, top.saturating_mul(2));
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let largest = lo;
        let mut lower = ElementSet::new();
        for &q in &radii {
            lower = lower.union(&opts.family.set(group, q));
        }
        let lower_inv = group.inverse_set(&lower);
        let ok = |q: u32| growth_ratio(group, opts.family, &lower_inv, q) < 1.0 + eps / 2.0;
        if !ok(largest) {
            break;
        }
        let (mut lo, mut hi) = (prev + 1, largest);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        radii.push(lo);
    }

    let v = ElementSet::singleton(e);
    while !radii.is_empty() {
        let scales: Vec<ElementSet> = radii.iter().map(|&q| opts.family.set(group, q)).collect();
        let mut inst = TilingInstance {
            group: *group,
            a: a.clone(),
            b: ElementSet::new(),
            scales,
            u: u.clone(),
            v: v.clone(),
            intensity,
        };
        let (b, half_fail, growth_fail) = admissible_centres(&inst, eps);
        inst.b = b;
        if (inst.b.len() as f64) > (1.0 - eps) * a.len() as f64 {
            return Ok(inst);
        }
        if radii.len() == 1 {
            let hypothesis = if half_fail >= growth_fail {
                Hypothesis::HalfMass
            } else {
                Hypothesis::NestedGrowth
            };
            return Err(TilingError::Unsatisfiable {
                hypothesis,
                hint: format!(
                    "only {} of {} points are admissible centres; use a larger window",
                    inst.b.len(),
                    a.len()
                ),
            });
        }
        radii.pop();
    }
    Err(TilingError::Internal(String::from("no scales left")))
}

/// Points of `A` satisfying the half-mass and nested-growth conditions at every scale.
fn admissible_centres(inst: &TilingInstance, eps: f64) -> (ElementSet, usize, usize) {
    let g = inst.group;
    let index = PointIndex::new(&inst.a);
    let in_a = index.flags(&inst.a);
    let counter = Counter::new(g, &index, &in_a);
    let probes: Vec<(Probe, Probe, f64)> = inst
        .scales
        .iter()
        .enumerate()
        .map(|(i, f)| {
            (
                Probe::new(&g, f),
                Probe::new(&g, &inst.removal_set(i)),
                inst.lambda(f) / 2.0,
            )
        })
        .collect();
    let mut half_fail = 0;
    let mut growth_fail = 0;
    let b = inst
        .a
        .iter()
        .filter(|x| {
            probes.iter().all(|(fp, dp, half)| {
                let mass = counter.count(fp, x);
                if !(mass as f64 > *half) {
                    half_fail += 1;
                    return false;
                }
                let grown = if dp.len() == 0 { 0 } else { counter.count(dp, x) };
                if !((grown as f64) < (1.0 + eps) * mass as f64) {
                    growth_fail += 1;
                    return false;
                }
                true
            })
        })
        .copied()
        .collect();
    (b, half_fail, growth_fail)
}
