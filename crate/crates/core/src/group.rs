//! Finitely generated discrete amenable groups with counting Haar measure.
//!
//! Two families are modelled: the lattices `Z^d` (rank `1..=MAX_RANK`) and the
//! discrete Heisenberg group `H3(Z)` with the law
//! `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`.
//!
//! Elements are integer tuples ordered lexicographically; [`ElementSet`] keeps
//! them sorted and deduplicated so every downstream greedy pass is
//! deterministic.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashSet;

use crate::error::GroupError;

/// Largest supported encoding length.
pub const MAX_RANK: usize = 4;

/// A group element encoded as an integer tuple.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    coords: [i64; MAX_RANK],
    rank: u8,
}

impl Element {
    pub fn new(coords: &[i64]) -> Result<Self, GroupError> {
        if coords.is_empty() || coords.len() > MAX_RANK {
            return Err(GroupError::RankOutOfRange(coords.len()));
        }
        let mut c = [0; MAX_RANK];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Element {
            coords: c,
            rank: coords.len() as u8,
        })
    }

    #[inline]
    pub(crate) const fn from_raw(coords: [i64; MAX_RANK], rank: u8) -> Self {
        Element { coords, rank }
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.rank as usize]
    }

    #[inline]
    pub(crate) fn raw(&self) -> &[i64; MAX_RANK] {
        &self.coords
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank as usize
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Element {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Element {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<i64> = Vec::deserialize(d)?;
        Element::new(&v).map_err(serde::de::Error::custom)
    }
}

/// A finite set of elements in canonical (lexicographic) order.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ElementSet {
    elems: Vec<Element>,
}

impl ElementSet {
    pub fn new() -> Self {
        ElementSet { elems: Vec::new() }
    }

    pub fn from_vec(mut elems: Vec<Element>) -> Self {
        elems.sort_unstable();
        elems.dedup();
        ElementSet { elems }
    }

    pub fn singleton(g: Element) -> Self {
        ElementSet { elems: alloc::vec![g] }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    #[inline]
    pub fn contains(&self, g: &Element) -> bool {
        self.elems.binary_search(g).is_ok()
    }

    /// Position of `g` in canonical order.
    #[inline]
    pub fn position(&self, g: &Element) -> Option<usize> {
        self.elems.binary_search(g).ok()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Element> {
        self.elems.iter()
    }

    pub fn as_slice(&self) -> &[Element] {
        &self.elems
    }

    pub fn first(&self) -> Option<&Element> {
        self.elems.first()
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            match self.elems[i].cmp(&other.elems[j]) {
                core::cmp::Ordering::Less => {
                    v.push(self.elems[i]);
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    v.push(other.elems[j]);
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    v.push(self.elems[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        v.extend_from_slice(&self.elems[i..]);
        v.extend_from_slice(&other.elems[j..]);
        ElementSet { elems: v }
    }

    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        ElementSet {
            elems: self
                .elems
                .iter()
                .filter(|g| other.contains(g))
                .copied()
                .collect(),
        }
    }

    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        ElementSet {
            elems: self
                .elems
                .iter()
                .filter(|g| !other.contains(g))
                .copied()
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.elems.iter().all(|g| other.contains(g))
    }

    pub fn into_vec(self) -> Vec<Element> {
        self.elems
    }

    /// Coordinate bounding box `(lo, hi)`, inclusive.
    pub(crate) fn bounding_box(&self) -> Option<([i64; MAX_RANK], [i64; MAX_RANK])> {
        let first = self.elems.first()?;
        let mut lo = *first.raw();
        let mut hi = lo;
        for g in &self.elems {
            for d in 0..MAX_RANK {
                lo[d] = lo[d].min(g.raw()[d]);
                hi[d] = hi[d].max(g.raw()[d]);
            }
        }
        Some((lo, hi))
    }

    /// True when the set fills its coordinate bounding box.
    pub(crate) fn is_box(&self) -> bool {
        match self.bounding_box() {
            None => false,
            Some((lo, hi)) => {
                let mut vol: u128 = 1;
                for d in 0..MAX_RANK {
                    vol *= (hi[d] - lo[d] + 1) as u128;
                }
                vol == self.len() as u128
            }
        }
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems.iter()).finish()
    }
}

impl FromIterator<Element> for ElementSet {
    fn from_iter<I: IntoIterator<Item = Element>>(iter: I) -> Self {
        ElementSet::from_vec(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ElementSet {
    type Item = &'a Element;
    type IntoIter = core::slice::Iter<'a, Element>;
    fn into_iter(self) -> Self::IntoIter {
        self.elems.iter()
    }
}

/// Which group is acting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum GroupModel {
    /// `Z^rank`, written additively.
    Lattice { rank: u8 },
    /// Discrete Heisenberg group `H3(Z)`.
    Heisenberg,
}

impl GroupModel {
    pub fn lattice(rank: usize) -> Result<Self, GroupError> {
        if rank == 0 || rank > MAX_RANK {
            return Err(GroupError::RankOutOfRange(rank));
        }
        Ok(GroupModel::Lattice { rank: rank as u8 })
    }

    pub const fn integers() -> Self {
        GroupModel::Lattice { rank: 1 }
    }

    pub const fn heisenberg() -> Self {
        GroupModel::Heisenberg
    }

    /// Length of the integer encoding.
    pub fn rank(&self) -> usize {
        match self {
            GroupModel::Lattice { rank } => *rank as usize,
            GroupModel::Heisenberg => 3,
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self, GroupModel::Lattice { .. })
    }

    pub fn identity(&self) -> Element {
        Element::from_raw([0; MAX_RANK], self.rank() as u8)
    }

    pub fn element(&self, coords: &[i64]) -> Result<Element, GroupError> {
        let g = Element::new(coords)?;
        self.check(&g)?;
        Ok(g)
    }

    fn check(&self, g: &Element) -> Result<(), GroupError> {
        if g.rank() != self.rank() {
            return Err(GroupError::RankMismatch {
                expected: self.rank(),
                found: g.rank(),
            });
        }
        Ok(())
    }

    fn check_set(&self, s: &ElementSet) -> Result<(), GroupError> {
        match s.first() {
            Some(g) => self.check(g),
            None => Ok(()),
        }
    }

    pub fn mul(&self, g: &Element, h: &Element) -> Result<Element, GroupError> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.op(g, h))
    }

    pub fn inv(&self, g: &Element) -> Result<Element, GroupError> {
        self.check(g)?;
        Ok(self.invert(g))
    }

    /// Group law without encoding checks.
    #[inline]
    pub fn op(&self, g: &Element, h: &Element) -> Element {
        let (a, b) = (g.raw(), h.raw());
        let mut c = [0i64; MAX_RANK];
        match self {
            GroupModel::Lattice { .. } => {
                for d in 0..MAX_RANK {
                    c[d] = a[d] + b[d];
                }
            }
            GroupModel::Heisenberg => {
                c[0] = a[0] + b[0];
                c[1] = a[1] + b[1];
                c[2] = a[2] + b[2] + a[0] * b[1];
            }
        }
        Element::from_raw(c, g.rank)
    }

    #[inline]
    pub fn invert(&self, g: &Element) -> Element {
        let a = g.raw();
        let mut c = [0i64; MAX_RANK];
        match self {
            GroupModel::Lattice { .. } => {
                for d in 0..MAX_RANK {
                    c[d] = -a[d];
                }
            }
            GroupModel::Heisenberg => {
                // (a,b,c)^-1 = (-a, -b, ab - c)
                c[0] = -a[0];
                c[1] = -a[1];
                c[2] = a[0] * a[1] - a[2];
            }
        }
        Element::from_raw(c, g.rank)
    }

    /// Symmetric generating set (unit vectors for lattices, `x^{±1}, y^{±1}` for H3).
    pub fn generators(&self) -> Vec<Element> {
        let r = self.rank();
        let free_dims = match self {
            GroupModel::Lattice { .. } => r,
            GroupModel::Heisenberg => 2,
        };
        let mut gens = Vec::with_capacity(2 * free_dims);
        for d in 0..free_dims {
            for s in [1i64, -1] {
                let mut c = [0; MAX_RANK];
                c[d] = s;
                gens.push(Element::from_raw(c, r as u8));
            }
        }
        gens
    }

    /// Closed word-metric ball of the given radius.
    pub fn ball(&self, radius: u32) -> ElementSet {
        let gens = self.generators();
        let e = self.identity();
        let mut seen: HashSet<Element> = HashSet::new();
        seen.insert(e);
        let mut frontier = VecDeque::from([(e, 0u32)]);
        while let Some((g, d)) = frontier.pop_front() {
            if d == radius {
                continue;
            }
            for s in &gens {
                let h = self.op(&g, s);
                if seen.insert(h) {
                    frontier.push_back((h, d + 1));
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Følner set at scale `n`: `[-n,n]^d` for lattices, `[-n,n]^2 x [-n^2,n^2]` for H3.
    pub fn folner(&self, n: u32) -> ElementSet {
        let (lo, hi) = self.folner_bounds(n);
        box_elements(self.rank(), &lo, &hi)
    }

    pub(crate) fn folner_bounds(&self, n: u32) -> ([i64; MAX_RANK], [i64; MAX_RANK]) {
        let n = n as i64;
        let mut lo = [0; MAX_RANK];
        let mut hi = [0; MAX_RANK];
        match self {
            GroupModel::Lattice { rank } => {
                for d in 0..*rank as usize {
                    lo[d] = -n;
                    hi[d] = n;
                }
            }
            GroupModel::Heisenberg => {
                lo[0] = -n;
                hi[0] = n;
                lo[1] = -n;
                hi[1] = n;
                lo[2] = -n * n;
                hi[2] = n * n;
            }
        }
        (lo, hi)
    }

    /// The Følner set at scale `n` in column form; usable far beyond enumerable sizes.
    pub fn folner_region(&self, n: u32) -> ColumnSet {
        let (lo, hi) = self.folner_bounds(n);
        ColumnSet::from_box(self.rank(), &lo, &hi)
    }

    /// `{k f : k in K, f in F}`.
    pub fn product_set(&self, k: &ElementSet, f: &ElementSet) -> Result<ElementSet, GroupError> {
        self.check_set(k)?;
        self.check_set(f)?;
        let mut out = Vec::with_capacity(k.len() * f.len());
        for a in k {
            for b in f {
                out.push(self.op(a, b));
            }
        }
        Ok(ElementSet::from_vec(out))
    }

    /// `{k f l : k in K, f in F, l in L}`.
    pub fn product3(
        &self,
        k: &ElementSet,
        f: &ElementSet,
        l: &ElementSet,
    ) -> Result<ElementSet, GroupError> {
        let kf = self.product_set(k, f)?;
        self.product_set(&kf, l)
    }

    pub fn inverse_set(&self, s: &ElementSet) -> ElementSet {
        s.iter().map(|g| self.invert(g)).collect()
    }

    /// Right translate `F b`.
    pub fn right_translate(&self, f: &ElementSet, b: &Element) -> ElementSet {
        f.iter().map(|g| self.op(g, b)).collect()
    }

    fn with_identity(&self, k: &ElementSet) -> ElementSet {
        k.union(&ElementSet::singleton(self.identity()))
    }

    /// `|KFK| / |F|` with the identity adjoined to `K`.
    pub fn invariance_ratio(&self, f: &ElementSet, k: &ElementSet) -> Result<f64, GroupError> {
        if f.is_empty() {
            return Err(GroupError::EmptySet);
        }
        let k1 = self.with_identity(k);
        let kfk = self.product3(&k1, f, &k1)?;
        Ok(kfk.len() as f64 / f.len() as f64)
    }

    /// `F` is `(K, eps)`-invariant: `|KFK| < (1+eps)|F|`, identity adjoined to `K`.
    pub fn is_invariant(&self, f: &ElementSet, k: &ElementSet, eps: f64) -> Result<bool, GroupError> {
        if !(eps > 0.0) {
            return Err(GroupError::InvalidEpsilon);
        }
        if f.is_empty() {
            return Err(GroupError::EmptySet);
        }
        let k1 = self.with_identity(k);
        let kfk = self.product3(&k1, f, &k1)?;
        Ok((kfk.len() as f64) < (1.0 + eps) * f.len() as f64)
    }

    /// Same predicate as [`GroupModel::is_invariant`] on a column region.
    pub fn is_invariant_region(
        &self,
        f: &ColumnSet,
        k: &ElementSet,
        eps: f64,
    ) -> Result<bool, GroupError> {
        if !(eps > 0.0) {
            return Err(GroupError::InvalidEpsilon);
        }
        let size = f.len();
        if size == 0 {
            return Err(GroupError::EmptySet);
        }
        self.check_set(k)?;
        let k1 = self.with_identity(k);
        let kfk = f.two_sided_product(self, &k1, &k1);
        Ok((kfk.len() as f64) < (1.0 + eps) * size as f64)
    }

    /// `gh^-1 ∉ K` for all distinct `g, h ∈ A`.
    pub fn is_separated(&self, a: &ElementSet, k: &ElementSet) -> bool {
        let e = self.identity();
        // g h^-1 = k  <=>  g = k h
        for h in a {
            for kk in k {
                if *kk == e {
                    continue;
                }
                let g = self.op(kk, h);
                if a.contains(&g) {
                    return false;
                }
            }
        }
        true
    }

    /// `{t ∈ T : every r ∈ ambient with r t^-1 ∈ K lies in T}`.
    pub fn interior(&self, t: &ElementSet, ambient: &ElementSet, k: &ElementSet) -> ElementSet {
        t.iter()
            .filter(|x| {
                k.iter().all(|kk| {
                    let r = self.op(kk, x);
                    !ambient.contains(&r) || t.contains(&r)
                })
            })
            .copied()
            .collect()
    }

    pub fn boundary(&self, t: &ElementSet, ambient: &ElementSet, k: &ElementSet) -> ElementSet {
        t.difference(&self.interior(t, ambient, k))
    }
}

pub(crate) fn box_elements(rank: usize, lo: &[i64; MAX_RANK], hi: &[i64; MAX_RANK]) -> ElementSet {
    let mut out = Vec::new();
    let mut cur = *lo;
    if (0..rank).any(|d| lo[d] > hi[d]) {
        return ElementSet::new();
    }
    loop {
        out.push(Element::from_raw(cur, rank as u8));
        // odometer increment, last coordinate fastest -> lexicographic order
        let mut d = rank;
        loop {
            if d == 0 {
                return ElementSet { elems: out };
            }
            d -= 1;
            if cur[d] < hi[d] {
                cur[d] += 1;
                break;
            }
            cur[d] = lo[d];
        }
    }
}

/// Column prefix: all coordinates except the last.
type Prefix = [i64; MAX_RANK - 1];

/// A subset of the group stored as unions of intervals in the last coordinate,
/// one list per prefix column.
///
/// Left and right multiplication by a single element maps columns to columns
/// (the Heisenberg shear only shifts the last coordinate), so products with small
/// sets stay cheap even when the region has billions of elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnSet {
    rank: u8,
    columns: BTreeMap<Prefix, Vec<(i64, i64)>>,
}

impl ColumnSet {
    pub fn from_box(rank: usize, lo: &[i64; MAX_RANK], hi: &[i64; MAX_RANK]) -> Self {
        let mut columns = BTreeMap::new();
        let last = rank - 1;
        if (0..rank).all(|d| lo[d] <= hi[d]) {
            let mut cur = [0i64; MAX_RANK - 1];
            cur[..last].copy_from_slice(&lo[..last]);
            loop {
                columns.insert(cur, alloc::vec![(lo[last], hi[last])]);
                let mut d = last;
                loop {
                    if d == 0 {
                        return ColumnSet {
                            rank: rank as u8,
                            columns,
                        };
                    }
                    d -= 1;
                    if cur[d] < hi[d] {
                        cur[d] += 1;
                        break;
                    }
                    cur[d] = lo[d];
                }
            }
        }
        ColumnSet {
            rank: rank as u8,
            columns,
        }
    }

    pub fn from_set(s: &ElementSet) -> Self {
        let rank = s.first().map(|g| g.rank()).unwrap_or(1);
        let last = rank - 1;
        let mut columns: BTreeMap<Prefix, Vec<(i64, i64)>> = BTreeMap::new();
        for g in s {
            let mut p = [0i64; MAX_RANK - 1];
            p[..last].copy_from_slice(&g.raw()[..last]);
            let z = g.raw()[last];
            columns.entry(p).or_default().push((z, z));
        }
        for iv in columns.values_mut() {
            normalize(iv);
        }
        ColumnSet {
            rank: rank as u8,
            columns,
        }
    }

    pub fn len(&self) -> u64 {
        self.columns
            .values()
            .flat_map(|v| v.iter())
            .map(|(a, b)| (b - a + 1) as u64)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Enumerate (only sensible for small regions).
    pub fn to_set(&self) -> ElementSet {
        let last = self.rank as usize - 1;
        let mut out = Vec::new();
        for (p, ivs) in &self.columns {
            for &(a, b) in ivs {
                for z in a..=b {
                    let mut c = [0i64; MAX_RANK];
                    c[..last].copy_from_slice(&p[..last]);
                    c[last] = z;
                    out.push(Element::from_raw(c, self.rank));
                }
            }
        }
        ElementSet::from_vec(out)
    }

    /// `k · self · l`.
    fn translate(&self, group: &GroupModel, k: &Element, l: &Element) -> Vec<(Prefix, (i64, i64))> {
        let last = self.rank as usize - 1;
        let mut out = Vec::with_capacity(self.columns.len());
        for (p, ivs) in &self.columns {
            let mut probe = [0i64; MAX_RANK];
            probe[..last].copy_from_slice(&p[..last]);
            // the image of a column is a column; its shift depends only on the prefix
            let base = Element::from_raw(probe, self.rank);
            let img = group.op(&group.op(k, &base), l);
            let mut q = [0i64; MAX_RANK - 1];
            q[..last].copy_from_slice(&img.raw()[..last]);
            let shift = img.raw()[last];
            for &(a, b) in ivs {
                out.push((q, (a + shift, b + shift)));
            }
        }
        out
    }

    /// `∪_{k∈K, l∈L} k · self · l`.
    pub fn two_sided_product(&self, group: &GroupModel, k: &ElementSet, l: &ElementSet) -> ColumnSet {
        let mut columns: BTreeMap<Prefix, Vec<(i64, i64)>> = BTreeMap::new();
        for a in k {
            for b in l {
                for (q, iv) in self.translate(group, a, b) {
                    columns.entry(q).or_default().push(iv);
                }
            }
        }
        for iv in columns.values_mut() {
            normalize(iv);
        }
        ColumnSet {
            rank: self.rank,
            columns,
        }
    }
}

fn normalize(iv: &mut Vec<(i64, i64)>) {
    iv.sort_unstable();
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(iv.len());
    for &(a, b) in iv.iter() {
        match out.last_mut() {
            Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    *iv = out;
}
