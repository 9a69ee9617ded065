//! Slot index over a finite point set: a dense grid when the bounding box is
//! compact, a hash map otherwise. Flag arrays are indexed by slot.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::group::{Element, ElementSet, GroupModel, MAX_RANK};

pub(crate) struct PointIndex {
    rank: usize,
    lo: [i64; MAX_RANK],
    hi: [i64; MAX_RANK],
    strides: [usize; MAX_RANK],
    dims: [usize; MAX_RANK],
    sparse: Option<HashMap<Element, usize>>,
    slots: usize,
}

impl PointIndex {
    pub fn new(points: &ElementSet) -> Self {
        let rank = points.first().map(|g| g.rank()).unwrap_or(1);
        let (lo, hi) = points
            .bounding_box()
            .unwrap_or(([0; MAX_RANK], [-1; MAX_RANK]));
        let mut dims = [1usize; MAX_RANK];
        let mut vol: u128 = if points.is_empty() { 0 } else { 1 };
        for d in 0..rank {
            dims[d] = (hi[d] - lo[d] + 1).max(0) as usize;
            vol *= dims[d] as u128;
        }
        let dense_cap = (8 * points.len() as u128).max(1 << 16);
        if vol <= dense_cap && vol < (1u128 << 30) {
            let mut strides = [0usize; MAX_RANK];
            let mut s = 1usize;
            for d in (0..rank).rev() {
                strides[d] = s;
                s *= dims[d];
            }
            PointIndex {
                rank,
                lo,
                hi,
                strides,
                dims,
                sparse: None,
                slots: vol as usize,
            }
        } else {
            let map = points.iter().enumerate().map(|(i, g)| (*g, i)).collect();
            PointIndex {
                rank,
                lo,
                hi,
                strides: [0; MAX_RANK],
                dims,
                sparse: Some(map),
                slots: points.len(),
            }
        }
    }

    #[inline]
    pub fn slot(&self, g: &Element) -> Option<usize> {
        match &self.sparse {
            Some(m) => m.get(g).copied(),
            None => {
                let c = g.raw();
                let mut s = 0usize;
                for d in 0..self.rank {
                    if c[d] < self.lo[d] || c[d] > self.hi[d] {
                        return None;
                    }
                    s += (c[d] - self.lo[d]) as usize * self.strides[d];
                }
                Some(s)
            }
        }
    }

    #[inline]
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Flags marking the slots of `points`.
    pub fn flags(&self, points: &ElementSet) -> Vec<bool> {
        let mut f = alloc::vec![false; self.slots];
        for g in points {
            if let Some(s) = self.slot(g) {
                f[s] = true;
            }
        }
        f
    }
}

/// Prefix-sum table over a dense lattice index for O(2^d) box counts.
pub(crate) struct BoxCounter {
    rank: usize,
    lo: [i64; MAX_RANK],
    hi: [i64; MAX_RANK],
    ext_strides: [usize; MAX_RANK],
    table: Vec<u32>,
}

impl BoxCounter {
    pub fn new(index: &PointIndex, flags: &[bool]) -> Option<Self> {
        if index.sparse.is_some() || index.slots == 0 {
            return None;
        }
        let rank = index.rank;
        let mut ext = [1usize; MAX_RANK];
        for d in 0..rank {
            ext[d] = index.dims[d] + 1;
        }
        let mut ext_strides = [0usize; MAX_RANK];
        let mut s = 1usize;
        for d in (0..rank).rev() {
            ext_strides[d] = s;
            s *= ext[d];
        }
        let mut table = alloc::vec![0u32; s];
        // scatter flags into the shifted table
        for (slot, &f) in flags.iter().enumerate() {
            if !f {
                continue;
            }
            let mut rem = slot;
            let mut t = 0;
            for d in 0..rank {
                let i = rem / index.strides[d];
                rem %= index.strides[d];
                t += (i + 1) * ext_strides[d];
            }
            table[t] = 1;
        }
        for d in 0..rank {
            let st = ext_strides[d];
            for t in 0..table.len() {
                let i = (t / st) % ext[d];
                if i > 0 {
                    table[t] += table[t - st];
                }
            }
        }
        Some(BoxCounter {
            rank,
            lo: index.lo,
            hi: index.hi,
            ext_strides,
            table,
        })
    }

    /// Number of flagged slots in the inclusive box `[lo, hi]`.
    pub fn count(&self, lo: &[i64; MAX_RANK], hi: &[i64; MAX_RANK]) -> usize {
        let mut a = [0usize; MAX_RANK];
        let mut b = [0usize; MAX_RANK];
        for d in 0..self.rank {
            let l = lo[d].max(self.lo[d]);
            let h = hi[d].min(self.hi[d]);
            if l > h {
                return 0;
            }
            a[d] = (l - self.lo[d]) as usize;
            b[d] = (h - self.lo[d]) as usize + 1;
        }
        let mut total: i64 = 0;
        for mask in 0..(1usize << self.rank) {
            let mut t = 0;
            let mut neg = false;
            for d in 0..self.rank {
                if mask & (1 << d) != 0 {
                    t += a[d] * self.ext_strides[d];
                    neg = !neg;
                } else {
                    t += b[d] * self.ext_strides[d];
                }
            }
            let v = self.table[t] as i64;
            total += if neg { -v } else { v };
        }
        total as usize
    }
}

/// Dynamic box counts over a dense lattice index (d-dimensional Fenwick tree).
pub(crate) struct Fenwick {
    rank: usize,
    lo: [i64; MAX_RANK],
    hi: [i64; MAX_RANK],
    dims: [usize; MAX_RANK],
    strides: [usize; MAX_RANK],
    tree: Vec<u32>,
}

impl Fenwick {
    pub fn new(index: &PointIndex) -> Option<Self> {
        if index.sparse.is_some() {
            return None;
        }
        Some(Fenwick {
            rank: index.rank,
            lo: index.lo,
            hi: index.hi,
            dims: index.dims,
            strides: index.strides,
            tree: alloc::vec![0; index.slots],
        })
    }

    /// Mark the point at `slot` (must not already be marked).
    pub fn insert(&mut self, slot: usize) {
        let mut pos = [0usize; MAX_RANK];
        let mut rem = slot;
        for d in 0..self.rank {
            pos[d] = rem / self.strides[d] + 1;
            rem %= self.strides[d];
        }
        self.bump(0, &pos, 0);
    }

    fn bump(&mut self, d: usize, pos: &[usize; MAX_RANK], base: usize) {
        let mut i = pos[d];
        while i <= self.dims[d] {
            let off = base + (i - 1) * self.strides[d];
            if d + 1 == self.rank {
                self.tree[off] += 1;
            } else {
                self.bump(d + 1, pos, off);
            }
            i += i & i.wrapping_neg();
        }
    }

    /// Count of marked points with coordinates `< upto` (1-based exclusive prefix) in every axis.
    fn prefix(&self, d: usize, upto: &[usize; MAX_RANK], base: usize) -> u32 {
        let mut i = upto[d];
        let mut total = 0;
        while i > 0 {
            let off = base + (i - 1) * self.strides[d];
            total += if d + 1 == self.rank {
                self.tree[off]
            } else {
                self.prefix(d + 1, upto, off)
            };
            i -= i & i.wrapping_neg();
        }
        total
    }

    /// Marked points in the inclusive box `[lo, hi]`.
    pub fn count(&self, lo: &[i64; MAX_RANK], hi: &[i64; MAX_RANK]) -> usize {
        let mut a = [0usize; MAX_RANK];
        let mut b = [0usize; MAX_RANK];
        for d in 0..self.rank {
            let l = lo[d].max(self.lo[d]);
            let h = hi[d].min(self.hi[d]);
            if l > h {
                return 0;
            }
            a[d] = (l - self.lo[d]) as usize;
            b[d] = (h - self.lo[d]) as usize + 1;
        }
        let mut total: i64 = 0;
        let mut upto = [0usize; MAX_RANK];
        for mask in 0..(1usize << self.rank) {
            let mut neg = false;
            for d in 0..self.rank {
                if mask & (1 << d) != 0 {
                    upto[d] = a[d];
                    neg = !neg;
                } else {
                    upto[d] = b[d];
                }
            }
            if (0..self.rank).any(|d| upto[d] == 0) {
                continue;
            }
            let v = self.prefix(0, &upto, 0) as i64;
            total += if neg { -v } else { v };
        }
        total as usize
    }
}

/// A finite set prepared for repeated right-translate counting.
pub(crate) struct Probe {
    pub elems: Vec<Element>,
    pub lattice_box: Option<([i64; MAX_RANK], [i64; MAX_RANK])>,
}

impl Probe {
    pub fn new(group: &GroupModel, s: &ElementSet) -> Self {
        let lattice_box = if group.is_abelian() && s.is_box() {
            s.bounding_box()
        } else {
            None
        };
        Probe {
            elems: s.as_slice().to_vec(),
            lattice_box,
        }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    /// Bounds of the translate `S b` when `S` is a lattice box.
    pub fn shifted_box(&self, b: &Element) -> Option<([i64; MAX_RANK], [i64; MAX_RANK])> {
        let (lo, hi) = self.lattice_box?;
        let mut l = lo;
        let mut h = hi;
        for d in 0..MAX_RANK {
            l[d] += b.raw()[d];
            h[d] += b.raw()[d];
        }
        Some((l, h))
    }
}

/// `|S b ∩ A|` for a fixed `A`.
pub(crate) struct Counter<'a> {
    pub group: GroupModel,
    pub index: &'a PointIndex,
    pub in_a: &'a [bool],
    boxes: Option<BoxCounter>,
}

impl<'a> Counter<'a> {
    pub fn new(group: GroupModel, index: &'a PointIndex, in_a: &'a [bool]) -> Self {
        let boxes = if group.is_abelian() {
            BoxCounter::new(index, in_a)
        } else {
            None
        };
        Counter {
            group,
            index,
            in_a,
            boxes,
        }
    }

    pub fn count(&self, probe: &Probe, b: &Element) -> usize {
        if let (Some((l, h)), Some(bc)) = (probe.shifted_box(b), &self.boxes) {
            return bc.count(&l, &h);
        }
        probe
            .elems
            .iter()
            .filter(|s| {
                self.index
                    .slot(&self.group.op(s, b))
                    .is_some_and(|t| self.in_a[t])
            })
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenwick_tracks_insertions() {
        let g = GroupModel::lattice(3).unwrap();
        let window = g.folner(4);
        let idx = PointIndex::new(&window);
        let mut fw = Fenwick::new(&idx).unwrap();
        let mut marked = alloc::vec::Vec::new();
        for (i, x) in window.iter().enumerate() {
            if (i * 7919) % 5 == 1 {
                fw.insert(idx.slot(x).unwrap());
                marked.push(*x);
            }
        }
        let marked = ElementSet::from_vec(marked);
        let probe = Probe::new(&g, &g.folner(2));
        for b in window.iter().step_by(3) {
            let (l, h) = probe.shifted_box(b).unwrap();
            let expect = g.right_translate(&g.folner(2), b).intersection(&marked).len();
            assert_eq!(fw.count(&l, &h), expect);
        }
    }

    #[test]
    fn box_counts_match_enumeration() {
        let g = GroupModel::lattice(2).unwrap();
        let window = g.folner(6);
        let pts: ElementSet = window
            .iter()
            .filter(|e| (e.coords()[0] * 7 + e.coords()[1] * 3).rem_euclid(5) != 0)
            .copied()
            .collect();
        let idx = PointIndex::new(&pts);
        let flags = idx.flags(&pts);
        let fast = Counter::new(g, &idx, &flags);
        let probe = Probe::new(&g, &g.folner(2));
        let mut slow_probe = Probe::new(&g, &g.folner(2));
        slow_probe.lattice_box = None;
        for b in window.iter() {
            let expect = g.right_translate(&g.folner(2), b).intersection(&pts).len();
            assert_eq!(fast.count(&probe, b), expect);
            assert_eq!(fast.count(&slow_probe, b), expect);
        }
    }
}
