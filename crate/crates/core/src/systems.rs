//! Symbolic systems with closed-form entropy.
//!
//! Every sampler draws from the stationary law. Towers start from the
//! size-biased base symbol at a uniform level; induced processes start at the
//! first visit of a stationary base path to the cylinder, which is exact when
//! the base regenerates there (i.i.d. bases, or Markov bases with a
//! single-state cylinder).

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::SystemError;
use crate::group::{Element, ElementSet, GroupModel};
use crate::rng::{self, Stream};
use crate::stats;

const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum SymbolicSystem {
    /// i.i.d. field over any group.
    Bernoulli { probs: Vec<f64>, group: GroupModel },
    /// Stationary Markov chain over `Z`.
    Markov {
        matrix: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
    /// Discrete suspension: base symbol `y` is held for `roof[y]` steps; the
    /// emitted symbol is `y * radix + level`.
    Tower {
        base: Box<SymbolicSystem>,
        roof: Vec<u32>,
    },
    /// First-return process on the cylinder `{x_0 ∈ cylinder}`; symbols are
    /// excursion words.
    Induced {
        base: Box<SymbolicSystem>,
        cylinder: Vec<u32>,
    },
    /// Deterministic rotation through `word` with a uniform phase.
    Periodic { word: Vec<u32> },
}

fn check_probs(p: &[f64]) -> Result<(), SystemError> {
    if p.is_empty() {
        return Err(SystemError::EmptyAlphabet);
    }
    let s: f64 = p.iter().sum();
    if p.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || (s - 1.0).abs() > 1e-9 {
        return Err(SystemError::BadProbabilities);
    }
    Ok(())
}

/// Stationary vector by Gaussian elimination on `π(P - I) = 0`, `Σπ = 1`.
pub fn stationary_of(matrix: &[Vec<f64>]) -> Result<Vec<f64>, SystemError> {
    let n = matrix.len();
    // rows of the system: (P^T - I) with the last equation replaced by Σπ = 1
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| matrix[j][i]).collect();
            row[i] -= 1.0;
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = alloc::vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs() < 1e-14 {
            return Err(SystemError::Reducible);
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// `P^k` by repeated squaring.
pub fn mat_pow(p: &[Vec<f64>], mut k: u64) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut result: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut base: Vec<Vec<f64>> = p.to_vec();
    while k > 0 {
        if k & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        base = mat_mul(&base, &base);
        k >>= 1;
    }
    result
}

/// Irreducible and aperiodic: some power up to Wielandt's bound is strictly positive.
pub fn is_primitive(p: &[Vec<f64>]) -> bool {
    let n = p.len();
    let pattern: Vec<Vec<bool>> = p.iter().map(|r| r.iter().map(|x| *x > 0.0).collect()).collect();
    let mut cur = pattern.clone();
    let bound = (n - 1) * (n - 1) + 1;
    for _ in 0..bound {
        if cur.iter().all(|r| r.iter().all(|x| *x)) {
            return true;
        }
        cur = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| cur[i][k] && pattern[k][j])).collect())
            .collect();
    }
    cur.iter().all(|r| r.iter().all(|x| *x))
}

impl SymbolicSystem {
    pub fn bernoulli(probs: Vec<f64>, group: GroupModel) -> Result<Self, SystemError> {
        check_probs(&probs)?;
        Ok(SymbolicSystem::Bernoulli { probs, group })
    }

    /// Markov chain with its stationary vector computed.
    pub fn markov(matrix: Vec<Vec<f64>>) -> Result<Self, SystemError> {
        check_matrix(&matrix)?;
        let stationary = stationary_of(&matrix)?;
        Self::markov_with(matrix, stationary)
    }

    pub fn markov_with(matrix: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self, SystemError> {
        check_matrix(&matrix)?;
        if stationary.len() != matrix.len() {
            return Err(SystemError::BadStationary);
        }
        check_probs(&stationary).map_err(|_| SystemError::BadStationary)?;
        for j in 0..matrix.len() {
            let v: f64 = (0..matrix.len()).map(|i| stationary[i] * matrix[i][j]).sum();
            if (v - stationary[j]).abs() > TOL {
                return Err(SystemError::BadStationary);
            }
        }
        Ok(SymbolicSystem::Markov { matrix, stationary })
    }

    /// Symmetric two-state chain staying put with probability `stay`.
    pub fn two_state(stay: f64) -> Result<Self, SystemError> {
        Self::markov_with(
            alloc::vec![alloc::vec![stay, 1.0 - stay], alloc::vec![1.0 - stay, stay]],
            alloc::vec![0.5, 0.5],
        )
    }

    pub fn periodic(word: Vec<u32>) -> Result<Self, SystemError> {
        if word.is_empty() {
            return Err(SystemError::EmptyAlphabet);
        }
        Ok(SymbolicSystem::Periodic { word })
    }

    /// Suspension with roof given per base symbol.
    pub fn suspend(base: SymbolicSystem, roof: Vec<u32>) -> Result<Self, SystemError> {
        if !matches!(base, SymbolicSystem::Bernoulli { group: GroupModel::Lattice { rank: 1 }, .. } | SymbolicSystem::Markov { .. }) {
            return Err(SystemError::IncompatibleGroup("tower bases other than Bernoulli or Markov over Z"));
        }
        if roof.len() != base.alphabet() {
            return Err(SystemError::BadRoof);
        }
        if roof.iter().any(|r| *r < 1) {
            return Err(SystemError::BadRoof);
        }
        Ok(SymbolicSystem::Tower {
            base: Box::new(base),
            roof,
        })
    }

    /// First-return process on the cylinder of position-0 symbols in `cylinder`.
    pub fn induce(base: SymbolicSystem, cylinder: Vec<u32>) -> Result<Self, SystemError> {
        if base.group() != GroupModel::integers() {
            return Err(SystemError::IncompatibleGroup("induced maps over groups other than Z"));
        }
        let mut cylinder = cylinder;
        cylinder.sort_unstable();
        cylinder.dedup();
        if let Ok(p) = base.cylinder_probability(&cylinder) {
            if !(p > 0.0) {
                return Err(SystemError::NullCylinder);
            }
        }
        if cylinder.is_empty() || cylinder.iter().any(|s| *s as usize >= base.alphabet()) {
            return Err(SystemError::NullCylinder);
        }
        Ok(SymbolicSystem::Induced {
            base: Box::new(base),
            cylinder,
        })
    }

    pub fn group(&self) -> GroupModel {
        match self {
            SymbolicSystem::Bernoulli { group, .. } => *group,
            _ => GroupModel::integers(),
        }
    }

    /// Number of symbols (an upper bound on emitted symbols; induced processes report 0: unbounded).
    pub fn alphabet(&self) -> usize {
        match self {
            SymbolicSystem::Bernoulli { probs, .. } => probs.len(),
            SymbolicSystem::Markov { matrix, .. } => matrix.len(),
            SymbolicSystem::Tower { base, roof } => base.alphabet() * radix(roof) as usize,
            SymbolicSystem::Induced { .. } => 0,
            SymbolicSystem::Periodic { word } => *word.iter().max().unwrap() as usize + 1,
        }
    }

    /// One-point marginal, when it has a closed form.
    pub fn marginal(&self) -> Result<Vec<f64>, SystemError> {
        match self {
            SymbolicSystem::Bernoulli { probs, .. } => Ok(probs.clone()),
            SymbolicSystem::Markov { stationary, .. } => Ok(stationary.clone()),
            SymbolicSystem::Periodic { word } => {
                let mut m = alloc::vec![0.0; self.alphabet()];
                for s in word {
                    m[*s as usize] += 1.0 / word.len() as f64;
                }
                Ok(m)
            }
            SymbolicSystem::Tower { base, roof } => {
                let nu = base.marginal()?;
                let mean = mean_roof(&nu, roof);
                let r = radix(roof) as usize;
                let mut m = alloc::vec![0.0; nu.len() * r];
                for (y, p) in nu.iter().enumerate() {
                    for level in 0..roof[y] as usize {
                        m[y * r + level] = p / mean;
                    }
                }
                Ok(m)
            }
            SymbolicSystem::Induced { .. } => Err(SystemError::NoClosedForm),
        }
    }

    pub fn cylinder_probability(&self, cylinder: &[u32]) -> Result<f64, SystemError> {
        let m = self.marginal()?;
        Ok(cylinder.iter().filter_map(|s| m.get(*s as usize)).sum())
    }

    /// Closed-form entropy in bits per step.
    pub fn analytic_entropy(&self) -> Result<f64, SystemError> {
        match self {
            SymbolicSystem::Bernoulli { probs, .. } => Ok(stats::shannon(probs)),
            SymbolicSystem::Markov { matrix, stationary } => Ok(stationary
                .iter()
                .zip(matrix)
                .map(|(p, row)| p * stats::shannon(row))
                .sum()),
            SymbolicSystem::Periodic { .. } => Ok(0.0),
            SymbolicSystem::Tower { base, roof } => {
                let nu = base.marginal()?;
                Ok(base.analytic_entropy()? / mean_roof(&nu, roof))
            }
            SymbolicSystem::Induced { base, cylinder } => {
                if matches!(**base, SymbolicSystem::Induced { .. } | SymbolicSystem::Tower { .. }) {
                    return Err(SystemError::NoClosedForm);
                }
                let p = base.cylinder_probability(cylinder)?;
                if !(p > 0.0) {
                    return Err(SystemError::NullCylinder);
                }
                Ok(base.analytic_entropy()? / p)
            }
        }
    }

    /// `1 / ν(A)` for induced systems, 1 otherwise.
    pub fn mean_return_time(&self) -> Result<f64, SystemError> {
        match self {
            SymbolicSystem::Induced { base, cylinder } => Ok(1.0 / base.cylinder_probability(cylinder)?),
            _ => Ok(1.0),
        }
    }

    pub fn sampler(&self) -> Sampler {
        Sampler {
            group: self.group(),
            source: Source::new(self),
        }
    }
}

fn check_matrix(m: &[Vec<f64>]) -> Result<(), SystemError> {
    if m.is_empty() || m.iter().any(|r| r.len() != m.len()) {
        return Err(SystemError::BadMatrix);
    }
    for r in m {
        check_probs(r).map_err(|_| SystemError::BadMatrix)?;
    }
    Ok(())
}

pub fn radix(roof: &[u32]) -> u32 {
    roof.iter().copied().max().unwrap_or(1)
}

fn mean_roof(nu: &[f64], roof: &[u32]) -> f64 {
    nu.iter().zip(roof).map(|(p, r)| p * *r as f64).sum()
}

/// Expand a base path into tower symbols, starting at level `start_level` of the first symbol.
pub fn tower_path(base: &[u32], roof: &[u32], start_level: u32, len: usize) -> Vec<u32> {
    let r = radix(roof);
    let mut out = Vec::with_capacity(len);
    let mut level = start_level;
    for &y in base {
        while level < roof[y as usize] {
            if out.len() == len {
                return out;
            }
            out.push(y * r + level);
            level += 1;
        }
        level = 0;
    }
    out
}

/// Base symbols read off at level 0 of a tower path.
pub fn base_section(tower: &[u32], roof: &[u32]) -> Vec<u32> {
    let r = radix(roof);
    tower.iter().filter(|s| *s % r == 0).map(|s| s / r).collect()
}

/// A sequential stationary source over `Z`.
enum Source {
    Iid {
        cdf: Vec<f64>,
    },
    Markov {
        start: Vec<f64>,
        rows: Vec<Vec<f64>>,
        state: Option<u32>,
        matrix: Vec<Vec<f64>>,
        /// Row distributions of `P^d`, by gap `d`.
        jumps: BTreeMap<i64, Vec<Vec<f64>>>,
    },
    Periodic {
        word: Vec<u32>,
        phase: Option<usize>,
    },
    Tower {
        base: Box<Source>,
        roof: Vec<u32>,
        radix: u32,
        biased: Vec<f64>,
        current: Option<(u32, u32)>,
    },
    Induced {
        base: Box<Source>,
        cylinder: Vec<bool>,
        interner: HashMap<Vec<u32>, u32>,
        pending: Option<u32>,
        last_len: u64,
    },
}

impl Source {
    fn new(system: &SymbolicSystem) -> Self {
        match system {
            SymbolicSystem::Bernoulli { probs, .. } => Source::Iid {
                cdf: rng::cumulative(probs),
            },
            SymbolicSystem::Markov { matrix, stationary } => Source::Markov {
                start: rng::cumulative(stationary),
                rows: matrix.iter().map(|r| rng::cumulative(r)).collect(),
                state: None,
                matrix: matrix.clone(),
                jumps: BTreeMap::new(),
            },
            SymbolicSystem::Periodic { word } => Source::Periodic {
                word: word.clone(),
                phase: None,
            },
            SymbolicSystem::Tower { base, roof } => {
                let nu = base.marginal().unwrap_or_default();
                let mean = mean_roof(&nu, roof);
                let weights: Vec<f64> = nu
                    .iter()
                    .zip(roof)
                    .map(|(p, r)| p * *r as f64 / mean)
                    .collect();
                Source::Tower {
                    base: Box::new(Source::new(base)),
                    roof: roof.clone(),
                    radix: radix(roof),
                    biased: rng::cumulative(&weights),
                    current: None,
                }
            }
            SymbolicSystem::Induced { base, cylinder } => {
                let mut mask = alloc::vec![false; base.alphabet().max(1)];
                for s in cylinder {
                    if (*s as usize) < mask.len() {
                        mask[*s as usize] = true;
                    }
                }
                Source::Induced {
                    base: Box::new(Source::new(base)),
                    cylinder: mask,
                    interner: HashMap::new(),
                    pending: None,
                    last_len: 0,
                }
            }
        }
    }

    /// Forget the path so the next draw starts afresh from the stationary law.
    fn restart(&mut self) {
        match self {
            Source::Iid { .. } => {}
            Source::Markov { state, .. } => *state = None,
            Source::Periodic { phase, .. } => *phase = None,
            Source::Tower { base, current, .. } => {
                base.restart();
                *current = None;
            }
            Source::Induced { base, pending, .. } => {
                base.restart();
                *pending = None;
            }
        }
    }

    /// Set a Markov or i.i.d. source to continue from state `s`.
    fn condition_on(&mut self, s: u32) {
        if let Source::Markov { state, .. } = self {
            *state = Some(s);
        }
    }

    fn next(&mut self, r: &mut Stream) -> u32 {
        match self {
            Source::Iid { cdf } => rng::categorical(r, cdf) as u32,
            Source::Markov { start, rows, state, .. } => {
                let s = match *state {
                    None => rng::categorical(r, start) as u32,
                    Some(prev) => rng::categorical(r, &rows[prev as usize]) as u32,
                };
                *state = Some(s);
                s
            }
            Source::Periodic { word, phase } => {
                let p = match *phase {
                    None => (rng::uniform(r) * word.len() as f64) as usize % word.len(),
                    Some(p) => (p + 1) % word.len(),
                };
                *phase = Some(p);
                word[p]
            }
            Source::Tower {
                base,
                roof,
                radix,
                biased,
                current,
            } => {
                let (y, level) = match *current {
                    None => {
                        let y = rng::categorical(r, biased) as u32;
                        base.condition_on(y);
                        let h = roof[y as usize];
                        let level = ((rng::uniform(r) * h as f64) as u32).min(h - 1);
                        (y, level)
                    }
                    Some((y, level)) if level + 1 < roof[y as usize] => (y, level + 1),
                    Some(_) => (base.next(r), 0),
                };
                *current = Some((y, level));
                y * *radix + level
            }
            Source::Induced {
                base,
                cylinder,
                interner,
                pending,
                last_len,
            } => {
                let first = match pending.take() {
                    Some(s) => s,
                    None => loop {
                        let s = base.next(r);
                        if cylinder.get(s as usize).copied().unwrap_or(false) {
                            break s;
                        }
                    },
                };
                let mut word = alloc::vec![first];
                loop {
                    let s = base.next(r);
                    if cylinder.get(s as usize).copied().unwrap_or(false) {
                        *pending = Some(s);
                        break;
                    }
                    word.push(s);
                }
                *last_len = word.len() as u64;
                let id = interner.len() as u32;
                *interner.entry(word).or_insert(id)
            }
        }
    }
}

/// Draws stationary configurations on finite sets of positions.
pub struct Sampler {
    group: GroupModel,
    source: Source,
}

impl Sampler {
    /// A fresh stationary draw on `positions` (ascending for `Z` systems).
    pub fn sample_at(&mut self, r: &mut Stream, positions: &[Element]) -> Vec<u32> {
        match &mut self.source {
            Source::Iid { cdf } => positions.iter().map(|_| rng::categorical(r, cdf) as u32).collect(),
            Source::Markov {
                start,
                rows,
                matrix,
                jumps,
                ..
            } => {
                // exact joint law through powers of the transition matrix
                let mut out = Vec::with_capacity(positions.len());
                let mut prev: Option<(i64, u32)> = None;
                for p in positions {
                    let t = p.coords()[0];
                    let s = match prev {
                        None => rng::categorical(r, start) as u32,
                        Some((t0, s0)) if t == t0 => s0,
                        Some((t0, s0)) if t - t0 == 1 => rng::categorical(r, &rows[s0 as usize]) as u32,
                        Some((t0, s0)) => {
                            let d = t - t0;
                            let table = jumps.entry(d).or_insert_with(|| {
                                mat_pow(matrix, d as u64).iter().map(|row| rng::cumulative(row)).collect()
                            });
                            rng::categorical(r, &table[s0 as usize]) as u32
                        }
                    };
                    out.push(s);
                    prev = Some((t, s));
                }
                out
            }
            source => {
                source.restart();
                let mut out = Vec::with_capacity(positions.len());
                let Some(first) = positions.first() else {
                    return out;
                };
                let mut t = first.coords()[0];
                let mut s = source.next(r);
                for p in positions {
                    let target = p.coords()[0];
                    while t < target {
                        s = source.next(r);
                        t += 1;
                    }
                    out.push(s);
                }
                out
            }
        }
    }

    /// A fresh draw of `len` consecutive symbols.
    pub fn path(&mut self, r: &mut Stream, len: usize) -> Vec<u32> {
        self.source.restart();
        (0..len).map(|_| self.source.next(r)).collect()
    }

    /// Continue the current path (no restart).
    pub fn next_symbol(&mut self, r: &mut Stream) -> u32 {
        self.source.next(r)
    }

    /// Length of the most recent excursion word of an induced source.
    pub fn last_return_time(&self) -> Option<u64> {
        match &self.source {
            Source::Induced { last_len, .. } => Some(*last_len),
            _ => None,
        }
    }

    /// Excursion word for an interned symbol of an induced source.
    pub fn word(&self, id: u32) -> Option<Vec<u32>> {
        match &self.source {
            Source::Induced { interner, .. } => interner
                .iter()
                .find(|(_, v)| **v == id)
                .map(|(k, _)| k.clone()),
            _ => None,
        }
    }

    pub fn group(&self) -> GroupModel {
        self.group
    }
}

/// Labels over a finite window, in the window's canonical order.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledWindow {
    pub window: ElementSet,
    pub labels: Vec<u32>,
}

impl LabeledWindow {
    pub fn label_at(&self, g: &Element) -> Option<u32> {
        self.window.position(g).map(|i| self.labels[i])
    }
}

/// Exact stationary sample of `system` on `window`.
pub fn sample_window(system: &SymbolicSystem, window: &ElementSet, seed: u64) -> Result<LabeledWindow, SystemError> {
    let sg = system.group();
    if let Some(g) = window.first() {
        if g.rank() != sg.rank() {
            return Err(SystemError::IncompatibleGroup("a window of a different group"));
        }
    }
    let mut r = rng::stream(seed, 0);
    let labels = system.sampler().sample_at(&mut r, window.as_slice());
    Ok(LabeledWindow {
        window: window.clone(),
        labels,
    })
}

/// Return times of `n` consecutive visits of an induced system.
pub fn return_times(system: &SymbolicSystem, n: usize, seed: u64) -> Result<Vec<u64>, SystemError> {
    if !matches!(system, SymbolicSystem::Induced { .. }) {
        return Ok(alloc::vec![1; n]);
    }
    let mut sampler = system.sampler();
    let mut r = rng::stream(seed, 0);
    sampler.source.restart();
    Ok((0..n)
        .map(|_| {
            sampler.next_symbol(&mut r);
            sampler.last_return_time().unwrap_or(1)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> SymbolicSystem {
        SymbolicSystem::bernoulli(alloc::vec![0.5, 0.5], GroupModel::integers()).unwrap()
    }

    #[test]
    fn oracles() {
        assert_eq!(coin().analytic_entropy().unwrap(), 1.0);
        let m = SymbolicSystem::two_state(0.9).unwrap();
        assert!((m.analytic_entropy().unwrap() - 0.4689955935892812).abs() < 1e-12);
        let t = SymbolicSystem::suspend(coin(), alloc::vec![2, 2]).unwrap();
        assert_eq!(t.analytic_entropy().unwrap(), 0.5);
        let t1 = SymbolicSystem::suspend(m.clone(), alloc::vec![1, 1]).unwrap();
        assert_eq!(t1.analytic_entropy().unwrap(), m.analytic_entropy().unwrap());
        let whole = SymbolicSystem::induce(m.clone(), alloc::vec![0, 1]).unwrap();
        assert_eq!(whole.analytic_entropy().unwrap(), m.analytic_entropy().unwrap());
        let half = SymbolicSystem::induce(coin(), alloc::vec![0]).unwrap();
        assert_eq!(half.analytic_entropy().unwrap(), 2.0);
        assert_eq!(half.mean_return_time().unwrap(), 2.0);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            SymbolicSystem::bernoulli(alloc::vec![0.5, 0.6], GroupModel::integers()),
            Err(SystemError::BadProbabilities)
        );
        assert_eq!(
            SymbolicSystem::markov_with(
                alloc::vec![alloc::vec![0.9, 0.1], alloc::vec![0.2, 0.8]],
                alloc::vec![0.5, 0.5]
            ),
            Err(SystemError::BadStationary)
        );
        assert_eq!(SymbolicSystem::suspend(coin(), alloc::vec![0, 1]), Err(SystemError::BadRoof));
        let lopsided = SymbolicSystem::bernoulli(alloc::vec![1.0, 0.0], GroupModel::integers()).unwrap();
        assert_eq!(SymbolicSystem::induce(lopsided, alloc::vec![1]), Err(SystemError::NullCylinder));
    }

    #[test]
    fn stationary_vector_solves_balance() {
        let p = alloc::vec![alloc::vec![0.5, 0.5, 0.0], alloc::vec![0.2, 0.3, 0.5], alloc::vec![0.1, 0.1, 0.8]];
        let pi = stationary_of(&p).unwrap();
        for j in 0..3 {
            let v: f64 = (0..3).map(|i| pi[i] * p[i][j]).sum();
            assert!((v - pi[j]).abs() < 1e-14);
        }
        assert!(SymbolicSystem::markov(p).is_ok());
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive(&[alloc::vec![0.9, 0.1], alloc::vec![0.1, 0.9]]));
        assert!(!is_primitive(&[alloc::vec![0.0, 1.0], alloc::vec![1.0, 0.0]]));
        assert!(!is_primitive(&[alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]]));
    }

    #[test]
    fn tower_round_trip() {
        let base = [0u32, 1, 1, 0, 1];
        let roof = [1u32, 3];
        let path = tower_path(&base, &roof, 0, 100);
        assert_eq!(path.len(), 1 + 3 + 3 + 1 + 3);
        assert_eq!(base_section(&path, &roof), base.to_vec());
        let unit = tower_path(&base, &[1, 1], 0, 100);
        assert_eq!(unit, base.to_vec());
    }

    #[test]
    fn constant_alphabet_gives_constant_window() {
        let one = SymbolicSystem::bernoulli(alloc::vec![1.0], GroupModel::lattice(2).unwrap()).unwrap();
        let w = sample_window(&one, &GroupModel::lattice(2).unwrap().folner(3), 5).unwrap();
        assert!(w.labels.iter().all(|s| *s == 0));
    }

    #[test]
    fn whole_space_return_time_is_one() {
        let sys = SymbolicSystem::induce(coin(), alloc::vec![0, 1]).unwrap();
        assert!(return_times(&sys, 1000, 3).unwrap().iter().all(|t| *t == 1));
    }
}
