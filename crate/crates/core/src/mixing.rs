//! Joint entropy of separated translate families.

use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::seq::SliceRandom;

use crate::entropy::{MIN_SAMPLES, SHARDS};
use crate::error::{EntropyError, MixingError, SystemError};
use crate::group::{Element, ElementSet, GroupModel};
use crate::rng;
use crate::stats;
use crate::systems::{self, SymbolicSystem};

/// Greedy random `K`-separated subset of `window` with `size` points.
pub fn separated_family(
    group: &GroupModel,
    k: &ElementSet,
    size: usize,
    window: &ElementSet,
    seed: u64,
) -> Result<ElementSet, MixingError> {
    let mut order: Vec<Element> = window.iter().copied().collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let mut chosen: Vec<Element> = Vec::with_capacity(size);
    for g in order {
        if chosen.len() == size {
            break;
        }
        let ok = chosen.iter().all(|h| {
            !k.contains(&group.op(&g, &group.invert(h))) && !k.contains(&group.op(h, &group.invert(&g)))
        });
        if ok {
            chosen.push(g);
        }
    }
    if chosen.len() < size {
        return Err(MixingError::Infeasible { size });
    }
    Ok(chosen.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointEstimate {
    /// Miller–Madow corrected `H(P(g x) : g ∈ F)`.
    pub entropy: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Joint entropy of the coded symbols `coding[x_g]`, `g ∈ F`.
pub fn joint_entropy_empirical(
    system: &SymbolicSystem,
    coding: &[u32],
    f: &ElementSet,
    sample_size: usize,
    seed: u64,
) -> Result<JointEstimate, MixingError> {
    if sample_size < MIN_SAMPLES {
        return Err(EntropyError::SampleTooSmall(sample_size).into());
    }
    if f.is_empty() {
        return Err(EntropyError::EmptyWindow.into());
    }
    let parts = coding.iter().copied().max().map_or(1, |m| m as u64 + 1);
    let bits = f.len() as f64 * stats::log2(parts as f64);
    if bits > 40.0 {
        return Err(EntropyError::PatternGuard(bits).into());
    }
    let mut sampler = system.sampler();
    let mut total: HashMap<u64, u64> = HashMap::new();
    let mut shard_values = Vec::with_capacity(SHARDS);
    for s in 0..SHARDS {
        let n = sample_size / SHARDS + usize::from(s < sample_size % SHARDS);
        let mut r = rng::stream(seed, s as u64);
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..n {
            let mut key = 0u64;
            for sym in sampler.sample_at(&mut r, f.as_slice()) {
                let c = *coding.get(sym as usize).ok_or(SystemError::EmptyAlphabet)? as u64;
                key = key * parts + c;
            }
            *counts.entry(key).or_default() += 1;
        }
        shard_values.push(stats::miller_madow(&sorted_counts(&counts)));
        for (k, c) in counts {
            *total.entry(k).or_default() += c;
        }
    }
    Ok(JointEstimate {
        entropy: stats::miller_madow(&sorted_counts(&total)),
        stderr: stats::shard_stderr(&shard_values),
        samples: sample_size,
    })
}

fn sorted_counts(m: &HashMap<u64, u64>) -> Vec<u64> {
    let mut v: Vec<(u64, u64)> = m.iter().map(|(k, c)| (*k, *c)).collect();
    v.sort_unstable();
    v.into_iter().map(|(_, c)| c).collect()
}

/// `H(X_0, X_{n_1}, X_{n_1+n_2}, ...) = H(π) + Σ_k Σ_i π_i H(P^{n_k}_{i·})`.
pub fn markov_joint_entropy_exact(matrix: &[Vec<f64>], stationary: &[f64], gaps: &[u64]) -> Result<f64, MixingError> {
    if gaps.contains(&0) {
        return Err(MixingError::BadGap);
    }
    if !systems::is_primitive(matrix) {
        return Err(SystemError::Reducible.into());
    }
    let mut h = stats::shannon(stationary);
    for g in gaps {
        let pw = systems::mat_pow(matrix, *g);
        h += stationary
            .iter()
            .zip(&pw)
            .map(|(p, row)| p * stats::shannon(row))
            .sum::<f64>();
    }
    Ok(h)
}

/// Gaps between consecutive members of an integer family.
pub fn gaps_of(f: &ElementSet) -> Vec<u64> {
    let xs: Vec<i64> = f.iter().map(|g| g.coords()[0]).collect();
    xs.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
}

/// Distribution of the coded one-point marginal, when it has a closed form.
fn coded_marginal(system: &SymbolicSystem, coding: &[u32]) -> Option<Vec<f64>> {
    let m = system.marginal().ok()?;
    let parts = coding.iter().copied().max()? as usize + 1;
    let mut out = alloc::vec![0.0; parts];
    for (s, p) in m.iter().enumerate() {
        out[*coding.get(s)? as usize] += p;
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixingReport {
    /// Word-metric radius of `K`.
    pub radius: u32,
    pub family: ElementSet,
    /// `(1/|F|) H(∨_{g∈F} gP)`.
    pub per_element: f64,
    pub h_p: f64,
    /// `H(P) - per_element`.
    pub signed_defect: f64,
    pub defect: f64,
    pub stderr: f64,
    /// Exact defect for Markov chains coded by the identity.
    pub oracle_defect: Option<f64>,
}

/// Mixing defect of a `family_size` family separated by `K = ball(r)`, for each radius.
pub fn mixing_scan(
    system: &SymbolicSystem,
    coding: &[u32],
    radii: &[u32],
    family_size: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<MixingReport>, MixingError> {
    let group = system.group();
    let mut out = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let k = group.ball(r);
        let window = group.folner(r.max(1) * family_size as u32);
        let family = separated_family(&group, &k, family_size, &window, seed.wrapping_add(i as u64))?;
        out.push(mixing_report(system, coding, r, family, sample_size, seed.wrapping_add(i as u64))?);
    }
    Ok(out)
}

/// Defect of one given family.
pub fn mixing_report(
    system: &SymbolicSystem,
    coding: &[u32],
    radius: u32,
    family: ElementSet,
    sample_size: usize,
    seed: u64,
) -> Result<MixingReport, MixingError> {
    let joint = joint_entropy_empirical(system, coding, &family, sample_size, seed)?;
    let n = family.len() as f64;
    let h_p = match coded_marginal(system, coding) {
        Some(m) => stats::shannon(&m),
        None => {
            joint_entropy_empirical(system, coding, &ElementSet::singleton(*family.first().unwrap()), sample_size, seed)?
                .entropy
        }
    };
    let identity = coding.iter().enumerate().all(|(i, c)| *c as usize == i);
    let oracle_defect = match system {
        SymbolicSystem::Markov { matrix, stationary } if identity => {
            let exact = markov_joint_entropy_exact(matrix, stationary, &gaps_of(&family))?;
            Some(h_p - exact / n)
        }
        _ => None,
    };
    let per_element = joint.entropy / n;
    let signed = h_p - per_element;
    Ok(MixingReport {
        radius,
        family,
        per_element,
        h_p,
        signed_defect: signed,
        defect: signed.abs(),
        stderr: joint.stderr / n,
        oracle_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> (Vec<Vec<f64>>, Vec<f64>) {
        (alloc::vec![alloc::vec![0.9, 0.1], alloc::vec![0.1, 0.9]], alloc::vec![0.5, 0.5])
    }

    #[test]
    fn oracle_examples() {
        let (p, pi) = chain();
        assert_eq!(markov_joint_entropy_exact(&p, &pi, &[]).unwrap(), 1.0);
        let one = markov_joint_entropy_exact(&p, &pi, &[1]).unwrap();
        assert!((one / 2.0 - (1.0 + stats::binary_entropy(0.9)) / 2.0).abs() < 1e-12);
        let far = markov_joint_entropy_exact(&p, &pi, &[1_000_000]).unwrap();
        assert!((far / 2.0 - 1.0).abs() < 1e-9);
        assert_eq!(markov_joint_entropy_exact(&p, &pi, &[0]), Err(MixingError::BadGap));
        let flip = alloc::vec![alloc::vec![0.0, 1.0], alloc::vec![1.0, 0.0]];
        assert!(markov_joint_entropy_exact(&flip, &pi, &[1]).is_err());
    }

    #[test]
    fn oracle_defect_is_monotone() {
        let (p, pi) = chain();
        let mut last = f64::INFINITY;
        for n in 1..=50u64 {
            let d = 1.0 - markov_joint_entropy_exact(&p, &pi, &[n]).unwrap() / 2.0;
            assert!(d <= last + 1e-15);
            last = d;
        }
    }

    #[test]
    fn separated_families() {
        let z = GroupModel::integers();
        let w = z.folner(20);
        let e = ElementSet::singleton(z.identity());
        let f = separated_family(&z, &e, 41, &w, 3).unwrap();
        assert_eq!(f.len(), 41);
        let k = z.ball(4);
        let f = separated_family(&z, &k, 5, &w, 3).unwrap();
        assert!(z.is_separated(&f, &k));
        assert_eq!(separated_family(&z, &k, 40, &w, 3), Err(MixingError::Infeasible { size: 40 }));
        let ap: ElementSet = (0..5).map(|i| z.element(&[5 * i]).unwrap()).collect();
        assert!(z.is_separated(&ap, &k));
    }
}
