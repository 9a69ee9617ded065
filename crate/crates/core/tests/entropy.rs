use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use xsect_core::entropy::*;
use xsect_core::section::{Castle, SectionSample};
use xsect_core::systems::SymbolicSystem;
use xsect_core::GroupModel;

/// One class of consecutive integer towers with the given lengths, labels and fibers.
struct Fixture {
    sample: SectionSample,
    castle: Castle,
    p: Partition,
    fibers: FiberPartition,
}

fn fixture(towers: &[(Vec<u32>, u32)]) -> Fixture {
    let z = GroupModel::integers();
    let mut positions = Vec::new();
    let mut labels = Vec::new();
    let mut fiber = Vec::new();
    let mut base = Vec::new();
    let mut members = Vec::new();
    let mut at = 0i64;
    for (word, f) in towers {
        base.push(positions.len());
        let mut t = Vec::new();
        for l in word {
            t.push(positions.len());
            positions.push(z.element(&[at]).unwrap());
            labels.push(*l);
            fiber.push(*f);
            at += 1;
        }
        members.push(t);
        at += 1;
    }
    let n = positions.len();
    let window = positions.iter().copied().collect();
    let sample = SectionSample::new(z, window, positions, vec![0; n], labels.clone()).unwrap();
    let castle = Castle::new(&sample, base, members).unwrap();
    Fixture {
        sample,
        castle,
        p: Partition::new(labels),
        fibers: FiberPartition::new(fiber),
    }
}

fn towers(max_towers: usize, max_len: usize, fibers: u32) -> impl Strategy<Value = Vec<(Vec<u32>, u32)>> {
    prop::collection::vec((prop::collection::vec(0u32..2, 1..=max_len), 0..fibers), 1..=max_towers)
}

/// `Σ_x μ(x) log⁺ #{parts meeting the fiber of x}` written out directly.
fn rls_oracle(fx: &Fixture, cover: &[Vec<usize>]) -> f64 {
    fx.castle
        .base()
        .iter()
        .map(|x| {
            let f = fx.fibers.fiber(*x);
            let k = cover.iter().filter(|c| c.iter().any(|y| fx.fibers.fiber(*y) == f)).count();
            let lg = if k <= 1 { 0.0 } else { (k as f64).log2() };
            fx.sample.weight(*x) * lg
        })
        .sum()
}

fn exact(fx: &Fixture, eps: f64) -> f64 {
    castle_entropy_exact(&fx.sample, &fx.castle, &fx.p, eps, &fx.fibers, EXACT_CAP)
        .unwrap()
        .value
}

fn upper(fx: &Fixture, eps: f64) -> CastleEntropy {
    castle_entropy_upper(&fx.sample, &fx.castle, &fx.p, eps, &fx.fibers).unwrap()
}

fn check_cover_is_valid(fx: &Fixture, cover: &[Vec<usize>], eps: f64) {
    let mut seen = BTreeSet::new();
    for part in cover {
        let idx: Vec<usize> = part.iter().map(|x| fx.castle.tower_index(*x).unwrap()).collect();
        let ball = largest_ball(&fx.sample, &fx.castle, &fx.p, &fx.fibers, &idx, eps).expect("part is a ball");
        assert_eq!(validate_ball(&fx.sample, &fx.castle, &fx.p, &fx.fibers, &ball, eps), Ok(()));
        for x in part {
            assert!(seen.insert(*x));
        }
    }
    assert_eq!(seen.len(), fx.castle.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn rls_matches_direct_formula(t in towers(7, 4, 3), split in prop::collection::vec(0usize..3, 7)) {
        let fx = fixture(&t);
        let mut parts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, x) in fx.castle.base().iter().enumerate() {
            parts.entry(split[i]).or_default().push(*x);
        }
        let cover: Vec<Vec<usize>> = parts.into_values().collect();
        let got = rls(&fx.sample, &cover, &fx.fibers, fx.castle.base()).unwrap();
        prop_assert!((got - rls_oracle(&fx, &cover)).abs() < 1e-12);
    }

    #[test]
    fn exact_never_exceeds_greedy(t in towers(6, 5, 2), eps in prop::sample::select(vec![0.0, 0.1, 0.25, 0.5])) {
        let fx = fixture(&t);
        let g = upper(&fx, eps);
        let e = castle_entropy_exact(&fx.sample, &fx.castle, &fx.p, eps, &fx.fibers, EXACT_CAP).unwrap();
        prop_assert!(e.value <= g.value + 1e-12, "exact {} greedy {}", e.value, g.value);
        prop_assert!((e.value - rls_oracle(&fx, &e.cover)).abs() < 1e-12);
        prop_assert!((g.value - rls_oracle(&fx, &g.cover)).abs() < 1e-12);
        check_cover_is_valid(&fx, &e.cover, eps);
        check_cover_is_valid(&fx, &g.cover, eps);
    }

    #[test]
    fn exact_equals_greedy_on_equal_shapes(len in 1usize..5, words in prop::collection::vec(prop::collection::vec(0u32..2, 4), 1..7)) {
        // one fiber, common addresses, no trimming: balls are exactly the groups of equal names
        let t: Vec<(Vec<u32>, u32)> = words.iter().map(|w| (w[..len].to_vec(), 0)).collect();
        let fx = fixture(&t);
        let distinct: BTreeSet<&[u32]> = words.iter().map(|w| &w[..len]).collect();
        let k = distinct.len();
        let expect = if k <= 1 { 0.0 } else { (k as f64).log2() * fx.castle.len() as f64 / fx.sample.len() as f64 };
        prop_assert!((exact(&fx, 0.0) - expect).abs() < 1e-12);
        prop_assert!((upper(&fx, 0.0).value - expect).abs() < 1e-12);
    }

    #[test]
    fn exact_is_monotone_in_eps(t in towers(6, 5, 2)) {
        let fx = fixture(&t);
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.1, 0.2, 0.3, 0.5, 0.8] {
            let v = exact(&fx, eps);
            prop_assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn relabeling_parts_changes_nothing(t in towers(6, 4, 2), eps in prop::sample::select(vec![0.0, 0.3])) {
        let fx = fixture(&t);
        let swapped: Vec<(Vec<u32>, u32)> = t.iter().map(|(w, f)| (w.iter().map(|l| 1 - l).collect(), *f)).collect();
        let fy = fixture(&swapped);
        prop_assert!((exact(&fx, eps) - exact(&fy, eps)).abs() < 1e-12);
        prop_assert!((upper(&fx, eps).value - upper(&fy, eps).value).abs() < 1e-12);
    }

    #[test]
    fn fibers_are_subadditive(t in towers(6, 4, 2), eps in prop::sample::select(vec![0.0, 0.3])) {
        let fx = fixture(&t);
        let whole = exact(&fx, eps);
        let mut parts = 0.0;
        for f in 0..2u32 {
            let idx: Vec<usize> = (0..fx.castle.len()).filter(|i| t[*i].1 == f).collect();
            if idx.is_empty() {
                continue;
            }
            let sub = Castle::new(
                &fx.sample,
                idx.iter().map(|i| fx.castle.base()[*i]).collect(),
                idx.iter().map(|i| fx.castle.towers()[*i].clone()).collect(),
            ).unwrap();
            parts += castle_entropy_exact(&fx.sample, &sub, &fx.p, eps, &fx.fibers, EXACT_CAP).unwrap().value;
        }
        prop_assert!(whole <= parts + 1e-12);
    }
}

#[test]
fn trivial_partition_has_zero_entropy() {
    let t: Vec<(Vec<u32>, u32)> = (0..6).map(|_| (vec![0; 3], 0)).collect();
    let fx = fixture(&t);
    assert_eq!(exact(&fx, 0.0), 0.0);
    assert_eq!(upper(&fx, 0.0).value, 0.0);
}

#[test]
fn exact_refuses_large_castles() {
    let t: Vec<(Vec<u32>, u32)> = (0..9).map(|i| (vec![i % 2], 0)).collect();
    let fx = fixture(&t);
    assert!(matches!(
        castle_entropy_exact(&fx.sample, &fx.castle, &fx.p, 0.0, &fx.fibers, EXACT_CAP),
        Err(xsect_core::EntropyError::CapExceeded { size: 9, cap: 8 })
    ));
}

#[test]
fn block_entropy_tracks_closed_forms() {
    let z = GroupModel::integers();
    for (sys, n) in [
        (SymbolicSystem::bernoulli(vec![0.3, 0.7], z).unwrap(), 200_000),
        (SymbolicSystem::two_state(0.9).unwrap(), 200_000),
        (SymbolicSystem::bernoulli(vec![0.2, 0.3, 0.5], GroupModel::lattice(2).unwrap()).unwrap(), 200_000),
    ] {
        let h = sys.analytic_entropy().unwrap();
        let w = if sys.group() == z { interval(6) } else { sys.group().folner(1) };
        let est = block_entropy(&sys, &w, n, 3).unwrap();
        assert!((est.estimate - h).abs() < 5.0 * est.stderr + 0.01, "{est:?} vs {h}");
    }
}

#[test]
fn periodic_orbits_have_zero_entropy() {
    let sys = SymbolicSystem::periodic(vec![0, 1, 1, 0, 2]).unwrap();
    let est = block_entropy(&sys, &interval(8), 20_000, 1).unwrap();
    assert!(est.estimate.abs() < 1e-3, "{est:?}");
    assert_eq!(est.distinct_patterns, 5);
}

#[test]
fn abramov_ratio_and_kac_mean() {
    let base = SymbolicSystem::two_state(0.8).unwrap();
    let rep = abramov_check(&base, &[0], 2, 200_000, 5).unwrap();
    assert!(rep.relative_error < 0.03, "{rep:?}");
    assert!((rep.mean_return_time - rep.kac_target).abs() < 5.0 * rep.return_time_stderr);
}
