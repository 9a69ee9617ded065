use proptest::prelude::*;
use xsect_core::section::*;
use xsect_core::systems::SymbolicSystem;
use xsect_core::GroupModel;

fn bernoulli(p: f64, g: GroupModel) -> SymbolicSystem {
    SymbolicSystem::bernoulli(vec![p, 1.0 - p], g).unwrap()
}

fn sample_1d(len: u32, orbits: usize, seed: u64) -> SectionSample {
    let z = GroupModel::integers();
    from_orbit_window(&bernoulli(0.5, z), &z.folner(len), &SectionRule::Symbols(vec![0]), orbits, seed).unwrap()
}

#[test]
fn intensity_matches_cylinder_mass() {
    let z2 = GroupModel::lattice(2).unwrap();
    let w = z2.folner(40);
    let s = from_orbit_window(&bernoulli(0.5, z2), &w, &SectionRule::Symbols(vec![0]), 4, 7).unwrap();
    let n = (w.len() * 4) as f64;
    let sigma = (0.25 / n).sqrt();
    assert!((s.intensity() - 0.5).abs() < 5.0 * sigma, "{}", s.intensity());
    assert_eq!(s.dropped_orbits(), 0);
}

#[test]
fn generated_samples_validate() {
    let z = GroupModel::integers();
    let e = z.ball(0);
    let s = sample_1d(300, 3, 1);
    let rep = validate(&s, &e);
    assert!(rep.all_pass(), "{rep:?}");
    // the Always rule puts neighbours at distance one
    let full = from_orbit_window(&bernoulli(0.5, z), &z.folner(20), &SectionRule::Always, 2, 1).unwrap();
    let rep = validate(&full, &z.ball(1));
    assert!(!rep.u_discrete);
    assert!(rep.cocycle_identity && rep.free);
    let mut bad = s.clone();
    let (x, y) = (s.class_members(0)[0], s.class_members(0)[1]);
    bad.corrupt(x, y, z.element(&[12345]).unwrap());
    assert!(!validate(&bad, &e).cocycle_identity);
}

#[test]
fn origin_rule_keeps_one_point_per_orbit() {
    let h = GroupModel::heisenberg();
    let s = from_orbit_window(&bernoulli(0.3, h), &h.folner(2), &SectionRule::Origin, 5, 2).unwrap();
    assert_eq!(s.len(), 5);
    assert_eq!(s.class_count(), 5);
    assert!(validate(&s, &h.ball(2)).all_pass());
}

#[test]
fn recoding_keeps_classes_and_order() {
    let s = sample_1d(200, 2, 4);
    let r = s.lexicographic_recode();
    assert_eq!(r.class_ids(), s.class_ids());
    for c in 0..s.class_count() as u32 {
        let m = s.class_members(c);
        for w in m.windows(2) {
            assert!(s.position(w[0]) < s.position(w[1]));
            assert_eq!(r.position(w[1]).coords()[0], r.position(w[0]).coords()[0] + 1);
        }
    }
    assert!(validate(&r, &GroupModel::integers().ball(0)).all_pass());
}

#[test]
fn tiling_castle_covers_most_points() {
    let z = GroupModel::integers();
    let s = sample_1d(20_000, 2, 9);
    let f = z.folner(30);
    let c = tiling_castle(&s, &f, 0.1).unwrap();
    let covered = c.range_size() as f64 / s.len() as f64;
    assert!(covered > 0.8, "{covered}");
    for (i, x) in c.base().iter().enumerate() {
        assert_eq!(c.tower_index(*x), Some(i));
        for y in &c.towers()[i] {
            assert_eq!(c.owner(*y), Some(i));
            let a = s.alpha(*x, *y).unwrap();
            // members sit at f·g_x for f ∈ F, so α(x,y) = g_x g_y^-1 ∈ F^-1
            assert!(f.contains(&z.invert(&a)));
        }
    }
}

#[test]
fn castle_constructor_rejects_overlaps() {
    let s = sample_1d(50, 1, 3);
    let m = s.class_members(0);
    assert!(Castle::new(&s, vec![m[0], m[1]], vec![vec![m[0], m[1]], vec![m[1]]]).is_err());
    assert!(Castle::new(&s, vec![m[0]], vec![vec![m[1]]]).is_err());
    assert!(Castle::new(&s, vec![m[0], m[2]], vec![vec![m[0], m[1]], vec![m[2]]]).is_ok());
}

#[test]
fn castle_ergodic_check_on_long_towers() {
    let z = GroupModel::integers();
    let s = sample_1d(100_000, 1, 5);
    let h: Vec<f64> = (0..s.len())
        .map(|x| {
            let g = z.op(&s.position(x), &z.element(&[1]).unwrap());
            f64::from(s.ambient_label(s.class_of(x), &g).unwrap_or(0))
        })
        .collect();
    let c = tiling_castle(&s, &z.folner(2000), 0.1).unwrap();
    let rep = castle_ergodic_check(&s, &c, &h, 0.05).unwrap();
    assert!(rep.pass, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tower_measure_is_additive(seed in 0u64..500, side in 2i64..12, cut in 0usize..100) {
        let s = sample_1d(200, 2, seed);
        let c = block_castle(&s, side);
        let all: Vec<usize> = (0..c.len()).collect();
        let k = cut % (c.len() + 1);
        let (lo, hi) = all.split_at(k);
        let sum = c.measure(&s, lo) + c.measure(&s, hi);
        prop_assert!((sum - c.total_measure(&s)).abs() < 1e-12);
        prop_assert!((c.total_measure(&s) - c.range_measure(&s)).abs() < 1e-12);
        prop_assert_eq!(c.range_size(), s.len());
    }

    #[test]
    fn interior_and_boundary_split_each_tower(seed in 0u64..500, side in 2i64..12, r in 0u32..4) {
        let z2 = GroupModel::lattice(2).unwrap();
        let s = from_orbit_window(&bernoulli(0.5, z2), &z2.folner(12), &SectionRule::Symbols(vec![0]), 1, seed).unwrap();
        let c = block_castle(&s, side);
        let k = z2.ball(r);
        for (i, x) in c.base().iter().enumerate() {
            let (int, bd) = castle_interior(&s, &c, *x, &k).unwrap();
            let mut all: Vec<usize> = int.iter().chain(&bd).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(&all, &c.towers()[i]);
            let (int0, bd0) = castle_interior(&s, &c, *x, &z2.ball(0)).unwrap();
            prop_assert_eq!(int0.len(), c.towers()[i].len());
            prop_assert!(bd0.is_empty());
            // a larger K can only move points to the boundary
            let (int1, _) = castle_interior(&s, &c, *x, &z2.ball(r + 1)).unwrap();
            prop_assert!(int1.iter().all(|t| int.contains(t)));
        }
    }

    #[test]
    fn interval_averages_agree_with_direct_sums(seed in 0u64..500, lo in -10i64..5, len in 1i64..15) {
        let z = GroupModel::integers();
        let s = sample_1d(150, 3, seed);
        let h: Vec<f64> = (0..s.len()).map(|x| ((x * 7919) % 13) as f64).collect();
        let f = (lo..lo + len).map(|i| z.element(&[i]).unwrap()).collect();
        let fast = ergodic_average(&s, &h, &f);
        let slow = ergodic_average_direct(&s, &h, &f);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn weights_integrate_constants(seed in 0u64..500) {
        let s = sample_1d(100, 2, seed);
        prop_assert!((s.integral(&vec![1.0; s.len()]) - 1.0).abs() < 1e-12);
    }
}
