use proptest::prelude::*;
use xsect_core::mixing::*;
use xsect_core::systems::{mat_pow, SymbolicSystem};
use xsect_core::{ElementSet, GroupModel};

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|x| **x > 0.0).map(|x| -x * x.log2()).sum()
}

/// Joint law of `(X_0, X_{n_1}, ...)` enumerated pattern by pattern.
fn joint_by_enumeration(m: &[Vec<f64>], pi: &[f64], gaps: &[u64]) -> f64 {
    let k = pi.len();
    let powers: Vec<Vec<Vec<f64>>> = gaps.iter().map(|g| mat_pow(m, *g)).collect();
    let mut probs = Vec::new();
    let total = k.pow(gaps.len() as u32 + 1);
    for code in 0..total {
        let mut digits = Vec::new();
        let mut c = code;
        for _ in 0..=gaps.len() {
            digits.push(c % k);
            c /= k;
        }
        let mut p = pi[digits[0]];
        for (j, pw) in powers.iter().enumerate() {
            p *= pw[digits[j]][digits[j + 1]];
        }
        probs.push(p);
    }
    shannon(&probs)
}

#[test]
fn exact_joint_entropy_matches_enumeration() {
    let m = vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.1, 0.1, 0.8]];
    let sys = SymbolicSystem::markov(m.clone()).unwrap();
    let SymbolicSystem::Markov { stationary, .. } = &sys else { unreachable!() };
    for gaps in [vec![], vec![1], vec![2, 3], vec![1, 1, 4], vec![7, 2]] {
        let a = markov_joint_entropy_exact(&m, stationary, &gaps).unwrap();
        let b = joint_by_enumeration(&m, stationary, &gaps);
        assert!((a - b).abs() < 1e-10, "{gaps:?}: {a} vs {b}");
    }
}

#[test]
fn empirical_joint_entropy_tracks_the_oracle() {
    let sys = SymbolicSystem::two_state(0.9).unwrap();
    let z = GroupModel::integers();
    for n in [1i64, 3, 9] {
        let f: ElementSet = [0, n].iter().map(|i| z.element(&[*i]).unwrap()).collect();
        let rep = mixing_report(&sys, &[0, 1], n as u32, f, 200_000, 3).unwrap();
        let oracle = rep.oracle_defect.unwrap();
        assert!((rep.signed_defect - oracle).abs() < 5.0 * rep.stderr + 1e-3, "{rep:?}");
    }
}

#[test]
fn bernoulli_families_have_no_defect() {
    let z2 = GroupModel::lattice(2).unwrap();
    let sys = SymbolicSystem::bernoulli(vec![0.5, 0.5], z2).unwrap();
    let reps = mixing_scan(&sys, &[0, 1], &[1, 2], 4, 100_000, 1).unwrap();
    for r in reps {
        assert!(r.defect < 5.0 * r.stderr + 1e-3, "{r:?}");
        assert!(r.oracle_defect.is_none());
    }
}

#[test]
fn coarse_codings_lose_information() {
    let m = vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.6, 0.2], vec![0.3, 0.3, 0.4]];
    let sys = SymbolicSystem::markov(m).unwrap();
    let z = GroupModel::integers();
    let f: ElementSet = [0i64, 2, 4].iter().map(|i| z.element(&[*i]).unwrap()).collect();
    let fine = joint_entropy_empirical(&sys, &[0, 1, 2], &f, 100_000, 2).unwrap();
    let coarse = joint_entropy_empirical(&sys, &[0, 1, 1], &f, 100_000, 2).unwrap();
    assert!(coarse.entropy < fine.entropy);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn families_are_separated(seed in any::<u64>(), r in 0u32..3, size in 1usize..6) {
        for g in [GroupModel::integers(), GroupModel::lattice(2).unwrap(), GroupModel::heisenberg()] {
            let k = g.ball(r);
            let window = g.folner((r + 1) * size as u32 + 2);
            let f = separated_family(&g, &k, size, &window, seed).unwrap();
            prop_assert_eq!(f.len(), size);
            prop_assert!(f.is_subset(&window));
            prop_assert!(g.is_separated(&f, &k));
        }
    }

    #[test]
    fn joint_entropy_is_subadditive(stay in 0.55f64..0.95, a in 1u64..6, b in 1u64..6) {
        let sys = SymbolicSystem::two_state(stay).unwrap();
        let SymbolicSystem::Markov { matrix, stationary } = &sys else { unreachable!() };
        let whole = markov_joint_entropy_exact(matrix, stationary, &[a, b]).unwrap();
        let left = markov_joint_entropy_exact(matrix, stationary, &[a]).unwrap();
        let right = markov_joint_entropy_exact(matrix, stationary, &[b]).unwrap();
        let single = shannon(stationary);
        // H(X, Y, Z) = H(X, Y) + H(Z | Y) for a chain, and H(Y, Z) = H(Y) + H(Z | Y)
        prop_assert!((whole - (left + right - single)).abs() < 1e-12);
        prop_assert!(whole <= left + single + 1e-12);
        prop_assert!(whole <= 3.0 * single + 1e-12);
        prop_assert!(whole >= left - 1e-12);
    }
}
