use proptest::prelude::*;
use xsect_core::entropy::{block_entropy, interval};
use xsect_core::rng;
use xsect_core::systems::*;
use xsect_core::GroupModel;

fn within(count: u64, n: u64, p: f64, sds: f64) -> bool {
    let sd = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
    (count as f64 / n as f64 - p).abs() <= sds * sd
}

#[test]
fn window_frequencies_match_marginals() {
    let z2 = GroupModel::lattice(2).unwrap();
    let probs = vec![0.1, 0.3, 0.6];
    let sys = SymbolicSystem::bernoulli(probs.clone(), z2).unwrap();
    let w = sample_window(&sys, &z2.folner(60), 8).unwrap();
    let n = w.labels.len() as u64;
    for (s, p) in probs.iter().enumerate() {
        let c = w.labels.iter().filter(|l| **l == s as u32).count() as u64;
        assert!(within(c, n, *p, 5.0), "symbol {s}: {c}/{n}");
    }
}

#[test]
fn markov_paths_follow_the_matrix() {
    let m = vec![vec![0.7, 0.2, 0.1], vec![0.3, 0.3, 0.4], vec![0.25, 0.25, 0.5]];
    let sys = SymbolicSystem::markov(m.clone()).unwrap();
    let mut s = sys.sampler();
    let mut r = rng::stream(4, 0);
    let path = s.path(&mut r, 300_000);
    let mut counts = vec![vec![0u64; 3]; 3];
    for w in path.windows(2) {
        counts[w[0] as usize][w[1] as usize] += 1;
    }
    for i in 0..3 {
        let row: u64 = counts[i].iter().sum();
        for j in 0..3 {
            assert!(within(counts[i][j], row, m[i][j], 5.0), "{i}->{j}");
        }
    }
}

#[test]
fn markov_gapped_pairs_follow_matrix_powers() {
    let sys = SymbolicSystem::two_state(0.8).unwrap();
    let SymbolicSystem::Markov { matrix, stationary } = &sys else { unreachable!() };
    let z = GroupModel::integers();
    let pos = [z.element(&[0]).unwrap(), z.element(&[5]).unwrap()];
    let p5 = mat_pow(matrix, 5);
    let mut manual = matrix.clone();
    for _ in 0..4 {
        manual = mat_mul(&manual, matrix);
    }
    for (a, b) in p5.iter().flatten().zip(manual.iter().flatten()) {
        assert!((a - b).abs() < 1e-12);
    }
    let mut s = sys.sampler();
    let mut r = rng::stream(2, 0);
    let n = 200_000u64;
    let mut c = [[0u64; 2]; 2];
    for _ in 0..n {
        let v = s.sample_at(&mut r, &pos);
        c[v[0] as usize][v[1] as usize] += 1;
    }
    for i in 0..2 {
        for j in 0..2 {
            assert!(within(c[i][j], n, stationary[i] * p5[i][j], 5.0));
        }
    }
}

#[test]
fn stationary_vectors_are_fixed() {
    let m = vec![vec![0.5, 0.5, 0.0], vec![0.1, 0.1, 0.8], vec![0.6, 0.0, 0.4]];
    let pi = stationary_of(&m).unwrap();
    for j in 0..3 {
        let v: f64 = (0..3).map(|i| pi[i] * m[i][j]).sum();
        assert!((v - pi[j]).abs() < 1e-12);
    }
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(is_primitive(&m));
    assert!(!is_primitive(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
}

#[test]
fn return_times_obey_kac() {
    for base in [
        SymbolicSystem::bernoulli(vec![0.25, 0.75], GroupModel::integers()).unwrap(),
        SymbolicSystem::two_state(0.7).unwrap(),
    ] {
        let ind = SymbolicSystem::induce(base.clone(), vec![0]).unwrap();
        let t = return_times(&ind, 200_000, 6).unwrap();
        let tf: Vec<f64> = t.iter().map(|x| *x as f64).collect();
        let mean = tf.iter().sum::<f64>() / tf.len() as f64;
        let var = tf.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (tf.len() - 1) as f64;
        let se = (var / tf.len() as f64).sqrt();
        let kac = ind.mean_return_time().unwrap();
        assert!((mean - kac).abs() < 5.0 * se, "{mean} vs {kac}");
    }
}

#[test]
fn inducing_on_the_tower_floor_recovers_the_base() {
    let base = SymbolicSystem::bernoulli(vec![0.4, 0.6], GroupModel::integers()).unwrap();
    let roof = vec![2, 3];
    let tower = SymbolicSystem::suspend(base.clone(), roof.clone()).unwrap();
    let r = radix(&roof);
    let floor: Vec<u32> = (0..2).map(|y| y * r).collect();
    let back = SymbolicSystem::induce(tower.clone(), floor).unwrap();
    // each excursion word is one full column of the tower
    let mut s = back.sampler();
    let mut rs = rng::stream(9, 0);
    let ids = s.path(&mut rs, 100_000);
    let mut firsts = Vec::with_capacity(ids.len());
    for id in &ids {
        let w = s.word(*id).unwrap();
        let y = w[0] / r;
        assert_eq!(w, (0..roof[y as usize]).map(|l| y * r + l).collect::<Vec<_>>());
        firsts.push(y);
    }
    // 2-block frequencies of the floor process match the base law
    let n = (firsts.len() - 1) as u64;
    for a in 0..2u32 {
        for b in 0..2u32 {
            let c = firsts.windows(2).filter(|w| w[0] == a && w[1] == b).count() as u64;
            let p = [0.4, 0.6][a as usize] * [0.4, 0.6][b as usize];
            assert!(within(c, n, p, 5.0), "{a}{b}");
        }
    }
    let est = block_entropy(&back, &interval(3), 100_000, 2).unwrap();
    let h = base.analytic_entropy().unwrap();
    assert!((est.estimate - h).abs() < 5.0 * est.stderr + 0.01, "{est:?}");
}

#[test]
fn closed_forms_are_consistent() {
    let m = SymbolicSystem::two_state(0.9).unwrap();
    let roof = vec![1, 3];
    let t = SymbolicSystem::suspend(m.clone(), roof.clone()).unwrap();
    let mean_roof = 0.5 * 1.0 + 0.5 * 3.0;
    assert!((t.analytic_entropy().unwrap() - m.analytic_entropy().unwrap() / mean_roof).abs() < 1e-12);
    let marg = t.marginal().unwrap();
    assert!((marg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let ind = SymbolicSystem::induce(m.clone(), vec![1]).unwrap();
    assert!((ind.analytic_entropy().unwrap() - 2.0 * m.analytic_entropy().unwrap()).abs() < 1e-12);
    assert!(SymbolicSystem::induce(m.clone(), vec![7]).is_err());
    assert!(SymbolicSystem::suspend(m, vec![0, 1]).is_err());
}

proptest! {
    #[test]
    fn tower_paths_round_trip(base in prop::collection::vec(0u32..3, 1..40), roof in prop::collection::vec(1u32..5, 3)) {
        let total: usize = base.iter().map(|y| roof[*y as usize] as usize).sum();
        let path = tower_path(&base, &roof, 0, total);
        prop_assert_eq!(path.len(), total);
        prop_assert_eq!(base_section(&path, &roof), base);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>()) {
        let sys = SymbolicSystem::two_state(0.6).unwrap();
        let w = interval(16);
        prop_assert_eq!(sample_window(&sys, &w, seed).unwrap(), sample_window(&sys, &w, seed).unwrap());
    }
}
