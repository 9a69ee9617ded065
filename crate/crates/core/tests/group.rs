use proptest::prelude::*;
use xsect_core::{ColumnSet, Element, ElementSet, GroupModel};

fn h3() -> GroupModel {
    GroupModel::heisenberg()
}

/// Upper unitriangular product, written out as 3x3 integer matrices.
fn matrix_product(g: [i64; 3], h: [i64; 3]) -> [i64; 3] {
    let m = |v: [i64; 3]| [[1, v[0], v[2]], [0, 1, v[1]], [0, 0, 1]];
    let (a, b) = (m(g), m(h));
    let mut c = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    [c[0][1], c[1][2], c[0][2]]
}

fn el(g: &GroupModel, c: &[i64]) -> Element {
    g.element(c).unwrap()
}

fn coords3() -> impl Strategy<Value = [i64; 3]> {
    [-50i64..50, -50i64..50, -500i64..500]
}

fn small_set(rank: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-4i64..4, rank), 1..10)
}

fn to_set(g: &GroupModel, v: &[Vec<i64>]) -> ElementSet {
    v.iter().map(|c| el(g, c)).collect()
}

proptest! {
    #[test]
    fn heisenberg_matches_matrices(a in coords3(), b in coords3()) {
        let g = h3();
        let p = g.op(&el(&g, &a), &el(&g, &b));
        prop_assert_eq!(p.coords(), &matrix_product(a, b)[..]);
    }

    #[test]
    fn associativity_and_inverses(a in coords3(), b in coords3(), c in coords3()) {
        for g in [h3(), GroupModel::lattice(3).unwrap()] {
            let (x, y, z) = (el(&g, &a), el(&g, &b), el(&g, &c));
            prop_assert_eq!(g.op(&g.op(&x, &y), &z), g.op(&x, &g.op(&y, &z)));
            prop_assert_eq!(g.op(&x, &g.invert(&x)), g.identity());
            prop_assert_eq!(g.op(&g.invert(&x), &x), g.identity());
        }
    }

    #[test]
    fn translates_preserve_counting_measure(s in small_set(3), b in coords3()) {
        let g = h3();
        let f = to_set(&g, &s);
        let b = el(&g, &b);
        prop_assert_eq!(g.right_translate(&f, &b).len(), f.len());
        let left: ElementSet = f.iter().map(|x| g.op(&b, x)).collect();
        prop_assert_eq!(left.len(), f.len());
    }

    #[test]
    fn separation_is_right_invariant(s in small_set(3), b in coords3(), r in 0u32..3) {
        let g = h3();
        let a = to_set(&g, &s);
        let k = g.ball(r);
        let b = el(&g, &b);
        prop_assert_eq!(g.is_separated(&a, &k), g.is_separated(&g.right_translate(&a, &b), &k));
    }

    #[test]
    fn separation_matches_definition(s in small_set(2), r in 0u32..3) {
        let g = GroupModel::lattice(2).unwrap();
        let a = to_set(&g, &s);
        let k = g.ball(r);
        let brute = a.iter().all(|x| a.iter().all(|y| x == y || !k.contains(&g.op(x, &g.invert(y)))));
        prop_assert_eq!(g.is_separated(&a, &k), brute);
    }

    #[test]
    fn interior_shrinks_with_k(s in small_set(2), r in 0u32..3) {
        let g = GroupModel::lattice(2).unwrap();
        let ambient = g.folner(5);
        let t = to_set(&g, &s).intersection(&ambient);
        let k = g.ball(r);
        let i1 = g.interior(&t, &ambient, &k);
        prop_assert!(i1.is_subset(&t));
        let b = g.boundary(&t, &ambient, &k);
        prop_assert_eq!(i1.union(&b), t.clone());
        prop_assert!(i1.intersection(&b).is_empty());
        prop_assert_eq!(g.interior(&t, &ambient, &ElementSet::singleton(g.identity())), t.clone());
        prop_assert!(g.interior(&t, &ambient, &g.ball(r + 1)).is_subset(&i1));
    }

    #[test]
    fn column_product_matches_enumeration(n in 1u32..4, r in 0u32..3) {
        let g = h3();
        let f = g.folner(n);
        let k = g.ball(r);
        let fast = ColumnSet::from_set(&f).two_sided_product(&g, &k, &k).to_set();
        let slow = g.product3(&k, &f, &k).unwrap();
        prop_assert_eq!(fast, slow);
    }
}

#[test]
fn folner_ratios_decrease() {
    for g in [GroupModel::integers(), GroupModel::lattice(2).unwrap(), h3()] {
        let k = g.ball(1);
        let mut last = f64::INFINITY;
        for n in [2u32, 4, 8, 16, 32] {
            let region = g.folner_region(n);
            let grown = region.two_sided_product(&g, &k, &k).len() as f64;
            let ratio = grown / region.len() as f64;
            assert!(ratio < last, "{g:?} n = {n}");
            last = ratio;
        }
        assert!(last < 1.5, "{g:?}: {last}");
        let big = g.folner_region(200);
        assert!(g.is_invariant_region(&big, &k, 0.1).unwrap());
    }
}

#[test]
fn ball_sizes() {
    let z2 = GroupModel::lattice(2).unwrap();
    for r in 0..6u32 {
        assert_eq!(z2.ball(r).len() as u32, 2 * r * r + 2 * r + 1);
    }
    let h = h3();
    let gens = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]];
    let mut seen = std::collections::BTreeSet::from([[0i64; 3]]);
    let mut frontier = vec![[0i64; 3]];
    for r in 0..5u32 {
        assert_eq!(h.ball(r).len(), seen.len(), "radius {r}");
        let mut next = Vec::new();
        for x in &frontier {
            for s in gens {
                let y = matrix_product(*x, s);
                if seen.insert(y) {
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
}
