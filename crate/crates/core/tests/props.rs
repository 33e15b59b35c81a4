mod common;

use common::*;
use dioexp::exterior::{plucker_relations_hold, IndexSet, Multivector};
use dioexp::flows::{full_action_w, g_act, u_embed, u_matrix, ScaleParam};
use dioexp::lattices::{hnf_i64, subgroup_from_plucker};
use dioexp::linalg::mat_mul;
use dioexp::nondiv::{is_marked, WeightedPoset};
use dioexp::rational::{q, Q};
use dioexp::subspaces::{
    extended_norm, lemma51_bound, lemma55_norms, lemma56_check, lemma57_check, r_contract, r_contract_matrix,
    restricted_norm, AffineSubspaceParam, RowOp,
};
use num_traits::One;
use proptest::prelude::*;

fn mv_strategy(dim: usize, degree: usize) -> impl Strategy<Value = Multivector> {
    let sets = IndexSet::all_of_size(dim, degree);
    proptest::collection::vec(-6i64..=6, sets.len()).prop_map(move |cs| {
        let mut w = Multivector::zero(dim, degree);
        for (s, c) in sets.iter().zip(cs) {
            w.add_term(*s, qint(c));
        }
        w
    })
}

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<Q>> {
    proptest::collection::vec(-5i64..=5, dim).prop_map(|v| v.into_iter().map(qint).collect())
}

/// Decomposable integer `w` as a wedge of `degree` integer vectors.
fn decomposable_strategy(dim: usize, degree: usize) -> impl Strategy<Value = Multivector> {
    proptest::collection::vec(vec_strategy(dim), degree)
        .prop_map(move |vs| {
            vs.iter().fold(Multivector::scalar(dim, Q::one()), |acc, v| acc.wedge(&Multivector::vector(v)).unwrap())
        })
        .prop_filter("nonzero", |w| !w.is_zero())
}

fn rational_strategy() -> impl Strategy<Value = Q> {
    (-12i64..=12, 1i64..=8).prop_map(|(a, b)| q(a, b))
}

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<Q>>> {
    proptest::collection::vec(proptest::collection::vec(rational_strategy(), cols), rows)
}

/// `(A, w)` with `A` of shape `(s+1) × (n−s)` and `w ∈ Λ^j(ℤ^{n+1})` decomposable.
fn subspace_case(max_n: usize) -> impl Strategy<Value = (Vec<Vec<Q>>, Multivector)> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), 0..n))
        .prop_flat_map(|(n, s)| (Just(n), Just(s), 1..=n - s))
        .prop_flat_map(|(n, s, j)| (matrix_strategy(s + 1, n - s), decomposable_strategy(n + 1, j)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wedge_is_graded_commutative(a in mv_strategy(5, 2), b in mv_strategy(5, 1), c in mv_strategy(5, 1)) {
        prop_assert_eq!(a.wedge(&b).unwrap(), b.wedge(&a).unwrap());
        prop_assert_eq!(b.wedge(&c).unwrap(), c.wedge(&b).unwrap().neg());
        prop_assert!(b.wedge(&b).unwrap().is_zero());
        prop_assert_eq!(a.wedge(&b).unwrap().wedge(&c).unwrap(), a.wedge(&b.wedge(&c).unwrap()).unwrap());
    }

    #[test]
    fn split_along_e0(w in (1usize..=5).prop_flat_map(|d| (1..=d).prop_flat_map(move |j| mv_strategy(d, j)))) {
        let e0 = Multivector::e(w.dim(), &[0]);
        let c = w.contract().unwrap();
        prop_assert_eq!(e0.wedge(&c.components[0]).unwrap(), w.sub(&w.project_v0()).unwrap());
    }

    #[test]
    fn unipotent_action_two_paths(
        (w, y) in (1usize..=4).prop_flat_map(|n| (1..=n + 1).prop_flat_map(move |j| (mv_strategy(n + 1, j), proptest::collection::vec(rational_strategy(), n)))),
        lam in (2i64..=7, 1i64..=3).prop_map(|(a, b)| q(a + b, b)),
    ) {
        let n = y.len();
        let u = u_matrix(&y);
        prop_assert_eq!(u_embed(&y, &w).unwrap(), w.apply_linear(&u).unwrap());
        let p = ScaleParam::new(lam, n).unwrap();
        let direct = w.apply_linear(&mat_mul(&p.matrix(), &u)).unwrap();
        prop_assert_eq!(&full_action_w(&p, &y, &w).unwrap().image, &direct);
        prop_assert_eq!(g_act(&p, &u_embed(&y, &w).unwrap()).unwrap(), direct);
    }

    #[test]
    fn r_values_two_paths((a, w) in subspace_case(4)) {
        let p = AffineSubspaceParam::new(a).unwrap();
        prop_assert_eq!(r_contract(&p, &w).unwrap(), r_contract_matrix(&p, &w).unwrap());
    }

    #[test]
    fn norm_chain((a, w) in subspace_case(4)) {
        let p = AffineSubspaceParam::new(a).unwrap();
        let core = r_contract(&p, &w).unwrap().sup;
        prop_assert!(restricted_norm(&p, &w).unwrap() <= core.clone());
        prop_assert!(core <= extended_norm(&p, &w).unwrap());
        if w.degree() >= 2 && w.degree() <= p.n() - p.s() {
            let c = lemma55_norms(&p, &w).unwrap();
            prop_assert!(c.extended_ok && c.core_ok, "{:?}", c);
        }
        if let Ok(b) = lemma51_bound(&p, &w) {
            prop_assert!(b.holds, "{:?}", b);
        }
    }

    #[test]
    fn row_operations_keep_witnesses(
        (a, w) in subspace_case(4),
        k in prop_oneof![-4i64..=-1, 1i64..=4],
        l in prop_oneof![-4i64..=-1, 1i64..=4],
    ) {
        let p = AffineSubspaceParam::new(a).unwrap();
        let mut ops = vec![RowOp::ScaleTop { k, l }];
        if p.s() >= 1 {
            ops.push(RowOp::AddSecondToTop);
        }
        if p.s() >= 2 {
            ops.push(RowOp::Swap { i: 1, m: p.s() });
        }
        for op in ops {
            let r = lemma56_check(&p, &w, &op).unwrap();
            prop_assert!(r.integral && r.decomposable && r.norm_ok && r.height_ok, "{:?}", r);
        }
        if p.s() >= 1 {
            let r = lemma57_check(&p, &w).unwrap();
            prop_assert!(r.norm_ok && r.height_ok, "{:?}", r);
        }
    }

    #[test]
    fn plucker_roundtrip(rows in (2usize..=4).prop_flat_map(|k| (1..k).prop_flat_map(move |j| proptest::collection::vec(proptest::collection::vec(-5i64..=5, k), j)))) {
        let Ok(basis) = hnf_i64(&rows) else { return Ok(()) };
        if basis.rank() != rows.len() {
            return Ok(());
        }
        let w = basis.plucker();
        prop_assert!(plucker_relations_hold(&w));
        let sat = subgroup_from_plucker(&w).unwrap();
        let back = sat.plucker();
        // the saturation has the same span, so w is an integer multiple of
        // its Plücker vector
        let (set, c) = back.terms().next().map(|(s, c)| (*s, c.clone())).unwrap();
        let ratio = w.coeff(set) / c;
        prop_assert!(ratio.is_integer());
        prop_assert_eq!(back.scale(&ratio), w);
    }

    #[test]
    fn marking_is_monotone(
        eta in proptest::collection::vec(0.1f64..4.0, 1..6),
        psi_scale in proptest::collection::vec(0.0f64..2.0, 6),
        edges in proptest::collection::vec((0usize..6, 0usize..6), 0..8),
        eps in 0.01f64..1.0,
        shrink in 0.01f64..1.0,
    ) {
        let m = eta.len();
        // orient edges upward so the relation is acyclic
        let rel: Vec<(usize, usize)> = edges.into_iter().filter(|&(a, b)| a < m && b < m && a < b).collect();
        let poset = WeightedPoset::new(eta.clone(), &rel).unwrap();
        let psi: Vec<f64> = eta.iter().zip(&psi_scale).map(|(e, s)| e * s).collect();
        if is_marked(&poset, &psi, eps).unwrap().marked {
            prop_assert!(is_marked(&poset, &psi, eps * shrink).unwrap().marked);
        }
        prop_assert!(poset.length() <= m);
    }
}
