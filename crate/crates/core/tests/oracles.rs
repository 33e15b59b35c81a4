//! Searches and solvers against brute-force enumerations written
//! independently of the library's pruning.

mod common;

use common::*;
use dioexp::exponents::{omega_records, SearchOptions};
use dioexp::exterior::{IndexSet, Multivector};
use dioexp::lattices::RealLattice;
use dioexp::rational::{golden_ratio_truncation, q, to_f64, Q};
use dioexp::records::Exponent;
use dioexp::rng::{stream, streams};
use dioexp::subspaces::{omega_j_records, order_value, r_contract_matrix, AffineSubspaceParam};
use num_traits::{One, Signed, Zero};
use rand::Rng;

fn cartesian(len: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|p| (lo..=hi).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Record skeleton by exhaustive search for `s = 0`, `j ≤ n`. Coordinates
/// `w_{0J}` of a candidate satisfy `|w_{0J}| < 1 + n max|a| h` since the
/// row-0 value involving `w_{0J}` must be below 1, so the box is complete.
fn brute_skeleton(a: &[Vec<Q>], j: usize, height: u64, relation: impl Fn(&Multivector) -> bool) -> Vec<(u64, Exponent, Q)> {
    let p = AffineSubspaceParam::new(a.to_vec()).unwrap();
    let n = p.n();
    assert_eq!(p.s(), 0);
    assert!(a[0].iter().all(|x| x.abs() <= Q::one()));
    let all = IndexSet::all_of_size(n + 1, j);
    let bullets: Vec<IndexSet> = all.iter().copied().filter(|s| !s.contains(0)).collect();
    let others: Vec<IndexSet> = all.iter().copied().filter(|s| s.contains(0)).collect();
    let mut out: Vec<(u64, Exponent, Q)> = Vec::new();
    for h in 1..=height {
        let m = (n as u64 * h + 1) as i64;
        let mut best: Option<Q> = None;
        let bvals: Vec<Vec<i64>> =
            cartesian(bullets.len(), -(h as i64), h as i64).into_iter().filter(|v| v.iter().any(|x| x.unsigned_abs() == h)).collect();
        let ovals = cartesian(others.len(), -m, m);
        for b in &bvals {
            for o in &ovals {
                let mut w = Multivector::zero(n + 1, j);
                for (s, x) in bullets.iter().zip(b).chain(others.iter().zip(o)) {
                    w.add_term(*s, qint(*x));
                }
                if !relation(&w) {
                    continue;
                }
                let r = r_contract_matrix(&p, &w).unwrap().sup;
                if r >= Q::one() || (h < 2 && !r.is_zero()) {
                    continue;
                }
                if best.as_ref().is_none_or(|b| r < *b) {
                    best = Some(r);
                }
            }
        }
        if let Some(r) = best {
            let v = order_value(&r, h, j);
            if out.last().is_none_or(|l| v.total_cmp(&l.1).is_gt()) {
                out.push((h, v, r));
            }
        }
    }
    out
}

#[test]
fn order_records_match_exhaustive_search() {
    let mut rng = stream(5, streams::TEST_FIXTURES);
    for trial in 0..6 {
        let a2 = vec![random_unit_row(&mut rng, 2)];
        let p = AffineSubspaceParam::new(a2.clone()).unwrap();
        for j in 1..=2 {
            let engine = omega_j_records(&p, j, 14, &SearchOptions::default()).unwrap();
            assert_eq!(engine.skeleton(), brute_skeleton(&a2, j, 14, |_| true), "trial {trial}, A {a2:?}, j {j}");
        }
        let a3 = vec![random_unit_row(&mut rng, 3)];
        let p = AffineSubspaceParam::new(a3.clone()).unwrap();
        let engine = omega_j_records(&p, 3, 5, &SearchOptions::default()).unwrap();
        assert_eq!(engine.skeleton(), brute_skeleton(&a3, 3, 5, |_| true), "A {a3:?}, j 3");
    }
}

#[test]
fn order_two_in_four_dimensions_matches_exhaustive_search() {
    // the single Plücker relation of Λ²(ℝ⁴), written out by hand
    let relation = |w: &Multivector| {
        let c = |i: usize, j: usize| w.coeff(IndexSet::from_indices(&[i, j]));
        c(0, 1) * c(2, 3) - c(0, 2) * c(1, 3) + c(0, 3) * c(1, 2) == Q::zero()
    };
    for a in [vec![vec![q(1, 3), q(-2, 5), q(3, 7)]], vec![vec![q(1, 2), q(1, 4), q(0, 1)]]] {
        let p = AffineSubspaceParam::new(a.clone()).unwrap();
        let engine = omega_j_records(&p, 2, 3, &SearchOptions::default()).unwrap();
        assert_eq!(engine.skeleton(), brute_skeleton(&a, 2, 3, relation), "A {a:?}");
    }
}

#[test]
fn shortest_vector_matches_box_search() {
    let mut rng = stream(9, streams::TEST_FIXTURES);
    let mut checked = 0;
    while checked < 40 {
        let k = rng.random_range(2..=3usize);
        let rows = random_matrix(&mut rng, k, k, 6, 3);
        let Ok(lat) = RealLattice::new(rows.clone()) else { continue };
        // upper bound from the basis rows, then a coefficient box from the
        // dual basis: |c_i| = |<v, d_i>| ≤ |v| |d_i|
        let upper = rows.iter().map(|r| r.iter().map(|x| to_f64(x).powi(2)).sum::<f64>()).fold(f64::INFINITY, f64::min);
        let m: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        let inv = invert(&m);
        let bound = (0..k)
            .map(|i| (upper * (0..k).map(|r| inv[r][i].powi(2)).sum::<f64>()).sqrt())
            .fold(0.0, f64::max)
            .ceil() as i64
            + 1;
        if bound > 12 {
            continue;
        }
        let mut best: Option<Q> = None;
        for c in cartesian(k, -bound, bound) {
            if c.iter().all(|&x| x == 0) {
                continue;
            }
            let v: Vec<Q> = (0..k).map(|col| (0..k).fold(Q::zero(), |acc, r| acc + qint(c[r]) * &rows[r][col])).collect();
            let n2 = v.iter().fold(Q::zero(), |acc, x| acc + x * x);
            if best.as_ref().is_none_or(|b| n2 < *b) {
                best = Some(n2);
            }
        }
        assert_eq!(lat.shortest_vector(10_000_000).unwrap().norm_sq, best.unwrap(), "{rows:?}");
        checked += 1;
    }
}

fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = m.len();
    let mut a: Vec<Vec<f64>> =
        m.iter().enumerate().map(|(i, r)| [r.clone(), (0..k).map(|j| (i == j) as u8 as f64).collect()].concat()).collect();
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        let d = a[c][c];
        for x in a[c].iter_mut() {
            *x /= d;
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c];
                let row = a[c].clone();
                for (x, y) in a[r].iter_mut().zip(&row) {
                    *x -= f * y;
                }
            }
        }
    }
    a.into_iter().map(|r| r[k..].to_vec()).collect()
}

#[test]
fn golden_records_sit_on_fibonacci_denominators() {
    let phi = golden_ratio_truncation(60);
    let curve = omega_records(&[vec![phi]], 3000, &SearchOptions::default()).unwrap();
    let mut fib = vec![1u64, 2];
    while *fib.last().unwrap() < 3000 {
        let l = fib.len();
        fib.push(fib[l - 1] + fib[l - 2]);
    }
    assert!(!curve.records.is_empty());
    for r in &curve.records {
        assert!(fib.contains(&r.height), "record at non-convergent height {}", r.height);
    }
}
