#![allow(dead_code)]

use dioexp::exterior::Multivector;
use dioexp::rational::{q, Q};
use num_bigint::BigInt;
use rand::Rng;

pub fn qint(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

pub fn random_q(rng: &mut impl Rng, num: i64, den: i64) -> Q {
    q(rng.random_range(-num..=num), rng.random_range(1..=den))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, num: i64, den: i64) -> Vec<Vec<Q>> {
    (0..rows).map(|_| (0..cols).map(|_| random_q(rng, num, den)).collect()).collect()
}

/// Wedge of `degree` random integer vectors; retried until nonzero.
pub fn random_decomposable(rng: &mut impl Rng, dim: usize, degree: usize, bound: i64) -> Multivector {
    loop {
        let mut w = Multivector::scalar(dim, Q::from_integer(BigInt::from(1)));
        for _ in 0..degree {
            let v: Vec<Q> = (0..dim).map(|_| qint(rng.random_range(-bound..=bound))).collect();
            w = w.wedge(&Multivector::vector(&v)).unwrap();
        }
        if !w.is_zero() {
            return w;
        }
    }
}

/// Arbitrary integer multivector, mostly not decomposable.
pub fn random_integer_mv(rng: &mut impl Rng, dim: usize, degree: usize, bound: i64) -> Multivector {
    let mut w = Multivector::zero(dim, degree);
    for set in dioexp::exterior::IndexSet::all_of_size(dim, degree) {
        w.add_term(set, qint(rng.random_range(-bound..=bound)));
    }
    w
}

/// Row of rationals in `[−1, 1]`.
pub fn random_unit_row(rng: &mut impl Rng, len: usize) -> Vec<Q> {
    (0..len).map(|_| q(rng.random_range(-9..=9), rng.random_range(9..=13))).collect()
}

/// Entries `a/b` with `|a| ≤ b ≤ den`, so every entry lies in `[−1, 1]`.
pub fn random_unit_matrix(rng: &mut impl Rng, rows: usize, cols: usize, den: i64) -> Vec<Vec<Q>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let b = rng.random_range(den / 2..=den);
                    q(rng.random_range(-b..=b), b)
                })
                .collect()
        })
        .collect()
}
