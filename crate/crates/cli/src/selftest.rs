//! Exact-identity suites run by `dioexp selftest`.

use dioexp::exponents::{omega_records, SearchOptions};
use dioexp::exterior::{IndexSet, Multivector};
use dioexp::flows::{full_action_w, u_matrix, ScaleParam};
use dioexp::linalg::mat_mul;
use dioexp::rational::{q, Q};
use dioexp::rng::{stream, streams};
use dioexp::subspaces::{omega_j_records, AffineSubspaceParam};
use num_bigint::BigInt;
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult { name, cases: 0, failures: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }
}

fn random_w(rng: &mut impl Rng, dim: usize, degree: usize) -> Multivector {
    let mut w = Multivector::zero(dim, degree);
    for set in IndexSet::all_of_size(dim, degree) {
        if rng.random_bool(0.7) {
            w.add_term(set, Q::from_integer(BigInt::from(rng.random_range(-9i64..=9))));
        }
    }
    w
}

fn random_q(rng: &mut impl Rng) -> Q {
    q(rng.random_range(-12i64..=12), rng.random_range(1i64..=9))
}

/// `e_0 ∧ c(w)_0 = w − π(w)`.
pub fn split_identity(seed: u64, cases: usize) -> SuiteResult {
    let mut rng = stream(seed, streams::TEST_FIXTURES);
    let mut out = SuiteResult::new("split identity");
    for _ in 0..cases {
        let n = rng.random_range(1..=4usize);
        let j = rng.random_range(1..=n + 1);
        let w = random_w(&mut rng, n + 1, j);
        let lhs = Multivector::e(n + 1, &[0]).wedge(&w.contract().unwrap().components[0]).unwrap();
        let rhs = w.sub(&w.project_v0()).unwrap();
        out.record(lhs == rhs, || w.to_text());
    }
    out
}

/// `g_t u_y w` from the closed form against the induced action of the
/// matrix `g_t u_y`, at five λ values per case.
pub fn two_path(seed: u64, cases: usize) -> SuiteResult {
    let mut rng = stream(seed, streams::TEST_FIXTURES);
    rng.set_word_pos(1 << 32);
    let lambdas = [q(2, 1), q(3, 2), q(5, 3), q(7, 2), q(11, 10)];
    let mut out = SuiteResult::new("two-path action");
    for _ in 0..cases {
        let n = rng.random_range(1..=4usize);
        let j = rng.random_range(1..=n + 1);
        let w = random_w(&mut rng, n + 1, j);
        let y: Vec<Q> = (0..n).map(|_| random_q(&mut rng)).collect();
        for lam in &lambdas {
            let p = ScaleParam::new(lam.clone(), n).unwrap();
            let closed = full_action_w(&p, &y, &w).unwrap().image;
            let direct = w.apply_linear(&mat_mul(&p.matrix(), &u_matrix(&y))).unwrap();
            out.record(closed == direct, || format!("lambda {lam}, w {}", w.to_text()));
        }
    }
    out
}

/// Order-one records from the affine-subspace machinery against the direct
/// `Aq + p` search.
pub fn order_one(seed: u64, cases: usize, height: u64) -> SuiteResult {
    let mut rng = stream(seed, streams::TEST_FIXTURES);
    rng.set_word_pos(2 << 32);
    let mut out = SuiteResult::new("order-one records");
    for _ in 0..cases {
        let rows = rng.random_range(1..=3usize);
        let cols = rng.random_range(1..=3usize);
        let a: Vec<Vec<Q>> = (0..rows).map(|_| (0..cols).map(|_| random_q(&mut rng)).collect()).collect();
        let p = AffineSubspaceParam::new(a.clone()).unwrap();
        let opts = SearchOptions::default();
        let general = omega_j_records(&p, 1, height, &opts).unwrap();
        let direct = omega_records(&a, height, &opts).unwrap();
        out.record(general.skeleton() == direct.skeleton(), || format!("{a:?}"));
    }
    out
}

pub fn run_all(seed: u64) -> Vec<SuiteResult> {
    vec![split_identity(seed, 1000), two_path(seed, 200), order_one(seed, 20, 30)]
}
