//! Record searches for the exponent ω(A) of a matrix, the multiplicative
//! exponent ω^×(y), the simultaneous exponent σ(y), and a factory of
//! instances whose exponents are certified by construction.
//!
//! Every estimate here is a lower bound on a limsup at finite height.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{lcm_of_denominators, ln_abs, round_div, serde_q, Q};
use crate::records::{log_ratio, search_heights, witness_key, Budget, Candidate, Exponent, RecordCurve};

/// Integer vectors `(p, q)` with `‖Aq + p‖` small.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PqWitness {
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
}

impl PqWitness {
    /// `(p, q)` as one vector of ℤ^{m+n}.
    pub fn concat(&self) -> Vec<BigInt> {
        self.p.iter().chain(&self.q).cloned().collect()
    }
}

impl Serialize for PqWitness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PqWitness", 2)?;
        st.serialize_field("p", &self.p.iter().map(|x| x.to_string()).collect::<Vec<_>>())?;
        st.serialize_field("q", &self.q.iter().map(|x| x.to_string()).collect::<Vec<_>>())?;
        st.end()
    }
}

/// `A = N / D` with `D` the lcm of all denominators.
#[derive(Clone, Debug)]
pub struct ScaledMatrix {
    pub num: Vec<Vec<BigInt>>,
    pub den: BigInt,
}

impl ScaledMatrix {
    pub fn new(a: &[Vec<Q>]) -> Self {
        let den = lcm_of_denominators(a.iter().flatten());
        let num = a
            .iter()
            .map(|row| row.iter().map(|x| (x * Q::from_integer(den.clone())).to_integer()).collect())
            .collect();
        ScaledMatrix { num, den }
    }

    /// Nearest `p` to `-Aq` (ties toward the smaller `|p_i|`) and the
    /// residual numerators `N q + D p`.
    pub fn nearest(&self, q: &[BigInt]) -> (Vec<BigInt>, Vec<BigInt>) {
        let mut p = Vec::with_capacity(self.num.len());
        let mut res = Vec::with_capacity(self.num.len());
        for row in &self.num {
            let nq: BigInt = row.iter().zip(q).fold(BigInt::zero(), |acc, (a, b)| acc + a * b);
            let pi = round_div(&-&nq, &self.den);
            res.push(nq + &pi * &self.den);
            p.push(pi);
        }
        (p, res)
    }

    pub fn residual_of(&self, res: &[BigInt]) -> (Q, Q) {
        let sup = res.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero);
        let sq = res.iter().fold(BigInt::zero(), |acc, x| acc + x * x);
        (Q::new(sup, self.den.clone()), Q::new(sq, &self.den * &self.den))
    }
}

pub fn validate_matrix(a: &[Vec<Q>]) -> Result<(usize, usize)> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    if m == 0 || n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(n, a.iter().map(|r| r.len()).find(|&l| l != n).unwrap()));
    }
    Ok((m, n))
}

/// Integer vectors with `‖q‖_∞ = h` whose first nonzero entry is positive,
/// in lexicographic order.
pub fn shell(n: usize, h: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    if h == 0 {
        return out;
    }
    let mut cur = vec![0i64; n];
    fn rec(i: usize, n: usize, h: i64, hit: bool, leading: bool, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == n {
            if hit {
                out.push(cur.clone());
            }
            return;
        }
        let lo = if leading { 0 } else { -h };
        let last_forced = i + 1 == n && !hit;
        let values: Vec<i64> = if last_forced {
            // the final entry must itself reach the shell
            [-h, h].into_iter().filter(|&v| v >= lo).collect()
        } else {
            (lo..=h).collect()
        };
        for v in values {
            cur[i] = v;
            rec(i + 1, n, h, hit || v.abs() == h, leading && v == 0, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, n, h, false, true, &mut cur, &mut out);
    out
}

fn to_big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Smallest height taken into account; the limsup ignores any prefix.
    pub start_height: u64,
    pub budget: Budget,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { start_height: 1, budget: Budget::unlimited() }
    }
}

/// Bucket winner among `q` on the shell of height `h`. A zero residual is
/// infinite at any height; finite values need `h ≥ 2` and residual `< 1`.
fn best_on_shell(
    a: &ScaledMatrix,
    n: usize,
    h: u64,
    value: impl Fn(&Q, &[i64], u64) -> Option<Exponent>,
) -> (Option<Candidate<PqWitness>>, u64) {
    let mut best: Option<Candidate<PqWitness>> = None;
    let qs = shell(n, h as i64);
    let nodes = qs.len() as u64;
    for q in qs {
        let qb = to_big(&q);
        let (p, res) = a.nearest(&qb);
        let (r, r2) = a.residual_of(&res);
        let v = if r.is_zero() {
            Some(Exponent::Infinite)
        } else if r >= Q::one() {
            None
        } else {
            value(&r, &q, h)
        };
        let Some(v) = v else { continue };
        let w = PqWitness { p, q: qb };
        let cand = Candidate { height: h, value: v, residual: r, residual_sq: r2, key: witness_key(&w.concat()), witness: w };
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(cand);
        }
    }
    (best, nodes)
}

/// Records of `−log‖Aq+p‖_∞ / log‖q‖_∞` over `0 < ‖q‖_∞ ≤ H`, `p` nearest
/// to `−Aq`. Heights of `q` and `−q` coincide, so only one sign is visited.
pub fn omega_records(a: &[Vec<Q>], height: u64, opts: &SearchOptions) -> Result<RecordCurve<PqWitness>> {
    let (_, n) = validate_matrix(a)?;
    let sm = ScaledMatrix::new(a);
    Ok(search_heights(opts.start_height.max(1), height, &opts.budget, |h| {
        best_on_shell(&sm, n, h, |r, _, h| (h >= 2).then(|| log_ratio(r, h)))
    }))
}

/// `Π_+(q)`: product of the nonzero `|q_i|`.
pub fn pi_plus(q: &[i64]) -> BigInt {
    q.iter().filter(|&&x| x != 0).fold(BigInt::one(), |acc, &x| acc * BigInt::from(x.abs()))
}

/// Records of `−log|yq+p| / ((1/n) log Π_+(q))`, bucketed by `‖q‖_∞`.
pub fn omega_mult_records(y: &[Q], height: u64, opts: &SearchOptions) -> Result<RecordCurve<PqWitness>> {
    let a = vec![y.to_vec()];
    let (_, n) = validate_matrix(&a)?;
    let sm = ScaledMatrix::new(&a);
    Ok(search_heights(opts.start_height.max(1), height, &opts.budget, |h| {
        best_on_shell(&sm, n, h, |r, q, _| {
            let pp = pi_plus(q);
            if pp < BigInt::from(2) {
                return None;
            }
            let denom = crate::rational::ln_biguint(pp.magnitude()) / n as f64;
            Some(Exponent::Finite(-ln_abs(r) / denom))
        })
    }))
}

/// Simultaneous exponent: the column matrix `y` in the same search.
pub fn sigma_records(y: &[Q], height: u64, opts: &SearchOptions) -> Result<RecordCurve<PqWitness>> {
    let col: Vec<Vec<Q>> = y.iter().map(|x| vec![x.clone()]).collect();
    omega_records(&col, height, opts)
}

/// Interval containing the Euclidean-norm value of a witness whose sup-norm
/// value is `v = −ln r / ln h`, using `r ≤ r₂ ≤ √m r` and `h ≤ h₂ ≤ √n h`.
pub fn norm_switch_interval(r: &Q, h: u64, m: usize, n: usize) -> (f64, f64) {
    let lr = -ln_abs(r);
    let lh = (h as f64).ln();
    let (sm, sn) = (0.5 * (m as f64).ln(), 0.5 * (n as f64).ln());
    let cands = [(lr - sm) / lh, (lr - sm) / (lh + sn), lr / lh, lr / (lh + sn)];
    let lo = cands.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `−ln‖Aq+p‖₂ / ln‖q‖₂` for a witness.
pub fn euclid_value(a: &[Vec<Q>], w: &PqWitness) -> Exponent {
    let sm = ScaledMatrix::new(a);
    let res: Vec<BigInt> = sm
        .num
        .iter()
        .zip(&w.p)
        .map(|(row, p)| row.iter().zip(&w.q).fold(BigInt::zero(), |acc, (x, y)| acc + x * y) + p * &sm.den)
        .collect();
    let (_, r2) = sm.residual_of(&res);
    if r2.is_zero() {
        return Exponent::Infinite;
    }
    let q2 = w.q.iter().fold(BigInt::zero(), |acc, x| acc + x * x);
    Exponent::Finite(-0.5 * ln_abs(&r2) / (0.5 * crate::rational::ln_biguint(q2.magnitude())))
}

/// One exactly verified approximation `‖Aq + p‖_∞ < ‖q‖_∞^{−e}` with
/// `e = num/den`.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub witness: PqWitness,
    pub height: String,
    #[serde(with = "serde_q")]
    pub exponent: Q,
    pub exponent_f64: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifiedInstance {
    #[serde(with = "crate::rational::serde_q_mat")]
    pub entries: Vec<Vec<Q>>,
    pub certified_records: Vec<Certificate>,
    /// `None` encodes an infinite target.
    pub target_exponent: Option<f64>,
    pub dyadic_exponents: Vec<u64>,
}

/// Checks `‖Aq + p‖_∞^{den} · ‖q‖_∞^{num} < 1` exactly, i.e. the witness
/// satisfies the defining inequality with exponent `num/den`.
pub fn check_certificate(a: &[Vec<Q>], w: &PqWitness, exponent: &Q) -> bool {
    if exponent.is_negative() {
        return false;
    }
    let h = w.q.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero);
    if h < BigInt::from(2) {
        return false;
    }
    let r = a
        .iter()
        .zip(&w.p)
        .map(|(row, p)| (row.iter().zip(&w.q).fold(Q::zero(), |acc, (x, y)| acc + x * Q::from_integer(y.clone())) + Q::from_integer(p.clone())).abs())
        .max()
        .unwrap_or_else(Q::zero);
    let (Some(num), Some(den)) = (exponent.numer().to_u32(), exponent.denom().to_u32()) else {
        return false;
    };
    let lhs = num_traits::pow(r, den as usize) * Q::from_integer(num_traits::pow(h, num as usize));
    lhs < Q::one()
}

/// Matrix whose column 0 is a truncated lacunary series `Σ_{k≤K} 2^{−c_k}`
/// with `c_{k+1} = ⌈(v+1) c_k⌉` (or `c_k = k!` for `v = ∞`); the remaining
/// entries are fixed 64-bit dyadic irrational truncations. Approximations
/// along `q = 2^{c_k} e_0` are certified with exponent
/// `(c_{k+1} − c_k)/c_k − 1/(8 c_k)`.
pub fn build_liouville(m: usize, n: usize, target: Option<Q>, depth: usize) -> Result<CertifiedInstance> {
    if m == 0 || n == 0 {
        return Err(Error::Domain("empty shape".into()));
    }
    if depth < 2 {
        return Err(Error::Domain("depth must be at least 2".into()));
    }
    let floor = Q::new(BigInt::from(n), BigInt::from(m));
    if let Some(v) = &target {
        if *v <= floor {
            return Err(Error::Domain(format!("target exponent must exceed n/m = {n}/{m}")));
        }
    }
    let mut c: Vec<u64> = vec![1];
    for k in 1..depth {
        let prev = *c.last().unwrap();
        let next = match &target {
            Some(v) => (v + Q::one()) * Q::from_integer(BigInt::from(prev)),
            None => Q::from_integer(BigInt::from(prev * (k as u64 + 1))),
        };
        let next = next.ceil().to_integer().to_u64().filter(|&x| x <= 4096).ok_or(Error::Overflow("lacunary exponents"))?;
        c.push(next.max(prev + 1));
    }
    let series: Q = c.iter().fold(Q::zero(), |acc, &e| acc + Q::new(BigInt::one(), BigInt::one() << e));
    let filler = |i: usize, j: usize| {
        // fractional part of sqrt(prime) for distinct small primes
        const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
        let p = BigInt::from(PRIMES[(i * n + j) % PRIMES.len()]);
        let scale = BigInt::one() << 64;
        let root: BigInt = num_integer::Roots::sqrt(&(p * &scale * &scale));
        let frac = root.mod_floor(&scale);
        Q::new(frac, scale)
    };
    let entries: Vec<Vec<Q>> = (0..m)
        .map(|i| (0..n).map(|j| if j == 0 { series.clone() } else { filler(i, j) }).collect())
        .collect();
    let sm = ScaledMatrix::new(&entries);
    let mut certs = Vec::new();
    for k in 0..depth - 1 {
        let (ck, ck1) = (c[k], c[k + 1]);
        let exponent = Q::new(BigInt::from(8 * (ck1 - ck) - 1), BigInt::from(8 * ck));
        let mut q = vec![BigInt::zero(); n];
        q[0] = BigInt::one() << ck;
        let (p, _) = sm.nearest(&q);
        let w = PqWitness { p, q };
        if !check_certificate(&entries, &w, &exponent) {
            return Err(Error::Precondition(format!("certificate at q = 2^{ck} failed")));
        }
        certs.push(Certificate {
            witness: w,
            height: (BigInt::one() << ck).to_string(),
            exponent_f64: crate::rational::to_f64(&exponent),
            exponent,
        });
    }
    Ok(CertifiedInstance {
        entries,
        certified_records: certs,
        target_exponent: target.as_ref().map(crate::rational::to_f64),
        dyadic_exponents: c,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferenceReport {
    pub n: usize,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
    pub upper_slack: f64,
    pub lower_slack: f64,
}

/// `(ω−n+1)/n ≥ σ ≥ 1/(n−1+n/ω)` evaluated on estimates. Diagnostic only.
pub fn transference_check(omega: Exponent, sigma: Exponent, n: usize) -> TransferenceReport {
    const TOL: f64 = 1e-12;
    let nf = n as f64;
    let (upper, lower) = match omega {
        Exponent::Infinite => (f64::INFINITY, if n > 1 { 1.0 / (nf - 1.0) } else { f64::INFINITY }),
        Exponent::Finite(w) => ((w - nf + 1.0) / nf, 1.0 / (nf - 1.0 + nf / w)),
    };
    let s = sigma.to_f64();
    let upper_holds = s <= upper * (1.0 + TOL) + TOL || upper.is_infinite();
    let lower_holds = s >= lower * (1.0 - TOL) - TOL || s.is_infinite();
    TransferenceReport {
        n,
        upper_bound: upper,
        lower_bound: lower,
        upper_holds,
        lower_holds,
        upper_slack: upper - s,
        lower_slack: s - lower,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn shell_counts() {
        assert_eq!(shell(1, 3), vec![vec![3]]);
        // (2h+1)^n − (2h−1)^n, halved for the sign
        for n in 1..4 {
            for h in 1..4i64 {
                let full = (2 * h + 1).pow(n as u32) - (2 * h - 1).pow(n as u32);
                assert_eq!(shell(n, h).len() as i64, full / 2);
            }
        }
    }

    #[test]
    fn zero_matrix_is_infinite() {
        let c = omega_records(&[vec![qi(0), qi(0)]], 5, &SearchOptions::default()).unwrap();
        assert_eq!(c.estimate(), Some(Exponent::Infinite));
        assert_eq!(c.records[0].height, 1);
    }

    #[test]
    fn nearest_ties_go_to_smaller_p() {
        let sm = ScaledMatrix::new(&[vec![q(1, 2)]]);
        let (p, _) = sm.nearest(&[BigInt::from(1)]);
        assert_eq!(p[0], BigInt::from(0));
        let sm = ScaledMatrix::new(&[vec![q(-1, 2)]]);
        let (p, _) = sm.nearest(&[BigInt::from(1)]);
        assert_eq!(p[0], BigInt::from(0));
    }

    #[test]
    fn liouville_certificates() {
        let inst = build_liouville(1, 1, Some(qi(3)), 4).unwrap();
        assert_eq!(inst.dyadic_exponents, vec![1, 4, 16, 64]);
        let last = inst.certified_records.last().unwrap();
        assert_eq!(last.height, "65536");
        assert!(last.exponent >= q(29, 10));
        assert!(build_liouville(1, 2, Some(qi(2)), 3).is_err());
        let inf = build_liouville(1, 1, None, 5).unwrap();
        assert_eq!(inf.dyadic_exponents, vec![1, 2, 6, 24, 120]);
    }

    #[test]
    fn transference_collapses_at_critical_value() {
        let r = transference_check(Exponent::Finite(3.0), Exponent::Finite(1.0 / 3.0), 3);
        assert!(r.upper_holds && r.lower_holds);
        assert!((r.upper_bound - r.lower_bound).abs() < 1e-15);
    }
}
