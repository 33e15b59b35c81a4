//! The lattice-flow side of the correspondence: the unipotent embedding
//! `u_y`, the diagonal flow `g_t = diag(λ^n, λ^{-1}, …, λ^{-1})` with
//! `λ = e^{t/n}`, excursion traces, the growth exponent and the exponent
//! conversions.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::Multivector;
use crate::lattices::{RealLattice, SublatticeBasis};
use crate::linalg::Matrix;
use crate::rational::{ln_abs, serde_q, to_f64, ExtQ, Q};
use crate::records::Exponent;

/// `λ = e^{t/n}`, kept exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScaleParam {
    #[serde(with = "serde_q")]
    pub lambda: Q,
    pub n: usize,
}

impl ScaleParam {
    pub fn new(lambda: Q, n: usize) -> Result<Self> {
        if !lambda.is_positive() {
            return Err(Error::Domain("λ must be positive".into()));
        }
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        Ok(ScaleParam { lambda, n })
    }

    /// `t = n log λ`, for reports only.
    pub fn t(&self) -> f64 {
        self.n as f64 * ln_abs(&self.lambda)
    }

    fn pow(&self, e: i64) -> Q {
        if e >= 0 {
            num_traits::pow(self.lambda.clone(), e as usize)
        } else {
            Q::one() / num_traits::pow(self.lambda.clone(), (-e) as usize)
        }
    }

    pub fn matrix(&self) -> Matrix {
        let k = self.n + 1;
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if i != j {
                            Q::zero()
                        } else if i == 0 {
                            self.pow(self.n as i64)
                        } else {
                            self.pow(-1)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `u_y` as a matrix acting on column vectors: `e_i ↦ e_i + y_i e_0`.
pub fn u_matrix(y: &[Q]) -> Matrix {
    let k = y.len() + 1;
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| match (i, j) {
                    (0, 0) => Q::one(),
                    (0, j) => y[j - 1].clone(),
                    (i, j) if i == j => Q::one(),
                    _ => Q::zero(),
                })
                .collect()
        })
        .collect()
}

fn y_tilde(y: &[Q]) -> Vec<Q> {
    std::iter::once(Q::one()).chain(y.iter().cloned()).collect()
}

fn check_dim(y: &[Q], w: &Multivector) -> Result<()> {
    if w.dim() != y.len() + 1 {
        return Err(Error::DimensionMismatch(w.dim(), y.len() + 1));
    }
    Ok(())
}

/// `u_y w = π(w) + e_0 ∧ ỹ c(w)` with `ỹ = (1, y)`.
pub fn u_embed(y: &[Q], w: &Multivector) -> Result<Multivector> {
    check_dim(y, w)?;
    if w.degree() == 0 {
        return Ok(w.clone());
    }
    let c = w.contract()?;
    let yc = c.combine(&y_tilde(y))?;
    w.project_v0().add(&Multivector::e(w.dim(), &[0]).wedge(&yc)?)
}

/// `g_t` on Λ^j: `λ^{n+1−j}` on terms containing 0, `λ^{−j}` otherwise.
pub fn g_act(p: &ScaleParam, w: &Multivector) -> Result<Multivector> {
    if w.dim() != p.n + 1 {
        return Err(Error::DimensionMismatch(w.dim(), p.n + 1));
    }
    let j = w.degree() as i64;
    let up = p.pow(p.n as i64 + 1 - j);
    let down = p.pow(-j);
    let mut out = Multivector::zero(w.dim(), w.degree());
    for (set, c) in w.terms() {
        out.add_term(*set, c * if set.contains(0) { &up } else { &down });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullAction {
    pub image: Multivector,
    /// `λ^{n+1−j} ‖ỹ c(w)‖_∞`
    pub expanding: Q,
    /// `λ^{−j} ‖π(w)‖_∞`
    pub contracting: Q,
}

/// `g_t u_y w` for `w` the Plücker vector of `Γ`, via the closed form
/// `λ^{−j} π(w) + λ^{n+1−j} e_0 ∧ ỹ c(w)`, with the two norm pieces.
pub fn full_action(p: &ScaleParam, y: &[Q], gamma: &SublatticeBasis) -> Result<FullAction> {
    full_action_w(p, y, &gamma.plucker())
}

pub fn full_action_w(p: &ScaleParam, y: &[Q], w: &Multivector) -> Result<FullAction> {
    check_dim(y, w)?;
    if p.n != y.len() {
        return Err(Error::DimensionMismatch(p.n, y.len()));
    }
    let j = w.degree() as i64;
    let up = p.pow(p.n as i64 + 1 - j);
    let down = p.pow(-j);
    let pi = w.project_v0();
    let yc = w.contract()?.combine(&y_tilde(y))?;
    let image = pi.scale(&down).add(&Multivector::e(w.dim(), &[0]).wedge(&yc)?.scale(&up))?;
    Ok(FullAction { image, expanding: &up * yc.sup_norm(), contracting: &down * pi.sup_norm() })
}

/// The lattice `g_t u_y ℤ^{n+1}` (rows are images of the standard basis).
pub fn flowed_lattice(p: &ScaleParam, y: &[Q]) -> Result<RealLattice> {
    if p.n != y.len() {
        return Err(Error::DimensionMismatch(p.n, y.len()));
    }
    let g = crate::linalg::mat_mul(&p.matrix(), &u_matrix(y));
    RealLattice::new(crate::linalg::transpose(&g))
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    #[serde(with = "serde_q")]
    pub lambda: Q,
    pub t: f64,
    #[serde(with = "serde_q")]
    pub delta2: Q,
    /// `(p, q)` of the shortest vector `g_t u_y (p, q)`.
    pub witness: Vec<String>,
    /// Bounds on δ for the exact target when `|y − y*|_∞ ≤ η` was declared.
    pub delta_interval: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcursionTrace {
    #[serde(with = "crate::rational::serde_q_vec")]
    pub y: Vec<Q>,
    pub points: Vec<TracePoint>,
    pub grid_ratio: Option<String>,
}

/// Geometric grid `λ_0 ρ^i ≤ λ_max`.
pub fn geometric_grid(start: &Q, ratio: &Q, end: &Q) -> Result<Vec<Q>> {
    if !start.is_positive() || *ratio <= Q::one() {
        return Err(Error::Domain("grid needs λ_0 > 0 and ratio > 1".into()));
    }
    let mut out = Vec::new();
    let mut l = start.clone();
    while l <= *end {
        out.push(l.clone());
        l = &l * ratio;
    }
    Ok(out)
}

/// δ² of `g_t u_y ℤ^{n+1}` on a strictly increasing λ grid, computed in
/// parallel and returned in grid order.
pub fn excursion_trace(y: &[Q], grid: &[Q], eta: Option<&Q>, budget: u64) -> Result<ExcursionTrace> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("λ grid must be strictly increasing".into()));
    }
    let n = y.len();
    let points: Vec<Result<TracePoint>> = grid
        .par_iter()
        .map(|lambda| {
            let p = ScaleParam::new(lambda.clone(), n)?;
            let lat = flowed_lattice(&p, y)?;
            let sv = lat.shortest_vector(budget)?;
            let delta_interval = eta.map(|eta| {
                let delta = to_f64(&sv.norm_sq).sqrt();
                let lam = to_f64(lambda);
                let grow = lam.powi(n as i32) * to_f64(eta);
                let q1: f64 = sv.coeffs[1..].iter().map(|c| to_f64(&Q::from_integer(c.abs()))).sum();
                let hi = delta + grow * q1;
                let lo = delta - grow * n as f64 * lam * hi;
                (lo.max(0.0), hi)
            });
            Ok(TracePoint {
                lambda: lambda.clone(),
                t: p.t(),
                delta2: sv.norm_sq,
                witness: sv.coeffs.iter().map(BigInt::to_string).collect(),
                delta_interval,
            })
        })
        .collect();
    Ok(ExcursionTrace { y: y.to_vec(), points: points.into_iter().collect::<Result<_>>()?, grid_ratio: None })
}

impl ExcursionTrace {
    /// `lambda t delta2 c_record` rows.
    pub fn to_table(&self) -> String {
        let g = gamma_estimate(self);
        let mut s = String::from("lambda t delta2 c_record\n");
        for (pt, c) in self.points.iter().zip(&g.running) {
            s.push_str(&format!(
                "{} {} {} {}\n",
                crate::rational::format_rational(&pt.lambda),
                pt.t,
                crate::rational::format_rational(&pt.delta2),
                c.map_or("-".to_string(), |c| c.to_string())
            ));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaEstimate {
    /// `(t, c)` at each new record of `c = −log δ / t`.
    pub records: Vec<(f64, f64)>,
    pub estimate: Option<f64>,
    /// Running maximum at each grid point (`None` while `t ≤ 0`).
    #[serde(skip)]
    pub running: Vec<Option<f64>>,
}

pub fn gamma_estimate(trace: &ExcursionTrace) -> GammaEstimate {
    let mut records = Vec::new();
    let mut running = Vec::new();
    let mut best: Option<f64> = None;
    for pt in &trace.points {
        if pt.t > 0.0 && !pt.delta2.is_zero() {
            let c = -0.5 * ln_abs(&pt.delta2) / pt.t;
            if best.is_none_or(|b| c > b) {
                best = Some(c);
                records.push((pt.t, c));
            }
        }
        running.push(best);
    }
    GammaEstimate { records, estimate: best, running }
}

fn n_q(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `c = (v − n) / (n (v + 1))`.
pub fn c_from_v(v: &ExtQ, n: usize) -> Result<Q> {
    let nq = n_q(n);
    match v {
        ExtQ::Infinite => Ok(Q::one() / nq),
        ExtQ::Finite(v) => {
            if *v < nq {
                return Err(Error::Domain(format!("v must be at least n = {n}")));
            }
            Ok((v - &nq) / (&nq * (v + Q::one())))
        }
    }
}

/// `v = n (1 + c) / (1 − n c)`, infinite once `c ≥ 1/n`.
pub fn v_from_c(c: &Q, n: usize) -> Result<ExtQ> {
    if c.is_negative() {
        return Err(Error::Domain("c must be nonnegative".into()));
    }
    let nq = n_q(n);
    let denom = Q::one() - &nq * c;
    if !denom.is_positive() {
        return Ok(ExtQ::Infinite);
    }
    Ok(ExtQ::Finite(&nq * (Q::one() + c) / denom))
}

/// `ω = n (1 + γ) / (1 − n γ)` for `0 ≤ γ ≤ 1/n`.
pub fn omega_from_gamma(gamma: &Q, n: usize) -> Result<ExtQ> {
    let nq = n_q(n);
    if gamma.is_negative() || gamma * &nq > Q::one() {
        return Err(Error::Domain(format!("γ must lie in [0, 1/{n}]")));
    }
    v_from_c(gamma, n)
}

/// Float version for estimates; clamps `γ̂` into `[0, 1/n]` and reports
/// whether clamping happened.
pub fn omega_from_gamma_estimate(gamma: f64, n: usize) -> (Exponent, bool) {
    let nf = n as f64;
    let g = gamma.clamp(0.0, 1.0 / nf);
    let clamped = g != gamma;
    if nf * g >= 1.0 {
        return (Exponent::Infinite, clamped);
    }
    (Exponent::Finite(nf * (1.0 + g) / (1.0 - nf * g)), clamped)
}

/// A point of `E ⊂ ℝ²` given exactly.
#[derive(Clone, Debug, Serialize)]
pub struct PlanePoint {
    #[serde(with = "serde_q")]
    pub x: Q,
    #[serde(with = "serde_q")]
    pub z: Q,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma31Report {
    pub c: f64,
    pub v_back: f64,
    /// `(generator, multiplier)` with `|x| ≤ |z|^{−v}` and `|z| ≥ z_min`.
    pub first_witnesses: Vec<(usize, u64)>,
    /// `(t, generator, multiplier)` with `max(e^{at}|x|, e^{−bt}|z|) ≤ e^{−ct}`.
    pub second_witnesses: Vec<(f64, usize, u64)>,
    /// Every first-kind witness satisfies the second condition at
    /// `t = log|z| / (b − c)`.
    pub forward_holds: bool,
    /// Every second-kind witness with `z ≠ 0` satisfies the first condition.
    pub backward_holds: bool,
}

/// Windowed evaluation of both sides of the equivalence for
/// `E = {k e : e ∈ generators, 1 ≤ k ≤ max_mult}`.
pub fn lemma31_check(
    generators: &[PlanePoint],
    a: f64,
    b: f64,
    v: f64,
    t_grid: &[f64],
    max_mult: u64,
    z_min: f64,
) -> Result<Lemma31Report> {
    if generators.is_empty() {
        return Err(Error::Domain("E is empty".into()));
    }
    if !(a > 0.0 && b > 0.0 && v > a / b) {
        return Err(Error::Domain("need a, b > 0 and v > a/b".into()));
    }
    const TOL: f64 = 1e-12;
    let c = (b * v - a) / (v + 1.0);
    let v_back = (a + c) / (b - c);
    let ln = |x: &Q| if x.is_zero() { f64::NEG_INFINITY } else { ln_abs(x) };
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut forward = true;
    let mut backward = true;
    for (gi, e) in generators.iter().enumerate() {
        for k in 1..=max_mult {
            let lk = (k as f64).ln();
            let (lx, lz) = (ln(&e.x) + lk, ln(&e.z) + lk);
            if lz >= z_min.ln() && lx <= -v * lz + TOL {
                first.push((gi, k));
                let t = lz / (b - c);
                if !(a * t + lx <= -c * t + TOL * (1.0 + t) && -b * t + lz <= -c * t + TOL * (1.0 + t)) {
                    forward = false;
                }
            }
            for &t in t_grid {
                if t > 0.0 && a * t + lx <= -c * t + TOL && -b * t + lz <= -c * t + TOL {
                    second.push((t, gi, k));
                    if lz.is_finite() && lx > -v * lz + TOL * (1.0 + lz.abs()) {
                        backward = false;
                    }
                }
            }
        }
    }
    second.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    Ok(Lemma31Report { c, v_back, first_witnesses: first, second_witnesses: second, forward_holds: forward, backward_holds: backward })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn u_examples() {
        let y = vec![q(2, 3), q(-5, 7)];
        let w = Multivector::e(3, &[0, 1]);
        assert_eq!(u_embed(&y, &w).unwrap(), w);
        let w = Multivector::e(3, &[1, 2]);
        let expected = w
            .add(&Multivector::basis(3, &[0, 2], y[0].clone()))
            .unwrap()
            .sub(&Multivector::basis(3, &[0, 1], y[1].clone()))
            .unwrap();
        assert_eq!(u_embed(&y, &w).unwrap(), expected);
    }

    #[test]
    fn g_eigenvectors_and_flow() {
        let p = ScaleParam::new(q(3, 2), 2).unwrap();
        let w = Multivector::e(3, &[1, 2]);
        assert_eq!(g_act(&p, &w).unwrap(), w.scale(&q(4, 9)));
        let w = Multivector::e(3, &[0, 2]);
        assert_eq!(g_act(&p, &w).unwrap(), w.scale(&q(3, 2)));
        let p2 = ScaleParam::new(q(5, 7), 2).unwrap();
        let p12 = ScaleParam::new(q(15, 14), 2).unwrap();
        let w = Multivector::parse_text(3, 2, "0,1:2\n1,2:-3").unwrap();
        assert_eq!(g_act(&p2, &g_act(&p, &w).unwrap()).unwrap(), g_act(&p12, &w).unwrap());
    }

    #[test]
    fn conversions() {
        assert_eq!(c_from_v(&ExtQ::Finite(qi(2)), 2).unwrap(), qi(0));
        assert_eq!(c_from_v(&ExtQ::Finite(qi(3)), 2).unwrap(), q(1, 8));
        assert_eq!(v_from_c(&q(1, 8), 2).unwrap(), ExtQ::Finite(qi(3)));
        assert_eq!(v_from_c(&q(1, 2), 2).unwrap(), ExtQ::Infinite);
        assert_eq!(omega_from_gamma(&qi(0), 3).unwrap(), ExtQ::Finite(qi(3)));
        assert_eq!(omega_from_gamma(&qi(1), 1).unwrap(), ExtQ::Infinite);
        assert_eq!(omega_from_gamma(&q(1, 3), 1).unwrap(), ExtQ::Finite(qi(2)));
        assert!(omega_from_gamma(&q(1, 2), 3).is_err());
    }

    #[test]
    fn trivial_flow_lattice() {
        let p = ScaleParam::new(qi(4), 1).unwrap();
        let l = flowed_lattice(&p, &[qi(0)]).unwrap();
        assert_eq!(l.covolume_sq(), qi(1));
        let sv = l.shortest_vector(10_000).unwrap();
        assert_eq!(sv.norm_sq, q(1, 16));
        let g = crate::lattices::hnf_i64(&[vec![0, 1]]).unwrap();
        let fa = full_action(&p, &[qi(0)], &g).unwrap();
        assert_eq!(fa.image, Multivector::basis(2, &[1], q(1, 4)));
    }

    #[test]
    fn lemma31_conversion() {
        let e = vec![PlanePoint { x: qi(3), z: qi(1) }];
        let r = lemma31_check(&e, 1.0, 0.5, 3.0, &[1.0, 2.0], 10, 2.0).unwrap();
        assert!((r.c - 0.125).abs() < 1e-15);
        assert!((r.v_back - 3.0).abs() < 1e-12);
        assert!(r.first_witnesses.is_empty() && r.second_witnesses.is_empty());
    }
}
