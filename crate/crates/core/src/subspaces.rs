//! Affine subspaces `𝓛 = {(x, x̃A)}` with `x̃ = (1, x)` and `A` of shape
//! `(s+1) × (n−s)`: the values of `R_A c(w)`, the higher order exponents
//! `ω_j(A)`, the subspace exponent, and the constructive steps used to move
//! witnesses between related matrices.
//!
//! Row `i` of `A` is identified with `a_i ∈ V_• = span(e_{s+1}, …, e_n)`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponents::{shell, validate_matrix, PqWitness, ScaledMatrix, SearchOptions};
use crate::exterior::{IndexSet, Multivector};
use crate::linalg;
use crate::rational::{format_rational, ln_abs, serde_q, to_f64, truncate_dyadic, Q};
use crate::records::{log_ratio, search_heights, witness_key, Budget, Candidate, Exponent, RecordCurve};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSubspaceParam {
    n: usize,
    s: usize,
    a: Vec<Vec<Q>>,
}

impl Serialize for AffineSubspaceParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("AffineSubspaceParam", 3)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("s", &self.s)?;
        let rows: Vec<Vec<String>> = self.a.iter().map(|r| r.iter().map(format_rational).collect()).collect();
        st.serialize_field("A", &rows)?;
        st.end()
    }
}

impl AffineSubspaceParam {
    /// `s + 1` rows, `n − s` columns.
    pub fn new(a: Vec<Vec<Q>>) -> Result<Self> {
        let (rows, cols) = validate_matrix(&a)?;
        let s = rows - 1;
        Ok(AffineSubspaceParam { n: s + cols, s, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn a(&self) -> &[Vec<Q>] {
        &self.a
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().flatten().all(|x| x.is_zero())
    }

    /// `e_i + a_i` as a vector of `ℚ^{n+1}`.
    pub fn row_vector(&self, i: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.n + 1];
        v[i] = Q::one();
        for (t, x) in self.a[i].iter().enumerate() {
            v[self.s + 1 + t] = x.clone();
        }
        v
    }

    /// `max_i ‖a_i‖₁`.
    pub fn alpha(&self) -> Q {
        self.a.iter().map(|r| r.iter().fold(Q::zero(), |acc, x| acc + x.abs())).max().unwrap_or_else(Q::zero)
    }

    /// Constant of the coordinate bound: each of the `s + 1` elimination
    /// steps costs a factor `1 + α`.
    pub fn kappa_coordinates(&self) -> Q {
        num_traits::pow(Q::one() + self.alpha(), self.s + 1)
    }

    /// Extended index sets (`J ∋ 0` allowed) against the core ones.
    pub fn kappa_extended(&self) -> Q {
        Q::one() + self.alpha() * Q::from_integer(BigInt::from(2))
    }

    /// Core index sets against the restricted ones (`J ⊂ {i+1..n}`): each
    /// index below `i` is traded for the row it belongs to, giving
    /// `b ← (1 + α) + α b` per step, starting from `max(1, α)`.
    pub fn kappa_restricted(&self) -> Q {
        let alpha = self.alpha();
        let mut b = if alpha > Q::one() { alpha.clone() } else { Q::one() };
        for _ in 0..self.s {
            let next = Q::one() + &alpha + &alpha * &b;
            if next > b {
                b = next;
            }
        }
        b
    }

    /// `A` without its top row; the subspace one dimension lower.
    pub fn drop_row0(&self) -> Result<AffineSubspaceParam> {
        if self.s == 0 {
            return Err(Error::Precondition("no row left after removing row 0".into()));
        }
        AffineSubspaceParam::new(self.a[1..].to_vec())
    }

    pub fn swap_rows(&self, i: usize, m: usize) -> Result<AffineSubspaceParam> {
        if i > self.s || m > self.s {
            return Err(Error::Domain(format!("row index out of range 0..={}", self.s)));
        }
        let mut a = self.a.clone();
        a.swap(i, m);
        AffineSubspaceParam::new(a)
    }

    fn check_w(&self, w: &Multivector) -> Result<()> {
        if w.dim() != self.n + 1 {
            return Err(Error::DimensionMismatch(self.n + 1, w.dim()));
        }
        if w.degree() == 0 || w.degree() > self.n {
            return Err(Error::InvalidDegree { degree: w.degree(), ambient: self.n + 1 });
        }
        Ok(())
    }

    /// `⟨(e_i + a_i) ∧ e_J, w⟩` for `i = 0..=s` and, per row, the index sets
    /// produced by `sets(i)`; computed through wedge and inner product.
    fn values_over(&self, w: &Multivector, sets: impl Fn(usize) -> Vec<IndexSet>) -> Result<Vec<Q>> {
        self.check_w(w)?;
        let k = self.n + 1;
        let mut out = Vec::new();
        for i in 0..=self.s {
            let u = Multivector::vector(&self.row_vector(i));
            for set in sets(i) {
                let idx: Vec<usize> = set.indices().collect();
                let ej = Multivector::basis(k, &idx, Q::one());
                out.push(u.wedge(&ej)?.inner(w)?);
            }
        }
        Ok(out)
    }

    fn core_sets(&self, j: usize) -> Vec<IndexSet> {
        IndexSet::all_in_range(1, self.n + 1, j - 1)
    }
}

/// The values of `R_A c(w)` and their sup.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RValues {
    #[serde(with = "crate::rational::serde_q_vec")]
    pub values: Vec<Q>,
    #[serde(with = "serde_q")]
    pub sup: Q,
}

fn sup_abs(v: &[Q]) -> Q {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(Q::zero)
}

/// All `⟨(e_i + a_i) ∧ e_J, w⟩`, `i = 0..=s`, `J ⊂ {1..n}`, `#J = j − 1`,
/// row by row with `J` in lexicographic order.
pub fn r_contract(p: &AffineSubspaceParam, w: &Multivector) -> Result<RValues> {
    let j = w.degree();
    p.check_w(w)?;
    let values = p.values_over(w, |_| p.core_sets(j))?;
    let sup = sup_abs(&values);
    Ok(RValues { values, sup })
}

/// Same values computed as `(I | A) · c(w)` from the contraction image.
pub fn r_contract_matrix(p: &AffineSubspaceParam, w: &Multivector) -> Result<RValues> {
    p.check_w(w)?;
    let c = w.contract()?;
    let sets = p.core_sets(w.degree());
    let mut values = Vec::new();
    for i in 0..=p.s {
        let row = c.combine(&p.row_vector(i))?;
        values.extend(sets.iter().map(|&set| row.coeff(set)));
    }
    let sup = sup_abs(&values);
    Ok(RValues { values, sup })
}

/// Sup over `J ⊂ {0..n}` (index 0 allowed).
pub fn extended_norm(p: &AffineSubspaceParam, w: &Multivector) -> Result<Q> {
    let j = w.degree();
    p.check_w(w)?;
    Ok(sup_abs(&p.values_over(w, |_| IndexSet::all_of_size(p.n + 1, j - 1))?))
}

/// Sup over `J ⊂ {i+1..n}` for row `i`.
pub fn restricted_norm(p: &AffineSubspaceParam, w: &Multivector) -> Result<Q> {
    let j = w.degree();
    p.check_w(w)?;
    Ok(sup_abs(&p.values_over(w, |i| IndexSet::all_in_range(i + 1, p.n + 1, j - 1))?))
}

/// `v = j · (−ln r / ln h) + j − 1`; bit-identical to [`log_ratio`] for
/// `j = 1`.
pub fn order_value(residual: &Q, height: u64, j: usize) -> Exponent {
    match log_ratio(residual, height) {
        Exponent::Infinite => Exponent::Infinite,
        Exponent::Finite(b) => Exponent::Finite(j as f64 * b + (j - 1) as f64),
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

const I128_HEADROOM: f64 = 1.0e30;

/// Precomputed enumeration of integral decomposable `w ∈ Λ^j(ℤ^{n+1})`
/// with `‖R_A c(w)‖ < 1` and prescribed `π_•(w)`.
///
/// Coordinates inside `Λ^j(V_•)` are fixed by the height shell. Every other
/// coordinate `w_I` with `k = min I ≤ s` appears with coefficient `D` in the
/// value for `(i, J) = (k, I∖k)`, whose remaining coordinates all have a
/// larger minimum; solving in order of decreasing minimum leaves at most
/// two integer choices per coordinate.
struct OrderEngine {
    k: usize,
    j: usize,
    den: i128,
    sets: Vec<IndexSet>,
    bullet: Vec<usize>,
    elim: Vec<usize>,
    elim_con: Vec<usize>,
    cons: Vec<Vec<(usize, i128)>>,
    cons_at: Vec<Vec<usize>>,
    rels: Vec<Vec<(i128, usize, usize)>>,
    rels_pre: Vec<usize>,
    rels_at: Vec<Vec<usize>>,
}

struct Best {
    max: i128,
    sumsq: i128,
    key: Vec<i128>,
    coords: Vec<i128>,
}

impl OrderEngine {
    fn new(p: &AffineSubspaceParam, j: usize, height: u64) -> Result<Self> {
        let (n, s) = (p.n, p.s);
        let k = n + 1;
        let sm = ScaledMatrix::new(&p.a);
        let den = sm.den.to_i128().ok_or(Error::Overflow("common denominator"))?;
        let num: Vec<Vec<i128>> = sm
            .num
            .iter()
            .map(|r| r.iter().map(|x| x.to_i128().ok_or(Error::Overflow("matrix numerators"))).collect())
            .collect::<Result<_>>()?;
        // Every coordinate is at most κ(1 + H); keep all sums well inside i128.
        let w_bound = to_f64(&p.kappa_coordinates()) * (1.0 + height as f64);
        let row_weight: f64 = num.iter().map(|r| r.iter().map(|x| x.abs() as f64).sum::<f64>()).fold(0.0, f64::max);
        if (den as f64 + row_weight) * w_bound * (k as f64) > I128_HEADROOM
            || w_bound * w_bound * (j as f64 + 1.0) * 4.0 > I128_HEADROOM
            || (den as f64).powi(2) * 4096.0 > I128_HEADROOM
        {
            return Err(Error::Overflow("search range exceeds 128-bit arithmetic"));
        }

        let mut sets = IndexSet::all_of_size(k, j);
        sets.sort();
        let pos: HashMap<IndexSet, usize> = sets.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let bullet: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].min().unwrap() > s).collect();
        let mut elim: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].min().unwrap() <= s).collect();
        elim.sort_by(|&x, &y| sets[y].min().cmp(&sets[x].min()).then(sets[x].cmp(&sets[y])));
        let mut depth = vec![-1i64; sets.len()];
        for (d, &c) in elim.iter().enumerate() {
            depth[c] = d as i64;
        }

        let mut cons = Vec::new();
        let mut con_of: HashMap<(usize, IndexSet), usize> = HashMap::new();
        for i in 0..=s {
            for jset in IndexSet::all_in_range(1, k, j - 1) {
                let mut terms: Vec<(usize, i128)> = Vec::new();
                let mut push = |t: usize, coeff: i128| {
                    if coeff == 0 || jset.contains(t) {
                        return;
                    }
                    let sign = IndexSet::from_indices(&[t]).wedge_sign(jset) as i128;
                    terms.push((pos[&jset.insert(t)], sign * coeff));
                };
                push(i, den);
                for (c, &x) in num[i].iter().enumerate() {
                    push(s + 1 + c, x);
                }
                if terms.is_empty() {
                    continue;
                }
                con_of.insert((i, jset), cons.len());
                cons.push(terms);
            }
        }
        let ready = |coords: &mut dyn Iterator<Item = usize>| coords.map(|c| depth[c]).max().unwrap_or(-1);
        let mut cons_at = vec![Vec::new(); elim.len()];
        for (ci, terms) in cons.iter().enumerate() {
            let r = ready(&mut terms.iter().map(|t| t.0));
            // every value involves a coordinate outside Λ(V_•)
            debug_assert!(r >= 0);
            cons_at[r.max(0) as usize].push(ci);
        }
        let mut elim_con = Vec::with_capacity(elim.len());
        for (d, &c) in elim.iter().enumerate() {
            let set = sets[c];
            let kmin = set.min().unwrap();
            let ci = con_of[&(kmin, set.remove(kmin))];
            debug_assert!(cons[ci].iter().all(|&(x, coeff)| if x == c { coeff == den } else { depth[x] < d as i64 }));
            elim_con.push(ci);
        }

        let mut rels = Vec::new();
        let mut rels_pre = Vec::new();
        let mut rels_at = vec![Vec::new(); elim.len()];
        if j >= 2 && j + 2 <= k {
            let signed = |idx: &[usize]| IndexSet::sorted_with_sign(idx).map(|(set, sg)| (pos[&set], sg as i128));
            for iset in IndexSet::all_of_size(k, j - 1) {
                let i_idx: Vec<usize> = iset.indices().collect();
                for kset in IndexSet::all_of_size(k, j + 1) {
                    let k_idx: Vec<usize> = kset.indices().collect();
                    let mut acc: HashMap<(usize, usize), i128> = HashMap::new();
                    for l in 0..k_idx.len() {
                        let mut left = i_idx.clone();
                        left.push(k_idx[l]);
                        let right: Vec<usize> = k_idx.iter().enumerate().filter(|(q, _)| *q != l).map(|(_, &x)| x).collect();
                        let (Some((a, sa)), Some((b, sb))) = (signed(&left), signed(&right)) else { continue };
                        let sign = if l % 2 == 0 { 1 } else { -1 } * sa * sb;
                        *acc.entry((a.min(b), a.max(b))).or_default() += sign;
                    }
                    let mut terms: Vec<(i128, usize, usize)> =
                        acc.into_iter().filter(|&(_, c)| c != 0).map(|((a, b), c)| (c, a, b)).collect();
                    if terms.is_empty() {
                        continue;
                    }
                    terms.sort();
                    let r = ready(&mut terms.iter().flat_map(|t| [t.1, t.2]));
                    if r < 0 {
                        rels_pre.push(rels.len());
                    } else {
                        rels_at[r as usize].push(rels.len());
                    }
                    rels.push(terms);
                }
            }
        }
        Ok(OrderEngine { k, j, den, sets, bullet, elim, elim_con, cons, cons_at, rels, rels_pre, rels_at })
    }

    fn con_value(&self, ci: usize, w: &[i128]) -> i128 {
        self.cons[ci].iter().map(|&(c, x)| x * w[c]).sum()
    }

    fn rel_holds(&self, ri: usize, w: &[i128]) -> bool {
        self.rels[ri].iter().map(|&(c, a, b)| c * w[a] * w[b]).sum::<i128>() == 0
    }

    fn eval_height(&self, h: u64) -> (Option<Candidate<Multivector>>, u64) {
        let mut best: Option<Best> = None;
        let mut nodes = 0u64;
        let mut w = vec![0i128; self.sets.len()];
        for b in shell(self.bullet.len(), h as i64) {
            for (&c, &x) in self.bullet.iter().zip(&b) {
                w[c] = x as i128;
            }
            if !self.rels_pre.iter().all(|&r| self.rel_holds(r, &w)) {
                continue;
            }
            self.dfs(0, &mut w, h, &mut best, &mut nodes);
        }
        let cand = best.map(|b| {
            let r = Q::new(BigInt::from(b.max), BigInt::from(self.den));
            let r2 = Q::new(BigInt::from(b.sumsq), BigInt::from(self.den) * BigInt::from(self.den));
            let coords: Vec<BigInt> = b.coords.iter().map(|&x| BigInt::from(x)).collect();
            let terms = self.sets.iter().zip(&coords).map(|(&s, c)| (s, Q::from_integer(c.clone())));
            let witness = Multivector::from_terms(self.k, self.j, terms).expect("consistent degree");
            Candidate { height: h, value: order_value(&r, h, self.j), residual: r, residual_sq: r2, key: witness_key(&coords), witness }
        });
        (cand, nodes)
    }

    fn dfs(&self, d: usize, w: &mut Vec<i128>, h: u64, best: &mut Option<Best>, nodes: &mut u64) {
        *nodes += 1;
        if d == self.elim.len() {
            self.leaf(w, h, best);
            return;
        }
        let c = self.elim[d];
        w[c] = 0;
        let rest = self.con_value(self.elim_con[d], w);
        let m0 = floor_div(-rest, self.den);
        for m in [m0, m0 + 1] {
            if (self.den * m + rest).abs() >= self.den {
                continue;
            }
            w[c] = m;
            let ok = self.cons_at[d].iter().all(|&ci| self.con_value(ci, w).abs() < self.den)
                && self.rels_at[d].iter().all(|&ri| self.rel_holds(ri, w));
            if ok {
                self.dfs(d + 1, w, h, best, nodes);
            }
        }
        w[c] = 0;
    }

    fn leaf(&self, w: &[i128], h: u64, best: &mut Option<Best>) {
        let mut max = 0i128;
        let mut sumsq = 0i128;
        for ci in 0..self.cons.len() {
            let v = self.con_value(ci, w).abs();
            max = max.max(v);
            sumsq += v * v;
        }
        if max != 0 && h < 2 {
            return;
        }
        let better = match best {
            None => true,
            Some(b) => (max, sumsq).cmp(&(b.max, b.sumsq)).then_with(|| key_i128(w).cmp(&b.key)).is_lt(),
        };
        if better {
            *best = Some(Best { max, sumsq, key: key_i128(w), coords: w.to_vec() });
        }
    }
}

/// [`witness_key`] on machine integers.
fn key_i128(w: &[i128]) -> Vec<i128> {
    let flip = w.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0);
    let l1: i128 = w.iter().map(|x| x.abs()).sum();
    std::iter::once(l1).chain(w.iter().map(|&x| if flip { -x } else { x })).collect()
}

/// Records of `ω_j(A)` over `1 ≤ ‖π_•(w)‖_∞ ≤ H`. Within a height bucket
/// candidates are ranked by sup value, then sum of squared values, then
/// witness key; `w` and `−w` are identified by making the first nonzero
/// coordinate of `π_•(w)` positive.
pub fn omega_j_records(p: &AffineSubspaceParam, j: usize, height: u64, opts: &SearchOptions) -> Result<RecordCurve<Multivector>> {
    if j == 0 || j > p.n {
        return Err(Error::InvalidDegree { degree: j, ambient: p.n + 1 });
    }
    if j > p.n - p.s {
        // Λ^j(V_•) = 0: no admissible heights
        let mut c = RecordCurve::empty();
        c.exhausted_height = height;
        return Ok(c);
    }
    let engine = OrderEngine::new(p, j, height)?;
    Ok(search_heights(opts.start_height.max(1), height, &opts.budget, |h| engine.eval_height(h)))
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderCurve {
    pub j: usize,
    pub estimate: Option<Exponent>,
    pub curve: RecordCurve<Multivector>,
}

/// Shapes for which the lower bound `max(ω(A), n)` is known to be exact.
/// For rational entries the two proportionality conditions both reduce to
/// `rank A ≤ 1`.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct EqualityFlags {
    pub single_column: bool,
    pub single_row: bool,
    pub rank_at_most_one: bool,
    pub applies: bool,
}

pub fn equality_flags(p: &AffineSubspaceParam) -> EqualityFlags {
    let single_column = p.s + 1 == p.n;
    let single_row = p.s == 0;
    let rank_at_most_one = linalg::rank(&p.a) <= 1;
    EqualityFlags { single_column, single_row, rank_at_most_one, applies: single_column || single_row || rank_at_most_one }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderExponentReport {
    pub param: AffineSubspaceParam,
    pub height: u64,
    pub orders: Vec<OrderCurve>,
    /// `max(n, ω̂_j)` over the searched orders.
    pub combined: Exponent,
    pub equality: EqualityFlags,
    pub annotations: Vec<String>,
    pub complete: bool,
}

/// `ω̂(𝓛) = max(n, max_j ω̂_j(A))`. `orders` defaults to `1..=n−s`; orders
/// above `n − s` are accepted only with `allow_high_orders` and contribute
/// nothing.
pub fn subspace_exponent(
    p: &AffineSubspaceParam,
    height: u64,
    orders: Option<&[usize]>,
    allow_high_orders: bool,
    opts: &SearchOptions,
) -> Result<OrderExponentReport> {
    let default: Vec<usize> = (1..=p.n - p.s).collect();
    let orders = orders.unwrap_or(&default);
    let mut curves = Vec::new();
    let mut combined = Exponent::Finite(p.n as f64);
    let mut complete = true;
    for &j in orders {
        if j == 0 || j > p.n || (j > p.n - p.s && !allow_high_orders) {
            return Err(Error::InvalidDegree { degree: j, ambient: p.n + 1 });
        }
        let curve = omega_j_records(p, j, height, opts)?;
        complete &= curve.complete;
        let estimate = curve.estimate();
        if let Some(e) = estimate {
            combined = combined.max(e);
        }
        curves.push(OrderCurve { j, estimate, curve });
    }
    let equality = equality_flags(p);
    let mut annotations = Vec::new();
    if equality.applies {
        annotations.push("equality omega(L) = max(omega(A), n) is expected for this shape".to_string());
    }
    if p.s == 0 {
        annotations.push("single point: omega_j(a) <= omega(a) expected for every order".to_string());
    }
    if orders.iter().any(|&j| j > p.n - p.s) {
        annotations.push("orders above n - s have no admissible heights".to_string());
    }
    Ok(OrderExponentReport { param: p.clone(), height, orders: curves, combined, equality, annotations, complete })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoordinateBound {
    #[serde(with = "serde_q")]
    pub sup_w: Q,
    #[serde(with = "serde_q")]
    pub height: Q,
    #[serde(with = "serde_q")]
    pub kappa: Q,
    pub holds: bool,
}

/// `‖w‖_∞ ≤ κ (1 + ‖π_•(w)‖_∞)` for `w` with `‖R_A c(w)‖ < 1`.
pub fn lemma51_bound(p: &AffineSubspaceParam, w: &Multivector) -> Result<CoordinateBound> {
    if r_contract(p, w)?.sup >= Q::one() {
        return Err(Error::Precondition("requires sup of R_A c(w) below 1".into()));
    }
    let sup_w = w.sup_norm();
    let height = w.project_vbullet(p.s).sup_norm();
    let kappa = p.kappa_coordinates();
    let holds = sup_w <= &kappa * (Q::one() + &height);
    Ok(CoordinateBound { sup_w, height, kappa, holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormComparison {
    #[serde(with = "serde_q")]
    pub extended: Q,
    #[serde(with = "serde_q")]
    pub core: Q,
    #[serde(with = "serde_q")]
    pub restricted: Q,
    #[serde(with = "serde_q")]
    pub kappa_extended: Q,
    #[serde(with = "serde_q")]
    pub kappa_restricted: Q,
    /// `extended ≤ κ_ext · core`.
    pub extended_ok: bool,
    /// `core ≤ κ_res · restricted`.
    pub core_ok: bool,
}

pub fn lemma55_norms(p: &AffineSubspaceParam, w: &Multivector) -> Result<NormComparison> {
    let j = w.degree();
    if j < 2 || j > p.n - p.s {
        return Err(Error::InvalidDegree { degree: j, ambient: p.n + 1 });
    }
    let extended = extended_norm(p, w)?;
    let core = r_contract(p, w)?.sup;
    let restricted = restricted_norm(p, w)?;
    let (ka, kb) = (p.kappa_extended(), p.kappa_restricted());
    Ok(NormComparison {
        extended_ok: extended <= &ka * &core,
        core_ok: core <= &kb * &restricted,
        extended,
        core,
        restricted,
        kappa_extended: ka,
        kappa_restricted: kb,
    })
}

/// Elementary row operations on `A` with a matching map on witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RowOp {
    /// Row 0 multiplied by `k/ℓ`.
    ScaleTop { k: i64, l: i64 },
    /// Row 1 added to row 0.
    AddSecondToTop,
    /// Two rows among `1..=s` exchanged.
    Swap { i: usize, m: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformReport {
    pub op: RowOp,
    pub integral: bool,
    pub decomposable: bool,
    #[serde(with = "serde_q")]
    pub before: Q,
    #[serde(with = "serde_q")]
    pub after: Q,
    #[serde(with = "serde_q")]
    pub factor: Q,
    pub norm_ok: bool,
    /// `π_•(w̃)` equals the expected multiple of `π_•(w)`.
    pub height_ok: bool,
}

/// Splits `w = w₀ + e₀ ∧ w′` with `w₀, w′` free of index 0.
fn split_e0(w: &Multivector) -> (Multivector, Multivector) {
    let w0 = w.project_v0();
    let mut wp = Multivector::zero(w.dim(), w.degree() - 1);
    for (set, c) in w.terms() {
        if set.contains(0) {
            wp.add_term(set.remove(0), c.clone());
        }
    }
    (w0, wp)
}

/// Applies `op` to `A` and carries `w` along:
/// scaling gives `w̃ = ℓ w₀ + k e₀ ∧ w′`, adding row 1 gives
/// `w̃ = w + e₀ ∧ w₁′` where `e₁ ∧ w₁′` collects the terms with `1` but not
/// `0`, and a swap relabels the two coordinates.
pub fn lemma56_transform(p: &AffineSubspaceParam, w: &Multivector, op: &RowOp) -> Result<(AffineSubspaceParam, Multivector)> {
    p.check_w(w)?;
    if !w.is_integral() {
        return Err(Error::Precondition("witness must be integral".into()));
    }
    if !w.is_decomposable() {
        return Err(Error::NotDecomposable("witness is not a wedge of vectors".into()));
    }
    let k1 = p.n + 1;
    match *op {
        RowOp::ScaleTop { k, l } => {
            if k == 0 || l == 0 {
                return Err(Error::Domain("scale factors must be nonzero".into()));
            }
            let mut a = p.a.clone();
            let f = Q::new(BigInt::from(k), BigInt::from(l));
            for x in a[0].iter_mut() {
                *x = &*x * &f;
            }
            let (w0, wp) = split_e0(w);
            let e0 = Multivector::e(k1, &[0]);
            let wt = w0.scale(&Q::from_integer(BigInt::from(l))).add(&e0.wedge(&wp)?.scale(&Q::from_integer(BigInt::from(k))))?;
            Ok((AffineSubspaceParam::new(a)?, wt))
        }
        RowOp::AddSecondToTop => {
            if p.s == 0 {
                return Err(Error::Precondition("needs at least two rows".into()));
            }
            let mut a = p.a.clone();
            let second = a[1].clone();
            for (x, y) in a[0].iter_mut().zip(&second) {
                *x = &*x + y;
            }
            let mut w1 = Multivector::zero(k1, w.degree() - 1);
            for (set, c) in w.terms() {
                if set.contains(1) && !set.contains(0) {
                    // e_1 is the lowest index, so no sign
                    w1.add_term(set.remove(1), c.clone());
                }
            }
            let wt = w.add(&Multivector::e(k1, &[0]).wedge(&w1)?)?;
            Ok((AffineSubspaceParam::new(a)?, wt))
        }
        RowOp::Swap { i, m } => {
            if i == 0 || m == 0 || i > p.s || m > p.s {
                return Err(Error::Domain("swaps act on rows 1..=s".into()));
            }
            let wt = w.reindex(k1, |x| if x == i { m } else if x == m { i } else { x });
            Ok((p.swap_rows(i, m)?, wt))
        }
    }
}

/// Checks the properties promised for [`lemma56_transform`]: `w̃` integral
/// and decomposable (by the quadratic relations), the value bound with
/// factor `max(|k|, |ℓ|)`, `2` or `1`, and `π_•(w̃) = ℓ π_•(w)` (scaling) or
/// `π_•(w)` (otherwise, up to the swap relabeling inside `V_0`).
pub fn lemma56_check(p: &AffineSubspaceParam, w: &Multivector, op: &RowOp) -> Result<TransformReport> {
    let (p2, wt) = lemma56_transform(p, w, op)?;
    let before = r_contract(p, w)?.sup;
    let after = r_contract(&p2, &wt)?.sup;
    let (factor, expected_bullet) = match *op {
        RowOp::ScaleTop { k, l } => (
            Q::from_integer(BigInt::from(k.abs().max(l.abs()))),
            w.project_vbullet(p.s).scale(&Q::from_integer(BigInt::from(l))),
        ),
        RowOp::AddSecondToTop => (Q::from_integer(BigInt::from(2)), w.project_vbullet(p.s)),
        RowOp::Swap { .. } => (Q::one(), w.project_vbullet(p.s)),
    };
    Ok(TransformReport {
        op: op.clone(),
        integral: wt.is_integral(),
        decomposable: crate::exterior::plucker_relations_hold(&wt),
        norm_ok: after <= &factor * &before,
        height_ok: wt.project_vbullet(p.s) == expected_bullet,
        before,
        after,
        factor,
    })
}

/// `π(w)` written in the coordinates of `ℝ^n = V_0` (index `i ↦ i − 1`),
/// a witness for `A` with row 0 removed.
pub fn lemma57_project(p: &AffineSubspaceParam, w: &Multivector) -> Result<Multivector> {
    p.check_w(w)?;
    if p.s == 0 {
        return Err(Error::Precondition("row removal needs s >= 1".into()));
    }
    Ok(w.project_v0().reindex(p.n, |i| i - 1))
}

/// Inverse direction for `a_0 = 0`: a multivector of `ℝ^n` placed in `V_0`.
pub fn lemma57_embed(p: &AffineSubspaceParam, w: &Multivector) -> Result<Multivector> {
    if w.dim() != p.n {
        return Err(Error::DimensionMismatch(p.n, w.dim()));
    }
    Ok(w.reindex(p.n + 1, |i| i + 1))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    #[serde(with = "serde_q")]
    pub before: Q,
    #[serde(with = "serde_q")]
    pub after: Q,
    pub norm_ok: bool,
    pub height_ok: bool,
}

pub fn lemma57_check(p: &AffineSubspaceParam, w: &Multivector) -> Result<ProjectionReport> {
    let p2 = p.drop_row0()?;
    let pw = lemma57_project(p, w)?;
    let before = r_contract(p, w)?.sup;
    let after = if pw.degree() <= p2.n { r_contract(&p2, &pw)?.sup } else { Q::zero() };
    let lifted_bullet = pw.project_vbullet(p2.s).reindex(p.n + 1, |i| i + 1);
    Ok(ProjectionReport { norm_ok: after <= before, height_ok: lifted_bullet == w.project_vbullet(p.s), before, after })
}

/// Coordinates of `w ∈ Λ²(ℝ⁴)` in the form
/// `p e₀₁ + Σ_{i∈{0,1}, j∈{2,3}} w_ij e_i∧e_j + q e₂₃`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoByTwoCoords {
    pub p: i128,
    pub w02: i128,
    pub w03: i128,
    pub w12: i128,
    pub w13: i128,
    pub q: i128,
}

impl TwoByTwoCoords {
    pub fn from_multivector(w: &Multivector) -> Result<Self> {
        if w.dim() != 4 || w.degree() != 2 || !w.is_integral() {
            return Err(Error::Domain("expected an integral element of the second exterior power of Z^4".into()));
        }
        let c = |a: usize, b: usize| -> Result<i128> {
            w.coeff(IndexSet::from_indices(&[a, b])).to_integer().to_i128().ok_or(Error::Overflow("coordinate"))
        };
        Ok(TwoByTwoCoords { p: c(0, 1)?, w02: c(0, 2)?, w03: c(0, 3)?, w12: c(1, 2)?, w13: c(1, 3)?, q: c(2, 3)? })
    }

    pub fn to_multivector(&self) -> Multivector {
        let mut w = Multivector::zero(4, 2);
        for (a, b, x) in [(0, 1, self.p), (0, 2, self.w02), (0, 3, self.w03), (1, 2, self.w12), (1, 3, self.w13), (2, 3, self.q)] {
            w.add_term(IndexSet::from_indices(&[a, b]), Q::from_integer(BigInt::from(x)));
        }
        w
    }

    fn vec(&self) -> [i128; 6] {
        [self.p, self.w02, self.w03, self.w12, self.w13, self.q]
    }
}

/// The explicit value set for `n = 3`, `s = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct TwoByTwoValues {
    /// `w₀₂ − a₀₃q, w₁₂ − a₁₃q, w₀₃ + a₀₂q, w₁₃ + a₁₂q,
    /// p − det(A)q − a₀₂(w₁₂ − a₁₃q) − a₀₃(w₁₃ + a₁₂q),
    /// −a₁₂(w₁₂ − a₁₃q) − a₁₃(w₁₃ + a₁₂q)`: the full value set of `R_A c(w)`.
    #[serde(with = "crate::rational::serde_q_vec")]
    pub six: Vec<Q>,
    #[serde(with = "serde_q")]
    pub sup: Q,
    /// Sup of the first four together with `p − det(A)q`.
    #[serde(with = "serde_q")]
    pub five_sup: Q,
}

struct TwoByTwo {
    den: i128,
    n02: i128,
    n03: i128,
    n12: i128,
    n13: i128,
    det: i128,
}

impl TwoByTwo {
    fn new(a: &[Vec<Q>]) -> Result<Self> {
        let (r, c) = validate_matrix(a)?;
        if (r, c) != (2, 2) {
            return Err(Error::Domain("closed form needs a 2x2 matrix".into()));
        }
        let sm = ScaledMatrix::new(a);
        let g = |x: &BigInt| x.to_i128().ok_or(Error::Overflow("matrix entries"));
        let den = g(&sm.den)?;
        let (n02, n03, n12, n13) = (g(&sm.num[0][0])?, g(&sm.num[0][1])?, g(&sm.num[1][0])?, g(&sm.num[1][1])?);
        Ok(TwoByTwo { den, n02, n03, n12, n13, det: n02 * n13 - n03 * n12 })
    }

    /// The six values and `p − det(A)q`, all scaled by `D²`.
    fn scaled(&self, w: &TwoByTwoCoords) -> ([i128; 6], i128) {
        let d = self.den;
        let v1 = d * w.w02 - self.n03 * w.q;
        let v2 = d * w.w12 - self.n13 * w.q;
        let v3 = d * w.w03 + self.n02 * w.q;
        let v4 = d * w.w13 + self.n12 * w.q;
        let five = d * d * w.p - self.det * w.q;
        let v5 = five - self.n02 * v2 - self.n03 * v4;
        let v6 = -self.n12 * v2 - self.n13 * v4;
        ([d * v1, d * v2, d * v3, d * v4, v5, v6], five)
    }
}

pub fn omega2_closed_form(a: &[Vec<Q>], w: &TwoByTwoCoords) -> Result<TwoByTwoValues> {
    let t = TwoByTwo::new(a)?;
    let (six, five) = t.scaled(w);
    let d2 = BigInt::from(t.den) * BigInt::from(t.den);
    let six: Vec<Q> = six.iter().map(|&x| Q::new(BigInt::from(x), d2.clone())).collect();
    let sup = sup_abs(&six);
    let five_sup = sup_abs(&[six[0].clone(), six[1].clone(), six[2].clone(), six[3].clone(), Q::new(BigInt::from(five), d2)]);
    Ok(TwoByTwoValues { six, sup, five_sup })
}

/// Which sup drives [`omega2_closed_form_records`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TwoByTwoCriterion {
    Six,
    Five,
}

/// `ω_2` records for a 2×2 matrix straight from the explicit values: `q`
/// is the height, each `w_ij` is one of the at most two integers bringing
/// its value below 1, and `p = (w₀₂w₁₃ − w₀₃w₁₂)/q` is forced by the single
/// quadratic relation.
pub fn omega2_closed_form_records(
    a: &[Vec<Q>],
    height: u64,
    criterion: TwoByTwoCriterion,
    opts: &SearchOptions,
) -> Result<RecordCurve<Multivector>> {
    let t = TwoByTwo::new(a)?;
    let big = t.n02.abs().max(t.n03.abs()).max(t.n12.abs()).max(t.n13.abs()).max(t.den) as f64;
    // |w_ij| ≲ (big/D + 1) H, values ≤ D², squares summed six times
    if (t.den as f64).powi(4) * 8.0 > 1e37 || big * big * (height as f64 + 1.0) * 4.0 > 1e30 {
        return Err(Error::Overflow("closed form range"));
    }
    let d = t.den;
    let d2 = d * d;
    let window = |shift: i128| -> Vec<i128> {
        // integers x with |d x + shift| < d
        let m0 = floor_div(-shift, d);
        [m0, m0 + 1].into_iter().filter(|&m| (d * m + shift).abs() < d).collect()
    };
    let eval = |h: u64| -> (Option<Candidate<Multivector>>, u64) {
        let q = h as i128;
        let mut nodes = 0u64;
        let mut best: Option<(i128, i128, Vec<i128>, TwoByTwoCoords)> = None;
        for &w02 in &window(-t.n03 * q) {
            for &w12 in &window(-t.n13 * q) {
                for &w03 in &window(t.n02 * q) {
                    for &w13 in &window(t.n12 * q) {
                        nodes += 1;
                        let num = w02 * w13 - w03 * w12;
                        if num % q != 0 {
                            continue;
                        }
                        let w = TwoByTwoCoords { p: num / q, w02, w03, w12, w13, q };
                        let (six, five) = t.scaled(&w);
                        let vals: Vec<i128> = match criterion {
                            TwoByTwoCriterion::Six => six.to_vec(),
                            TwoByTwoCriterion::Five => vec![six[0], six[1], six[2], six[3], five],
                        };
                        let max = vals.iter().map(|x| x.abs()).max().unwrap();
                        if max >= d2 || (max != 0 && h < 2) {
                            continue;
                        }
                        let sumsq: i128 = vals.iter().map(|x| x * x).sum();
                        let key = key_i128(&w.vec());
                        let better = best.as_ref().is_none_or(|b| (max, sumsq).cmp(&(b.0, b.1)).then_with(|| key.cmp(&b.2)).is_lt());
                        if better {
                            best = Some((max, sumsq, key, w));
                        }
                    }
                }
            }
        }
        let cand = best.map(|(max, sumsq, _, w)| {
            let r = Q::new(BigInt::from(max), BigInt::from(d2));
            let coords: Vec<BigInt> = w.vec().iter().map(|&x| BigInt::from(x)).collect();
            Candidate {
                height: h,
                value: order_value(&r, h, 2),
                residual: r,
                residual_sq: Q::new(BigInt::from(sumsq), BigInt::from(d2) * BigInt::from(d2)),
                key: witness_key(&coords),
                witness: w.to_multivector(),
            }
        });
        (cand, nodes)
    };
    Ok(search_heights(opts.start_height.max(1), height, &opts.budget, eval))
}

/// Element `(p₀, p′, q)` of a uniform family and how it fared.
#[derive(Clone, Debug, Serialize)]
pub struct UniformElement {
    pub witness: PqWitness,
    /// `‖(p′, q)‖_∞`.
    pub height: String,
    #[serde(with = "serde_q")]
    pub residual: Q,
    pub exponent: Exponent,
    /// `‖p‖_∞ ≤ C ‖q‖_∞`.
    pub p_bound_ok: bool,
    /// `|p₀ + y·(p′, q)| ≤ ‖x̃‖₁ ‖Aq + p‖_∞` at every sample.
    pub triangle_ok: bool,
    /// The target inequality with exponent `v′` at every sample.
    pub holds: bool,
    pub worst_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformApproximants {
    pub v: f64,
    pub v_prime: f64,
    #[serde(with = "serde_q")]
    pub c_bound: Q,
    pub samples: usize,
    pub elements: Vec<UniformElement>,
    /// Smallest height from which every element satisfies the target.
    pub holds_from_height: Option<String>,
}

fn sample_grid(s: usize, per_axis: usize) -> Vec<Vec<Q>> {
    let per_axis = per_axis.max(1);
    let coord = |i: usize| {
        if per_axis == 1 {
            Q::zero()
        } else {
            Q::new(BigInt::from(2 * i as i64), BigInt::from(per_axis as i64 - 1)) - Q::one()
        }
    };
    let mut out = vec![Vec::new()];
    for _ in 0..s {
        out = out.into_iter().flat_map(|pre| (0..per_axis).map(move |i| [pre.clone(), vec![coord(i)]].concat())).collect();
    }
    out
}

/// Builds the uniform family from witnesses of `ω(A)` with exponent at
/// least `v` and checks `|p₀ + y·(p′, q)| < ‖(p′, q)‖^{−v′}` at a grid of
/// points `y = (x, x̃A)`, `x ∈ [−1, 1]^s`. Finitely many failures are
/// expected; `holds_from_height` says where they stop.
pub fn uniform_approximants(
    p: &AffineSubspaceParam,
    witnesses: &[PqWitness],
    v: f64,
    v_prime: f64,
    per_axis: usize,
) -> Result<UniformApproximants> {
    let c_bound = Q::one() + p.alpha();
    let grid = sample_grid(p.s, per_axis);
    let mut elements = Vec::new();
    for wit in witnesses {
        if wit.p.len() != p.s + 1 || wit.q.len() != p.n - p.s {
            return Err(Error::DimensionMismatch(p.n + 1, wit.p.len() + wit.q.len()));
        }
        let qn = wit.q.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero);
        if qn < BigInt::from(2) {
            continue;
        }
        let qq: Vec<Q> = wit.q.iter().map(|x| Q::from_integer(x.clone())).collect();
        let resid_vec: Vec<Q> =
            p.a.iter().zip(&wit.p).map(|(row, pi)| linalg::dot(row, &qq) + Q::from_integer(pi.clone())).collect();
        let residual = sup_abs(&resid_vec);
        let exponent = if residual.is_zero() {
            Exponent::Infinite
        } else {
            Exponent::Finite(-ln_abs(&residual) / crate::rational::ln_bigint_abs(&qn))
        };
        if exponent.total_cmp(&Exponent::Finite(v)).is_lt() {
            continue;
        }
        let pn = wit.p.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero);
        let p_bound_ok = Q::from_integer(pn) <= &c_bound * Q::from_integer(qn.clone());
        let h = wit.p[1..].iter().chain(&wit.q).map(|x| x.abs()).max().unwrap();
        let ln_h = crate::rational::ln_bigint_abs(&h);
        let (mut triangle_ok, mut holds, mut worst) = (true, true, f64::INFINITY);
        for x in &grid {
            // y·(p′, q) + p₀ with y = (x, x̃A)
            let mut xt = vec![Q::one()];
            xt.extend(x.iter().cloned());
            let lhs = linalg::dot(&xt, &resid_vec).abs();
            let l1 = xt.iter().fold(Q::zero(), |acc, t| acc + t.abs());
            triangle_ok &= lhs <= &l1 * &residual;
            let margin = if lhs.is_zero() { f64::INFINITY } else { -ln_abs(&lhs) / ln_h - v_prime };
            holds &= margin > 0.0;
            worst = worst.min(margin);
        }
        elements.push(UniformElement {
            witness: wit.clone(),
            height: h.to_string(),
            residual,
            exponent,
            p_bound_ok,
            triangle_ok,
            holds,
            worst_margin: worst,
        });
    }
    if elements.len() < 2 {
        return Err(Error::Precondition(format!("need at least two witnesses with exponent >= {v}, found {}", elements.len())));
    }
    let mut order: Vec<usize> = (0..elements.len()).collect();
    order.sort_by(|&x, &y| {
        let hx: BigInt = elements[x].height.parse().unwrap();
        let hy: BigInt = elements[y].height.parse().unwrap();
        hx.cmp(&hy)
    });
    let mut holds_from = None;
    for &i in order.iter().rev() {
        if !elements[i].holds {
            break;
        }
        holds_from = Some(elements[i].height.clone());
    }
    Ok(UniformApproximants { v, v_prime, c_bound, samples: grid.len(), elements, holds_from_height: holds_from })
}

/// Uniform family from the records of a direct `ω(A)` search.
pub fn uniform_approximants_search(
    p: &AffineSubspaceParam,
    v: f64,
    v_prime: f64,
    height: u64,
    per_axis: usize,
    opts: &SearchOptions,
) -> Result<UniformApproximants> {
    let curve = crate::exponents::omega_records(&p.a, height, opts)?;
    let wits: Vec<PqWitness> = curve.records.iter().map(|r| r.witness.clone()).collect();
    uniform_approximants(p, &wits, v, v_prime, per_axis)
}

/// Dimension of `{A : ω(A) ≥ v}`-type sets: `(s+1)(n−s−1) + (n+1)/(v+1)`
/// for `v > n` and `(s+1)(n−s)` at `v = n`; `v = ∞` keeps only the first
/// term.
pub fn hausdorff_dim_formula(n: usize, s: usize, v: &crate::rational::ExtQ) -> Result<Q> {
    if s >= n {
        return Err(Error::Domain("need s < n".into()));
    }
    let nq = Q::from_integer(BigInt::from(n));
    let base = Q::from_integer(BigInt::from((s + 1) * (n - s - 1)));
    match v.finite() {
        None => Ok(base),
        Some(v) if *v < nq => Err(Error::Domain("v must be at least n".into())),
        Some(v) if *v == nq => Ok(Q::from_integer(BigInt::from((s + 1) * (n - s)))),
        Some(v) => Ok(base + (nq + Q::one()) / (v + Q::one())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapStrategy {
    /// Independent dyadic entries.
    Random,
    /// Second row a dyadic multiple of the first, so `det A = 0`.
    DetZero,
    /// Alternates the two.
    Mixed,
}

#[derive(Clone, Debug)]
pub struct GapSearchOptions {
    pub strategy: GapStrategy,
    pub trials: usize,
    pub height: u64,
    pub bits: u32,
    pub seed: u64,
    pub budget: Budget,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapCandidate {
    pub trial: usize,
    pub param: AffineSubspaceParam,
    pub omega1: Option<Exponent>,
    pub omega2: Option<Exponent>,
    /// `ω̂₂ − max(3, ω̂₁)`; absent when both sides are infinite or a curve is
    /// empty.
    pub gap: Option<f64>,
    pub curve1: RecordCurve<Multivector>,
    pub curve2: RecordCurve<Multivector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapSearchReport {
    pub strategy: GapStrategy,
    pub height: u64,
    pub trials_run: usize,
    pub indeterminate: usize,
    pub complete: bool,
    pub best: Option<GapCandidate>,
}

pub fn gap_of(omega1: Option<Exponent>, omega2: Option<Exponent>) -> Option<f64> {
    let o2 = omega2?;
    let floor = omega1.map_or(Exponent::Finite(3.0), |e| e.max(Exponent::Finite(3.0)));
    match (o2, floor) {
        (Exponent::Infinite, Exponent::Infinite) => None,
        (a, b) => Some(a.to_f64() - b.to_f64()),
    }
}

fn gap_trial_matrix(strategy: GapStrategy, trial: usize, bits: u32, seed: u64) -> Vec<Vec<Q>> {
    let mut rng = crate::rng::chunk_stream(seed, crate::rng::streams::GAP_SEARCH, trial as u64, 64);
    let mut draw = || truncate_dyadic(rng.random::<f64>(), bits);
    let det_zero = match strategy {
        GapStrategy::Random => false,
        GapStrategy::DetZero => true,
        GapStrategy::Mixed => trial % 2 == 1,
    };
    if det_zero {
        let (x, y, t) = (draw(), draw(), draw());
        vec![vec![x.clone(), y.clone()], vec![&t * x, t * y]]
    } else {
        vec![vec![draw(), draw()], vec![draw(), draw()]]
    }
}

/// Looks for 2×2 matrices where `ω̂₂(A)` exceeds `max(3, ω̂₁(A))` at a
/// common height. Finite-height evidence only.
pub fn question61_search(opts: &GapSearchOptions) -> Result<GapSearchReport> {
    let search = SearchOptions { start_height: 1, budget: opts.budget.clone() };
    let mut best: Option<GapCandidate> = None;
    let mut indeterminate = 0;
    let mut complete = true;
    let mut trials_run = 0;
    for trial in 0..opts.trials {
        let p = AffineSubspaceParam::new(gap_trial_matrix(opts.strategy, trial, opts.bits, opts.seed))?;
        let curve1 = omega_j_records(&p, 1, opts.height, &search)?;
        let curve2 = omega_j_records(&p, 2, opts.height, &search)?;
        trials_run += 1;
        if !curve1.complete || !curve2.complete {
            complete = false;
            break;
        }
        let (omega1, omega2) = (curve1.estimate(), curve2.estimate());
        let gap = gap_of(omega1, omega2);
        if gap.is_none() {
            indeterminate += 1;
        }
        let cand = GapCandidate { trial, param: p, omega1, omega2, gap, curve1, curve2 };
        let replace = match (&best, gap) {
            (None, _) => true,
            (Some(b), Some(g)) => b.gap.is_none_or(|bg| g > bg),
            (Some(_), None) => false,
        };
        if replace {
            best = Some(cand);
        }
    }
    Ok(GapSearchReport { strategy: opts.strategy, height: opts.height, trials_run, indeterminate, complete, best })
}
