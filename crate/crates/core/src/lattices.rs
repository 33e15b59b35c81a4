//! Integer sublattices of ℤ^k and real lattices with exact rational bases:
//! Hermite normal form, Plücker vectors, covolumes, shortest vectors and the
//! Mahler compacta `K_ε`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exterior::Multivector;
use crate::linalg::{self, Matrix};
use crate::rational::Q;

pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

/// Row-style Hermite normal form basis of a subgroup of ℤ^k.
///
/// Pivots are positive, entries above a pivot lie in `[0, pivot)`, entries
/// left of a row's pivot vanish.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SublatticeBasis {
    ambient_dim: usize,
    rows: Vec<Vec<BigInt>>,
}

impl Serialize for SublatticeBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
    }
}

impl SublatticeBasis {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn rows_q(&self) -> Matrix {
        self.rows.iter().map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect()).collect()
    }

    /// Wedge of the rows; canonical because the basis is.
    pub fn plucker(&self) -> Multivector {
        let mut w = Multivector::scalar(self.ambient_dim, Q::one());
        for r in self.rows_q() {
            w = w.wedge(&Multivector::vector(&r)).expect("same ambient dimension");
        }
        w
    }

    /// `Γ = Γ_ℝ ∩ ℤ^k` iff the maximal minors are coprime.
    pub fn is_primitive(&self) -> bool {
        let w = self.plucker();
        let g = w.terms().fold(BigInt::zero(), |g, (_, c)| g.gcd(c.numer()));
        g.is_one()
    }

    pub fn max_entry(&self) -> BigInt {
        self.rows.iter().flatten().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
    }

    pub fn covolume_sq(&self) -> Q {
        self.plucker().euclid_norm_sq()
    }
}

pub fn hnf_i64(rows: &[Vec<i64>]) -> Result<SublatticeBasis> {
    hnf(&rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Canonical basis of the subgroup generated by independent integer rows.
pub fn hnf(rows: &[Vec<BigInt>]) -> Result<SublatticeBasis> {
    let k = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch(rows.iter().map(|r| r.len()).max().unwrap_or(0), k));
    }
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let n = m.len();
    let mut r = 0;
    for c in 0..k {
        if r == n {
            break;
        }
        loop {
            let best = (r..n)
                .filter(|&i| !m[i][c].is_zero())
                .min_by(|&a, &b| m[a][c].abs().cmp(&m[b][c].abs()));
            let Some(p) = best else { break };
            m.swap(r, p);
            let mut done = true;
            for i in r + 1..n {
                if m[i][c].is_zero() {
                    continue;
                }
                let f = m[i][c].div_floor(&m[r][c]);
                for col in c..k {
                    let sub = &f * &m[r][col];
                    m[i][col] -= sub;
                }
                if !m[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if m[r][c].is_zero() {
            continue;
        }
        if m[r][c].is_negative() {
            for x in m[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            let f = m[i][c].div_floor(&m[r][c]);
            if f.is_zero() {
                continue;
            }
            for col in c..k {
                let sub = &f * &m[r][col];
                m[i][col] -= sub;
            }
        }
        r += 1;
    }
    if r < n {
        return Err(Error::DependentRows);
    }
    Ok(SublatticeBasis { ambient_dim: k, rows: m })
}

/// Basis of `{x ∈ ℤ^r : Σ x_i g_i = 0}` for integer rows `g_1..g_r`, by
/// unimodular row reduction of `[G | I]`.
pub fn integer_row_kernel(g: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let r = g.len();
    let cols = g.first().map_or(0, |row| row.len());
    let mut m: Vec<(Vec<BigInt>, Vec<BigInt>)> = g
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut id = vec![BigInt::zero(); r];
            id[i] = BigInt::one();
            (row.clone(), id)
        })
        .collect();
    let mut top = 0;
    for c in 0..cols {
        loop {
            let Some(p) = (top..r).filter(|&i| !m[i].0[c].is_zero()).min_by(|&a, &b| m[a].0[c].abs().cmp(&m[b].0[c].abs()))
            else {
                break;
            };
            m.swap(top, p);
            let mut done = true;
            for i in top + 1..r {
                if m[i].0[c].is_zero() {
                    continue;
                }
                let f = m[i].0[c].div_floor(&m[top].0[c]);
                let (head, tail) = m.split_at_mut(i);
                let pivot = &head[top];
                for (x, y) in tail[0].0.iter_mut().zip(&pivot.0) {
                    *x -= &f * y;
                }
                for (x, y) in tail[0].1.iter_mut().zip(&pivot.1) {
                    *x -= &f * y;
                }
                if !tail[0].0[c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if top < r && !m[top].0[c].is_zero() {
            top += 1;
        }
    }
    m.into_iter().skip(top).map(|(_, t)| t).collect()
}

/// A subgroup whose Plücker vector is `±w`, for a nonzero integral
/// decomposable `w`: the saturated subgroup `{x : x ∧ w = 0}` with one basis
/// vector stretched by the content of `w`.
pub fn subgroup_from_plucker(w: &Multivector) -> Result<SublatticeBasis> {
    if w.is_zero() || !w.is_integral() {
        return Err(Error::Precondition("expected a nonzero integral multivector".into()));
    }
    if !w.is_decomposable() {
        return Err(Error::NotDecomposable("witness is not a wedge of vectors".into()));
    }
    let k = w.dim();
    let targets = crate::exterior::IndexSet::all_of_size(k, w.degree() + 1);
    let g: Vec<Vec<BigInt>> = (0..k)
        .map(|i| {
            let x = Multivector::e(k, &[i]).wedge(w).expect("same ambient dimension");
            targets.iter().map(|&t| x.coeff(t).to_integer()).collect()
        })
        .collect();
    let mut prim = hnf(&integer_row_kernel(&g))?;
    let wp = prim.plucker();
    let (set, c) = w.terms().next().expect("nonzero");
    let mult = (c / wp.coeff(*set)).to_integer().abs();
    if !mult.is_one() {
        let mut rows = prim.rows.clone();
        for x in rows[0].iter_mut() {
            *x *= &mult;
        }
        prim = hnf(&rows)?;
    }
    Ok(prim)
}

/// Every rank-`j` subgroup of ℤ^k whose HNF entries are bounded by `h` in
/// absolute value, each exactly once, in a fixed order.
pub fn enumerate_subgroups(k: usize, j: usize, h: u64, primitive_only: bool) -> Vec<SublatticeBasis> {
    let mut out = Vec::new();
    for_each_subgroup(k, j, h, |b| {
        if !primitive_only || b.is_primitive() {
            out.push(b.clone());
        }
    });
    out
}

pub fn for_each_subgroup(k: usize, j: usize, h: u64, mut f: impl FnMut(&SublatticeBasis)) {
    assert!(j <= k);
    let h = h as i64;
    for pivots in crate::exterior::IndexSet::all_of_size(k, j) {
        let piv: Vec<usize> = pivots.indices().collect();
        let mut rows = vec![vec![0i64; k]; j];
        enumerate_rows(&piv, 0, h, k, &mut rows, &mut f);
    }
}

fn enumerate_rows(
    piv: &[usize],
    r: usize,
    h: i64,
    k: usize,
    rows: &mut Vec<Vec<i64>>,
    f: &mut impl FnMut(&SublatticeBasis),
) {
    // Rows are filled bottom-up so that pivot values below are known when
    // the reduced entries above them are chosen.
    let j = piv.len();
    if r == j {
        let basis = SublatticeBasis {
            ambient_dim: k,
            rows: rows.iter().map(|row| row.iter().map(|&x| BigInt::from(x)).collect()).collect(),
        };
        f(&basis);
        return;
    }
    let row = j - 1 - r;
    let free: Vec<usize> = (piv[row] + 1..k).collect();
    for pv in 1..=h {
        let ranges: Vec<(i64, i64)> = free
            .iter()
            .map(|&c| match piv.iter().position(|&p| p == c) {
                Some(lower) => (0, rows[lower][c] - 1),
                None => (-h, h),
            })
            .collect();
        rows[row] = vec![0; k];
        rows[row][piv[row]] = pv;
        let mut vals: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            continue;
        }
        'odometer: loop {
            for (c, v) in free.iter().zip(&vals) {
                rows[row][*c] = *v;
            }
            enumerate_rows(piv, r + 1, h, k, rows, f);
            let mut pos = vals.len();
            loop {
                if pos == 0 {
                    break 'odometer;
                }
                pos -= 1;
                if vals[pos] < ranges[pos].1 {
                    vals[pos] += 1;
                    for q in pos + 1..vals.len() {
                        vals[q] = ranges[q].0;
                    }
                    continue 'odometer;
                }
            }
        }
    }
    rows[row] = vec![0; k];
}

/// Lattice (or discrete subgroup) of ℝ^k spanned by exact rational rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealLattice {
    basis: Matrix,
}

impl RealLattice {
    pub fn new(basis: Matrix) -> Result<Self> {
        let k = basis.first().map_or(0, |r| r.len());
        if basis.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch(basis.len(), k));
        }
        if linalg::rank(&basis) < basis.len() {
            return Err(Error::DependentRows);
        }
        Ok(RealLattice { basis })
    }

    pub fn standard(k: usize) -> Self {
        RealLattice { basis: linalg::identity(k) }
    }

    pub fn from_subgroup(g: &SublatticeBasis) -> Self {
        RealLattice { basis: g.rows_q() }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.first().map_or(0, |r| r.len())
    }

    /// Image under `v ↦ g v`.
    pub fn transform(&self, g: &Matrix) -> Result<Self> {
        if g.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(g.len(), self.ambient_dim()));
        }
        RealLattice::new(self.basis.iter().map(|r| linalg::apply(g, r)).collect())
    }

    pub fn gram(&self) -> Matrix {
        linalg::gram(&self.basis)
    }

    pub fn covolume_sq(&self) -> Q {
        linalg::determinant(&self.gram())
    }

    pub fn shortest_vector(&self, budget: u64) -> Result<ShortVector> {
        let red = reduce(&self.basis);
        let gram = linalg::gram(&red.basis);
        let (coeffs, norm_sq, nodes) = fincke_pohst_shortest(&gram, budget)?;
        let coeffs = mul_row(&coeffs, &red.transform);
        let vector = combine_rows(&coeffs, &self.basis);
        Ok(ShortVector { coeffs, vector, norm_sq, nodes })
    }

    /// All nonzero vectors with squared norm `≤ bound`, up to sign.
    pub fn short_vectors(&self, bound: &Q, budget: u64) -> Result<Vec<ShortVector>> {
        let red = reduce(&self.basis);
        let gram = linalg::gram(&red.basis);
        let found = fincke_pohst_all(&gram, bound, budget)?;
        Ok(found
            .into_iter()
            .map(|(c, norm_sq)| {
                let coeffs = mul_row(&c, &red.transform);
                let vector = combine_rows(&coeffs, &self.basis);
                ShortVector { coeffs, vector, norm_sq, nodes: 0 }
            })
            .collect())
    }

    pub fn in_k_eps(&self, eps: &Q, budget: u64) -> Result<bool> {
        let sv = self.shortest_vector(budget)?;
        Ok(sv.norm_sq >= eps * eps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortVector {
    /// Coordinates with respect to the lattice's own basis.
    pub coeffs: Vec<BigInt>,
    pub vector: Vec<Q>,
    pub norm_sq: Q,
    pub nodes: u64,
}

/// `λ₁(gΓ) ≤ 2^j ‖gΓ‖^{1/j}`, checked as `λ₁^{2j} ≤ 4^{j²} ‖gΓ‖²`.
pub fn minkowski_check(gamma: &SublatticeBasis, g: &Matrix, budget: u64) -> Result<bool> {
    let l = RealLattice::from_subgroup(gamma).transform(g)?;
    let j = l.rank();
    let lambda_sq = l.shortest_vector(budget)?.norm_sq;
    let lhs = num_traits::pow(lambda_sq, j);
    let rhs = Q::from_integer(BigInt::from(4).pow((j * j) as u32)) * l.covolume_sq();
    Ok(lhs <= rhs)
}

fn mul_row(c: &[BigInt], u: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = u.first().map_or(0, |r| r.len());
    (0..n).map(|col| c.iter().zip(u).fold(BigInt::zero(), |acc, (x, row)| acc + x * &row[col])).collect()
}

fn combine_rows(c: &[BigInt], rows: &Matrix) -> Vec<Q> {
    let k = rows.first().map_or(0, |r| r.len());
    (0..k)
        .map(|col| c.iter().zip(rows).fold(Q::zero(), |acc, (x, row)| acc + Q::from_integer(x.clone()) * &row[col]))
        .collect()
}

struct Reduced {
    basis: Matrix,
    /// Integer unimodular `U` with `basis = U · original`.
    transform: Vec<Vec<BigInt>>,
}

/// Floating LLL (δ = 0.99) as preprocessing; the transform is applied
/// exactly, so the result spans the same lattice whatever the rounding.
fn reduce(basis: &Matrix) -> Reduced {
    let n = basis.len();
    let ident = || (0..n).map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect()).collect();
    let mut b: Vec<Vec<f64>> = basis.iter().map(|r| r.iter().map(crate::rational::to_f64).collect()).collect();
    if b.iter().flatten().any(|x| !x.is_finite()) {
        return Reduced { basis: basis.clone(), transform: ident() };
    }
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut k = 1;
    let mut iters = 0;
    let mut ok = true;
    while k < n && iters < 10_000 && ok {
        iters += 1;
        // Gram-Schmidt from scratch: dimensions here are tiny.
        let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut mu = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut v = b[i].clone();
            for j in 0..i {
                let d = dot(&bstar[j], &bstar[j]);
                mu[i][j] = if d > 0.0 { dot(&b[i], &bstar[j]) / d } else { 0.0 };
                for (x, y) in v.iter_mut().zip(&bstar[j]) {
                    *x -= mu[i][j] * y;
                }
            }
            bstar.push(v);
        }
        for j in (0..k).rev() {
            let r = mu[k][j].round();
            if r != 0.0 {
                let ri = r as i64;
                if r.abs() > 1e15 {
                    ok = false;
                    break;
                }
                for c in 0..b[k].len() {
                    b[k][c] -= r * b[j][c];
                }
                for c in 0..n {
                    match u[j][c].checked_mul(ri).and_then(|p| u[k][c].checked_sub(p)) {
                        Some(v) => u[k][c] = v,
                        None => ok = false,
                    }
                }
                for l in 0..=j {
                    mu[k][l] -= r * if l == j { 1.0 } else { mu[j][l] };
                }
            }
        }
        if !ok {
            break;
        }
        let bk = dot(&bstar[k], &bstar[k]);
        let bk1 = dot(&bstar[k - 1], &bstar[k - 1]);
        if bk >= (0.99 - mu[k][k - 1] * mu[k][k - 1]) * bk1 {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    if !ok {
        return Reduced { basis: basis.clone(), transform: ident() };
    }
    let transform: Vec<Vec<BigInt>> = u.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let reduced: Matrix = transform
        .iter()
        .map(|row| combine_rows(row, basis))
        .collect();
    Reduced { basis: reduced, transform }
}

/// Float Cholesky data `Q(x) = Σ_i d_i (x_i + Σ_{j>i} m_ij x_j)²`.
fn cholesky(gram: &Matrix) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = gram.len();
    let g: Vec<Vec<f64>> = gram.iter().map(|r| r.iter().map(crate::rational::to_f64).collect()).collect();
    let mut d = vec![0.0; n];
    let mut m = vec![vec![0.0; n]; n];
    // Decompose from the last coordinate so enumeration runs top-down.
    for i in (0..n).rev() {
        let mut s = g[i][i];
        for l in i + 1..n {
            s -= d[l] * m[l][i] * m[l][i];
        }
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        d[i] = s;
        for j in 0..i {
            let mut t = g[i][j];
            for l in i + 1..n {
                t -= d[l] * m[l][i] * m[l][j];
            }
            m[i][j] = t / s;
        }
    }
    // m[i][j] (j < i) couples x_j into row i; rewrite as coefficient of x_i
    // in the square for coordinate j.
    let mut coup = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            coup[j][i] = m[i][j];
        }
    }
    Some((d, coup))
}

fn quad(gram: &Matrix, x: &[i64]) -> Q {
    let mut s = Q::zero();
    for (i, row) in gram.iter().enumerate() {
        if x[i] == 0 {
            continue;
        }
        let mut t = Q::zero();
        for (j, g) in row.iter().enumerate() {
            if x[j] != 0 {
                t += g * Q::from_integer(BigInt::from(x[j]));
            }
        }
        s += t * Q::from_integer(BigInt::from(x[i]));
    }
    s
}

/// Enumerates integer `x ≠ 0` with `xᵀGx ≤ bound` (float pruning widened by
/// a relative margin, every survivor checked exactly). `visit` returns a new
/// bound or `None` to keep the current one.
fn fincke_pohst<F: FnMut(&[i64], Q) -> Option<Q>>(gram: &Matrix, mut bound: Q, budget: u64, mut visit: F) -> Result<u64> {
    let n = gram.len();
    let Some((d, coup)) = cholesky(gram) else {
        return Err(Error::Precondition("Gram matrix not positive definite in floating point".into()));
    };
    let mut x = vec![0i64; n];
    let mut nodes = 0u64;
    let widen = |b: &Q| {
        let f = crate::rational::to_f64(b);
        f * (1.0 + 1e-9) + 1e-300
    };
    let mut bf = widen(&bound);

    fn rec<F: FnMut(&[i64], Q) -> Option<Q>>(
        i: usize,
        rem: f64,
        x: &mut Vec<i64>,
        d: &[f64],
        coup: &[Vec<f64>],
        gram: &Matrix,
        bound: &mut Q,
        bf: &mut f64,
        widen: &dyn Fn(&Q) -> f64,
        nodes: &mut u64,
        budget: u64,
        visit: &mut F,
    ) -> Result<()> {
        let n = x.len();
        let c: f64 = -(i + 1..n).map(|j| coup[i][j] * x[j] as f64).sum::<f64>();
        let r = (rem.max(0.0) / d[i]).sqrt() * (1.0 + 1e-9) + 1e-9;
        let lo = (c - r).ceil();
        let hi = (c + r).floor();
        if !(lo.is_finite() && hi.is_finite()) || hi - lo > 1e9 {
            return Err(Error::Overflow("shortest-vector enumeration range"));
        }
        let mut v = lo as i64;
        while v as f64 <= hi {
            *nodes += 1;
            if *nodes > budget {
                return Err(Error::BudgetExceeded(*nodes));
            }
            x[i] = v;
            let t = v as f64 - c;
            let used = d[i] * t * t;
            // `rem` may shrink while iterating when the bound improves.
            let consumed: f64 = (i + 1..n)
                .map(|l| {
                    let cl: f64 = x[l] as f64 + (l + 1..n).map(|j| coup[l][j] * x[j] as f64).sum::<f64>();
                    d[l] * cl * cl
                })
                .sum();
            let rem_now = *bf - consumed;
            if used <= rem_now * (1.0 + 1e-9) + 1e-12 * *bf {
                if i == 0 {
                    if x.iter().any(|&e| e != 0) {
                        let val = quad(gram, x);
                        if val <= *bound {
                            if let Some(nb) = visit(x, val) {
                                *bound = nb;
                                *bf = widen(bound);
                            }
                        }
                    }
                } else {
                    rec(i - 1, rem_now - used, x, d, coup, gram, bound, bf, widen, nodes, budget, visit)?;
                }
            }
            v += 1;
        }
        x[i] = 0;
        Ok(())
    }

    if n == 0 {
        return Ok(0);
    }
    let start = bf;
    rec(n - 1, start, &mut x, &d, &coup, gram, &mut bound, &mut bf, &widen, &mut nodes, budget, &mut visit)?;
    Ok(nodes)
}

fn fincke_pohst_shortest(gram: &Matrix, budget: u64) -> Result<(Vec<BigInt>, Q, u64)> {
    let n = gram.len();
    let (mut best_i, mut best) = (0, gram[0][0].clone());
    for i in 1..n {
        if gram[i][i] < best {
            best = gram[i][i].clone();
            best_i = i;
        }
    }
    let mut best_x: Vec<i64> = (0..n).map(|i| (i == best_i) as i64).collect();
    let nodes = fincke_pohst(gram, best.clone(), budget, |x, val| {
        if val < best || (val == best && canonical_less(x, &best_x)) {
            best = val.clone();
            best_x = x.to_vec();
            Some(val)
        } else {
            None
        }
    })?;
    Ok((best_x.iter().map(|&v| BigInt::from(v)).collect(), best, nodes))
}

/// Sign-normalized lexicographic preference used to break exact ties.
fn canonical_less(a: &[i64], b: &[i64]) -> bool {
    let norm = |x: &[i64]| -> Vec<i64> {
        let s = x.iter().find(|&&v| v != 0).map_or(1, |v| v.signum());
        x.iter().map(|v| v * s).collect()
    };
    norm(a) < norm(b)
}

fn fincke_pohst_all(gram: &Matrix, bound: &Q, budget: u64) -> Result<Vec<(Vec<BigInt>, Q)>> {
    let mut out: Vec<(Vec<i64>, Q)> = Vec::new();
    fincke_pohst(gram, bound.clone(), budget, |x, val| {
        // keep one representative of ±x
        if x.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push((x.to_vec(), val));
        }
        None
    })?;
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out.into_iter().map(|(x, v)| (x.into_iter().map(BigInt::from).collect(), v)).collect())
}

/// Squared length of the shortest vector of the planar lattice spanned by
/// `b1`, `b2`, by Lagrange–Gauss reduction in double precision.
pub fn gauss_shortest_sq_f64(mut b1: [f64; 2], mut b2: [f64; 2]) -> f64 {
    let n = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    if n(b1) > n(b2) {
        std::mem::swap(&mut b1, &mut b2);
    }
    for _ in 0..200 {
        let mu = ((b1[0] * b2[0] + b1[1] * b2[1]) / n(b1)).round();
        b2 = [b2[0] - mu * b1[0], b2[1] - mu * b1[1]];
        if n(b2) >= n(b1) {
            break;
        }
        std::mem::swap(&mut b1, &mut b2);
    }
    n(b1)
}

/// Smallest `x ≥ 0` with `x ≥ v`, as i64 (used for range checks).
pub fn ceil_i64(x: &Q) -> Option<i64> {
    x.ceil().to_integer().to_i64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn z(rows: &[&[i64]]) -> SublatticeBasis {
        hnf_i64(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hnf_examples() {
        assert_eq!(z(&[&[2, 0], &[0, 3]]).rows(), z(&[&[2, 0], &[0, 3]]).rows());
        assert_eq!(z(&[&[2, 0], &[0, 3]]).rows()[0], vec![BigInt::from(2), BigInt::from(0)]);
        assert_eq!(z(&[&[1, 1], &[0, 2]]), z(&[&[1, 3], &[0, 2]]));
        assert_eq!(z(&[&[-2, -4]]), z(&[&[2, 4]]));
        assert!(hnf_i64(&[vec![1, 2], vec![2, 4]]).is_err());
    }

    #[test]
    fn primitivity_and_plucker() {
        assert!(z(&[&[1, 0, 0], &[0, 1, 0]]).is_primitive());
        assert!(!z(&[&[2, 0]]).is_primitive());
        assert!(z(&[&[1, 2, 3]]).is_primitive());
        let w = z(&[&[1, 0, 2], &[0, 1, 3]]).plucker();
        let expected = Multivector::parse_text(3, 2, "0,1:1\n0,2:3\n1,2:-2").unwrap();
        assert_eq!(w, expected);
        assert_eq!(z(&[&[1, 1], &[0, 1]]).plucker(), Multivector::e(2, &[0, 1]));
    }

    #[test]
    fn enumeration_small() {
        let l = enumerate_subgroups(2, 1, 1, false);
        let rows: Vec<Vec<i64>> = l.iter().map(|b| b.rows()[0].iter().map(|x| x.to_i64().unwrap()).collect()).collect();
        let mut sorted = rows.clone();
        sorted.sort();
        assert_eq!(sorted, vec![vec![0, 1], vec![1, -1], vec![1, 0], vec![1, 1]]);
        assert_eq!(enumerate_subgroups(2, 2, 1, false).len(), 1);
    }

    #[test]
    fn covolumes() {
        assert_eq!(RealLattice::standard(4).covolume_sq(), qi(1));
        let l = RealLattice::new(vec![vec![qi(2), qi(0)], vec![qi(0), qi(3)]]).unwrap();
        assert_eq!(l.covolume_sq(), qi(36));
    }

    #[test]
    fn shortest_examples() {
        let sv = RealLattice::standard(2).shortest_vector(DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(sv.norm_sq, qi(1));
        let l = RealLattice::new(vec![vec![q(1, 4), qi(0)], vec![qi(0), qi(4)]]).unwrap();
        let sv = l.shortest_vector(DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(sv.norm_sq, q(1, 16));
        assert_eq!(sv.vector, vec![q(1, 4), qi(0)]);
        assert!(RealLattice::standard(2).in_k_eps(&qi(1), 1000).unwrap());
        assert!(!RealLattice::standard(2).in_k_eps(&q(101, 100), 1000).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let l = RealLattice::standard(6);
        assert!(matches!(l.shortest_vector(3), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn gauss_matches_exact() {
        let g = gauss_shortest_sq_f64([1.0, 0.0], [0.5, 3.0]);
        assert!((g - 1.0).abs() < 1e-12);
    }
}
