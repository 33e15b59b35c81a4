//! Exact exterior algebra Λ(ℚ^k) in the lexicographic `e_I` basis.
//!
//! Index 0 plays the role of the expanding direction `e_0`; `V_0` is the
//! span of `e_1, …, e_{k-1}` and, for a split parameter `s`, `V_•` is the
//! span of `e_{s+1}, …, e_{k-1}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{format_rational, parse_rational, Q};

pub const MAX_DIM: usize = 31;

/// Strictly increasing set of indices below the ambient dimension, stored as
/// a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct IndexSet(u32);

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet(0)
    }

    pub fn from_mask(mask: u32) -> Self {
        IndexSet(mask)
    }

    /// Builds a set from distinct indices, returning it with the sign of
    /// the permutation that sorts them.
    pub fn sorted_with_sign(indices: &[usize]) -> Option<(Self, i32)> {
        let mut mask = 0u32;
        let mut sign = 1;
        for (pos, &i) in indices.iter().enumerate() {
            assert!(i < MAX_DIM);
            if mask & (1 << i) != 0 {
                return None;
            }
            mask |= 1 << i;
            let inversions = indices[..pos].iter().filter(|&&p| p > i).count();
            if inversions % 2 == 1 {
                sign = -sign;
            }
        }
        Some((IndexSet(mask), sign))
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        let (set, _) = Self::sorted_with_sign(indices).expect("repeated index");
        set
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let m = self.0;
        (0..32).filter(move |i| m & (1 << i) != 0)
    }

    pub fn min(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn max_index(self) -> Option<usize> {
        (self.0 != 0).then(|| 31 - self.0.leading_zeros() as usize)
    }

    pub fn insert(self, i: usize) -> Self {
        IndexSet(self.0 | (1 << i))
    }

    pub fn remove(self, i: usize) -> Self {
        IndexSet(self.0 & !(1 << i))
    }

    pub fn is_disjoint(self, other: IndexSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Number of elements strictly below `i`.
    pub fn count_below(self, i: usize) -> usize {
        (self.0 & ((1u32 << i) - 1)).count_ones() as usize
    }

    /// Sign `ε` with `e_I ∧ e_J = ε e_{I∪J}` for disjoint sets.
    pub fn wedge_sign(self, other: IndexSet) -> i32 {
        let mut inversions = 0usize;
        for b in other.indices() {
            inversions += (self.0 >> (b + 1)).count_ones() as usize;
        }
        if inversions.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// All subsets of `{0..dim}` of the given size, in lexicographic order.
    pub fn all_of_size(dim: usize, size: usize) -> Vec<IndexSet> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(size);
        fn rec(start: usize, dim: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<IndexSet>) {
            if cur.len() == size {
                out.push(IndexSet::from_indices(cur));
                return;
            }
            for i in start..dim {
                if dim - i < size - cur.len() {
                    break;
                }
                cur.push(i);
                rec(i + 1, dim, size, cur, out);
                cur.pop();
            }
        }
        rec(0, dim, size, &mut cur, &mut out);
        out
    }

    /// Subsets of size `size` drawn from `{lo..hi}` (half open), lexicographic.
    pub fn all_in_range(lo: usize, hi: usize, size: usize) -> Vec<IndexSet> {
        if hi < lo {
            return if size == 0 { vec![IndexSet::empty()] } else { Vec::new() };
        }
        IndexSet::all_of_size(hi - lo, size)
            .into_iter()
            .map(|s| IndexSet(s.0 << lo))
            .collect()
    }
}

impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.indices().cmp(other.indices())
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl serde::Serialize for Multivector {
    /// `{"0,1": "3/4", ...}` in basis order.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(self.coeffs.iter().map(|(k, v)| (k.to_string(), format_rational(v))))
    }
}

/// Homogeneous element of Λ^degree(ℚ^dim) with a sparse coefficient map.
/// Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Multivector {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<IndexSet, Q>,
}

impl Multivector {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim <= MAX_DIM);
        Multivector { dim, degree, coeffs: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, x: Q) -> Self {
        let mut m = Multivector::zero(dim, 0);
        m.add_term(IndexSet::empty(), x);
        m
    }

    /// `coeff · e_{i_1} ∧ … ∧ e_{i_j}`; indices may be unsorted.
    pub fn basis(dim: usize, indices: &[usize], coeff: Q) -> Self {
        let mut m = Multivector::zero(dim, indices.len());
        if let Some((set, sign)) = IndexSet::sorted_with_sign(indices) {
            assert!(set.max_index().is_none_or(|i| i < dim));
            m.add_term(set, if sign < 0 { -coeff } else { coeff });
        }
        m
    }

    pub fn e(dim: usize, indices: &[usize]) -> Self {
        Multivector::basis(dim, indices, Q::one())
    }

    pub fn vector(coords: &[Q]) -> Self {
        let mut m = Multivector::zero(coords.len(), 1);
        for (i, c) in coords.iter().enumerate() {
            m.add_term(IndexSet::from_mask(1 << i), c.clone());
        }
        m
    }

    pub fn from_terms(dim: usize, degree: usize, terms: impl IntoIterator<Item = (IndexSet, Q)>) -> Result<Self> {
        let mut m = Multivector::zero(dim, degree);
        for (set, c) in terms {
            if set.len() != degree {
                return Err(Error::DegreeMismatch(set.len(), degree));
            }
            if set.max_index().is_some_and(|i| i >= dim) {
                return Err(Error::DimensionMismatch(set.max_index().unwrap() + 1, dim));
            }
            m.add_term(set, c);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&IndexSet, &Q)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, set: IndexSet) -> Q {
        self.coeffs.get(&set).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add_term(&mut self, set: IndexSet, c: Q) {
        debug_assert_eq!(set.len(), self.degree);
        if c.is_zero() {
            return;
        }
        let remove = match self.coeffs.get_mut(&set) {
            Some(x) => {
                *x += c;
                x.is_zero()
            }
            None => {
                self.coeffs.insert(set, c);
                false
            }
        };
        if remove {
            self.coeffs.remove(&set);
        }
    }

    fn check_same(&self, other: &Multivector) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(self.degree, other.degree));
        }
        Ok(())
    }

    pub fn add(&self, other: &Multivector) -> Result<Multivector> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (s, c) in &other.coeffs {
            out.add_term(*s, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Multivector) -> Result<Multivector> {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, x: &Q) -> Multivector {
        if x.is_zero() {
            return Multivector::zero(self.dim, self.degree);
        }
        Multivector {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(s, c)| (*s, c * x)).collect(),
        }
    }

    pub fn neg(&self) -> Multivector {
        self.scale(&-Q::one())
    }

    /// Exterior product. Degree overflow yields the zero multivector.
    pub fn wedge(&self, other: &Multivector) -> Result<Multivector> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let degree = self.degree + other.degree;
        let mut out = Multivector::zero(self.dim, degree);
        if degree > self.dim {
            return Ok(out);
        }
        for (a, x) in &self.coeffs {
            for (b, y) in &other.coeffs {
                if !a.is_disjoint(*b) {
                    continue;
                }
                let prod = x * y;
                let set = IndexSet(a.0 | b.0);
                out.add_term(set, if a.wedge_sign(*b) < 0 { -prod } else { prod });
            }
        }
        Ok(out)
    }

    /// Euclidean pairing making the `e_I` basis orthonormal.
    pub fn inner(&self, other: &Multivector) -> Result<Q> {
        self.check_same(other)?;
        let (small, big) = if self.coeffs.len() <= other.coeffs.len() { (self, other) } else { (other, self) };
        Ok(small
            .coeffs
            .iter()
            .filter_map(|(s, c)| big.coeffs.get(s).map(|d| c * d))
            .fold(Q::zero(), |acc, x| acc + x))
    }

    pub fn filter(&self, keep: impl Fn(IndexSet) -> bool) -> Multivector {
        Multivector {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().filter(|(s, _)| keep(**s)).map(|(s, c)| (*s, c.clone())).collect(),
        }
    }

    /// Orthogonal projection onto Λ(V_0): terms avoiding index 0.
    pub fn project_v0(&self) -> Multivector {
        self.filter(|s| !s.contains(0))
    }

    /// Orthogonal projection onto Λ(V_•) with `V_• = span(e_{s+1}, …)`.
    pub fn project_vbullet(&self, s: usize) -> Multivector {
        let low = if s + 1 >= 32 { u32::MAX } else { (1u32 << (s + 1)) - 1 };
        self.filter(|set| set.mask() & low == 0)
    }

    /// The contraction map `c`: component `i` is
    /// `Σ_J ⟨e_i ∧ e_J, w⟩ e_J` over `J ⊂ {1, …, k-1}`, `#J = j - 1`.
    pub fn contract(&self) -> Result<ContractionImage> {
        if self.degree == 0 {
            return Err(Error::InvalidDegree { degree: 0, ambient: self.dim });
        }
        let mut components = vec![Multivector::zero(self.dim, self.degree - 1); self.dim];
        for (set, c) in &self.coeffs {
            for i in set.indices() {
                let rest = set.remove(i);
                if rest.contains(0) {
                    continue;
                }
                // e_i ∧ e_rest = (-1)^{#rest below i} e_set
                let sign_neg = rest.count_below(i) % 2 == 1;
                components[i].add_term(rest, if sign_neg { -c.clone() } else { c.clone() });
            }
        }
        Ok(ContractionImage { components })
    }

    pub fn sup_norm(&self) -> Q {
        self.coeffs.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }

    pub fn euclid_norm_sq(&self) -> Q {
        self.coeffs.values().fold(Q::zero(), |acc, c| acc + c * c)
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.values().all(|c| c.is_integer())
    }

    /// Relabels indices through `map` (must be injective into `new_dim`).
    pub fn reindex(&self, new_dim: usize, map: impl Fn(usize) -> usize) -> Multivector {
        let mut out = Multivector::zero(new_dim, self.degree);
        for (set, c) in &self.coeffs {
            let idx: Vec<usize> = set.indices().map(&map).collect();
            let (s, sign) = IndexSet::sorted_with_sign(&idx).expect("injective relabeling");
            out.add_term(s, if sign < 0 { -c.clone() } else { c.clone() });
        }
        out
    }

    /// Image under the linear map `g` (acting on column vectors) extended to
    /// the exterior power: `e_I ↦ g e_{i_1} ∧ … ∧ g e_{i_j}`.
    pub fn apply_linear(&self, g: &linalg::Matrix) -> Result<Multivector> {
        if g.len() != self.dim {
            return Err(Error::DimensionMismatch(g.len(), self.dim));
        }
        let cols: Vec<Multivector> = (0..self.dim)
            .map(|c| Multivector::vector(&g.iter().map(|row| row[c].clone()).collect::<Vec<_>>()))
            .collect();
        let mut out = Multivector::zero(self.dim, self.degree);
        for (set, c) in &self.coeffs {
            let mut acc = Multivector::scalar(self.dim, c.clone());
            for i in set.indices() {
                acc = acc.wedge(&cols[i])?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Decomposability test: `w ≠ 0` is a wedge of `j` vectors iff the
    /// annihilator `{v : v ∧ w = 0}` has dimension exactly `j`.
    pub fn is_decomposable(&self) -> bool {
        if self.is_zero() {
            return false;
        }
        if self.degree <= 1 || self.degree + 1 >= self.dim {
            return true;
        }
        self.annihilator().len() == self.degree
    }

    /// Basis of `{v ∈ ℚ^k : v ∧ w = 0}`.
    pub fn annihilator(&self) -> Vec<Vec<Q>> {
        let targets = IndexSet::all_of_size(self.dim, self.degree + 1);
        // Column i of the map is e_i ∧ w expressed in the targets.
        let mut m: linalg::Matrix = vec![vec![Q::zero(); self.dim]; targets.len()];
        let pos: BTreeMap<IndexSet, usize> = targets.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        for i in 0..self.dim {
            let ei = IndexSet::from_mask(1 << i);
            for (set, c) in &self.coeffs {
                if set.contains(i) {
                    continue;
                }
                let t = set.insert(i);
                let sign = ei.wedge_sign(*set);
                let row = pos[&t];
                let add = if sign < 0 { -c.clone() } else { c.clone() };
                m[row][i] += add;
            }
        }
        linalg::kernel(&m, self.dim)
    }

    /// Vectors `v_1, …, v_j` with `v_1 ∧ … ∧ v_j = w`, when decomposable.
    pub fn factor(&self) -> Result<Vec<Vec<Q>>> {
        if !self.is_decomposable() {
            return Err(Error::NotDecomposable(self.to_text()));
        }
        let mut vs: Vec<Vec<Q>> = if self.degree == 0 {
            return Ok(Vec::new());
        } else if self.degree == 1 {
            vec![(0..self.dim).map(|i| self.coeff(IndexSet::from_mask(1 << i))).collect()]
        } else {
            self.annihilator()
        };
        let mut prod = Multivector::scalar(self.dim, Q::one());
        for v in &vs {
            prod = prod.wedge(&Multivector::vector(v))?;
        }
        let (set, c) = self.coeffs.iter().next().unwrap();
        let ratio = c / prod.coeff(*set);
        for x in vs[0].iter_mut() {
            *x = &*x * &ratio;
        }
        Ok(vs)
    }

    /// Fixture text form: one `I:coeff` line per nonzero term.
    pub fn to_text(&self) -> String {
        self.coeffs
            .iter()
            .map(|(s, c)| format!("{}:{}", s, format_rational(c)))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn parse_text(dim: usize, degree: usize, text: &str) -> Result<Multivector> {
        let mut m = Multivector::zero(dim, degree);
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            for tok in line.split_whitespace() {
                let (set, coeff) = tok.split_once(':').ok_or_else(|| err(format!("missing `:` in `{tok}`")))?;
                let indices = set
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.trim().parse::<usize>().map_err(|_| err(format!("bad index in `{tok}`"))))
                    .collect::<Result<Vec<_>>>()?;
                if indices.len() != degree {
                    return Err(err(format!("term `{tok}` has degree {}, expected {degree}", indices.len())));
                }
                if indices.iter().any(|&i| i >= dim) {
                    return Err(err(format!("index out of range in `{tok}`")));
                }
                let c = parse_rational(coeff).map_err(err)?;
                let (s, sign) = IndexSet::sorted_with_sign(&indices).ok_or_else(|| err(format!("repeated index in `{tok}`")))?;
                m.add_term(s, if sign < 0 { -c } else { c });
            }
        }
        Ok(m)
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(s, c)| format!("{}·e{{{}}}", format_rational(c), s))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `c(w) ∈ (Λ^{j-1}(V_0))^k`, one component per basis vector `e_i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContractionImage {
    pub components: Vec<Multivector>,
}

impl ContractionImage {
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    /// `Σ_i coeffs[i] · c(w)_i` (the formal product `ỹ c(w)`).
    pub fn combine(&self, coeffs: &[Q]) -> Result<Multivector> {
        if coeffs.len() != self.components.len() {
            return Err(Error::DimensionMismatch(coeffs.len(), self.components.len()));
        }
        let first = &self.components[0];
        let mut out = Multivector::zero(first.dim(), first.degree());
        for (c, comp) in coeffs.iter().zip(&self.components) {
            out = out.add(&comp.scale(c))?;
        }
        Ok(out)
    }
}

/// Standard quadratic Grassmann–Plücker relations: for every `(j-1)`-set
/// `I` and `(j+1)`-set `K`, `Σ_l (-1)^l w_{I+k_l} w_{K-k_l} = 0`.
/// Independent of [`Multivector::is_decomposable`].
pub fn plucker_relations_hold(w: &Multivector) -> bool {
    let (k, j) = (w.dim(), w.degree());
    if j <= 1 || j + 1 >= k {
        return true;
    }
    let signed = |idx: &[usize]| -> Q {
        match IndexSet::sorted_with_sign(idx) {
            Some((s, sign)) => {
                let c = w.coeff(s);
                if sign < 0 {
                    -c
                } else {
                    c
                }
            }
            None => Q::zero(),
        }
    };
    for iset in IndexSet::all_of_size(k, j - 1) {
        let i_idx: Vec<usize> = iset.indices().collect();
        for kset in IndexSet::all_of_size(k, j + 1) {
            let k_idx: Vec<usize> = kset.indices().collect();
            let mut total = Q::zero();
            for l in 0..k_idx.len() {
                let mut left = i_idx.clone();
                left.push(k_idx[l]);
                let right: Vec<usize> = k_idx.iter().enumerate().filter(|(p, _)| *p != l).map(|(_, &x)| x).collect();
                let term = signed(&left) * signed(&right);
                if l % 2 == 0 {
                    total += term;
                } else {
                    total -= term;
                }
            }
            if !total.is_zero() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn e(idx: &[usize]) -> Multivector {
        Multivector::e(3, idx)
    }

    #[test]
    fn wedge_basics() {
        assert_eq!(e(&[0]).wedge(&e(&[1])).unwrap(), e(&[0, 1]));
        assert_eq!(e(&[1]).wedge(&e(&[0])).unwrap(), e(&[0, 1]).neg());
        let v = e(&[0]).add(&e(&[1])).unwrap();
        assert!(v.wedge(&v).unwrap().is_zero());
        // overflow is zero, not an error
        let top = e(&[0, 1, 2]);
        let over = top.wedge(&e(&[0])).unwrap();
        assert!(over.is_zero());
        assert_eq!(over.degree(), 4);
        assert!(e(&[0]).wedge(&Multivector::e(4, &[1])).is_err());
    }

    #[test]
    fn inner_products() {
        assert_eq!(e(&[0, 1]).inner(&e(&[0, 1])).unwrap(), qi(1));
        assert_eq!(e(&[0, 1]).inner(&e(&[0, 2])).unwrap(), qi(0));
        assert_eq!(e(&[1, 2]).inner(&e(&[0, 1])).unwrap(), qi(0));
        assert!(e(&[0]).inner(&e(&[0, 1])).is_err());
    }

    #[test]
    fn projections() {
        let w = e(&[0, 1]).add(&e(&[1, 2])).unwrap();
        assert_eq!(w.project_v0(), e(&[1, 2]));
        assert!(e(&[1, 2]).project_vbullet(1).is_zero());
        assert_eq!(e(&[1, 2]).project_vbullet(0), e(&[1, 2]));
        assert_eq!(w.project_v0().project_v0(), w.project_v0());
    }

    #[test]
    fn contraction_examples() {
        let c = e(&[0, 1]).contract().unwrap();
        assert_eq!(c.components[0], Multivector::e(3, &[1]));
        assert!(c.components[1].is_zero());
        assert!(c.components[2].is_zero());

        let c = e(&[1, 2]).contract().unwrap();
        assert!(c.components[0].is_zero());
        assert_eq!(c.components[1], Multivector::e(3, &[2]));
        assert_eq!(c.components[2], Multivector::e(3, &[1]).neg());
        assert!(Multivector::scalar(3, qi(1)).contract().is_err());
    }

    #[test]
    fn norms() {
        let w = Multivector::basis(3, &[0, 1], qi(3)).sub(&Multivector::basis(3, &[1, 2], qi(4))).unwrap();
        assert_eq!(w.sup_norm(), qi(4));
        assert_eq!(w.euclid_norm_sq(), qi(25));
        let z = Multivector::zero(3, 2);
        assert_eq!((z.sup_norm(), z.euclid_norm_sq()), (qi(0), qi(0)));
    }

    #[test]
    fn text_round_trip() {
        let w = Multivector::parse_text(3, 2, "0,1:3\n1,2:-4/7").unwrap();
        assert_eq!(w.coeff(IndexSet::from_indices(&[1, 2])), q(-4, 7));
        assert_eq!(Multivector::parse_text(3, 2, &w.to_text()).unwrap(), w);
        // unsorted index list picks up the permutation sign
        let v = Multivector::parse_text(3, 2, "1,0:2").unwrap();
        assert_eq!(v.coeff(IndexSet::from_indices(&[0, 1])), qi(-2));
        assert!(Multivector::parse_text(3, 2, "0:1").is_err());
        assert!(Multivector::parse_text(3, 2, "0,3:1").is_err());
    }

    #[test]
    fn decomposability() {
        let w = e(&[0, 1]);
        assert!(w.is_decomposable());
        let four = Multivector::e(4, &[0, 1]).add(&Multivector::e(4, &[2, 3])).unwrap();
        assert!(!four.is_decomposable());
        assert!(!plucker_relations_hold(&four));
        let v1 = Multivector::vector(&[qi(1), qi(2), qi(0), qi(3)]);
        let v2 = Multivector::vector(&[qi(0), qi(1), q(1, 2), qi(-1)]);
        let w = v1.wedge(&v2).unwrap();
        assert!(w.is_decomposable());
        assert!(plucker_relations_hold(&w));
        let f = w.factor().unwrap();
        let back = Multivector::vector(&f[0]).wedge(&Multivector::vector(&f[1])).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn wedge_sign_matches_parity_convention() {
        // ⟨e_i ∧ e_{I∖i}, e_I⟩ = (-1)^{#(I ∩ (0, i))}
        for set in IndexSet::all_of_size(6, 3) {
            for i in set.indices() {
                let rest = set.remove(i);
                let w = Multivector::e(6, &[i]).wedge(&Multivector::from_terms(6, 2, [(rest, qi(1))]).unwrap()).unwrap();
                let val = w.inner(&Multivector::from_terms(6, 3, [(set, qi(1))]).unwrap()).unwrap();
                let between = set.indices().filter(|&x| x > 0 && x < i).count();
                let expected = if between % 2 == 0 { qi(1) } else { qi(-1) };
                // index 0 lies below every i > 0, so the full count below i
                // differs from the (0, i) count exactly when 0 ∈ I and i > 0
                let below = set.count_below(i);
                let parity_fix = if set.contains(0) && i > 0 { 1 } else { 0 };
                assert_eq!(below, between + parity_fix);
                let sign_from_below = if below % 2 == 0 { qi(1) } else { qi(-1) };
                assert_eq!(val, sign_from_below);
                if !set.contains(0) {
                    assert_eq!(val, expected);
                }
            }
        }
    }
}
