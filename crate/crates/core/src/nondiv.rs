//! Quantitative nondivergence: checkers for the hypotheses (goodness,
//! doubling, nonplanarity), the ε-marking of a weighted poset, the exact
//! check that marked points are lattices without short vectors, and a
//! Monte-Carlo comparison of escape measures against the nondivergence
//! bound `k C (N D²)^k (ε/ρ)^α`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::{flowed_lattice, ScaleParam};
use crate::lattices::{enumerate_subgroups, gauss_shortest_sq_f64, integer_row_kernel, RealLattice};
use crate::linalg::{self, Matrix};
use crate::rational::{format_rational, to_f64, Q};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoodnessParams {
    pub c: f64,
    pub alpha: f64,
}

impl GoodnessParams {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && alpha > 0.0) {
            return Err(Error::Domain("C and alpha must be positive".into()));
        }
        Ok(GoodnessParams { c, alpha })
    }
}

/// Besicovitch constant `N`, doubling constant `D`, domain dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceParams {
    pub n_besicovitch: f64,
    pub d_federer: f64,
    pub dim: usize,
}

impl SpaceParams {
    /// Lebesgue measure on `ℝ^d` with sup-norm balls: `D = 3^d`. `N` must be
    /// given for `d > 1`; intervals use `N = 2`.
    pub fn lebesgue(dim: usize, n_besicovitch: Option<f64>) -> Result<Self> {
        let n = match (dim, n_besicovitch) {
            (_, Some(n)) => n,
            (1, None) => 2.0,
            _ => return Err(Error::Domain("a Besicovitch constant is required for d > 1".into())),
        };
        if n < 1.0 {
            return Err(Error::Domain("N must be at least 1".into()));
        }
        Ok(SpaceParams { n_besicovitch: n, d_federer: 3f64.powi(dim as i32), dim })
    }

    /// `k C (N D²)^k`.
    pub fn prefactor(&self, k: usize, g: &GoodnessParams) -> f64 {
        k as f64 * g.c * (self.n_besicovitch * self.d_federer * self.d_federer).powi(k as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BaseMeasure {
    Lebesgue,
    /// Middle-thirds Cantor measure on `[0, 1]`.
    Cantor,
}

/// Weighted sample of a ball `B(center, radius)` (a cube: sup-norm balls).
#[derive(Clone, Debug, Serialize)]
pub struct DiscretizedBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub measure: BaseMeasure,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscretizedBall {
    /// Cell midpoints of a `per_axis^d` grid, each weighted by its cell
    /// volume, so the weights add up to `(2r)^d`.
    pub fn lebesgue_grid(center: &[f64], radius: f64, per_axis: usize) -> Result<Self> {
        if radius <= 0.0 || per_axis == 0 {
            return Err(Error::Domain("radius and grid size must be positive".into()));
        }
        let d = center.len();
        let h = 2.0 * radius / per_axis as f64;
        let mut points = vec![Vec::new()];
        for axis in 0..d {
            points = points
                .into_iter()
                .flat_map(|p| {
                    (0..per_axis).map(move |i| {
                        let mut q = p.clone();
                        q.push(center[axis] - radius + (i as f64 + 0.5) * h);
                        q
                    })
                })
                .collect();
        }
        let w = h.powi(d as i32);
        let weights = vec![w; points.len()];
        Ok(DiscretizedBall { center: center.to_vec(), radius, measure: BaseMeasure::Lebesgue, points, weights })
    }

    /// Midpoints of the `2^level` intervals of generation `level`, each of
    /// mass `2^{−level}`.
    pub fn cantor(level: u32) -> Result<Self> {
        if level > 20 {
            return Err(Error::Domain("Cantor level at most 20".into()));
        }
        let len = 3f64.powi(-(level as i32));
        let points: Vec<Vec<f64>> = (0u64..1 << level)
            .map(|code| {
                let mut left = 0.0;
                for bit in 0..level {
                    if code >> (level - 1 - bit) & 1 == 1 {
                        left += 2.0 * 3f64.powi(-(bit as i32 + 1));
                    }
                }
                vec![left + len / 2.0]
            })
            .collect();
        let weights = vec![0.5f64.powi(level as i32); points.len()];
        Ok(DiscretizedBall { center: vec![0.5], radius: 0.5, measure: BaseMeasure::Cantor, points, weights })
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodnessRow {
    pub eps: f64,
    pub ratio: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodnessReport {
    pub params: GoodnessParams,
    pub sup_norm: f64,
    /// `f` vanishes on the sample: the inequality carries no information.
    pub degenerate: bool,
    pub slack: f64,
    pub rows: Vec<GoodnessRow>,
    pub pass: bool,
}

/// `μ{x ∈ B : |f(x)| < ε} / μ(B) ≤ C (ε/‖f‖_B)^α + slack` on an ε grid. The
/// default slack is two sample cells (the boundary cells of a level set).
pub fn goodness_check(
    f: impl Fn(&[f64]) -> f64,
    ball: &DiscretizedBall,
    params: GoodnessParams,
    eps_grid: &[f64],
    slack: Option<f64>,
) -> GoodnessReport {
    let values: Vec<f64> = ball.points.iter().map(|p| f(p).abs()).collect();
    let total = ball.total_mass();
    let sup = values.iter().zip(&ball.weights).filter(|(_, &w)| w > 0.0).map(|(v, _)| *v).fold(0.0, f64::max);
    let slack = slack.unwrap_or_else(|| 2.0 * ball.weights.iter().cloned().fold(0.0, f64::max) / total);
    if sup == 0.0 {
        return GoodnessReport { params, sup_norm: 0.0, degenerate: true, slack, rows: Vec::new(), pass: false };
    }
    let rows: Vec<GoodnessRow> = eps_grid
        .iter()
        .map(|&eps| {
            let small: f64 = values.iter().zip(&ball.weights).filter(|(v, _)| **v < eps).map(|(_, w)| w).sum();
            let ratio = small / total;
            let bound = params.c * (eps / sup).powf(params.alpha);
            GoodnessRow { eps, ratio, bound, ok: ratio <= bound + slack }
        })
        .collect();
    let pass = rows.iter().all(|r| r.ok);
    GoodnessReport { params, sup_norm: sup, degenerate: false, slack, rows, pass }
}

/// Distribution function of the middle-thirds Cantor measure at a point
/// with a finite ternary expansion.
pub fn cantor_cdf(x: &Q) -> Result<Q> {
    let (one, two, three) = (Q::one(), Q::from_integer(BigInt::from(2)), Q::from_integer(BigInt::from(3)));
    let half = Q::new(BigInt::one(), BigInt::from(2));
    let mut x = x.clone();
    let mut acc = Q::zero();
    let mut scale = Q::one();
    for _ in 0..256 {
        if x <= Q::zero() {
            return Ok(acc);
        }
        if x >= one {
            return Ok(acc + scale);
        }
        if x <= &one / &three {
            x = &x * &three;
            scale = &scale * &half;
        } else if x >= &two / &three {
            acc += &scale * &half;
            x = &x * &three - &two;
            scale = &scale * &half;
        } else {
            return Ok(acc + &scale * &half);
        }
    }
    Err(Error::Domain("point has no finite ternary expansion".into()))
}

/// `μ([a, b])` for the Cantor measure (no atoms, so open or closed alike).
pub fn cantor_mass(a: &Q, b: &Q) -> Result<Q> {
    Ok(cantor_cdf(b)? - cantor_cdf(a)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct FedererSample {
    pub center: Vec<String>,
    pub radius: String,
    pub ratio: String,
    pub ratio_f64: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FedererReport {
    pub measure: BaseMeasure,
    pub samples: Vec<FedererSample>,
    /// Largest `μ(B(x, 3r)) / μ(B(x, r))` seen.
    pub estimate: String,
    pub estimate_f64: f64,
}

fn federer_from(measure: BaseMeasure, samples: Vec<(Vec<Q>, Q, Q)>) -> Result<FedererReport> {
    let best = samples.iter().map(|s| s.2.clone()).max().ok_or(Error::Domain("empty scale grid".into()))?;
    Ok(FedererReport {
        measure,
        estimate: format_rational(&best),
        estimate_f64: to_f64(&best),
        samples: samples
            .into_iter()
            .map(|(c, r, ratio)| FedererSample {
                center: c.iter().map(format_rational).collect(),
                radius: format_rational(&r),
                ratio_f64: to_f64(&ratio),
                ratio: format_rational(&ratio),
            })
            .collect(),
    })
}

/// Lebesgue measure with sup-norm balls: the ratio is `(6r)^d / (2r)^d`.
pub fn federer_lebesgue(centers: &[Vec<Q>], radii: &[Q]) -> Result<FedererReport> {
    let mut samples = Vec::new();
    for c in centers {
        for r in radii {
            if !r.is_positive() {
                return Err(Error::Domain("radii must be positive".into()));
            }
            let d = c.len();
            let two = Q::from_integer(BigInt::from(2));
            let small = num_traits::pow(&two * r, d);
            let big = num_traits::pow(&two * Q::from_integer(BigInt::from(3)) * r, d);
            samples.push((c.clone(), r.clone(), big / small));
        }
    }
    federer_from(BaseMeasure::Lebesgue, samples)
}

/// Cantor measure at ternary-aligned scales: centers are the endpoints of
/// generation-`m` intervals (all in the support) for `m ≤ max_level`, radii
/// `3^{−m'}` for `1 ≤ m' ≤ max_level`.
pub fn federer_cantor(max_level: u32) -> Result<FedererReport> {
    if max_level == 0 || max_level > 8 {
        return Err(Error::Domain("Cantor level must be in 1..=8".into()));
    }
    let three = BigInt::from(3);
    let mut centers = Vec::new();
    for m in 0..=max_level {
        let len = Q::new(BigInt::one(), num_traits::pow(three.clone(), m as usize));
        for code in 0u64..1 << m {
            let mut left = Q::zero();
            for bit in 0..m {
                if code >> (m - 1 - bit) & 1 == 1 {
                    left += Q::new(BigInt::from(2), num_traits::pow(three.clone(), bit as usize + 1));
                }
            }
            centers.push(left.clone());
            centers.push(left + &len);
        }
    }
    centers.sort();
    centers.dedup();
    let mut samples = Vec::new();
    for c in &centers {
        for m in 1..=max_level {
            let r = Q::new(BigInt::one(), num_traits::pow(three.clone(), m as usize));
            let small = cantor_mass(&(c - &r), &(c + &r))?;
            if small.is_zero() {
                return Err(Error::Domain("ball of zero measure around a support point".into()));
            }
            let r3 = &r * Q::from_integer(three.clone());
            let big = cantor_mass(&(c - &r3), &(c + &r3))?;
            samples.push((vec![c.clone()], r, big / small));
        }
    }
    federer_from(BaseMeasure::Cantor, samples)
}

#[derive(Clone, Debug, Serialize)]
pub struct NonplanarityReport {
    pub ambient_dim: usize,
    /// Dimension of the affine span of the sampled image.
    pub affine_dim: usize,
    /// The span is the whole space.
    pub nonplanar: bool,
    /// Span equals the given affine subspace.
    pub nonplanar_in_subspace: Option<bool>,
}

/// Affine span of sampled images `f(x_i)` by exact rank computation;
/// optionally compared with the affine subspace `base + span(dirs)`.
pub fn nonplanarity_check(images: &[Vec<Q>], subspace: Option<(&[Q], &[Vec<Q>])>) -> Result<NonplanarityReport> {
    let n = images.first().map_or(0, |v| v.len());
    if images.len() < n + 1 {
        return Err(Error::Precondition(format!("need at least {} samples, got {}", n + 1, images.len())));
    }
    let diffs: Matrix = images[1..].iter().map(|v| v.iter().zip(&images[0]).map(|(a, b)| a - b).collect()).collect();
    let affine_dim = linalg::rank(&diffs);
    let in_sub = subspace.map(|(base, dirs)| {
        let l = linalg::rank(&dirs.to_vec());
        let mut stacked = dirs.to_vec();
        stacked.push(images[0].iter().zip(base).map(|(a, b)| a - b).collect());
        stacked.extend(diffs.iter().cloned());
        // span ⊂ 𝓛 and of the same dimension
        linalg::rank(&stacked) == l && affine_dim == l
    });
    Ok(NonplanarityReport { ambient_dim: n, affine_dim, nonplanar: affine_dim == n, nonplanar_in_subspace: in_sub })
}

/// Finite poset with weights `η`. `less[a][b]` means `a < b`.
#[derive(Clone, Debug, Serialize)]
pub struct WeightedPoset {
    pub eta: Vec<f64>,
    less: Vec<Vec<bool>>,
}

impl WeightedPoset {
    /// `relations` lists pairs `a < b`; the order is their transitive
    /// closure, which must be acyclic.
    pub fn new(eta: Vec<f64>, relations: &[(usize, usize)]) -> Result<Self> {
        let m = eta.len();
        let mut less = vec![vec![false; m]; m];
        for &(a, b) in relations {
            if a >= m || b >= m {
                return Err(Error::Domain("relation refers to a missing element".into()));
            }
            less[a][b] = true;
        }
        for via in 0..m {
            for a in 0..m {
                if less[a][via] {
                    for b in 0..m {
                        if less[via][b] {
                            less[a][b] = true;
                        }
                    }
                }
            }
        }
        if (0..m).any(|a| less[a][a]) {
            return Err(Error::Domain("relations contain a cycle".into()));
        }
        Ok(WeightedPoset { eta, less })
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn less(&self, a: usize, b: usize) -> bool {
        self.less[a][b]
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.less[a][b] || self.less[b][a]
    }

    pub fn is_flag(&self, f: &[usize]) -> bool {
        f.iter().enumerate().all(|(i, &a)| f[i + 1..].iter().all(|&b| a != b && self.comparable(a, b)))
    }

    /// Elements outside `f` comparable with every element of `f`.
    pub fn complement_poset(&self, f: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|s| !f.contains(s) && f.iter().all(|&x| self.comparable(*s, x))).collect()
    }

    /// Longest chain, restricted to `subset`.
    pub fn length_of(&self, subset: &[usize]) -> usize {
        // a topological order of the subset: by number of elements below
        let mut order = subset.to_vec();
        order.sort_by_key(|&a| (0..self.len()).filter(|&b| self.less[b][a]).count());
        let mut best = vec![0usize; order.len()];
        for i in 0..order.len() {
            best[i] = 1 + (0..i).filter(|&p| self.less[order[p]][order[i]]).map(|p| best[p]).max().unwrap_or(0);
        }
        best.into_iter().max().unwrap_or(0)
    }

    pub fn length(&self) -> usize {
        self.length_of(&(0..self.len()).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarkResult {
    pub marked: bool,
    /// A flag witnessing the marking, bottom to top.
    pub flag: Vec<usize>,
}

/// Searches for a flag `F` with `in_band(s)` for `s ∈ F` and `above(s)` for
/// every `s ∉ F` comparable with all of `F`. Only in-band elements can
/// enter a flag, so chains are enumerated among those.
pub fn find_flag(poset: &WeightedPoset, in_band: &[bool], above: &[bool]) -> Option<Vec<usize>> {
    let mut cands: Vec<usize> = (0..poset.len()).filter(|&s| in_band[s]).collect();
    cands.sort_by_key(|&a| (0..poset.len()).filter(|&b| poset.less(b, a)).count());
    let ok = |f: &[usize]| poset.complement_poset(f).iter().all(|&s| above[s]);
    fn rec(
        poset: &WeightedPoset,
        cands: &[usize],
        start: usize,
        chain: &mut Vec<usize>,
        ok: &dyn Fn(&[usize]) -> bool,
    ) -> Option<Vec<usize>> {
        if ok(chain) {
            return Some(chain.clone());
        }
        for i in start..cands.len() {
            let c = cands[i];
            if chain.last().is_none_or(|&top| poset.less(top, c)) {
                chain.push(c);
                if let Some(f) = rec(poset, cands, i + 1, chain, ok) {
                    return Some(f);
                }
                chain.pop();
            }
        }
        None
    }
    rec(poset, &cands, 0, &mut Vec::new(), &ok)
}

/// ε-marking: a flag with `εη(s) ≤ |ψ_s| ≤ η(s)` on the flag and
/// `|ψ_s| ≥ η(s)` on every element comparable with the whole flag.
pub fn is_marked(poset: &WeightedPoset, psi: &[f64], eps: f64) -> Result<MarkResult> {
    if psi.len() != poset.len() {
        return Err(Error::DimensionMismatch(poset.len(), psi.len()));
    }
    let in_band: Vec<bool> = (0..poset.len()).map(|s| eps * poset.eta[s] <= psi[s].abs() && psi[s].abs() <= poset.eta[s]).collect();
    let above: Vec<bool> = (0..poset.len()).map(|s| psi[s].abs() >= poset.eta[s]).collect();
    Ok(match find_flag(poset, &in_band, &above) {
        Some(flag) => MarkResult { marked: true, flag },
        None => MarkResult { marked: false, flag: Vec::new() },
    })
}

/// A primitive subgroup of `ℤ^k` with `‖h Γ‖ ≤ ρ^{rk Γ}` at one point.
#[derive(Clone, Debug, Serialize)]
pub struct LowSubgroup {
    pub rank: usize,
    /// Basis rows in coefficient space.
    pub basis: Vec<Vec<String>>,
    #[serde(with = "crate::rational::serde_q")]
    pub covolume_sq: Q,
    /// Primitive generator (rank 1) or primitive normal vector (rank k−1).
    #[serde(skip)]
    tag: Vec<BigInt>,
}

fn is_primitive_vec(v: &[BigInt]) -> bool {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x)).is_one()
}

fn gram_det_of(rows: &[Vec<BigInt>], basis: &Matrix) -> Q {
    let vecs: Matrix = rows
        .iter()
        .map(|c| {
            (0..basis[0].len())
                .map(|col| c.iter().zip(basis).fold(Q::zero(), |acc, (x, r)| acc + Q::from_integer(x.clone()) * &r[col]))
                .collect()
        })
        .collect();
    linalg::determinant(&linalg::gram(&vecs))
}

/// Every primitive `Γ ⊂ ℤ^k` (`k ∈ {2, 3}`) with `‖LΓ‖ ≤ ρ^{rk Γ}`, where
/// `L` is the lattice basis. Rank 1 comes from short vectors of `L`, rank
/// `k − 1` from short vectors of the dual lattice, rank `k` is `ℤ^k`.
pub fn low_subgroups(l: &RealLattice, rho: &Q, budget: u64) -> Result<Vec<LowSubgroup>> {
    let k = l.rank();
    if !(2..=3).contains(&k) || l.ambient_dim() != k {
        return Err(Error::Domain("marking checks support full lattices of rank 2 or 3".into()));
    }
    let basis = l.basis();
    let rho2 = rho * rho;
    let mut out = Vec::new();
    for sv in l.short_vectors(&rho2, budget)? {
        if is_primitive_vec(&sv.coeffs) {
            let rows = [sv.coeffs.clone()];
            out.push(LowSubgroup {
                rank: 1,
                basis: rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
                covolume_sq: sv.norm_sq.clone(),
                tag: sv.coeffs,
            });
        }
    }
    let det2 = l.covolume_sq();
    let eta_top = num_traits::pow(rho2.clone(), k);
    if k == 3 {
        // ‖LΓ‖ = covol(L) · ‖v*‖ for Γ = v^⊥, v* the dual vector of v
        let inv = inverse(basis)?;
        let dual = RealLattice::new(linalg::transpose(&inv))?;
        let eta = num_traits::pow(rho2.clone(), 2);
        for sv in dual.short_vectors(&(&eta / &det2), budget)? {
            if !is_primitive_vec(&sv.coeffs) {
                continue;
            }
            let g: Vec<Vec<BigInt>> = sv.coeffs.iter().map(|x| vec![x.clone()]).collect();
            let rows = integer_row_kernel(&g);
            let cov = gram_det_of(&rows, basis);
            if cov <= eta {
                out.push(LowSubgroup {
                    rank: 2,
                    basis: rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
                    covolume_sq: cov,
                    tag: sv.coeffs,
                });
            }
        }
    }
    if det2 <= eta_top {
        let rows: Vec<Vec<BigInt>> =
            (0..k).map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
        out.push(LowSubgroup {
            rank: k,
            basis: rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
            covolume_sq: det2,
            tag: Vec::new(),
        });
    }
    Ok(out)
}

fn inverse(m: &Matrix) -> Result<Matrix> {
    let k = m.len();
    let mut aug: Matrix = m.iter().zip(linalg::identity(k)).map(|(r, id)| [r.clone(), id].concat()).collect();
    linalg::rref(&mut aug);
    if (0..k).any(|i| !aug[i][i].is_one()) {
        return Err(Error::DependentRows);
    }
    Ok(aug.into_iter().map(|r| r[k..].to_vec()).collect())
}

fn contains(a: &LowSubgroup, b: &LowSubgroup, k: usize) -> bool {
    // a ⊊ b
    if a.rank >= b.rank {
        return false;
    }
    if b.rank == k {
        return true;
    }
    // rank 1 inside rank 2 (k = 3): generator orthogonal to the normal
    let dot = a.tag.iter().zip(&b.tag).fold(BigInt::zero(), |acc, (x, y)| acc + x * y);
    dot.is_zero()
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkingPoint {
    pub x: Vec<String>,
    #[serde(with = "crate::rational::serde_q")]
    pub eps: Q,
    pub marked: bool,
    pub flag_ranks: Vec<usize>,
    #[serde(with = "crate::rational::serde_q")]
    pub shortest_sq: Q,
    pub violation: bool,
}

/// Marking of one lattice at level `ε/ρ` against its shortest vector, for
/// each `ε` in `eps_list`. Subgroups with `‖LΓ‖ > ρ^{rk Γ}` never matter:
/// they satisfy the lower bound and cannot enter a flag, so the poset is
/// cut down to [`low_subgroups`].
pub fn marking_at_lattice(l: &RealLattice, rho: &Q, eps_list: &[Q], budget: u64) -> Result<Vec<MarkingPoint>> {
    let k = l.rank();
    let low = low_subgroups(l, rho, budget)?;
    let rho2 = rho * rho;
    let eta2: Vec<Q> = low.iter().map(|g| num_traits::pow(rho2.clone(), g.rank)).collect();
    let rel: Vec<(usize, usize)> =
        (0..low.len()).flat_map(|a| (0..low.len()).map(move |b| (a, b))).filter(|&(a, b)| contains(&low[a], &low[b], k)).collect();
    let poset = WeightedPoset::new(eta2.iter().map(to_f64).collect(), &rel)?;
    let shortest_sq = l.shortest_vector(budget)?.norm_sq;
    let mut out = Vec::new();
    for eps in eps_list {
        if eps > rho || !eps.is_positive() {
            return Err(Error::Domain("need 0 < eps <= rho".into()));
        }
        let ratio2 = (eps / rho) * (eps / rho);
        let in_band: Vec<bool> =
            low.iter().zip(&eta2).map(|(g, e)| &ratio2 * e <= g.covolume_sq && g.covolume_sq <= *e).collect();
        let above: Vec<bool> = low.iter().zip(&eta2).map(|(g, e)| g.covolume_sq >= *e).collect();
        let flag = find_flag(&poset, &in_band, &above);
        let marked = flag.is_some();
        out.push(MarkingPoint {
            x: Vec::new(),
            eps: eps.clone(),
            marked,
            flag_ranks: flag.unwrap_or_default().iter().map(|&i| low[i].rank).collect(),
            violation: marked && shortest_sq < eps * eps,
            shortest_sq: shortest_sq.clone(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct MarkingConfig {
    /// Lattice dimension, 2 or 3; the map is `x ↦ g u_x` on `[0, 1]^{k−1}`.
    pub k: usize,
    pub lambda: Q,
    pub grid_per_axis: usize,
    pub rho: Q,
    pub eps: Vec<Q>,
    pub budget: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkingReport {
    pub k: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub lambda: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub rho: Q,
    pub points: usize,
    pub checks: usize,
    pub marked: usize,
    pub violations: Vec<MarkingPoint>,
}

/// Grid version of the inclusion "marked at `ε/ρ` ⇒ no vector shorter than
/// `ε`", evaluated exactly at every grid point. A violation is a bug.
pub fn marking_inclusion_check(cfg: &MarkingConfig) -> Result<MarkingReport> {
    if !(2..=3).contains(&cfg.k) || cfg.grid_per_axis < 2 {
        return Err(Error::Domain("k must be 2 or 3 and the grid at least 2 per axis".into()));
    }
    let n = cfg.k - 1;
    let g = cfg.grid_per_axis;
    let scale = ScaleParam::new(cfg.lambda.clone(), n)?;
    let coord = |i: usize| Q::new(BigInt::from(i), BigInt::from(g - 1));
    let count = g.pow(n as u32);
    let results: Vec<Result<Vec<MarkingPoint>>> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let mut y = Vec::with_capacity(n);
            let mut rest = idx;
            for _ in 0..n {
                y.push(coord(rest % g));
                rest /= g;
            }
            let l = flowed_lattice(&scale, &y)?;
            let mut pts = marking_at_lattice(&l, &cfg.rho, &cfg.eps, cfg.budget)?;
            for p in pts.iter_mut() {
                p.x = y.iter().map(format_rational).collect();
            }
            Ok(pts)
        })
        .collect();
    let mut checks = 0;
    let mut marked = 0;
    let mut violations = Vec::new();
    for r in results {
        for p in r? {
            checks += 1;
            marked += p.marked as usize;
            if p.violation {
                violations.push(p);
            }
        }
    }
    Ok(MarkingReport { k: cfg.k, lambda: cfg.lambda.clone(), rho: cfg.rho.clone(), points: count, checks, marked, violations })
}

/// Polynomial map `ℝ^d → ℝ^n`; each component is a list of
/// `(coefficient, exponents)` monomials.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct PolyMap {
    pub dim_in: usize,
    pub components: Vec<Vec<(f64, Vec<u32>)>>,
}

impl PolyMap {
    pub fn identity(d: usize) -> Self {
        PolyMap {
            dim_in: d,
            components: (0..d).map(|i| vec![(1.0, (0..d).map(|j| (i == j) as u32).collect())]).collect(),
        }
    }

    /// `x ↦ (x, x², …, x^n)`.
    pub fn moment_curve(n: usize) -> Self {
        PolyMap { dim_in: 1, components: (1..=n).map(|e| vec![(1.0, vec![e as u32])]).collect() }
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_in == 0 || self.components.is_empty() {
            return Err(Error::Domain("map needs inputs and outputs".into()));
        }
        if self.components.iter().flatten().any(|(_, e)| e.len() != self.dim_in) {
            return Err(Error::Domain("monomial exponent length differs from the input dimension".into()));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().map(|(a, e)| a * x.iter().zip(e).map(|(xi, &p)| xi.powi(p as i32)).product::<f64>()).sum())
            .collect()
    }
}

/// Basis rows of `g_t u_y ℤ^{n+1}` in floating point: `g = diag(e^t,
/// e^{−t/n}, …)`.
pub fn flowed_basis_f64(t: f64, y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let up = t.exp();
    let down = (-t / n as f64).exp();
    let mut rows = vec![vec![0.0; n + 1]; n + 1];
    rows[0][0] = up;
    for i in 1..=n {
        rows[i][0] = up * y[i - 1];
        rows[i][i] = down;
    }
    rows
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared length of a shortest nonzero vector, floating point: Gauss
/// reduction in rank 2, LLL plus exhaustive enumeration otherwise.
pub fn shortest_sq_f64(rows: &[Vec<f64>]) -> f64 {
    if rows.len() == 2 && rows[0].len() == 2 {
        return gauss_shortest_sq_f64([rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]);
    }
    let mut b = rows.to_vec();
    lll_f64(&mut b);
    let m = b.len();
    // Gram–Schmidt data of the reduced basis
    let mut mu = vec![vec![0.0; m]; m];
    let mut bstar: Vec<Vec<f64>> = Vec::new();
    let mut bn = vec![0.0; m];
    for i in 0..m {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = dotf(&b[i], &bstar[j]) / bn[j];
            for (x, y) in v.iter_mut().zip(&bstar[j]) {
                *x -= mu[i][j] * y;
            }
        }
        bn[i] = dotf(&v, &v);
        bstar.push(v);
    }
    let mut best = b.iter().map(|r| dotf(r, r)).fold(f64::INFINITY, f64::min) * (1.0 + 1e-12);
    let mut x = vec![0i64; m];
    fn rec(i: usize, partial: f64, x: &mut Vec<i64>, mu: &[Vec<f64>], bn: &[f64], best: &mut f64) {
        let m = x.len();
        let center: f64 = -(i + 1..m).map(|j| x[j] as f64 * mu[j][i]).sum::<f64>();
        let room = (*best - partial) / bn[i];
        if room < 0.0 {
            return;
        }
        let r = room.sqrt();
        let lo = (center - r).ceil() as i64;
        let hi = (center + r).floor() as i64;
        for v in lo..=hi {
            x[i] = v;
            let d = v as f64 - center;
            let p = partial + d * d * bn[i];
            if p > *best {
                continue;
            }
            if i == 0 {
                if x.iter().any(|&c| c != 0) && p > 0.0 {
                    *best = p;
                }
            } else {
                rec(i - 1, p, x, mu, bn, best);
            }
        }
        x[i] = 0;
    }
    rec(m - 1, 0.0, &mut x, &mu, &bn, &mut best);
    best
}

fn lll_f64(b: &mut [Vec<f64>]) {
    let m = b.len();
    let mut k = 1;
    let mut guard = 0;
    while k < m && guard < 10_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (mu, bjn) = gs_mu(b, k, j);
            let r = (mu / bjn).round();
            if r != 0.0 {
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= r * y;
                }
            }
        }
        let star = gs_star(b, k + 1);
        let nk = dotf(&star[k], &star[k]);
        let nk1 = dotf(&star[k - 1], &star[k - 1]);
        let mu = dotf(&b[k], &star[k - 1]) / nk1;
        if nk >= (0.99 - mu * mu) * nk1 {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
}

fn gs_star(b: &[Vec<f64>], upto: usize) -> Vec<Vec<f64>> {
    let mut star: Vec<Vec<f64>> = Vec::new();
    for i in 0..upto {
        let mut v = b[i].clone();
        for s in &star {
            let c = dotf(&b[i], s) / dotf(s, s);
            for (x, y) in v.iter_mut().zip(s) {
                *x -= c * y;
            }
        }
        star.push(v);
    }
    star
}

fn gs_mu(b: &[Vec<f64>], k: usize, j: usize) -> (f64, f64) {
    let star = gs_star(b, j + 1);
    (dotf(&b[k], &star[j]), dotf(&star[j], &star[j]))
}

/// `sqrt(det Gram)` of integer coefficient rows pushed through `basis`.
fn covolume_f64(rows: &[Vec<BigInt>], basis: &[Vec<f64>]) -> f64 {
    let vecs: Vec<Vec<f64>> = rows
        .iter()
        .map(|c| {
            let cf: Vec<f64> = c.iter().map(|x| crate::rational::to_f64(&Q::from_integer(x.clone()))).collect();
            (0..basis[0].len()).map(|col| cf.iter().zip(basis).map(|(a, r)| a * r[col]).sum()).collect()
        })
        .collect();
    let g: Vec<Vec<f64>> = vecs.iter().map(|a| vecs.iter().map(|b| dotf(a, b)).collect()).collect();
    det_f64(g).max(0.0).sqrt()
}

fn det_f64(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for col in c..n {
                m[r][col] -= f * m[c][col];
            }
        }
    }
    det
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoEstimate {
    pub rho: f64,
    /// Rank and basis of the subgroup attaining the minimum.
    pub attained_rank: usize,
    pub attained_basis: Vec<Vec<String>>,
    /// HNF height cutoff of the subgroups considered.
    pub height_cutoff: u64,
    pub grid_points: usize,
    pub subgroups: usize,
}

/// `ρ = min_Γ (sup_B ‖h(·)Γ‖)^{1/rk Γ}` over primitive subgroups with HNF
/// entries up to `height` and sampled points of `B`. Both restrictions
/// can only raise the value, so the resulting bound is conservative.
pub fn estimate_rho(map: &PolyMap, points: &[Vec<f64>], t: f64, height: u64) -> Result<RhoEstimate> {
    map.validate()?;
    let k = map.dim_out() + 1;
    let bases: Vec<Vec<Vec<f64>>> = points.iter().map(|x| flowed_basis_f64(t, &map.eval(x))).collect();
    let mut best = (f64::INFINITY, 0usize, Vec::new());
    let mut count = 0;
    for r in 1..=k {
        let groups = if r == k {
            vec![crate::lattices::hnf_i64(&(0..k).map(|i| (0..k).map(|j| (i == j) as i64).collect()).collect::<Vec<_>>())?]
        } else {
            enumerate_subgroups(k, r, height, true)
        };
        for gamma in groups {
            count += 1;
            let sup = bases.iter().map(|b| covolume_f64(gamma.rows(), b)).fold(0.0, f64::max);
            let val = sup.powf(1.0 / r as f64);
            if val < best.0 {
                best = (val, r, gamma.rows().iter().map(|row| row.iter().map(|x| x.to_string()).collect()).collect());
            }
        }
    }
    Ok(RhoEstimate { rho: best.0, attained_rank: best.1, attained_basis: best.2, height_cutoff: height, grid_points: points.len(), subgroups: count })
}

#[derive(Clone, Debug)]
pub struct Theorem22Config {
    pub map: PolyMap,
    pub center: Vec<f64>,
    pub radius: f64,
    pub measure: BaseMeasure,
    pub t: f64,
    pub eps: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub goodness: GoodnessParams,
    pub space: SpaceParams,
    pub rho_height: u64,
    pub rho_grid: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeRow {
    pub eps: f64,
    pub escapes: u64,
    pub fraction: f64,
    pub sigma: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    /// `fraction − 3σ ≤ bound`.
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem22Report {
    pub k: usize,
    pub t: f64,
    pub samples: u64,
    pub seed: u64,
    pub measure: BaseMeasure,
    pub goodness: GoodnessParams,
    pub space: SpaceParams,
    pub prefactor: f64,
    pub rho: RhoEstimate,
    pub rows: Vec<EscapeRow>,
    /// Least-squares slope of `ln fraction` against `ln ε` over the rows
    /// with at least one escape.
    pub slope: Option<f64>,
    pub slope_points: usize,
    pub slope_ok: bool,
    pub bound_ok: bool,
}

const MC_CHUNK: u64 = 8192;

fn sample_point(rng: &mut impl Rng, cfg: &Theorem22Config) -> Vec<f64> {
    match cfg.measure {
        BaseMeasure::Lebesgue => cfg.center.iter().map(|c| c - cfg.radius + 2.0 * cfg.radius * rng.random::<f64>()).collect(),
        BaseMeasure::Cantor => {
            // 52 random ternary digits from {0, 2}
            let bits: u64 = rng.random();
            let mut x = 0.0;
            let mut w = 2.0 / 3.0;
            for i in 0..52 {
                if bits >> i & 1 == 1 {
                    x += w;
                }
                w /= 3.0;
            }
            vec![x]
        }
    }
}

/// Monte-Carlo escape fractions `μ{x ∈ B : g_t u_{f(x)} ℤ^k ∉ K_ε} / μ(B)`
/// compared with `k C (N D²)^k (ε/ρ)^α`. Samples come in fixed chunks, each
/// with its own counter-based stream, and counts are summed, so the report
/// does not depend on the number of workers.
pub fn theorem22_verify(cfg: &Theorem22Config) -> Result<Theorem22Report> {
    cfg.map.validate()?;
    if cfg.map.dim_in != cfg.center.len() {
        return Err(Error::DimensionMismatch(cfg.map.dim_in, cfg.center.len()));
    }
    if cfg.measure == BaseMeasure::Cantor && (cfg.map.dim_in != 1 || cfg.center != [0.5] || cfg.radius != 0.5) {
        return Err(Error::Domain("the Cantor measure is supported on B = [0, 1] only".into()));
    }
    if cfg.samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let k = cfg.map.dim_out() + 1;
    let grid = match cfg.measure {
        BaseMeasure::Lebesgue => DiscretizedBall::lebesgue_grid(&cfg.center, cfg.radius, cfg.rho_grid)?.points,
        BaseMeasure::Cantor => DiscretizedBall::cantor(cfg.rho_grid.max(1).ilog2().min(12))?.points,
    };
    let rho = estimate_rho(&cfg.map, &grid, cfg.t, cfg.rho_height)?;
    if !(rho.rho > 0.0) {
        return Err(Error::Precondition("rho vanishes: the lower bound hypothesis fails".into()));
    }
    if cfg.eps.iter().any(|&e| !(e > 0.0 && e <= rho.rho)) {
        return Err(Error::Domain(format!("every eps must lie in (0, rho = {}]", rho.rho)));
    }
    let eps2: Vec<f64> = cfg.eps.iter().map(|e| e * e).collect();
    let chunks = cfg.samples.div_ceil(MC_CHUNK);
    let words = MC_CHUNK * 2 * cfg.map.dim_in as u64;
    let counts: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = crate::rng::chunk_stream(cfg.seed, crate::rng::streams::NONDIV_SAMPLES, c, words);
            let n = MC_CHUNK.min(cfg.samples - c * MC_CHUNK);
            let mut local = vec![0u64; eps2.len()];
            for _ in 0..n {
                let x = sample_point(&mut rng, cfg);
                let s = shortest_sq_f64(&flowed_basis_f64(cfg.t, &cfg.map.eval(&x)));
                for (cnt, e) in local.iter_mut().zip(&eps2) {
                    if s < *e {
                        *cnt += 1;
                    }
                }
            }
            local
        })
        .reduce(|| vec![0u64; eps2.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let prefactor = cfg.space.prefactor(k, &cfg.goodness);
    let n = cfg.samples as f64;
    let rows: Vec<EscapeRow> = cfg
        .eps
        .iter()
        .zip(&counts)
        .map(|(&eps, &escapes)| {
            let fraction = escapes as f64 / n;
            let sigma = (fraction * (1.0 - fraction) / n).sqrt();
            let bound = prefactor * (eps / rho.rho).powf(cfg.goodness.alpha);
            EscapeRow {
                eps,
                escapes,
                fraction,
                sigma,
                ci_low: (fraction - 3.0 * sigma).max(0.0),
                ci_high: (fraction + 3.0 * sigma).min(1.0),
                bound,
                ok: fraction - 3.0 * sigma <= bound,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.escapes > 0).map(|r| (r.eps.ln(), r.fraction.ln())).collect();
    let slope = fit_slope(&pts);
    let slope_ok = slope.is_some_and(|s| (s - cfg.goodness.alpha).abs() <= 0.3);
    let bound_ok = rows.iter().all(|r| r.ok);
    Ok(Theorem22Report {
        k,
        t: cfg.t,
        samples: cfg.samples,
        seed: cfg.seed,
        measure: cfg.measure,
        goodness: cfg.goodness,
        space: cfg.space,
        prefactor,
        rho,
        rows,
        slope,
        slope_points: pts.len(),
        slope_ok,
        bound_ok,
    })
}

/// Ordinary least squares slope; `None` with fewer than two distinct `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn identity_is_one_one_good() {
        let ball = DiscretizedBall::lebesgue_grid(&[0.0], 1.0, 2000).unwrap();
        let eps: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let rep = goodness_check(|x| x[0], &ball, GoodnessParams::new(1.0, 1.0).unwrap(), &eps, None);
        assert!(rep.pass);
        let rep = goodness_check(|_| 1.0, &ball, GoodnessParams::new(1.0, 1.0).unwrap(), &eps, None);
        assert!(rep.pass && rep.rows.iter().all(|r| r.ratio == 0.0));
        let rep = goodness_check(|_| 0.0, &ball, GoodnessParams::new(1.0, 1.0).unwrap(), &eps, None);
        assert!(rep.degenerate);
    }

    #[test]
    fn doubling_constants() {
        let r = federer_lebesgue(&[vec![qi(0)]], &[q(1, 2), qi(3)]).unwrap();
        assert_eq!(r.estimate, "3");
        let r = federer_lebesgue(&[vec![qi(0), qi(1)]], &[q(1, 7)]).unwrap();
        assert_eq!(r.estimate, "9");
        let c = federer_cantor(4).unwrap();
        assert!(c.estimate_f64 <= 8.0, "{}", c.estimate);
        assert_eq!(cantor_cdf(&q(1, 3)).unwrap(), q(1, 2));
        assert_eq!(cantor_cdf(&q(2, 9)).unwrap(), q(1, 4));
    }

    #[test]
    fn spans() {
        let ident: Vec<Vec<Q>> = vec![vec![qi(0), qi(0)], vec![qi(1), qi(0)], vec![qi(0), qi(1)]];
        assert!(nonplanarity_check(&ident, None).unwrap().nonplanar);
        let line: Vec<Vec<Q>> = (0..4).map(|i| vec![qi(i), qi(2 * i + 1)]).collect();
        let rep = nonplanarity_check(&line, Some((&[qi(0), qi(1)], &[vec![qi(1), qi(2)]]))).unwrap();
        assert!(!rep.nonplanar);
        assert_eq!(rep.nonplanar_in_subspace, Some(true));
        let parabola: Vec<Vec<Q>> = (0..4).map(|i| vec![qi(i), qi(i * i)]).collect();
        assert!(nonplanarity_check(&parabola, None).unwrap().nonplanar);
    }

    #[test]
    fn marking_basics() {
        let empty = WeightedPoset::new(vec![], &[]).unwrap();
        assert!(is_marked(&empty, &[], 0.1).unwrap().marked);
        let one = WeightedPoset::new(vec![1.0], &[]).unwrap();
        assert_eq!(is_marked(&one, &[2.0], 0.1).unwrap(), MarkResult { marked: true, flag: vec![] });
        assert!(!is_marked(&one, &[0.01], 0.1).unwrap().marked);
        assert_eq!(is_marked(&one, &[0.5], 0.1).unwrap().flag, vec![0]);
        assert!(WeightedPoset::new(vec![1.0, 1.0], &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn identity_lattice_is_marked() {
        let pts = marking_at_lattice(&RealLattice::standard(2), &q(1, 2), &[q(1, 2)], 100_000).unwrap();
        assert!(pts[0].marked && !pts[0].violation);
        let pts = marking_at_lattice(&RealLattice::standard(3), &q(1, 2), &[q(1, 2), q(1, 8)], 100_000).unwrap();
        assert!(pts.iter().all(|p| p.marked && !p.violation));
    }

    #[test]
    fn float_shortest_matches_exact() {
        let scale = ScaleParam::new(qi(3), 2).unwrap();
        let y = [q(3, 7), q(5, 11)];
        let exact = flowed_lattice(&scale, &y).unwrap().shortest_vector(1_000_000).unwrap().norm_sq;
        let t = 2.0 * 3f64.ln();
        let f = shortest_sq_f64(&flowed_basis_f64(t, &[3.0 / 7.0, 5.0 / 11.0]));
        assert!((f - to_f64(&exact)).abs() < 1e-9 * f.max(1.0), "{f} vs {}", to_f64(&exact));
    }
}
