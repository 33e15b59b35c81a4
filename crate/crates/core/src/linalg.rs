//! Small dense exact linear algebra over ℚ.

use num_traits::{One, Zero};

use crate::rational::Q;

pub type Matrix = Vec<Vec<Q>>;

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Q::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for k in c..cols {
                    let sub = &f * &m[r][k];
                    m[i][k] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of the right kernel `{x : m x = 0}`.
pub fn kernel(m: &Matrix, cols: usize) -> Vec<Vec<Q>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}

pub fn determinant(m: &Matrix) -> Q {
    let n = m.len();
    let mut a = m.clone();
    let mut det = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        let inv = Q::one() / &a[c][c];
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for k in c..n {
                let sub = &f * &a[c][k];
                a[i][k] -= sub;
            }
        }
    }
    det
}

pub fn gram(rows: &Matrix) -> Matrix {
    rows.iter()
        .map(|a| rows.iter().map(|b| dot(a, b)).collect())
        .collect()
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| (0..inner).fold(Q::zero(), |acc, k| acc + &row[k] * &b[k][c]))
                .collect()
        })
        .collect()
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect()
}

pub fn transpose(m: &Matrix) -> Matrix {
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols).map(|c| m.iter().map(|r| r[c].clone()).collect()).collect()
}

/// Image of row vector `v` under the linear map `x ↦ M x` (column convention).
pub fn apply(m: &Matrix, v: &[Q]) -> Vec<Q> {
    m.iter().map(|row| dot(row, v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn det_and_rank() {
        let m = vec![vec![qi(2), qi(0)], vec![qi(0), qi(3)]];
        assert_eq!(determinant(&m), qi(6));
        let s = vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]];
        assert_eq!(determinant(&s), qi(0));
        assert_eq!(rank(&s), 1);
        let k = kernel(&s, 2);
        assert_eq!(k.len(), 1);
        assert_eq!(apply(&s, &k[0]), vec![qi(0), qi(0)]);
        let h = vec![vec![q(1, 2), qi(1)], vec![qi(0), qi(2)]];
        assert_eq!(determinant(&h), qi(1));
    }
}
