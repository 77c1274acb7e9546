//! Dense exact linear algebra over the rationals.

use num_traits::{One, Zero};

use crate::poly::Q;

pub type QMat = Vec<Vec<Q>>;

pub fn zeros(r: usize, c: usize) -> QMat {
    vec![vec![Q::zero(); c]; r]
}

pub fn identity(n: usize) -> QMat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn matmul(a: &QMat, b: &QMat) -> QMat {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn transpose(a: &QMat) -> QMat {
    let m = a.first().map_or(0, |r| r.len());
    (0..m).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut QMat) -> Vec<usize> {
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
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &QMat) -> usize {
    let mut w = m.clone();
    rref(&mut w).len()
}

pub fn det(m: &QMat) -> Q {
    let n = m.len();
    let mut a = m.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        let inv = Q::one() / &a[c][c];
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for j in c..n {
                let t = &f * &a[c][j];
                a[i][j] -= t;
            }
        }
    }
    d
}

pub fn inverse(m: &QMat) -> Option<QMat> {
    let n = m.len();
    let mut aug: QMat = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.len() < n || piv[n - 1] >= n {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Solves `A x = b`; `None` if inconsistent.  Free variables are set to 0.
pub fn solve(a: &QMat, b: &[Q]) -> Option<Vec<Q>> {
    let n = a.first().map_or(0, |r| r.len());
    let mut aug: QMat = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut row = r.clone();
            row.push(bi.clone());
            row
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.last() == Some(&n) {
        return None;
    }
    let mut x = vec![Q::zero(); n];
    for (r, &c) in piv.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    Some(x)
}
