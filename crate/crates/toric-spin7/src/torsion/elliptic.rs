//! The second order system `L(V) + Q(dV) = 0`.

use std::ops::{Add, Mul, Sub};

use crate::poly::Poly;
use crate::spin7::SymMatrixField;

/// `L(V)_ab = Σ_ij V_ij ∂²V_ab/∂ν_i∂ν_j`.
pub fn l_operator(v: &SymMatrixField) -> [[Poly; 4]; 4] {
    let mut out: [[Poly; 4]; 4] = Default::default();
    for a in 0..4 {
        for b in a..4 {
            let mut s = Poly::zero();
            for i in 0..4 {
                for j in 0..4 {
                    let d2 = v.get(a, b).deriv(i).deriv(j);
                    if !d2.is_zero() {
                        s += &(v.get(i, j) * &d2);
                    }
                }
            }
            out[b][a] = s.clone();
            out[a][b] = s;
        }
    }
    out
}

fn others(i: usize) -> [usize; 3] {
    let v: Vec<usize> = (0..4).filter(|&x| x != i).collect();
    [v[0], v[1], v[2]]
}

fn others2(i: usize, j: usize) -> [usize; 2] {
    let v: Vec<usize> = (0..4).filter(|&x| x != i && x != j).collect();
    [v[0], v[1]]
}

/// Quadratic part `Q(dV)`, transcribed term by term.
pub fn q_operator(v: &SymMatrixField) -> [[Poly; 4]; 4] {
    q_kernel(|i, j, p| v.deriv(i, j, p), Poly::zero(), Poly::int(-2))
}

/// `Q` over any scalar ring, given `d(i, j, p) = ∂V_ij/∂ν_p`.
pub fn q_kernel<T, D>(d: D, zero: T, minus_two: T) -> [[T; 4]; 4]
where
    T: Clone + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
    D: Fn(usize, usize, usize) -> T,
{
    let m = |a: T, b: T| a * b;
    let mut out: [[T; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
    for i in 0..4 {
        let [j, k, l] = others(i);
        let terms = [
            m(d(i, j, i), d(i, i, j)),
            m(d(i, j, j), d(i, j, j)),
            m(d(i, k, i), d(i, i, k)),
            m(d(i, j, k), d(k, i, j)),
            m(d(i, j, j), d(k, i, k)),
            m(d(i, k, k), d(i, k, k)),
            m(d(i, i, l), d(l, i, i)),
            m(d(i, j, l), d(l, i, j)),
            m(d(i, k, l), d(l, i, k)),
            m(d(i, j, j), d(l, i, l)),
            m(d(i, k, k), d(l, i, l)),
            m(d(i, l, l), d(i, l, l)),
        ];
        out[i][i] = terms.into_iter().fold(zero.clone(), |acc, t| acc + t) * minus_two.clone();
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let [k, l] = others2(i, j);
            let plus = [
                m(d(i, j, i), d(j, i, j)),
                m(d(i, j, i), d(i, k, k)),
                m(d(i, j, i), d(i, l, l)),
                m(d(i, j, j), d(j, k, k)),
                m(d(i, j, j), d(j, l, l)),
            ];
            let minus = [
                m(d(i, j, k), d(k, i, i)),
                m(d(i, j, l), d(l, i, i)),
                m(d(i, i, j), d(j, j, i)),
                m(d(i, k, j), d(j, j, k)),
                m(d(i, l, j), d(j, j, l)),
                m(d(i, i, k), d(j, k, i)),
                m(d(i, j, k), d(j, k, j)),
                m(d(i, k, k), d(j, k, k)),
                m(d(i, l, k), d(j, k, l)),
                m(d(i, i, l), d(j, l, i)),
                m(d(i, j, l), d(j, l, j)),
                m(d(i, k, l), d(j, l, k)),
                m(d(i, l, l), d(j, l, l)),
            ];
            let s = minus.into_iter().fold(plus.into_iter().fold(zero.clone(), |acc, t| acc + t), |acc, t| acc - t);
            out[j][i] = s.clone();
            out[i][j] = s;
        }
    }
    out
}

/// `L(V) + Q(dV)`.
pub fn elliptic_residual(v: &SymMatrixField) -> [[Poly; 4]; 4] {
    let l = l_operator(v);
    let qq = q_operator(v);
    std::array::from_fn(|a| std::array::from_fn(|b| &l[a][b] + &qq[a][b]))
}

/// The ten independent entries in the order `00,01,02,03,11,12,13,22,23,33`.
pub fn upper_entries(m: &[[Poly; 4]; 4]) -> Vec<Poly> {
    let mut out = Vec::with_capacity(10);
    for a in 0..4 {
        for b in a..4 {
            out.push(m[a][b].clone());
        }
    }
    out
}

pub const UPPER_INDEX: [(usize, usize); 10] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{nu, q};

    #[test]
    fn triple_product_is_a_solution() {
        let v = SymMatrixField::diag([&(&nu(1) * &nu(2)) * &nu(3), nu(2), nu(3), nu(1)]);
        assert!(upper_entries(&elliptic_residual(&v)).iter().all(Poly::is_zero));
    }

    #[test]
    fn constant_field_has_zero_residual() {
        let v = SymMatrixField::constant(&crate::spin7::rational_spd(3));
        assert!(upper_entries(&elliptic_residual(&v)).iter().all(Poly::is_zero));
    }

    #[test]
    fn l_entry_for_square() {
        let v = SymMatrixField::diag([nu(1).pow(2), Poly::one(), Poly::one(), Poly::one()]);
        assert_eq!(l_operator(&v)[0][0], Poly::int(2));
    }

    #[test]
    fn q_is_quadratic() {
        let v = SymMatrixField::from_fn(|i, j| &(&nu(i) * &nu(j)) + &nu((i + j) % 4).pow(2));
        let t = q(3);
        let vt = v.map(|p| p.scale(&t));
        let a = q_operator(&v);
        let b = q_operator(&vt);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b[i][j], a[i][j].scale(&(&t * &t)));
            }
        }
    }
}
