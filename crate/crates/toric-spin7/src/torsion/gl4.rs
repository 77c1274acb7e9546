//! Change of basis of the Lie algebra of the torus.
//!
//! `U ↦ AU` acts on the fibre metric by `B ↦ ABAᵗ`, hence on `V = B⁻¹`
//! by `V ↦ A⁻ᵗVA⁻¹`.  The multi-moment maps transform through `Λ³U* ≅ ℓ⁴U`,
//! which gives `ν' = det(A) A⁻ᵗ ν`.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::{self, QMat};
use crate::poly::{Poly, Q};
use crate::spin7::SymMatrixField;

use super::elliptic::{elliptic_residual, upper_entries};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gl4Error {
    #[error("matrix is singular")]
    Singular,
    #[error("matrix must be 4×4")]
    Shape,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gl4Action {
    a: QMat,
    inv: QMat,
    det: Q,
}

impl Gl4Action {
    pub fn new(a: QMat) -> Result<Self, Gl4Error> {
        if a.len() != 4 || a.iter().any(|r| r.len() != 4) {
            return Err(Gl4Error::Shape);
        }
        let det = linalg::det(&a);
        if det.is_zero() {
            return Err(Gl4Error::Singular);
        }
        let inv = linalg::inverse(&a).ok_or(Gl4Error::Singular)?;
        Ok(Gl4Action { a, inv, det })
    }

    pub fn identity() -> Self {
        Self::new(linalg::identity(4)).unwrap()
    }

    pub fn scalar(t: Q) -> Result<Self, Gl4Error> {
        let mut m = linalg::zeros(4, 4);
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = t.clone();
        }
        Self::new(m)
    }

    /// Permutation `e_i ↦ e_{σ(i)}`.
    pub fn permutation(sigma: [usize; 4]) -> Result<Self, Gl4Error> {
        let mut m = linalg::zeros(4, 4);
        for (i, &s) in sigma.iter().enumerate() {
            m[s][i] = Q::one();
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &QMat {
        &self.a
    }

    pub fn det(&self) -> &Q {
        &self.det
    }

    /// Action on the generating vector fields: `U' = A U`.
    pub fn u_map(&self) -> QMat {
        self.a.clone()
    }

    /// Action on the connection forms, dual to `U`: `θ' = A⁻ᵗ θ`.
    pub fn theta_map(&self) -> QMat {
        linalg::transpose(&self.inv)
    }

    /// `ν' = M ν` with `M = det(A) A⁻ᵗ`.
    pub fn nu_map(&self) -> QMat {
        let it = linalg::transpose(&self.inv);
        it.iter().map(|r| r.iter().map(|x| x * &self.det).collect()).collect()
    }

    pub fn transform_point(&self, nu: &[Q]) -> Vec<Q> {
        let m = self.nu_map();
        m.iter().map(|r| r.iter().zip(nu).fold(Q::zero(), |acc, (a, b)| acc + a * b)).collect()
    }

    /// Old coordinates as polynomials in the new ones: `ν = Aᵗ ν' / det A`.
    fn pullback_coords(&self) -> Vec<Poly> {
        (0..4)
            .map(|k| {
                let mut p = Poly::zero();
                for j in 0..4 {
                    let c = &self.a[j][k] / &self.det;
                    if !c.is_zero() {
                        p += &Poly::var(j).scale(&c);
                    }
                }
                p
            })
            .collect()
    }

    /// `V'(ν') = A⁻ᵗ V(ν) A⁻¹`.
    pub fn transform(&self, v: &SymMatrixField) -> SymMatrixField {
        let subs = self.pullback_coords();
        let composed = v.map(|p| p.compose(&subs));
        conjugate(&composed, &self.inv)
    }

    /// Transforms a symmetric matrix of polynomials like `V`'s elliptic
    /// residual: `E' = det(A)⁻² A⁻ᵗ E A⁻¹`, as functions of `ν'`.
    pub fn transform_residual(&self, e: &SymMatrixField) -> SymMatrixField {
        let subs = self.pullback_coords();
        let s = (Q::one() / &self.det) / &self.det;
        conjugate(&e.map(|p| p.compose(&subs).scale(&s)), &self.inv)
    }

    /// `act(self) ∘ act(other) = act(self · other)`.
    pub fn compose(&self, other: &Gl4Action) -> Gl4Action {
        Gl4Action::new(linalg::matmul(&self.a, &other.a)).unwrap()
    }
}

/// `Mᵗ V M` entrywise.
fn conjugate(v: &SymMatrixField, m: &QMat) -> SymMatrixField {
    SymMatrixField::from_fn(|a, b| {
        let mut s = Poly::zero();
        for i in 0..4 {
            for j in 0..4 {
                let c = &m[i][a] * &m[j][b];
                if !c.is_zero() {
                    s += &v.get(i, j).scale(&c);
                }
            }
        }
        s
    })
}

/// Random invertible matrix with small integer entries.
pub fn random_invertible(seed: u64) -> Gl4Action {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m: QMat = (0..4)
            .map(|_| (0..4).map(|_| Q::new(rng.gen_range(-3..=3).into(), rng.gen_range(1..=2).into())).collect())
            .collect();
        if let Ok(a) = Gl4Action::new(m) {
            return a;
        }
    }
}

/// Residual of `V` as a symmetric field.
pub fn residual_field(v: &SymMatrixField) -> SymMatrixField {
    SymMatrixField::from_upper(&upper_entries(&elliptic_residual(v)))
}

/// For `A = t·Id`, the exponent `w` with `E(V')(ν') = t^w E(V)(ν)` at
/// corresponding points.  `None` if the ratio is not a single power of `t`
/// or the residual vanishes.
pub fn scaling_weight(v: &SymMatrixField, t: &Q) -> Option<i32> {
    let act = Gl4Action::scalar(t.clone()).ok()?;
    let e = upper_entries(&elliptic_residual(v));
    let e2 = upper_entries(&elliptic_residual(&act.transform(v)));
    // back to the old coordinates: ν' = t³ ν
    let fwd: Vec<Poly> = act.nu_map().iter().map(|r| (0..4).fold(Poly::zero(), |acc, j| &acc + &Poly::var(j).scale(&r[j]))).collect();
    let mut ratio: Option<Q> = None;
    for (a, b) in e.iter().zip(&e2) {
        let b = b.compose(&fwd);
        if a.is_zero() {
            if !b.is_zero() {
                return None;
            }
            continue;
        }
        let (m, c) = a.terms().next().map(|(m, c)| (*m, c.clone()))?;
        let r = b.coeff(m) / c;
        if b != a.scale(&r) {
            return None;
        }
        match &ratio {
            Some(x) if *x != r => return None,
            _ => ratio = Some(r),
        }
    }
    let r = ratio?;
    (-40..=40).find(|&w| power(t, w) == r)
}

fn power(t: &Q, w: i32) -> Q {
    let p = num_traits::pow(t.clone(), w.unsigned_abs() as usize);
    if w < 0 {
        Q::one() / p
    } else {
        p
    }
}

/// Weight of the residual in units of `ℓ = Λ⁴U`: `t^w = det(tI)^{w/4}`.
pub fn ell_weight(w: i32) -> Q {
    Q::new(w.into(), 4.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{nu, q};
    use crate::torsion::{divergence_residual, is_divergence_free};

    fn cycle() -> SymMatrixField {
        SymMatrixField::diag([nu(1), nu(2), nu(3), nu(0)])
    }

    #[test]
    fn identity_acts_trivially() {
        let v = SymMatrixField::from_fn(|i, j| &nu(i) * &nu(j));
        assert_eq!(Gl4Action::identity().transform(&v), v);
    }

    #[test]
    fn singular_is_rejected() {
        assert_eq!(Gl4Action::new(linalg::zeros(4, 4)), Err(Gl4Error::Singular));
    }

    #[test]
    fn permutation_keeps_cycle_a_solution() {
        let p = Gl4Action::permutation([1, 0, 3, 2]).unwrap();
        let w = p.transform(&cycle());
        assert!(divergence_residual(&w).iter().all(Poly::is_zero));
        assert!(upper_entries(&elliptic_residual(&w)).iter().all(Poly::is_zero));
    }

    #[test]
    fn composition_is_matrix_product() {
        let a = random_invertible(1);
        let b = random_invertible(2);
        let v = SymMatrixField::from_fn(|i, j| &nu((i + j) % 4) + &Poly::int((i == j) as i64 * 3));
        assert_eq!(b.transform(&a.transform(&v)), b.compose(&a).transform(&v));
    }

    #[test]
    fn divergence_free_is_preserved() {
        let a = random_invertible(5);
        assert!(is_divergence_free(&a.transform(&cycle())));
    }

    #[test]
    fn residual_transforms_covariantly() {
        let v = SymMatrixField::diag([nu(1).pow(2), nu(2), Poly::int(1), &nu(0) + &Poly::int(2)]);
        let a = random_invertible(3);
        assert_eq!(residual_field(&a.transform(&v)), a.transform_residual(&residual_field(&v)));
    }

    #[test]
    fn scalar_weight_is_minus_ten() {
        let v = SymMatrixField::diag([nu(1).pow(2), Poly::one(), Poly::one(), Poly::one()]);
        assert_eq!(scaling_weight(&v, &q(2)), Some(-10));
        assert_eq!(scaling_weight(&v, &q(3)), Some(-10));
    }
}
