//! Model forms and the Spin(7) 4-form and metric built from `V`.

use nalgebra::{Matrix4, SymmetricEigen};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::forms::{Blade, PolyForm, RatForm, RatFunc};
use crate::linalg::{self, QMat};
use crate::poly::{q, Poly, Q};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Spin7Error {
    #[error("det(V) vanishes identically")]
    Degenerate,
    #[error("matrix is singular")]
    Singular,
}

/// One of the four cyclic permutations `(ijkℓ)` of `(0123)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cyclic {
    pub idx: [usize; 4],
}

impl Cyclic {
    /// `(−1)^i` for the leading index.
    pub fn sign_first(&self) -> i64 {
        if self.idx[0].is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// `(−1)^ℓ` for the trailing index.
    pub fn sign_last(&self) -> i64 {
        if self.idx[3].is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

pub const CYCLIC: [Cyclic; 4] = [
    Cyclic { idx: [0, 1, 2, 3] },
    Cyclic { idx: [1, 2, 3, 0] },
    Cyclic { idx: [2, 3, 0, 1] },
    Cyclic { idx: [3, 0, 1, 2] },
];

/// Hodge star of a form on the generators in `support`, orthonormal and
/// oriented by their increasing order.  Coefficients are carried along.
pub fn hodge_star(a: &PolyForm, support: Blade) -> PolyForm {
    let mut out = PolyForm::zero();
    for (&b, c) in a.terms() {
        assert_eq!(b & !support, 0, "form leaves the star's support");
        let comp = support & !b;
        // e_B ∧ *e_B = vol requires *e_B = sign(B, Bᶜ) e_{Bᶜ}
        let s = crate::forms::wedge_sign(b, comp);
        out.add_term(comp, &if s > 0 { c.clone() } else { -c });
    }
    out
}

/// `φ₀ = e¹²³ − e¹(e⁴⁵+e⁶⁷) − e²(e⁴⁶+e⁷⁵) − e³(e⁴⁷+e⁵⁶)`.
pub fn model_phi3() -> PolyForm {
    let t = |g: &[usize], s: i64| PolyForm::gens(g).scale(&q(s));
    let parts = [
        t(&[1, 2, 3], 1),
        t(&[1, 4, 5], -1),
        t(&[1, 6, 7], -1),
        t(&[2, 4, 6], -1),
        t(&[2, 7, 5], -1),
        t(&[3, 4, 7], -1),
        t(&[3, 5, 6], -1),
    ];
    parts.iter().fold(PolyForm::zero(), |acc, p| &acc + p)
}

/// `Φ₀ = e⁰ ∧ φ₀ + *φ₀` on the constant generators `e⁰..e⁷`, with
/// `vol₀ = e⁰¹²³⁴⁵⁶⁷`.
pub fn model_phi0() -> PolyForm {
    let phi = model_phi3();
    let star7 = hodge_star(&phi, 0b1111_1110);
    &PolyForm::gen(0).wedge(&phi) + &star7
}

/// Symmetric 4×4 matrix of polynomials in `ν₀..ν₃`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymMatrixField {
    e: [[Poly; 4]; 4],
}

impl SymMatrixField {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Poly) -> Self {
        let mut e: [[Poly; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in i..4 {
                let p = f(i, j);
                e[i][j] = p.clone();
                e[j][i] = p;
            }
        }
        SymMatrixField { e }
    }

    pub fn diag(d: [Poly; 4]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i].clone() } else { Poly::zero() })
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { Poly::one() } else { Poly::zero() })
    }

    pub fn constant(m: &QMat) -> Self {
        Self::from_fn(|i, j| Poly::constant(m[i][j].clone()))
    }

    /// Upper-triangular row-major entries `00,01,02,03,11,12,13,22,23,33`.
    pub fn from_upper(entries: &[Poly]) -> Self {
        assert_eq!(entries.len(), 10);
        let mut k = 0;
        let mut e: [[Poly; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in i..4 {
                e[i][j] = entries[k].clone();
                e[j][i] = entries[k].clone();
                k += 1;
            }
        }
        SymMatrixField { e }
    }

    pub fn upper(&self) -> Vec<Poly> {
        let mut v = Vec::with_capacity(10);
        for i in 0..4 {
            for j in i..4 {
                v.push(self.e[i][j].clone());
            }
        }
        v
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.e[i][j]
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        Self::from_fn(|i, j| f(&self.e[i][j]))
    }

    /// `∂V_ij/∂ν_p`.
    pub fn deriv(&self, i: usize, j: usize, p: usize) -> Poly {
        self.e[i][j].deriv(p)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| i == j || self.e[i][j].is_zero()))
    }

    pub fn is_constant(&self) -> bool {
        self.e.iter().flatten().all(|p| p.is_constant())
    }

    pub fn det(&self) -> Poly {
        det_poly(&self.e.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    /// Adjugate by cofactors.
    pub fn adj(&self) -> [[Poly; 4]; 4] {
        let mut out: [[Poly; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in 0..4 {
                // adj_ij = (−1)^{i+j} M_ji
                let minor: Vec<Vec<Poly>> = (0..4)
                    .filter(|&r| r != j)
                    .map(|r| (0..4).filter(|&c| c != i).map(|c| self.e[r][c].clone()).collect())
                    .collect();
                let m = det_poly(&minor);
                out[i][j] = if (i + j) % 2 == 0 { m } else { -m };
            }
        }
        out
    }

    pub fn eval(&self, x: &[Q]) -> QMat {
        (0..4).map(|i| (0..4).map(|j| self.e[i][j].eval(x)).collect()).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.e[i][j].eval_f64(x))
    }

    pub fn min_eigenvalue_at(&self, x: &[f64]) -> f64 {
        SymmetricEigen::new(self.eval_f64(x)).eigenvalues.min()
    }

    pub fn is_pd_at(&self, x: &[f64]) -> bool {
        self.min_eigenvalue_at(x) > 0.0
    }

    pub fn display(&self) -> String {
        let mut rows = Vec::new();
        for i in 0..4 {
            let r: Vec<String> = (0..4).map(|j| self.e[i][j].to_string()).collect();
            rows.push(format!("[{}]", r.join(", ")));
        }
        rows.join("\n")
    }
}

/// Determinant by Laplace expansion along the first row.
pub fn det_poly(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    match n {
        0 => Poly::one(),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut total = Poly::zero();
            for c in 0..n {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Poly>> =
                    (1..n).map(|r| (0..n).filter(|&k| k != c).map(|k| m[r][k].clone()).collect()).collect();
                let t = &m[0][c] * &det_poly(&minor);
                if c % 2 == 0 {
                    total += &t;
                } else {
                    total -= &t;
                }
            }
            total
        }
    }
}

/// `Σ_cyc (−1)^i θ_i ∧ dν_jkℓ`.
pub fn phi_part_s1() -> PolyForm {
    CYCLIC.iter().fold(PolyForm::zero(), |acc, c| {
        let [i, j, k, l] = c.idx;
        let t = PolyForm::gens(&[4 + i, j, k, l]).scale(&q(c.sign_first()));
        &acc + &t
    })
}

/// `Σ_cyc (−1)^ℓ θ_ijk ∧ dν_ℓ`.
pub fn phi_part_s2() -> PolyForm {
    CYCLIC.iter().fold(PolyForm::zero(), |acc, c| {
        let [i, j, k, l] = c.idx;
        let t = PolyForm::gens(&[4 + i, 4 + j, 4 + k, l]).scale(&q(c.sign_last()));
        &acc + &t
    })
}

/// `dνᵗ adj(V) θ = Σ_ij adj(V)_ij dν_i ∧ θ_j`.
pub fn phi_part_t(adj: &[[Poly; 4]; 4]) -> PolyForm {
    let mut t = PolyForm::zero();
    for i in 0..4 {
        for j in 0..4 {
            t = &t + &PolyForm::gens(&[i, 4 + j]).mul_poly(&adj[i][j]);
        }
    }
    t
}

/// `Φ = det(V)·S₁ + S₂ + (dνᵗ adj(V) θ)² / (2 det V)`.
pub fn assemble_phi(v: &SymMatrixField) -> Result<RatForm, Spin7Error> {
    let det = v.det();
    if det.is_zero() {
        return Err(Spin7Error::Degenerate);
    }
    let t = phi_part_t(&v.adj());
    let tt = t.wedge(&t);
    let s1 = phi_part_s1();
    let s2 = phi_part_s2();
    let two_det = det.scale(&q(2));
    let num = &(&s1.mul_poly(&(&two_det * &det)) + &s2.mul_poly(&two_det)) + &tt;
    Ok(RatForm::new(num, two_det))
}

/// 8×8 metric in the coframe order `(θ₀..θ₃, dν₀..dν₃)`:
/// `g = θᵗ (adj V / det V) θ + dνᵗ adj(V) dν`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricField {
    pub g: Vec<Vec<RatFunc>>,
}

pub fn assemble_metric(v: &SymMatrixField) -> Result<MetricField, Spin7Error> {
    let det = v.det();
    if det.is_zero() {
        return Err(Spin7Error::Degenerate);
    }
    let adj = v.adj();
    let mut g = vec![vec![RatFunc::poly(Poly::zero()); 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            g[i][j] = RatFunc::new(adj[i][j].clone(), det.clone());
            g[4 + i][4 + j] = RatFunc::poly(adj[i][j].clone());
        }
    }
    Ok(MetricField { g })
}

impl MetricField {
    pub fn is_symmetric(&self) -> bool {
        (0..8).all(|i| (0..8).all(|j| self.g[i][j] == self.g[j][i]))
    }

    pub fn eval_f64(&self, x: &[f64]) -> nalgebra::SMatrix<f64, 8, 8> {
        nalgebra::SMatrix::<f64, 8, 8>::from_fn(|i, j| {
            if self.g[i][j].is_zero() {
                0.0
            } else {
                self.g[i][j].eval_f64(x)
            }
        })
    }

    pub fn min_eigenvalue_at(&self, x: &[f64]) -> f64 {
        SymmetricEigen::new(self.eval_f64(x)).eigenvalues.min()
    }
}

/// Images of `e⁰..e⁷` in the adapted coframe for `V = A²`:
/// `e⁰ = θ̂₀, e¹..e³ = α₁..α₃, e⁴ = −α₀, e⁵..e⁷ = θ̂₁..θ̂₃`, where
/// `θ̂ = A⁻¹θ` and `α = det(A) A⁻¹ dν`.
pub fn adapted_coframe(a: &QMat) -> Result<[PolyForm; 8], Spin7Error> {
    let inv = linalg::inverse(a).ok_or(Spin7Error::Singular)?;
    let det_a = linalg::det(a);
    let theta_hat = |i: usize| -> PolyForm {
        (0..4).fold(PolyForm::zero(), |acc, j| &acc + &PolyForm::theta(j).scale(&inv[i][j]))
    };
    let alpha = |i: usize| -> PolyForm {
        (0..4).fold(PolyForm::zero(), |acc, j| &acc + &PolyForm::dnu(j).scale(&(&det_a * &inv[i][j])))
    };
    Ok([
        theta_hat(0),
        alpha(1),
        alpha(2),
        alpha(3),
        -&alpha(0),
        theta_hat(1),
        theta_hat(2),
        theta_hat(3),
    ])
}

/// `Φ₀` pulled back along the adapted coframe of a constant `A`.
pub fn phi_from_frame(a: &QMat) -> Result<PolyForm, Spin7Error> {
    Ok(model_phi0().substitute_generators(&adapted_coframe(a)?))
}

/// Metric `Σ (eᵏ)²` of the adapted coframe, as an 8×8 constant matrix in
/// the coframe order `(θ, dν)`.
pub fn frame_metric(a: &QMat) -> Result<QMat, Spin7Error> {
    let frame = adapted_coframe(a)?;
    let mut rows: QMat = Vec::new();
    for f in &frame {
        let mut r = vec![Q::zero(); 8];
        for (&b, c) in f.terms() {
            let g = b.trailing_zeros() as usize;
            // coframe order (θ₀..θ₃, dν₀..dν₃)
            let col = if g >= 4 { g - 4 } else { g + 4 };
            r[col] = c.constant_term();
        }
        rows.push(r);
    }
    Ok(linalg::matmul(&linalg::transpose(&rows), &rows))
}

/// Checks `*₈Φ = Φ` on constant forms.
pub fn is_self_dual(f: &PolyForm) -> bool {
    hodge_star(f, 0xff) == *f
}

pub fn rational_spd(seed: u64) -> QMat {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let b: QMat = (0..4).map(|_| (0..4).map(|_| q(rng.gen_range(-3..=3))).collect()).collect();
    let mut m = linalg::matmul(&b, &linalg::transpose(&b));
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += Q::one();
    }
    m
}
