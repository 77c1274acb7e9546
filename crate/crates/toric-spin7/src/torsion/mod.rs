//! Torsion-free conditions for the ansatz: divergence, curvature
//! coefficients, the elliptic system and the symbolic oracles.

pub mod elliptic;
pub mod gl4;
pub mod oracle;
pub mod potential;

use crate::forms::{ConnectionRules, PolyForm, DNU};
use crate::poly::Poly;
use crate::spin7::SymMatrixField;

pub use elliptic::{elliptic_residual, l_operator, q_operator};
pub use oracle::{oracle_domega, oracle_dphi};

/// `Σ_i ∂V_ij/∂ν_i` for `j = 0..3`.
pub fn divergence_residual(v: &SymMatrixField) -> [Poly; 4] {
    std::array::from_fn(|j| (0..4).fold(Poly::zero(), |acc, i| &acc + &v.deriv(i, j, i)))
}

pub fn is_divergence_free(v: &SymMatrixField) -> bool {
    divergence_residual(v).iter().all(Poly::is_zero)
}

/// Four skew matrices `Z_ℓ = (z^{ij}_ℓ)` of curvature coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CurvatureSet {
    pub z: [[[Poly; 4]; 4]; 4],
}

impl CurvatureSet {
    fn set(&mut self, l: usize, a: usize, b: usize, val: Poly) {
        self.z[l][b][a] = -&val;
        self.z[l][a][b] = val;
    }

    pub fn is_skew(&self) -> bool {
        (0..4).all(|l| (0..4).all(|i| (0..4).all(|j| self.z[l][i][j] == -&self.z[l][j][i])))
    }

    /// `ω_ℓ = Σ_{i<j} z^{ij}_ℓ dν_ij`.
    pub fn omega(&self) -> [PolyForm; 4] {
        std::array::from_fn(|l| {
            let mut w = PolyForm::zero();
            for i in 0..4 {
                for j in i + 1..4 {
                    w.add_term(DNU[i] | DNU[j], &self.z[l][i][j]);
                }
            }
            w
        })
    }

    pub fn from_omega(omega: &[PolyForm; 4]) -> Self {
        let mut c = CurvatureSet::default();
        for (l, w) in omega.iter().enumerate() {
            for i in 0..4 {
                for j in i + 1..4 {
                    c.set(l, i, j, w.component(DNU[i] | DNU[j]));
                }
            }
        }
        c
    }

    pub fn rules(&self) -> ConnectionRules {
        ConnectionRules::new(self.omega())
    }

    pub fn is_zero(&self) -> bool {
        self.z.iter().flatten().flatten().all(Poly::is_zero)
    }

    /// The 24 independent entries `z^{ij}_ℓ, i<j`, in `(ℓ, i, j)` order.
    pub fn entries(&self) -> Vec<Poly> {
        let mut out = Vec::with_capacity(24);
        for l in 0..4 {
            for i in 0..4 {
                for j in i + 1..4 {
                    out.push(self.z[l][i][j].clone());
                }
            }
        }
        out
    }
}

/// The `(ijk)` attached to each `ℓ`, used with its three cyclic rotations.
pub const INDEX_TABLE: [[usize; 3]; 4] = [[1, 2, 3], [3, 2, 0], [0, 1, 3], [0, 2, 1]];

pub fn rotations(t: [usize; 3]) -> [[usize; 3]; 3] {
    let [i, j, k] = t;
    [[i, j, k], [j, k, i], [k, i, j]]
}

/// `z^{ℓi}_ℓ = Σ_p V_pj ∂_p V_ℓk − V_pk ∂_p V_ℓj`.
pub fn z_formula_a(v: &SymMatrixField, l: usize, [_i, j, k]: [usize; 3]) -> Poly {
    let mut s = Poly::zero();
    for p in 0..4 {
        s += &(v.get(p, j) * &v.deriv(l, k, p));
        s -= &(v.get(p, k) * &v.deriv(l, j, p));
    }
    s
}

/// `z^{ij}_ℓ = V_ℓk(∂_i V_ℓi + ∂_j V_ℓj + ∂_k V_ℓk) + Σ_p V_ℓp ∂_p V_ℓk
///  − V_ik ∂_i V_ℓℓ − V_jk ∂_j V_ℓℓ − V_kk ∂_k V_ℓℓ`.
pub fn z_formula_b(v: &SymMatrixField, l: usize, [i, j, k]: [usize; 3]) -> Poly {
    let trace = &(&v.deriv(l, i, i) + &v.deriv(l, j, j)) + &v.deriv(l, k, k);
    let mut s = v.get(l, k) * &trace;
    for p in 0..4 {
        s += &(v.get(l, p) * &v.deriv(l, k, p));
    }
    s -= &(v.get(i, k) * &v.deriv(l, l, i));
    s -= &(v.get(j, k) * &v.deriv(l, l, j));
    s -= &(v.get(k, k) * &v.deriv(l, l, k));
    s
}

pub fn curvature_matrices(v: &SymMatrixField) -> CurvatureSet {
    let mut c = CurvatureSet::default();
    for l in 0..4 {
        for t in rotations(INDEX_TABLE[l]) {
            c.set(l, l, t[0], z_formula_a(v, l, t));
            c.set(l, t[0], t[1], z_formula_b(v, l, t));
        }
    }
    c
}

/// Symmetric 4×4 field from a symmetric form on `Λ²ℝ⁴`:
/// `V_ab = Σ_{k,ℓ} ∂_k ∂_ℓ G_{ak;bℓ}`, with `G_{ak;bℓ}` skew in each pair.
/// Always divergence free.
pub fn curl_curl(g: &[[Poly; 6]; 6]) -> SymMatrixField {
    SymMatrixField::from_fn(|a, b| {
        let mut s = Poly::zero();
        for k in 0..4 {
            for l in 0..4 {
                let (Some((pa, sa)), Some((pb, sb))) = (pair_index(a, k), pair_index(b, l)) else {
                    continue;
                };
                let t = g[pa][pb].deriv(k).deriv(l);
                if sa * sb > 0 {
                    s += &t;
                } else {
                    s -= &t;
                }
            }
        }
        s
    })
}

/// Pairs `ij` of `Λ²ℝ⁴` in the order `01,02,03,12,13,23`.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Index and sign of the ordered pair `(i,j)` in [`PAIRS`].
pub fn pair_index(i: usize, j: usize) -> Option<(usize, i32)> {
    if i == j {
        return None;
    }
    let (a, b, s) = if i < j { (i, j, 1) } else { (j, i, -1) };
    PAIRS.iter().position(|&p| p == (a, b)).map(|k| (k, s))
}

/// Hodge dual of a pair: `*(ij) = sign · (kℓ)` with `dν_ij ∧ dν_kℓ = sign · dν_0123`.
pub fn pair_star(k: usize) -> (usize, i32) {
    let (i, j) = PAIRS[k];
    let (a, b) = {
        let rest: Vec<usize> = (0..4).filter(|&x| x != i && x != j).collect();
        (rest[0], rest[1])
    };
    let s = crate::forms::wedge_sign(DNU[i] | DNU[j], DNU[a] | DNU[b]);
    (pair_index(a, b).unwrap().0, s)
}
