//! Orthogonal generators: `V = diag(V₀,…,V₃)` with `∂V_i/∂ν_i = 0`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::forms::{PolyForm, DNU};
use crate::poly::{mono_from, nu, q, Poly, Q};
use crate::spin7::SymMatrixField;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagonalError {
    #[error("V{0} depends on nu{0}")]
    SelfDependent(usize),
    #[error("unknown family `{0}` (expected linear-cycle, triple-product or cubic)")]
    UnknownFamily(String),
}

/// Open region `lo_k < ν_k < hi_k`, optionally with `V_i > 0` imposed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub lower: [Option<f64>; 4],
    pub upper: [Option<f64>; 4],
    pub require_positive: bool,
    /// A closed box inside the domain used for numerical work.
    pub sample_box: [(f64, f64); 4],
}

impl Domain {
    pub fn positive_octant(vars: &[usize]) -> Self {
        let mut lower = [None; 4];
        for &k in vars {
            lower[k] = Some(0.0);
        }
        Domain { lower, upper: [None; 4], require_positive: true, sample_box: [(1.0, 2.0); 4] }
    }

    pub fn unrestricted() -> Self {
        Domain { lower: [None; 4], upper: [None; 4], require_positive: true, sample_box: [(1.0, 2.0); 4] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalField {
    pub v: [Poly; 4],
    pub domain: Domain,
}

impl DiagonalField {
    pub fn new(v: [Poly; 4], domain: Domain) -> Result<Self, DiagonalError> {
        if let Some(i) = (0..4).find(|&i| v[i].depends_on(i)) {
            return Err(DiagonalError::SelfDependent(i));
        }
        Ok(DiagonalField { v, domain })
    }

    pub fn to_matrix(&self) -> SymMatrixField {
        SymMatrixField::diag(self.v.clone())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let inside = (0..4).all(|k| {
            self.domain.lower[k].is_none_or(|lo| p[k] > lo) && self.domain.upper[k].is_none_or(|hi| p[k] < hi)
        });
        inside && (!self.domain.require_positive || self.v.iter().all(|vi| vi.eval_f64(p) > 0.0))
    }

    pub fn pattern(&self) -> DependencePattern {
        DependencePattern::of(&self.v)
    }
}

// ω_ℓ = Σ sign · V_k ∂V_ℓ/∂ν_k dν_ab over the rows (k, sign, a, b)
const OMEGA_TABLE: [[(usize, i64, usize, usize); 3]; 4] = [
    [(3, -1, 1, 2), (2, 1, 1, 3), (1, -1, 2, 3)],
    [(3, 1, 0, 2), (2, -1, 0, 3), (0, 1, 2, 3)],
    [(3, -1, 0, 1), (1, 1, 0, 3), (0, -1, 1, 3)],
    [(2, 1, 0, 1), (1, -1, 0, 2), (0, 1, 1, 2)],
];

/// The curvature forms `ω_ℓ = dθ_ℓ` of a diagonal field.
pub fn diag_curvature_forms(f: &DiagonalField) -> [PolyForm; 4] {
    std::array::from_fn(|l| {
        let mut w = PolyForm::zero();
        for &(k, s, a, b) in &OMEGA_TABLE[l] {
            let c = (&f.v[k] * &f.v[l].deriv(k)).scale(&q(s));
            w.add_term(DNU[a] | DNU[b], &c);
        }
        w
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedResiduals {
    /// `Σ_j V_j ∂²V_i/∂ν_j²`.
    pub l_red: [Poly; 4],
    /// `∂V_i/∂ν_j · ∂V_j/∂ν_i` for `i < j`, in the order of [`crate::torsion::PAIRS`].
    pub q_red: [Poly; 6],
}

impl ReducedResiduals {
    pub fn is_zero(&self) -> bool {
        self.l_red.iter().chain(&self.q_red).all(Poly::is_zero)
    }
}

pub fn reduced_residuals(f: &DiagonalField) -> ReducedResiduals {
    let v = &f.v;
    let l_red = std::array::from_fn(|i| (0..4).fold(Poly::zero(), |acc, j| &acc + &(&v[j] * &v[i].deriv(j).deriv(j))));
    let q_red = std::array::from_fn(|p| {
        let (i, j) = crate::torsion::PAIRS[p];
        &v[i].deriv(j) * &v[j].deriv(i)
    });
    ReducedResiduals { l_red, q_red }
}

/// `D[i][j]` is true when `V_i` depends on `ν_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DependencePattern {
    pub d: [[bool; 4]; 4],
}

impl DependencePattern {
    pub fn of(v: &[Poly; 4]) -> Self {
        DependencePattern { d: std::array::from_fn(|i| std::array::from_fn(|j| v[i].depends_on(j))) }
    }

    /// From the variable lists of each `V_i`.
    pub fn from_lists(lists: [&[usize]; 4]) -> Self {
        let mut d = [[false; 4]; 4];
        for (i, l) in lists.iter().enumerate() {
            for &j in *l {
                d[i][j] = true;
            }
        }
        DependencePattern { d }
    }

    /// Relabels `i ↦ σ(i)` on both the fields and the variables.
    pub fn permute(&self, sigma: [usize; 4]) -> Self {
        let mut d = [[false; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[sigma[i]][sigma[j]] = self.d[i][j];
            }
        }
        DependencePattern { d }
    }

    pub fn is_constant(&self, i: usize) -> bool {
        !self.d[i].iter().any(|&x| x)
    }

    fn fits(&self, t: &[&[usize]; 4]) -> bool {
        (0..4).all(|i| (0..4).all(|j| !self.d[i][j] || t[i].contains(&j)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    R32,
    R31,
    R23,
    R22,
    Inconsistent,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::R32 => "r32",
            Case::R31 => "r31",
            Case::R23 => "r23",
            Case::R22 => "r22",
            Case::Inconsistent => "inconsistent",
        };
        f.write_str(s)
    }
}

const TEMPLATES: [(Case, [&[usize]; 4]); 4] = [
    (Case::R32, [&[1, 2, 3], &[2, 3], &[3], &[]]),
    (Case::R31, [&[1, 2, 3], &[2], &[3], &[1]]),
    (Case::R23, [&[1, 3], &[2, 3], &[0, 3], &[]]),
    (Case::R22, [&[1, 2], &[2, 3], &[3], &[0]]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub case: Case,
    /// Some `V_i` is constant.
    pub reducible: bool,
    /// Relabeling `i ↦ σ(i)` that brings the pattern into the template.
    pub permutation: Option<[usize; 4]>,
}

impl Classification {
    pub fn label(&self) -> String {
        match (self.case, self.reducible) {
            (Case::Inconsistent, _) => "inconsistent".into(),
            (c, true) => format!("{c} reducible"),
            (c, false) => c.to_string(),
        }
    }
}

pub fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.iter().filter(|&&x| x == i).count() == 1) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Matches the pattern against the four templates under all relabelings.
/// Reducible patterns prefer the templates with a constant entry.
pub fn classify_case(d: &DependencePattern) -> Classification {
    let reducible = (0..4).any(|i| d.is_constant(i));
    let order: [Case; 4] =
        if reducible { [Case::R32, Case::R23, Case::R31, Case::R22] } else { [Case::R31, Case::R22, Case::R32, Case::R23] };
    let perms = permutations4();
    for case in order {
        let t = &TEMPLATES.iter().find(|(c, _)| *c == case).unwrap().1;
        if let Some(&p) = perms.iter().find(|&&p| d.permute(p).fits(t)) {
            return Classification { case, reducible, permutation: Some(p) };
        }
    }
    Classification { case: Case::Inconsistent, reducible, permutation: None }
}

/// The names accepted by [`example_family`].
pub const FAMILY_NAMES: [&str; 3] = ["linear-cycle", "triple-product", "cubic"];

pub fn example_family(name: &str) -> Result<DiagonalField, DiagonalError> {
    let rest = [nu(2), nu(3), nu(1)];
    match name {
        "linear-cycle" => DiagonalField::new([nu(1), nu(2), nu(3), nu(0)], Domain::positive_octant(&[0, 1, 2, 3])),
        "triple-product" => {
            let [a, b, c] = rest;
            DiagonalField::new([&(&nu(1) * &nu(2)) * &nu(3), a, b, c], Domain::positive_octant(&[1, 2, 3]))
        }
        "cubic" => {
            let [a, b, c] = rest;
            let mut dom = Domain::positive_octant(&[1, 2, 3]);
            dom.sample_box = [(1.0, 2.0), (1.0, 2.0), (1.0, 2.0), (0.25, 0.75)];
            DiagonalField::new([cubic_v0(), a, b, c], dom)
        }
        other => Err(DiagonalError::UnknownFamily(other.to_string())),
    }
}

/// `(ν₁ν₂ν₃, ν₂, ν₃, 1)`: `V₃` constant, so the metric splits off a circle.
pub fn reducible_example() -> DiagonalField {
    let v0 = &(&nu(1) * &nu(2)) * &nu(3);
    DiagonalField::new([v0, nu(2), nu(3), Poly::one()], Domain::positive_octant(&[1, 2, 3])).unwrap()
}

/// `ν₁³ν₃ + ν₂³ν₁ − 2ν₃³ν₂`.
pub fn cubic_v0() -> Poly {
    Poly::from_terms(vec![
        (vec![0, 3, 0, 1], q(1)),
        (vec![0, 1, 3, 0], q(1)),
        (vec![0, 0, 1, 3], q(-2)),
    ])
}

/// For `V_i` depending on a single variable `ν_j`: `(i, j, ∂²V_i/∂ν_j² == 0)`.
pub fn single_variable_linearity(f: &DiagonalField) -> Vec<(usize, usize, bool)> {
    let p = f.pattern();
    (0..4)
        .filter_map(|i| {
            let vars: Vec<usize> = (0..4).filter(|&j| p.d[i][j]).collect();
            (vars.len() == 1).then(|| (i, vars[0], f.v[i].deriv(vars[0]).deriv(vars[0]).is_zero()))
        })
        .collect()
}

/// Coefficients `(A, B, C, D)` when `p = A + Bν₂ + Cν₃ + Dν₂ν₃`.
pub fn bilinear_coefficients(p: &Poly) -> Option<[Q; 4]> {
    let monos = [mono_from(&[0, 0, 0, 0]), mono_from(&[0, 0, 1, 0]), mono_from(&[0, 0, 0, 1]), mono_from(&[0, 0, 1, 1])];
    if p.terms().any(|(m, _)| !monos.contains(m)) {
        return None;
    }
    Some(monos.map(|m| p.coeff(m)))
}

/// The decoupled pair `(A+Bν₂)∂²V₀/∂ν₁²` and
/// `(C+Dν₂)∂²V₀/∂ν₁² + ∂²V₀/∂ν₂²`.
pub fn r22_decoupled_residuals(v0: &Poly, abcd: &[Q; 4]) -> [Poly; 2] {
    let [a, b, c, d] = abcd;
    let v11 = v0.deriv(1).deriv(1);
    let v22 = v0.deriv(2).deriv(2);
    let ab = &Poly::constant(a.clone()) + &nu(2).scale(b);
    let cd = &Poly::constant(c.clone()) + &nu(2).scale(d);
    [&ab * &v11, &(&cd * &v11) + &v22]
}

/// The case-r22 field `(V₀, A+Bν₂+Cν₃+Dν₂ν₃, ν₃, ν₀)`.
pub fn r22_field(v0: Poly, abcd: &[Q; 4]) -> Result<DiagonalField, DiagonalError> {
    let [a, b, c, d] = abcd;
    let v1 = Poly::from_terms(vec![
        (vec![0, 0, 0, 0], a.clone()),
        (vec![0, 0, 1, 0], b.clone()),
        (vec![0, 0, 0, 1], c.clone()),
        (vec![0, 0, 1, 1], d.clone()),
    ]);
    DiagonalField::new([v0, v1, nu(3), nu(0)], Domain::unrestricted())
}

/// `Σ_j V_j ∂²V₀/∂ν_j²` for an r22 field splits by powers of `ν₃` into
/// the decoupled pair; returns `true` when the split is exact.
pub fn r22_split_holds(v0: &Poly, abcd: &[Q; 4]) -> bool {
    let Ok(f) = r22_field(v0.clone(), abcd) else {
        return false;
    };
    if v0.depends_on(3) || v0.depends_on(0) {
        return false;
    }
    let full = &reduced_residuals(&f).l_red[0];
    let [e0, e1] = r22_decoupled_residuals(v0, abcd);
    let recombined = &e0 + &(&e1 * &nu(3));
    *full == recombined
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torsion::curvature_matrices;

    #[test]
    fn linear_cycle_forms() {
        let f = example_family("linear-cycle").unwrap();
        let w = diag_curvature_forms(&f);
        assert_eq!(w[0], PolyForm::gens(&[2, 3]).mul_poly(&-nu(2)));
        assert_eq!(w[3], PolyForm::gens(&[1, 2]).mul_poly(&nu(1)));
    }

    #[test]
    fn triple_product_forms() {
        let f = example_family("triple-product").unwrap();
        let w = diag_curvature_forms(&f);
        let n = |e: &[u32]| Poly::from_terms(vec![(e.to_vec(), q(-1))]);
        let mut w0 = PolyForm::gens(&[1, 2]).mul_poly(&n(&[0, 2, 1, 0]));
        w0 = &w0 + &PolyForm::gens(&[3, 1]).mul_poly(&n(&[0, 1, 0, 2]));
        w0 = &w0 + &PolyForm::gens(&[2, 3]).mul_poly(&n(&[0, 0, 2, 1]));
        assert_eq!(w[0], w0);
        assert_eq!(w[1], PolyForm::gens(&[0, 3]).mul_poly(&-nu(3)));
        assert_eq!(w[2], PolyForm::gens(&[0, 1]).mul_poly(&-nu(1)));
        assert_eq!(w[3], PolyForm::gens(&[0, 2]).mul_poly(&-nu(2)));
    }

    #[test]
    fn forms_match_general_formulas() {
        for name in FAMILY_NAMES {
            let f = example_family(name).unwrap();
            assert_eq!(diag_curvature_forms(&f), curvature_matrices(&f.to_matrix()).omega(), "{name}");
        }
    }

    #[test]
    fn families_solve_reduced_equations() {
        for name in FAMILY_NAMES {
            assert!(reduced_residuals(&example_family(name).unwrap()).is_zero(), "{name}");
        }
    }

    #[test]
    fn l_red_of_square() {
        let f = DiagonalField::new([nu(1).pow(2), Poly::one(), Poly::one(), Poly::one()], Domain::unrestricted()).unwrap();
        assert_eq!(reduced_residuals(&f).l_red[0], Poly::int(2));
    }

    #[test]
    fn self_dependence_rejected() {
        let e = DiagonalField::new([nu(0), Poly::one(), Poly::one(), Poly::one()], Domain::unrestricted());
        assert_eq!(e, Err(DiagonalError::SelfDependent(0)));
    }

    #[test]
    fn classification_examples() {
        let c = classify_case(&DependencePattern::from_lists([&[1, 2, 3], &[2], &[3], &[1]]));
        assert_eq!((c.case, c.reducible), (Case::R31, false));
        let c = classify_case(&DependencePattern::from_lists([&[1, 2, 3], &[2, 3], &[3], &[]]));
        assert_eq!((c.case, c.reducible), (Case::R32, true));
        let c = classify_case(&DependencePattern::from_lists([&[1], &[0], &[], &[]]));
        assert_eq!(c.case, Case::Inconsistent);
    }

    #[test]
    fn cubic_domain_box_is_positive() {
        let f = example_family("cubic").unwrap();
        assert!(f.contains(&[1.5, 1.0, 1.0, 0.75]));
        assert!(!f.contains(&[1.5, 0.1, 0.1, 2.0]));
    }

    #[test]
    fn unknown_family() {
        assert!(matches!(example_family("helix"), Err(DiagonalError::UnknownFamily(_))));
    }
}
