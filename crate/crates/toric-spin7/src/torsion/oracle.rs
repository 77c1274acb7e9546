//! First-principles oracles: `dΦ` and `dω` expanded symbolically, and the
//! comparisons of the closed-form coefficients against them.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::forms::{d, Blade, ConnectionRules, PolyForm, RatForm, DNU};
use crate::linalg::{self, QMat};
use crate::poly::{q, Poly, Q};
use crate::spin7::{assemble_phi, Spin7Error, SymMatrixField};

use super::elliptic::{elliptic_residual, upper_entries, UPPER_INDEX};
use super::{curvature_matrices, CurvatureSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Spin7(#[from] Spin7Error),
    #[error("dΦ = 0 has no solution for Z at this jet")]
    Inconsistent,
    #[error("dΦ = 0 does not determine Z (rank {0} < 24)")]
    Underdetermined(usize),
    #[error("correspondence fit failed: {0}")]
    Fit(String),
}

/// `dΦ` for the given curvature, using `dθ_ℓ = ω_ℓ`.
pub fn oracle_dphi(v: &SymMatrixField, z: &CurvatureSet) -> Result<RatForm, OracleError> {
    Ok(assemble_phi(v)?.d(&z.rules()))
}

/// Affine truncation of `V` at `p`, recentred so that `p` becomes the origin.
pub fn one_jet(v: &SymMatrixField, p: &[Q]) -> SymMatrixField {
    SymMatrixField::from_fn(|i, j| {
        let mut s = Poly::constant(v.get(i, j).eval(p));
        for k in 0..4 {
            s += &Poly::var(k).scale(&v.deriv(i, j, k).eval(p));
        }
        s
    })
}

fn unit_rules(l: usize, i: usize, j: usize) -> ConnectionRules {
    let mut om: [PolyForm; 4] = Default::default();
    om[l] = PolyForm::term(DNU[i] | DNU[j], Poly::one());
    ConnectionRules::new(om)
}

fn const_form(m: &std::collections::BTreeMap<Blade, Q>) -> PolyForm {
    let mut f = PolyForm::zero();
    for (&b, c) in m {
        f.add_term(b, &Poly::constant(c.clone()));
    }
    f
}

/// Solves `dΦ = 0` for the 24 curvature coefficients at `p`, exactly.
/// Only the 1-jet of `V` at `p` enters.
pub fn solve_z_at(v: &SymMatrixField, p: &[Q]) -> Result<Vec<Q>, OracleError> {
    let jet = one_jet(v, p);
    let phi = assemble_phi(&jet)?;
    let origin = [Q::zero(), Q::zero(), Q::zero(), Q::zero()];
    // the ω terms enter only through d(num), algebraically, so num at the origin suffices
    let base = phi.d(&ConnectionRules::flat()).eval_exact(&origin);
    let den0 = phi.den.eval(&origin);
    let num0 = const_form(&phi.num.eval_exact(&origin));
    let mut columns: Vec<std::collections::BTreeMap<Blade, Q>> = Vec::with_capacity(24);
    for l in 0..4 {
        for i in 0..4 {
            for j in i + 1..4 {
                let col = d(&num0, &unit_rules(l, i, j));
                columns.push(col.eval_exact(&[]).into_iter().map(|(b, c)| (b, c / &den0)).collect());
            }
        }
    }
    let mut blades: Vec<Blade> = base.keys().copied().collect();
    for c in &columns {
        blades.extend(c.keys().copied());
    }
    blades.sort_unstable();
    blades.dedup();
    let a: QMat = blades
        .iter()
        .map(|b| columns.iter().map(|c| c.get(b).cloned().unwrap_or_else(Q::zero)).collect())
        .collect();
    let rhs: Vec<Q> = blades.iter().map(|b| -base.get(b).cloned().unwrap_or_else(Q::zero)).collect();
    let r = linalg::rank(&a);
    if r < 24 {
        return Err(OracleError::Underdetermined(r));
    }
    linalg::solve(&a, &rhs).ok_or(OracleError::Inconsistent)
}

/// Closed-form curvature coefficients at `p`, in the order of [`CurvatureSet::entries`].
pub fn z_formula_at(v: &SymMatrixField, p: &[Q]) -> Vec<Q> {
    curvature_matrices(v).entries().iter().map(|e| e.eval(p)).collect()
}

/// Jet-level span test: are the components of `dΦ(V, Z(V))` at `p`,
/// viewed as linear functionals of the first derivatives of `V`, in the
/// span of the four divergence functionals?
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanReport {
    pub divergence_rank: usize,
    pub combined_rank: usize,
    pub components: usize,
    pub spanned: bool,
}

pub fn dphi_divergence_span(v: &SymMatrixField, p: &[Q]) -> Result<SpanReport, OracleError> {
    let v0: QMat = v.eval(p);
    let origin = [Q::zero(), Q::zero(), Q::zero(), Q::zero()];
    // first-derivative coordinates: (a ≤ b, k)
    let mut coords = Vec::with_capacity(40);
    for (a, b) in UPPER_INDEX {
        for k in 0..4 {
            coords.push((a, b, k));
        }
    }
    let mut comp_cols: Vec<std::collections::BTreeMap<Blade, Q>> = Vec::with_capacity(40);
    for &(a, b, k) in &coords {
        let jet = SymMatrixField::from_fn(|i, j| {
            let mut s = Poly::constant(v0[i][j].clone());
            if (i, j) == (a, b) {
                s += &Poly::var(k);
            }
            s
        });
        let df = oracle_dphi(&jet, &curvature_matrices(&jet))?;
        comp_cols.push(df.num.eval_exact(&origin));
    }
    let mut blades: Vec<Blade> = comp_cols.iter().flat_map(|c| c.keys().copied()).collect();
    blades.sort_unstable();
    blades.dedup();
    let div_rows: QMat = (0..4)
        .map(|j| {
            coords
                .iter()
                .map(|&(a, b, k)| {
                    let hit = (b == j && k == a) || (a != b && a == j && k == b);
                    if hit {
                        Q::one()
                    } else {
                        Q::zero()
                    }
                })
                .collect()
        })
        .collect();
    let comp_rows: QMat = blades
        .iter()
        .map(|bl| comp_cols.iter().map(|c| c.get(bl).cloned().unwrap_or_else(Q::zero)).collect())
        .collect();
    let mut all = div_rows.clone();
    all.extend(comp_rows);
    let divergence_rank = linalg::rank(&div_rows);
    let combined_rank = linalg::rank(&all);
    Ok(SpanReport {
        divergence_rank,
        combined_rank,
        components: blades.len(),
        spanned: combined_rank == divergence_rank,
    })
}

/// `dω_ℓ` for the closed-form curvature of `V`.
pub fn oracle_domega(v: &SymMatrixField) -> [PolyForm; 4] {
    let w = curvature_matrices(v).omega();
    std::array::from_fn(|l| d(&w[l], &ConnectionRules::flat()))
}

/// The 3-blades `dν_abc` ordered as `012, 013, 023, 123`.
pub const THREE_BLADES: [Blade; 4] = [0b0111, 0b1011, 0b1101, 0b1110];

/// The sixteen components `dω_ℓ(dν_abc)`, `ℓ`-major.
pub fn domega_components(v: &SymMatrixField) -> Vec<Poly> {
    let dw = oracle_domega(v);
    let mut out = Vec::with_capacity(16);
    for f in &dw {
        for b in THREE_BLADES {
            out.push(f.component(b));
        }
    }
    out
}

/// Stored correspondence: `dω components = M · (L+Q entries)` on
/// divergence-free fields.  Row `4ℓ + r` is `dω_ℓ` on the `r`-th blade of
/// [`THREE_BLADES`]; columns follow [`UPPER_INDEX`].
pub const DOMEGA_FROM_ELLIPTIC: [[i8; 10]; 16] = correspondence_table();

const fn correspondence_table() -> [[i8; 10]; 16] {
    // dω_ℓ on the blade omitting m equals (−1)^{m+1} (L+Q)_{ℓm}
    let omitted = [3usize, 2, 1, 0];
    let mut t = [[0i8; 10]; 16];
    let mut l = 0;
    while l < 4 {
        let mut r = 0;
        while r < 4 {
            let m = omitted[r];
            let (a, b) = if l <= m { (l, m) } else { (m, l) };
            let col = upper_col(a, b);
            t[4 * l + r][col] = if m.is_multiple_of(2) { -1 } else { 1 };
            r += 1;
        }
        l += 1;
    }
    t
}

const fn upper_col(a: usize, b: usize) -> usize {
    // rows 0..a contribute 4, 3, 2, ... entries
    let mut col = 0;
    let mut i = 0;
    while i < a {
        col += 4 - i;
        i += 1;
    }
    col + (b - a)
}

pub fn correspondence_matrix() -> QMat {
    DOMEGA_FROM_ELLIPTIC.iter().map(|r| r.iter().map(|&x| q(x as i64)).collect()).collect()
}

/// Solves for the constant matrix `M` with `dω = M·(L+Q)` over the given
/// divergence-free fields, exactly.  Fails if `M` is not determined.
pub fn derive_correspondence(fields: &[SymMatrixField]) -> Result<QMat, OracleError> {
    let mut rows_e: QMat = Vec::new();
    let mut rhs: Vec<Vec<Q>> = vec![Vec::new(); 16];
    for v in fields {
        let e = upper_entries(&elliptic_residual(v));
        let w = domega_components(v);
        let mut monos: Vec<u64> = e.iter().chain(w.iter()).flat_map(|p| p.terms().map(|(&m, _)| m).collect::<Vec<_>>()).collect();
        monos.sort_unstable();
        monos.dedup();
        for &m in &monos {
            rows_e.push(e.iter().map(|p| p.coeff(m)).collect());
            for (c, wc) in w.iter().enumerate() {
                rhs[c].push(wc.coeff(m));
            }
        }
    }
    let r = linalg::rank(&rows_e);
    if r < 10 {
        return Err(OracleError::Fit(format!("elliptic entries have rank {r} on the sample")));
    }
    let mut m = Vec::with_capacity(16);
    for (c, b) in rhs.iter().enumerate() {
        let x = linalg::solve(&rows_e, b).ok_or_else(|| OracleError::Fit(format!("component {c} is not a constant combination")))?;
        m.push(x);
    }
    Ok(m)
}

/// Checks `dω = M·(L+Q)` exactly for one field with the stored `M`, and
/// returns the mismatching component indices.
pub fn correspondence_mismatches(v: &SymMatrixField) -> Vec<usize> {
    let e = upper_entries(&elliptic_residual(v));
    let w = domega_components(v);
    let mut bad = Vec::new();
    for (c, row) in DOMEGA_FROM_ELLIPTIC.iter().enumerate() {
        let mut s = Poly::zero();
        for (k, &x) in row.iter().enumerate() {
            if x != 0 {
                s += &e[k].scale(&q(x as i64));
            }
        }
        if s != w[c] {
            bad.push(c);
        }
    }
    bad
}

/// One disagreement between a transcribed formula and its oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub formula_id: String,
    pub index_tuple: Vec<usize>,
    pub printed_term: String,
    pub oracle_term: String,
}

/// Compares the closed-form `Z` with the `dΦ = 0` solve at the given
/// points, and `dω` with the stored combination of `L+Q`.
pub fn formula_deviations(v: &SymMatrixField, points: &[Vec<Q>]) -> Result<Vec<Deviation>, OracleError> {
    let mut out = Vec::new();
    let mut labels = Vec::with_capacity(24);
    for l in 0..4 {
        for i in 0..4 {
            for j in i + 1..4 {
                labels.push((l, i, j));
            }
        }
    }
    for p in points {
        let solved = solve_z_at(v, p)?;
        let printed = z_formula_at(v, p);
        for (n, &(l, i, j)) in labels.iter().enumerate() {
            if solved[n] != printed[n] {
                let id = if i == l || j == l { "z_self" } else { "z_cross" };
                out.push(Deviation {
                    formula_id: id.into(),
                    index_tuple: vec![l, i, j],
                    printed_term: printed[n].to_string(),
                    oracle_term: solved[n].to_string(),
                });
            }
        }
    }
    let w = domega_components(v);
    let e = upper_entries(&elliptic_residual(v));
    for c in correspondence_mismatches(v) {
        let row = &DOMEGA_FROM_ELLIPTIC[c];
        let k = row.iter().position(|&x| x != 0).unwrap_or(0);
        let (a, b) = UPPER_INDEX[k];
        out.push(Deviation {
            formula_id: if a == b { "q_diag".into() } else { "q_offdiag".into() },
            index_tuple: vec![a, b],
            printed_term: e[k].scale(&q(row[k] as i64)).to_string(),
            oracle_term: w[c].to_string(),
        });
    }
    Ok(out)
}

/// Families of random test fields of degree at most two.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Constant plus random linear terms in every entry.
    Affine,
    /// `LᵀL` with `L` unit upper triangular and linear in `ν`.
    UnitTriangular,
    /// Diagonal entries `c + a ν_j²` with random `j`.
    SparseDiagonal,
    /// Each `V_ij` independent of `ν_i` and `ν_j`.
    Termwise,
    /// Second derivatives of a random symmetric `Λ²`-potential.
    CurlCurl,
}

fn small(rng: &mut impl Rng, lo: i64, hi: i64) -> Q {
    q(rng.gen_range(lo..=hi))
}

pub fn random_field(kind: FieldKind, seed: u64) -> SymMatrixField {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    match kind {
        FieldKind::Affine => {
            let c = crate::spin7::rational_spd(seed ^ 0x5eed);
            SymMatrixField::from_fn(|i, j| {
                let mut p = Poly::constant(c[i][j].clone());
                for k in 0..4 {
                    if rng.gen_bool(0.4) {
                        p += &Poly::var(k).scale(&small(&mut rng, -2, 2));
                    }
                }
                p
            })
        }
        FieldKind::UnitTriangular => {
            let mut l: [[Poly; 4]; 4] = Default::default();
            for i in 0..4 {
                l[i][i] = Poly::one();
                for j in i + 1..4 {
                    let mut p = Poly::constant(small(&mut rng, -1, 1));
                    let k = rng.gen_range(0..4);
                    p += &Poly::var(k).scale(&small(&mut rng, -1, 1));
                    l[i][j] = p;
                }
            }
            SymMatrixField::from_fn(|i, j| (0..4).fold(Poly::zero(), |acc, k| &acc + &(&l[k][i] * &l[k][j])))
        }
        FieldKind::SparseDiagonal => SymMatrixField::diag(std::array::from_fn(|_| {
            let k = rng.gen_range(0..4);
            &Poly::constant(small(&mut rng, 1, 3)) + &Poly::var(k).pow(2).scale(&small(&mut rng, 1, 2))
        })),
        FieldKind::Termwise => {
            let c = crate::spin7::rational_spd(seed ^ 0xfeed);
            SymMatrixField::from_fn(|i, j| {
                let free: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
                let mut p = Poly::constant(c[i][j].clone());
                if rng.gen_bool(0.6) {
                    let a = free[rng.gen_range(0..free.len())];
                    let b = free[rng.gen_range(0..free.len())];
                    p += &(&Poly::var(a) * &Poly::var(b)).scale(&small(&mut rng, -2, 2));
                }
                if rng.gen_bool(0.5) {
                    let a = free[rng.gen_range(0..free.len())];
                    p += &Poly::var(a).scale(&small(&mut rng, -2, 2));
                }
                p
            })
        }
        FieldKind::CurlCurl => {
            let mut g: [[Poly; 6]; 6] = Default::default();
            for _ in 0..3 {
                let a = rng.gen_range(0..6);
                let b = rng.gen_range(0..6);
                let e: Vec<u32> = (0..4).map(|_| rng.gen_range(0..=2)).collect();
                let e = if e.iter().sum::<u32>() > 4 { vec![e[0].min(1), e[1], e[2].min(1), e[3].min(1)] } else { e };
                let m = Poly::from_terms(vec![(e, small(&mut rng, 1, 3))]);
                g[a][b] += &m;
                if a != b {
                    g[b][a] += &m;
                }
            }
            let c = crate::spin7::rational_spd(seed ^ 0xc0de);
            let v = super::curl_curl(&g);
            SymMatrixField::from_fn(|i, j| &v.get(i, j).clone() + &Poly::constant(c[i][j].clone()))
        }
    }
}

/// Random point with small rational coordinates.
pub fn random_point(seed: u64) -> Vec<Q> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..4).map(|_| Q::new(rng.gen_range(-5..=5).into(), rng.gen_range(1..=3).into())).collect()
}
