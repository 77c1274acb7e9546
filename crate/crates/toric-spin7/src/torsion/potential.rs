//! Potential for a divergence-free `V` on a box: a symmetric form `A` on
//! `Λ²ℝ⁴` whose second derivatives give back `V`,
//! `V_ab = Σ_{k,ℓ} ∂_k ∂_ℓ A_{ak,*bℓ}`.
//!
//! Anti-derivatives are cumulative trapezoid sums along coordinate lines
//! from the lower corner, with a Gregory end correction.

use rayon::prelude::*;
use thiserror::Error;

use crate::spin7::SymMatrixField;

use super::{pair_index, pair_star, PAIRS};

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("grid needs at least 3 points per axis")]
    GridTooSmall,
    #[error("box must have hi > lo on every axis")]
    EmptyBox,
    #[error("divergence residual {max:.3e} exceeds tolerance {tol:.3e}")]
    NotDivergenceFree { max: f64, tol: f64 },
}

/// Uniform grid on a 4-box, row-major with `ν₃` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid4 {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    pub n: [usize; 4],
}

impl Grid4 {
    pub fn new(lo: [f64; 4], hi: [f64; 4], n: [usize; 4]) -> Result<Self, PotentialError> {
        if n.iter().any(|&k| k < 3) {
            return Err(PotentialError::GridTooSmall);
        }
        if (0..4).any(|k| hi[k] <= lo[k]) {
            return Err(PotentialError::EmptyBox);
        }
        Ok(Grid4 { lo, hi, n })
    }

    pub fn cube(lo: f64, hi: f64, n: usize) -> Result<Self, PotentialError> {
        Self::new([lo; 4], [hi; 4], [n; 4])
    }

    pub fn h(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / (self.n[k] - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn stride(&self, k: usize) -> usize {
        self.n[k + 1..].iter().product()
    }

    pub fn index(&self, i: [usize; 4]) -> usize {
        ((i[0] * self.n[1] + i[1]) * self.n[2] + i[2]) * self.n[3] + i[3]
    }

    pub fn multi(&self, mut idx: usize) -> [usize; 4] {
        let mut out = [0; 4];
        for k in (0..4).rev() {
            out[k] = idx % self.n[k];
            idx /= self.n[k];
        }
        out
    }

    pub fn point(&self, i: [usize; 4]) -> [f64; 4] {
        std::array::from_fn(|k| self.lo[k] + i[k] as f64 * self.h(k))
    }

    pub fn sample(&self, f: impl Fn([f64; 4]) -> f64 + Sync) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|m| f(self.point(self.multi(m)))).collect()
    }

    fn is_interior(&self, i: [usize; 4]) -> bool {
        (0..4).all(|k| i[k] > 0 && i[k] + 1 < self.n[k])
    }
}

/// `V` sampled on a grid; entries in upper-triangular order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledV {
    pub grid: Grid4,
    pub entries: Vec<Vec<f64>>,
}

impl SampledV {
    pub fn from_field(v: &SymMatrixField, grid: Grid4) -> Self {
        let entries = upper_pairs().map(|(a, b)| grid.sample(|x| v.get(a, b).eval_f64(&x))).collect();
        SampledV { grid, entries }
    }

    pub fn from_fn(grid: Grid4, f: impl Fn([f64; 4]) -> [[f64; 4]; 4] + Sync) -> Self {
        let entries = upper_pairs().map(|(a, b)| grid.sample(|x| f(x)[a][b])).collect();
        SampledV { grid, entries }
    }

    pub fn get(&self, a: usize, b: usize) -> &[f64] {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        &self.entries[upper_pos(a, b)]
    }

    /// Max over interior points of `|Σ_i D_i V_ij|`, centered differences.
    pub fn divergence_max(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .into_par_iter()
            .map(|m| {
                let i = g.multi(m);
                if !g.is_interior(i) {
                    return 0.0;
                }
                (0..4)
                    .map(|j| (0..4).map(|k| central(g, self.get(k, j), m, k)).sum::<f64>().abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn upper_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..4).flat_map(|a| (a..4).map(move |b| (a, b)))
}

fn upper_pos(a: usize, b: usize) -> usize {
    upper_pairs().position(|p| p == (a, b)).unwrap()
}

fn central(g: &Grid4, f: &[f64], m: usize, k: usize) -> f64 {
    let s = g.stride(k);
    (f[m + s] - f[m - s]) / (2.0 * g.h(k))
}

/// Cumulative `∫_{lo_k}^{ν_k} f dν_k` with trapezoid sums and the end
/// correction `−h²/12 (f'(ν_k) − f'(lo_k))`; derivatives by 3-point stencils.
pub fn cumulative_integral(g: &Grid4, f: &[f64], k: usize) -> Vec<f64> {
    let n = g.n[k];
    let s = g.stride(k);
    let h = g.h(k);
    let mut out = vec![0.0; f.len()];
    let deriv = |base: usize, j: usize| -> f64 {
        let at = |t: usize| f[base + t * s];
        if j == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if j == n - 1 {
            (3.0 * at(j) - 4.0 * at(j - 1) + at(j - 2)) / (2.0 * h)
        } else {
            (at(j + 1) - at(j - 1)) / (2.0 * h)
        }
    };
    for base in 0..f.len() {
        if !(base / s).is_multiple_of(n) {
            continue;
        }
        let d0 = deriv(base, 0);
        let mut acc = 0.0;
        for j in 1..n {
            acc += 0.5 * h * (f[base + (j - 1) * s] + f[base + j * s]);
            out[base + j * s] = acc - h * h / 12.0 * (deriv(base, j) - d0);
        }
    }
    out
}

/// `f` restricted to the face `ν_k = lo_k` and extended constantly in `ν_k`.
fn from_lower_face(g: &Grid4, f: &[f64], k: usize) -> Vec<f64> {
    let n = g.n[k];
    let s = g.stride(k);
    (0..f.len()).map(|m| f[m - ((m / s) % n) * s]).collect()
}

/// Skew `P` with `X_i = Σ_j ∂_j P_ij` for a divergence-free vector field `X`.
/// Only `P_03, P_13, P_23` and their negatives are nonzero.
pub fn skew_potential(g: &Grid4, x: [&[f64]; 4]) -> [[Vec<f64>; 4]; 4] {
    let mut p: [[Vec<f64>; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; g.len()]));
    for i in 0..3 {
        let mut col = cumulative_integral(g, x[i], 3);
        if i == 2 {
            let face = from_lower_face(g, x[3], 3);
            let corr = cumulative_integral(g, &face, 2);
            for (c, r) in col.iter_mut().zip(&corr) {
                *c -= r;
            }
        }
        p[3][i] = col.iter().map(|v| -v).collect();
        p[i][3] = col;
    }
    p
}

/// Potential and intermediate fields.
#[derive(Clone, Debug)]
pub struct PotentialField {
    pub grid: Grid4,
    /// `W̃_{pq,i}`, indexed `[pair][i]`.
    pub w_tilde: Vec<[Vec<f64>; 4]>,
    /// `F_{ij;kℓ}`, symmetric, with `V_ab = Σ ∂_k∂_ℓ F_{ak;bℓ}`.
    pub f: Vec<Vec<Vec<f64>>>,
    /// `A_{ij,mn} = ½ Σ ε_{mnkℓ} F_{ij;kℓ}`, so that `A_{ij,*mn} = F_{ij;mn}`.
    pub a: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialOptions {
    /// Rejection threshold for the centered-difference divergence.
    pub div_tol: f64,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        PotentialOptions { div_tol: 1e-8 }
    }
}

pub fn potential_construct(v: &SampledV, opts: PotentialOptions) -> Result<PotentialField, PotentialError> {
    let g = &v.grid;
    let div = v.divergence_max();
    if !(div <= opts.div_tol) {
        return Err(PotentialError::NotDivergenceFree { max: div, tol: opts.div_tol });
    }
    let p: Vec<[[Vec<f64>; 4]; 4]> =
        (0..4).into_par_iter().map(|b| skew_potential(g, std::array::from_fn(|i| v.get(b, i)))).collect();
    // W̃_{pq,i} = P^{(q)}_{pi} − P^{(p)}_{qi}
    let w_tilde: Vec<[Vec<f64>; 4]> = PAIRS
        .iter()
        .map(|&(pp, qq)| std::array::from_fn(|i| p[qq][pp][i].iter().zip(&p[pp][qq][i]).map(|(a, b)| a - b).collect()))
        .collect();
    let c: Vec<[[Vec<f64>; 4]; 4]> = w_tilde
        .par_iter()
        .map(|w| skew_potential(g, std::array::from_fn(|i| w[i].as_slice())))
        .collect();
    // F_{pq;jl} = ½ (C^{(pq)}_{jl} + C^{(jl)}_{pq})
    let f: Vec<Vec<Vec<f64>>> = (0..6)
        .map(|r| {
            (0..6)
                .map(|s| {
                    let (j, l) = PAIRS[s];
                    let (p0, q0) = PAIRS[r];
                    c[r][j][l].iter().zip(&c[s][p0][q0]).map(|(x, y)| 0.5 * (x + y)).collect()
                })
                .collect()
        })
        .collect();
    let a = (0..6)
        .map(|r| {
            (0..6)
                .map(|s| {
                    let (t, sign) = pair_star(s);
                    f[r][t].iter().map(|x| sign as f64 * x).collect()
                })
                .collect()
        })
        .collect();
    Ok(PotentialField { grid: g.clone(), w_tilde, f, a })
}

impl PotentialField {
    /// `A_{ij,*mn}` for pair indices.
    fn a_star(&self, r: usize, s: usize) -> (&[f64], f64) {
        let (t, sign) = pair_star(s);
        (&self.a[r][t], sign as f64)
    }

    /// `Σ_{k,ℓ} D_k D_ℓ A_{ak,*bℓ}` at an interior point.
    pub fn reconstruct_at(&self, a: usize, b: usize, m: usize) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for k in 0..4 {
            for l in 0..4 {
                let (Some((pa, sa)), Some((pb, sb))) = (pair_index(a, k), pair_index(b, l)) else {
                    continue;
                };
                let (field, sign) = self.a_star(pa, pb);
                s += (sa * sb) as f64 * sign * second_difference(g, field, m, k, l);
            }
        }
        s
    }

    /// Max interior error of the reconstruction against `v`.
    pub fn roundtrip_error(&self, v: &SampledV) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .into_par_iter()
            .map(|m| {
                if !g.is_interior(g.multi(m)) {
                    return 0.0;
                }
                upper_pairs().map(|(a, b)| (self.reconstruct_at(a, b, m) - v.get(a, b)[m]).abs()).fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Max of `|A_{ij,*kℓ} − A_{kℓ,*ij}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..6 {
            for s in 0..6 {
                let (x, sx) = self.a_star(r, s);
                let (y, sy) = self.a_star(s, r);
                for (u, w) in x.iter().zip(y) {
                    worst = worst.max((sx * u - sy * w).abs());
                }
            }
        }
        worst
    }
}

fn second_difference(g: &Grid4, f: &[f64], m: usize, k: usize, l: usize) -> f64 {
    let (sk, sl) = (g.stride(k), g.stride(l));
    let (hk, hl) = (g.h(k), g.h(l));
    if k == l {
        (f[m + sk] - 2.0 * f[m] + f[m - sk]) / (hk * hk)
    } else {
        (f[m + sk + sl] - f[m + sk - sl] - f[m - sk + sl] + f[m - sk - sl]) / (4.0 * hk * hl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{nu, Poly};

    #[test]
    fn cumulative_integral_is_exact_for_cubics() {
        let g = Grid4::cube(0.0, 1.0, 5).unwrap();
        let f = g.sample(|x| x[2] * x[2] + x[0]);
        let got = cumulative_integral(&g, &f, 2);
        let want = g.sample(|x| x[2].powi(3) / 3.0 + x[0] * x[2]);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn skew_potential_recovers_vector_field() {
        let g = Grid4::cube(0.0, 1.0, 7).unwrap();
        // divergence free: (ν1, ν2 ν3, ν0, −ν2)
        let x = [g.sample(|p| p[1]), g.sample(|p| p[2] * p[3]), g.sample(|p| p[0]), g.sample(|p| -p[2])];
        let p = skew_potential(&g, std::array::from_fn(|i| x[i].as_slice()));
        for m in 0..g.len() {
            if !g.is_interior(g.multi(m)) {
                continue;
            }
            for i in 0..4 {
                let s: f64 = (0..4).map(|j| central(&g, &p[i][j], m, j)).sum();
                assert!((s - x[i][m]).abs() < 1e-12, "{i} {s} {}", x[i][m]);
            }
        }
    }

    #[test]
    fn constant_field_roundtrip() {
        let c = crate::spin7::rational_spd(2);
        let v = SampledV::from_field(&SymMatrixField::constant(&c), Grid4::cube(0.0, 1.0, 5).unwrap());
        let pot = potential_construct(&v, PotentialOptions::default()).unwrap();
        assert!(pot.roundtrip_error(&v) < 1e-12);
        assert!(pot.symmetry_defect() < 1e-12);
    }

    #[test]
    fn rejects_divergent_field() {
        let v = SymMatrixField::diag([nu(0), Poly::one(), Poly::one(), Poly::one()]);
        let v = SampledV::from_field(&v, Grid4::cube(1.0, 2.0, 5).unwrap());
        assert!(matches!(potential_construct(&v, PotentialOptions::default()), Err(PotentialError::NotDivergenceFree { .. })));
    }
}
