//! Finite differences for the reduced diagonal equations and grid
//! residuals of sampled fields.
//!
//! Solves `Σ_a c_a(ν) ∂²u/∂ν_a² = 0` with Dirichlet data by red-black SOR
//! on the centred stencil, coefficients taken at the grid points.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diagonal::DiagonalField;
use crate::poly::Poly;
use crate::spin7::SymMatrixField;
use crate::torsion::elliptic::{q_kernel, UPPER_INDEX};
use crate::torsion::PAIRS;

#[derive(Debug, Error, PartialEq)]
pub enum PdeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operator is not elliptic on the box: coefficient of axis {axis} reaches {value}")]
    NonElliptic { axis: usize, value: f64 },
    #[error("no convergence after {iterations} sweeps, last update {final_update:.3e}")]
    NotConverged { iterations: usize, final_update: f64, history: Vec<f64> },
    #[error("malformed grid CSV: {0}")]
    Csv(String),
}

/// Tensor grid over the active coordinates `axes` (indices into `ν`),
/// row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub axes: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: usize,
}

impl GridSpec {
    pub fn new(axes: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>, n: usize) -> Result<Self, PdeError> {
        if axes.is_empty() || axes.len() != lo.len() || axes.len() != hi.len() {
            return Err(PdeError::InvalidGrid("axes and bounds differ in length".into()));
        }
        if axes.iter().any(|&a| a > 3) {
            return Err(PdeError::InvalidGrid("axis index out of range".into()));
        }
        if n < 3 {
            return Err(PdeError::InvalidGrid("need n >= 3".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(PdeError::InvalidGrid("need finite lo < hi on every axis".into()));
        }
        Ok(GridSpec { axes, lo, hi, n })
    }

    pub fn cube(axes: &[usize], lo: f64, hi: f64, n: usize) -> Result<Self, PdeError> {
        Self::new(axes.to_vec(), vec![lo; axes.len()], vec![hi; axes.len()], n)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn h(&self, a: usize) -> f64 {
        (self.hi[a] - self.lo[a]) / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, a: usize) -> usize {
        self.n.pow((self.dim() - 1 - a) as u32)
    }

    pub fn multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn index(&self, m: &[usize]) -> usize {
        m.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Grid point as a full `ν`-vector; inactive coordinates are zero.
    pub fn point(&self, idx: usize) -> [f64; 4] {
        let m = self.multi(idx);
        let mut p = [0.0; 4];
        for (a, &ax) in self.axes.iter().enumerate() {
            p[ax] = self.lo[a] + m[a] as f64 * self.h(a);
        }
        p
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.multi(idx).iter().any(|&i| i == 0 || i == self.n - 1)
    }

    fn parity(&self, idx: usize) -> usize {
        self.multi(idx).iter().sum::<usize>() % 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn from_fn(spec: &GridSpec, f: impl Fn(&[f64; 4]) -> f64 + Sync) -> Self {
        let values = (0..spec.len()).into_par_iter().map(|i| f(&spec.point(i))).collect();
        GridField { spec: spec.clone(), values }
    }

    pub fn from_poly(spec: &GridSpec, p: &Poly) -> Self {
        Self::from_fn(spec, |x| p.eval_f64(x))
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.spec.len()).map(|i| self.spec.is_boundary(i)).collect()
    }

    /// Max of `|u − f|` over interior points.
    pub fn interior_max_error(&self, f: impl Fn(&[f64; 4]) -> f64) -> f64 {
        (0..self.spec.len())
            .filter(|&i| !self.spec.is_boundary(i))
            .map(|i| (self.values[i] - f(&self.spec.point(i))).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn boundary_range(&self) -> (f64, f64) {
        (0..self.spec.len())
            .filter(|&i| self.spec.is_boundary(i))
            .map(|i| self.values[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Header lines `# axes=..`, `# lo=..`, `# hi=..`, `# n=..`, then
    /// one row per point: coordinates and value.
    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let names: Vec<String> = s.axes.iter().map(|a| format!("nu{a}")).collect();
        let mut out = String::new();
        let _ = writeln!(out, "# axes={}", names.join(","));
        let _ = writeln!(out, "# lo={}", join(&s.lo));
        let _ = writeln!(out, "# hi={}", join(&s.hi));
        let _ = writeln!(out, "# n={}", s.n);
        let _ = writeln!(out, "{},value", names.join(","));
        for (i, v) in self.values.iter().enumerate() {
            let p = s.point(i);
            let coords: Vec<String> = s.axes.iter().map(|&a| format!("{:?}", p[a])).collect();
            let _ = writeln!(out, "{},{v:?}", coords.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, PdeError> {
        let mut header = std::collections::HashMap::new();
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(h) = line.strip_prefix('#') {
                let (k, v) = h.trim().split_once('=').ok_or_else(|| PdeError::Csv(format!("bad header {line}")))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
            } else {
                rows.push(line);
            }
        }
        let get = |k: &str| header.get(k).ok_or_else(|| PdeError::Csv(format!("missing header {k}")));
        let floats = |s: &str| -> Result<Vec<f64>, PdeError> {
            s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| PdeError::Csv(e.to_string()))).collect()
        };
        let axes = get("axes")?
            .split(',')
            .map(|x| x.trim().strip_prefix("nu").and_then(|d| d.parse().ok()).ok_or_else(|| PdeError::Csv(format!("bad axis {x}"))))
            .collect::<Result<Vec<usize>, _>>()?;
        let n = get("n")?.parse().map_err(|_| PdeError::Csv("bad n".into()))?;
        let spec = GridSpec::new(axes, floats(get("lo")?)?, floats(get("hi")?)?, n)?;
        let values = rows
            .iter()
            .skip(1)
            .map(|r| r.rsplit(',').next().unwrap_or("").trim().parse::<f64>().map_err(|e| PdeError::Csv(e.to_string())))
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != spec.len() {
            return Err(PdeError::Csv(format!("expected {} rows, found {}", spec.len(), values.len())));
        }
        Ok(GridField { spec, values })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SorOptions {
    pub omega: f64,
    pub max_iter: usize,
    /// Stop when the largest update is below `rel_tol · range` of the data.
    pub rel_tol: f64,
    pub parallel: bool,
}

impl Default for SorOptions {
    fn default() -> Self {
        SorOptions { omega: 1.8, max_iter: 1_000_000, rel_tol: 1e-12, parallel: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_update: f64,
    /// Max over the interior of the discrete operator applied to the result.
    pub residual_norm: f64,
}

/// Per-point weights `c_a/h_a²` for the pure second differences.
struct Stencil {
    spec: GridSpec,
    w: Vec<Vec<f64>>,
}

type Coeff<'a> = &'a (dyn Fn(&[f64; 4]) -> f64 + Sync);

impl Stencil {
    fn new(spec: &GridSpec, coeffs: &[Coeff<'_>]) -> Result<Self, PdeError> {
        assert_eq!(coeffs.len(), spec.dim());
        let mut w = vec![vec![0.0; spec.dim()]; spec.len()];
        for (i, wi) in w.iter_mut().enumerate() {
            let p = spec.point(i);
            for (a, c) in coeffs.iter().enumerate() {
                let v = c(&p);
                if !(v > 0.0) {
                    return Err(PdeError::NonElliptic { axis: spec.axes[a], value: v });
                }
                let h = spec.h(a);
                wi[a] = v / (h * h);
            }
        }
        Ok(Stencil { spec: spec.clone(), w })
    }

    /// Gauss–Seidel target value at an interior point.
    fn target(&self, u: &[f64], i: usize) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for a in 0..self.spec.dim() {
            let s = self.spec.stride(a);
            num += self.w[i][a] * (u[i + s] + u[i - s]);
            den += 2.0 * self.w[i][a];
        }
        num / den
    }

    fn apply(&self, u: &[f64], i: usize) -> f64 {
        (0..self.spec.dim())
            .map(|a| {
                let s = self.spec.stride(a);
                self.w[i][a] * (u[i + s] - 2.0 * u[i] + u[i - s])
            })
            .sum()
    }

    fn residual(&self, u: &[f64]) -> f64 {
        (0..self.spec.len()).filter(|&i| !self.spec.is_boundary(i)).map(|i| self.apply(u, i).abs()).fold(0.0, f64::max)
    }
}

/// Red-black SOR for `Σ_a c_a ∂²u/∂ν_a² = 0`.  Same-colour points do not
/// neighbour each other, so the parallel sweep matches the serial one bit
/// for bit.
pub fn solve_dirichlet(
    spec: &GridSpec,
    coeffs: &[Coeff<'_>],
    boundary: impl Fn(&[f64; 4]) -> f64 + Sync,
    opts: &SorOptions,
) -> Result<(GridField, SolveReport), PdeError> {
    let st = Stencil::new(spec, coeffs)?;
    let mut field = GridField::from_fn(spec, &boundary);
    let (lo, hi) = field.boundary_range();
    let mean = {
        let b: Vec<f64> = (0..spec.len()).filter(|&i| spec.is_boundary(i)).map(|i| field.values[i]).collect();
        b.iter().sum::<f64>() / b.len() as f64
    };
    let colours: [Vec<usize>; 2] = std::array::from_fn(|c| {
        (0..spec.len()).filter(|&i| !spec.is_boundary(i) && spec.parity(i) == c).collect()
    });
    for &i in colours.iter().flatten() {
        field.values[i] = mean;
    }
    let tol = opts.rel_tol * (hi - lo).max(f64::MIN_POSITIVE);
    let mut history = Vec::new();
    let u = &mut field.values;
    for it in 1..=opts.max_iter {
        let mut max_update: f64 = 0.0;
        for pts in &colours {
            let step = |i: usize, u: &[f64]| opts.omega * (st.target(u, i) - u[i]);
            if opts.parallel {
                let updates: Vec<f64> = pts.par_iter().map(|&i| step(i, u)).collect();
                for (&i, d) in pts.iter().zip(&updates) {
                    u[i] += d;
                    max_update = max_update.max(d.abs());
                }
            } else {
                for &i in pts {
                    let d = step(i, u);
                    u[i] += d;
                    max_update = max_update.max(d.abs());
                }
            }
        }
        if it.is_power_of_two() {
            history.push(max_update);
        }
        if max_update < tol {
            let residual_norm = st.residual(u);
            return Ok((field, SolveReport { iterations: it, final_update: max_update, residual_norm }));
        }
        if it == opts.max_iter {
            history.push(max_update);
            return Err(PdeError::NotConverged { iterations: it, final_update: max_update, history });
        }
    }
    Err(PdeError::NotConverged { iterations: 0, final_update: f64::NAN, history })
}

fn require_axes(spec: &GridSpec, axes: &[usize]) -> Result<(), PdeError> {
    if spec.axes != axes {
        return Err(PdeError::InvalidGrid(format!("expected axes {axes:?}, found {:?}", spec.axes)));
    }
    Ok(())
}

/// `ν₂ ∂²V₀/∂ν₁² + ν₃ ∂²V₀/∂ν₂² + ν₁ ∂²V₀/∂ν₃² = 0` on a box in `(ν₁, ν₂, ν₃)`.
pub fn solve_r31(
    spec: &GridSpec,
    boundary: impl Fn(&[f64; 4]) -> f64 + Sync,
    opts: &SorOptions,
) -> Result<(GridField, SolveReport), PdeError> {
    require_axes(spec, &[1, 2, 3])?;
    let c1 = |p: &[f64; 4]| p[2];
    let c2 = |p: &[f64; 4]| p[3];
    let c3 = |p: &[f64; 4]| p[1];
    solve_dirichlet(spec, &[&c1, &c2, &c3], boundary, opts)
}

/// `(C + Dν₂) ∂²V₀/∂ν₁² + ∂²V₀/∂ν₂² = 0` on a box in `(ν₁, ν₂)`.
pub fn solve_r22(
    spec: &GridSpec,
    c: f64,
    d: f64,
    boundary: impl Fn(&[f64; 4]) -> f64 + Sync,
    opts: &SorOptions,
) -> Result<(GridField, SolveReport), PdeError> {
    require_axes(spec, &[1, 2])?;
    let c1 = move |p: &[f64; 4]| c + d * p[2];
    let c2 = |_: &[f64; 4]| 1.0;
    solve_dirichlet(spec, &[&c1, &c2], boundary, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualNorm {
    pub equation: String,
    pub max: f64,
    pub l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResidualReport {
    pub h: Vec<f64>,
    pub equations: Vec<ResidualNorm>,
}

impl GridResidualReport {
    pub fn max(&self) -> f64 {
        self.equations.iter().map(|e| e.max).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&ResidualNorm> {
        self.equations.iter().find(|e| e.equation == name)
    }
}

/// Centred differences on a grid; derivatives along inactive coordinates
/// are zero.
struct Diff<'a> {
    spec: &'a GridSpec,
    axis_of: [Option<usize>; 4],
}

impl<'a> Diff<'a> {
    fn new(spec: &'a GridSpec) -> Self {
        let mut axis_of = [None; 4];
        for (a, &ax) in spec.axes.iter().enumerate() {
            axis_of[ax] = Some(a);
        }
        Diff { spec, axis_of }
    }

    fn d1(&self, u: &[f64], i: usize, p: usize) -> f64 {
        let Some(a) = self.axis_of[p] else { return 0.0 };
        let s = self.spec.stride(a);
        (u[i + s] - u[i - s]) / (2.0 * self.spec.h(a))
    }

    fn d2(&self, u: &[f64], i: usize, p: usize, q: usize) -> f64 {
        let (Some(a), Some(b)) = (self.axis_of[p], self.axis_of[q]) else { return 0.0 };
        let (sa, ha) = (self.spec.stride(a), self.spec.h(a));
        if a == b {
            return (u[i + sa] - 2.0 * u[i] + u[i - sa]) / (ha * ha);
        }
        let (sb, hb) = (self.spec.stride(b), self.spec.h(b));
        (u[i + sa + sb] - u[i + sa - sb] - u[i - sa + sb] + u[i - sa - sb]) / (4.0 * ha * hb)
    }
}

fn norms(spec: &GridSpec, names: Vec<String>, per_point: impl Fn(usize) -> Vec<f64> + Sync) -> GridResidualReport {
    let interior: Vec<usize> = (0..spec.len()).filter(|&i| !spec.is_boundary(i)).collect();
    let rows: Vec<Vec<f64>> = interior.par_iter().map(|&i| per_point(i)).collect();
    let vol: f64 = (0..spec.dim()).map(|a| spec.h(a)).product();
    let equations = names
        .into_iter()
        .enumerate()
        .map(|(k, equation)| {
            let max = rows.iter().map(|r| r[k].abs()).fold(0.0, f64::max);
            let l2 = (rows.iter().map(|r| r[k] * r[k]).sum::<f64>() * vol).sqrt();
            ResidualNorm { equation, max, l2 }
        })
        .collect();
    GridResidualReport { h: (0..spec.dim()).map(|a| spec.h(a)).collect(), equations }
}

/// Diagonal `V` sampled on a grid: `diag(V₀, …, V₃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDiagonal {
    pub v: [GridField; 4],
}

impl SampledDiagonal {
    pub fn from_field(spec: &GridSpec, f: &DiagonalField) -> Self {
        SampledDiagonal { v: std::array::from_fn(|k| GridField::from_poly(spec, &f.v[k])) }
    }

    /// A solved `V₀` with the remaining entries given symbolically.
    pub fn with_v0(v0: GridField, rest: [&Poly; 3]) -> Self {
        let spec = v0.spec.clone();
        let [a, b, c] = rest.map(|p| GridField::from_poly(&spec, p));
        SampledDiagonal { v: [v0, a, b, c] }
    }
}

/// Divergence, `L_red` and `Q_red` of a sampled diagonal field.
pub fn grid_residual_diagonal(s: &SampledDiagonal) -> GridResidualReport {
    let spec = &s.v[0].spec;
    let d = Diff::new(spec);
    let mut names: Vec<String> = (0..4).map(|j| format!("divergence_{j}")).collect();
    names.extend((0..4).map(|i| format!("l_red_{i}")));
    names.extend(PAIRS.iter().map(|(i, j)| format!("q_red_{i}{j}")));
    norms(spec, names, |i| {
        let v = |k: usize| &s.v[k].values[..];
        let mut out: Vec<f64> = (0..4).map(|j| d.d1(v(j), i, j)).collect();
        out.extend((0..4).map(|a| (0..4).map(|j| v(j)[i] * d.d2(v(a), i, j, j)).sum::<f64>()));
        out.extend(PAIRS.iter().map(|&(a, b)| d.d1(v(a), i, b) * d.d1(v(b), i, a)));
        out
    })
}

/// A symmetric `V` sampled on a grid by its ten upper entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledMatrix {
    pub upper: Vec<GridField>,
}

impl SampledMatrix {
    pub fn from_field(spec: &GridSpec, v: &SymMatrixField) -> Self {
        SampledMatrix { upper: UPPER_INDEX.iter().map(|&(a, b)| GridField::from_poly(spec, v.get(a, b))).collect() }
    }

    fn slot(a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        UPPER_INDEX.iter().position(|&x| x == (a, b)).unwrap()
    }

    fn entry(&self, a: usize, b: usize) -> &[f64] {
        &self.upper[Self::slot(a, b)].values
    }
}

/// Divergence and the ten entries of `L(V) + Q(dV)`.
pub fn grid_residual_matrix(s: &SampledMatrix) -> GridResidualReport {
    let spec = &s.upper[0].spec;
    let d = Diff::new(spec);
    let mut names: Vec<String> = (0..4).map(|j| format!("divergence_{j}")).collect();
    names.extend(UPPER_INDEX.iter().map(|(a, b)| format!("elliptic_{a}{b}")));
    norms(spec, names, |i| {
        let mut out: Vec<f64> = (0..4).map(|j| (0..4).map(|k| d.d1(s.entry(k, j), i, k)).sum()).collect();
        let qm = q_kernel(|a, b, p| d.d1(s.entry(a, b), i, p), 0.0, -2.0);
        for &(a, b) in &UPPER_INDEX {
            let mut l = 0.0;
            for p in 0..4 {
                for r in 0..4 {
                    l += s.entry(p, r)[i] * d.d2(s.entry(a, b), i, p, r);
                }
            }
            out.push(l + qm[a][b]);
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagonal::{cubic_v0, example_family};
    use crate::poly::{nu, qr};

    fn box3(n: usize) -> GridSpec {
        GridSpec::cube(&[1, 2, 3], 1.0, 2.0, n).unwrap()
    }

    #[test]
    fn index_roundtrip() {
        let s = box3(5);
        for i in 0..s.len() {
            assert_eq!(s.index(&s.multi(i)), i);
        }
        assert_eq!(s.point(s.len() - 1), [0.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn triple_product_is_recovered() {
        let v0 = &(&nu(1) * &nu(2)) * &nu(3);
        let (u, rep) = solve_r31(&box3(17), |p| v0.eval_f64(p), &SorOptions::default()).unwrap();
        assert!(u.interior_max_error(|p| v0.eval_f64(p)) < 1e-9);
        assert!(rep.residual_norm < 1e-8);
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let (u, rep) = solve_r31(&box3(9), |_| 3.5, &SorOptions::default()).unwrap();
        assert!(u.values.iter().all(|&x| x == 3.5));
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn non_elliptic_box_is_rejected() {
        let s = GridSpec::cube(&[1, 2, 3], -1.0, 1.0, 5).unwrap();
        assert!(matches!(solve_r31(&s, |_| 0.0, &SorOptions::default()), Err(PdeError::NonElliptic { .. })));
    }

    #[test]
    fn iteration_cap_reports_history() {
        let opts = SorOptions { max_iter: 3, ..Default::default() };
        let v0 = cubic_v0();
        match solve_r31(&box3(9), |p| v0.eval_f64(p), &opts) {
            Err(PdeError::NotConverged { iterations, history, .. }) => {
                assert_eq!(iterations, 3);
                assert!(!history.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn r22_laplace_harmonic() {
        let s = GridSpec::cube(&[1, 2], -1.0, 1.0, 17).unwrap();
        let f = |p: &[f64; 4]| p[1] * p[1] - p[2] * p[2];
        let (u, _) = solve_r22(&s, 1.0, 0.0, f, &SorOptions::default()).unwrap();
        assert!(u.interior_max_error(f) < 1e-9);
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let v0 = cubic_v0();
        let s = box3(9);
        let par = solve_r31(&s, |p| v0.eval_f64(p), &SorOptions::default()).unwrap();
        let ser = solve_r31(&s, |p| v0.eval_f64(p), &SorOptions { parallel: false, ..Default::default() }).unwrap();
        assert_eq!(par, ser);
    }

    #[test]
    fn csv_roundtrip() {
        let u = GridField::from_fn(&box3(4), |p| p[1] - 0.1 * p[3]);
        assert_eq!(GridField::from_csv(&u.to_csv()).unwrap(), u);
    }

    #[test]
    fn linear_cycle_grid_residual_vanishes() {
        let s = GridSpec::cube(&[0, 1, 2, 3], 1.0, 2.0, 5).unwrap();
        let f = example_family("linear-cycle").unwrap();
        assert!(grid_residual_diagonal(&SampledDiagonal::from_field(&s, &f)).max() < 1e-10);
        assert!(grid_residual_matrix(&SampledMatrix::from_field(&s, &f.to_matrix())).max() < 1e-10);
    }

    #[test]
    fn matrix_residual_sees_quadratic_part() {
        // V = diag(ν₁², 1, 1, 1) has L₀₀ = 2 and Q = 0
        let s = GridSpec::cube(&[0, 1, 2, 3], 1.0, 2.0, 5).unwrap();
        let v = SymMatrixField::diag([nu(1).pow(2), Poly::one(), Poly::one(), Poly::one()]);
        let r = grid_residual_matrix(&SampledMatrix::from_field(&s, &v));
        assert!((r.get("elliptic_00").unwrap().max - 2.0).abs() < 1e-9);
        // quadratic entries: centred differences are exact
        let v = SymMatrixField::from_fn(|i, j| &(&nu(i) * &nu(j)) + &nu((i + j) % 4).pow(2).scale(&qr(1, 3)));
        let exact = crate::torsion::elliptic_residual(&v);
        let r = grid_residual_matrix(&SampledMatrix::from_field(&s, &v));
        for &(a, b) in &UPPER_INDEX {
            let want = (0..s.len())
                .filter(|&i| !s.is_boundary(i))
                .map(|i| exact[a][b].eval_f64(&s.point(i)).abs())
                .fold(0.0, f64::max);
            assert!((r.get(&format!("elliptic_{a}{b}")).unwrap().max - want).abs() < 1e-9 * (1.0 + want));
        }
    }
}
