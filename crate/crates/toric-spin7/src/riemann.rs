//! Levi-Civita curvature of the metric in the chart `(t₀..t₃, ν₀..ν₃)`
//! with `θ_ℓ = dt_ℓ + A_ℓ(ν)`, the curvature span, and `spin(7)`
//! membership through the action on `Φ`.

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::forms::{d, ConnectionRules, NumForm, PolyForm, DNU};
use crate::poly::{q, Poly};
use crate::spin7::{assemble_phi, SymMatrixField};
use crate::torsion::curvature_matrices;

pub type M8 = SMatrix<f64, 8, 8>;

#[derive(Debug, Error, PartialEq)]
pub enum RiemannError {
    #[error("ω_{0} is not closed")]
    NotClosed(usize),
    #[error("V is degenerate")]
    Degenerate,
    #[error("metric is not positive definite near the sample point (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("metric condition number {0:.3e} exceeds the limit")]
    IllConditioned(f64),
}

/// Primitive `A_ℓ` with `dA_ℓ = ω_ℓ`, by the homotopy formula from the
/// origin.  Inputs must be 2-forms in `dν` only.
pub fn gauge_potential(omega: &[PolyForm; 4]) -> Result<[PolyForm; 4], RiemannError> {
    let flat = ConnectionRules::flat();
    let t = Poly::var(4);
    let scaled: Vec<Poly> = (0..4).map(|k| &t * &Poly::var(k)).collect();
    let mut out: [PolyForm; 4] = Default::default();
    for (l, w) in omega.iter().enumerate() {
        if !d(w, &flat).is_zero() {
            return Err(RiemannError::NotClosed(l));
        }
        let mut a = PolyForm::zero();
        for i in 0..4 {
            for j in i + 1..4 {
                let c = w.component(DNU[i] | DNU[j]);
                if c.is_zero() {
                    continue;
                }
                // ∫₀¹ t c(tν) dt
                let k = (&c.compose(&scaled) * &t).antideriv(4).substitute(4, &q(1));
                a.add_term(DNU[j], &(&k * &Poly::var(i)));
                a.add_term(DNU[i], &-(&k * &Poly::var(j)));
            }
        }
        out[l] = a;
    }
    Ok(out)
}

/// Value, gradient and Hessian in `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 4],
    pub h: [[f64; 4]; 4],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 { v, ..Default::default() }
    }

    pub fn of_poly(p: &Poly, x: &[f64; 4]) -> Self {
        let mut j = Jet2::constant(p.eval_f64(x));
        for a in 0..4 {
            let pa = p.deriv(a);
            j.g[a] = pa.eval_f64(x);
            for b in a..4 {
                let v = pa.deriv(b).eval_f64(x);
                j.h[a][b] = v;
                j.h[b][a] = v;
            }
        }
        j
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            g: std::array::from_fn(|a| self.g[a] + o.g[a]),
            h: std::array::from_fn(|a| std::array::from_fn(|b| self.h[a][b] + o.h[a][b])),
        }
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            g: std::array::from_fn(|a| self.g[a] * o.v + self.v * o.g[a]),
            h: std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    self.h[a][b] * o.v + self.g[a] * o.g[b] + self.g[b] * o.g[a] + self.v * o.h[a][b]
                })
            }),
        }
    }

    pub fn recip(&self) -> Jet2 {
        let r = 1.0 / self.v;
        Jet2 {
            v: r,
            g: std::array::from_fn(|a| -self.g[a] * r * r),
            h: std::array::from_fn(|a| {
                std::array::from_fn(|b| -self.h[a][b] * r * r + 2.0 * self.g[a] * self.g[b] * r * r * r)
            }),
        }
    }
}

/// Metric with first and second `ν`-derivatives, in coordinates
/// `(t₀..t₃, ν₀..ν₃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    pub g: M8,
    pub dg: [M8; 4],
    pub d2g: [[M8; 4]; 4],
}

/// Metric in explicit coordinates; independent of `t`.
#[derive(Clone, Debug)]
pub struct MetricChart {
    pub v: SymMatrixField,
    adj: [[Poly; 4]; 4],
    det: Poly,
    /// `A_ℓ = Σ_k gauge[ℓ][k] dν_k`.
    pub gauge: [[Poly; 4]; 4],
    pub omega: [PolyForm; 4],
    phi: crate::forms::RatForm,
}

impl MetricChart {
    pub fn new(v: &SymMatrixField) -> Result<Self, RiemannError> {
        let det = v.det();
        if det.is_zero() {
            return Err(RiemannError::Degenerate);
        }
        let omega = curvature_matrices(v).omega();
        let pot = gauge_potential(&omega)?;
        let gauge = std::array::from_fn(|l| std::array::from_fn(|k| pot[l].component(DNU[k])));
        let phi = assemble_phi(v).map_err(|_| RiemannError::Degenerate)?;
        Ok(MetricChart { v: v.clone(), adj: v.adj(), det, gauge, omega, phi })
    }

    pub fn metric_jet(&self, x: &[f64; 4]) -> MetricJet {
        let inv_det = Jet2::of_poly(&self.det, x).recip();
        let adj: [[Jet2; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| Jet2::of_poly(&self.adj[i][j], x)));
        let ginv: [[Jet2; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| adj[i][j].mul(&inv_det)));
        let a: [[Jet2; 4]; 4] = std::array::from_fn(|l| std::array::from_fn(|k| Jet2::of_poly(&self.gauge[l][k], x)));
        let mut e = [[Jet2::default(); 8]; 8];
        for i in 0..4 {
            for j in 0..4 {
                e[i][j] = ginv[i][j];
                let mut tn = Jet2::default();
                for l in 0..4 {
                    tn = tn.add(&ginv[i][l].mul(&a[l][j]));
                }
                e[i][4 + j] = tn;
                e[4 + j][i] = tn;
                let mut nn = adj[i][j];
                for l in 0..4 {
                    for m in 0..4 {
                        nn = nn.add(&a[l][i].mul(&ginv[l][m]).mul(&a[m][j]));
                    }
                }
                e[4 + i][4 + j] = nn;
            }
        }
        MetricJet {
            g: M8::from_fn(|i, j| e[i][j].v),
            dg: std::array::from_fn(|k| M8::from_fn(|i, j| e[i][j].g[k])),
            d2g: std::array::from_fn(|k| std::array::from_fn(|l| M8::from_fn(|i, j| e[i][j].h[k][l]))),
        }
    }

    pub fn metric_at(&self, x: &[f64; 4]) -> M8 {
        self.metric_jet(x).g
    }

    /// Derivatives by centered differences of step `h`.
    pub fn metric_jet_fd(&self, x: &[f64; 4], h: f64) -> MetricJet {
        let at = |dx: &[(usize, f64)]| {
            let mut y = *x;
            for &(k, s) in dx {
                y[k] += s * h;
            }
            self.metric_at(&y)
        };
        let g0 = at(&[]);
        let dg = std::array::from_fn(|k| (at(&[(k, 1.0)]) - at(&[(k, -1.0)])) / (2.0 * h));
        let d2g = std::array::from_fn(|k| {
            std::array::from_fn(|l| {
                if k == l {
                    (at(&[(k, 1.0)]) - g0 * 2.0 + at(&[(k, -1.0)])) / (h * h)
                } else {
                    (at(&[(k, 1.0), (l, 1.0)]) - at(&[(k, 1.0), (l, -1.0)]) - at(&[(k, -1.0), (l, 1.0)])
                        + at(&[(k, -1.0), (l, -1.0)]))
                        / (4.0 * h * h)
                }
            })
        });
        MetricJet { g: g0, dg, d2g }
    }

    /// `Φ` at `x` in the generator basis `(dν₀..dν₃, θ₀..θ₃)`.
    pub fn phi_at(&self, x: &[f64; 4]) -> NumForm {
        self.phi.evaluate(x)
    }

    /// Coframe generators in coordinates: row `k` is `dν_k` for `k < 4`
    /// and `θ_{k−4}` otherwise.
    pub fn generators_in_coords(&self, x: &[f64; 4]) -> M8 {
        let mut c = M8::zeros();
        for k in 0..4 {
            c[(k, 4 + k)] = 1.0;
            c[(4 + k, k)] = 1.0;
            for m in 0..4 {
                c[(4 + k, 4 + m)] = self.gauge[k][m].eval_f64(x);
            }
        }
        c
    }

    /// `Φ`-adapted orthonormal coframe in the generator basis, from `A = √V`.
    pub fn adapted_coframe(&self, x: &[f64; 4]) -> Result<M8, RiemannError> {
        let v = self.v.eval_f64(x);
        let eig = SymmetricEigen::new(v);
        let lmin = eig.eigenvalues.min();
        if lmin <= 0.0 {
            return Err(RiemannError::NotPositive(lmin));
        }
        let sq = eig.eigenvectors
            * nalgebra::Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let inv = sq.try_inverse().ok_or(RiemannError::Degenerate)?;
        let det_a = sq.determinant();
        let mut k = M8::zeros();
        for j in 0..4 {
            k[(0, 4 + j)] = inv[(0, j)];
            for i in 1..4 {
                k[(i, j)] = det_a * inv[(i, j)];
                k[(4 + i, 4 + j)] = inv[(i, j)];
            }
            k[(4, j)] = -det_a * inv[(0, j)];
        }
        Ok(k)
    }
}

/// `Γ^a_bc`, flattened `[a][b][c]`.
pub fn christoffel(j: &MetricJet) -> Result<Vec<f64>, RiemannError> {
    let ginv = j.g.try_inverse().ok_or(RiemannError::Degenerate)?;
    let dg = |k: usize, a: usize, b: usize| if k < 4 { 0.0 } else { j.dg[k - 4][(a, b)] };
    let mut lower = vec![0.0; 512];
    for a in 0..8 {
        for b in 0..8 {
            for c in 0..8 {
                lower[(a * 8 + b) * 8 + c] = 0.5 * (dg(b, a, c) + dg(c, a, b) - dg(a, b, c));
            }
        }
    }
    let mut out = vec![0.0; 512];
    for a in 0..8 {
        for b in 0..8 {
            for c in 0..8 {
                out[(a * 8 + b) * 8 + c] = (0..8).map(|e| ginv[(a, e)] * lower[(e * 8 + b) * 8 + c]).sum();
            }
        }
    }
    Ok(out)
}

/// `R_abcd = ½(g_ad,bc + g_bc,ad − g_ac,bd − g_bd,ac) + g_ef(Γ^e_bc Γ^f_ad − Γ^e_bd Γ^f_ac)`
/// in coordinates, flattened in base 8.  `Ric_bd = g^{ac} R_abcd`.
pub fn riemann_coords(j: &MetricJet) -> Result<Vec<f64>, RiemannError> {
    let gam = christoffel(j)?;
    let d2 = |k: usize, l: usize, a: usize, b: usize| if k < 4 || l < 4 { 0.0 } else { j.d2g[k - 4][l - 4][(a, b)] };
    let gm = |a: usize, b: usize, c: usize| gam[(a * 8 + b) * 8 + c];
    // Γ_f;ad lowered by g: Σ_e g_fe Γ^e_ad is not needed, use g_ef Γ^e Γ^f directly
    let mut r = vec![0.0; 4096];
    for a in 0..8 {
        for b in 0..8 {
            for c in 0..8 {
                for dd in 0..8 {
                    let mut s = 0.5 * (d2(b, c, a, dd) + d2(a, dd, b, c) - d2(b, dd, a, c) - d2(a, c, b, dd));
                    for e in 0..8 {
                        let mut inner = 0.0;
                        for f in 0..8 {
                            inner += j.g[(e, f)] * (gm(f, a, dd) * gm(e, b, c) - gm(f, a, c) * gm(e, b, dd));
                        }
                        s += inner;
                    }
                    r[((a * 8 + b) * 8 + c) * 8 + dd] = s;
                }
            }
        }
    }
    Ok(r)
}

/// `out[abcd] = Σ t[ijkl] m[i,a] m[j,b] m[k,c] m[l,d]`.
pub fn transform4(t: &[f64], m: &M8) -> Vec<f64> {
    let mut cur = t.to_vec();
    for slot in 0..4 {
        let stride = 8usize.pow(3 - slot as u32);
        let mut next = vec![0.0; 4096];
        for (idx, out) in next.iter_mut().enumerate() {
            let a = (idx / stride) % 8;
            let base = idx - a * stride;
            *out = (0..8).map(|i| cur[base + i * stride] * m[(i, a)]).sum();
        }
        cur = next;
    }
    cur
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FrameKind {
    /// Gram–Schmidt on `∂_t₀..∂_t₃, ∂_ν₀..∂_ν₃`.
    GramSchmidt,
    /// Orthonormal frame in which `Φ` is the model form.
    Adapted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Method {
    Exact,
    FiniteDifference { h: f64 },
    /// `(4 R(h/2) − R(h)) / 3`.
    Richardson { h: f64 },
}

/// Curvature at one point, in an orthonormal frame.
#[derive(Clone, Debug)]
pub struct CurvatureSample {
    pub point: [f64; 4],
    pub frame: FrameKind,
    /// `R_abcd`, flattened in base 8.
    pub r: Vec<f64>,
    /// `Φ` in the same frame, flattened in base 8.
    pub phi: Vec<f64>,
}

/// The pairs `(c, d)`, `c < d`, labelling the 28 endomorphisms.
pub fn skew_pairs() -> Vec<(usize, usize)> {
    (0..8).flat_map(|c| (c + 1..8).map(move |d| (c, d))).collect()
}

impl CurvatureSample {
    pub fn at(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.r[((a * 8 + b) * 8 + c) * 8 + d]
    }

    pub fn norm(&self) -> f64 {
        self.r.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `R(e_c ∧ e_d)` as a skew matrix `(R_abcd)_ab`.
    pub fn endomorphisms(&self) -> Vec<M8> {
        skew_pairs().into_iter().map(|(c, d)| M8::from_fn(|a, b| self.at(a, b, c, d))).collect()
    }

    pub fn ricci(&self) -> M8 {
        M8::from_fn(|b, d| (0..8).map(|a| self.at(a, b, a, d)).sum())
    }

    pub fn ricci_rel(&self) -> f64 {
        self.ricci().abs().max() / self.norm().max(f64::MIN_POSITIVE)
    }

    /// Max of `|R_abcd + R_bacd|`, `|R_abcd + R_abdc|`, `|R_abcd − R_cdab|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..8 {
            for b in 0..8 {
                for c in 0..8 {
                    for d in 0..8 {
                        let x = self.at(a, b, c, d);
                        worst = worst
                            .max((x + self.at(b, a, c, d)).abs())
                            .max((x + self.at(a, b, d, c)).abs())
                            .max((x - self.at(c, d, a, b)).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn bianchi_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..8 {
            for b in 0..8 {
                for c in 0..8 {
                    for d in 0..8 {
                        worst = worst.max((self.at(a, b, c, d) + self.at(a, c, d, b) + self.at(a, d, b, c)).abs());
                    }
                }
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureOptions {
    pub method: Method,
    pub frame: FrameKind,
    /// Refuse when the metric condition number exceeds this.
    pub max_condition: f64,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions { method: Method::Exact, frame: FrameKind::Adapted, max_condition: 1e10 }
    }
}

fn check_metric(chart: &MetricChart, x: &[f64; 4], opts: &CurvatureOptions) -> Result<(), RiemannError> {
    let reach = match opts.method {
        Method::Exact => 0.0,
        Method::FiniteDifference { h } | Method::Richardson { h } => 4.0 * h,
    };
    let mut probes = vec![*x];
    if reach > 0.0 {
        for k in 0..4 {
            for s in [-1.0, 1.0] {
                let mut y = *x;
                y[k] += s * reach;
                probes.push(y);
            }
        }
    }
    for y in &probes {
        let e = SymmetricEigen::new(chart.metric_at(y)).eigenvalues;
        let (lo, hi) = (e.min(), e.max());
        if !(lo > 0.0) {
            return Err(RiemannError::NotPositive(lo));
        }
        if hi / lo > opts.max_condition {
            return Err(RiemannError::IllConditioned(hi / lo));
        }
    }
    Ok(())
}

/// Orthonormal frame vectors as columns, in coordinates.
pub fn frame_at(chart: &MetricChart, x: &[f64; 4], kind: FrameKind) -> Result<M8, RiemannError> {
    match kind {
        FrameKind::GramSchmidt => {
            let g = chart.metric_at(x);
            let mut e = M8::zeros();
            for i in 0..8 {
                let mut v = nalgebra::SVector::<f64, 8>::zeros();
                v[i] = 1.0;
                for j in 0..i {
                    let ej = e.column(j).into_owned();
                    let p = (v.transpose() * g * ej)[0];
                    v -= ej * p;
                }
                let n = (v.transpose() * g * v)[0];
                if !(n > 0.0) {
                    return Err(RiemannError::NotPositive(n));
                }
                e.set_column(i, &(v / n.sqrt()));
            }
            Ok(e)
        }
        FrameKind::Adapted => {
            let kc = chart.adapted_coframe(x)? * chart.generators_in_coords(x);
            kc.try_inverse().ok_or(RiemannError::Degenerate)
        }
    }
}

pub fn riemann_coords_with(chart: &MetricChart, x: &[f64; 4], method: Method) -> Result<Vec<f64>, RiemannError> {
    match method {
        Method::Exact => riemann_coords(&chart.metric_jet(x)),
        Method::FiniteDifference { h } => riemann_coords(&chart.metric_jet_fd(x, h)),
        Method::Richardson { h } => {
            let r1 = riemann_coords(&chart.metric_jet_fd(x, h))?;
            let r2 = riemann_coords(&chart.metric_jet_fd(x, h / 2.0))?;
            Ok(r1.iter().zip(&r2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
        }
    }
}

pub fn curvature_at(chart: &MetricChart, x: &[f64; 4], opts: CurvatureOptions) -> Result<CurvatureSample, RiemannError> {
    check_metric(chart, x, &opts)?;
    let e = frame_at(chart, x, opts.frame)?;
    let r = transform4(&riemann_coords_with(chart, x, opts.method)?, &e);
    let gens = chart.generators_in_coords(x) * e;
    let phi = transform4(&chart.phi_at(x).to_tensor(4), &gens);
    Ok(CurvatureSample { point: *x, frame: opts.frame, r, phi })
}

/// `Γ` at `x` by the chosen method, in coordinates.
pub fn christoffel_at(chart: &MetricChart, x: &[f64; 4], method: Method) -> Result<Vec<f64>, RiemannError> {
    match method {
        Method::Exact => christoffel(&chart.metric_jet(x)),
        Method::FiniteDifference { h } => christoffel(&chart.metric_jet_fd(x, h)),
        Method::Richardson { h } => {
            let a = christoffel(&chart.metric_jet_fd(x, h))?;
            let b = christoffel(&chart.metric_jet_fd(x, h / 2.0))?;
            Ok(a.iter().zip(&b).map(|(p, q)| (4.0 * q - p) / 3.0).collect())
        }
    }
}

/// Derivation action of a skew `S` on a 4-tensor, summed over slots.
pub fn derivation_action(s: &M8, t: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 4096];
    for slot in 0..4 {
        let stride = 8usize.pow(3 - slot as u32);
        for (idx, o) in out.iter_mut().enumerate() {
            let a = (idx / stride) % 8;
            let base = idx - a * stride;
            let mut acc = 0.0;
            for e in 0..8 {
                acc -= s[(e, a)] * t[base + e * stride];
            }
            *o += acc;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// `‖S·Φ‖ / (‖S‖ ‖Φ‖)`, Frobenius norms; 0 for `S = 0`.
    pub defect: f64,
}

pub const MEMBERSHIP_TOL: f64 = 1e-6;

pub fn spin7_membership(s: &M8, phi: &[f64]) -> Membership {
    let sn = s.norm();
    let pn = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if sn == 0.0 || pn == 0.0 {
        return Membership { member: true, defect: 0.0 };
    }
    let a = derivation_action(s, phi);
    let defect = a.iter().map(|x| x * x).sum::<f64>().sqrt() / (sn * pn);
    Membership { member: defect < MEMBERSHIP_TOL, defect }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomySpan {
    pub dimension: usize,
    pub singular_values: Vec<f64>,
    /// `σ_r / σ_{r+1}` at the rank cut; infinite when nothing is cut.
    pub gap: f64,
    pub membership_defects: Vec<f64>,
}

pub const RANK_THRESHOLD: f64 = 1e-7;

/// Span of all curvature endomorphisms; samples should share a frame type
/// in which `Φ` is the same constant form, such as [`FrameKind::Adapted`].
pub fn holonomy_span(samples: &[CurvatureSample]) -> HolonomySpan {
    let pairs = skew_pairs();
    let mut rows: Vec<f64> = Vec::new();
    let mut defects = Vec::new();
    let mut nrows = 0;
    let scale = samples.iter().map(CurvatureSample::norm).fold(0.0, f64::max);
    for s in samples {
        for m in s.endomorphisms() {
            rows.extend(pairs.iter().map(|&(a, b)| m[(a, b)]));
            nrows += 1;
            let mem = spin7_membership(&m, &s.phi);
            defects.push(if m.abs().max() <= 1e-12 * scale { 0.0 } else { mem.defect });
        }
    }
    if nrows == 0 {
        return HolonomySpan { dimension: 0, singular_values: vec![], gap: f64::INFINITY, membership_defects: defects };
    }
    let m = DMatrix::from_row_slice(nrows, 28, &rows);
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let dimension = if top == 0.0 { 0 } else { sv.iter().filter(|&&x| x > RANK_THRESHOLD * top).count() };
    let gap = if dimension == 0 || dimension >= sv.len() {
        f64::INFINITY
    } else {
        sv[dimension - 1] / sv[dimension].max(f64::MIN_POSITIVE)
    };
    HolonomySpan { dimension, singular_values: sv, gap, membership_defects: defects }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomyReport {
    pub family: String,
    pub points: Vec<[f64; 4]>,
    pub h: f64,
    pub ricci_rel_norm: f64,
    pub span_dim: usize,
    pub min_gap: f64,
    pub membership_max_defect: f64,
}

/// Exact curvature in the adapted frame for the span and membership;
/// Richardson-extrapolated differences of step `h` for the Ricci check.
pub fn holonomy_report(family: &str, chart: &MetricChart, points: &[[f64; 4]], h: f64) -> Result<HolonomyReport, RiemannError> {
    let exact = CurvatureOptions::default();
    let rich = CurvatureOptions { method: Method::Richardson { h }, ..exact };
    let results: Vec<Result<(CurvatureSample, f64), RiemannError>> = points
        .par_iter()
        .map(|p| {
            let s = curvature_at(chart, p, exact)?;
            let r = curvature_at(chart, p, rich)?;
            Ok((s, r.ricci_rel()))
        })
        .collect();
    let mut samples = Vec::with_capacity(points.len());
    let mut ricci: f64 = 0.0;
    for r in results {
        let (s, ric) = r?;
        ricci = ricci.max(ric);
        samples.push(s);
    }
    let span = holonomy_span(&samples);
    Ok(HolonomyReport {
        family: family.to_string(),
        points: points.to_vec(),
        h,
        ricci_rel_norm: ricci,
        span_dim: span.dimension,
        min_gap: span.gap,
        membership_max_defect: span.membership_defects.iter().copied().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::nu;

    fn cycle_chart() -> MetricChart {
        MetricChart::new(&SymMatrixField::diag([nu(1), nu(2), nu(3), nu(0)])).unwrap()
    }

    #[test]
    fn gauge_examples() {
        let mut w: [PolyForm; 4] = Default::default();
        w[0] = PolyForm::gens(&[2, 3]).mul_poly(&-nu(2));
        w[3] = PolyForm::gens(&[1, 2]).mul_poly(&nu(1));
        let a = gauge_potential(&w).unwrap();
        for l in 0..4 {
            assert_eq!(d(&a[l], &ConnectionRules::flat()), w[l]);
        }
        assert!(a[1].is_zero() && a[2].is_zero());
    }

    #[test]
    fn non_closed_rejected() {
        let mut w: [PolyForm; 4] = Default::default();
        w[2] = PolyForm::gens(&[0, 1]).mul_poly(&nu(2));
        assert_eq!(gauge_potential(&w), Err(RiemannError::NotClosed(2)));
    }

    #[test]
    fn jet_reciprocal() {
        let p = &nu(0).pow(2) + &nu(1);
        let x = [1.5, 0.5, 0.0, 0.0];
        let r = Jet2::of_poly(&p, &x).recip();
        let f = |y: [f64; 4]| 1.0 / p.eval_f64(&y);
        let h = 1e-4;
        let d0 = (f([x[0] + h, x[1], 0.0, 0.0]) - f([x[0] - h, x[1], 0.0, 0.0])) / (2.0 * h);
        assert!((r.g[0] - d0).abs() < 1e-7);
        let d00 = (f([x[0] + h, x[1], 0.0, 0.0]) - 2.0 * f(x) + f([x[0] - h, x[1], 0.0, 0.0])) / (h * h);
        assert!((r.h[0][0] - d00).abs() < 1e-5);
    }

    #[test]
    fn flat_chart_has_no_curvature() {
        let c = MetricChart::new(&SymMatrixField::identity()).unwrap();
        let s = curvature_at(&c, &[0.3, 0.1, 0.2, 0.4], CurvatureOptions::default()).unwrap();
        assert!(s.norm() < 1e-10);
        assert_eq!(holonomy_span(&[s]).dimension, 0);
    }

    #[test]
    fn adapted_frame_carries_model_form() {
        let c = cycle_chart();
        let x = [1.0, 2.0, 3.0, 4.0];
        let s = curvature_at(&c, &x, CurvatureOptions::default()).unwrap();
        let model = crate::spin7::model_phi0().evaluate(&[]).to_tensor(4);
        let err = s.phi.iter().zip(&model).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn frames_are_orthonormal() {
        let c = cycle_chart();
        let x = [1.0, 2.0, 3.0, 4.0];
        let g = c.metric_at(&x);
        for kind in [FrameKind::GramSchmidt, FrameKind::Adapted] {
            let e = frame_at(&c, &x, kind).unwrap();
            let id = e.transpose() * g * e;
            assert!((id - M8::identity()).abs().max() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn cycle_is_ricci_flat_with_symmetric_curvature() {
        let c = cycle_chart();
        let s = curvature_at(&c, &[1.0, 2.0, 3.0, 4.0], CurvatureOptions::default()).unwrap();
        assert!(s.norm() > 1e-3);
        assert!(s.ricci_rel() < 1e-10);
        assert!(s.symmetry_defect() < 1e-8 * s.norm());
        assert!(s.bianchi_defect() < 1e-8 * s.norm());
    }

    #[test]
    fn span_does_not_depend_on_the_frame() {
        let c = cycle_chart();
        let pts = [[1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 1.5, 2.5]];
        let dims: Vec<usize> = [FrameKind::GramSchmidt, FrameKind::Adapted]
            .into_iter()
            .map(|frame| {
                let opts = CurvatureOptions { frame, ..CurvatureOptions::default() };
                let samples: Vec<CurvatureSample> = pts.iter().map(|p| curvature_at(&c, p, opts).unwrap()).collect();
                holonomy_span(&samples).dimension
            })
            .collect();
        assert_eq!(dims, vec![21, 21]);
    }

    #[test]
    fn zero_is_a_member() {
        assert_eq!(spin7_membership(&M8::zeros(), &[1.0; 4096]), Membership { member: true, defect: 0.0 });
    }
}
