//! The flat local models near orbits with `T²` and `S¹` stabiliser.
//!
//! Complex coordinates are expanded as `z = x + iy`; forms live on the
//! eight real coordinates with `d` acting by `dx_k` on variable `k`.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::forms::{contract3, d_euclidean, interior, PolyForm};
use crate::poly::{q, q_to_f64, qr, Poly, Q};

pub type VectorField = [Poly; 8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ModelKind {
    #[serde(rename = "stab-T2")]
    StabT2,
    #[serde(rename = "stab-S1")]
    StabS1,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::StabT2 => "stab-T2",
            ModelKind::StabS1 => "stab-S1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stab-T2" | "t2" | "T2" => Some(ModelKind::StabT2),
            "stab-S1" | "s1" | "S1" => Some(ModelKind::StabS1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlatModel {
    pub kind: ModelKind,
    pub coord_names: [&'static str; 8],
    pub phi: PolyForm,
    pub u: [VectorField; 4],
    pub nu: [Poly; 4],
}

/// Complex-valued form `re + i·im`.
#[derive(Clone, Debug, Default)]
struct CForm {
    re: PolyForm,
    im: PolyForm,
}

impl CForm {
    /// `dz = dx + i dy`.
    fn dz(x: usize, y: usize) -> Self {
        CForm { re: PolyForm::gen(x), im: PolyForm::gen(y) }
    }

    fn conj(&self) -> Self {
        CForm { re: self.re.clone(), im: -&self.im }
    }

    fn wedge(&self, o: &CForm) -> CForm {
        CForm {
            re: &self.re.wedge(&o.re) - &self.im.wedge(&o.im),
            im: &self.re.wedge(&o.im) + &self.im.wedge(&o.re),
        }
    }

    fn add(&self, o: &CForm) -> CForm {
        CForm { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn scale_c(&self, a: &Q, b: &Q) -> CForm {
        // (a + ib)(re + i im)
        CForm { re: &self.re.scale(a) - &self.im.scale(b), im: &self.im.scale(a) + &self.re.scale(b) }
    }
}

/// Complex polynomial `re + i·im`.
#[derive(Clone, Debug)]
struct CPoly {
    re: Poly,
    im: Poly,
}

impl CPoly {
    fn z(x: usize, y: usize) -> Self {
        CPoly { re: Poly::var(x), im: Poly::var(y) }
    }

    fn mul(&self, o: &CPoly) -> CPoly {
        CPoly { re: &(&self.re * &o.re) - &(&self.im * &o.im), im: &(&self.re * &o.im) + &(&self.im * &o.re) }
    }

    fn abs2(&self) -> Poly {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }
}

/// `2 Re(i z ∂/∂z) = −y ∂/∂x + x ∂/∂y`.
fn rotation(x: usize, y: usize) -> VectorField {
    let mut v: VectorField = Default::default();
    v[x] = -Poly::var(y);
    v[y] = Poly::var(x);
    v
}

fn coordinate(k: usize) -> VectorField {
    let mut v: VectorField = Default::default();
    v[k] = Poly::one();
    v
}

pub fn vf_add(a: &VectorField, b: &VectorField) -> VectorField {
    std::array::from_fn(|k| &a[k] + &b[k])
}

pub fn vf_scale(a: &VectorField, c: &Q) -> VectorField {
    std::array::from_fn(|k| a[k].scale(c))
}

pub fn vf_is_zero(a: &VectorField) -> bool {
    a.iter().all(Poly::is_zero)
}

/// `[X, Y]^k = X(Y^k) − Y(X^k)`.
pub fn bracket(x: &VectorField, y: &VectorField) -> VectorField {
    std::array::from_fn(|k| {
        let mut s = Poly::zero();
        for m in 0..8 {
            s += &(&x[m] * &y[k].deriv(m));
            s -= &(&y[m] * &x[k].deriv(m));
        }
        s
    })
}

/// `X(f)`.
pub fn apply(x: &VectorField, f: &Poly) -> Poly {
    (0..8).fold(Poly::zero(), |acc, m| &acc + &(&x[m] * &f.deriv(m)))
}

/// `L_X a = d ι_X a + ι_X da`.
pub fn lie_derivative(x: &VectorField, a: &PolyForm) -> PolyForm {
    &d_euclidean(&interior(x, a)) + &interior(x, &d_euclidean(a))
}

/// `df` as a 1-form.
pub fn gradient(f: &Poly) -> PolyForm {
    let mut g = PolyForm::zero();
    for k in 0..8 {
        g.add_term(1 << k, &f.deriv(k));
    }
    g
}

/// `(x, y, x₁, y₁, x₂, y₂, x₃, y₃)` on `T² × ℂ³`.
fn stab_t2() -> FlatModel {
    let dz: Vec<CForm> = (0..3).map(|j| CForm::dz(2 + 2 * j, 3 + 2 * j)).collect();
    // (i/2) dz∧dz̄ summed, and its square
    let kahler = dz.iter().fold(CForm::default(), |acc, z| acc.add(&z.wedge(&z.conj()).scale_c(&Q::zero(), &qr(1, 2))));
    assert!(kahler.im.is_zero());
    let omega = kahler.re;
    let big = dz[0].wedge(&dz[1]).wedge(&dz[2]);
    let dzz = dz.iter().fold(CForm::default(), |acc, z| acc.add(&z.wedge(&z.conj())));
    let sq = dzz.wedge(&dzz);
    assert!(sq.im.is_zero());
    let dx = PolyForm::gen(0);
    let dy = PolyForm::gen(1);
    let mut phi = dx.wedge(&dy).wedge(&omega);
    phi = &phi + &dx.wedge(&big.re);
    phi = &phi - &dy.wedge(&big.im);
    phi = &phi - &sq.re.scale(&qr(1, 8));
    let z: Vec<CPoly> = (0..3).map(|j| CPoly::z(2 + 2 * j, 3 + 2 * j)).collect();
    let prod = z[0].mul(&z[1]).mul(&z[2]);
    let r: Vec<VectorField> = (0..3).map(|j| rotation(2 + 2 * j, 3 + 2 * j)).collect();
    let minus = |a: &VectorField, b: &VectorField| vf_add(a, &vf_scale(b, &q(-1)));
    FlatModel {
        kind: ModelKind::StabT2,
        coord_names: ["x", "y", "x1", "y1", "x2", "y2", "x3", "y3"],
        phi,
        u: [coordinate(0), coordinate(1), minus(&r[0], &r[2]), minus(&r[1], &r[2])],
        nu: [
            prod.im,
            prod.re,
            (&z[1].abs2() - &z[2].abs2()).scale(&qr(-1, 2)),
            (&z[0].abs2() - &z[2].abs2()).scale(&qr(1, 2)),
        ],
    }
}

/// `(x₁, x₂, x₃, u, Re z, Im z, Re w, Im w)` on `(T³ × ℝ) × ℂ²`.
fn stab_s1() -> FlatModel {
    let dz = CForm::dz(4, 5);
    let dw = CForm::dz(6, 7);
    let dzz = dz.wedge(&dz.conj()).add(&dw.wedge(&dw.conj()));
    let kahler = dzz.scale_c(&Q::zero(), &qr(1, 2));
    assert!(kahler.im.is_zero());
    let sq = dzz.wedge(&dzz);
    let (dx1, dx2, dx3, du) = (PolyForm::gen(0), PolyForm::gen(1), PolyForm::gen(2), PolyForm::gen(3));
    let mixed = CForm { re: dx2.clone(), im: -&dx3 }.wedge(&dz).wedge(&dw);
    let mut phi = dx1.wedge(&dx2).wedge(&dx3).wedge(&du);
    phi = &phi + &(&dx2.wedge(&dx3) - &dx1.wedge(&du)).wedge(&kahler.re);
    phi = &phi - &dx1.wedge(&mixed.re);
    phi = &phi + &du.wedge(&mixed.im);
    phi = &phi + &sq.re.scale(&qr(1, 8));
    let z = CPoly::z(4, 5);
    let w = CPoly::z(6, 7);
    let zw = z.mul(&w);
    let u3 = vf_scale(&vf_add(&rotation(4, 5), &vf_scale(&rotation(6, 7), &q(-1))), &q(-1));
    FlatModel {
        kind: ModelKind::StabS1,
        coord_names: ["x1", "x2", "x3", "u", "a", "b", "c", "d"],
        phi,
        u: [coordinate(0), coordinate(1), coordinate(2), u3],
        nu: [(&z.abs2() - &w.abs2()).scale(&qr(1, 2)), -&zw.re, -&zw.im, -Poly::var(3)],
    }
}

pub fn model(kind: ModelKind) -> FlatModel {
    match kind {
        ModelKind::StabT2 => stab_t2(),
        ModelKind::StabS1 => stab_s1(),
    }
}

const CYCLIC: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 2, 3, 0], [2, 3, 0, 1], [3, 0, 1, 2]];

impl FlatModel {
    pub fn nu_at(&self, p: &[Q]) -> Vec<Q> {
        self.nu.iter().map(|n| n.eval(p)).collect()
    }

    pub fn nu_at_f64(&self, p: &[f64]) -> [f64; 4] {
        std::array::from_fn(|i| self.nu[i].eval_f64(p))
    }

    /// `(−1)^i Φ(U_j, U_k, U_ℓ, ·)` for `(ijkℓ)` cyclic.
    pub fn contraction(&self, i: usize) -> PolyForm {
        let [_, j, k, l] = CYCLIC[i];
        let c = contract3(&self.u[j], &self.u[k], &self.u[l], &self.phi);
        if i.is_multiple_of(2) {
            c
        } else {
            -&c
        }
    }

    /// The four identities `dν_i = (−1)^i (U_j∧U_k∧U_ℓ)⌟Φ`, exactly.
    pub fn moment_identities_hold(&self) -> bool {
        (0..4).all(|i| gradient(&self.nu[i]) == self.contraction(i))
    }

    pub fn brackets_vanish(&self) -> bool {
        (0..4).all(|i| (i + 1..4).all(|j| vf_is_zero(&bracket(&self.u[i], &self.u[j]))))
    }

    pub fn phi_is_closed(&self) -> bool {
        d_euclidean(&self.phi).is_zero()
    }

    pub fn phi_is_invariant(&self) -> bool {
        self.u.iter().all(|u| lie_derivative(u, &self.phi).is_zero())
    }

    pub fn nu_is_invariant(&self) -> bool {
        self.u.iter().all(|u| self.nu.iter().all(|n| apply(u, n).is_zero()))
    }

    /// `Φ(U₀, U₁, U₂, U₃) ≡ 0`.
    pub fn orbits_are_isotropic(&self) -> bool {
        interior(&self.u[3], &contract3(&self.u[0], &self.u[1], &self.u[2], &self.phi)).is_zero()
    }

    /// `Φ` as a constant 4-tensor in the coordinate basis.
    pub fn phi_tensor(&self) -> Vec<f64> {
        self.phi.evaluate(&[0.0; 8]).to_tensor(4)
    }
}

/// Max over `i` and components of `|dν_i − s·(−1)^i (U_j∧U_k∧U_ℓ)⌟Φ|` at `p`.
pub fn moment_defect_scaled(m: &FlatModel, p: &[f64], s: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let lhs = gradient(&m.nu[i]).evaluate(p);
        let rhs = m.contraction(i).evaluate(p);
        for b in 0..=255u8 {
            worst = worst.max((lhs.get(b) - s * rhs.get(b)).abs());
        }
    }
    worst
}

pub fn verify_moment_identities(m: &FlatModel, p: &[f64]) -> f64 {
    moment_defect_scaled(m, p, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Ray,
    Line,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub from: [f64; 4],
    pub to: [f64; 4],
    pub dir: [i64; 4],
    /// Coefficients of the stabiliser generator in `U₀..U₃`.
    pub stabilizer: [i64; 4],
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularGraph {
    pub model: ModelKind,
    pub vertices: Vec<[f64; 4]>,
    pub edges: Vec<Edge>,
}

/// `ν`-box `[lo_k, hi_k]`.
pub type NuBox = [(f64, f64); 4];

fn primitive(v: &[Q]) -> [i64; 4] {
    let den = v.iter().fold(num_bigint::BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * Q::from_integer(den.clone())).to_integer()).collect();
    let g = ints.iter().fold(num_bigint::BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
    std::array::from_fn(|k| {
        let x = if g.is_zero() { ints[k].clone() } else { &ints[k] / &g };
        i64::try_from(x).expect("direction entry fits in i64")
    })
}

/// Largest `s ≥ 0` keeping `from + s·dir` in the box.
fn clip(from: &[f64; 4], dir: &[i64; 4], bx: &NuBox) -> f64 {
    let mut s = f64::INFINITY;
    for k in 0..4 {
        let dk = dir[k] as f64;
        if dk > 0.0 {
            s = s.min((bx[k].1 - from[k]) / dk);
        } else if dk < 0.0 {
            s = s.min((bx[k].0 - from[k]) / dk);
        }
    }
    s.max(0.0)
}

fn zero_point() -> Vec<Q> {
    vec![Q::zero(); 8]
}

/// Vanishing of a vector field along a coordinate set, checked at a point.
fn vanishes_at(v: &VectorField, p: &[Q]) -> bool {
    v.iter().all(|c| c.eval(p).is_zero())
}

/// Image of the orbits with nontrivial stabiliser, clipped to the box.
pub fn singular_graph(m: &FlatModel, bx: &NuBox) -> SingularGraph {
    let origin = zero_point();
    let o: Vec<Q> = m.nu_at(&origin);
    let of: [f64; 4] = std::array::from_fn(|k| q_to_f64(&o[k]));
    match m.kind {
        ModelKind::StabT2 => {
            // three families: z_j-axis with the other two coordinates zero
            let mut dirs = Vec::new();
            let mut stabs = Vec::new();
            for j in 0..3 {
                let mut p = zero_point();
                p[2 + 2 * j] = Q::one();
                let nu = m.nu_at(&p);
                let diff: Vec<Q> = nu.iter().zip(&o).map(|(a, b)| a - b).collect();
                dirs.push(primitive(&diff));
                // integer combination of U₂, U₃ that vanishes on the family
                let mut found = None;
                for a in -1i64..=1 {
                    for b in -1i64..=1 {
                        if a == 0 && b == 0 {
                            continue;
                        }
                        let v = vf_add(&vf_scale(&m.u[2], &q(a)), &vf_scale(&m.u[3], &q(b)));
                        if vanishes_at(&v, &p) && found.is_none() {
                            found = Some([0, 0, a, b]);
                        }
                    }
                }
                stabs.push(found.expect("each family has a circle stabiliser"));
            }
            // orient the generators so that they sum to zero
            for flips in 0..8u32 {
                let sgn = |j: usize| if flips >> j & 1 == 1 { -1 } else { 1 };
                let total: [i64; 4] = std::array::from_fn(|k| (0..3).map(|j| sgn(j) * stabs[j][k]).sum());
                if total == [0; 4] {
                    for (j, s) in stabs.iter_mut().enumerate() {
                        *s = s.map(|x| sgn(j) * x);
                    }
                    break;
                }
            }
            if stabs[0].iter().find(|x| **x != 0).is_some_and(|x| *x < 0) {
                for s in stabs.iter_mut() {
                    *s = s.map(|x| -x);
                }
            }
            let edges = dirs
                .iter()
                .zip(&stabs)
                .map(|(dir, st)| {
                    let s = clip(&of, dir, bx);
                    Edge {
                        from: of,
                        to: std::array::from_fn(|k| of[k] + s * dir[k] as f64),
                        dir: *dir,
                        stabilizer: *st,
                        kind: EdgeKind::Ray,
                    }
                })
                .collect();
            SingularGraph { model: m.kind, vertices: vec![of], edges }
        }
        ModelKind::StabS1 => {
            // z = w = 0, parametrised by u
            let mut p = zero_point();
            p[3] = Q::one();
            assert!(vanishes_at(&m.u[3], &p));
            let diff: Vec<Q> = m.nu_at(&p).iter().zip(&o).map(|(a, b)| a - b).collect();
            let mut dir = primitive(&diff);
            if dir.iter().find(|x| **x != 0).is_some_and(|x| x.is_negative()) {
                dir = dir.map(|x| -x);
            }
            let back = dir.map(|x| -x);
            let s0 = clip(&of, &back, bx);
            let s1 = clip(&of, &dir, bx);
            let from = std::array::from_fn(|k| of[k] - s0 * dir[k] as f64);
            let to = std::array::from_fn(|k| of[k] + s1 * dir[k] as f64);
            SingularGraph {
                model: m.kind,
                vertices: vec![],
                edges: vec![Edge { from, to, dir, stabilizer: [0, 0, 0, 1], kind: EdgeKind::Line }],
            }
        }
    }
}

impl SingularGraph {
    /// Sum of the edge directions at the vertex.
    pub fn direction_sum(&self) -> [i64; 4] {
        std::array::from_fn(|k| self.edges.iter().map(|e| e.dir[k]).sum())
    }

    pub fn directions_primitive(&self) -> bool {
        self.edges.iter().all(|e| {
            let g = e.dir.iter().fold(0i64, |acc, &x| num_integer::Integer::gcd(&acc, &x));
            g == 1
        })
    }

    /// `edge,s,nu0,nu1,nu2,nu3` with `samples` points per edge.
    pub fn to_csv(&self, samples: usize) -> String {
        let mut out = String::from("edge,s,nu0,nu1,nu2,nu3\n");
        let n = samples.max(2);
        for (i, e) in self.edges.iter().enumerate() {
            for k in 0..n {
                let s = k as f64 / (n - 1) as f64;
                let p: Vec<f64> = (0..4).map(|c| e.from[c] + s * (e.to[c] - e.from[c])).collect();
                let _ = writeln!(out, "{i},{s},{},{},{},{}", p[0], p[1], p[2], p[3]);
            }
        }
        out
    }
}

/// Generator of a rotation with weights `w_j` on the complex planes
/// `z₁, z₂, z₃` of the `T²` model, as a skew matrix in the coordinate basis.
pub fn t2_rotation_generator(w: [f64; 3]) -> [[f64; 8]; 8] {
    let mut s = [[0.0; 8]; 8];
    for j in 0..3 {
        let (x, y) = (2 + 2 * j, 3 + 2 * j);
        s[y][x] = w[j];
        s[x][y] = -w[j];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t2_nu_example() {
        let m = model(ModelKind::StabT2);
        let mut p = zero_point();
        p[2] = Q::one();
        p[5] = Q::one();
        p[6] = Q::one();
        assert_eq!(m.nu_at(&p), vec![q(1), q(0), q(0), q(0)]);
    }

    #[test]
    fn s1_nu_example() {
        let m = model(ModelKind::StabS1);
        let p = [0, 0, 0, 2, 1, 0, 1, 0].map(q);
        assert_eq!(m.nu_at(&p), vec![q(0), q(-1), q(0), q(-2)]);
    }

    #[test]
    fn t2_stabiliser_at_origin() {
        let m = model(ModelKind::StabT2);
        let o = zero_point();
        assert!(vanishes_at(&m.u[2], &o) && vanishes_at(&m.u[3], &o));
        assert!(!vanishes_at(&m.u[0], &o));
    }

    #[test]
    fn identities_hold_exactly() {
        for kind in [ModelKind::StabT2, ModelKind::StabS1] {
            let m = model(kind);
            assert!(m.moment_identities_hold(), "{kind:?}");
            assert!(m.brackets_vanish() && m.phi_is_closed() && m.phi_is_invariant(), "{kind:?}");
            assert!(m.nu_is_invariant() && m.orbits_are_isotropic(), "{kind:?}");
        }
    }

    #[test]
    fn phi_has_fourteen_terms() {
        assert_eq!(model(ModelKind::StabT2).phi.nterms(), 14);
        assert_eq!(model(ModelKind::StabS1).phi.nterms(), 14);
    }

    #[test]
    fn graphs() {
        let bx: NuBox = [(-1.0, 1.0); 4];
        let g = singular_graph(&model(ModelKind::StabT2), &bx);
        assert_eq!(g.edges.len(), 3);
        assert_eq!(g.direction_sum(), [0; 4]);
        assert!(g.directions_primitive());
        let total: [i64; 4] = std::array::from_fn(|k| g.edges.iter().map(|e| e.stabilizer[k]).sum());
        assert_eq!(total, [0; 4]);
        let by_dir: Vec<([i64; 4], [i64; 4])> = g.edges.iter().map(|e| (e.dir, e.stabilizer)).collect();
        assert!(by_dir.contains(&([0, 0, 0, 1], [0, 0, 0, 1])));
        assert!(by_dir.contains(&([0, 0, -1, 0], [0, 0, -1, 0])));
        assert!(by_dir.contains(&([0, 0, 1, -1], [0, 0, 1, -1])));
        let g = singular_graph(&model(ModelKind::StabS1), &bx);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].dir, [0, 0, 0, 1]);
        assert_eq!(g.edges[0].from, [0.0, 0.0, 0.0, -1.0]);
    }
}
