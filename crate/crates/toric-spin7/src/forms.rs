//! Exterior algebra on eight generators with polynomial coefficients.
//!
//! In the ansatz chart the generators are `dν₀..dν₃, θ₀..θ₃` (bits 0..7 of
//! a blade mask, in that order) and coefficients are polynomials in
//! `ν₀..ν₃`.  The same storage doubles as the algebra of constant or
//! polynomial forms on a Euclidean `ℝ⁸` with generators `dx₀..dx₇`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};

use crate::poly::{q, q_to_f64, Poly, Q};

/// Set of generators, bit `g` meaning generator `g` is present.
pub type Blade = u8;

pub const DNU: [Blade; 4] = [1, 2, 4, 8];
pub const THETA: [Blade; 4] = [16, 32, 64, 128];

pub const ANSATZ_NAMES: [&str; 8] = ["dnu0", "dnu1", "dnu2", "dnu3", "th0", "th1", "th2", "th3"];
pub const EUCLID_NAMES: [&str; 8] = ["e0", "e1", "e2", "e3", "e4", "e5", "e6", "e7"];

pub fn grade(b: Blade) -> u32 {
    b.count_ones()
}

/// Sign of `a ∧ b` relative to the canonical blade `a | b`, zero on overlap.
pub fn wedge_sign(a: Blade, b: Blade) -> i32 {
    if a & b != 0 {
        return 0;
    }
    // transpositions: pairs (x in a, y in b) with x > y
    let mut swaps = 0;
    for y in 0..8 {
        if b & (1 << y) != 0 {
            swaps += ((a as u16) >> (y + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Blade from an ordered generator list and the sign of sorting it.
pub fn blade_of(gens: &[usize]) -> (Blade, i32) {
    let mut b: Blade = 0;
    let mut sign = 1;
    for &g in gens {
        let s = wedge_sign(b, 1 << g);
        if s == 0 {
            return (0, 0);
        }
        sign *= s;
        b |= 1 << g;
    }
    (b, sign)
}

#[derive(Clone, PartialEq, Eq, Default)]
pub struct PolyForm {
    terms: BTreeMap<Blade, Poly>,
}

impl PolyForm {
    pub fn zero() -> Self {
        PolyForm { terms: BTreeMap::new() }
    }

    pub fn scalar(p: Poly) -> Self {
        Self::term(0, p)
    }

    pub fn term(b: Blade, p: Poly) -> Self {
        let mut f = Self::zero();
        if !p.is_zero() {
            f.terms.insert(b, p);
        }
        f
    }

    /// Generator `g` (0..8) as a 1-form.
    pub fn gen(g: usize) -> Self {
        Self::term(1 << g, Poly::one())
    }

    pub fn dnu(i: usize) -> Self {
        Self::gen(i)
    }

    pub fn theta(i: usize) -> Self {
        Self::gen(4 + i)
    }

    /// Wedge of generators in the given order, e.g. `[1,2,3]` is `dν₁₂₃`.
    pub fn gens(list: &[usize]) -> Self {
        let (b, s) = blade_of(list);
        if s == 0 {
            return Self::zero();
        }
        Self::term(b, Poly::int(s as i64))
    }

    pub fn add_term(&mut self, b: Blade, p: &Poly) {
        if p.is_zero() {
            return;
        }
        let e = self.terms.entry(b).or_default();
        *e += p;
        if e.is_zero() {
            self.terms.remove(&b);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Blade, &Poly)> {
        self.terms.iter()
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn component(&self, b: Blade) -> Poly {
        self.terms.get(&b).cloned().unwrap_or_default()
    }

    /// Degree if homogeneous.
    pub fn degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|&b| grade(b));
        let first = it.next()?;
        it.all(|g| g == first).then_some(first)
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.mul_poly(&Poly::constant(c.clone()))
    }

    pub fn mul_poly(&self, p: &Poly) -> Self {
        let mut out = Self::zero();
        for (&b, c) in &self.terms {
            out.add_term(b, &c.mul_poly(p));
        }
        out
    }

    pub fn wedge(&self, other: &PolyForm) -> PolyForm {
        let mut out = PolyForm::zero();
        for (&a, ca) in &self.terms {
            for (&b, cb) in &other.terms {
                let s = wedge_sign(a, b);
                if s == 0 {
                    continue;
                }
                let prod = ca.mul_poly(cb);
                out.add_term(a | b, &if s > 0 { prod } else { -prod });
            }
        }
        out
    }

    /// Keeps only terms of the given degree.
    pub fn part(&self, deg: u32) -> PolyForm {
        PolyForm {
            terms: self.terms.iter().filter(|(&b, _)| grade(b) == deg).map(|(&b, c)| (b, c.clone())).collect(),
        }
    }

    /// Evaluates every coefficient exactly at a rational point.
    pub fn eval_exact(&self, p: &[Q]) -> BTreeMap<Blade, Q> {
        self.terms
            .iter()
            .map(|(&b, c)| (b, c.eval(p)))
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }

    /// Numeric evaluation: coefficients evaluated exactly, then rounded.
    pub fn evaluate(&self, p: &[f64]) -> NumForm {
        let xs: Vec<Q> = p.iter().map(|&v| crate::poly::f64_to_q(v)).collect();
        let mut c = BTreeMap::new();
        for (b, v) in self.eval_exact(&xs) {
            c.insert(b, q_to_f64(&v));
        }
        NumForm { c }
    }

    /// Coefficients as a constant form (all coefficient polynomials constant).
    pub fn constant_part(&self) -> BTreeMap<Blade, Q> {
        self.terms
            .iter()
            .map(|(&b, c)| (b, c.constant_term()))
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }

    /// Replaces each generator `g` by the 1-form `images[g]` (pullback by a
    /// linear change of frame).
    pub fn substitute_generators(&self, images: &[PolyForm; 8]) -> PolyForm {
        let mut out = PolyForm::zero();
        for (&b, c) in &self.terms {
            let mut acc = PolyForm::scalar(c.clone());
            for g in 0..8 {
                if b & (1 << g) != 0 {
                    acc = acc.wedge(&images[g]);
                }
            }
            out = &out + &acc;
        }
        out
    }

    pub fn display_with(&self, gen_names: &[&str; 8], var_names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&b, c)| {
                let g: Vec<&str> = (0..8).filter(|k| b & (1 << k) != 0).map(|k| gen_names[k]).collect();
                if g.is_empty() {
                    format!("({})", c.display_with(var_names))
                } else {
                    format!("({})*{}", c.display_with(var_names), g.join("^"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&ANSATZ_NAMES, &crate::poly::NU_NAMES))
    }
}

impl fmt::Debug for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyForm({self})")
    }
}

impl Add<&PolyForm> for &PolyForm {
    type Output = PolyForm;
    fn add(self, rhs: &PolyForm) -> PolyForm {
        let mut out = self.clone();
        for (&b, c) in &rhs.terms {
            out.add_term(b, c);
        }
        out
    }
}

impl Sub<&PolyForm> for &PolyForm {
    type Output = PolyForm;
    fn sub(self, rhs: &PolyForm) -> PolyForm {
        let mut out = self.clone();
        for (&b, c) in &rhs.terms {
            out.add_term(b, &-c);
        }
        out
    }
}

impl Neg for &PolyForm {
    type Output = PolyForm;
    fn neg(self) -> PolyForm {
        self.scale(&q(-1))
    }
}

/// Curvature substitution `dθ_ℓ = ω_ℓ` for the ansatz chart.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConnectionRules {
    pub omega: [PolyForm; 4],
}

impl ConnectionRules {
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn new(omega: [PolyForm; 4]) -> Self {
        for w in &omega {
            assert!(w.terms().all(|(&b, _)| b & 0xf0 == 0), "curvature form contains a fibre generator");
        }
        ConnectionRules { omega }
    }

    pub fn is_closed(&self) -> bool {
        self.omega.iter().all(|w| d(w, &ConnectionRules::flat()).is_zero())
    }
}

/// Exterior derivative in the ansatz chart.
pub fn d(a: &PolyForm, rules: &ConnectionRules) -> PolyForm {
    let mut out = PolyForm::zero();
    for (&b, c) in a.terms() {
        for k in 0..4 {
            let dc = c.deriv(k);
            if dc.is_zero() {
                continue;
            }
            let s = wedge_sign(1 << k, b);
            if s != 0 {
                out.add_term(b | (1 << k), &if s > 0 { dc } else { -dc });
            }
        }
        for l in 0..4 {
            let g = 4 + l;
            if b & (1 << g) == 0 || rules.omega[l].is_zero() {
                continue;
            }
            let before = b & ((1u8 << g) - 1);
            let after = b & !((1u16 << (g + 1)) - 1) as u8;
            let sign = if grade(before).is_multiple_of(2) { 1 } else { -1 };
            let piece = PolyForm::term(before, c.clone())
                .wedge(&rules.omega[l])
                .wedge(&PolyForm::term(after, Poly::one()));
            out = if sign > 0 { &out + &piece } else { &out - &piece };
        }
    }
    out
}

/// Exterior derivative on Euclidean `ℝ⁸`, generator `g` being `dx_g`.
pub fn d_euclidean(a: &PolyForm) -> PolyForm {
    let mut out = PolyForm::zero();
    for (&b, c) in a.terms() {
        for k in 0..8 {
            let dc = c.deriv(k);
            if dc.is_zero() {
                continue;
            }
            let s = wedge_sign(1 << k, b);
            if s != 0 {
                out.add_term(b | (1 << k), &if s > 0 { dc } else { -dc });
            }
        }
    }
    out
}

/// Interior product `ι_X a` for a vector field with components `x[g]` in
/// the basis dual to the generators.
pub fn interior(x: &[Poly], a: &PolyForm) -> PolyForm {
    let mut out = PolyForm::zero();
    for (&b, c) in a.terms() {
        let mut pos = 0;
        for g in 0..8 {
            if b & (1 << g) == 0 {
                continue;
            }
            if g < x.len() && !x[g].is_zero() {
                let coeff = c.mul_poly(&x[g]);
                out.add_term(b & !(1 << g), &if pos % 2 == 0 { coeff } else { -coeff });
            }
            pos += 1;
        }
    }
    out
}

/// `Φ(X, Y, Z, ·)`, the contraction written `(X∧Y∧Z) ⌟ Φ`.
pub fn contract3(x: &[Poly], y: &[Poly], z: &[Poly], a: &PolyForm) -> PolyForm {
    interior(z, &interior(y, &interior(x, a)))
}

/// Form with numeric coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct NumForm {
    pub c: BTreeMap<Blade, f64>,
}

impl NumForm {
    pub fn get(&self, b: Blade) -> f64 {
        self.c.get(&b).copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn wedge(&self, other: &NumForm) -> NumForm {
        let mut c: BTreeMap<Blade, f64> = BTreeMap::new();
        for (&a, &x) in &self.c {
            for (&b, &y) in &other.c {
                let s = wedge_sign(a, b);
                if s != 0 {
                    *c.entry(a | b).or_insert(0.0) += s as f64 * x * y;
                }
            }
        }
        NumForm { c }
    }

    pub fn sub(&self, other: &NumForm) -> NumForm {
        let mut c = self.c.clone();
        for (&b, &v) in &other.c {
            *c.entry(b).or_insert(0.0) -= v;
        }
        NumForm { c }
    }

    /// Fully antisymmetric component tensor of a homogeneous `k`-form,
    /// `T[i₁..i_k] = a(e_{i₁},…,e_{i_k})`, flattened in base 8.
    pub fn to_tensor(&self, k: usize) -> Vec<f64> {
        let n = 8usize.pow(k as u32);
        let mut t = vec![0.0; n];
        for idx in 0..n {
            let mut gens = Vec::with_capacity(k);
            let mut r = idx;
            for _ in 0..k {
                gens.push(r % 8);
                r /= 8;
            }
            gens.reverse();
            let (b, s) = blade_of(&gens);
            if s != 0 {
                t[idx] = s as f64 * self.get(b);
            }
        }
        t
    }

    pub fn from_tensor(t: &[f64], k: usize) -> NumForm {
        let mut c = BTreeMap::new();
        for b in 0u16..256 {
            let b = b as u8;
            if grade(b) as usize != k {
                continue;
            }
            let gens: Vec<usize> = (0..8).filter(|g| b & (1 << g) != 0).collect();
            let idx = gens.iter().fold(0, |acc, &g| acc * 8 + g);
            let v = t[idx];
            if v != 0.0 {
                c.insert(b, v);
            }
        }
        NumForm { c }
    }
}

/// Rational function `num / den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

impl RatFunc {
    pub fn poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        RatFunc { num, den }.normalized()
    }

    /// Content normalization: the denominator's leading coefficient is 1.
    pub fn normalized(self) -> Self {
        match self.den.leading_coeff().cloned() {
            Some(lc) if !lc.is_one() => {
                let inv = Q::one() / lc;
                RatFunc { num: self.num.scale(&inv), den: self.den.scale(&inv) }
            }
            _ => self,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        self.num.eval(x) / self.den.eval(x)
    }

    /// Exact equality by cross multiplication.
    pub fn equals(&self, other: &RatFunc) -> bool {
        (&self.num * &other.den) == (&other.num * &self.den)
    }
}

/// Form with polynomial numerator and a common polynomial denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatForm {
    pub num: PolyForm,
    pub den: Poly,
}

impl RatForm {
    pub fn from_form(f: PolyForm) -> Self {
        RatForm { num: f, den: Poly::one() }
    }

    pub fn new(num: PolyForm, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let r = RatForm { num, den };
        r.normalized()
    }

    pub fn normalized(self) -> Self {
        match self.den.leading_coeff().cloned() {
            Some(lc) if !lc.is_one() => {
                let inv = Q::one() / lc;
                RatForm { num: self.num.scale(&inv), den: self.den.scale(&inv) }
            }
            _ => self,
        }
    }

    /// Zero is decided on the numerator.
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &RatForm) -> RatForm {
        if self.den == other.den {
            return RatForm { num: &self.num + &other.num, den: self.den.clone() };
        }
        RatForm::new(
            &self.num.mul_poly(&other.den) + &other.num.mul_poly(&self.den),
            &self.den * &other.den,
        )
    }

    pub fn wedge(&self, other: &RatForm) -> RatForm {
        RatForm::new(self.num.wedge(&other.num), &self.den * &other.den)
    }

    /// `d(N/D) = (D·dN − dD∧N)/D²`.
    pub fn d(&self, rules: &ConnectionRules) -> RatForm {
        let dn = d(&self.num, rules);
        if self.den.is_constant() {
            return RatForm { num: dn, den: self.den.clone() };
        }
        let dd = d(&PolyForm::scalar(self.den.clone()), rules);
        RatForm::new(&dn.mul_poly(&self.den) - &dd.wedge(&self.num), &self.den * &self.den)
    }

    pub fn component(&self, b: Blade) -> RatFunc {
        RatFunc::new(self.num.component(b), self.den.clone())
    }

    pub fn evaluate(&self, p: &[f64]) -> NumForm {
        let xs: Vec<Q> = p.iter().map(|&v| crate::poly::f64_to_q(v)).collect();
        let den = self.den.eval(&xs);
        assert!(!den.is_zero(), "denominator vanishes at evaluation point");
        let mut c = BTreeMap::new();
        for (b, v) in self.num.eval_exact(&xs) {
            c.insert(b, q_to_f64(&(v / &den)));
        }
        NumForm { c }
    }

    pub fn eval_exact(&self, p: &[Q]) -> BTreeMap<Blade, Q> {
        let den = self.den.eval(p);
        self.num.eval_exact(p).into_iter().map(|(b, v)| (b, v / &den)).collect()
    }

    /// Exact equality by cross multiplication.
    pub fn equals(&self, other: &RatForm) -> bool {
        (&self.num.mul_poly(&other.den) - &other.num.mul_poly(&self.den)).is_zero()
    }
}
