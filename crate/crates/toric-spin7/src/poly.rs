//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! A monomial in up to eight variables is packed into a `u64`, one byte
//! per exponent, so multiplying monomials is integer addition.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar used throughout the crate.
pub type Q = BigRational;

/// Maximum number of variables a [`Poly`] can carry.
pub const MAX_VARS: usize = 8;

/// Packed exponent vector.
pub type Mono = u64;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_to_f64(x: &Q) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // huge numerator or denominator: scale both down first
            let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(900);
            let n = (x.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (x.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Nearest rational with bounded denominator is not needed; this converts
/// an `f64` exactly (every finite double is a dyadic rational).
pub fn f64_to_q(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

#[inline]
pub fn mono_exp(m: Mono, i: usize) -> u32 {
    ((m >> (8 * i)) & 0xff) as u32
}

#[inline]
pub fn mono_var(i: usize) -> Mono {
    1u64 << (8 * i)
}

pub fn mono_from(exps: &[u32]) -> Mono {
    assert!(exps.len() <= MAX_VARS);
    exps.iter().enumerate().fold(0u64, |m, (i, &e)| {
        assert!(e < 256, "exponent overflow");
        m | ((e as u64) << (8 * i))
    })
}

pub fn mono_degree(m: Mono) -> u32 {
    (0..MAX_VARS).map(|i| mono_exp(m, i)).sum()
}

#[inline]
fn mono_mul(a: Mono, b: Mono) -> Mono {
    debug_assert!((0..MAX_VARS).all(|i| mono_exp(a, i) + mono_exp(b, i) < 256));
    a + b
}

#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct Poly {
    terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(0, c);
        }
        p
    }

    pub fn int(n: i64) -> Self {
        Self::constant(q(n))
    }

    pub fn var(i: usize) -> Self {
        assert!(i < MAX_VARS);
        Self::monomial(mono_var(i), Q::one())
    }

    pub fn monomial(m: Mono, c: Q) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, Q)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(mono_from(&e), c);
        }
        p
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|&m| m == 0)
    }

    pub fn constant_term(&self) -> Q {
        self.terms.get(&0).cloned().unwrap_or_else(Q::zero)
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: Mono) -> Q {
        self.terms.get(&m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|&m| mono_degree(m)).max()
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|&m| mono_exp(m, i)).max().unwrap_or(0)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|&m| mono_exp(m, i) > 0)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(&m, v)| (m, v * c)).collect(),
        }
    }

    /// Coefficients over a common denominator: `self = nums / den`.
    fn integer_form(&self) -> (Vec<(Mono, BigInt)>, BigInt) {
        let den = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums = self
            .terms
            .iter()
            .map(|(&m, c)| (m, c.numer() * (&den / c.denom())))
            .collect();
        (nums, den)
    }

    pub fn mul_poly(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if other.terms.len() == 1 {
            let (&m, c) = other.terms.iter().next().unwrap();
            return Poly {
                terms: self.terms.iter().map(|(&k, v)| (mono_mul(k, m), v * c)).collect(),
            };
        }
        if self.terms.len() == 1 {
            return other.mul_poly(self);
        }
        let (an, ad) = self.integer_form();
        let (bn, bd) = other.integer_form();
        let mut acc: HashMap<Mono, BigInt> = HashMap::with_capacity(an.len() * bn.len() / 2 + 1);
        for (ma, ca) in &an {
            for (mb, cb) in &bn {
                let e = acc.entry(mono_mul(*ma, *mb)).or_insert_with(BigInt::zero);
                *e += ca * cb;
            }
        }
        let den = ad * bd;
        Poly {
            terms: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(m, c)| (m, Q::new(c, den.clone())))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul_poly(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_poly(&base);
            }
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn deriv(&self, i: usize) -> Poly {
        let mut out = Poly::zero();
        for (&m, c) in &self.terms {
            let e = mono_exp(m, i);
            if e > 0 {
                out.terms.insert(m - mono_var(i), c * q(e as i64));
            }
        }
        out
    }

    /// Antiderivative in variable `i` vanishing on `x_i = 0`.
    pub fn antideriv(&self, i: usize) -> Poly {
        let mut out = Poly::zero();
        for (&m, c) in &self.terms {
            let e = mono_exp(m, i) as i64;
            out.terms.insert(m + mono_var(i), c / q(e + 1));
        }
        out
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        let mut total = Q::zero();
        for (&m, c) in &self.terms {
            let mut t = c.clone();
            for (i, xi) in x.iter().enumerate().take(MAX_VARS) {
                let e = mono_exp(m, i);
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            for i in x.len()..MAX_VARS {
                if mono_exp(m, i) > 0 {
                    t = Q::zero();
                }
            }
            total += t;
        }
        total
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (&m, c) in &self.terms {
            let mut t = q_to_f64(c);
            for i in 0..MAX_VARS {
                let e = mono_exp(m, i);
                if e > 0 {
                    t *= x.get(i).copied().unwrap_or(0.0).powi(e as i32);
                }
            }
            total += t;
        }
        total
    }

    /// Substitutes `subs[i]` for variable `i`.
    pub fn compose(&self, subs: &[Poly]) -> Poly {
        let mut powers: Vec<Vec<Poly>> = subs.iter().map(|s| vec![Poly::one(), s.clone()]).collect();
        let mut out = Poly::zero();
        for (&m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for i in 0..MAX_VARS {
                let e = mono_exp(m, i) as usize;
                if e == 0 {
                    continue;
                }
                assert!(i < subs.len(), "composition misses variable {i}");
                while powers[i].len() <= e {
                    let next = powers[i].last().unwrap().mul_poly(&subs[i]);
                    powers[i].push(next);
                }
                t = t.mul_poly(&powers[i][e]);
            }
            out += &t;
        }
        out
    }

    /// Sets variable `i` to the constant `v`.
    pub fn substitute(&self, i: usize, v: &Q) -> Poly {
        let mut out = Poly::zero();
        for (&m, c) in &self.terms {
            let e = mono_exp(m, i);
            let base = m - (e as u64) * mono_var(i);
            out.add_term(base, c * num_traits::pow(v.clone(), e as usize));
        }
        out
    }

    /// Leading coefficient in monomial order (largest packed monomial).
    pub fn leading_coeff(&self) -> Option<&Q> {
        self.terms.values().next_back()
    }

    pub fn max_abs_coeff(&self) -> Q {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }

    pub fn display_with(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut ordered: Vec<(&Mono, &Q)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| mono_degree(*b.0).cmp(&mono_degree(*a.0)).then(b.0.cmp(a.0)));
        let mut s = String::new();
        for (k, (&m, c)) in ordered.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for i in 0..MAX_VARS {
                let e = mono_exp(m, i);
                if e == 1 {
                    factors.push(names[i].to_string());
                } else if e > 1 {
                    factors.push(format!("{}^{}", names[i], e));
                }
            }
            if !a.is_one() || factors.is_empty() {
                factors.insert(0, a.to_string());
            }
            s.push_str(&factors.join("*"));
        }
        s
    }
}

pub const NU_NAMES: [&str; 8] = ["nu0", "nu1", "nu2", "nu3", "x4", "x5", "x6", "x7"];

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&NU_NAMES))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (&m, c) in &rhs.terms {
            self.add_term(m, c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        for (&m, c) in &rhs.terms {
            self.add_term(m, -c.clone());
        }
    }
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.mul_poly(rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(&m, c)| (m, -c.clone())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $f(self, rhs: &Poly) -> Poly {
                (&self).$f(rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                self.$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

/// Shorthand for the ν-variables: `nu(i)`.
pub fn nu(i: usize) -> Poly {
    Poly::var(i)
}

/// Evaluates a polynomial at a point given as `f64` and returns the value
/// together with the exactly rounded rational evaluation for comparison.
pub fn eval_exact_at_f64(p: &Poly, x: &[f64]) -> f64 {
    let xs: Vec<Q> = x.iter().map(|&v| f64_to_q(v)).collect();
    q_to_f64(&p.eval(&xs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_derivative() {
        let p = &nu(0) + &Poly::int(1);
        let sq = p.pow(2);
        assert_eq!(sq, &(&nu(0) * &nu(0)) + &(&nu(0).scale(&q(2)) + &Poly::int(1)));
        assert_eq!(sq.deriv(0), p.scale(&q(2)));
        assert!(sq.deriv(1).is_zero());
    }

    #[test]
    fn evaluation_matches_float() {
        let p = Poly::from_terms(vec![(vec![1, 1, 1, 1], q(1)), (vec![0, 2], qr(-3, 2))]);
        let x = [q(1), q(2), q(3), q(4)];
        assert_eq!(p.eval(&x), q(24) - qr(3, 2) * q(4));
        assert!((p.eval_f64(&[1.0, 2.0, 3.0, 4.0]) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn compose_linear() {
        // (nu0 + nu1)^2 with nu0 -> 2 nu1, nu1 -> nu0
        let p = (&nu(0) + &nu(1)).pow(2);
        let r = p.compose(&[nu(1).scale(&q(2)), nu(0)]);
        assert_eq!(r, (&nu(1).scale(&q(2)) + &nu(0)).pow(2));
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let p = Poly::from_terms(vec![(vec![2, 0, 1], q(3)), (vec![0, 1], q(5))]);
        assert_eq!(p.antideriv(0).deriv(0), p);
    }

    #[test]
    fn display_is_readable() {
        let p = &(&nu(1).pow(3) * &nu(3)) - &nu(2).scale(&q(2));
        assert_eq!(p.to_string(), "nu1^3*nu3 - 2*nu2");
    }

    #[test]
    fn huge_rationals_convert() {
        let big = Q::new(BigInt::from(10).pow(400), BigInt::from(10).pow(399));
        assert!((q_to_f64(&big) - 10.0).abs() < 1e-12);
    }
}
