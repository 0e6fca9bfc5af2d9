//! Truncated formal power series in the deformation parameter λ.
//!
//! A [`LambdaSeries`] of order `N` stores exactly `N + 1` coefficients. Binary
//! operations on series of different orders project both to the smaller order.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Cq, Q};

pub const DEFAULT_ORDER: usize = 4;

/// Ring structure a coefficient type has to provide.
pub trait CoefficientDomain: Clone + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, s: &Q) -> Self;
    fn is_zero(&self) -> bool;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// Multiplicative inverse, when the domain knows one.
    fn try_inv(&self) -> Option<Self> {
        None
    }
}

impl CoefficientDomain for Cq {
    fn zero() -> Self {
        Cq::zero()
    }
    fn one() -> Self {
        Cq::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, s: &Q) -> Self {
        Cq::scale(self, s)
    }
    fn is_zero(&self) -> bool {
        Cq::is_zero(self)
    }
    fn try_inv(&self) -> Option<Self> {
        self.inv()
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct LambdaSeries<C> {
    coeffs: Vec<C>,
}

/// The λ-adic valuation ω and the induced norm 2^{-ω}.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Valuation {
    /// `None` stands for +∞ (the zero series).
    pub omega: Option<usize>,
    pub norm: f64,
}

impl<C: CoefficientDomain> LambdaSeries<C> {
    /// Builds a series from `coeffs`; the order is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the λ⁰ coefficient");
        LambdaSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        LambdaSeries { coeffs: vec![C::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(C::one(), order)
    }

    pub fn constant(c: C, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// c·λⁿ truncated at `order`.
    pub fn monomial(c: C, n: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if n <= order {
            s.coeffs[n] = c;
        }
        s
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(usize) -> C) -> Self {
        LambdaSeries { coeffs: (0..=order).map(&mut f).collect() }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C> {
        self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &C {
        &self.coeffs[n]
    }

    pub fn set_coeff(&mut self, n: usize, c: C) {
        self.coeffs[n] = c;
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        LambdaSeries { coeffs: self.coeffs[..=n].to_vec() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// True when every coefficient of order ≥ 1 vanishes.
    pub fn is_undeformed(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn map<D: CoefficientDomain>(&self, f: impl FnMut(&C) -> D) -> LambdaSeries<D> {
        LambdaSeries { coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k].add(&other.coeffs[k]))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k].sub(&other.coeffs[k]))
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.neg())
    }

    pub fn scale(&self, s: &Q) -> Self {
        self.map(|c| c.scale(s))
    }

    /// Multiplies every coefficient by the same ring element from the left.
    pub fn lmul_coeff(&self, c: &C) -> Self {
        self.map(|x| c.mul(x))
    }

    /// Cauchy product, truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| {
            let mut acc = C::zero();
            for m in 0..=k {
                let (a, b) = (&self.coeffs[m], &other.coeffs[k - m]);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(b));
            }
            acc
        })
    }

    /// Two-sided inverse, solved from the λ⁰ coefficient upwards.
    pub fn invert(&self) -> Result<Self> {
        let inv0 = self.coeffs[0].try_inv().ok_or(Error::NotInvertible)?;
        let n = self.order();
        let mut out: Vec<C> = Vec::with_capacity(n + 1);
        out.push(inv0.clone());
        for k in 1..=n {
            let mut acc = C::zero();
            for m in 1..=k {
                if self.coeffs[m].is_zero() {
                    continue;
                }
                acc = acc.add(&self.coeffs[m].mul(&out[k - m]));
            }
            out.push(inv0.mul(&acc).neg());
        }
        Ok(LambdaSeries { coeffs: out })
    }

    /// Square root with unit leading coefficient:
    /// 2 s_n = a_n − Σ_{m=1}^{n−1} s_m s_{n−m}.
    pub fn sqrt_unital(&self) -> Result<Self> {
        if !self.coeffs[0].is_one() {
            return Err(Error::LeadingNotUnit);
        }
        let half = Q::new(1, 2);
        let n = self.order();
        let mut s: Vec<C> = Vec::with_capacity(n + 1);
        s.push(C::one());
        for k in 1..=n {
            let mut acc = self.coeffs[k].clone();
            for m in 1..k {
                acc = acc.sub(&s[m].mul(&s[k - m]));
            }
            s.push(acc.scale(&half));
        }
        Ok(LambdaSeries { coeffs: s })
    }

    pub fn valuation(&self) -> Valuation {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(w) => Valuation { omega: Some(w), norm: (2.0f64).powi(-(w as i32)) },
            None => Valuation { omega: None, norm: 0.0 },
        }
    }

    /// Ultrametric d(a, b) = |a − b|.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).valuation().norm
    }
}

pub fn series_mul<C: CoefficientDomain>(a: &LambdaSeries<C>, b: &LambdaSeries<C>) -> LambdaSeries<C> {
    a.mul(b)
}

pub fn series_invert<C: CoefficientDomain>(a: &LambdaSeries<C>) -> Result<LambdaSeries<C>> {
    a.invert()
}

pub fn series_sqrt_unital<C: CoefficientDomain>(a: &LambdaSeries<C>) -> Result<LambdaSeries<C>> {
    a.sqrt_unital()
}

pub fn lambda_valuation<C: CoefficientDomain>(a: &LambdaSeries<C>) -> Valuation {
    a.valuation()
}

impl LambdaSeries<Cq> {
    pub fn from_ints(order: usize, xs: &[i128]) -> Self {
        Self::from_fn(order, |k| xs.get(k).map(|&x| Cq::int(x)).unwrap_or_default())
    }
}

impl<C: CoefficientDomain> CoefficientDomain for LambdaSeries<C> {
    fn zero() -> Self {
        LambdaSeries::zero(DEFAULT_ORDER)
    }
    fn one() -> Self {
        LambdaSeries::one(DEFAULT_ORDER)
    }
    fn add(&self, other: &Self) -> Self {
        LambdaSeries::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        LambdaSeries::mul(self, other)
    }
    fn neg(&self) -> Self {
        LambdaSeries::neg(self)
    }
    fn scale(&self, s: &Q) -> Self {
        LambdaSeries::scale(self, s)
    }
    fn is_zero(&self) -> bool {
        LambdaSeries::is_zero(self)
    }
    fn try_inv(&self) -> Option<Self> {
        self.invert().ok()
    }
}

impl Serialize for LambdaSeries<Cq> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self.coeffs.iter().map(Cq::to_pair).collect();
        let mut st = s.serialize_struct("LambdaSeries", 1)?;
        st.serialize_field("coeffs", &pairs)?;
        st.end()
    }
}

impl<C: CoefficientDomain + fmt::Display> fmt::Display for LambdaSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})·λ")?,
                _ => write!(f, "({c})·λ^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(λ^{})", self.order() + 1)
    }
}

/// Random series over ℚ[i] with components n/d, |n| ≤ bound, 1 ≤ d ≤ 4.
pub fn random_cq_series<R: rand::Rng>(rng: &mut R, order: usize, bound: i128) -> LambdaSeries<Cq> {
    let part = |rng: &mut R| Q::new(rng.gen_range(-bound..=bound), rng.gen_range(1..=4));
    LambdaSeries::from_fn(order, |_| {
        let re = part(rng);
        Cq::new(re, part(rng))
    })
}

/// The first ring, inversion, square-root or ultrametric law that fails on (a, b, c).
pub fn series_law_violation(a: &LambdaSeries<Cq>, b: &LambdaSeries<Cq>, c: &LambdaSeries<Cq>) -> Option<&'static str> {
    let n = a.order();
    let one = LambdaSeries::one(n);
    if a.add(b) != b.add(a) {
        return Some("additive commutativity");
    }
    if a.add(b).add(c) != a.add(&b.add(c)) {
        return Some("additive associativity");
    }
    if a.mul(b) != b.mul(a) {
        return Some("multiplicative commutativity");
    }
    if a.mul(b).mul(c) != a.mul(&b.mul(c)) {
        return Some("multiplicative associativity");
    }
    if a.mul(&b.add(c)) != a.mul(b).add(&a.mul(c)) {
        return Some("distributivity");
    }
    if a.mul(&one) != *a || a.add(&LambdaSeries::zero(n)) != *a || !a.add(&a.neg()).is_zero() {
        return Some("units");
    }
    match a.invert() {
        Ok(inv) if inv.mul(a) != one => return Some("inverse"),
        Err(_) if !a.coeff(0).is_zero() => return Some("inverse of a unit"),
        _ => {}
    }
    let unital = a.sub(&LambdaSeries::constant(a.coeff(0).clone(), n)).add(&one);
    match unital.sqrt_unital() {
        Ok(r) if r.mul(&r) != unital => return Some("square root"),
        Err(_) => return Some("square root of a unital series"),
        _ => {}
    }
    let (dab, dbc, dac) = (a.distance(b), b.distance(c), a.distance(c));
    if dac > dab.max(dbc) || a.distance(b) != b.distance(a) {
        return Some("ultrametric inequality");
    }
    // |ab| = |a||b| as long as the product survives truncation
    if let (Some(x), Some(y)) = (a.valuation().omega, b.valuation().omega) {
        if x + y <= n && a.mul(b).valuation().norm != a.valuation().norm * b.valuation().norm {
            return Some("multiplicative valuation");
        }
    }
    None
}
