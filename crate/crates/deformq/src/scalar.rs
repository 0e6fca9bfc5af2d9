//! Exact complex rationals, the scalar domain of every symbolic computation.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

/// Renders a rational as `n` or `n/d`.
pub fn q_str(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: i128 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            Some(Q::new(n.trim().parse().ok()?, d))
        }
        None => Some(Q::from_integer(s.parse().ok()?)),
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct Cq {
    pub re: Q,
    pub im: Q,
}

impl Cq {
    pub fn new(re: Q, im: Q) -> Self {
        Cq { re, im }
    }

    pub fn real(re: Q) -> Self {
        Cq { re, im: Q::zero() }
    }

    pub fn int(n: i128) -> Self {
        Cq::real(Q::from_integer(n))
    }

    pub fn frac(n: i128, d: i128) -> Self {
        Cq::real(Q::new(n, d))
    }

    pub fn i() -> Self {
        Cq { re: Q::zero(), im: Q::one() }
    }

    pub fn zero() -> Self {
        Cq::default()
    }

    pub fn one() -> Self {
        Cq::int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Cq { re: self.re, im: -self.im }
    }

    pub fn scale(&self, s: &Q) -> Self {
        Cq { re: self.re * s, im: self.im * s }
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.re * self.re + self.im * self.im;
        if n.is_zero() {
            return None;
        }
        Some(Cq { re: self.re / n, im: -self.im / n })
    }

    /// i^n for any integer n.
    pub fn i_pow(n: i64) -> Self {
        match n.rem_euclid(4) {
            0 => Cq::int(1),
            1 => Cq::i(),
            2 => Cq::int(-1),
            _ => -Cq::i(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Cq::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(q_f64(&self.re), q_f64(&self.im))
    }

    /// `[re, im]` as exact rational strings.
    pub fn to_pair(&self) -> [String; 2] {
        [q_str(&self.re), q_str(&self.im)]
    }

    pub fn from_pair(re: &str, im: &str) -> Option<Self> {
        Some(Cq { re: parse_q(re)?, im: parse_q(im)? })
    }

    /// Sign used to orient arguments of odd functions: sign of the first nonzero part.
    pub fn leading_sign(&self) -> i32 {
        if !self.re.is_zero() {
            if self.re.is_positive() { 1 } else { -1 }
        } else if !self.im.is_zero() {
            if self.im.is_positive() { 1 } else { -1 }
        } else {
            0
        }
    }
}

pub fn q_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", q_str(&self.re)),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-self.im).is_one() {
                    write!(f, "-i")
                } else {
                    write!(f, "{}i", q_str(&self.im))
                }
            }
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                write!(f, "({} {} {}i)", q_str(&self.re), sign, q_str(&self.im.abs()))
            }
        }
    }
}

// Integer and zero shortcuts skip the gcd work inside `Ratio`.
fn qadd(a: &Q, b: &Q) -> Q {
    if b.is_zero() {
        *a
    } else if a.is_zero() {
        *b
    } else if a.is_integer() && b.is_integer() {
        Q::from_integer(a.numer() + b.numer())
    } else {
        a + b
    }
}

fn qmul(a: &Q, b: &Q) -> Q {
    if a.is_zero() || b.is_zero() {
        Q::zero()
    } else if a.is_integer() && b.is_integer() {
        Q::from_integer(a.numer() * b.numer())
    } else {
        a * b
    }
}

impl Add for &Cq {
    type Output = Cq;
    fn add(self, o: &Cq) -> Cq {
        Cq { re: qadd(&self.re, &o.re), im: qadd(&self.im, &o.im) }
    }
}

impl Sub for &Cq {
    type Output = Cq;
    fn sub(self, o: &Cq) -> Cq {
        Cq { re: qadd(&self.re, &-o.re), im: qadd(&self.im, &-o.im) }
    }
}

impl Mul for &Cq {
    type Output = Cq;
    fn mul(self, o: &Cq) -> Cq {
        if self.im.is_zero() && o.im.is_zero() {
            return Cq::real(qmul(&self.re, &o.re));
        }
        Cq {
            re: qadd(&qmul(&self.re, &o.re), &-qmul(&self.im, &o.im)),
            im: qadd(&qmul(&self.re, &o.im), &qmul(&self.im, &o.re)),
        }
    }
}

impl Neg for &Cq {
    type Output = Cq;
    fn neg(self) -> Cq {
        Cq { re: -self.re, im: -self.im }
    }
}

impl Add for Cq {
    type Output = Cq;
    fn add(self, o: Cq) -> Cq {
        &self + &o
    }
}

impl Sub for Cq {
    type Output = Cq;
    fn sub(self, o: Cq) -> Cq {
        &self - &o
    }
}

impl Mul for Cq {
    type Output = Cq;
    fn mul(self, o: Cq) -> Cq {
        &self * &o
    }
}

impl Neg for Cq {
    type Output = Cq;
    fn neg(self) -> Cq {
        -&self
    }
}
