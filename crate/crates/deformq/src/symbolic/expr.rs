//! Expression trees. Every tree maps to a canonical [`Poly`]; `canon` rebuilds
//! the tree from that normal form.

use std::fmt;
use std::ops;

use super::atom::{self, AtomId};
use super::poly::{cos_of, exp_of, sin_of, Poly};
use crate::error::{Error, Result};
use crate::scalar::{Cq, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Cq),
    Atom(AtomId),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn int(n: i128) -> Expr {
        Expr::Num(Cq::int(n))
    }

    pub fn rational(q: Q) -> Expr {
        Expr::Num(Cq::real(q))
    }

    pub fn i() -> Expr {
        Expr::Num(Cq::i())
    }

    pub fn pow(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn to_poly(&self) -> Result<Poly> {
        Ok(match self {
            Expr::Num(c) => Poly::constant(c.clone()),
            Expr::Atom(a) => Poly::atom_pow(*a, 1),
            Expr::Add(xs) => {
                let ps = xs.iter().map(|x| x.to_poly()).collect::<Result<Vec<_>>>()?;
                Poly::sum(ps.iter())
            }
            Expr::Mul(xs) => {
                let mut p = Poly::one();
                for x in xs {
                    p = p.mul(&x.to_poly()?);
                }
                p
            }
            Expr::Pow(b, n) => b.to_poly()?.pow(*n)?,
            Expr::Exp(x) => exp_of(&elementary_arg(x)?)?,
            Expr::Sin(x) => sin_of(&elementary_arg(x)?)?,
            Expr::Cos(x) => cos_of(&elementary_arg(x)?)?,
        })
    }

    /// Tree rebuilt from the normal form: a sum of coefficient × atom powers.
    pub fn from_poly(p: &Poly) -> Expr {
        let mut terms: Vec<Expr> = p
            .terms()
            .iter()
            .map(|(m, c)| {
                let mut f: Vec<Expr> = Vec::new();
                if !c.is_one() || m.is_one() {
                    f.push(Expr::Num(c.clone()));
                }
                for (a, e) in m.atoms() {
                    let x = Expr::Atom(*a);
                    f.push(if *e == 1 { x } else { x.pow(*e) });
                }
                if f.len() == 1 {
                    f.pop().unwrap()
                } else {
                    Expr::Mul(f)
                }
            })
            .collect();
        match terms.len() {
            0 => Expr::int(0),
            1 => terms.pop().unwrap(),
            _ => Expr::Add(terms),
        }
    }

    pub fn canon(&self) -> Result<Expr> {
        Ok(Expr::from_poly(&self.to_poly()?))
    }

    pub fn is_zero_node(&self) -> bool {
        matches!(self, Expr::Num(c) if c.is_zero())
    }

    pub fn to_prefix(&self) -> Result<String> {
        Ok(self.to_poly()?.to_prefix())
    }
}

/// Arguments of exp/sin/cos must be polynomial in plain symbols.
fn elementary_arg(x: &Expr) -> Result<Poly> {
    let p = x.to_poly()?;
    for a in p.atoms() {
        if !matches!(atom::atom(a), atom::Atom::Sym { .. }) {
            return Err(Error::Unsupported(format!("elementary function of {}", atom::atom_name(a))));
        }
    }
    for (m, _) in p.terms() {
        if m.atoms().any(|(_, e)| *e < 0) {
            return Err(Error::Unsupported("negative power inside exp/sin/cos".into()));
        }
    }
    Ok(p)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_poly() {
            Ok(p) => write!(f, "{p}"),
            Err(e) => write!(f, "<{e}>"),
        }
    }
}

impl From<&Poly> for Expr {
    fn from(p: &Poly) -> Self {
        Expr::from_poly(p)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::Add(vec![self, o])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::Add(vec![self, Expr::Mul(vec![Expr::int(-1), o])])
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::Mul(vec![self, o])
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Mul(vec![Expr::int(-1), self])
    }
}
