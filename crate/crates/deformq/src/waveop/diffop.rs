//! Linear differential operators Σ c_α ∂^α with symbolic coefficients.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{Cq, Q};
use crate::series::{CoefficientDomain, LambdaSeries};
use crate::symbolic::atom::{self, Atom, AtomId};
use crate::symbolic::{Mono, Poly};

/// Sorted (coordinate, count) pairs with nonzero counts.
pub type MultiIndex = Vec<(AtomId, u8)>;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiffOp {
    terms: BTreeMap<MultiIndex, Poly>,
}

pub type DiffOpSeries = LambdaSeries<DiffOp>;

fn normalize(mut idx: MultiIndex) -> MultiIndex {
    idx.retain(|(_, k)| *k > 0);
    idx.sort();
    let mut out: MultiIndex = Vec::with_capacity(idx.len());
    for (a, k) in idx {
        match out.last_mut() {
            Some((b, j)) if *b == a => *j += k,
            _ => out.push((a, k)),
        }
    }
    out
}

fn binom(n: u8, k: u8) -> i128 {
    let mut r: i128 = 1;
    for i in 0..k as i128 {
        r = r * (n as i128 - i) / (i + 1);
    }
    r
}

fn derive(p: &Poly, idx: &MultiIndex) -> Poly {
    let mut out = p.clone();
    for (a, k) in idx {
        for _ in 0..*k {
            if out.is_zero() {
                return out;
            }
            out = out.diff(*a);
        }
    }
    out
}

/// All sub-indices γ ≤ α with the product of binomials C(α, γ).
fn sub_indices(alpha: &MultiIndex) -> Vec<(MultiIndex, MultiIndex, i128)> {
    let mut acc: Vec<(MultiIndex, MultiIndex, i128)> = vec![(Vec::new(), Vec::new(), 1)];
    for (a, k) in alpha {
        let mut next = Vec::with_capacity(acc.len() * (*k as usize + 1));
        for (g, rest, w) in &acc {
            for j in 0..=*k {
                let mut g2 = g.clone();
                let mut r2 = rest.clone();
                if j > 0 {
                    g2.push((*a, j));
                }
                if *k - j > 0 {
                    r2.push((*a, *k - j));
                }
                next.push((g2, r2, w * binom(*k, j)));
            }
        }
        acc = next;
    }
    acc
}

impl DiffOp {
    pub fn zero() -> Self {
        DiffOp::default()
    }

    pub fn identity() -> Self {
        Self::multiplication(Poly::one())
    }

    /// Multiplication by a function.
    pub fn multiplication(p: Poly) -> Self {
        let mut d = DiffOp::zero();
        d.push(Vec::new(), p);
        d
    }

    /// c ∂^α for a single multi-index.
    pub fn monomial(idx: &[(AtomId, u8)], c: Poly) -> Self {
        let mut d = DiffOp::zero();
        d.push(idx.to_vec(), c);
        d
    }

    pub fn partial(coord: AtomId) -> Self {
        Self::monomial(&[(coord, 1)], Poly::one())
    }

    fn push(&mut self, idx: MultiIndex, c: Poly) {
        if c.is_zero() {
            return;
        }
        let idx = normalize(idx);
        let e = self.terms.entry(idx.clone()).or_insert_with(Poly::zero);
        *e = e.add(&c);
        if e.is_zero() {
            self.terms.remove(&idx);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Poly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &[(AtomId, u8)]) -> Poly {
        self.terms.get(&normalize(idx.to_vec())).cloned().unwrap_or_else(Poly::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest total derivative order.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.iter().map(|(_, n)| *n as usize).sum()).max().unwrap_or(0)
    }

    pub fn apply(&self, h: &Poly) -> Poly {
        Poly::sum(self.terms.iter().map(|(idx, c)| c.mul(&derive(h, idx))).collect::<Vec<_>>().iter())
    }

    pub fn add(&self, o: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.push(k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> DiffOp {
        DiffOp { terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect() }
    }

    pub fn sub(&self, o: &DiffOp) -> DiffOp {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: &Cq) -> DiffOp {
        let mut out = DiffOp::zero();
        for (k, c) in &self.terms {
            out.push(k.clone(), c.scale(s));
        }
        out
    }

    /// f · D
    pub fn left_mul(&self, f: &Poly) -> DiffOp {
        let mut out = DiffOp::zero();
        for (k, c) in &self.terms {
            out.push(k.clone(), f.mul(c));
        }
        out
    }

    /// Composition self ∘ o, by the Leibniz rule.
    pub fn compose(&self, o: &DiffOp) -> DiffOp {
        let mut out = DiffOp::zero();
        for (alpha, c) in &self.terms {
            let subs = sub_indices(alpha);
            for (beta, d) in &o.terms {
                for (g, rest, w) in &subs {
                    let dd = derive(d, g);
                    if dd.is_zero() {
                        continue;
                    }
                    let mut idx = rest.clone();
                    idx.extend(beta.iter().copied());
                    out.push(idx, c.mul(&dd).scale(&Cq::int(*w)));
                }
            }
        }
        out
    }

    pub fn conj(&self) -> DiffOp {
        DiffOp { terms: self.terms.iter().map(|(k, c)| (k.clone(), c.conj())).collect() }
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.conj() == *c)
    }

    /// Reads the operator off a polynomial that is linear in the opaque function `phi`
    /// and its derivatives.
    pub fn extract(p: &Poly, phi: &str) -> Result<DiffOp> {
        let mut out = DiffOp::zero();
        for (mono, c) in p.terms() {
            let mut found: Option<MultiIndex> = None;
            let mut rest = Mono::one();
            for (a, e) in mono.atoms() {
                match atom::atom(*a) {
                    Atom::Func { name, args, deriv } if name == phi => {
                        if *e != 1 || found.is_some() {
                            return Err(Error::Unsupported(format!("expression is not linear in {phi}")));
                        }
                        found = Some(args.iter().copied().zip(deriv.iter().copied()).collect());
                    }
                    _ => rest = rest.mul(&Mono::atom(*a, *e)),
                }
            }
            let idx = found.ok_or_else(|| Error::Unsupported(format!("term without {phi}")))?;
            out.push(idx, Poly::from_mono(rest, c.clone()));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let monos: Vec<Value> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let d: serde_json::Map<String, Value> =
                    k.iter().map(|(a, n)| (atom::atom_name(*a), json!(n))).collect();
                json!({ "coefficient": c.to_prefix(), "derivative": d })
            })
            .collect();
        Value::Array(monos)
    }
}

impl CoefficientDomain for DiffOp {
    fn zero() -> Self {
        DiffOp::zero()
    }
    fn one() -> Self {
        DiffOp::identity()
    }
    fn add(&self, other: &Self) -> Self {
        DiffOp::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        self.compose(other)
    }
    fn neg(&self) -> Self {
        DiffOp::neg(self)
    }
    fn scale(&self, s: &Q) -> Self {
        DiffOp::scale(self, &Cq::real(*s))
    }
    fn is_zero(&self) -> bool {
        DiffOp::is_zero(self)
    }
    fn try_inv(&self) -> Option<Self> {
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Vec::new()) {
                return c.try_inv().ok().map(DiffOp::multiplication);
            }
        }
        None
    }
}

pub fn series_to_json(s: &DiffOpSeries) -> Value {
    Value::Array(
        s.coeffs()
            .iter()
            .enumerate()
            .map(|(n, d)| json!({ "order": n, "monomials": d.to_json() }))
            .collect(),
    )
}

/// exp(a·D) truncated at λ^order, with a = c·λ.
pub fn exp_series(d: &DiffOp, c: &Cq, order: usize) -> DiffOpSeries {
    let mut coeffs = vec![DiffOp::identity()];
    let mut pow = DiffOp::identity();
    let mut fact = Q::from_integer(1);
    for n in 1..=order {
        pow = pow.compose(d);
        fact *= Q::from_integer(n as i128);
        coeffs.push(pow.scale(&c.pow(n as u32)).scale(&Cq::real(Q::from_integer(1) / fact)));
    }
    LambdaSeries::new(coeffs)
}

/// cosh(c·λ·D) truncated at λ^order.
pub fn cosh_series(d: &DiffOp, c: &Cq, order: usize) -> DiffOpSeries {
    let plus = exp_series(d, c, order);
    let minus = exp_series(d, &-c, order);
    plus.add(&minus).scale(&Q::new(1, 2))
}
