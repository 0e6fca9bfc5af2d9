//! Deformed Green operators in the free algebra over {Δ₊, Δ₋, P_(0), …, P_(K)}.

pub mod mode;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{q_str, Q};
use crate::series::{CoefficientDomain, LambdaSeries};

pub use mode::{mode_green_numeric, mode_sweep, ModeGreenReport, ModeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Retarded,
    Advanced,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Retarded => Sign::Advanced,
            Sign::Advanced => Sign::Retarded,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Delta(Sign),
    P(u32),
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Delta(Sign::Retarded) => write!(f, "D+"),
            Letter::Delta(Sign::Advanced) => write!(f, "D-"),
            Letter::P(j) => write!(f, "P{j}"),
        }
    }
}

pub type Word = Vec<Letter>;

pub fn word_string(w: &[Letter]) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

/// Which deletions are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Relations {
    /// P_(0)Δ± → ε
    pub p0_delta: bool,
    /// Δ±P_(0) → ε
    pub delta_p0: bool,
}

impl Relations {
    pub const ALL: Relations = Relations { p0_delta: true, delta_p0: true };

    fn redex(&self, a: Letter, b: Letter) -> bool {
        match (a, b) {
            (Letter::P(0), Letter::Delta(_)) => self.p0_delta,
            (Letter::Delta(_), Letter::P(0)) => self.delta_p0,
            _ => false,
        }
    }

    fn redexes(&self, w: &[Letter]) -> Vec<usize> {
        (0..w.len().saturating_sub(1)).filter(|&i| self.redex(w[i], w[i + 1])).collect()
    }
}

impl Default for Relations {
    fn default() -> Self {
        Relations::ALL
    }
}

/// Left-to-right passes until no redex is left.
pub fn reduce_word(w: &[Letter], rel: Relations) -> Word {
    let mut cur: Word = w.to_vec();
    loop {
        let mut out: Word = Vec::with_capacity(cur.len());
        let mut changed = false;
        let mut i = 0;
        while i < cur.len() {
            if i + 1 < cur.len() && rel.redex(cur[i], cur[i + 1]) {
                i += 2;
                changed = true;
            } else {
                out.push(cur[i]);
                i += 1;
            }
        }
        cur = out;
        if !changed {
            return cur;
        }
    }
}

/// Deletes a uniformly chosen redex at each step.
pub fn reduce_word_random<R: Rng>(w: &[Letter], rel: Relations, rng: &mut R) -> Word {
    let mut cur: Word = w.to_vec();
    loop {
        let r = rel.redexes(&cur);
        if r.is_empty() {
            return cur;
        }
        let i = r[rng.gen_range(0..r.len())];
        cur.drain(i..i + 2);
    }
}

/// Exact rational combination of words; the product is concatenation.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OperatorWordSum {
    terms: BTreeMap<Word, Q>,
}

impl OperatorWordSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::word(Vec::new())
    }

    pub fn word(w: Word) -> Self {
        Self::term(w, Q::from_integer(1))
    }

    pub fn letter(l: Letter) -> Self {
        Self::word(vec![l])
    }

    pub fn delta(s: Sign) -> Self {
        Self::letter(Letter::Delta(s))
    }

    pub fn p(j: u32) -> Self {
        Self::letter(Letter::P(j))
    }

    pub fn term(w: Word, c: Q) -> Self {
        let mut s = Self::zero();
        s.push(w, c);
        s
    }

    fn push(&mut self, w: Word, c: Q) {
        if c == Q::from_integer(0) {
            return;
        }
        let e = self.terms.entry(w.clone()).or_insert_with(|| Q::from_integer(0));
        *e += c;
        if *e == Q::from_integer(0) {
            self.terms.remove(&w);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &[Letter]) -> Q {
        self.terms.get(w).cloned().unwrap_or_else(|| Q::from_integer(0))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &o.terms {
            out.push(w.clone(), *c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        OperatorWordSum { terms: self.terms.iter().map(|(w, c)| (w.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.push(w.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                let mut w = a.clone();
                w.extend_from_slice(b);
                out.push(w, x * y);
            }
        }
        out
    }

    pub fn normal_form(&self, rel: Relations) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.push(reduce_word(w, rel), *c);
        }
        out
    }

    pub fn normal_form_random<R: Rng>(&self, rel: Relations, rng: &mut R) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.push(reduce_word_random(w, rel, rng), *c);
        }
        out
    }

    /// Imposes P_(j) = 0.
    pub fn with_vanishing(&self, j: u32) -> Self {
        OperatorWordSum {
            terms: self.terms.iter().filter(|(w, _)| !w.contains(&Letter::P(j))).map(|(w, c)| (w.clone(), *c)).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.terms.iter().map(|(w, c)| json!({ "word": word_string(w), "coefficient": q_str(c) })).collect())
    }
}

impl fmt::Display for OperatorWordSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(w, c)| format!("({}) {}", q_str(c), word_string(w))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl CoefficientDomain for OperatorWordSum {
    fn zero() -> Self {
        OperatorWordSum::zero()
    }
    fn one() -> Self {
        OperatorWordSum::identity()
    }
    fn add(&self, other: &Self) -> Self {
        OperatorWordSum::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        OperatorWordSum::mul(self, other)
    }
    fn neg(&self) -> Self {
        OperatorWordSum::neg(self)
    }
    fn scale(&self, s: &Q) -> Self {
        OperatorWordSum::scale(self, s)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn try_inv(&self) -> Option<Self> {
        match self.terms.iter().next() {
            Some((w, c)) if self.terms.len() == 1 && w.is_empty() => Some(Self::term(Vec::new(), c.recip())),
            _ => None,
        }
    }
}

pub type WordSeries = LambdaSeries<OperatorWordSum>;

fn compositions(n: u32, k_max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if n == 0 {
        out.push(prefix.clone());
        return;
    }
    for j in 1..=n.min(k_max) {
        prefix.push(j);
        compositions(n - j, k_max, prefix, out);
        prefix.pop();
    }
}

/// Δ_(n)± as the alternating sum over chains Δ±P_(j₁)Δ±…P_(j_k)Δ± with j₁+…+j_k = n.
pub fn green_corrections(n: u32, k_max: u32, sign: Sign) -> Result<OperatorWordSum> {
    if n == 0 {
        return Err(Error::PreconditionFailed("correction index must be at least 1".into()));
    }
    let mut comps = Vec::new();
    compositions(n, k_max, &mut Vec::new(), &mut comps);
    let d = Letter::Delta(sign);
    let mut out = OperatorWordSum::zero();
    for js in comps {
        let mut w = vec![d];
        for j in &js {
            w.push(Letter::P(*j));
            w.push(d);
        }
        let c = if js.len() % 2 == 0 { 1 } else { -1 };
        out.push(w, Q::from_integer(c));
    }
    Ok(out)
}

/// Δ_(n)± from the recursion Δ_(n) = −Σ_{m=1}^{n} Δ P_(m) Δ_(n−m), with Δ_(0) = Δ.
pub fn green_recursive(n: u32, k_max: u32, sign: Sign) -> OperatorWordSum {
    let d = OperatorWordSum::delta(sign);
    let mut table = vec![d.clone()];
    for m in 1..=n {
        let mut acc = OperatorWordSum::zero();
        for j in 1..=m.min(k_max) {
            acc = acc.sub(&d.mul(&OperatorWordSum::p(j)).mul(&table[(m - j) as usize]));
        }
        table.push(acc);
    }
    table.pop().unwrap()
}

#[derive(Clone, Debug)]
pub struct GreenIdentity {
    pub n: u32,
    /// Normal form of Σ_m P_(m) Δ_(n−m).
    pub left: OperatorWordSum,
    /// Normal form of Σ_m Δ_(m) P_(n−m).
    pub right: OperatorWordSum,
}

#[derive(Clone, Debug)]
pub struct GreenReport {
    pub sign: Sign,
    pub identities: Vec<GreenIdentity>,
}

impl GreenReport {
    pub fn all_zero(&self) -> bool {
        self.identities.iter().all(|g| g.left.is_empty() && g.right.is_empty())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "sign": if self.sign == Sign::Retarded { "retarded" } else { "advanced" },
            "identities": self.identities.iter().map(|g| json!({
                "n": g.n,
                "left_zero": g.left.is_empty(),
                "right_zero": g.right.is_empty(),
                "left_residual": g.left.to_json(),
                "right_residual": g.right.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn verify_green_identities(order: u32, k_max: u32, sign: Sign, rel: Relations) -> Result<GreenReport> {
    let mut deltas = vec![OperatorWordSum::delta(sign)];
    for n in 1..=order {
        deltas.push(green_corrections(n, k_max, sign)?);
    }
    let p = |j: u32| if j <= k_max { OperatorWordSum::p(j) } else { OperatorWordSum::zero() };
    let identities = (1..=order)
        .map(|n| {
            let mut left = OperatorWordSum::zero();
            let mut right = OperatorWordSum::zero();
            for m in 0..=n {
                left = left.add(&p(m).mul(&deltas[(n - m) as usize]));
                right = right.add(&deltas[m as usize].mul(&p(n - m)));
            }
            GreenIdentity { n, left: left.normal_form(rel), right: right.normal_form(rel) }
        })
        .collect();
    Ok(GreenReport { sign, identities })
}

/// P̃⋆ with a separate letter P_(n) at each order.
pub fn generic_word_operator(order: usize) -> WordSeries {
    LambdaSeries::from_fn(order, |n| OperatorWordSum::p(n as u32))
}

#[derive(Clone, Debug)]
pub struct SymplecticSeriesMaps {
    pub t_plus: WordSeries,
    pub t_minus: WordSeries,
    pub t_plus_inv: WordSeries,
    pub t_minus_inv: WordSeries,
    /// Δ̃⋆± with Δ̃_(0) = Δ±.
    pub green_plus: WordSeries,
    pub green_minus: WordSeries,
}

fn normal_series(s: &WordSeries) -> WordSeries {
    s.map(|c| c.normal_form(Relations::ALL))
}

fn tail(p: &WordSeries) -> WordSeries {
    let mut v = p.clone();
    v.set_coeff(0, OperatorWordSum::zero());
    v
}

/// Δ̃ = Δ − Δ V Δ̃ solved order by order, V = Σ_{n≥1} λⁿ P̃_(n).
fn deformed_green(p: &WordSeries, sign: Sign) -> WordSeries {
    let d = OperatorWordSum::delta(sign);
    let n = p.order();
    let mut out: Vec<OperatorWordSum> = vec![d.clone()];
    for k in 1..=n {
        let mut acc = OperatorWordSum::zero();
        for m in 1..=k {
            acc = acc.sub(&d.mul(p.coeff(m)).mul(&out[k - m]));
        }
        out.push(acc);
    }
    LambdaSeries::new(out)
}

fn maps_for(p: &WordSeries, sign: Sign) -> (WordSeries, WordSeries, WordSeries) {
    let order = p.order();
    let v = tail(p);
    let d = LambdaSeries::constant(OperatorWordSum::delta(sign), order);
    let t = LambdaSeries::one(order).add(&d.mul(&v));
    let g = deformed_green(p, sign);
    let t_inv = LambdaSeries::one(order).sub(&g.mul(&v));
    (t, t_inv, g)
}

pub fn tpm_maps(p: &WordSeries) -> Result<SymplecticSeriesMaps> {
    if *p.coeff(0) != OperatorWordSum::p(0) {
        return Err(Error::PreconditionFailed("the λ⁰ coefficient must be P_(0)".into()));
    }
    let (t_plus, t_plus_inv, green_plus) = maps_for(p, Sign::Retarded);
    let (t_minus, t_minus_inv, green_minus) = maps_for(p, Sign::Advanced);
    Ok(SymplecticSeriesMaps { t_plus, t_minus, t_plus_inv, t_minus_inv, green_plus, green_minus })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpmCheck {
    /// P_(0)∘T± − P̃⋆ reduces to zero.
    pub intertwines: bool,
    /// T±∘T±⁻¹ and T±⁻¹∘T± reduce to the identity.
    pub inverse: bool,
    /// T±⁻¹ agrees with the geometric-series inverse of T±.
    pub geometric: bool,
    /// P̃⋆∘Δ̃⋆± reduces to the identity.
    pub green: bool,
}

impl TpmCheck {
    pub fn ok(&self) -> bool {
        self.intertwines && self.inverse && self.geometric && self.green
    }
}

impl SymplecticSeriesMaps {
    pub fn check(&self, p: &WordSeries) -> Result<[TpmCheck; 2]> {
        let order = p.order();
        let p0 = LambdaSeries::constant(OperatorWordSum::p(0), order);
        let one = LambdaSeries::one(order);
        let run = |t: &WordSeries, ti: &WordSeries, g: &WordSeries| -> Result<TpmCheck> {
            let geo = t.invert()?;
            Ok(TpmCheck {
                intertwines: normal_series(&p0.mul(t).sub(p)).is_zero(),
                inverse: normal_series(&t.mul(ti).sub(&one)).is_zero()
                    && normal_series(&ti.mul(t).sub(&one)).is_zero(),
                geometric: normal_series(&geo.sub(ti)).is_zero(),
                green: normal_series(&p.mul(g).sub(&one)).is_zero(),
            })
        };
        Ok([
            run(&self.t_plus, &self.t_plus_inv, &self.green_plus)?,
            run(&self.t_minus, &self.t_minus_inv, &self.green_minus)?,
        ])
    }

    /// T₊ − T₋.
    pub fn difference(&self) -> WordSeries {
        self.t_plus.sub(&self.t_minus)
    }
}

/// S with S·S = Î, from the unital square-root recursion; the product is checked.
pub fn symplectic_sqrt<C: CoefficientDomain>(ihat: &LambdaSeries<C>) -> Result<LambdaSeries<C>> {
    let s = ihat.sqrt_unital()?;
    if s.mul(&s) != *ihat {
        return Err(Error::ConstraintViolated("S·S differs from the input".into()));
    }
    Ok(s)
}
