//! Canonical form: sparse Laurent polynomials over Q(i) in interned atoms,
//! reduced modulo the side relations registered on those atoms.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::atom::{self, Atom, AtomId, Store};
use crate::error::{Error, Result};
use crate::scalar::{q_str, Cq, Q};
use crate::series::CoefficientDomain;

/// Product of atom powers, sorted by atom id, without zero exponents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Mono(pub SmallVec<[(AtomId, i32); 4]>);

impl Mono {
    pub fn one() -> Self {
        Mono(SmallVec::new())
    }

    pub fn atom(a: AtomId, e: i32) -> Self {
        if e == 0 {
            return Mono::one();
        }
        let mut v = SmallVec::new();
        v.push((a, e));
        Mono(v)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, a: AtomId) -> i32 {
        self.0.iter().find(|(x, _)| *x == a).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let (a, b) = (&self.0, &o.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    pub fn inverse(&self) -> Mono {
        Mono(self.0.iter().map(|(a, e)| (*a, -e)).collect())
    }

    pub fn pow(&self, n: i32) -> Mono {
        if n == 0 {
            return Mono::one();
        }
        Mono(self.0.iter().map(|(a, e)| (*a, e * n)).collect())
    }

    /// Divides by `pattern` (exponents subtracted).
    fn strip(&self, pattern: &[(AtomId, i32)]) -> Mono {
        let p = Mono(pattern.iter().map(|(a, e)| (*a, -e)).collect::<SmallVec<_>>());
        let mut sorted = p;
        sorted.0.sort();
        self.mul(&sorted)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &(AtomId, i32)> {
        self.0.iter()
    }

    fn render(&self) -> Vec<String> {
        let mut f: Vec<String> = self
            .0
            .iter()
            .map(|(a, e)| {
                let n = atom::atom_name(*a);
                if *e == 1 {
                    n
                } else {
                    format!("{}^{}", n, e)
                }
            })
            .collect();
        f.sort();
        f
    }

    fn render_prefix(&self) -> Vec<String> {
        let mut f: Vec<String> = self
            .0
            .iter()
            .map(|(a, e)| {
                let n = prefix_atom(*a);
                if *e == 1 {
                    n
                } else {
                    format!("(^ {} {})", n, e)
                }
            })
            .collect();
        f.sort();
        f
    }
}

fn matches(m: &Mono, pattern: &[(AtomId, i32)]) -> bool {
    pattern.iter().all(|(a, e)| {
        let x = m.exponent(*a);
        if *e > 0 {
            x >= *e
        } else {
            x <= *e
        }
    })
}

fn find_rule<'s>(st: &'s Store, m: &Mono) -> Option<&'s super::atom::Rule> {
    for (a, _) in m.0.iter() {
        if !st.has_rules(*a) {
            continue;
        }
        for r in st.rules_for(*a) {
            if matches(m, &r.pattern) {
                return Some(r);
            }
        }
    }
    None
}

/// Accumulates `c·m` into `acc`, rewriting `m` to normal form first.
fn push_normalized(st: &Store, m: Mono, c: Cq, acc: &mut FxHashMap<Mono, Cq>) {
    if c.is_zero() {
        return;
    }
    match find_rule(st, &m) {
        Some(rule) => {
            let rest = m.strip(&rule.pattern);
            for (rm, rc) in &rule.replacement.terms {
                push_normalized(st, rest.mul(rm), &c * rc, acc);
            }
        }
        None => {
            let e = acc.entry(m).or_default();
            *e = &*e + &c;
        }
    }
}

fn finish(acc: FxHashMap<Mono, Cq>) -> Poly {
    let mut terms: Vec<(Mono, Cq)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Poly { terms }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    terms: Vec<(Mono, Cq)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Cq::one())
    }

    pub fn constant(c: Cq) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: vec![(Mono::one(), c)] }
    }

    pub fn int(n: i128) -> Self {
        Poly::constant(Cq::int(n))
    }

    pub fn rational(q: Q) -> Self {
        Poly::constant(Cq::real(q))
    }

    pub fn i() -> Self {
        Poly::constant(Cq::i())
    }

    pub fn from_mono(m: Mono, c: Cq) -> Self {
        Poly::from_terms(vec![(m, c)])
    }

    pub fn atom_pow(a: AtomId, e: i32) -> Self {
        Poly::from_mono(Mono::atom(a, e), Cq::one())
    }

    /// Builds a polynomial from arbitrary terms, reducing to normal form.
    pub fn from_terms(terms: Vec<(Mono, Cq)>) -> Self {
        let st = atom::read();
        let mut acc = FxHashMap::with_capacity_and_hasher(terms.len(), Default::default());
        for (m, c) in terms {
            push_normalized(&st, m, c, &mut acc);
        }
        drop(st);
        finish(acc)
    }

    pub fn terms(&self) -> &[(Mono, Cq)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    /// The value if this is a number.
    pub fn as_constant(&self) -> Option<Cq> {
        match self.terms.as_slice() {
            [] => Some(Cq::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    /// The coefficient of the empty monomial.
    pub fn constant_term(&self) -> Cq {
        self.terms.iter().find(|(m, _)| m.is_one()).map(|(_, c)| c.clone()).unwrap_or_default()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        let (a, b) = (&self.terms, &o.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = &a[i].1 + &b[j].1;
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: &Cq) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    pub fn scale_q(&self, s: &Q) -> Poly {
        self.scale(&Cq::real(*s))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return o.scale(&c);
        }
        if let Some(c) = o.as_constant() {
            return self.scale(&c);
        }
        let st = atom::read();
        let mut acc = FxHashMap::with_capacity_and_hasher(self.terms.len() * o.terms.len(), Default::default());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                push_normalized(&st, ma.mul(mb), ca * cb, &mut acc);
            }
        }
        drop(st);
        finish(acc)
    }

    /// Sum of many polynomials in one accumulation pass.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Poly>) -> Poly {
        let mut acc: FxHashMap<Mono, Cq> = FxHashMap::default();
        for p in items {
            for (m, c) in &p.terms {
                let e = acc.entry(m.clone()).or_default();
                *e = &*e + c;
            }
        }
        finish(acc)
    }

    /// Multiplicative inverse for single terms and for `1 − c/s`.
    pub fn try_inv(&self) -> Result<Poly> {
        match self.terms.as_slice() {
            [] => Err(Error::NotInvertible),
            [(m, c)] => {
                check_laurent(m)?;
                let ci = c.inv().ok_or(Error::NotInvertible)?;
                Ok(Poly::from_mono(m.inverse(), ci))
            }
            _ => match self.inv_shift_shape() {
                Some((sym, cm)) => Ok(Poly::atom_pow(atom::intern(Atom::InvShift { sym, c: cm }), 1)),
                None => Err(Error::NotInvertible),
            },
        }
    }

    /// Recognises `1 − c·s⁻¹` with `c` a monomial free of `s`.
    fn inv_shift_shape(&self) -> Option<(AtomId, Mono)> {
        if self.terms.len() != 2 {
            return None;
        }
        let (one, other): (&(Mono, Cq), &(Mono, Cq)) = if self.terms[0].0.is_one() {
            (&self.terms[0], &self.terms[1])
        } else if self.terms[1].0.is_one() {
            (&self.terms[1], &self.terms[0])
        } else {
            return None;
        };
        if !one.1.is_one() || !(-&other.1).is_one() {
            return None;
        }
        let st = atom::read();
        let mut found = None;
        for (a, e) in other.0 .0.iter() {
            if *e == -1 {
                if let Atom::Sym { .. } = st.atom(*a) {
                    if found.is_none() {
                        found = Some(*a);
                    }
                }
            }
        }
        let s = found?;
        let c = other.0.mul(&Mono::atom(s, 1));
        Some((s, c))
    }

    pub fn pow(&self, n: i32) -> Result<Poly> {
        if n < 0 {
            return self.try_inv()?.pow(-n);
        }
        let mut out = Poly::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        Ok(out)
    }

    pub fn conj(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.conj())).collect() }
    }

    pub fn atoms(&self) -> Vec<AtomId> {
        let mut v: Vec<AtomId> = self.terms.iter().flat_map(|(m, _)| m.0.iter().map(|(a, _)| *a)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// ∂/∂c for a coordinate symbol `c`.
    pub fn diff(&self, c: AtomId) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let derivs: HashMap<AtomId, Poly> = self
            .atoms()
            .into_iter()
            .map(|a| (a, atom_deriv(a, c)))
            .filter(|(_, d)| !d.is_zero())
            .collect();
        if derivs.is_empty() {
            return Poly::zero();
        }
        let st = atom::read();
        let mut acc = FxHashMap::default();
        for (m, coef) in &self.terms {
            for (a, e) in m.0.iter() {
                let Some(da) = derivs.get(a) else { continue };
                let base = m.mul(&Mono::atom(*a, -1));
                let ce = coef * &Cq::int(*e as i128);
                for (dm, dc) in &da.terms {
                    push_normalized(&st, base.mul(dm), &ce * dc, &mut acc);
                }
            }
        }
        drop(st);
        finish(acc)
    }

    /// Substitutes symbols by polynomials.
    pub fn subst(&self, map: &HashMap<AtomId, Poly>) -> Result<Poly> {
        let mut cache: HashMap<AtomId, Option<Poly>> = HashMap::new();
        let mut parts = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            let mut rest = Mono::one();
            for (a, e) in m.0.iter() {
                let v = match cache.get(a) {
                    Some(v) => v.clone(),
                    None => {
                        let v = atom_subst(*a, map)?;
                        cache.insert(*a, v.clone());
                        v
                    }
                };
                match v {
                    None => rest = rest.mul(&Mono::atom(*a, *e)),
                    Some(p) => t = t.mul(&p.pow(*e)?),
                }
            }
            parts.push(t.mul(&Poly::from_mono(rest, Cq::one())));
        }
        Ok(Poly::sum(parts.iter()))
    }

    /// Numeric value under `env`, which assigns every symbol a real value.
    pub fn eval(&self, env: &HashMap<AtomId, f64>) -> Complex64 {
        let mut cache: HashMap<AtomId, Complex64> = HashMap::new();
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = c.to_c64();
            for (a, e) in m.0.iter() {
                let x = *cache.entry(*a).or_insert_with(|| eval_atom(*a, env));
                v *= x.powi(*e);
            }
            total += v;
        }
        total
    }

    /// Splits off the factor `a^k` of every term, grouping the rest by `k`.
    pub fn collect_by(&self, a: AtomId) -> Vec<(i32, Poly)> {
        let mut groups: HashMap<i32, Vec<(Mono, Cq)>> = HashMap::new();
        for (m, c) in &self.terms {
            let k = m.exponent(a);
            groups.entry(k).or_default().push((m.mul(&Mono::atom(a, -k)), c.clone()));
        }
        let mut out: Vec<(i32, Poly)> = groups
            .into_iter()
            .map(|(k, ts)| {
                let mut ts = ts;
                ts.sort_by(|x, y| x.0.cmp(&y.0));
                (k, Poly { terms: ts })
            })
            .collect();
        out.sort_by_key(|(k, _)| *k);
        out
    }

    /// Deterministic prefix form, e.g. `(+ 1 (* -1 (^ x 2)))`.
    pub fn to_prefix(&self) -> String {
        let mut items: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut f = m.render_prefix();
                if f.is_empty() {
                    return prefix_coeff(c);
                }
                if !c.is_one() {
                    f.insert(0, prefix_coeff(c));
                }
                if f.len() == 1 {
                    f.pop().unwrap()
                } else {
                    format!("(* {})", f.join(" "))
                }
            })
            .collect();
        items.sort();
        match items.len() {
            0 => "0".to_string(),
            1 => items.pop().unwrap(),
            _ => format!("(+ {})", items.join(" ")),
        }
    }
}

fn prefix_coeff(c: &Cq) -> String {
    if c.is_real() {
        q_str(&c.re)
    } else {
        format!("(c {} {})", q_str(&c.re), q_str(&c.im))
    }
}

fn prefix_atom(a: AtomId) -> String {
    match atom::atom(a) {
        Atom::Sin(p) => format!("(sin {})", p.to_prefix()),
        Atom::Cos(p) => format!("(cos {})", p.to_prefix()),
        Atom::Exp(m) => format!("(exp {})", Poly::from_mono(m, Cq::one()).to_prefix()),
        Atom::InvShift { sym, c } => {
            let base = Poly::one().sub(&Poly::from_mono(c.mul(&Mono::atom(sym, -1)), Cq::one()));
            format!("(inv {})", base.to_prefix())
        }
        _ => atom::atom_name(a),
    }
}

/// Negative powers are only allowed where the normal form stays unique.
fn check_laurent(m: &Mono) -> Result<()> {
    let st = atom::read();
    for (a, _) in m.0.iter() {
        let bad = match st.atom(*a) {
            Atom::Cos(_) => true,
            Atom::Sym { .. } => st.rules_for(*a).iter().any(|r| r.pattern.len() == 1 && r.pattern[0].1 > 0),
            _ => false,
        };
        if bad {
            return Err(Error::Unsupported(format!("negative power of {}", atom::atom_name(*a))));
        }
    }
    Ok(())
}

/// ∂a/∂c, memoised per (atom, coordinate).
pub fn atom_deriv(a: AtomId, c: AtomId) -> Poly {
    if let Some(p) = atom::cached_deriv(a, c) {
        return p;
    }
    let d = match atom::atom(a) {
        Atom::Sym { .. } => {
            if a == c {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        Atom::Func { name, args, deriv } => {
            let mut total = Poly::zero();
            for (j, arg) in args.iter().enumerate() {
                let inner = atom_deriv(*arg, c);
                if inner.is_zero() {
                    continue;
                }
                let mut d = deriv.clone();
                d[j] += 1;
                let f = atom::func_deriv(&name, &args, &d);
                total = total.add(&Poly::atom_pow(f, 1).mul(&inner));
            }
            total
        }
        Atom::Radius { coords, .. } => {
            if coords.contains(&c) {
                Poly::from_mono(Mono::atom(c, 1).mul(&Mono::atom(a, -1)), Cq::one())
            } else {
                Poly::zero()
            }
        }
        Atom::Sin(arg) => {
            let da = arg.diff(c);
            if da.is_zero() {
                Poly::zero()
            } else {
                Poly::atom_pow(atom::intern(Atom::Cos(arg.clone())), 1).mul(&da)
            }
        }
        Atom::Cos(arg) => {
            let da = arg.diff(c);
            if da.is_zero() {
                Poly::zero()
            } else {
                Poly::atom_pow(atom::intern(Atom::Sin(arg.clone())), 1).mul(&da).neg()
            }
        }
        Atom::Exp(m) => {
            let da = Poly::from_mono(m.clone(), Cq::one()).diff(c);
            Poly::atom_pow(a, 1).mul(&da)
        }
        Atom::InvShift { sym, c: cm } => {
            let ds = atom_deriv(sym, c);
            if ds.is_zero() {
                Poly::zero()
            } else {
                // dq = −q² · c s⁻² ds
                let m = Mono::atom(a, 2).mul(&Mono::atom(sym, -2)).mul(&cm);
                Poly::from_mono(m, Cq::int(-1)).mul(&ds)
            }
        }
    };
    atom::store_deriv(a, c, d.clone());
    d
}

fn atom_subst(a: AtomId, map: &HashMap<AtomId, Poly>) -> Result<Option<Poly>> {
    Ok(match atom::atom(a) {
        Atom::Sym { .. } => map.get(&a).cloned(),
        Atom::Func { name, args, deriv } => {
            if !args.iter().any(|x| map.contains_key(x)) {
                return Ok(None);
            }
            let mut new_args = Vec::with_capacity(args.len());
            for x in &args {
                match map.get(x) {
                    None => new_args.push(*x),
                    Some(p) => match single_atom(p) {
                        Some(y) => new_args.push(y),
                        None => {
                            return Err(Error::Unsupported(format!(
                                "function argument {} bound to a non-symbol",
                                atom::atom_name(*x)
                            )))
                        }
                    },
                }
            }
            Some(Poly::atom_pow(atom::func_deriv(&name, &new_args, &deriv), 1))
        }
        Atom::Radius { coords, .. } => {
            if coords.iter().any(|x| map.contains_key(x)) {
                return Err(Error::Unsupported("substitution inside a radius".into()));
            }
            None
        }
        Atom::Sin(arg) | Atom::Cos(arg) => {
            let new_arg = arg.subst(map)?;
            if new_arg == arg {
                return Ok(None);
            }
            let is_sin = matches!(atom::atom(a), Atom::Sin(_));
            Some(if is_sin { sin_of(&new_arg)? } else { cos_of(&new_arg)? })
        }
        Atom::Exp(m) => {
            let arg = Poly::from_mono(m.clone(), Cq::one());
            let new_arg = arg.subst(map)?;
            if new_arg == arg {
                return Ok(None);
            }
            Some(exp_of(&new_arg)?)
        }
        Atom::InvShift { sym, c } => {
            let base = Poly::one().sub(&Poly::from_mono(c.mul(&Mono::atom(sym, -1)), Cq::one()));
            let nb = base.subst(map)?;
            if nb == base {
                return Ok(None);
            }
            Some(nb.try_inv()?)
        }
    })
}

fn single_atom(p: &Poly) -> Option<AtomId> {
    match p.terms.as_slice() {
        [(m, c)] if c.is_one() && m.0.len() == 1 && m.0[0].1 == 1 => Some(m.0[0].0),
        _ => None,
    }
}

/// sin of a polynomial argument, oriented so the argument's leading term is positive.
pub fn sin_of(arg: &Poly) -> Result<Poly> {
    if arg.is_zero() {
        return Ok(Poly::zero());
    }
    let (a, sign) = orient(arg);
    Ok(Poly::atom_pow(atom::intern(Atom::Sin(a)), 1).scale(&Cq::int(sign as i128)))
}

pub fn cos_of(arg: &Poly) -> Result<Poly> {
    if arg.is_zero() {
        return Ok(Poly::one());
    }
    let (a, _) = orient(arg);
    Ok(Poly::atom_pow(atom::intern(Atom::Cos(a)), 1))
}

fn orient(arg: &Poly) -> (Poly, i32) {
    let mut keyed: Vec<(String, &Cq)> =
        arg.terms.iter().map(|(m, c)| (m.render().join("*"), c)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let s = keyed[0].1.leading_sign();
    if s < 0 {
        (arg.neg(), -1)
    } else {
        (arg.clone(), 1)
    }
}

/// exp of a polynomial whose term coefficients are integers.
pub fn exp_of(arg: &Poly) -> Result<Poly> {
    let mut m = Mono::one();
    for (mono, c) in &arg.terms {
        if !c.is_real() || !c.re.is_integer() {
            return Err(Error::Unsupported(format!("exp argument coefficient {c} is not an integer")));
        }
        let n = *c.re.numer() as i32;
        let e = atom::intern(Atom::Exp(mono.clone()));
        m = m.mul(&Mono::atom(e, n));
    }
    Ok(Poly::from_mono(m, Cq::one()))
}

fn eval_atom(a: AtomId, env: &HashMap<AtomId, f64>) -> Complex64 {
    let re = |x: f64| Complex64::new(x, 0.0);
    match atom::atom(a) {
        Atom::Sym { name, .. } => re(*env.get(&a).unwrap_or_else(|| panic!("no value for symbol {name}"))),
        Atom::Func { name, args, deriv } => {
            let xs: Vec<f64> = args.iter().map(|x| eval_atom(*x, env).re).collect();
            re(probe_function(&name, &xs, &deriv))
        }
        Atom::Radius { coords, .. } => {
            re(coords.iter().map(|c| env[c] * env[c]).sum::<f64>().sqrt())
        }
        Atom::Sin(p) => p.eval(env).sin(),
        Atom::Cos(p) => p.eval(env).cos(),
        Atom::Exp(m) => Poly::from_mono(m, Cq::one()).eval(env).exp(),
        Atom::InvShift { sym, c } => {
            let s = eval_atom(sym, env);
            let cv = Poly::from_mono(c, Cq::one()).eval(env);
            Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) - cv / s)
        }
    }
}

/// Deterministic stand-in for an opaque function: a two-term sum of
/// exponentials whose rates are derived from the name, so every partial
/// derivative has a consistent closed form.
pub fn probe_function(name: &str, xs: &[f64], deriv: &[u8]) -> f64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut next = || {
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51afd7ed558ccd);
        h ^= h >> 29;
        (h >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut total = 0.0;
    for _ in 0..2 {
        let w = 0.5 + next();
        let mut expo = 0.0;
        let mut fac = w;
        for (j, x) in xs.iter().enumerate() {
            let a = 1.4 * next() - 0.7;
            expo += a * x;
            fac *= a.powi(deriv.get(j).copied().unwrap_or(0) as i32);
        }
        total += fac * expo.exp();
    }
    total
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut items: Vec<(String, String)> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let body = m.render().join("*");
                let coef = if body.is_empty() {
                    c.to_string()
                } else if c.is_one() {
                    String::new()
                } else if (-c).is_one() {
                    "-".to_string()
                } else {
                    format!("{c}*")
                };
                (body, coef)
            })
            .collect();
        items.sort();
        for (k, (body, coef)) in items.iter().enumerate() {
            let s = format!("{coef}{body}");
            if k == 0 {
                write!(f, "{s}")?;
            } else if let Some(rest) = s.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {s}")?;
            }
        }
        Ok(())
    }
}

impl CoefficientDomain for Poly {
    fn zero() -> Self {
        Poly::zero()
    }
    fn one() -> Self {
        Poly::one()
    }
    fn add(&self, other: &Self) -> Self {
        Poly::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Poly::mul(self, other)
    }
    fn neg(&self) -> Self {
        Poly::neg(self)
    }
    fn scale(&self, s: &Q) -> Self {
        self.scale_q(s)
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn try_inv(&self) -> Option<Self> {
        Poly::try_inv(self).ok()
    }
}
