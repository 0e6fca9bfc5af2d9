//! Interned atoms and the side relations attached to them.
//!
//! Every non-numeric factor of a monomial is an atom: coordinates, parameters,
//! opaque functions and their partial derivatives, a Euclidean radius, trig
//! functions of an affine argument, exponentials of a unit monomial, and the
//! inverse of a shifted radial factor `1 − c/s`.

use std::collections::HashMap;
use std::sync::LazyLock;

use parking_lot::RwLock;

use super::poly::{Mono, Poly};
use crate::scalar::Cq;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AtomId(pub u32);

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Atom {
    /// Coordinate or parameter. `scope` separates coordinates of charts that
    /// carry their own side relations.
    Sym { name: String, scope: u32 },
    /// Opaque smooth function of symbol/radius arguments; `deriv[j]` counts
    /// derivatives taken in the j-th argument.
    Func { name: String, args: Vec<AtomId>, deriv: Vec<u8> },
    /// r = sqrt(Σ x_i²) over the listed coordinates.
    Radius { name: String, coords: Vec<AtomId> },
    Sin(Poly),
    Cos(Poly),
    /// exp(m) for a monomial m with unit coefficient.
    Exp(Mono),
    /// (1 − c·s⁻¹)⁻¹ for a symbol s and a parameter monomial c.
    InvShift { sym: AtomId, c: Mono },
}

/// A monomial pattern and the polynomial it rewrites to.
///
/// A monomial matches when, for every `(a, e)` of the pattern, its exponent of
/// `a` is at least `e` (for `e > 0`) or at most `e` (for `e < 0`).
#[derive(Clone, Debug)]
pub struct Rule {
    pub pattern: Vec<(AtomId, i32)>,
    pub replacement: Poly,
}

#[derive(Default)]
pub(crate) struct Store {
    atoms: Vec<Atom>,
    index: HashMap<Atom, AtomId>,
    rules: Vec<Vec<Rule>>,
    derivs: HashMap<(AtomId, AtomId), Poly>,
    next_scope: u32,
}

static STORE: LazyLock<RwLock<Store>> = LazyLock::new(|| RwLock::new(Store { next_scope: 1, ..Default::default() }));

pub(crate) fn read() -> parking_lot::RwLockReadGuard<'static, Store> {
    STORE.read()
}

impl Store {
    pub(crate) fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id.0 as usize]
    }

    pub(crate) fn rules_for(&self, id: AtomId) -> &[Rule] {
        &self.rules[id.0 as usize]
    }

    pub(crate) fn has_rules(&self, id: AtomId) -> bool {
        !self.rules[id.0 as usize].is_empty()
    }
}

static CREATE: LazyLock<parking_lot::ReentrantMutex<()>> = LazyLock::new(|| parking_lot::ReentrantMutex::new(()));

/// Returns the id of `atom`, creating it (and its side relations) on first use.
///
/// An atom only becomes visible through the index once its rules are in place,
/// so concurrent callers never see a half-initialised atom.
pub fn intern(atom: Atom) -> AtomId {
    if let Some(id) = STORE.read().index.get(&atom) {
        return *id;
    }
    let _guard = CREATE.lock();
    if let Some(id) = STORE.read().index.get(&atom) {
        return *id;
    }
    let id = {
        let mut st = STORE.write();
        let id = AtomId(st.atoms.len() as u32);
        st.atoms.push(atom.clone());
        st.rules.push(Vec::new());
        id
    };
    install_rules(id, &atom);
    STORE.write().index.insert(atom, id);
    id
}

pub fn atom(id: AtomId) -> Atom {
    STORE.read().atom(id).clone()
}

pub fn fresh_scope() -> u32 {
    let mut st = STORE.write();
    let s = st.next_scope;
    st.next_scope += 1;
    s
}

pub(crate) fn add_rule(key: AtomId, rule: Rule) {
    STORE.write().rules[key.0 as usize].push(rule);
}

fn install_rules(id: AtomId, atom: &Atom) {
    match atom {
        Atom::Cos(arg) => {
            // cos² → 1 − sin²
            let sin = intern(Atom::Sin(arg.clone()));
            let repl = Poly::one().sub(&Poly::atom_pow(sin, 2));
            add_rule(id, Rule { pattern: vec![(id, 2)], replacement: repl });
        }
        Atom::Radius { coords, .. } => {
            // x₁² → r² − Σ_{i>1} x_i²
            let mut repl = Poly::atom_pow(id, 2);
            for c in &coords[1..] {
                repl = repl.sub(&Poly::atom_pow(*c, 2));
            }
            add_rule(coords[0], Rule { pattern: vec![(coords[0], 2)], replacement: repl });
        }
        Atom::InvShift { sym, c } => {
            // q = 1 + c s⁻¹ q  ⇒  s⁻¹ q → c⁻¹ (q − 1),  s q → s + c q
            let q = Poly::atom_pow(id, 1);
            let cpoly = Poly::from_mono(c.clone(), Cq::one());
            let cinv = Poly::from_mono(c.inverse(), Cq::one());
            let r1 = cinv.mul(&q.sub(&Poly::one()));
            add_rule(id, Rule { pattern: vec![(*sym, -1), (id, 1)], replacement: r1 });
            let r2 = Poly::atom_pow(*sym, 1).add(&cpoly.mul(&q));
            add_rule(id, Rule { pattern: vec![(*sym, 1), (id, 1)], replacement: r2 });
        }
        _ => {}
    }
}

pub(crate) fn cached_deriv(a: AtomId, c: AtomId) -> Option<Poly> {
    STORE.read().derivs.get(&(a, c)).cloned()
}

pub(crate) fn store_deriv(a: AtomId, c: AtomId, p: Poly) {
    STORE.write().derivs.insert((a, c), p);
}

pub fn sym(name: &str) -> AtomId {
    intern(Atom::Sym { name: name.to_string(), scope: 0 })
}

pub fn scoped_sym(name: &str, scope: u32) -> AtomId {
    intern(Atom::Sym { name: name.to_string(), scope })
}

pub fn func(name: &str, args: &[AtomId]) -> AtomId {
    intern(Atom::Func { name: name.to_string(), args: args.to_vec(), deriv: vec![0; args.len()] })
}

pub fn func_deriv(name: &str, args: &[AtomId], deriv: &[u8]) -> AtomId {
    intern(Atom::Func { name: name.to_string(), args: args.to_vec(), deriv: deriv.to_vec() })
}

/// Display name used in printed forms.
pub fn atom_name(id: AtomId) -> String {
    let a = atom(id);
    render(&a)
}

fn render(a: &Atom) -> String {
    match a {
        Atom::Sym { name, .. } => name.clone(),
        Atom::Func { name, args, deriv } => {
            let args: Vec<String> = args.iter().map(|x| atom_name(*x)).collect();
            if deriv.iter().all(|d| *d == 0) {
                format!("{}({})", name, args.join(","))
            } else {
                let d: Vec<String> = deriv.iter().map(|d| d.to_string()).collect();
                format!("D[{}]{}({})", d.join(","), name, args.join(","))
            }
        }
        Atom::Radius { name, .. } => name.clone(),
        Atom::Sin(p) => format!("sin({})", p),
        Atom::Cos(p) => format!("cos({})", p),
        Atom::Exp(m) => format!("exp({})", Poly::from_mono(m.clone(), Cq::one())),
        Atom::InvShift { sym, c } => {
            format!("1/(1 - {}/{})", Poly::from_mono(c.clone(), Cq::one()), atom_name(*sym))
        }
    }
}
