//! Symmetry reduction: closure of twist generators against the cosmological
//! algebra 𝔠 and the black-hole algebra 𝔟, the two-field families, and the
//! O(λ) coordinate commutators.

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use num_traits::Zero;

use crate::scalar::{Cq, Q};
use crate::symbolic::atom::AtomId;
use crate::symbolic::poly::atom_deriv;
use crate::symbolic::{Chart, Mono, Poly};
use crate::twist::{lie_bracket, AbelianTwist, VectorField};

/// Parameter names declared on the reduction chart.
pub const PARAMS: &[&str] = &[
    "c1_1", "c1_2", "c1_3", "c2_1", "c2_2", "c2_3", "d1_1", "d1_2", "d1_3", "d_1", "d_2", "d_3", "f1", "f2", "kappa",
    "kappa1", "kappa2", "N1", "N2", "mu", "C", "F",
];

static CHART: LazyLock<Arc<Chart>> = LazyLock::new(|| {
    Arc::new(Chart::with_radius("cartesian", &["t", "x1", "x2", "x3"], &["x1", "x2", "x3"], "r", PARAMS).unwrap())
});

/// Cartesian chart (t, x¹, x², x³) with r = |x|, shared by both algebras.
pub fn reduction_chart() -> Arc<Chart> {
    CHART.clone()
}

const SPATIAL: [&str; 3] = ["x1", "x2", "x3"];

fn eps(i: usize, j: usize, k: usize) -> i128 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Opaque function of t.
pub fn fn_of_t(ch: &Chart, name: &str) -> Poly {
    ch.func_of(name, &["t"]).unwrap()
}

/// Opaque function of r.
pub fn fn_of_r(ch: &Chart, name: &str) -> Poly {
    ch.func_of(name, &["r"]).unwrap()
}

pub fn momentum(ch: &Arc<Chart>, i: usize) -> VectorField {
    VectorField::partial(ch, SPATIAL[i]).unwrap()
}

/// L_i = ε_{ijk} x^j ∂_k.
pub fn rotation(ch: &Arc<Chart>, i: usize) -> VectorField {
    let mut pairs = Vec::new();
    for j in 0..3 {
        for k in 0..3 {
            let e = eps(i, j, k);
            if e != 0 {
                pairs.push((SPATIAL[k], ch.x(SPATIAL[j]).scale(&Cq::int(e))));
            }
        }
    }
    VectorField::from_pairs(ch, &pairs).unwrap()
}

/// x^i ∂_i.
pub fn euler(ch: &Arc<Chart>) -> VectorField {
    let pairs: Vec<(&str, Poly)> = SPATIAL.iter().map(|x| (*x, ch.x(x))).collect();
    VectorField::from_pairs(ch, &pairs).unwrap()
}

fn translation(ch: &Arc<Chart>, c: &[Poly; 3]) -> VectorField {
    let pairs: Vec<(&str, Poly)> = SPATIAL.iter().zip(c).map(|(x, ci)| (*x, ci.clone())).collect();
    VectorField::from_pairs(ch, &pairs).unwrap()
}

fn rotations(ch: &Arc<Chart>, d: &[Poly; 3]) -> VectorField {
    let mut v = VectorField::zero(ch);
    for i in 0..3 {
        if !d[i].is_zero() {
            v = v.add(&rotation(ch, i).scale(&d[i])).unwrap();
        }
    }
    v
}

fn time_part(ch: &Arc<Chart>, f: &Poly) -> VectorField {
    VectorField::from_pairs(ch, &[("t", f.clone())]).unwrap()
}

/// (d × c)_i = d^j c^k ε_{jki}.
fn cross(d: &[Poly; 3], c: &[Poly; 3]) -> [Poly; 3] {
    std::array::from_fn(|i| {
        let mut s = Poly::zero();
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(j, k, i);
                if e != 0 {
                    s = s.add(&d[j].mul(&c[k]).scale(&Cq::int(e)));
                }
            }
        }
        s
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraKind {
    Cosmological,
    BlackHole,
}

#[derive(Clone, Debug)]
pub struct SymmetryAlgebra {
    pub kind: AlgebraKind,
    pub gens: Vec<VectorField>,
    /// structure[i][j][k] = f_{ij}^k.
    pub structure: Vec<Vec<Vec<Cq>>>,
}

impl SymmetryAlgebra {
    pub fn new(kind: AlgebraKind, gens: Vec<VectorField>) -> Result<Self> {
        let n = gens.len();
        let mut structure = vec![vec![vec![Cq::zero(); n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                let b = lie_bracket(&gens[i], &gens[j])?;
                let coeffs = decompose(&b, &gens)?
                    .ok_or_else(|| Error::ConstraintViolated(format!("[t_{}, t_{}] leaves the span", i + 1, j + 1)))?;
                for k in 0..n {
                    structure[i][j][k] = coeffs[k].as_constant().ok_or_else(|| {
                        Error::ConstraintViolated(format!("structure constant f_{}{}^{} is not a number", i + 1, j + 1, k + 1))
                    })?;
                }
            }
        }
        Ok(SymmetryAlgebra { kind, gens, structure })
    }

    /// 𝔠 = span(p_1, p_2, p_3, L_1, L_2, L_3).
    pub fn cosmological() -> Self {
        let ch = reduction_chart();
        let mut g: Vec<VectorField> = (0..3).map(|i| momentum(&ch, i)).collect();
        g.extend((0..3).map(|i| rotation(&ch, i)));
        Self::new(AlgebraKind::Cosmological, g).expect("𝔠 closes")
    }

    /// 𝔟 = span(p⁰, L_1, L_2, L_3).
    pub fn black_hole() -> Self {
        let ch = reduction_chart();
        let mut g = vec![VectorField::partial(&ch, "t").unwrap()];
        g.extend((0..3).map(|i| rotation(&ch, i)));
        Self::new(AlgebraKind::BlackHole, g).expect("𝔟 closes")
    }

    pub fn chart(&self) -> Arc<Chart> {
        self.gens[0].chart.clone()
    }
}

/// Atoms that vary with some coordinate of `ch`.
fn coordinate_atoms(ch: &Chart, atoms: &[AtomId]) -> HashSet<AtomId> {
    let coords = ch.coord_ids();
    atoms.iter().copied().filter(|a| coords.iter().any(|c| !atom_deriv(*a, *c).is_zero())).collect()
}

/// Splits p = Σ_m m · a_m with m a product of coordinate-dependent atoms and a_m free of coordinates.
fn split_by_coordinates(ch: &Chart, p: &Poly) -> BTreeMap<Mono, Poly> {
    let dep = coordinate_atoms(ch, &p.atoms());
    let mut out: BTreeMap<Mono, Vec<(Mono, Cq)>> = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut key = Mono::one();
        let mut rest = Mono::one();
        for (a, e) in m.atoms() {
            if dep.contains(a) {
                key = key.mul(&Mono::atom(*a, *e));
            } else {
                rest = rest.mul(&Mono::atom(*a, *e));
            }
        }
        out.entry(key).or_default().push((rest, c.clone()));
    }
    out.into_iter().map(|(k, ts)| (k, Poly::from_terms(ts))).collect()
}

/// Coefficients a_k, free of coordinates, with v = Σ a_k basis_k, or `None`.
pub fn decompose(v: &VectorField, basis: &[VectorField]) -> Result<Option<Vec<Poly>>> {
    let ch = v.chart.clone();
    let n = basis.len();
    // rows keyed by (component, coordinate monomial)
    let mut keys: Vec<(usize, Mono)> = Vec::new();
    let mut index: BTreeMap<(usize, Mono), usize> = BTreeMap::new();
    let mut rows: Vec<(Vec<Poly>, Poly)> = Vec::new();
    let mut row_of = |mu: usize, m: Mono, rows: &mut Vec<(Vec<Poly>, Poly)>| -> usize {
        *index.entry((mu, m.clone())).or_insert_with(|| {
            keys.push((mu, m));
            rows.push((vec![Poly::zero(); n], Poly::zero()));
            rows.len() - 1
        })
    };
    for (k, b) in basis.iter().enumerate() {
        for (mu, comp) in b.comps().iter().enumerate() {
            for (m, a) in split_by_coordinates(&ch, comp) {
                let r = row_of(mu, m, &mut rows);
                rows[r].0[k] = rows[r].0[k].add(&a);
            }
        }
    }
    for (mu, comp) in v.comps().iter().enumerate() {
        for (m, a) in split_by_coordinates(&ch, comp) {
            let r = row_of(mu, m, &mut rows);
            rows[r].1 = rows[r].1.add(&a);
        }
    }
    // Gaussian elimination with numeric pivots
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; rows.len()];
    for col in 0..n {
        let Some(pr) = (0..rows.len()).find(|r| !used[*r] && rows[*r].0[col].as_constant().is_some_and(|c| !c.is_zero()))
        else {
            if (0..rows.len()).any(|r| !used[r] && !rows[r].0[col].is_zero()) {
                return Err(Error::Unsupported("span test with symbolic basis coefficients".into()));
            }
            continue;
        };
        used[pr] = true;
        let inv = rows[pr].0[col].as_constant().unwrap().inv().unwrap();
        let prow = (rows[pr].0.iter().map(|x| x.scale(&inv)).collect::<Vec<_>>(), rows[pr].1.scale(&inv));
        rows[pr] = prow.clone();
        for r in 0..rows.len() {
            if r != pr && !rows[r].0[col].is_zero() {
                let f = rows[r].0[col].clone();
                for c in 0..n {
                    rows[r].0[c] = rows[r].0[c].sub(&prow.0[c].mul(&f));
                }
                rows[r].1 = rows[r].1.sub(&prow.1.mul(&f));
            }
        }
        pivots.push((col, pr));
    }
    for r in 0..rows.len() {
        if !used[r] && !rows[r].1.is_zero() {
            return Ok(None);
        }
    }
    let mut out = vec![Poly::zero(); n];
    for (col, r) in pivots {
        out[col] = rows[r].1.clone();
    }
    Ok(Some(out))
}

#[derive(Clone, Debug)]
pub struct ModuleCheck {
    pub holds: bool,
    /// coeffs[i][j] = 𝒩_{Xi}^j with [X, t_i] = 𝒩_{Xi}^j t_j.
    pub coeffs: Vec<Vec<Poly>>,
    /// (i, [X, t_i]) for the first bracket outside the span.
    pub witness: Option<(usize, VectorField)>,
}

/// Decides [X, t_i] ∈ span(t_j) with constant coefficients for every generator t_i.
pub fn check_module_condition(x: &VectorField, g: &SymmetryAlgebra) -> Result<ModuleCheck> {
    let mut coeffs = Vec::new();
    for (i, t) in g.gens.iter().enumerate() {
        let b = lie_bracket(x, t)?;
        match decompose(&b, &g.gens)? {
            Some(c) => coeffs.push(c),
            None => return Ok(ModuleCheck { holds: false, coeffs, witness: Some((i, b)) }),
        }
    }
    Ok(ModuleCheck { holds: true, coeffs, witness: None })
}

#[derive(Clone, Debug)]
pub struct BracketWitness {
    pub a: usize,
    pub b: usize,
    pub bracket: VectorField,
}

#[derive(Clone, Debug)]
pub struct CommutingReport {
    pub holds: bool,
    pub witness: Option<BracketWitness>,
}

pub fn check_commuting_family(fields: &[VectorField]) -> Result<CommutingReport> {
    for a in 0..fields.len() {
        for b in a + 1..fields.len() {
            let br = lie_bracket(&fields[a], &fields[b])?;
            if !br.is_zero() {
                return Ok(CommutingReport { holds: false, witness: Some(BracketWitness { a, b, bracket: br }) });
            }
        }
    }
    Ok(CommutingReport { holds: true, witness: None })
}

/// Names the commutation conditions a nonzero bracket of two reduction-compatible fields violates.
pub fn violated_conditions(kind: AlgebraKind, bracket: &VectorField) -> Vec<&'static str> {
    let ch = bracket.chart.clone();
    let comps = bracket.comps();
    let time = &comps[0];
    let spatial = &comps[1..];
    let mut out = Vec::new();
    match kind {
        AlgebraKind::Cosmological => {
            if spatial.iter().any(|c| split_by_coordinates(&ch, c).keys().any(|m| !m.is_one())) {
                out.push("frwcond1");
            }
            if spatial.iter().any(|c| split_by_coordinates(&ch, c).get(&Mono::one()).is_some_and(|p| !p.is_zero())) {
                out.push("frwcond2");
            }
            if !time.is_zero() {
                out.push("frwcond3");
            }
        }
        AlgebraKind::BlackHole => {
            let xs: Vec<Poly> = SPATIAL.iter().map(|x| ch.x(x)).collect();
            let radial = Poly::sum(xs.iter().zip(spatial).map(|(x, c)| x.mul(c)).collect::<Vec<_>>().iter());
            let r2 = Poly::sum(xs.iter().map(|x| x.mul(x)).collect::<Vec<_>>().iter());
            // angular remainder r²B − x (x·B)
            if xs.iter().zip(spatial).any(|(x, c)| !c.mul(&r2).sub(&x.mul(&radial)).is_zero()) {
                out.push("blackcond1");
            }
            if !time.is_zero() {
                out.push("blackcond2");
            }
            if !radial.is_zero() {
                out.push("blackcond3");
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    C11,
    C21,
    C12,
    C22,
    C32,
    B11,
    B21,
    B12,
    B22,
    B32,
}

impl Family {
    pub const COSMOLOGICAL: [Family; 5] = [Family::C11, Family::C21, Family::C12, Family::C22, Family::C32];
    pub const BLACK_HOLE: [Family; 5] = [Family::B11, Family::B21, Family::B12, Family::B22, Family::B32];

    pub fn kind(self) -> AlgebraKind {
        match self {
            Family::C11 | Family::C21 | Family::C12 | Family::C22 | Family::C32 => AlgebraKind::Cosmological,
            _ => AlgebraKind::BlackHole,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::C11 => "C11",
            Family::C21 => "C21",
            Family::C12 => "C12",
            Family::C22 => "C22",
            Family::C32 => "C32",
            Family::B11 => "B11",
            Family::B21 => "B21",
            Family::B12 => "B12",
            Family::B22 => "B22",
            Family::B32 => "B32",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Self::COSMOLOGICAL.iter().chain(Self::BLACK_HOLE.iter()).copied().find(|f| f.name().eq_ignore_ascii_case(s))
    }
}

/// A family together with its parameter slots. Missing slots are zero.
///
/// Cosmological slots: `X1_0`, `X2_0` (functions of t), `c1_i`, `c2_i`, `d1_i`, `f1`, `f2`, `kappa`.
/// Black-hole slots: `c1_0`, `c2_0` (functions of r), `N1_0`, `N2_0`, `kappa1`, `kappa2`, `d_i`, `f2` (function of r).
#[derive(Clone, Debug)]
pub struct FamilySpec {
    pub family: Family,
    pub slots: BTreeMap<String, Poly>,
}

impl FamilySpec {
    pub fn new(family: Family) -> Self {
        FamilySpec { family, slots: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, v: Poly) -> Self {
        self.slots.insert(key.to_string(), v);
        self
    }

    pub fn get(&self, key: &str) -> Poly {
        self.slots.get(key).cloned().unwrap_or_default()
    }

    fn vec3(&self, prefix: &str) -> [Poly; 3] {
        std::array::from_fn(|i| self.get(&format!("{prefix}_{}", i + 1)))
    }

    /// Every slot bound to the symbol of the same name (functions for function slots).
    pub fn generic(family: Family) -> Self {
        let ch = reduction_chart();
        let p = |n: &str| ch.p(n);
        let mut s = FamilySpec::new(family);
        match family.kind() {
            AlgebraKind::Cosmological => {
                s = s.with("X1_0", fn_of_t(&ch, "X1")).with("X2_0", fn_of_t(&ch, "X2"));
                for i in 1..=3 {
                    for pre in ["c1", "c2", "d1"] {
                        let k = format!("{pre}_{i}");
                        s = s.with(&k, p(&k));
                    }
                }
                s.with("f1", p("f1")).with("f2", p("f2")).with("kappa", p("kappa"))
            }
            AlgebraKind::BlackHole => {
                s = s
                    .with("c1_0", fn_of_r(&ch, "c1"))
                    .with("c2_0", fn_of_r(&ch, "c2"))
                    .with("N1_0", p("N1"))
                    .with("N2_0", p("N2"))
                    .with("kappa1", p("kappa1"))
                    .with("kappa2", p("kappa2"))
                    .with("f2", fn_of_r(&ch, "f2"));
                for i in 1..=3 {
                    let k = format!("d_{i}");
                    s = s.with(&k, p(&k));
                }
                s
            }
        }
    }
}

fn depends_on(ch: &Chart, p: &Poly, coords: &[&str]) -> bool {
    coords.iter().any(|c| !ch.differentiate(p, c).unwrap().is_zero())
}

fn require_time_function(ch: &Arc<Chart>, name: &str, p: &Poly) -> Result<()> {
    if depends_on(ch, p, &SPATIAL) {
        return Err(Error::ConstraintViolated(format!("{name} must be a function of t alone")));
    }
    Ok(())
}

fn require_radial_function(ch: &Arc<Chart>, name: &str, p: &Poly) -> Result<()> {
    let angular = (0..3).any(|i| !rotation(ch, i).apply(p).is_zero());
    if angular || depends_on(ch, p, &["t"]) {
        return Err(Error::ConstraintViolated(format!("{name} must be a function of r alone")));
    }
    Ok(())
}

/// The two generators of a table row, before the commutation check.
pub fn family_fields(spec: &FamilySpec) -> Result<Vec<VectorField>> {
    let ch = reduction_chart();
    let s = |k: &str| spec.get(k);
    let e = euler(&ch);
    let fields = match spec.family.kind() {
        AlgebraKind::Cosmological => {
            let (x10, x20) = (s("X1_0"), s("X2_0"));
            require_time_function(&ch, "X_1^0", &x10)?;
            require_time_function(&ch, "X_2^0", &x20)?;
            for k in ["f1", "f2", "kappa"] {
                if depends_on(&ch, &s(k), &["t", "x1", "x2", "x3"]) {
                    return Err(Error::ConstraintViolated(format!("{k} must be constant")));
                }
            }
            let (c1, c2, d1) = (spec.vec3("c1"), spec.vec3("c2"), spec.vec3("d1"));
            let t1 = time_part(&ch, &x10);
            let t2 = time_part(&ch, &x20);
            match spec.family {
                Family::C11 => vec![t1.add(&translation(&ch, &c1))?, t2.add(&translation(&ch, &c2))?],
                Family::C21 => vec![t1.add(&translation(&ch, &c1))?.add(&e.scale(&s("f1")))?, t2],
                Family::C12 => {
                    let kd: [Poly; 3] = std::array::from_fn(|i| d1[i].mul(&s("kappa")));
                    vec![t1.add(&translation(&ch, &c1))?.add(&rotations(&ch, &d1))?, t2.add(&translation(&ch, &kd))?]
                }
                Family::C22 => vec![
                    t1.add(&translation(&ch, &c1))?.add(&rotations(&ch, &d1))?.add(&e.scale(&s("f1")))?,
                    t2,
                ],
                Family::C32 => {
                    let f2 = s("f2");
                    let inv = f2.try_inv().map_err(|_| Error::ConstraintViolated("C32 needs f_2 ≠ 0".into()))?;
                    let shift: [Poly; 3] = cross(&d1, &c2).map(|x| x.mul(&inv));
                    vec![
                        t1.add(&translation(&ch, &shift))?.add(&rotations(&ch, &d1))?,
                        t2.add(&translation(&ch, &c2))?.add(&e.scale(&f2))?,
                    ]
                }
                _ => unreachable!(),
            }
        }
        AlgebraKind::BlackHole => {
            let (c10, c20, f2) = (s("c1_0"), s("c2_0"), s("f2"));
            require_radial_function(&ch, "c_1^0", &c10)?;
            require_radial_function(&ch, "c_2^0", &c20)?;
            require_radial_function(&ch, "f_2", &f2)?;
            for k in ["N1_0", "N2_0", "kappa1", "kappa2"] {
                if depends_on(&ch, &s(k), &["t", "x1", "x2", "x3"]) {
                    return Err(Error::ConstraintViolated(format!("{k} must be constant")));
                }
            }
            let d = spec.vec3("d");
            let l1 = rotations(&ch, &d).scale(&s("kappa1"));
            let l2 = rotations(&ch, &d).scale(&s("kappa2"));
            let t = ch.x("t");
            match spec.family {
                Family::B11 => vec![time_part(&ch, &c10).add(&l1)?, time_part(&ch, &c20).add(&l2)?],
                Family::B21 => vec![time_part(&ch, &c10.add(&s("N1_0").mul(&t))), l2],
                Family::B12 => {
                    if depends_on(&ch, &c10, &["t", "x1", "x2", "x3"]) {
                        return Err(Error::ConstraintViolated("B12: c_1^0 has to be constant".into()));
                    }
                    vec![time_part(&ch, &c10).add(&l1)?, time_part(&ch, &c20).add(&l2)?.add(&e.scale(&f2))?]
                }
                Family::B22 => {
                    let n1 = s("N1_0");
                    let inv = n1.try_inv().map_err(|_| Error::ConstraintViolated("B22 needs N_1^0 ≠ 0".into()))?;
                    let x2t = f2.mul(&e.apply(&c10)).mul(&inv).neg();
                    vec![
                        time_part(&ch, &c10.add(&n1.mul(&t))).add(&l1)?,
                        time_part(&ch, &x2t).add(&l2)?.add(&e.scale(&f2))?,
                    ]
                }
                Family::B32 => {
                    let n2 = s("N2_0");
                    let inv = n2.try_inv().map_err(|_| Error::ConstraintViolated("B32 needs N_2^0 ≠ 0".into()))?;
                    let ode = c10.sub(&f2.mul(&e.apply(&c10)).mul(&inv));
                    if !ode.is_zero() {
                        return Err(Error::ConstraintViolated("B32: c_1^0 = (f_2/N_2^0) r c_1^0' fails (blackode)".into()));
                    }
                    vec![
                        time_part(&ch, &c10).add(&l1)?,
                        time_part(&ch, &c20.add(&n2.mul(&t))).add(&l2)?.add(&e.scale(&f2))?,
                    ]
                }
                _ => unreachable!(),
            }
        }
    };
    Ok(fields)
}

/// Builds the twist of a table row after validating all table conditions.
pub fn build_family(spec: &FamilySpec, order: usize) -> Result<AbelianTwist> {
    let fields = family_fields(spec)?;
    let rep = check_commuting_family(&fields)?;
    if let Some(w) = rep.witness {
        let conds = violated_conditions(spec.family.kind(), &w.bracket).join(", ");
        return Err(Error::ConstraintViolated(format!("{}: [X_1, X_2] ≠ 0 ({conds})", spec.family.name())));
    }
    let alg = match spec.family.kind() {
        AlgebraKind::Cosmological => SymmetryAlgebra::cosmological(),
        AlgebraKind::BlackHole => SymmetryAlgebra::black_hole(),
    };
    for (a, x) in fields.iter().enumerate() {
        if !check_module_condition(x, &alg)?.holds {
            return Err(Error::ConstraintViolated(format!("X_{} violates [X, g] ⊆ g", a + 1)));
        }
    }
    let ch = reduction_chart();
    if fields.iter().all(VectorField::is_zero) {
        return Ok(AbelianTwist::trivial(&ch, order));
    }
    AbelianTwist::canonical(&ch, fields, order)
}

/// λ¹ coefficient of [x^μ ⋆, x^ν]: i Θ^{αβ} X_α(x^μ) X_β(x^ν).
pub fn coordinate_commutators_o1(twist: &AbelianTwist, coords: &[&str]) -> Result<Vec<Vec<Poly>>> {
    commutators_o1(twist.gens(), twist.theta(), coords)
}

/// Same closed form for arbitrary fields and Θ, without the commutation requirement.
pub fn commutators_o1(gens: &[VectorField], theta: &[Vec<Q>], coords: &[&str]) -> Result<Vec<Vec<Poly>>> {
    let ch = match gens.first() {
        Some(g) => g.chart.clone(),
        None => return Ok(vec![vec![Poly::zero(); coords.len()]; coords.len()]),
    };
    let xs: Vec<Poly> = coords.iter().map(|c| ch.coord_id(c).map(|id| Poly::atom_pow(id, 1))).collect::<Result<_>>()?;
    let xa: Vec<Vec<Poly>> = gens.iter().map(|g| xs.iter().map(|x| g.apply(x)).collect()).collect();
    let n = xs.len();
    let mut out = vec![vec![Poly::zero(); n]; n];
    for mu in 0..n {
        for nu in 0..n {
            let mut parts = Vec::new();
            for a in 0..gens.len() {
                for b in 0..gens.len() {
                    if !theta[a][b].is_zero() {
                        parts.push(xa[a][mu].mul(&xa[b][nu]).scale(&Cq::new(Q::zero(), theta[a][b])));
                    }
                }
            }
            out[mu][nu] = Poly::sum(parts.iter());
        }
    }
    Ok(out)
}

/// Parameters chosen so that a table row passes its commutation conditions:
/// X_2^0 = μ X_1^0 for cosmological rows, c_1^0 = C r^m with N_2^0 = m F for B32.
pub fn commuting_instance(family: Family) -> FamilySpec {
    let ch = reduction_chart();
    let mut s = FamilySpec::generic(family);
    match family.kind() {
        AlgebraKind::Cosmological => {
            let x1 = fn_of_t(&ch, "X1");
            s = s.with("X2_0", x1.mul(&ch.p("mu")));
        }
        AlgebraKind::BlackHole => {
            if family == Family::B12 {
                s = s.with("c1_0", ch.p("C"));
            }
            if family == Family::B32 {
                let r = ch.radius().unwrap();
                let m = 2;
                s = s
                    .with("f2", ch.p("F"))
                    .with("c1_0", ch.p("C").mul(&r.pow(m).unwrap()))
                    .with("N2_0", ch.p("F").scale(&Cq::int(m as i128)));
            }
        }
    }
    s
}
