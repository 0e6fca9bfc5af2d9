use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::atom::{self, Atom, AtomId};
use super::expr::Expr;
use super::poly::Poly;
use crate::error::{Error, Result};

/// Number of random sample points used by the numeric equality diagnostic.
pub const SAMPLE_POINTS: usize = 8;
pub const SAMPLE_TOL: f64 = 1e-10;
const SAMPLE_SEED: u64 = 0x5eed_c4a7;

#[derive(Clone, Debug)]
pub struct Chart {
    pub name: String,
    coords: Vec<(String, AtomId)>,
    params: Vec<(String, AtomId)>,
    ranges: HashMap<AtomId, (f64, f64)>,
    radius: Option<(String, AtomId)>,
}

#[derive(Clone, Debug)]
pub struct NumericCheck {
    pub max_abs_diff: f64,
    pub agree: bool,
}

impl Chart {
    pub fn new(name: &str, coords: &[&str], params: &[&str]) -> Result<Chart> {
        Self::build(name, coords, params, 0)
    }

    /// Cartesian chart with a radius `r = |(x_1..x_k)|` over the listed coordinates.
    /// The coordinates get a private scope because they carry the relation
    /// `x_1² = r² − Σ x_i²`.
    pub fn with_radius(name: &str, coords: &[&str], radial: &[&str], radius: &str, params: &[&str]) -> Result<Chart> {
        let mut ch = Self::build(name, coords, params, atom::fresh_scope())?;
        let ids = radial.iter().map(|c| ch.coord_id(c)).collect::<Result<Vec<_>>>()?;
        let r = atom::intern(Atom::Radius { name: radius.to_string(), coords: ids });
        ch.radius = Some((radius.to_string(), r));
        Ok(ch)
    }

    fn build(name: &str, coords: &[&str], params: &[&str], scope: u32) -> Result<Chart> {
        for p in params {
            if coords.contains(p) {
                return Err(Error::ConstraintViolated(format!("`{p}` is both coordinate and parameter")));
            }
        }
        let coords: Vec<(String, AtomId)> =
            coords.iter().map(|c| (c.to_string(), atom::scoped_sym(c, scope))).collect();
        let params: Vec<(String, AtomId)> = params.iter().map(|p| (p.to_string(), atom::sym(p))).collect();
        let mut ranges = HashMap::new();
        for (_, id) in &coords {
            ranges.insert(*id, (1.2, 2.4));
        }
        for (_, id) in &params {
            ranges.insert(*id, (0.2, 0.9));
        }
        Ok(Chart { name: name.to_string(), coords, params, ranges, radius: None })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_names(&self) -> Vec<&str> {
        self.coords.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn coord_ids(&self) -> Vec<AtomId> {
        self.coords.iter().map(|(_, a)| *a).collect()
    }

    pub fn coord_id(&self, name: &str) -> Result<AtomId> {
        self.coords
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| *a)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    pub fn symbol_id(&self, name: &str) -> Result<AtomId> {
        self.coords
            .iter()
            .chain(self.params.iter())
            .find(|(n, _)| n == name)
            .map(|(_, a)| *a)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.iter().any(|(n, _)| n == name)
    }

    /// Coordinate as a polynomial. Panics on unknown names.
    pub fn x(&self, name: &str) -> Poly {
        Poly::atom_pow(self.coord_id(name).expect("unknown coordinate"), 1)
    }

    /// Parameter as a polynomial. Panics on unknown names.
    pub fn p(&self, name: &str) -> Poly {
        let id = self.params.iter().find(|(n, _)| n == name).expect("unknown parameter").1;
        Poly::atom_pow(id, 1)
    }

    /// Opaque smooth function of all coordinates.
    pub fn func(&self, name: &str) -> Poly {
        Poly::atom_pow(atom::func(name, &self.coord_ids()), 1)
    }

    pub fn radius_id(&self) -> Option<AtomId> {
        self.radius.as_ref().map(|(_, r)| *r)
    }

    /// Opaque function of the named coordinates (or of the radius name).
    pub fn func_of(&self, name: &str, args: &[&str]) -> Result<Poly> {
        let ids = args
            .iter()
            .map(|a| match &self.radius {
                Some((n, r)) if n == a => Ok(*r),
                _ => self.coord_id(a),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Poly::atom_pow(atom::func(name, &ids), 1))
    }

    pub fn radius(&self) -> Option<Poly> {
        self.radius.as_ref().map(|(_, r)| Poly::atom_pow(*r, 1))
    }

    pub fn set_range(&mut self, name: &str, lo: f64, hi: f64) -> Result<()> {
        let id = self.symbol_id(name)?;
        self.ranges.insert(id, (lo, hi));
        Ok(())
    }

    pub fn differentiate(&self, e: &Poly, coord: &str) -> Result<Poly> {
        Ok(e.diff(self.coord_id(coord)?))
    }

    pub fn differentiate_expr(&self, e: &Expr, coord: &str) -> Result<Expr> {
        Ok(Expr::from_poly(&self.differentiate(&e.to_poly()?, coord)?))
    }

    pub fn substitute(&self, e: &Poly, bindings: &[(&str, Poly)]) -> Result<Poly> {
        let mut map = HashMap::new();
        for (n, v) in bindings {
            map.insert(self.symbol_id(n)?, v.clone());
        }
        e.subst(&map)
    }

    pub fn substitute_expr(&self, e: &Expr, bindings: &[(&str, Expr)]) -> Result<Expr> {
        let b = bindings.iter().map(|(n, v)| Ok((*n, v.to_poly()?))).collect::<Result<Vec<_>>>()?;
        Ok(Expr::from_poly(&self.substitute(&e.to_poly()?, &b)?))
    }

    /// Structural equality of normal forms.
    pub fn expr_equal(&self, a: &Expr, b: &Expr) -> bool {
        match (a.to_poly(), b.to_poly()) {
            (Ok(x), Ok(y)) => x.sub(&y).is_zero(),
            _ => false,
        }
    }

    /// Seeded sample points inside the chart's ranges.
    pub fn sample_points(&self, k: usize) -> Vec<HashMap<AtomId, f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        let mut ids: Vec<AtomId> = self.coords.iter().chain(self.params.iter()).map(|(_, a)| *a).collect();
        ids.sort();
        (0..k)
            .map(|_| {
                ids.iter()
                    .map(|a| {
                        let (lo, hi) = self.ranges[a];
                        (*a, lo + (hi - lo) * rng.gen::<f64>())
                    })
                    .collect()
            })
            .collect()
    }

    /// Diagnostic: compares `a` and `b` numerically. Never used to decide equality.
    pub fn numeric_check(&self, a: &Poly, b: &Poly) -> NumericCheck {
        let diff = a.sub(b);
        let mut worst: f64 = 0.0;
        for env in self.sample_points(SAMPLE_POINTS) {
            let d: Complex64 = diff.eval(&env);
            let scale = 1.0 + a.eval(&env).norm().max(b.eval(&env).norm());
            worst = worst.max(d.norm() / scale);
        }
        NumericCheck { max_abs_diff: worst, agree: worst < SAMPLE_TOL }
    }

    /// Canonical equality together with a flag for canonicalizer gaps:
    /// `(equal, gap)` where `gap` is set when the forms differ but agree numerically.
    pub fn equal_with_diagnostic(&self, a: &Poly, b: &Poly) -> (bool, bool) {
        let eq = a.sub(b).is_zero();
        let gap = !eq && self.numeric_check(a, b).agree;
        (eq, gap)
    }
}
