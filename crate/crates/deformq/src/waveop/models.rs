//! Catalog of deformed spacetimes: chart, frame, metric, volume factor and twist.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ncgeo::{classical, FrameBundle};
use crate::scalar::Q;
use crate::symbolic::{exp_of, sin_of, Chart, Poly};
use crate::twist::{AbelianTwist, VectorField};

pub const MODEL_IDS: [&str; 10] = [
    "moyal-minkowski",
    "kappa-minkowski",
    "desitter-isotropic",
    "desitter-timeangle",
    "desitter-angleradius",
    "schwarzschild-timeradius",
    "homothetic-frw",
    "ads-rs",
    "z2-euclid",
    "compact-frw",
];

/// Numeric defaults; the symbolic computations keep these as parameters.
const DEFAULTS: [(&str, f64); 5] = [("H", 0.5), ("rs", 0.5), ("M2", 0.3), ("xi", 0.2), ("k", 0.5)];

/// Lower end of the radial sample range; Schwarzschild needs r_s below it.
const R_MIN: f64 = 1.2;

#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub id: String,
    pub frame: FrameBundle,
    /// false for the models that are only given in a coordinate basis
    pub nice: bool,
    pub mass2: Poly,
    pub xi: Poly,
    /// classical scalar curvature, used by the ξ coupling
    pub curvature: Poly,
    /// L_{X₂} g = c g for the homothetic models
    pub homothety: Option<Q>,
    pub params: BTreeMap<String, f64>,
}

impl ModelBundle {
    pub fn chart(&self) -> &Arc<Chart> {
        self.frame.chart()
    }

    pub fn order(&self) -> usize {
        self.frame.order()
    }

    pub fn with_order(&self, order: usize) -> Self {
        ModelBundle { frame: self.frame.with_order(order), ..self.clone() }
    }

    /// m = M² + ξ𝔯, the potential entering the equation of motion.
    pub fn potential(&self) -> Poly {
        self.mass2.add(&self.xi.mul(&self.curvature))
    }
}

fn check_params(id: &str, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let mut params: BTreeMap<String, f64> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in given {
        if !params.contains_key(k) {
            return Err(Error::BadParams(format!("unknown parameter `{k}` for {id}")));
        }
        if !v.is_finite() {
            return Err(Error::BadParams(format!("{k} must be finite")));
        }
        params.insert(k.clone(), *v);
    }
    if params["H"] <= 0.0 {
        return Err(Error::BadParams("H must be positive".into()));
    }
    if params["rs"] <= 0.0 || params["rs"] >= R_MIN {
        return Err(Error::BadParams(format!("r_s must lie in (0, {R_MIN}) so the sample region is exterior")));
    }
    if params["M2"] < 0.0 {
        return Err(Error::BadParams("M2 must be non-negative".into()));
    }
    Ok(params)
}

fn pinned_chart(name: &str, coords: &[&str], syms: &[&str], params: &BTreeMap<String, f64>) -> Result<Arc<Chart>> {
    let mut ch = Chart::new(name, coords, syms)?;
    for s in syms {
        let v = params[*s];
        ch.set_range(s, v, v)?;
    }
    Ok(Arc::new(ch))
}

fn diag(entries: Vec<Poly>) -> Vec<Vec<Poly>> {
    let n = entries.len();
    let mut m = vec![vec![Poly::zero(); n]; n];
    for (i, e) in entries.into_iter().enumerate() {
        m[i][i] = e;
    }
    m
}

fn names(ns: &[&str]) -> Vec<String> {
    ns.iter().map(|s| s.to_string()).collect()
}

struct Spherical {
    ch: Arc<Chart>,
    t: Poly,
    r: Poly,
    sin: Poly,
}

impl Spherical {
    fn new(params: &BTreeMap<String, f64>) -> Result<Self> {
        let ch = pinned_chart("spherical", &["t", "r", "zeta", "phi"], &["M2", "H", "rs"], params)?;
        let sin = sin_of(&ch.x("zeta"))?;
        Ok(Spherical { t: ch.x("t"), r: ch.x("r"), sin, ch })
    }

    fn d(&self, c: &str) -> VectorField {
        VectorField::partial(&self.ch, c).expect("chart coordinate")
    }

    fn dilation(&self) -> VectorField {
        self.d("r").scale(&self.r)
    }

    /// (∂_t, r∂_r, ∂_ζ, ∂_φ)
    fn scale_frame(&self) -> Vec<VectorField> {
        vec![self.d("t"), self.dilation(), self.d("zeta"), self.d("phi")]
    }

    fn coord_frame(&self) -> Vec<VectorField> {
        vec![self.d("t"), self.d("r"), self.d("zeta"), self.d("phi")]
    }

    fn exp_ht(&self, n: i128) -> Result<Poly> {
        exp_of(&self.ch.p("H").mul(&self.t).scale_q(&Q::from_integer(n)))
    }

    fn r2(&self) -> Poly {
        self.r.mul(&self.r)
    }

    fn sin2(&self) -> Poly {
        self.sin.mul(&self.sin)
    }
}

fn twist2(ch: &Arc<Chart>, x1: VectorField, x2: VectorField, order: usize) -> Result<AbelianTwist> {
    AbelianTwist::canonical(ch, vec![x1, x2], order)
}

struct Parts {
    twist: AbelianTwist,
    frame: Vec<VectorField>,
    duals: Vec<String>,
    metric: Vec<Vec<Poly>>,
    gamma: Poly,
    nice: bool,
    mass2: Poly,
    xi: Poly,
    homothety: Option<Q>,
}

fn spherical_model(id: &str, params: &BTreeMap<String, f64>, order: usize) -> Result<Parts> {
    let s = Spherical::new(params)?;
    let ch = &s.ch;
    let (r2, sin2) = (s.r2(), s.sin2());
    let scale_duals = names(&["dt", "dr/r", "dzeta", "dphi"]);
    let flat_scale = diag(vec![Poly::int(-1), r2.clone(), r2.clone(), r2.mul(&sin2)]);
    let gamma_scale = r2.mul(&s.r).mul(&s.sin);
    let ds_scale = |e2: &Poly| diag(vec![Poly::int(-1), e2.mul(&r2), e2.mul(&r2), e2.mul(&r2).mul(&sin2)]);
    let (twist, frame, duals, metric, gamma) = match id {
        "kappa-minkowski" => (twist2(ch, s.dilation(), s.d("t"), order)?, s.scale_frame(), scale_duals, flat_scale, gamma_scale),
        "desitter-isotropic" => {
            let e2 = s.exp_ht(2)?;
            let g = s.exp_ht(3)?.mul(&gamma_scale);
            (twist2(ch, s.dilation(), s.d("t"), order)?, s.scale_frame(), scale_duals, ds_scale(&e2), g)
        }
        "desitter-angleradius" => {
            let e2 = s.exp_ht(2)?;
            let g = s.exp_ht(3)?.mul(&gamma_scale);
            (twist2(ch, s.d("phi"), s.dilation(), order)?, s.scale_frame(), scale_duals, ds_scale(&e2), g)
        }
        "desitter-timeangle" => {
            let e2 = s.exp_ht(2)?;
            let metric = diag(vec![Poly::int(-1), e2.clone(), e2.mul(&r2), e2.mul(&r2).mul(&sin2)]);
            let g = s.exp_ht(3)?.mul(&r2).mul(&s.sin);
            (twist2(ch, s.d("phi"), s.d("t"), order)?, s.coord_frame(), names(&["dt", "dr", "dzeta", "dphi"]), metric, g)
        }
        "schwarzschild-timeradius" => {
            let q = Poly::one().sub(&ch.p("rs").mul(&s.r.pow(-1)?));
            let qinv = q.try_inv()?;
            let metric = diag(vec![q.neg(), qinv.mul(&r2), r2.clone(), r2.mul(&sin2)]);
            (twist2(ch, s.d("t"), s.dilation(), order)?, s.scale_frame(), scale_duals, metric, gamma_scale)
        }
        _ => unreachable!(),
    };
    Ok(Parts { twist, frame, duals, metric, gamma, nice: true, mass2: ch.p("M2"), xi: Poly::zero(), homothety: None })
}

/// X_{2a−1} = ∂_a, X_{2a} = θ(w)∂_a for a = 1..3, with θ an opaque function of `w`.
fn warped_twist(ch: &Arc<Chart>, spatial: &[&str], w: &str, order: usize) -> Result<AbelianTwist> {
    let theta = ch.func_of("theta", &[w])?;
    let mut gens = Vec::new();
    for c in spatial {
        let d = VectorField::partial(ch, c)?;
        gens.push(d.clone());
        gens.push(d.scale(&theta));
    }
    AbelianTwist::canonical(ch, gens, order)
}

fn build_parts(id: &str, params: &BTreeMap<String, f64>, order: usize) -> Result<Parts> {
    match id {
        "moyal-minkowski" => {
            let ch = pinned_chart("minkowski", &["t", "x1", "x2", "x3"], &["M2"], params)?;
            let frame = ch.coord_names().iter().map(|c| VectorField::partial(&ch, c)).collect::<Result<Vec<_>>>()?;
            let twist = AbelianTwist::canonical(&ch, frame.clone(), order)?;
            let metric = diag(vec![Poly::int(-1), Poly::one(), Poly::one(), Poly::one()]);
            Ok(Parts {
                twist,
                frame,
                duals: names(&["dt", "dx1", "dx2", "dx3"]),
                metric,
                gamma: Poly::one(),
                nice: true,
                mass2: ch.p("M2"),
                xi: Poly::zero(),
                homothety: None,
            })
        }
        "kappa-minkowski" | "desitter-isotropic" | "desitter-timeangle" | "desitter-angleradius"
        | "schwarzschild-timeradius" => spherical_model(id, params, order),
        "homothetic-frw" => {
            let ch = pinned_chart("frw", &["t", "x1", "x2", "x3"], &["xi"], params)?;
            let t = ch.x("t");
            let t2 = t.mul(&t);
            let et = VectorField::partial(&ch, "t")?.scale(&t);
            let mut frame = vec![et.clone()];
            for c in ["x1", "x2", "x3"] {
                frame.push(VectorField::partial(&ch, c)?);
            }
            let twist = twist2(&ch, VectorField::partial(&ch, "x1")?, et, order)?;
            Ok(Parts {
                twist,
                frame,
                duals: names(&["dt/t", "dx1", "dx2", "dx3"]),
                metric: diag(vec![t2.neg(), t2.clone(), t2.clone(), t2.clone()]),
                gamma: t2.mul(&t2),
                nice: true,
                mass2: Poly::zero(),
                xi: ch.p("xi"),
                homothety: Some(Q::from_integer(2)),
            })
        }
        "compact-frw" => {
            let ch = pinned_chart("circle-frw", &["t", "phi"], &["xi"], params)?;
            let t = ch.x("t");
            let t2 = t.mul(&t);
            let et = VectorField::partial(&ch, "t")?.scale(&t);
            let dphi = VectorField::partial(&ch, "phi")?;
            let twist = twist2(&ch, dphi.scale(&Poly::int(2)), et.clone(), order)?;
            Ok(Parts {
                twist,
                frame: vec![et, dphi],
                duals: names(&["dt/t", "dphi"]),
                metric: diag(vec![t2.neg(), t2.clone()]),
                gamma: t2,
                nice: true,
                mass2: Poly::zero(),
                xi: ch.p("xi"),
                homothety: Some(Q::from_integer(2)),
            })
        }
        "ads-rs" => {
            let ch = pinned_chart("ads5", &["t", "x1", "x2", "x3", "y"], &["k"], params)?;
            let twist = warped_twist(&ch, &["x1", "x2", "x3"], "y", order)?;
            let frame = ch.coord_names().iter().map(|c| VectorField::partial(&ch, c)).collect::<Result<Vec<_>>>()?;
            let ky = ch.p("k").mul(&ch.x("y"));
            let w = exp_of(&ky.scale_q(&Q::from_integer(-2)))?;
            let metric = diag(vec![w.neg(), w.clone(), w.clone(), w.clone(), Poly::one()]);
            Ok(Parts {
                twist,
                frame,
                duals: names(&["dt", "dx1", "dx2", "dx3", "dy"]),
                metric,
                gamma: exp_of(&ky.scale_q(&Q::from_integer(-4)))?,
                nice: false,
                mass2: Poly::zero(),
                xi: Poly::zero(),
                homothety: None,
            })
        }
        "z2-euclid" => {
            let ch = pinned_chart("euclid4", &["x1", "x2", "x3", "x4"], &[], params)?;
            let twist = warped_twist(&ch, &["x1", "x2", "x3"], "x4", order)?;
            let frame = ch.coord_names().iter().map(|c| VectorField::partial(&ch, c)).collect::<Result<Vec<_>>>()?;
            Ok(Parts {
                twist,
                frame,
                duals: names(&["dx1", "dx2", "dx3", "dx4"]),
                metric: diag(vec![Poly::one(); 4]),
                gamma: Poly::one(),
                nice: false,
                mass2: Poly::zero(),
                xi: Poly::zero(),
                homothety: None,
            })
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Builds a catalog model truncated at λ^order. Unlisted parameters take the defaults
/// H = 0.5, r_s = 0.5, M² = 0.3, ξ = 0.2, k = 0.5.
pub fn build_model(id: &str, params: &BTreeMap<String, f64>, order: usize) -> Result<ModelBundle> {
    if !MODEL_IDS.contains(&id) {
        return Err(Error::UnknownModel(id.to_string()));
    }
    let params = check_params(id, params)?;
    let p = build_parts(id, &params, order)?;
    let frame = FrameBundle::new(p.twist, p.frame, p.duals, p.metric, p.gamma)?;
    let curvature = if p.xi.is_zero() { Poly::zero() } else { classical::compute(&frame.frame, &frame.metric)?.scalar };
    Ok(ModelBundle {
        id: id.to_string(),
        frame,
        nice: p.nice,
        mass2: p.mass2,
        xi: p.xi,
        curvature,
        homothety: p.homothety,
        params,
    })
}
