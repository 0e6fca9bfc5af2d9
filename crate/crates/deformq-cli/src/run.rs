use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use deformq::frwnum::{self, SMode, Z2LoopParams};
use deformq::green::{self, Relations, Sign};
use deformq::ncgeo::{check_killing_reduction, correction_report, einstein_star, geometry_star, CorrectionReport};
use deformq::scalar::{Cq, Q};
use deformq::series::{random_cq_series, series_law_violation, LambdaSeries};
use deformq::symbolic::{cos_of, exp_of, sin_of, Poly};
use deformq::symred::{
    build_family, commutators_o1, commuting_instance, coordinate_commutators_o1, family_fields, Family, FamilySpec,
};
use deformq::twist::{canonical_theta, PSeries, StarContext};
use deformq::waveop::{build_model, MODEL_IDS};
use deformq::Error;

use crate::report::{Check, Format, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Table,
    Geometry,
    Green,
    Spectrum,
    Loop,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl Scenario {
    pub fn new(kind: Kind) -> Self {
        Scenario {
            kind,
            target: None,
            order: None,
            seed: None,
            source: None,
            params: BTreeMap::new(),
            checks: None,
            out: None,
            format: None,
        }
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn target(&self) -> Result<&str, CliError> {
        self.target.as_deref().ok_or_else(|| CliError::Config(format!("{:?} scenario needs a target", self.kind)))
    }

    fn allow_params(&self, keys: &[&str]) -> Result<(), CliError> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(CliError::Config(format!("unknown parameter `{k}` for {:?}", self.kind))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "config error: {s}"),
        }
    }
}

/// Errors caused by the scenario itself become config errors; everything else fails a check.
fn classify(name: &str, e: Error, report: &mut Report) -> Result<(), CliError> {
    match e {
        Error::UnknownModel(_) | Error::BadParams(_) | Error::UnknownCoordinate(_) | Error::UnknownSymbol(_) => {
            Err(CliError::Config(e.to_string()))
        }
        other => {
            report.push(Check::new(name, false, Some(other.to_string())));
            Ok(())
        }
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<Report, CliError> {
    let seed = sc.seed.unwrap_or(0);
    let mut report = Report::new(serde_json::to_value(sc).expect("scenario serializes"), seed);
    if matches!(sc.order, Some(0)) && sc.kind != Kind::Identity {
        return Err(CliError::Config("deformed checks need order ≥ 1".into()));
    }
    match sc.kind {
        Kind::Table => table(sc, &mut report)?,
        Kind::Geometry => geometry(sc, &mut report)?,
        Kind::Green => green_checks(sc, &mut report)?,
        Kind::Spectrum => spectrum(sc, &mut report)?,
        Kind::Loop => loop_fit(sc, &mut report)?,
        Kind::Identity => identity(sc, &mut report, seed)?,
    }
    Ok(report)
}

pub const COORDS: [&str; 4] = ["t", "x1", "x2", "x3"];

pub fn families_for(target: &str) -> Option<Vec<Family>> {
    match target {
        "cosmocom" | "cosmological" => Some(Family::COSMOLOGICAL.to_vec()),
        "bhcom" | "blackhole" => Some(Family::BLACK_HOLE.to_vec()),
        other => Family::parse(other).map(|f| vec![f]),
    }
}

fn pairs() -> Vec<(usize, usize)> {
    vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
}

fn table(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    sc.allow_params(&[])?;
    let target = sc.target()?;
    let fams = families_for(target).ok_or_else(|| CliError::Config(format!("unknown family `{target}`")))?;
    let order = sc.order.unwrap_or(1);
    let head: Vec<String> = pairs().iter().map(|(a, b)| format!("[{}, {}]⋆ / iλ", COORDS[*a], COORDS[*b])).collect();
    let mut md = format!("| family | {} |\n|---|{}\n", head.join(" | "), "---|".repeat(head.len()));
    let mut rows = Vec::new();
    for fam in fams {
        // generic opaque coefficients, unless the family constrains them
        let (spec, instance) = match family_fields(&FamilySpec::generic(fam)) {
            Err(Error::ConstraintViolated(_)) => (commuting_instance(fam), "constrained"),
            _ => (FamilySpec::generic(fam), "generic"),
        };
        let m = match family_fields(&spec).and_then(|f| commutators_o1(&f, &canonical_theta(2), &COORDS)) {
            Ok(m) => m,
            Err(e) => {
                classify(&format!("{}/commutators", fam.name()), e, report)?;
                continue;
            }
        };
        let antisym = (0..4).all(|a| (0..4).all(|b| m[a][b] == m[b][a].neg()));
        report.push(Check::new(format!("{}/antisymmetric", fam.name()), antisym, None));
        // every entry is i·(real expression)
        let minus_i = Cq::new(Q::from_integer(0), Q::from_integer(-1));
        let cells: Vec<Poly> = pairs().iter().map(|(a, b)| m[*a][*b].scale(&minus_i)).collect();
        md.push_str(&format!("| {} | {} |\n", fam.name(), cells.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" | ")));
        let data: BTreeMap<String, String> =
            pairs().iter().zip(&cells).map(|((a, b), p)| (format!("{},{}", COORDS[*a], COORDS[*b]), p.to_prefix())).collect();
        rows.push(json!({ "family": fam.name(), "instance": instance, "commutators_over_i": data }));

        // the ⋆-commutator of a commuting instance agrees with the closed form
        let inst = commuting_instance(fam);
        match build_family(&inst, order) {
            Ok(tw) => {
                let closed = coordinate_commutators_o1(&tw, &COORDS);
                let ch = tw.chart.clone();
                let ctx = StarContext::new(tw);
                let ok = closed.map(|m| {
                    COORDS.iter().enumerate().all(|(a, xa)| {
                        COORDS.iter().enumerate().all(|(b, xb)| ctx.commutator(&ch.x(xa), &ch.x(xb)).coeff(1) == &m[a][b])
                    })
                });
                match ok {
                    Ok(ok) => report.push(Check::new(format!("{}/star-product-agrees", fam.name()), ok, None)),
                    Err(e) => classify(&format!("{}/star-product-agrees", fam.name()), e, report)?,
                }
            }
            Err(e) => classify(&format!("{}/commuting-instance", fam.name()), e, report)?,
        }
    }
    report.tables.push(md);
    report.data = json!({ "rows": rows });
    Ok(())
}

fn model_id(target: &str) -> &str {
    match target {
        "schwarzschild-killing" => "schwarzschild-timeradius",
        other => other,
    }
}

fn report_json(r: &CorrectionReport) -> Value {
    json!({
        "tensors": r.tensors.iter().map(|(n, c)| json!({ "tensor": n, "nonzero_corrections": c })).collect::<Vec<_>>(),
        "first_nonzero": r.first_nonzero.as_ref().map(|(n, i, o)| json!({ "tensor": n, "index": i, "order": o })),
        "classical_agrees": r.classical_agrees,
    })
}

fn geometry(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    let id = model_id(sc.target()?);
    let order = sc.order.unwrap_or(2);
    let mb = match build_model(id, &sc.params, order) {
        Ok(m) => m,
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    let (rep, killing) = match check_killing_reduction(&mb.frame, &[]) {
        Ok(r) => (r, Value::Bool(true)),
        Err(Error::PreconditionFailed(w)) => {
            let r = geometry_star(&mb.frame).and_then(|g| correction_report(&mb.frame, &g));
            match r {
                Ok(r) => (r, Value::String(w)),
                Err(e) => return classify("geometry", e, report),
            }
        }
        Err(e) => return classify("geometry", e, report),
    };
    report.push(Check::new(
        "corrections-vanish",
        rep.all_vanish(),
        rep.first_nonzero.as_ref().map(|(n, i, o)| format!("{n}{i:?} at λ^{o}")),
    ));
    report.push(Check::new("classical-limit", rep.classical_agrees, None));
    if id.starts_with("desitter") {
        match einstein_star(&mb.frame) {
            Ok(ein) => {
                let ch = mb.chart().clone();
                let h = ch.p("H");
                let lam = h.mul(&h).scale_q(&Q::from_integer(3));
                let mut bad = None;
                for i in ein.indices() {
                    let target = PSeries::constant(lam.mul(&mb.frame.metric[i[0]][i[1]]), ein.order());
                    let s = ein.get(&i).add(&target);
                    if s.coeffs().iter().any(|c| !ch.equal_with_diagnostic(c, &Poly::zero()).0) {
                        bad = Some(format!("{i:?}"));
                        break;
                    }
                }
                report.push(Check::new("einstein-with-lambda", bad.is_none(), bad));
            }
            Err(e) => classify("einstein-with-lambda", e, report)?,
        }
    }
    report.data = json!({ "model": id, "order": order, "killing_precondition": killing, "corrections": report_json(&rep) });
    Ok(())
}

fn green_checks(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    sc.allow_params(&["points"])?;
    let id = sc.target()?;
    if !MODEL_IDS.contains(&id) {
        return Err(CliError::Config(format!("unknown model `{id}`")));
    }
    let order = sc.order.unwrap_or(2);
    let n = order as u32;
    let mut words = Vec::new();
    for sign in [Sign::Retarded, Sign::Advanced] {
        let tag = if sign == Sign::Retarded { "retarded" } else { "advanced" };
        let r = green::verify_green_identities(n, n, sign, Relations::ALL).map_err(|e| CliError::Config(e.to_string()))?;
        report.push(Check::new(format!("chain-identities/{tag}"), r.all_zero(), None));
        words.push(r.to_json());
        let cut = Relations { p0_delta: false, delta_p0: true };
        let neg = green::verify_green_identities(n, n, sign, cut).map_err(|e| CliError::Config(e.to_string()))?;
        report.push(Check::new(format!("negative-control/{tag}"), !neg.all_zero(), None));
        let rec = (1..=n).all(|m| green::green_corrections(m, n, sign).ok() == Some(green::green_recursive(m, n, sign)));
        report.push(Check::new(format!("recursion-matches-chains/{tag}"), rec, None));
    }
    let p = green::generic_word_operator(order);
    match green::tpm_maps(&p).and_then(|m| m.check(&p)) {
        Ok(checks) => {
            for (c, tag) in checks.iter().zip(["retarded", "advanced"]) {
                report.push(Check::new(format!("t-maps/{tag}"), c.ok(), Some(format!("{c:?}"))));
            }
        }
        Err(e) => classify("t-maps", e, report)?,
    }
    let mut modes = Vec::new();
    if id == green::mode::SUPPORTED_MODEL {
        let points = sc.param("points", 4000.0) as usize;
        for m2 in [0.0, 1.0] {
            match green::mode_sweep(id, &[0.5, 1.0, 2.0], m2, order.min(2), points) {
                Ok(rs) => {
                    for r in rs {
                        let tag = format!("mode k={} M²={}", r.k, r.mass2);
                        report.push(Check::below(format!("{tag}/order0"), r.order0_residual, 1e-4));
                        report.push(Check::below(format!("{tag}/residual"), r.residual, 1e-3));
                        report.push(Check::below(format!("{tag}/support-leak"), r.support_leak, 1e-8));
                        report.push(Check::below(format!("{tag}/antihermitian"), r.antihermiticity, 1e-4));
                        report.push(Check::below(format!("{tag}/exactness"), r.exactness, 1e-3));
                        modes.push(serde_json::to_value(&r).expect("mode reports serialize"));
                    }
                }
                Err(e) => classify("mode-green", e, report)?,
            }
        }
    }
    report.data = json!({ "model": id, "order": order, "words": words, "modes": modes });
    Ok(())
}

fn spectrum(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    sc.allow_params(&["lambda", "kmax"])?;
    let lambda = sc.param("lambda", 0.3);
    let kmax = sc.param("kmax", 4.0);
    if !(lambda > 0.0) || !(kmax >= 0.0) || !lambda.is_finite() || !kmax.is_finite() {
        return Err(CliError::Config(format!("need λ > 0 and kmax ≥ 0, got {lambda}, {kmax}")));
    }
    let mock_a = |t: f64, tau: f64, k: [f64; 3]| 1.0 / ((1.0 + k.iter().map(|x| x * x).sum::<f64>()) * t * tau);
    let mock_b = |t: f64, _: f64, k: [f64; 3]| (-(k[0] * k[0]) - k[1].abs()).exp() * t.powi(3) + 0.25;
    let steps = (kmax / 0.25).floor() as usize;
    let mut worst: f64 = 0.0;
    let mut md = String::from("| k₁ | 𝒫⋆/𝒫 |\n|---|---|\n");
    let mut rows = Vec::new();
    for i in 0..=steps {
        let k1 = 0.25 * i as f64;
        let k = [k1, 0.3, -0.2];
        let (ra, rb) = (frwnum::power_spectrum_ratio(&mock_a, 1.5, k, lambda), frwnum::power_spectrum_ratio(&mock_b, 0.8, k, lambda));
        let sech = 1.0 / (3.0 * lambda * k1).cosh();
        worst = worst.max((ra - sech).abs()).max((rb - sech).abs());
        md.push_str(&format!("| {k1:.2} | {ra:.12} |\n"));
        rows.push(json!([k1, ra]));
    }
    report.push(Check::below("ratio-is-sech", worst, 1e-12));
    let (n, dx) = (1024usize, 0.02);
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 - n as f64 / 2.0) * dx;
            if x.abs() < 1.0 { (1.0 - x * x).powi(4) } else { 0.0 }
        })
        .collect();
    let dual = frwnum::s_map(&phi, dx, lambda, SMode::Fourier, 2)
        .and_then(|a| frwnum::s_map(&phi, dx, lambda, SMode::Position, 2).map(|b| (a, b)));
    match dual {
        Ok((a, b)) => {
            let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            report.push(Check::below("s-squared-duality", d, 1e-6));
        }
        Err(e) => classify("s-squared-duality", e, report)?,
    }
    report.tables.push(md);
    report.data = json!({ "lambda": lambda, "kmax": kmax, "ratio": rows, "csv": frwnum::power_ratio_csv(lambda, &(0..=steps).map(|i| 0.25 * i as f64).collect::<Vec<_>>()) });
    Ok(())
}

fn loop_fit(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    sc.allow_params(&["beta", "ratio", "g4", "mass2"])?;
    let p = Z2LoopParams {
        beta: sc.param("beta", 1.0),
        g4: sc.param("g4", 1.0),
        mass2: sc.param("mass2", 0.5),
        ratio: sc.param("ratio", 1.0),
    };
    let scan: Vec<f64> = (0..7).map(|i| 1e3 * 2f64.powi(i)).collect();
    match frwnum::z2_loop_integral(&p, &scan) {
        Ok(fit) => {
            report.push(Check::below("divergence-coefficient", fit.relative_error, 0.05));
            report.push(Check::new("four-point-converges", fit.bubble_converges, Some(format!("{:?}", fit.bubble_differences))));
            report.data = serde_json::to_value(&fit).expect("fit serializes");
        }
        Err(Error::BadParams(s)) => return Err(CliError::Config(s)),
        Err(e) => classify("loop-fit", e, report)?,
    }
    Ok(())
}

pub const IDENTITY_CHECKS: [&str; 3] = ["series-laws", "series-encoding", "star-associativity"];

fn random_function(rng: &mut ChaCha8Rng, leaves: &[Poly], depth: usize) -> Poly {
    if depth == 0 || rng.gen_bool(0.3) {
        let k = Q::new(rng.gen_range(1..4), rng.gen_range(1..3));
        return leaves[rng.gen_range(0..leaves.len())].scale_q(&k);
    }
    let a = random_function(rng, leaves, depth - 1);
    let b = random_function(rng, leaves, depth - 1);
    if rng.gen_bool(0.5) {
        a.add(&b)
    } else {
        a.mul(&b)
    }
}

fn identity(sc: &Scenario, report: &mut Report, seed: u64) -> Result<(), CliError> {
    sc.allow_params(&["count"])?;
    let checks = sc.checks.clone().unwrap_or_default();
    let mut data = serde_json::Map::new();
    for name in &checks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match name.as_str() {
            "series-laws" => {
                let count = sc.param("count", 1000.0) as usize;
                let order = sc.order.unwrap_or(4);
                let bad = (0..count).find_map(|_| {
                    let a = random_cq_series(&mut rng, order, 6);
                    let b = random_cq_series(&mut rng, order, 6);
                    let c = random_cq_series(&mut rng, order, 6);
                    series_law_violation(&a, &b, &c).map(|v| format!("{v} on a = {a}"))
                });
                report.push(Check::new(name.clone(), bad.is_none(), bad));
            }
            "series-encoding" => {
                let s = LambdaSeries::new(vec![Cq::int(1), Cq::i()]);
                let v = serde_json::to_value(&s).expect("series serialize");
                let ok = v == json!({ "coeffs": [["1", "0"], ["0", "1"]] });
                data.insert("series".into(), v);
                report.push(Check::new(name.clone(), ok, None));
            }
            "star-associativity" => {
                let order = sc.order.unwrap_or(2);
                let count = sc.param("count", 5.0) as usize;
                let mb = build_model("moyal-minkowski", &BTreeMap::new(), order).map_err(|e| CliError::Config(e.to_string()))?;
                let ctx = mb.frame.context();
                let ch = ctx.chart().clone();
                let mut leaves: Vec<Poly> = ch.coord_names().iter().map(|c| ch.x(c)).collect();
                leaves.push(sin_of(&ch.x("x1")).expect("sin"));
                leaves.push(cos_of(&ch.x("t")).expect("cos"));
                leaves.push(exp_of(&ch.x("x2")).expect("exp"));
                let mut bad = None;
                for i in 0..count {
                    let [h, k, l] = std::array::from_fn(|_| random_function(&mut rng, &leaves, 2));
                    let lhs = ctx.star_series(&ctx.star(&h, &k), &ctx.series(l.clone()));
                    let rhs = ctx.star_series(&ctx.series(h.clone()), &ctx.star(&k, &l));
                    if lhs != rhs {
                        bad = Some(format!("triple {i}"));
                        break;
                    }
                }
                report.push(Check::new(name.clone(), bad.is_none(), bad));
            }
            other => return Err(CliError::Config(format!("unknown identity check `{other}`; known: {IDENTITY_CHECKS:?}"))),
        }
    }
    report.data = Value::Object(data);
    Ok(())
}
