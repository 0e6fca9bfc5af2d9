use std::collections::BTreeMap;
use std::sync::Arc;

use deformq::ncgeo::FrameBundle;
use deformq::scalar::{Cq, Q};
use deformq::symbolic::{cos_of, sin_of, Chart, Poly};
use deformq::twist::{AbelianTwist, VectorField};
use deformq::waveop::*;
use deformq::{CoefficientDomain, Error, LambdaSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(id: &str, order: usize) -> ModelBundle {
    build_model(id, &BTreeMap::new(), order).unwrap()
}

fn nice_models() -> Vec<&'static str> {
    MODEL_IDS.iter().copied().filter(|id| !matches!(*id, "ads-rs" | "z2-euclid")).collect()
}

fn assert_op_zero(ch: &Chart, d: &DiffOp, what: &str) {
    for (idx, c) in d.terms() {
        let (eq, _) = ch.equal_with_diagnostic(c, &Poly::zero());
        assert!(eq, "{what}: coefficient of {idx:?} is {}", c.to_prefix());
    }
}

fn assert_series_eq(mb: &ModelBundle, a: &DiffOpSeries, b: &DiffOpSeries) {
    for n in 0..=a.order().min(b.order()) {
        assert_op_zero(mb.chart(), &a.coeff(n).sub(b.coeff(n)), &format!("{} order {n}", mb.id));
    }
}

fn d(ch: &Chart, c: &str, k: u8) -> DiffOp {
    DiffOp::monomial(&[(ch.coord_id(c).unwrap(), k)], Poly::one())
}

/// Flat spatial Laplacian in (r, ζ, φ), written out by hand.
fn laplacian(ch: &Chart) -> DiffOp {
    let r = ch.x("r");
    let rinv = r.pow(-1).unwrap();
    let rinv2 = rinv.mul(&rinv);
    let z = ch.x("zeta");
    let s = sin_of(&z).unwrap();
    let sinv = s.pow(-1).unwrap();
    d(ch, "r", 2)
        .add(&d(ch, "r", 1).left_mul(&rinv.scale(&Cq::int(2))))
        .add(&d(ch, "zeta", 2).left_mul(&rinv2))
        .add(&d(ch, "zeta", 1).left_mul(&rinv2.mul(&cos_of(&z).unwrap()).mul(&sinv)))
        .add(&d(ch, "phi", 2).left_mul(&rinv2.mul(&sinv).mul(&sinv)))
}

#[test]
fn kappa_second_order_correction_by_hand() {
    let mb = model("kappa-minkowski", 2);
    let ch = mb.chart().clone();
    let tilde = wave_operator_tilde(&mb).unwrap();
    assert!(tilde.coeff(1).is_zero());
    let m2 = ch.p("M2");
    let dt2 = d(&ch, "t", 2);
    let time = dt2.compose(&d(&ch, "t", 2).add(&DiffOp::multiplication(m2)));
    let expect = time.scale(&Cq::frac(9, 8)).sub(&dt2.compose(&laplacian(&ch)).scale(&Cq::frac(25, 8)));
    assert_op_zero(&ch, &tilde.coeff(2).sub(&expect), "P̃_(2)");
}

#[test]
fn kappa_minkowski_matches_closed_forms() {
    let mb = model("kappa-minkowski", 4);
    assert_series_eq(&mb, &wave_operator_star(&mb).unwrap(), &closed_form(&mb, false).unwrap().unwrap());
    assert_series_eq(&mb, &wave_operator_tilde(&mb).unwrap(), &closed_form(&mb, true).unwrap().unwrap());
}

#[test]
fn de_sitter_models_match_closed_forms() {
    for id in ["desitter-isotropic", "desitter-timeangle", "desitter-angleradius"] {
        let mb = model(id, 3);
        assert_series_eq(&mb, &wave_operator_star(&mb).unwrap(), &closed_form(&mb, false).unwrap().unwrap());
        assert_series_eq(&mb, &wave_operator_tilde(&mb).unwrap(), &closed_form(&mb, true).unwrap().unwrap());
    }
}

#[test]
fn schwarzschild_matches_star_expression() {
    let mb = model("schwarzschild-timeradius", 3);
    assert_series_eq(&mb, &wave_operator_star(&mb).unwrap(), &closed_form(&mb, false).unwrap().unwrap());
    assert_series_eq(&mb, &wave_operator_tilde(&mb).unwrap(), &closed_form(&mb, true).unwrap().unwrap());
}

#[test]
fn moyal_minkowski_is_undeformed() {
    let mb = model("moyal-minkowski", 3);
    let star = wave_operator_star(&mb).unwrap();
    let tilde = wave_operator_tilde(&mb).unwrap();
    let ch = mb.chart().clone();
    let m2 = ch.p("M2");
    let mut box_op = DiffOp::multiplication(m2.neg()).sub(&d(&ch, "t", 2));
    for x in ["x1", "x2", "x3"] {
        box_op = box_op.add(&d(&ch, x, 2));
    }
    assert_eq!(*star.coeff(0), box_op);
    for n in 1..=3 {
        assert!(star.coeff(n).is_zero() && tilde.coeff(n).is_zero());
    }
}

#[test]
fn homothetic_models_match_cosh_form() {
    for id in ["homothetic-frw", "compact-frw"] {
        let mb = model(id, 4);
        assert_series_eq(&mb, &wave_operator_tilde(&mb).unwrap(), &closed_form(&mb, true).unwrap().unwrap());
    }
}

#[test]
fn homothetic_second_order_by_hand() {
    // cosh(3λ i∂₁) = 1 − (9/2)λ²∂₁² + …
    let mb = model("homothetic-frw", 2);
    let ch = mb.chart().clone();
    let tilde = wave_operator_tilde(&mb).unwrap();
    let t = ch.x("t");
    let tinv = t.pow(-1).unwrap();
    let tinv2 = tinv.mul(&tinv);
    let mut p = d(&ch, "t", 2).neg().sub(&d(&ch, "t", 1).left_mul(&tinv.scale(&Cq::int(3))));
    for x in ["x1", "x2", "x3"] {
        p = p.add(&d(&ch, x, 2).left_mul(&tinv2));
    }
    // 𝔯 = 6/t² for a(t) = t
    p = p.sub(&DiffOp::multiplication(ch.p("xi").mul(&tinv2).scale(&Cq::int(6))));
    assert_op_zero(&ch, &tilde.coeff(0).sub(&p), "P̃_(0)");
    let expect = d(&ch, "x1", 2).compose(&p).scale(&Cq::frac(-9, 2));
    assert_op_zero(&ch, &tilde.coeff(2).sub(&expect), "P̃_(2)");
}

#[test]
fn zeroth_order_is_classical_klein_gordon() {
    for id in nice_models() {
        let mb = model(id, 1);
        let kg = classical_wave_operator(&mb).unwrap();
        assert_op_zero(mb.chart(), &wave_operator_star(&mb).unwrap().coeff(0).sub(&kg), id);
        assert_op_zero(mb.chart(), &wave_operator_tilde(&mb).unwrap().coeff(0).sub(&kg), id);
    }
}

#[test]
fn tilde_operators_are_real_and_even() {
    for id in nice_models() {
        let mb = model(id, 3);
        let tilde = wave_operator_tilde(&mb).unwrap();
        for n in 0..=3 {
            let c = tilde.coeff(n);
            if n % 2 == 1 {
                assert_op_zero(mb.chart(), c, &format!("{id} odd order {n}"));
            } else {
                assert!(c.is_real(), "{id} order {n} has complex coefficients");
            }
        }
    }
}

fn random_field(ch: &Chart, rng: &mut ChaCha8Rng) -> Poly {
    let xs = ch.coord_names();
    let mut p = ch.func_of("u", &xs).unwrap();
    for _ in 0..3 {
        let mut m = Poly::rational(Q::new(rng.gen_range(-5..=5), rng.gen_range(1..=4)));
        for x in &xs {
            let e = rng.gen_range(0..=2);
            m = m.mul(&ch.x(x).pow(e).unwrap());
        }
        p = p.add(&m);
    }
    p
}

#[test]
fn tilde_and_star_are_intertwined_by_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for id in ["kappa-minkowski", "desitter-isotropic", "schwarzschild-timeradius", "homothetic-frw"] {
        let mb = model(id, 3);
        let star = wave_operator_star(&mb).unwrap();
        let tilde = wave_operator_tilde(&mb).unwrap();
        for _ in 0..2 {
            let phi = random_field(mb.chart(), &mut rng);
            let defect = intertwining_defect(&mb, &star, &tilde, &phi);
            for (n, c) in defect.coeffs().iter().enumerate() {
                let (eq, _) = mb.chart().equal_with_diagnostic(c, &Poly::zero());
                assert!(eq, "{id} order {n}");
            }
        }
    }
}

#[test]
fn two_killing_twist_leaves_tilde_operator_undeformed() {
    let mut ch = Chart::new("schwarzschild-coords", &["t", "r", "zeta", "phi"], &["rs", "M2"]).unwrap();
    ch.set_range("rs", 0.5, 0.5).unwrap();
    let ch = Arc::new(ch);
    let r = ch.x("r");
    let q = Poly::one().sub(&ch.p("rs").mul(&r.pow(-1).unwrap()));
    let s = sin_of(&ch.x("zeta")).unwrap();
    let r2 = r.mul(&r);
    let frame: Vec<VectorField> =
        ch.coord_names().iter().map(|c| VectorField::partial(&ch, c).unwrap()).collect();
    let twist = AbelianTwist::canonical(&ch, vec![frame[0].clone(), frame[3].clone()], 3).unwrap();
    let mut metric = vec![vec![Poly::zero(); 4]; 4];
    metric[0][0] = q.neg();
    metric[1][1] = q.try_inv().unwrap();
    metric[2][2] = r2.clone();
    metric[3][3] = r2.mul(&s).mul(&s);
    let names = ["dt", "dr", "dzeta", "dphi"].iter().map(|s| s.to_string()).collect();
    let fb = FrameBundle::new(twist, frame, names, metric, r2.mul(&s)).unwrap();
    let mb = ModelBundle {
        id: "schwarzschild-timeangle".into(),
        frame: fb,
        nice: true,
        mass2: ch.p("M2"),
        xi: Poly::zero(),
        curvature: Poly::zero(),
        homothety: None,
        params: BTreeMap::from([("rs".to_string(), 0.5), ("M2".to_string(), 0.3)]),
    };
    let tilde = wave_operator_tilde(&mb).unwrap();
    let kg = classical_wave_operator(&mb).unwrap();
    assert_op_zero(&ch, &tilde.coeff(0).sub(&kg), "P̃_(0)");
    for n in 1..=3 {
        assert_op_zero(&ch, tilde.coeff(n), &format!("order {n}"));
    }
}

fn bumps(n: usize) -> (Bump, Bump) {
    let phi: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0, 0.3 * (i as f64 + 1.0), -0.2]).collect();
    let psi: Vec<Vec<f64>> = (0..n).map(|i| vec![0.7, -0.4, 0.1 * i as f64, 0.25]).collect();
    (Bump::new(&phi, 7), Bump::new(&psi, 7))
}

fn check_selfadjoint(id: &str, order: usize, nodes: usize) {
    let mb = model(id, order);
    let tilde = wave_operator_tilde(&mb).unwrap();
    let n = mb.chart().dim();
    let (phi, psi) = bumps(n);
    let bx = QuadBox { center: vec![1.8; n], half: vec![0.5; n] };
    for k in 0..=order {
        let (lhs, rhs) = adjoint_pairing(&mb, tilde.coeff(k), &phi, &psi, &bx, nodes).unwrap();
        let scale = lhs.norm().max(rhs.norm()).max(1e-300);
        assert!((lhs - rhs).norm() <= 1e-6 * scale, "{id} order {k}: {lhs} vs {rhs}");
    }
}

#[test]
fn tilde_operators_are_formally_selfadjoint() {
    check_selfadjoint("kappa-minkowski", 4, 16);
    check_selfadjoint("desitter-timeangle", 2, 16);
    check_selfadjoint("compact-frw", 4, 24);
}

#[test]
fn selfadjointness_detects_a_non_symmetric_operator() {
    let mb = model("kappa-minkowski", 0);
    let ch = mb.chart().clone();
    let n = ch.dim();
    let (phi, psi) = bumps(n);
    let bx = QuadBox { center: vec![1.8; n], half: vec![0.5; n] };
    let (lhs, rhs) = adjoint_pairing(&mb, &d(&ch, "r", 1), &phi, &psi, &bx, 16).unwrap();
    assert!((lhs - rhs).norm() > 1e-3 * lhs.norm().max(rhs.norm()));
}

fn assert_partials(mb: &ModelBundle, warp: &str) {
    let ch = mb.chart().clone();
    let parts = deformed_partial_derivatives(mb).unwrap();
    let theta = ch.func_of("theta", &[warp]).unwrap();
    let dtheta = theta.diff(ch.coord_id(warp).unwrap());
    let mut tt = DiffOp::zero();
    for x in ["x1", "x2", "x3"] {
        tt = tt.add(&d(&ch, x, 2));
    }
    for (mu, name) in ch.coord_names().iter().enumerate() {
        let p = &parts[mu];
        assert_eq!(*p.coeff(0), d(&ch, name, 1), "{name}");
        let first = if *name == warp { tt.left_mul(&dtheta).scale(&Cq::new(Q::from_integer(0), Q::new(1, 2))) } else { DiffOp::zero() };
        assert_op_zero(&ch, &p.coeff(1).sub(&first), &format!("∂⋆{name} order 1"));
        for n in 2..=p.order() {
            assert_op_zero(&ch, p.coeff(n), &format!("∂⋆{name} order {n}"));
        }
    }
}

#[test]
fn deformed_partials_for_warped_models() {
    assert_partials(&model("ads-rs", 3), "y");
    assert_partials(&model("z2-euclid", 3), "x4");
}

#[test]
fn deformed_partials_for_moyal_are_plain() {
    let mb = model("moyal-minkowski", 3);
    let ch = mb.chart().clone();
    for (p, name) in deformed_partial_derivatives(&mb).unwrap().iter().zip(ch.coord_names()) {
        assert_eq!(*p, LambdaSeries::constant(d(&ch, name, 1), 3));
    }
}

#[test]
fn coordinate_only_models_refuse_wave_operators() {
    for id in ["ads-rs", "z2-euclid"] {
        let mb = model(id, 1);
        assert!(matches!(wave_operator_star(&mb), Err(Error::PreconditionFailed(_))));
        assert!(matches!(wave_operator_tilde(&mb), Err(Error::PreconditionFailed(_))));
    }
}

#[test]
fn build_model_validates_input() {
    assert!(matches!(build_model("flat-torus", &BTreeMap::new(), 2), Err(Error::UnknownModel(_))));
    let bad = |k: &str, v: f64| BTreeMap::from([(k.to_string(), v)]);
    assert!(matches!(build_model("desitter-isotropic", &bad("H", -1.0), 2), Err(Error::BadParams(_))));
    assert!(matches!(build_model("schwarzschild-timeradius", &bad("rs", 2.0), 2), Err(Error::BadParams(_))));
    assert!(matches!(build_model("kappa-minkowski", &bad("omega", 1.0), 2), Err(Error::BadParams(_))));
    for id in MODEL_IDS {
        let mb = model(id, 2);
        assert_eq!(mb.id, id);
        assert_eq!(mb.frame.dim(), mb.chart().dim());
    }
}

#[test]
fn kappa_model_data() {
    let mb = model("kappa-minkowski", 2);
    let ch = mb.chart().clone();
    let r = ch.x("r");
    let gens = mb.frame.twist.gens();
    assert_eq!(gens[0], VectorField::partial(&ch, "r").unwrap().scale(&r));
    assert_eq!(gens[1], VectorField::partial(&ch, "t").unwrap());
    let s = sin_of(&ch.x("zeta")).unwrap();
    assert_eq!(mb.frame.gamma, r.mul(&r).mul(&r).mul(&s));
    assert!(deformq::ncgeo::validate_frame(&mb.frame).is_ok());
}

#[test]
fn operator_series_json_layout() {
    let mb = model("kappa-minkowski", 2);
    let v = series_to_json(&wave_operator_tilde(&mb).unwrap());
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 3);
    assert_eq!(arr[2]["order"], 2);
    let monos = arr[2]["monomials"].as_array().unwrap();
    assert!(monos.iter().any(|m| m["derivative"]["t"] == 4 && m["coefficient"] == "9/8"));
}

#[test]
fn diffop_composition_is_associative_and_leibniz() {
    let ch = Chart::new("plane", &["x", "y"], &[]).unwrap();
    let x = ch.x("x");
    let y = ch.x("y");
    let a = d(&ch, "x", 1).left_mul(&x.mul(&y));
    let b = d(&ch, "y", 2).add(&DiffOp::multiplication(x.mul(&x)));
    let c = d(&ch, "x", 1).left_mul(&y.pow(3).unwrap());
    assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
    let f = ch.func("f");
    assert_eq!(a.compose(&b).apply(&f), a.apply(&b.apply(&f)));
    assert_eq!(DiffOp::identity().compose(&a), a);
    assert_eq!(<DiffOp as CoefficientDomain>::try_inv(&DiffOp::multiplication(x.clone())), Some(DiffOp::multiplication(x.pow(-1).unwrap())));
}
