use std::collections::BTreeMap;
use std::sync::Arc;

use deformq::ncgeo::*;
use deformq::scalar::Q;
use deformq::symbolic::{sin_of, Chart, Poly};
use deformq::twist::{AbelianTwist, PSeries, VectorField};
use deformq::waveop::{build_model, ModelBundle};
use deformq::Error;

mod oracle;

use oracle::conformal::*;

fn model(id: &str, order: usize) -> ModelBundle {
    build_model(id, &BTreeMap::new(), order).unwrap()
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|a| format!("theta{a}")).collect()
}

fn diag(entries: Vec<Poly>) -> Vec<Vec<Poly>> {
    let n = entries.len();
    let mut m = vec![vec![Poly::zero(); n]; n];
    for (i, e) in entries.into_iter().enumerate() {
        m[i][i] = e;
    }
    m
}

fn spherical(order: usize) -> Arc<Chart> {
    let _ = order;
    Arc::new(Chart::new("sph", &["t", "r", "zeta", "phi"], &["H", "d", "f2"]).unwrap())
}

fn partials(ch: &Arc<Chart>) -> Vec<VectorField> {
    ch.coord_names().iter().map(|c| VectorField::partial(ch, c).unwrap()).collect()
}

fn assert_series_zero(ch: &Chart, s: &PSeries, what: &str) {
    for (n, c) in s.coeffs().iter().enumerate() {
        let (eq, _) = ch.equal_with_diagnostic(c, &Poly::zero());
        assert!(eq, "{what} at order {n}: {}", c.to_prefix());
    }
}

fn minkowski_moyal(metric: Vec<Vec<Poly>>, ch: &Arc<Chart>, order: usize) -> FrameBundle {
    let frame = partials(ch);
    let twist = AbelianTwist::canonical(ch, frame.clone(), order).unwrap();
    FrameBundle::new(twist, frame, names(4), metric, Poly::one()).unwrap()
}

#[test]
fn cosmological_basis_is_nice_for_c22() {
    let ch = spherical(2);
    let x = ch.func_of("X", &["t"]).unwrap();
    let r = ch.x("r");
    let d = partials(&ch);
    let frame = vec![d[0].scale(&x), d[1].scale(&r), d[2].clone(), d[3].clone()];
    let x1 = d[3].scale(&ch.p("d")).add(&d[1].scale(&r)).unwrap();
    let x2 = d[0].scale(&x.mul(&ch.p("f2")));
    let twist = AbelianTwist::canonical(&ch, vec![x1, x2], 2).unwrap();
    let a = ch.func_of("a", &["t"]).unwrap();
    let s = sin_of(&ch.x("zeta")).unwrap();
    let ar = a.mul(&r);
    let metric = diag(vec![x.mul(&x).neg(), ar.mul(&ar), ar.mul(&ar), ar.mul(&ar).mul(&s).mul(&s)]);
    let fb = FrameBundle::new(twist, frame, names(4), metric, Poly::one()).unwrap();
    assert!(validate_frame(&fb).is_ok());
}

#[test]
fn coordinate_basis_is_nice_for_moyal() {
    let ch = Arc::new(Chart::new("mink", &["t", "x1", "x2", "x3"], &[]).unwrap());
    let eta = diag(vec![Poly::int(-1), Poly::one(), Poly::one(), Poly::one()]);
    assert!(validate_frame(&minkowski_moyal(eta, &ch, 2)).is_ok());
}

#[test]
fn radial_partial_fails_against_dilation() {
    let ch = spherical(1);
    let d = partials(&ch);
    let r = ch.x("r");
    let twist = AbelianTwist::canonical(&ch, vec![d[1].scale(&r), d[0].clone()], 1).unwrap();
    let s = sin_of(&ch.x("zeta")).unwrap();
    let metric = diag(vec![Poly::int(-1), Poly::one(), r.mul(&r), r.mul(&r).mul(&s).mul(&s)]);
    let fb = FrameBundle::new(twist, d.clone(), names(4), metric, Poly::one()).unwrap();
    match validate_frame(&fb) {
        Err(FrameWitness::Twist { alpha, a, bracket }) => {
            assert_eq!((alpha, a), (0, 1));
            assert_eq!(bracket, d[1].scale(&Poly::int(-1)));
        }
        other => panic!("expected a twist witness, got {other:?}"),
    }
}

#[test]
fn flat_metric_has_no_connection_or_curvature() {
    let ch = Arc::new(Chart::new("mink", &["t", "x1", "x2", "x3"], &[]).unwrap());
    let eta = diag(vec![Poly::int(-1), Poly::one(), Poly::one(), Poly::one()]);
    let geo = geometry_star(&minkowski_moyal(eta, &ch, 3)).unwrap();
    for (name, t) in geo.named() {
        assert!(t.is_zero(), "{name}");
    }
    assert!(geo.scalar.is_zero());
}

#[test]
fn frame_bundle_rejects_bad_metrics() {
    let ch = Arc::new(Chart::new("mink", &["t", "x1"], &[]).unwrap());
    let frame = partials(&ch);
    let twist = AbelianTwist::canonical(&ch, frame.clone(), 1).unwrap();
    let asym = vec![vec![Poly::int(-1), ch.x("t")], vec![Poly::zero(), Poly::one()]];
    assert!(FrameBundle::new(twist.clone(), frame.clone(), names(2), asym, Poly::one()).is_err());
    let complex = diag(vec![Poly::int(-1), Poly::i()]);
    assert!(FrameBundle::new(twist.clone(), frame.clone(), names(2), complex, Poly::one()).is_err());
    let degenerate = diag(vec![Poly::int(-1), Poly::zero()]);
    assert!(FrameBundle::new(twist, frame, names(2), degenerate, Poly::one()).is_err());
}

#[test]
fn kappa_minkowski_geometry_is_classical() {
    let mb = model("kappa-minkowski", 3);
    let report = check_killing_reduction(&mb.frame, &[]).unwrap();
    assert!(report.all_vanish(), "{:?}", report.first_nonzero);
    assert!(report.classical_agrees);
    let geo = geometry_star(&mb.frame).unwrap();
    assert!(!geo.christoffel.is_zero());
    assert!(geo.riemann.is_zero());
}

#[test]
fn schwarzschild_time_radius_reduces_to_classical() {
    let mb = model("schwarzschild-timeradius", 3);
    let report = check_killing_reduction(&mb.frame, &[]).unwrap();
    assert!(report.all_vanish(), "{:?}", report.first_nonzero);
    assert!(report.classical_agrees);
    let ein = einstein_star(&mb.frame).unwrap();
    for i in ein.indices() {
        assert_series_zero(mb.chart(), ein.get(&i), "vacuum G");
    }
}

fn assert_de_sitter_einstein(mb: &ModelBundle) {
    let ch = mb.chart().clone();
    let ein = einstein_star(&mb.frame).unwrap();
    let h = ch.p("H");
    let lam = h.mul(&h).scale_q(&Q::from_integer(3));
    for i in ein.indices() {
        let target = PSeries::constant(lam.mul(&mb.frame.metric[i[0]][i[1]]), ein.order());
        assert_series_zero(&ch, &ein.get(&i).add(&target), &format!("G + Λg {:?}", i));
    }
}

#[test]
fn de_sitter_with_killing_twists_solves_einstein_with_lambda() {
    for id in ["desitter-timeangle", "desitter-angleradius"] {
        let mb = model(id, 3);
        let report = check_killing_reduction(&mb.frame, &[]).unwrap();
        assert!(report.all_vanish() && report.classical_agrees, "{id}");
        assert_de_sitter_einstein(&mb);
    }
}

#[test]
fn isotropic_de_sitter_is_exact_without_a_killing_generator() {
    let mb = model("desitter-isotropic", 3);
    assert!(matches!(check_killing_reduction(&mb.frame, &[]), Err(Error::PreconditionFailed(_))));
    let geo = geometry_star(&mb.frame).unwrap();
    let report = correction_report(&mb.frame, &geo).unwrap();
    assert!(report.all_vanish(), "{:?}", report.first_nonzero);
    assert_de_sitter_einstein(&mb);
}

fn generic_frw_with_kappa_twist(order: usize) -> FrameBundle {
    let ch = spherical(order);
    let d = partials(&ch);
    let r = ch.x("r");
    let a = ch.func_of("a", &["t"]).unwrap();
    let s = sin_of(&ch.x("zeta")).unwrap();
    let ar2 = a.mul(&a).mul(&r).mul(&r);
    let frame = vec![d[0].clone(), d[1].scale(&r), d[2].clone(), d[3].clone()];
    let twist = AbelianTwist::canonical(&ch, vec![frame[1].clone(), frame[0].clone()], order).unwrap();
    let metric = diag(vec![Poly::int(-1), ar2.clone(), ar2.clone(), ar2.mul(&s).mul(&s)]);
    let gamma = a.mul(&a).mul(&a).mul(&r).mul(&r).mul(&r).mul(&s);
    FrameBundle::new(twist, frame, names(4), metric, gamma).unwrap()
}

#[test]
fn generic_non_killing_twist_deforms_the_geometry() {
    let fb = generic_frw_with_kappa_twist(2);
    assert!(matches!(check_killing_reduction(&fb, &[]), Err(Error::PreconditionFailed(_))));
    let geo = geometry_star(&fb).unwrap();
    let report = correction_report(&fb, &geo).unwrap();
    assert!(report.classical_agrees);
    assert!(geo.einstein.nonzero_corrections().iter().any(|(_, n)| *n == 2));
}

#[test]
fn levi_civita_identities_hold_order_by_order() {
    let fb = generic_frw_with_kappa_twist(2);
    let geo = geometry_star(&fb).unwrap();
    assert!(geo.torsion.is_zero());
    let comp = metric_compatibility(&fb, &geo.christoffel);
    for i in comp.indices() {
        assert_series_zero(fb.chart(), comp.get(&i), &format!("compatibility {i:?}"));
    }
    let n = fb.dim();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    assert_eq!(*geo.riemann.get(&[a, b, c, d]), geo.riemann.get(&[b, a, c, d]).neg());
                }
            }
        }
    }
}

#[test]
fn missing_killing_direction_in_matter_is_reported() {
    let mb = model("schwarzschild-timeradius", 1);
    let ch = mb.chart().clone();
    let matter = ch.func_of("rho", &["t", "r"]).unwrap();
    match check_killing_reduction(&mb.frame, &[matter]) {
        Err(Error::PreconditionFailed(msg)) => assert!(msg.contains("X_")),
        other => panic!("expected PreconditionFailed, got {other:?}"),
    }
}

#[test]
fn curvature_json_is_keyed_by_indices() {
    let mb = model("desitter-timeangle", 1);
    let v = geometry_star(&mb.frame).unwrap().to_json();
    let ric = &v["ricci"];
    assert!(ric["0,0"].is_array());
    assert_eq!(ric["0,0"].as_array().unwrap().len(), 2);
}

#[test]
fn conformally_flat_moyal_christoffel_and_ricci() {
    let cm = conformal_moyal(2);
    let geo = geometry_star(&cm.fb).unwrap();
    for m in 0..N {
        for n in 0..N {
            for r in 0..N {
                let d = geo.christoffel.get(&[m, n, r]).sub(&cm.christoffel(m, n, r));
                assert_series_zero(&cm.ch, &d, &format!("Γ {m}{n}{r}"));
            }
            assert_series_zero(&cm.ch, &geo.ricci.get(&[m, n]).sub(&cm.ricci(m, n)), &format!("Ric {m}{n}"));
        }
    }
    assert_series_zero(&cm.ch, &geo.scalar.sub(&cm.scalar()), "scalar curvature");
}

#[test]
fn conformally_flat_moyal_einstein_hermiticity() {
    let cm = conformal_moyal(2);
    let geo = geometry_star(&cm.fb).unwrap();
    let ctx = &cm.ctx;
    let inv = ctx.star_inverse(&cm.phi).unwrap();
    let phis = ctx.series(cm.phi.clone());
    let mut deformed = false;
    for m in 0..N {
        for n in 0..N {
            let lhs = geo.einstein.get(&[m, n]).map(|p| p.conj());
            let rhs = ctx.star_series(&ctx.star_series(&phis, geo.einstein.get(&[n, m])), &inv);
            assert_series_zero(&cm.ch, &lhs.sub(&rhs), &format!("G* {m}{n}"));
            deformed |= !geo.einstein.get(&[m, n]).coeff(1).is_zero();
        }
    }
    assert!(deformed);
}

#[test]
fn conformally_flat_moyal_inverse_metric_is_not_covariantly_constant() {
    let cm = conformal_moyal(2);
    let geo = geometry_star(&cm.fb).unwrap();
    let ginv = star_inverse_metric(&cm.fb).unwrap();
    let xs = cm.ch.coord_ids();
    let ctx = &cm.ctx;
    let mut survivor = false;
    for m in 0..N {
        for n in 0..N {
            for r in 0..N {
                let mut s = dser(&ginv[n][r], xs[m]);
                for t in 0..N {
                    s = s.add(&ctx.star_series(&ginv[t][r], geo.christoffel.get(&[m, t, n])));
                    s = s.add(&ctx.star_series(&ginv[n][t], geo.christoffel.get(&[m, t, r])));
                }
                assert!(s.coeff(0).is_zero(), "classical part must vanish");
                survivor |= s.coeffs()[1..].iter().any(|c| !c.is_zero());
            }
        }
    }
    assert!(survivor);
}
