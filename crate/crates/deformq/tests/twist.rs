use std::sync::Arc;

use deformq::scalar::{q, qi, Cq};
use deformq::symbolic::{cos_of, exp_of, sin_of, Chart, Poly};
use deformq::twist::{identity_matrix, lie_bracket, AbelianTwist, PSeries, StarContext, VectorField};
use deformq::Error;
use proptest::prelude::*;

fn moyal(order: usize) -> StarContext {
    let ch = Arc::new(Chart::new("moyal2", &["x1", "x2"], &[]).unwrap());
    let gens = vec![VectorField::partial(&ch, "x1").unwrap(), VectorField::partial(&ch, "x2").unwrap()];
    StarContext::new(AbelianTwist::canonical(&ch, gens, order).unwrap())
}

/// X₁ = r∂_r, X₂ = ∂_t on (t, r).
fn kappa(order: usize) -> StarContext {
    let ch = Arc::new(Chart::new("kappa2", &["t", "r"], &[]).unwrap());
    let r = ch.x("r");
    let gens = vec![VectorField::from_pairs(&ch, &[("r", r)]).unwrap(), VectorField::partial(&ch, "t").unwrap()];
    StarContext::new(AbelianTwist::canonical(&ch, gens, order).unwrap())
}

fn ilam(c: Cq) -> Poly {
    Poly::constant(c)
}

#[test]
fn bracket_examples() {
    let ch = Arc::new(Chart::new("tline", &["t"], &[]).unwrap());
    let dt = VectorField::partial(&ch, "t").unwrap();
    let tdt = VectorField::from_pairs(&ch, &[("t", ch.x("t"))]).unwrap();
    assert_eq!(lie_bracket(&dt, &tdt).unwrap(), dt);

    let ch = Arc::new(Chart::new("e3", &["x1", "x2", "x3"], &[]).unwrap());
    let x = ["x1", "x2", "x3"];
    let p: Vec<VectorField> = x.iter().map(|n| VectorField::partial(&ch, n).unwrap()).collect();
    let eps = |i: usize, j: usize, k: usize| -> i128 {
        if i == j || j == k || i == k {
            0
        } else if (i, j, k) == (0, 1, 2) || (i, j, k) == (1, 2, 0) || (i, j, k) == (2, 0, 1) {
            1
        } else {
            -1
        }
    };
    let l: Vec<VectorField> = (0..3)
        .map(|i| {
            let mut pairs = Vec::new();
            for j in 0..3 {
                for k in 0..3 {
                    let e = eps(i, j, k);
                    if e != 0 {
                        pairs.push((x[k], ch.x(x[j]).scale_q(&qi(e))));
                    }
                }
            }
            VectorField::from_pairs(&ch, &pairs).unwrap()
        })
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            let mut want = VectorField::zero(&ch);
            for k in 0..3 {
                want = want.add(&p[k].scale(&Poly::int(-eps(i, j, k)))).unwrap();
            }
            assert_eq!(lie_bracket(&p[i], &l[j]).unwrap(), want);
        }
    }
}

#[test]
fn chart_mismatch() {
    let a = Arc::new(Chart::new("a", &["t"], &[]).unwrap());
    let b = Arc::new(Chart::new("b", &["t"], &[]).unwrap());
    let va = VectorField::partial(&a, "t").unwrap();
    let vb = VectorField::partial(&b, "t").unwrap();
    assert_eq!(lie_bracket(&va, &vb), Err(Error::ChartMismatch));
}

#[test]
fn c22_generators_commute() {
    let ch = Arc::new(Chart::new("sph", &["t", "r", "zeta", "phi"], &["d", "f1"]).unwrap());
    let x1 = VectorField::from_pairs(&ch, &[("phi", ch.p("d")), ("r", ch.p("f1").mul(&ch.x("r")))]).unwrap();
    // X(t): an opaque function of t alone
    let xfun = Poly::atom_pow(deformq::symbolic::atom::func("X", &[ch.coord_id("t").unwrap()]), 1);
    let x2 = VectorField::from_pairs(&ch, &[("t", xfun)]).unwrap();
    assert!(lie_bracket(&x1, &x2).unwrap().is_zero());
}

#[test]
fn noncommuting_generators_rejected() {
    let ch = Arc::new(Chart::new("tline2", &["t", "x"], &[]).unwrap());
    let gens = vec![
        VectorField::partial(&ch, "t").unwrap(),
        VectorField::from_pairs(&ch, &[("t", ch.x("t"))]).unwrap(),
    ];
    assert!(matches!(AbelianTwist::canonical(&ch, gens, 2), Err(Error::ConstraintViolated(_))));
}

#[test]
fn trivial_twist_is_pointwise() {
    let ch = Arc::new(Chart::new("moyal2", &["x1", "x2"], &[]).unwrap());
    let ctx = StarContext::new(AbelianTwist::trivial(&ch, 3));
    let h = ch.func("h");
    let k = sin_of(&ch.x("x1")).unwrap();
    let s = ctx.star(&h, &k);
    assert_eq!(s, PSeries::constant(h.mul(&k), 3));
}

#[test]
fn moyal_coordinate_product() {
    let ctx = moyal(4);
    let ch = ctx.chart().clone();
    let (x1, x2) = (ch.x("x1"), ch.x("x2"));
    // exp(−(iλ/2)Θ∂⊗∂) on linear functions stops at O(λ): (i/2)Θ^{12}
    let mut want = PSeries::constant(x1.mul(&x2), 4);
    want.set_coeff(1, ilam(Cq::new(qi(0), q(1, 2))));
    assert_eq!(ctx.star(&x1, &x2), want);
    let c = ctx.commutator(&x1, &x2);
    assert_eq!(c, PSeries::monomial(Poly::i(), 1, 4));
}

#[test]
fn kappa_power_identity() {
    let ctx = kappa(4);
    let ch = ctx.chart().clone();
    let h = ch.func("h");
    for n in [-2i32, 1, 3] {
        let rn = ch.x("r").pow(n).unwrap();
        let s = ctx.star(&rn, &h);
        // rⁿ Σ_m ((in/2)∂_t)^m h / m!
        let mut dh = h.clone();
        let mut fact = 1i128;
        for m in 0..=4usize {
            if m > 0 {
                fact *= m as i128;
                dh = ch.differentiate(&dh, "t").unwrap();
            }
            let c = Cq::new(qi(0), q(n as i128, 2)).pow(m as u32).scale(&q(1, fact));
            assert_eq!(s.coeff(m), &rn.mul(&dh).scale(&c), "n={n} m={m}");
        }
    }
}

#[test]
fn kappa_coordinate_commutator_is_exact() {
    let ctx = kappa(4);
    let ch = ctx.chart().clone();
    let c = ctx.commutator(&ch.x("t"), &ch.x("r"));
    let want = PSeries::monomial(ch.x("r").scale(&Cq::new(qi(0), qi(-1))), 1, 4);
    assert_eq!(c, want);
}

#[test]
fn star_inverse_examples() {
    let ctx = moyal(4);
    let ch = ctx.chart().clone();
    assert_eq!(ctx.star_inverse(&Poly::one()).unwrap(), PSeries::one(4));

    let inv = kappa(4).star_inverse(&Poly::int(7)).unwrap();
    assert_eq!(inv, PSeries::constant(Poly::rational(q(1, 7)), 4));

    let phi = ch.func("Phi");
    let inv = ctx.star_inverse(&phi).unwrap();
    assert_eq!(ctx.star_series(&ctx.series(phi.clone()), &inv), PSeries::one(4));
    assert_eq!(ctx.star_series(&inv, &ctx.series(phi.clone())), PSeries::one(4));
    assert!(inv.coeff(1).is_zero());
    assert!(!inv.coeff(2).is_zero());
    assert_eq!(ctx.star_inverse(&Poly::zero()), Err(Error::NotInvertible));
}

#[test]
fn invariant_inverse_collapses() {
    // h(ζ) is invariant under ∂_t and r∂_r
    let ch = Arc::new(Chart::new("kz", &["t", "r", "z"], &[]).unwrap());
    let gens = vec![
        VectorField::from_pairs(&ch, &[("r", ch.x("r"))]).unwrap(),
        VectorField::partial(&ch, "t").unwrap(),
    ];
    let ctx = StarContext::new(AbelianTwist::canonical(&ch, gens, 3).unwrap());
    let h = sin_of(&ch.x("z")).unwrap();
    let inv = ctx.star_inverse(&h).unwrap();
    assert_eq!(inv, PSeries::constant(h.pow(-1).unwrap(), 3));
}

#[test]
fn matrix_inverses() {
    let ctx = moyal(3);
    let ch = ctx.chart().clone();
    let id = identity_matrix(2, 3);
    assert_eq!(ctx.star_inverse_matrix(&id).unwrap(), id);

    let phi = ch.func("Phi");
    let eta = [-1i128, 1];
    let g: Vec<Vec<PSeries>> = (0..2)
        .map(|i| (0..2).map(|j| if i == j { ctx.series(phi.scale_q(&qi(eta[i]))) } else { PSeries::zero(3) }).collect())
        .collect();
    let ginv = ctx.star_inverse_matrix(&g).unwrap();
    let pinv = ctx.star_inverse(&phi).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { pinv.scale(&qi(eta[i])) } else { PSeries::zero(3) };
            assert_eq!(ginv[i][j], want);
        }
    }
    assert_eq!(ctx.star_matrix_mul(&g, &ginv), id);
}

#[test]
fn invariant_diagonal_metric_inverts_pointwise() {
    let ch = Arc::new(Chart::new("kz2", &["t", "r", "z"], &[]).unwrap());
    let gens = vec![
        VectorField::from_pairs(&ch, &[("r", ch.x("r"))]).unwrap(),
        VectorField::partial(&ch, "t").unwrap(),
    ];
    let ctx = StarContext::new(AbelianTwist::canonical(&ch, gens, 2).unwrap());
    let s = sin_of(&ch.x("z")).unwrap();
    let diag = [Poly::int(-1), s.clone(), s.mul(&s)];
    let g: Vec<Vec<PSeries>> = (0..3)
        .map(|i| (0..3).map(|j| if i == j { ctx.series(diag[i].clone()) } else { PSeries::zero(2) }).collect())
        .collect();
    let ginv = ctx.star_inverse_matrix(&g).unwrap();
    for i in 0..3 {
        assert_eq!(ginv[i][i], ctx.series(diag[i].pow(-1).unwrap()));
    }
}

fn arb_fn(ch: Arc<Chart>) -> impl Strategy<Value = Poly> {
    let names = ch.coord_names().iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let a = ch.x(&names[0]);
    let b = ch.x(&names[1]);
    let leaves = vec![
        a.clone(),
        b.clone(),
        b.pow(-1).unwrap(),
        exp_of(&a).unwrap(),
        sin_of(&a).unwrap(),
        cos_of(&b).unwrap(),
        ch.func("u"),
        Poly::i(),
    ];
    let leaf = (0..leaves.len(), 1i128..3).prop_map(move |(i, k)| leaves[i].scale_q(&qi(k)));
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| x.add(&y)),
            (inner.clone(), inner).prop_map(|(x, y)| x.mul(&y)),
        ]
    })
}

fn src() -> Arc<Chart> {
    moyal(1).chart().clone()
}

/// Renames the moyal coordinates to the coordinates of `ctx`'s chart.
fn moved(ctx: &StarContext, p: &Poly) -> Poly {
    let dst = ctx.chart();
    let names = dst.coord_names();
    let bind = vec![("x1", dst.x(names[0])), ("x2", dst.x(names[1]))];
    src().substitute(p, &bind).unwrap()
}

fn contexts() -> Vec<StarContext> {
    vec![moyal(3), kappa(3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn associativity(which in 0usize..2, h in arb_fn(src()), k in arb_fn(src()), l in arb_fn(src())) {
        let ctx = &contexts()[which];
        let (h, k, l) = (moved(ctx, &h), moved(ctx, &k), moved(ctx, &l));
        let lhs = ctx.star_series(&ctx.star(&h, &k), &ctx.series(l.clone()));
        let rhs = ctx.star_series(&ctx.series(h.clone()), &ctx.star(&k, &l));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn unit_braiding_hermiticity(which in 0usize..2, h in arb_fn(src()), k in arb_fn(src())) {
        let ctx = &contexts()[which];
        let (h, k) = (moved(ctx, &h), moved(ctx, &k));
        let one = Poly::one();
        prop_assert_eq!(ctx.star(&one, &h), ctx.series(h.clone()));
        prop_assert_eq!(ctx.star(&h, &one), ctx.series(h.clone()));
        prop_assert_eq!(ctx.braided(&h, &k), ctx.star(&h, &k));
        let lhs = ctx.star(&h, &k).map(|p| p.conj());
        let rhs = ctx.star(&k.conj(), &h.conj());
        prop_assert_eq!(lhs, rhs);
        prop_assert!(ctx.commutator(&h, &h).is_zero());
    }

    #[test]
    fn invariants_collapse(a in 1i128..5, b in -3i128..3) {
        let ch = Arc::new(Chart::new("kz3", &["t", "r", "z"], &[]).unwrap());
        let gens = vec![
            VectorField::from_pairs(&ch, &[("r", ch.x("r"))]).unwrap(),
            VectorField::partial(&ch, "t").unwrap(),
        ];
        let ctx = StarContext::new(AbelianTwist::canonical(&ch, gens, 3).unwrap());
        let z = ch.x("z");
        let h = z.scale_q(&qi(a)).add(&sin_of(&z).unwrap());
        let k = cos_of(&z).unwrap().scale_q(&qi(b)).add(&Poly::one());
        let s = ctx.star(&h, &k);
        prop_assert_eq!(s, ctx.series(h.mul(&k)));
    }
}
