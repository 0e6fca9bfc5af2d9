//! Deformed scalar wave operators P⋆ and P̃⋆ in a nice basis, their closed forms
//! for the catalog models, and deformed partial derivatives in a coordinate basis.

pub mod diffop;
pub mod models;

use std::collections::HashMap;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

pub use diffop::{cosh_series, exp_series, series_to_json, DiffOp, DiffOpSeries, MultiIndex};
pub use models::{build_model, ModelBundle, MODEL_IDS};

use crate::error::{Error, Result};
use crate::exec;
use crate::ncgeo::star_inverse_metric;
use crate::scalar::{Cq, Q};
use crate::series::LambdaSeries;
use crate::symbolic::{cos_of, sin_of, AtomId, Chart, Poly};
use crate::twist::{classical_inverse, lie_bracket, PSeries, StarContext, VectorField};

/// Name of the opaque test field the operators are read off from.
pub const PHI: &str = "Phi";

fn test_field(ch: &Chart) -> Poly {
    ch.func(PHI)
}

fn extract_series(s: &PSeries) -> Result<DiffOpSeries> {
    let ops = exec::map(s.coeffs(), |p| DiffOp::extract(p, PHI));
    Ok(LambdaSeries::new(ops.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Applies an operator series to a function, order by order.
pub fn apply_series(d: &DiffOpSeries, h: &Poly) -> PSeries {
    d.map(|op| op.apply(h))
}

fn require_nice(mb: &ModelBundle) -> Result<()> {
    if mb.nice {
        Ok(())
    } else {
        Err(Error::PreconditionFailed(format!("{} has no nice basis; use deformed_partial_derivatives", mb.id)))
    }
}

/// ½(e_a(g^{ab}⋆e_bΦ⋆γ) + e_a(γ⋆e_bΦ⋆g^{ba}) − m⋆Φ⋆γ − γ⋆Φ⋆m), m = M² + ξ𝔯.
fn numerator(mb: &ModelBundle) -> Result<PSeries> {
    let fb = &mb.frame;
    let ctx = fb.context();
    let n = fb.dim();
    let ginv = star_inverse_metric(fb)?;
    let phi = test_field(fb.chart());
    let gamma = ctx.series(fb.gamma.clone());
    let ephi: Vec<PSeries> = fb.frame.iter().map(|e| ctx.series(e.apply(&phi))).collect();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|(a, b)| !ginv[*a][*b].is_zero()).collect();
    let parts = exec::map(&pairs, |(a, b)| {
        let t1 = ctx.star_series(&ctx.star_series(&ginv[*a][*b], &ephi[*b]), &gamma);
        let t2 = ctx.star_series(&ctx.star_series(&gamma, &ephi[*b]), &ginv[*b][*a]);
        t1.add(&t2).map(|p| fb.frame[*a].apply(p))
    });
    let mut total = PSeries::zero(ctx.order());
    for p in &parts {
        total = total.add(p);
    }
    let m = mb.potential();
    if !m.is_zero() {
        let ms = ctx.series(m);
        let ps = ctx.series(phi);
        let mass = ctx
            .star_series(&ctx.star_series(&ms, &ps), &gamma)
            .add(&ctx.star_series(&ctx.star_series(&gamma, &ps), &ms));
        total = total.sub(&mass);
    }
    Ok(total.scale(&Q::new(1, 2)))
}

/// P⋆ = numerator ⋆ γ^{−1⋆}.
pub fn wave_operator_star(mb: &ModelBundle) -> Result<DiffOpSeries> {
    require_nice(mb)?;
    let ctx = mb.frame.context();
    let ginv = ctx.star_inverse(&mb.frame.gamma).map_err(|_| Error::NotInvertible)?;
    extract_series(&ctx.star_series(&numerator(mb)?, &ginv))
}

/// P̃⋆ = numerator · γ⁻¹ with the classical inverse.
pub fn wave_operator_tilde(mb: &ModelBundle) -> Result<DiffOpSeries> {
    require_nice(mb)?;
    let ginv = mb.frame.gamma.try_inv().map_err(|_| Error::NotInvertible)?;
    extract_series(&numerator(mb)?.map(|p| p.mul(&ginv)))
}

/// γ·(P̃⋆Φ) − (P⋆Φ)⋆γ for a given field; vanishes order by order.
pub fn intertwining_defect(mb: &ModelBundle, star: &DiffOpSeries, tilde: &DiffOpSeries, phi: &Poly) -> PSeries {
    let ctx = mb.frame.context();
    let lhs = apply_series(tilde, phi).map(|p| mb.frame.gamma.mul(p));
    let rhs = ctx.star_series(&apply_series(star, phi), &ctx.series(mb.frame.gamma.clone()));
    lhs.sub(&rhs)
}

fn frame_matrix(mb: &ModelBundle) -> Vec<Vec<Poly>> {
    mb.frame.frame.iter().map(|e| e.comps().to_vec()).collect()
}

/// Metric components g_μν in the chart's coordinate basis, from the frame data.
pub fn coordinate_metric(mb: &ModelBundle) -> Result<Vec<Vec<Poly>>> {
    let e = frame_matrix(mb);
    // θ^a_μ: inverse of E_a^μ
    let theta = classical_inverse(&e)?;
    let n = e.len();
    let g = &mb.frame.metric;
    let mut out = vec![vec![Poly::zero(); n]; n];
    for mu in 0..n {
        for nu in 0..n {
            let mut acc = Poly::zero();
            for a in 0..n {
                for b in 0..n {
                    if g[a][b].is_zero() || theta[mu][a].is_zero() || theta[nu][b].is_zero() {
                        continue;
                    }
                    acc = acc.add(&theta[mu][a].mul(&theta[nu][b]).mul(&g[a][b]));
                }
            }
            out[mu][nu] = acc;
        }
    }
    Ok(out)
}

/// Density of vol_g in the chart coordinates: γ · det θ.
pub fn coordinate_density(mb: &ModelBundle) -> Result<Poly> {
    let e = frame_matrix(mb);
    let det = crate::twist::determinant(&e);
    Ok(mb.frame.gamma.mul(&det.try_inv()?))
}

/// g^{μν}(∂_μ∂_ν − Γ^ρ_μν ∂_ρ) − M² − ξ𝔯 from the coordinate metric, without any twist data.
pub fn classical_wave_operator(mb: &ModelBundle) -> Result<DiffOp> {
    let ch = mb.chart();
    let xs = ch.coord_ids();
    let n = xs.len();
    let g = coordinate_metric(mb)?;
    let ginv = classical_inverse(&g)?;
    let dg: Vec<Vec<Vec<Poly>>> =
        (0..n).map(|s| (0..n).map(|a| (0..n).map(|b| g[a][b].diff(xs[s])).collect()).collect()).collect();
    let mut op = DiffOp::multiplication(mb.potential().neg());
    for mu in 0..n {
        for nu in 0..n {
            let gi = &ginv[mu][nu];
            if gi.is_zero() {
                continue;
            }
            op = op.add(&DiffOp::monomial(&[(xs[mu], 1), (xs[nu], 1)], gi.clone()));
            for rho in 0..n {
                let mut chr = Poly::zero();
                for s in 0..n {
                    if ginv[rho][s].is_zero() {
                        continue;
                    }
                    let c = dg[mu][nu][s].add(&dg[nu][mu][s]).sub(&dg[s][mu][nu]);
                    chr = chr.add(&ginv[rho][s].mul(&c));
                }
                let coeff = gi.mul(&chr).scale(&Cq::frac(-1, 2));
                op = op.add(&DiffOp::monomial(&[(xs[rho], 1)], coeff));
            }
        }
    }
    Ok(op)
}

/// Vector field as a first-order operator.
pub fn vector_operator(v: &VectorField) -> DiffOp {
    let xs = v.chart.coord_ids();
    v.comps()
        .iter()
        .zip(xs)
        .fold(DiffOp::zero(), |acc, (c, x)| acc.add(&DiffOp::monomial(&[(x, 1)], c.clone())))
}

fn spherical_laplacian(ch: &Chart) -> Result<(DiffOp, DiffOp)> {
    let r = ch.coord_id("r")?;
    let z = ch.coord_id("zeta")?;
    let p = ch.coord_id("phi")?;
    let zeta = ch.x("zeta");
    let sinv = sin_of(&zeta)?.pow(-1)?;
    let sphere = DiffOp::monomial(&[(z, 2)], Poly::one())
        .add(&DiffOp::monomial(&[(z, 1)], cos_of(&zeta)?.mul(&sinv)))
        .add(&DiffOp::monomial(&[(p, 2)], sinv.mul(&sinv)));
    let rinv = ch.x("r").pow(-1)?;
    let full = DiffOp::monomial(&[(r, 2)], Poly::one())
        .add(&DiffOp::monomial(&[(r, 1)], rinv.scale(&Cq::int(2))))
        .add(&sphere.left_mul(&rinv.mul(&rinv)));
    Ok((full, sphere))
}

fn shift(d: &DiffOp, a: Q, order: usize) -> DiffOpSeries {
    exp_series(d, &Cq::new(Q::from_integer(0), a), order)
}

fn cosh_i(d: &DiffOp, a: Q, order: usize) -> DiffOpSeries {
    cosh_series(d, &Cq::new(Q::from_integer(0), a), order)
}

fn constant_series(d: DiffOp, order: usize) -> DiffOpSeries {
    LambdaSeries::constant(d, order)
}

/// Closed forms of P⋆ (`tilde = false`) or P̃⋆ (`tilde = true`) for the catalog models,
/// expanded to the model's order. `None` when no closed form is catalogued.
pub fn closed_form(mb: &ModelBundle, tilde: bool) -> Result<Option<DiffOpSeries>> {
    let ch = mb.chart().clone();
    let order = mb.order();
    let int = |n: i128| Q::from_integer(n);
    match mb.id.as_str() {
        "moyal-minkowski" => Ok(Some(constant_series(classical_wave_operator(mb)?, order))),
        "kappa-minkowski" | "desitter-isotropic" | "desitter-timeangle" | "desitter-angleradius" => {
            let t = ch.coord_id("t")?;
            let h = ch.p("H");
            let dt = DiffOp::partial(t);
            let dphi = DiffOp::partial(ch.coord_id("phi")?);
            let (lap, _) = spherical_laplacian(&ch)?;
            let (d, a, b) = match mb.id.as_str() {
                "kappa-minkowski" => {
                    (dt.clone(), DiffOp::monomial(&[(t, 2)], Poly::one()).add(&DiffOp::multiplication(mb.mass2.clone())), lap)
                }
                id => {
                    let d = match id {
                        "desitter-isotropic" => {
                            let r = ch.coord_id("r")?;
                            dt.sub(&DiffOp::monomial(&[(r, 1)], h.mul(&ch.x("r"))))
                        }
                        "desitter-timeangle" => dphi.left_mul(&h.neg()),
                        _ => dphi.neg(),
                    };
                    let a = DiffOp::monomial(&[(t, 2)], Poly::one())
                        .add(&DiffOp::monomial(&[(t, 1)], h.scale(&Cq::int(3))))
                        .add(&DiffOp::multiplication(mb.mass2.clone()));
                    let e = crate::symbolic::exp_of(&h.mul(&ch.x("t")).scale_q(&int(-2)))?;
                    (d, a, lap.left_mul(&e))
                }
            };
            let sa = constant_series(a, order);
            let sb = constant_series(b, order);
            let one = DiffOpSeries::one(order);
            let out = if tilde {
                cosh_i(&d, Q::new(3, 2), order).neg().mul(&sa).add(&cosh_i(&d, Q::new(5, 2), order).mul(&sb))
            } else {
                let first = one.add(&shift(&d, int(3), order)).mul(&sa).scale(&Q::new(-1, 2));
                let second = shift(&d, int(-1), order).add(&shift(&d, int(4), order)).mul(&sb).scale(&Q::new(1, 2));
                first.add(&second)
            };
            Ok(Some(out))
        }
        "schwarzschild-timeradius" => schwarzschild_closed_form(mb, tilde).map(Some),
        "homothetic-frw" | "compact-frw" if tilde => {
            let c = mb.homothety.unwrap_or_else(|| int(0));
            let n = int(mb.frame.dim() as i128);
            let x1 = vector_operator(&mb.frame.twist.gens()[0]);
            let a = c * (n + int(2)) / int(4);
            Ok(Some(cosh_i(&x1, a, order).mul(&constant_series(classical_wave_operator(mb)?, order))))
        }
        _ => Ok(None),
    }
}

/// The time-radius Schwarzschild operator with the Q and Q⁻¹ ⋆-products evaluated by the
/// star product itself, everything else by shift operators in ∂_t.
fn schwarzschild_closed_form(mb: &ModelBundle, tilde: bool) -> Result<DiffOpSeries> {
    let ch = mb.chart().clone();
    let order = mb.order();
    let ctx: StarContext = mb.frame.context();
    let phi = test_field(&ch);
    let t = ch.coord_id("t")?;
    let r = ch.coord_id("r")?;
    let rr = ch.x("r");
    let q = Poly::one().sub(&ch.p("rs").mul(&rr.pow(-1)?));
    let qinv = q.try_inv()?;
    let dt = DiffOp::partial(t);
    let int = |n: i128| Q::from_integer(n);
    let h = |n: i128| if tilde { Q::new(n, 2) } else { int(n) };
    let op = |d: DiffOp| constant_series(d, order);
    let dt2 = DiffOp::monomial(&[(t, 2)], Poly::one());
    let dr = DiffOp::partial(r);
    let (_, sphere) = spherical_laplacian(&ch)?;
    let qs = ctx.series(q);
    let qis = ctx.series(qinv);
    // time part
    let (sa, sb) = if tilde { (h(3), h(-3)) } else { (int(0), int(-3)) };
    let left = apply_series(&shift(&dt, sa, order).mul(&op(dt2.clone())), &phi);
    let right = apply_series(&shift(&dt, sb, order).mul(&op(dt2)), &phi);
    let time = ctx.star_series(&qis, &left).add(&ctx.star_series(&right, &qis)).scale(&Q::new(-1, 2));
    // mass part
    let mass_op = if tilde {
        cosh_i(&dt, h(3), order).map(|d| d.left_mul(&mb.mass2))
    } else {
        DiffOpSeries::one(order).add(&shift(&dt, int(-3), order)).map(|d| d.left_mul(&mb.mass2)).scale(&Q::new(1, 2))
    };
    let mass = apply_series(&mass_op, &phi);
    // radial part
    let (ra, rb) = if tilde { (h(5), h(-5)) } else { (int(1), int(-4)) };
    let left = apply_series(&shift(&dt, ra, order).mul(&op(dr.clone())), &phi);
    let right = apply_series(&shift(&dt, rb, order).mul(&op(dr.clone())), &phi);
    let r2 = rr.mul(&rr);
    let r2inv = r2.try_inv()?;
    let inner = ctx.star_series(&qs, &left).add(&ctx.star_series(&right, &qs)).map(|p| r2.mul(p));
    let radial = inner.map(|p| dr.apply(p).mul(&r2inv)).scale(&Q::new(1, 2));
    // angular part
    let ang_op = if tilde {
        cosh_i(&dt, h(5), order)
    } else {
        shift(&dt, int(1), order).add(&shift(&dt, int(-4), order)).scale(&Q::new(1, 2))
    };
    let ang = apply_series(&ang_op.mul(&op(sphere)), &phi).map(|p| p.mul(&r2inv));
    extract_series(&time.sub(&mass).add(&radial).add(&ang))
}

type Form = Vec<Poly>;

fn lie_form(x: &VectorField, w: &Form) -> Form {
    let ch = &x.chart;
    let xs = ch.coord_ids();
    (0..w.len())
        .map(|nu| {
            let mut acc = x.apply(&w[nu]);
            for (mu, wm) in w.iter().enumerate() {
                if !wm.is_zero() {
                    acc = acc.add(&wm.mul(&x.comps()[mu].diff(xs[nu])));
                }
            }
            acc
        })
        .collect()
}

struct Iterated<T: Clone> {
    table: HashMap<Vec<usize>, T>,
}

impl<T: Clone> Iterated<T> {
    fn new(base: T) -> Self {
        let mut table = HashMap::new();
        table.insert(Vec::new(), base);
        Iterated { table }
    }

    fn get(&mut self, ms: &[usize], step: &dyn Fn(usize, &T) -> T) -> T {
        if let Some(v) = self.table.get(ms) {
            return v.clone();
        }
        let (last, prefix) = ms.split_last().expect("base entry present");
        let prev = self.get(prefix, step);
        let v = step(*last, &prev);
        self.table.insert(ms.to_vec(), v.clone());
        v
    }
}

/// ∂⋆_μ with dx^μ ∂_μΦ = dx⋆^μ ⋆ ∂⋆_μΦ, where dx⋆^μ is the ⋆-dual of ∂_μ, ⟨∂_μ, dx⋆^ν⟩⋆ = δ_μ^ν.
pub fn deformed_partial_derivatives(mb: &ModelBundle) -> Result<Vec<DiffOpSeries>> {
    let ch = mb.chart().clone();
    let ctx = mb.frame.context();
    let order = ctx.order();
    let gens = ctx.twist().gens().to_vec();
    let n = ch.dim();
    let partials: Vec<VectorField> = ch.coord_names().iter().map(|c| VectorField::partial(&ch, c)).collect::<Result<_>>()?;
    let form_step = |g: usize, w: &Form| lie_form(&gens[g], w);
    let vec_step = |g: usize, v: &VectorField| lie_bracket(&gens[g], v).expect("same chart");
    let fn_step = |g: usize, h: &Poly| gens[g].apply(h);
    let mut vecs: Vec<Iterated<VectorField>> = partials.iter().map(|p| Iterated::new(p.clone())).collect();
    let pair = |v: &VectorField, w: &Form| Poly::sum(v.comps().iter().zip(w).map(|(a, b)| a.mul(b)).collect::<Vec<_>>().iter());

    // ⋆-dual basis, order by order
    let unit = |nu: usize| (0..n).map(|m| if m == nu { Poly::one() } else { Poly::zero() }).collect::<Form>();
    let mut dual: Vec<Vec<Form>> = (0..n).map(|nu| vec![unit(nu)]).collect();
    let mut dual_tabs: Vec<Vec<Iterated<Form>>> = (0..n).map(|nu| vec![Iterated::new(unit(nu))]).collect();
    for k in 1..=order {
        for nu in 0..n {
            let mut comps = vec![Poly::zero(); n];
            for m in 1..=k {
                for term in ctx.kernel(m) {
                    let w = dual_tabs[nu][k - m].get(&term.right, &form_step);
                    for (mu, slot) in comps.iter_mut().enumerate() {
                        let v = vecs[mu].get(&term.left, &vec_step);
                        *slot = slot.sub(&pair(&v, &w).scale(&term.coeff));
                    }
                }
            }
            dual[nu].push(comps.clone());
            dual_tabs[nu].push(Iterated::new(comps));
        }
    }

    let phi = test_field(&ch);
    let xs = ch.coord_ids();
    let mut u: Vec<Vec<Poly>> = vec![Vec::new(); n];
    let mut u_tabs: Vec<Vec<Iterated<Poly>>> = (0..n).map(|_| Vec::new()).collect();
    for k in 0..=order {
        let mut rem = vec![Poly::zero(); n];
        for nu in 0..n {
            for m in 0..=k {
                for j in 0..=(k - m) {
                    if m == 0 && j == 0 {
                        continue;
                    }
                    let kk = k - m - j;
                    for term in ctx.kernel(m) {
                        let w = dual_tabs[nu][j].get(&term.left, &form_step);
                        let h = u_tabs[nu][kk].get(&term.right, &fn_step);
                        if h.is_zero() {
                            continue;
                        }
                        for (mu, slot) in rem.iter_mut().enumerate() {
                            if !w[mu].is_zero() {
                                *slot = slot.add(&w[mu].mul(&h).scale(&term.coeff));
                            }
                        }
                    }
                }
            }
        }
        for mu in 0..n {
            let base = if k == 0 { phi.diff(xs[mu]) } else { Poly::zero() };
            let v = base.sub(&rem[mu]);
            u[mu].push(v.clone());
            u_tabs[mu].push(Iterated::new(v));
        }
    }
    u.iter().map(|coeffs| extract_series(&LambdaSeries::new(coeffs.clone()))).collect()
}

/// Separable bump ∏ p_i(s_i)(1 − s_i²)^K with s_i = (x_i − c_i)/h_i, stored as
/// coefficient lists in s_i.
#[derive(Clone, Debug)]
pub struct Bump {
    pub factors: Vec<Vec<f64>>,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(a: &[f64], s: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

fn poly_deriv(a: &[f64]) -> Vec<f64> {
    if a.len() <= 1 {
        return vec![0.0];
    }
    a.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

impl Bump {
    /// `profiles[i]` are the coefficients of p_i; `k` is the vanishing order at the box faces.
    pub fn new(profiles: &[Vec<f64>], k: usize) -> Self {
        let mut edge = vec![1.0];
        for _ in 0..k {
            edge = poly_mul(&edge, &[1.0, 0.0, -1.0]);
        }
        Bump { factors: profiles.iter().map(|p| poly_mul(p, &edge)).collect() }
    }

    /// d^j/dx^j of factor i at s, for a box half-width h.
    fn deriv(&self, i: usize, j: usize, s: f64, h: f64) -> f64 {
        let mut p = self.factors[i].clone();
        for _ in 0..j {
            p = poly_deriv(&p);
        }
        poly_eval(&p, s) / h.powi(j as i32)
    }
}

/// Box [c_i − h_i, c_i + h_i] in chart coordinates.
#[derive(Clone, Debug)]
pub struct QuadBox {
    pub center: Vec<f64>,
    pub half: Vec<f64>,
}

/// Values of a set of polynomials at a point with shared atom evaluations.
struct FastEval {
    atoms: Vec<AtomId>,
    polys: Vec<Vec<(Vec<(usize, i32)>, Complex64)>>,
}

impl FastEval {
    fn new(ps: &[Poly]) -> Self {
        let mut atoms: Vec<AtomId> = ps.iter().flat_map(|p| p.atoms()).collect();
        atoms.sort();
        atoms.dedup();
        let pos: HashMap<AtomId, usize> = atoms.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let polys = ps
            .iter()
            .map(|p| {
                p.terms()
                    .iter()
                    .map(|(m, c)| (m.atoms().map(|(a, e)| (pos[a], *e)).collect(), c.to_c64()))
                    .collect()
            })
            .collect();
        FastEval { atoms, polys }
    }

    fn eval(&self, env: &HashMap<AtomId, f64>) -> Vec<Complex64> {
        let vals: Vec<Complex64> = self.atoms.iter().map(|a| Poly::atom_pow(*a, 1).eval(env)).collect();
        self.polys
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(atoms, c)| atoms.iter().fold(*c, |acc, (i, e)| acc * vals[*i].powi(*e)))
                    .sum()
            })
            .collect()
    }
}

/// (∫φ (Dψ) ρ, ∫(Dφ) ψ ρ) over the box by tensor Gauss–Legendre quadrature, ρ the vol_g density.
pub fn adjoint_pairing(
    mb: &ModelBundle,
    d: &DiffOp,
    phi: &Bump,
    psi: &Bump,
    bx: &QuadBox,
    nodes: usize,
) -> Result<(Complex64, Complex64)> {
    let ch = mb.chart().clone();
    let xs = ch.coord_ids();
    let n = xs.len();
    let rho = coordinate_density(mb)?;
    let terms: Vec<(Vec<usize>, Poly)> = d
        .terms()
        .map(|(idx, c)| {
            let mut js = vec![0usize; n];
            for (a, k) in idx {
                let pos = xs.iter().position(|x| x == a).expect("coordinate of the chart");
                js[pos] = *k as usize;
            }
            (js, c.clone())
        })
        .collect();
    let mut polys: Vec<Poly> = terms.iter().map(|(_, c)| c.clone()).collect();
    polys.push(rho);
    let fe = FastEval::new(&polys);
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes).ok_or_else(|| Error::BadParams("zero nodes".into()))?);
    let pts: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    let total = pts.len().pow(n as u32);
    let params: Vec<(AtomId, f64)> =
        mb.params.iter().filter_map(|(k, v)| ch.symbol_id(k).ok().map(|id| (id, *v))).collect();
    let contrib = |flat: usize| -> (Complex64, Complex64) {
        let mut rem = flat;
        let mut env: HashMap<AtomId, f64> = params.iter().copied().collect();
        let mut w = 1.0;
        let mut s = vec![0.0; n];
        for i in 0..n {
            let (x, wi) = pts[rem % pts.len()];
            rem /= pts.len();
            s[i] = x;
            w *= wi * bx.half[i];
            env.insert(xs[i], bx.center[i] + bx.half[i] * x);
        }
        let vals = fe.eval(&env);
        let rho = vals[terms.len()];
        let mut dphi = Complex64::new(0.0, 0.0);
        let mut dpsi = Complex64::new(0.0, 0.0);
        for (t, (js, _)) in terms.iter().enumerate() {
            let mut a = 1.0;
            let mut b = 1.0;
            for i in 0..n {
                a *= phi.deriv(i, js[i], s[i], bx.half[i]);
                b *= psi.deriv(i, js[i], s[i], bx.half[i]);
            }
            dphi += vals[t] * a;
            dpsi += vals[t] * b;
        }
        let (mut fphi, mut fpsi) = (1.0, 1.0);
        for i in 0..n {
            fphi *= phi.deriv(i, 0, s[i], bx.half[i]);
            fpsi *= psi.deriv(i, 0, s[i], bx.half[i]);
        }
        (rho * w * fphi * dpsi, rho * w * dphi * fpsi)
    };
    let idx: Vec<usize> = (0..total).collect();
    let zero = Complex64::new(0.0, 0.0);
    Ok(exec::map_reduce(&idx, (zero, zero), |k| contrib(*k), |a, b| (a.0 + b.0, a.1 + b.1)))
}
