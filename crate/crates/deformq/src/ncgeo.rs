//! Noncommutative geometry in a nice basis: ⋆-inverse metric, ⋆-Levi-Civita
//! connection, torsion, curvature and Einstein tensor, with a twist-free
//! classical path for comparison.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec;
use crate::scalar::{q, Cq, Q};
use crate::symbolic::{Chart, Poly};
use crate::twist::{classical_inverse, determinant, lie_bracket, AbelianTwist, PSeries, Prepared, StarContext, VectorField};

/// Local frame e_a commuting with itself and with the twist generators, plus the
/// metric coefficients g_ab = g(e_a, e_b) and the volume factor γ.
#[derive(Clone, Debug)]
pub struct FrameBundle {
    pub twist: AbelianTwist,
    pub frame: Vec<VectorField>,
    pub dual_names: Vec<String>,
    pub metric: Vec<Vec<Poly>>,
    pub gamma: Poly,
}

impl FrameBundle {
    pub fn new(
        twist: AbelianTwist,
        frame: Vec<VectorField>,
        dual_names: Vec<String>,
        metric: Vec<Vec<Poly>>,
        gamma: Poly,
    ) -> Result<Self> {
        let n = frame.len();
        if metric.len() != n || metric.iter().any(|r| r.len() != n) || dual_names.len() != n {
            return Err(Error::ConstraintViolated(format!("frame of size {n} needs an {n}×{n} metric")));
        }
        for e in &frame {
            if !Arc::ptr_eq(&e.chart, &twist.chart) && e.chart.name != twist.chart.name {
                return Err(Error::ChartMismatch);
            }
        }
        for a in 0..n {
            for b in 0..n {
                if metric[a][b] != metric[b][a] {
                    return Err(Error::ConstraintViolated(format!("g_{}{} ≠ g_{}{}", a + 1, b + 1, b + 1, a + 1)));
                }
                if metric[a][b].conj() != metric[a][b] {
                    return Err(Error::ConstraintViolated(format!("g_{}{} is not real", a + 1, b + 1)));
                }
            }
        }
        let det = determinant(&metric);
        let ch = twist.chart.clone();
        if ch.sample_points(4).iter().any(|env| det.eval(env).norm() < 1e-12) {
            return Err(Error::ConstraintViolated("metric degenerate at a sample point".into()));
        }
        Ok(FrameBundle { twist, frame, dual_names, metric, gamma })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.twist.chart
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn order(&self) -> usize {
        self.twist.order()
    }

    pub fn with_order(&self, order: usize) -> Self {
        FrameBundle { twist: self.twist.with_order(order), ..self.clone() }
    }

    pub fn context(&self) -> StarContext {
        StarContext::new(self.twist.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrameWitness {
    /// [e_a, e_b] ≠ 0
    Frame { a: usize, b: usize, bracket: VectorField },
    /// [X_α, e_a] ≠ 0
    Twist { alpha: usize, a: usize, bracket: VectorField },
}

impl std::fmt::Display for FrameWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameWitness::Frame { a, b, bracket } => write!(f, "[e_{}, e_{}] = {bracket}", a + 1, b + 1),
            FrameWitness::Twist { alpha, a, bracket } => write!(f, "[X_{}, e_{}] = {bracket}", alpha + 1, a + 1),
        }
    }
}

/// Checks the two nice-basis conditions.
pub fn validate_frame(fb: &FrameBundle) -> std::result::Result<(), FrameWitness> {
    let n = fb.dim();
    for a in 0..n {
        for b in a + 1..n {
            let br = lie_bracket(&fb.frame[a], &fb.frame[b]).expect("frame on one chart");
            if !br.is_zero() {
                return Err(FrameWitness::Frame { a, b, bracket: br });
            }
        }
    }
    for (alpha, x) in fb.twist.gens().iter().enumerate() {
        for a in 0..n {
            let br = lie_bracket(x, &fb.frame[a]).expect("frame on twist chart");
            if !br.is_zero() {
                return Err(FrameWitness::Twist { alpha, a, bracket: br });
            }
        }
    }
    Ok(())
}

/// Dense array of λ-series indexed by frame indices.
#[derive(Clone, Debug, PartialEq)]
pub struct StarTensor {
    pub dim: usize,
    pub rank: usize,
    pub data: Vec<PSeries>,
}

fn unflatten(mut k: usize, dim: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in idx.iter_mut().rev() {
        *slot = k % dim;
        k /= dim;
    }
    idx
}

impl StarTensor {
    pub fn from_fn(dim: usize, rank: usize, f: impl Fn(&[usize]) -> PSeries + Sync + Send) -> Self {
        let data = exec::map_range(dim.pow(rank as u32), |k| f(&unflatten(k, dim, rank)));
        StarTensor { dim, rank, data }
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &PSeries {
        &self.data[self.flat(idx)]
    }

    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.data.len()).map(|k| unflatten(k, self.dim, self.rank))
    }

    pub fn order(&self) -> usize {
        self.data.first().map_or(0, |s| s.order())
    }

    /// λ⁰ components.
    pub fn classical(&self) -> Vec<Poly> {
        self.data.iter().map(|s| s.coeff(0).clone()).collect()
    }

    /// (index, n) for every nonzero λⁿ coefficient with n ≥ 1.
    pub fn nonzero_corrections(&self) -> Vec<(Vec<usize>, usize)> {
        let mut out = Vec::new();
        for (k, s) in self.data.iter().enumerate() {
            for n in 1..=s.order() {
                if !s.coeff(n).is_zero() {
                    out.push((unflatten(k, self.dim, self.rank), n));
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|s| s.is_zero())
    }

    /// `{"a,b,c": ["<prefix λ⁰>", "<prefix λ¹>", ...]}`, zero components omitted.
    pub fn to_json(&self) -> Value {
        let mut m = BTreeMap::new();
        for (k, s) in self.data.iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            let key = unflatten(k, self.dim, self.rank).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
            m.insert(key, series_json(s));
        }
        json!(m)
    }
}

pub fn series_json(s: &PSeries) -> Value {
    json!(s.coeffs().iter().map(|p| p.to_prefix()).collect::<Vec<_>>())
}

#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub christoffel: StarTensor,
    pub torsion: StarTensor,
    pub riemann: StarTensor,
    pub ricci: StarTensor,
    pub scalar: PSeries,
    pub einstein: StarTensor,
}

impl CurvatureBundle {
    pub fn to_json(&self) -> Value {
        json!({
            "christoffel": self.christoffel.to_json(),
            "torsion": self.torsion.to_json(),
            "riemann": self.riemann.to_json(),
            "ricci": self.ricci.to_json(),
            "scalar": series_json(&self.scalar),
            "einstein": self.einstein.to_json(),
        })
    }

    /// (tensor name, tensor) for the quantities checked by the exact-solution theorem.
    pub fn named(&self) -> Vec<(&'static str, StarTensor)> {
        let scalar = StarTensor { dim: 1, rank: 0, data: vec![self.scalar.clone()] };
        vec![
            ("christoffel", self.christoffel.clone()),
            ("riemann", self.riemann.clone()),
            ("ricci", self.ricci.clone()),
            ("scalar", scalar),
            ("einstein", self.einstein.clone()),
        ]
    }
}

fn star(ctx: &StarContext, a: &PSeries, b: &PSeries) -> PSeries {
    if a.is_zero() || b.is_zero() {
        return PSeries::zero(a.order().min(b.order()).min(ctx.order()));
    }
    ctx.star_series(a, b)
}

fn frame_derivative(e: &VectorField, s: &PSeries) -> PSeries {
    s.map(|p| e.apply(p))
}

fn sum_series(order: usize, parts: impl IntoIterator<Item = PSeries>) -> PSeries {
    parts.into_iter().fold(PSeries::zero(order), |acc, s| acc.add(&s))
}

/// g^{ab} with g_ab ⋆ g^{bc} = g^{cb} ⋆ g_ba = δ_a^c.
pub fn star_inverse_metric(fb: &FrameBundle) -> Result<Vec<Vec<PSeries>>> {
    let ctx = fb.context();
    let g: Vec<Vec<PSeries>> = fb.metric.iter().map(|r| r.iter().map(|p| ctx.series(p.clone())).collect()).collect();
    ctx.star_inverse_matrix(&g).map_err(|e| match e {
        Error::ConstraintViolated(_) => e,
        _ => Error::NotInvertible,
    })
}

fn christoffel_with(fb: &FrameBundle, ctx: &StarContext, ginv: &[Vec<PSeries>]) -> StarTensor {
    let n = fb.dim();
    let order = ctx.order();
    let e = &fb.frame;
    let g = &fb.metric;
    // S_abd = e_a(g_bd) + e_b(g_ad) − e_d(g_ab)
    let s = StarTensor::from_fn(n, 3, |i| {
        let (a, b, d) = (i[0], i[1], i[2]);
        ctx.series(e[a].apply(&g[b][d]).add(&e[b].apply(&g[a][d])).sub(&e[d].apply(&g[a][b])))
    });
    let half = q(1, 2);
    StarTensor::from_fn(n, 3, |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        sum_series(order, (0..n).map(|d| star(ctx, &ginv[c][d], s.get(&[a, b, d])))).scale(&half)
    })
}

/// Γ⋆_{ab}^c = ½ g^{cd} ⋆ (e_a(g_bd) + e_b(g_ad) − e_d(g_ab)).
pub fn christoffel_star(fb: &FrameBundle) -> Result<StarTensor> {
    let ginv = star_inverse_metric(fb)?;
    Ok(christoffel_with(fb, &fb.context(), &ginv))
}

fn curvature_with(fb: &FrameBundle, ctx: &StarContext, ginv: &[Vec<PSeries>], gamma: &StarTensor) -> CurvatureBundle {
    let n = fb.dim();
    let order = ctx.order();
    let e = &fb.frame;
    let torsion = StarTensor::from_fn(n, 3, |i| gamma.get(&[i[0], i[1], i[2]]).sub(gamma.get(&[i[1], i[0], i[2]])));
    let prepared: Vec<Prepared> = exec::map(&gamma.data, |s| ctx.prepare(s));
    let pg = |i: [usize; 3]| &prepared[gamma.flat(&i)];
    // R_abc^d = e_a(Γ_bc^d) − e_b(Γ_ac^d) + Γ_bc^e ⋆ Γ_ae^d − Γ_ac^e ⋆ Γ_be^d, antisymmetric in a, b
    let upper = StarTensor::from_fn(n, 4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        if a >= b {
            return PSeries::zero(order);
        }
        let lin = frame_derivative(&e[a], gamma.get(&[b, c, d])).sub(&frame_derivative(&e[b], gamma.get(&[a, c, d])));
        let quad = sum_series(
            order,
            (0..n).map(|k| {
                ctx.star_prepared(pg([b, c, k]), pg([a, k, d])).sub(&ctx.star_prepared(pg([a, c, k]), pg([b, k, d])))
            }),
        );
        lin.add(&quad)
    });
    let riemann = StarTensor::from_fn(n, 4, |i| match i[0].cmp(&i[1]) {
        std::cmp::Ordering::Less => upper.get(i).clone(),
        std::cmp::Ordering::Equal => PSeries::zero(order),
        std::cmp::Ordering::Greater => upper.get(&[i[1], i[0], i[2], i[3]]).neg(),
    });
    let ricci = StarTensor::from_fn(n, 2, |i| sum_series(order, (0..n).map(|c| riemann.get(&[c, i[0], i[1], c]).clone())));
    let scalar = sum_series(
        order,
        exec::map_range(n * n, |k| star(ctx, &ginv[k / n][k % n], ricci.get(&[k / n, k % n]))),
    );
    let half = q(1, 2);
    let einstein = StarTensor::from_fn(n, 2, |i| {
        let g = ctx.series(fb.metric[i[0]][i[1]].clone());
        ricci.get(i).sub(&star(ctx, &g, &scalar).scale(&half))
    });
    CurvatureBundle { christoffel: gamma.clone(), torsion, riemann, ricci, scalar, einstein }
}

/// Torsion, Riemann, Ricci, scalar and Einstein tensor from Γ⋆.
pub fn curvature_star(fb: &FrameBundle, gamma: &StarTensor) -> Result<CurvatureBundle> {
    let ginv = star_inverse_metric(fb)?;
    Ok(curvature_with(fb, &fb.context(), &ginv, gamma))
}

/// Full chain metric → Γ⋆ → curvature.
pub fn geometry_star(fb: &FrameBundle) -> Result<CurvatureBundle> {
    let ctx = fb.context();
    let ginv = star_inverse_metric(fb)?;
    let gamma = christoffel_with(fb, &ctx, &ginv);
    Ok(curvature_with(fb, &ctx, &ginv, &gamma))
}

/// G⋆_ab = Ric⋆_ab − ½ g_ab ⋆ 𝔯⋆.
pub fn einstein_star(fb: &FrameBundle) -> Result<StarTensor> {
    Ok(geometry_star(fb)?.einstein)
}

/// e_a(g_bc) − g_db ⋆ Γ_ac^d − g_dc ⋆ Γ_ab^d, which vanishes for the ⋆-Levi-Civita connection.
pub fn metric_compatibility(fb: &FrameBundle, gamma: &StarTensor) -> StarTensor {
    let ctx = fb.context();
    let n = fb.dim();
    let g: Vec<Vec<PSeries>> = fb.metric.iter().map(|r| r.iter().map(|p| ctx.series(p.clone())).collect()).collect();
    StarTensor::from_fn(n, 3, |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        let mut s = ctx.series(fb.frame[a].apply(&fb.metric[b][c]));
        for d in 0..n {
            s = s.sub(&star(&ctx, &g[d][b], gamma.get(&[a, c, d])));
            s = s.sub(&star(&ctx, &g[d][c], gamma.get(&[a, b, d])));
        }
        s
    })
}

/// Twist-free curvature with plain products, used as an independent reference.
pub mod classical {
    use super::*;

    #[derive(Clone, Debug)]
    pub struct ClassicalGeometry {
        pub dim: usize,
        pub christoffel: Vec<Poly>,
        pub riemann: Vec<Poly>,
        pub ricci: Vec<Poly>,
        pub scalar: Poly,
        pub einstein: Vec<Poly>,
    }

    pub fn compute(frame: &[VectorField], metric: &[Vec<Poly>]) -> Result<ClassicalGeometry> {
        let n = frame.len();
        let ginv = classical_inverse(metric)?;
        let half = Cq::frac(1, 2);
        let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let mut chr = vec![Poly::zero(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = Poly::zero();
                    for d in 0..n {
                        if ginv[c][d].is_zero() {
                            continue;
                        }
                        let s = frame[a]
                            .apply(&metric[b][d])
                            .add(&frame[b].apply(&metric[a][d]))
                            .sub(&frame[d].apply(&metric[a][b]));
                        acc = acc.add(&ginv[c][d].mul(&s));
                    }
                    chr[idx3(a, b, c)] = acc.scale(&half);
                }
            }
        }
        let mut riem = vec![Poly::zero(); n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut acc = frame[a].apply(&chr[idx3(b, c, d)]).sub(&frame[b].apply(&chr[idx3(a, c, d)]));
                        for k in 0..n {
                            acc = acc.add(&chr[idx3(b, c, k)].mul(&chr[idx3(a, k, d)]));
                            acc = acc.sub(&chr[idx3(a, c, k)].mul(&chr[idx3(b, k, d)]));
                        }
                        riem[((a * n + b) * n + c) * n + d] = acc;
                    }
                }
            }
        }
        let mut ric = vec![Poly::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                ric[a * n + b] = Poly::sum((0..n).map(|c| riem[((c * n + a) * n + b) * n + c].clone()).collect::<Vec<_>>().iter());
            }
        }
        let mut scal = Poly::zero();
        for a in 0..n {
            for b in 0..n {
                scal = scal.add(&ginv[a][b].mul(&ric[a * n + b]));
            }
        }
        let ein = (0..n * n).map(|k| ric[k].sub(&metric[k / n][k % n].mul(&scal).scale(&half))).collect();
        Ok(ClassicalGeometry { dim: n, christoffel: chr, riemann: riem, ricci: ric, scalar: scal, einstein: ein })
    }
}

/// Which λⁿ (n ≥ 1) coefficients survive, tensor by tensor.
#[derive(Clone, Debug)]
pub struct CorrectionReport {
    /// (tensor, number of nonzero correction coefficients)
    pub tensors: Vec<(String, usize)>,
    /// first surviving (tensor, index, order)
    pub first_nonzero: Option<(String, Vec<usize>, usize)>,
    /// λ⁰ parts agree with the classical computation
    pub classical_agrees: bool,
}

impl CorrectionReport {
    pub fn all_vanish(&self) -> bool {
        self.first_nonzero.is_none()
    }
}

pub fn correction_report(fb: &FrameBundle, geo: &CurvatureBundle) -> Result<CorrectionReport> {
    let cl = classical::compute(&fb.frame, &fb.metric)?;
    let mut tensors = Vec::new();
    let mut first = None;
    for (name, t) in geo.named() {
        let nz = t.nonzero_corrections();
        if first.is_none() {
            if let Some((i, n)) = nz.first() {
                first = Some((name.to_string(), i.clone(), *n));
            }
        }
        tensors.push((name.to_string(), nz.len()));
    }
    let classical_agrees = geo.christoffel.classical() == cl.christoffel
        && geo.riemann.classical() == cl.riemann
        && geo.ricci.classical() == cl.ricci
        && *geo.scalar.coeff(0) == cl.scalar
        && geo.einstein.classical() == cl.einstein;
    Ok(CorrectionReport { tensors, first_nonzero: first, classical_agrees })
}

fn annihilates(x: &VectorField, fields: &[&Poly]) -> bool {
    fields.iter().all(|f| x.apply(f).is_zero())
}

/// For every generator X_α either X_α or X̃^α = Θ^{βα} X_β must annihilate g_ab, γ and the matter
/// fields; then every deformation of Γ⋆, R⋆, Ric⋆, 𝔯⋆ and G⋆ has to vanish.
pub fn check_killing_reduction(fb: &FrameBundle, matter: &[Poly]) -> Result<CorrectionReport> {
    let mut fields: Vec<&Poly> = fb.metric.iter().flatten().collect();
    fields.push(&fb.gamma);
    fields.extend(matter.iter());
    let gens = fb.twist.gens();
    let theta = fb.twist.theta();
    let ch = fb.chart().clone();
    for (alpha, x) in gens.iter().enumerate() {
        if annihilates(x, &fields) {
            continue;
        }
        let mut tilde = VectorField::zero(&ch);
        for (beta, y) in gens.iter().enumerate() {
            let t: &Q = &theta[beta][alpha];
            if *t != q(0, 1) {
                tilde = tilde.add(&y.scale(&Poly::rational(*t)))?;
            }
        }
        if !annihilates(&tilde, &fields) {
            return Err(Error::PreconditionFailed(format!("X_{} is not a Killing direction: {x}", alpha + 1)));
        }
    }
    let geo = geometry_star(fb)?;
    correction_report(fb, &geo)
}
