//! Vector fields, abelian twists and the star products they induce.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::exec;
use crate::scalar::{Cq, Q};
use crate::series::LambdaSeries;
use crate::symbolic::{Chart, Poly};

pub type PSeries = LambdaSeries<Poly>;

#[derive(Clone, Debug)]
pub struct VectorField {
    pub chart: Arc<Chart>,
    comps: Vec<Poly>,
}

fn same_chart(a: &Chart, b: &Chart) -> bool {
    a.name == b.name && a.coord_ids() == b.coord_ids()
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Poly>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::ChartMismatch);
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }

    /// v = Σ f_μ ∂_μ from (coordinate name, component) pairs.
    pub fn from_pairs(chart: &Arc<Chart>, pairs: &[(&str, Poly)]) -> Result<Self> {
        let mut comps = vec![Poly::zero(); chart.dim()];
        let names = chart.coord_names();
        for (n, f) in pairs {
            let i = names.iter().position(|x| x == n).ok_or_else(|| Error::UnknownCoordinate(n.to_string()))?;
            comps[i] = comps[i].add(f);
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }

    /// The coordinate vector field ∂_name.
    pub fn partial(chart: &Arc<Chart>, name: &str) -> Result<Self> {
        Self::from_pairs(chart, &[(name, Poly::one())])
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField { chart: chart.clone(), comps: vec![Poly::zero(); chart.dim()] }
    }

    pub fn comps(&self) -> &[Poly] {
        &self.comps
    }

    pub fn component(&self, name: &str) -> Result<&Poly> {
        let i = self
            .chart
            .coord_names()
            .iter()
            .position(|x| *x == name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
        Ok(&self.comps[i])
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    /// v(h) = v^μ ∂_μ h.
    pub fn apply(&self, h: &Poly) -> Poly {
        let ids = self.chart.coord_ids();
        let parts: Vec<Poly> = self
            .comps
            .iter()
            .zip(ids)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, id)| c.mul(&h.diff(id)))
            .collect();
        Poly::sum(parts.iter())
    }

    pub fn scale(&self, f: &Poly) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| c.mul(f)).collect() }
    }

    pub fn add(&self, o: &VectorField) -> Result<VectorField> {
        if !same_chart(&self.chart, &o.chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(VectorField { chart: self.chart.clone(), comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect() })
    }

    pub fn sub(&self, o: &VectorField) -> Result<VectorField> {
        self.add(&o.scale(&Poly::int(-1)))
    }
}

impl PartialEq for VectorField {
    fn eq(&self, o: &Self) -> bool {
        same_chart(&self.chart, &o.chart) && self.comps == o.comps
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .zip(self.chart.coord_names())
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, n)| format!("({c})∂_{n}"))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// [v, w]^ν = v^μ ∂_μ w^ν − w^μ ∂_μ v^ν.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> Result<VectorField> {
    if !same_chart(&v.chart, &w.chart) {
        return Err(Error::ChartMismatch);
    }
    let comps = v.comps.iter().zip(&w.comps).map(|(vn, wn)| v.apply(wn).sub(&w.apply(vn))).collect();
    Ok(VectorField { chart: v.chart.clone(), comps })
}

/// Antisymmetric matrix with 2×2 blocks (0, 1; −1, 0).
pub fn canonical_theta(n: usize) -> Vec<Vec<Q>> {
    let mut th = vec![vec![Q::from_integer(0); n]; n];
    for b in 0..n / 2 {
        th[2 * b][2 * b + 1] = Q::from_integer(1);
        th[2 * b + 1][2 * b] = Q::from_integer(-1);
    }
    th
}

#[derive(Clone, Debug)]
pub struct AbelianTwist {
    pub chart: Arc<Chart>,
    gens: Vec<VectorField>,
    theta: Vec<Vec<Q>>,
    order: usize,
}

impl AbelianTwist {
    pub fn new(chart: &Arc<Chart>, gens: Vec<VectorField>, theta: Vec<Vec<Q>>, order: usize) -> Result<Self> {
        let n = gens.len();
        if theta.len() != n || theta.iter().any(|r| r.len() != n) {
            return Err(Error::ConstraintViolated(format!("theta must be {n}×{n}")));
        }
        for a in 0..n {
            for b in 0..n {
                if theta[a][b] != -theta[b][a] {
                    return Err(Error::ConstraintViolated("theta is not antisymmetric".into()));
                }
            }
        }
        for g in &gens {
            if !same_chart(&g.chart, chart) {
                return Err(Error::ChartMismatch);
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if !lie_bracket(&gens[a], &gens[b])?.is_zero() {
                    return Err(Error::ConstraintViolated(format!("[X_{}, X_{}] ≠ 0", a + 1, b + 1)));
                }
            }
        }
        Ok(AbelianTwist { chart: chart.clone(), gens, theta, order })
    }

    /// Twist with the canonical block form of theta.
    pub fn canonical(chart: &Arc<Chart>, gens: Vec<VectorField>, order: usize) -> Result<Self> {
        let th = canonical_theta(gens.len());
        Self::new(chart, gens, th, order)
    }

    pub fn trivial(chart: &Arc<Chart>, order: usize) -> Self {
        AbelianTwist { chart: chart.clone(), gens: Vec::new(), theta: Vec::new(), order }
    }

    pub fn gens(&self) -> &[VectorField] {
        &self.gens
    }

    pub fn theta(&self) -> &[Vec<Q>] {
        &self.theta
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn with_order(&self, order: usize) -> Self {
        AbelianTwist { order, ..self.clone() }
    }

    pub fn is_trivial(&self) -> bool {
        self.theta.iter().flatten().all(|x| *x == Q::from_integer(0))
    }
}

/// One term c · X_L ⊗ X_R of a bidifferential operator; `left` and `right`
/// are sorted multisets of generator indices.
#[derive(Clone, Debug)]
pub struct KernelTerm {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub coeff: Cq,
}

/// c^n/n! Σ Θ^{α₁β₁}…Θ^{αₙβₙ} X_{α₁…αₙ} ⊗ X_{β₁…βₙ}, collected by multisets.
pub fn bidiff_kernel(theta: &[Vec<Q>], n: usize, c: &Cq) -> Vec<KernelTerm> {
    let pairs: Vec<(usize, usize, Q)> = (0..theta.len())
        .flat_map(|a| (0..theta.len()).map(move |b| (a, b)))
        .filter(|(a, b)| theta[*a][*b] != Q::from_integer(0))
        .map(|(a, b)| (a, b, theta[a][b]))
        .collect();
    let mut acc: HashMap<(Vec<usize>, Vec<usize>), Q> = HashMap::new();
    fn rec(
        pairs: &[(usize, usize, Q)],
        left: &mut Vec<usize>,
        right: &mut Vec<usize>,
        w: Q,
        depth: usize,
        acc: &mut HashMap<(Vec<usize>, Vec<usize>), Q>,
    ) {
        if depth == 0 {
            let mut l = left.clone();
            let mut r = right.clone();
            l.sort();
            r.sort();
            *acc.entry((l, r)).or_insert(Q::from_integer(0)) += w;
            return;
        }
        for (a, b, t) in pairs {
            left.push(*a);
            right.push(*b);
            rec(pairs, left, right, w * t, depth - 1, acc);
            left.pop();
            right.pop();
        }
    }
    rec(&pairs, &mut Vec::new(), &mut Vec::new(), Q::from_integer(1), n, &mut acc);
    let mut fact = Q::from_integer(1);
    for k in 1..=n {
        fact *= Q::from_integer(k as i128);
    }
    let pref = c.pow(n as u32).scale(&(Q::from_integer(1) / fact));
    let mut out: Vec<KernelTerm> = acc
        .into_iter()
        .filter(|(_, w)| *w != Q::from_integer(0))
        .map(|((left, right), w)| KernelTerm { left, right, coeff: pref.scale(&w) })
        .collect();
    out.sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
    out
}

/// A λ-series with its derivative tables, see [`StarContext::prepare`].
pub struct Prepared {
    tables: Vec<DerivTable>,
    zero: bool,
}

impl Prepared {
    pub fn is_zero(&self) -> bool {
        self.zero
    }
}

/// Iterated derivatives X_A h for every multiset A a kernel may request.
pub struct DerivTable {
    table: FxHashMap<Vec<usize>, Poly>,
}

impl DerivTable {
    pub fn get(&self, a: &[usize]) -> &Poly {
        &self.table[a]
    }
}

/// Star product machinery for a fixed twist: cached kernels per λ-order.
#[derive(Clone, Debug)]
pub struct StarContext {
    twist: AbelianTwist,
    star: Vec<Vec<KernelTerm>>,
    rbar: Vec<Vec<KernelTerm>>,
    multisets: Vec<Vec<usize>>,
}

impl StarContext {
    pub fn new(twist: AbelianTwist) -> Self {
        let n = twist.order;
        let half_i = Cq::new(Q::from_integer(0), Q::new(1, 2));
        let minus_i = Cq::new(Q::from_integer(0), Q::from_integer(-1));
        let star: Vec<Vec<KernelTerm>> = (0..=n).map(|k| bidiff_kernel(&twist.theta, k, &half_i)).collect();
        let rbar: Vec<Vec<KernelTerm>> = (0..=n).map(|k| bidiff_kernel(&twist.theta, k, &minus_i)).collect();
        let mut needed: BTreeSet<Vec<usize>> = BTreeSet::new();
        for t in star.iter().chain(rbar.iter()).flatten() {
            for m in [&t.left, &t.right] {
                for k in 0..=m.len() {
                    needed.insert(m[..k].to_vec());
                }
            }
        }
        let mut multisets: Vec<Vec<usize>> = needed.into_iter().collect();
        multisets.sort_by_key(|m| m.len());
        StarContext { twist, star, rbar, multisets }
    }

    pub fn twist(&self) -> &AbelianTwist {
        &self.twist
    }

    pub fn order(&self) -> usize {
        self.twist.order
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.twist.chart
    }

    pub fn kernel(&self, n: usize) -> &[KernelTerm] {
        &self.star[n]
    }

    pub fn series(&self, p: Poly) -> PSeries {
        PSeries::constant(p, self.order())
    }

    pub fn derivs(&self, h: &Poly) -> DerivTable {
        self.derivs_upto(h, usize::MAX)
    }

    /// Like [`derivs`](Self::derivs) but only for multisets of at most `depth` generators.
    pub fn derivs_upto(&self, h: &Poly, depth: usize) -> DerivTable {
        let mut table: FxHashMap<Vec<usize>, Poly> = FxHashMap::with_capacity_and_hasher(self.multisets.len(), Default::default());
        for m in self.multisets.iter().take_while(|m| m.len() <= depth) {
            let v = match m.split_last() {
                None => h.clone(),
                Some((last, prefix)) => self.twist.gens[*last].apply(&table[prefix]),
            };
            table.insert(m.clone(), v);
        }
        DerivTable { table }
    }

    /// The λⁿ part of the bidifferential kernel applied to (f, g).
    pub fn bidiff(&self, n: usize, f: &DerivTable, g: &DerivTable) -> Poly {
        self.apply_terms(&self.star[n], f, g)
    }

    fn apply_terms(&self, terms: &[KernelTerm], f: &DerivTable, g: &DerivTable) -> Poly {
        let parts = exec::map(terms, |t| f.get(&t.left).mul(g.get(&t.right)).scale(&t.coeff));
        Poly::sum(parts.iter())
    }

    fn star_tables(&self, hs: &[DerivTable], ks: &[DerivTable], order: usize) -> PSeries {
        let mut jobs: Vec<(usize, usize, usize, usize)> = Vec::new();
        for n in 0..=order {
            for a in 0..hs.len() {
                for b in 0..ks.len() {
                    if a + b + n <= order {
                        for t in 0..self.star[n].len() {
                            jobs.push((n, a, b, t));
                        }
                    }
                }
            }
        }
        let parts = exec::map(&jobs, |(n, a, b, t)| {
            let term = &self.star[*n][*t];
            (a + b + n, hs[*a].get(&term.left).mul(ks[*b].get(&term.right)).scale(&term.coeff))
        });
        let mut by_order: Vec<Vec<Poly>> = vec![Vec::new(); order + 1];
        for (o, p) in parts {
            by_order[o].push(p);
        }
        PSeries::new(by_order.iter().map(|ps| Poly::sum(ps.iter())).collect())
    }

    /// h ⋆ k for λ-series arguments; the result has the smallest of the three orders.
    pub fn star_series(&self, h: &PSeries, k: &PSeries) -> PSeries {
        self.star_prepared(&self.prepare(h), &self.prepare(k))
    }

    /// Derivative tables of every coefficient, for reuse across many products.
    pub fn prepare(&self, h: &PSeries) -> Prepared {
        let order = self.order().min(h.order());
        // the λᵃ coefficient only meets kernels of order ≤ order − a
        let idx: Vec<usize> = (0..=order).collect();
        let coeffs = h.coeffs();
        Prepared { tables: exec::map(&idx, |a| self.derivs_upto(&coeffs[*a], order - a)), zero: h.is_zero() }
    }

    pub fn star_prepared(&self, h: &Prepared, k: &Prepared) -> PSeries {
        let order = (h.tables.len().min(k.tables.len())) - 1;
        if h.zero || k.zero {
            return PSeries::zero(order);
        }
        self.star_tables(&h.tables[..=order], &k.tables[..=order], order)
    }

    pub fn star(&self, h: &Poly, k: &Poly) -> PSeries {
        self.star_series(&self.series(h.clone()), &self.series(k.clone()))
    }

    pub fn commutator_series(&self, h: &PSeries, k: &PSeries) -> PSeries {
        self.star_series(h, k).sub(&self.star_series(k, h))
    }

    pub fn commutator(&self, h: &Poly, k: &Poly) -> PSeries {
        self.commutator_series(&self.series(h.clone()), &self.series(k.clone()))
    }

    /// Σ (R̄^α k) ⋆ (R̄_α h) with R̄ = F², which must reproduce h ⋆ k.
    pub fn braided(&self, h: &Poly, k: &Poly) -> PSeries {
        let n = self.order();
        let dh = self.derivs(h);
        let dk = self.derivs(k);
        let mut total = PSeries::zero(n);
        for m in 0..=n {
            for t in &self.rbar[m] {
                let left = PSeries::monomial(dk.get(&t.left).scale(&t.coeff), m, n);
                let right = self.series(dh.get(&t.right).clone());
                total = total.add(&self.star_series(&left, &right));
            }
        }
        total
    }

    /// Solves h ⋆ r = 1 (`right = true`) or r ⋆ h = 1 order by order.
    fn one_sided_inverse(&self, h: &PSeries, right: bool) -> Result<PSeries> {
        let order = self.order().min(h.order());
        let r0 = h.coeff(0).try_inv()?;
        let hs: Vec<DerivTable> = h.coeffs()[..=order].iter().map(|p| self.derivs(p)).collect();
        let mut rs: Vec<Poly> = vec![r0.clone()];
        let mut rt: Vec<DerivTable> = vec![self.derivs(&r0)];
        for n in 1..=order {
            let mut parts = Vec::new();
            for m in 0..=n {
                for b in 0..n {
                    if b + m > n {
                        continue;
                    }
                    let a = n - b - m;
                    parts.push(if right {
                        self.bidiff(m, &hs[a], &rt[b])
                    } else {
                        self.bidiff(m, &rt[b], &hs[a])
                    });
                }
            }
            let rn = Poly::sum(parts.iter()).mul(&r0).neg();
            rt.push(self.derivs(&rn));
            rs.push(rn);
        }
        Ok(PSeries::new(rs))
    }

    pub fn star_inverse_series(&self, h: &PSeries) -> Result<PSeries> {
        let r = self.one_sided_inverse(h, true)?;
        let l = self.one_sided_inverse(h, false)?;
        if r != l {
            return Err(Error::ConstraintViolated("left and right star inverses differ".into()));
        }
        Ok(r)
    }

    pub fn star_inverse(&self, h: &Poly) -> Result<PSeries> {
        self.star_inverse_series(&self.series(h.clone()))
    }

    /// (A ⋆ B)_{ij} = Σ_k A_{ik} ⋆ B_{kj}.
    pub fn star_matrix_mul(&self, a: &[Vec<PSeries>], b: &[Vec<PSeries>]) -> Vec<Vec<PSeries>> {
        let n = a.len();
        let m = b.first().map_or(0, |r| r.len());
        let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
        let vals = exec::map(&cells, |(i, j)| {
            let mut acc = PSeries::zero(self.order());
            for k in 0..b.len() {
                if a[*i][k].is_zero() || b[k][*j].is_zero() {
                    continue;
                }
                acc = acc.add(&self.star_series(&a[*i][k], &b[k][*j]));
            }
            acc
        });
        let mut out = vec![Vec::with_capacity(m); n];
        for ((i, _), v) in cells.into_iter().zip(vals) {
            out[i].push(v);
        }
        out
    }

    fn one_sided_matrix_inverse(&self, g: &[Vec<PSeries>], right: bool) -> Result<Vec<Vec<PSeries>>> {
        let d = g.len();
        let order = self.order();
        let g0: Vec<Vec<Poly>> = g.iter().map(|r| r.iter().map(|s| s.coeff(0).clone()).collect()).collect();
        let inv0 = classical_inverse(&g0)?;
        let gt: Vec<Vec<Vec<DerivTable>>> = g
            .iter()
            .map(|r| r.iter().map(|s| s.coeffs()[..=order.min(s.order())].iter().map(|p| self.derivs(p)).collect()).collect())
            .collect();
        let mut gs: Vec<Vec<Vec<Poly>>> = vec![inv0.clone()];
        let mut tabs: Vec<Vec<Vec<DerivTable>>> =
            vec![inv0.iter().map(|r| r.iter().map(|p| self.derivs(p)).collect()).collect()];
        for n in 1..=order {
            // S = Σ_{a+b+m=n, b<n} K_m(g_a, G_b) (right) or K_m(G_b, g_a) (left)
            let cells: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).collect();
            let s_vals = exec::map(&cells, |(i, j)| {
                let mut parts = Vec::new();
                for k in 0..d {
                    for m in 0..=n {
                        for b in 0..n {
                            if b + m > n {
                                continue;
                            }
                            let a = n - b - m;
                            if right {
                                if let Some(ga) = gt[*i][k].get(a) {
                                    parts.push(self.bidiff(m, ga, &tabs[b][k][*j]));
                                }
                            } else if let Some(ga) = gt[k][*j].get(a) {
                                parts.push(self.bidiff(m, &tabs[b][*i][k], ga));
                            }
                        }
                    }
                }
                Poly::sum(parts.iter())
            });
            let mut s = vec![vec![Poly::zero(); d]; d];
            for ((i, j), v) in cells.iter().zip(s_vals) {
                s[*i][*j] = v;
            }
            // G_n = −g0⁻¹ S (right) or −S g0⁻¹ (left)
            let gn = if right { mat_mul(&inv0, &s) } else { mat_mul(&s, &inv0) };
            let gn: Vec<Vec<Poly>> = gn.iter().map(|r| r.iter().map(|p| p.neg()).collect()).collect();
            tabs.push(gn.iter().map(|r| r.iter().map(|p| self.derivs(p)).collect()).collect());
            gs.push(gn);
        }
        Ok((0..d)
            .map(|i| (0..d).map(|j| PSeries::new(gs.iter().map(|gn| gn[i][j].clone()).collect())).collect())
            .collect())
    }

    /// Star inverse of a square matrix of series: g ⋆ G = G ⋆ g = 1.
    pub fn star_inverse_matrix(&self, g: &[Vec<PSeries>]) -> Result<Vec<Vec<PSeries>>> {
        let r = self.one_sided_matrix_inverse(g, true)?;
        let l = self.one_sided_matrix_inverse(g, false)?;
        if r != l {
            return Err(Error::ConstraintViolated("left and right star inverse matrices differ".into()));
        }
        Ok(r)
    }
}

pub fn mat_mul(a: &[Vec<Poly>], b: &[Vec<Poly>]) -> Vec<Vec<Poly>> {
    let m = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    let parts: Vec<Poly> =
                        row.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(k, x)| x.mul(&b[k][j])).collect();
                    Poly::sum(parts.iter())
                })
                .collect()
        })
        .collect()
}

pub fn determinant(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    match n {
        0 => Poly::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut parts = Vec::new();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Poly>> =
                    m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| x.clone()).collect()).collect();
                let t = m[0][j].mul(&determinant(&minor));
                parts.push(if j % 2 == 0 { t } else { t.neg() });
            }
            Poly::sum(parts.iter())
        }
    }
}

/// Pointwise matrix inverse via the adjugate; the determinant must be invertible.
pub fn classical_inverse(m: &[Vec<Poly>]) -> Result<Vec<Vec<Poly>>> {
    let n = m.len();
    let det_inv = determinant(m).try_inv().map_err(|_| Error::NotInvertible)?;
    let mut out = vec![vec![Poly::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<Poly>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, x)| x.clone()).collect())
                .collect();
            let c = determinant(&minor).mul(&det_inv);
            out[i][j] = if (i + j) % 2 == 0 { c } else { c.neg() };
        }
    }
    Ok(out)
}

pub fn identity_matrix(n: usize, order: usize) -> Vec<Vec<PSeries>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { PSeries::one(order) } else { PSeries::zero(order) }).collect())
        .collect()
}
