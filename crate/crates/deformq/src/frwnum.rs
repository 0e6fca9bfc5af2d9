//! Numerics for the homothetic FRW toy models (a(t) = t) and the z = 2 loop integral.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;

/// Below this |1 − k² − 6ξ| the kernel is evaluated from its series in ν².
pub const NU_SWITCH: f64 = 1e-6;

/// Retarded-minus-advanced mode kernel of the flat toy model,
/// (t^ν τ^{−ν} − t^{−ν} τ^ν)/(2tτν) with ν = √(1 − k² − 6ξ).
pub fn mode_kernel(t: f64, tau: f64, k: f64, xi: f64) -> Result<f64> {
    if !(t > 0.0 && tau > 0.0) {
        return Err(Error::DomainError(format!("times must be positive, got t={t}, τ={tau}")));
    }
    let nu2 = 1.0 - k * k - 6.0 * xi;
    Ok(sinh_ratio(nu2, (t / tau).ln()) / (t * tau))
}

/// sinh(νL)/ν as a function of ν², real for either sign.
fn sinh_ratio(nu2: f64, l: f64) -> f64 {
    if nu2.abs() < NU_SWITCH {
        let l2 = l * l;
        l * (1.0 + nu2 * l2 / 6.0 + nu2 * nu2 * l2 * l2 / 120.0)
    } else if nu2 > 0.0 {
        let nu = nu2.sqrt();
        (nu * l).sinh() / nu
    } else {
        let nu = (-nu2).sqrt();
        (nu * l).sin() / nu
    }
}

/// Kernel of the two-dimensional compact model at angular momentum n:
/// sin(n log(t/τ))/n, homogeneous of degree zero.
pub fn circle_mode_kernel(t: f64, tau: f64, n: i64) -> Result<f64> {
    if !(t > 0.0 && tau > 0.0) {
        return Err(Error::DomainError(format!("times must be positive, got t={t}, τ={tau}")));
    }
    Ok(sinh_ratio(-((n * n) as f64), (t / tau).ln()))
}

/// 1/cosh(3λk₁).
pub fn deformed_mode_weight(k1: f64, lambda: f64) -> f64 {
    1.0 / (3.0 * lambda * k1).cosh()
}

/// Equal-time spectrum ratio 𝒫⋆/𝒫 for a translation-invariant mock two-point kernel
/// Ω̂(t, τ, k). The deformed kernel is Ω̂ composed with the S-map on both legs, which
/// carry momenta k and −k.
pub fn power_spectrum_ratio(mock: &dyn Fn(f64, f64, [f64; 3]) -> f64, t: f64, k: [f64; 3], lambda: f64) -> f64 {
    let s = |k1: f64| deformed_mode_weight(k1, lambda).sqrt();
    let classical = mock(t, t, k);
    let deformed = s(k[0]) * s(-k[0]) * classical;
    deformed / classical
}

/// One row per k₁: `k1,ratio`.
pub fn power_ratio_csv(lambda: f64, k1s: &[f64]) -> String {
    let mut out = String::from("k1,ratio\n");
    for k in k1s {
        out.push_str(&format!("{k},{}\n", deformed_mode_weight(*k, lambda)));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SMode {
    Fourier,
    Position,
}

/// Angular frequencies of a periodic grid, in FFT order.
pub fn grid_frequencies(n: usize, dx: f64) -> Vec<f64> {
    let period = n as f64 * dx;
    (0..n).map(|j| {
        let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * PI * m / period
    }).collect()
}

fn check_grid(n: usize, dx: f64) -> Result<()> {
    if n < 2 || !n.is_power_of_two() || !(dx > 0.0) {
        return Err(Error::BadParams(format!("periodic grid needs 2^m ≥ 2 points and dx > 0, got {n}, {dx}")));
    }
    Ok(())
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(data.len()) } else { planner.plan_fft_forward(data.len()) };
    plan.process(data);
    if inverse {
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}

/// 1/(6λ cosh(πx/6λ)), whose Fourier transform is sech(3λk).
pub fn sech_kernel(x: f64, lambda: f64) -> f64 {
    let a = 6.0 * lambda;
    1.0 / (a * (PI * x / a).cosh())
}

/// The sech kernel sampled on a periodic grid (images summed) times dx.
fn periodic_kernel(n: usize, dx: f64, lambda: f64) -> Vec<f64> {
    let period = n as f64 * dx;
    // images beyond this distance are below 1e-17 relative
    let reach = (6.0 * lambda / PI) * 40.0;
    let images = (reach / period).ceil() as i64 + 1;
    (0..n)
        .map(|j| {
            let x = if j <= n / 2 { j as f64 * dx } else { (j as f64 - n as f64) * dx };
            (-images..=images).map(|m| sech_kernel(x + m as f64 * period, lambda)).sum::<f64>() * dx
        })
        .collect()
}

/// DFT of the sampled kernel, paired with its angular frequency.
pub fn position_kernel_spectrum(n: usize, dx: f64, lambda: f64) -> Result<Vec<(f64, f64)>> {
    check_grid(n, dx)?;
    let mut data: Vec<Complex64> = periodic_kernel(n, dx, lambda).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    fft(&mut data, false);
    Ok(grid_frequencies(n, dx).into_iter().zip(data).map(|(k, z)| (k, z.re)).collect())
}

/// The S-map along x¹ on a periodic grid. Fourier mode multiplies by
/// cosh(3λk)^{−power/2}; position mode (power 2) convolves with the sech kernel.
pub fn s_map(phi: &[f64], dx: f64, lambda: f64, mode: SMode, power: u32) -> Result<Vec<f64>> {
    check_grid(phi.len(), dx)?;
    if mode == SMode::Position && power != 2 {
        return Err(Error::UnsupportedPower(power));
    }
    if lambda == 0.0 {
        return Ok(phi.to_vec());
    }
    let n = phi.len();
    let mut data: Vec<Complex64> = phi.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    fft(&mut data, false);
    match mode {
        SMode::Fourier => {
            for (z, k) in data.iter_mut().zip(grid_frequencies(n, dx)) {
                *z *= (3.0 * lambda * k).cosh().powf(-(power as f64) / 2.0);
            }
        }
        SMode::Position => {
            let mut ker: Vec<Complex64> =
                periodic_kernel(n, dx, lambda).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
            fft(&mut ker, false);
            for (z, w) in data.iter_mut().zip(ker) {
                *z *= w;
            }
        }
    }
    fft(&mut data, true);
    Ok(data.into_iter().map(|z| z.re).collect())
}

/// cosh(3λn)^{1/2} e^{−λ|n|}: the S⁻¹ image of an e^{−λ|n|} spectrum.
pub fn s_inverse_growth(lambda: f64, n: i64) -> f64 {
    (3.0 * lambda * n as f64).cosh().sqrt() * (-lambda * (n.abs() as f64)).exp()
}

/// Whether S⁻¹ keeps an e^{−r|n|} spectrum summable.
pub fn s_inverse_summable(rate: f64, lambda: f64) -> bool {
    rate > 1.5 * lambda
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrwModel {
    /// 4 for the ℝ³ model, 2 for the S¹ model.
    pub dim: usize,
    pub xi: f64,
    pub lambda: f64,
}

impl FrwModel {
    pub fn flat(xi: f64, lambda: f64) -> Result<Self> {
        Self::new(4, xi, lambda)
    }

    pub fn circle(lambda: f64) -> Result<Self> {
        Self::new(2, 0.0, lambda)
    }

    fn new(dim: usize, xi: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !xi.is_finite() {
            return Err(Error::BadParams(format!("need λ > 0 and finite ξ, got λ={lambda}, ξ={xi}")));
        }
        Ok(FrwModel { dim, xi, lambda })
    }

    /// c_v(N/2 + 1) for v = t∂_t, c_v = 2.
    pub fn homothety_constant(&self) -> f64 {
        2.0 * (self.dim as f64 / 2.0 + 1.0)
    }
}

/// A real test function given in the mixed (t, k) picture,
/// φ̂(t, k) = b(t) · e^{−α|k|²}(1 + βk₁²) with b a polynomial bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeFunction {
    pub center: f64,
    pub width: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ModeFunction {
    fn time(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.width;
        if s.abs() < 1.0 {
            (1.0 - s * s).powi(6)
        } else {
            0.0
        }
    }

    /// t ∂_t b(t)
    fn time_dilated(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.width;
        if s.abs() < 1.0 {
            t * 6.0 * (1.0 - s * s).powi(5) * (-2.0 * s) / self.width
        } else {
            0.0
        }
    }

    fn momentum(&self, k2: f64, k1: f64) -> f64 {
        (-self.alpha * k2).exp() * (1.0 + self.beta * k1 * k1)
    }

    fn t_range(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    /// The same function with b replaced by t ∂_t b.
    fn dilated(&self) -> TimeProfile {
        TimeProfile { f: *self, dilated: true }
    }

    fn plain(&self) -> TimeProfile {
        TimeProfile { f: *self, dilated: false }
    }
}

#[derive(Clone, Copy)]
struct TimeProfile {
    f: ModeFunction,
    dilated: bool,
}

impl TimeProfile {
    fn at(&self, t: f64) -> f64 {
        if self.dilated {
            self.f.time_dilated(t)
        } else {
            self.f.time(t)
        }
    }
}

/// The momentum box ends where the Gaussian factors drop below e^{−MOMENTUM_DECAY}.
const MOMENTUM_DECAY: f64 = 38.0;

fn rule(nodes: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    let r = GaussLegendre::new(NonZeroUsize::new(nodes).ok_or_else(|| Error::BadParams("zero nodes".into()))?);
    let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
    Ok(r.as_node_weight_pairs().iter().map(|(x, w)| (m + h * x, h * w)).collect())
}

fn omega_at(phi: TimeProfile, psi: TimeProfile, m: &FrwModel, deformed: bool, nodes: usize) -> Result<f64> {
    let (a0, a1) = phi.f.t_range();
    let (b0, b1) = psi.f.t_range();
    if a0 <= 0.0 || b0 <= 0.0 {
        return Err(Error::DomainError("test functions must be supported at t > 0".into()));
    }
    let ts = rule(nodes, a0, a1)?;
    let taus = rule(nodes, b0, b1)?;
    let measure = |t: f64| t.powi(m.dim as i32 - 1);
    let fa: Vec<f64> = ts.iter().map(|(t, w)| w * measure(*t) * phi.at(*t)).collect();
    let fb: Vec<f64> = taus.iter().map(|(t, w)| w * measure(*t) * psi.at(*t)).collect();
    // Σ_{t,τ} φ(t)ψ(τ)K(t,τ)
    let time_pair = |kern: &dyn Fn(f64, f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for (i, (t, _)) in ts.iter().enumerate() {
            for (j, (tau, _)) in taus.iter().enumerate() {
                acc += fa[i] * fb[j] * kern(*t, *tau);
            }
        }
        acc
    };
    let kmax = (MOMENTUM_DECAY / (phi.f.alpha + psi.f.alpha)).sqrt();
    let value = if m.dim == 4 {
        // cylindrical momenta: d³k = dk₁ · 2πk_⊥ dk_⊥
        let k1s = rule(nodes, -kmax, kmax)?;
        let kps = rule(nodes, 0.0, kmax)?;
        let cells: Vec<(f64, f64, f64)> =
            k1s.iter().flat_map(|(k1, w1)| kps.iter().map(move |(kp, wp)| (*k1, *kp, w1 * wp * 2.0 * PI * kp))).collect();
        exec::map_reduce(
            &cells,
            0.0,
            |(k1, kp, w)| {
                let k2 = k1 * k1 + kp * kp;
                let k = k2.sqrt();
                let weight = if deformed { deformed_mode_weight(*k1, m.lambda) } else { 1.0 };
                let mom = phi.f.momentum(k2, *k1) * psi.f.momentum(k2, *k1) * weight * w;
                mom * time_pair(&|t, tau| mode_kernel(t, tau, k, m.xi).unwrap_or(0.0))
            },
            |a, b| a + b,
        ) / (2.0 * PI).powi(3)
    } else {
        let nmax = kmax.ceil() as i64;
        let ns: Vec<i64> = (-nmax..=nmax).collect();
        exec::map_reduce(
            &ns,
            0.0,
            |n| {
                let nf = *n as f64;
                let weight = if deformed { deformed_mode_weight(nf, m.lambda) } else { 1.0 };
                let mom = phi.f.momentum(nf * nf, nf) * psi.f.momentum(nf * nf, nf) * weight;
                mom * time_pair(&|t, tau| circle_mode_kernel(t, tau, *n).unwrap_or(0.0))
            },
            |a, b| a + b,
        ) / (2.0 * PI)
    };
    Ok(-value)
}

fn omega_checked(phi: TimeProfile, psi: TimeProfile, m: &FrwModel, deformed: bool, nodes: usize) -> Result<f64> {
    let fine = omega_at(phi, psi, m, deformed, nodes)?;
    let coarse = omega_at(phi, psi, m, deformed, nodes * 3 / 4)?;
    let scale = fine.abs().max(coarse.abs()).max(1e-300);
    if (fine - coarse).abs() > 1e-5 * scale && (fine - coarse).abs() > 1e-14 {
        return Err(Error::GridTooCoarse(format!(
            "ω changes from {coarse:.6e} to {fine:.6e} between {} and {nodes} nodes",
            nodes * 3 / 4
        )));
    }
    Ok(fine)
}

/// ω(φ, ψ) = −∫dt t^{N−1}∫dτ τ^{N−1}∫dk φ̂(t,−k)Δ̂(t,τ,k)ψ̂(τ,k), optionally with the
/// sech(3λk₁) weight. A self-convergence check against 3/4 of the nodes guards the result.
pub fn symplectic_quadrature(phi: &ModeFunction, psi: &ModeFunction, m: &FrwModel, deformed: bool, nodes: usize) -> Result<f64> {
    omega_checked(phi.plain(), psi.plain(), m, deformed, nodes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotheticCheck {
    pub omega: f64,
    pub omega_lv_phi: f64,
    pub omega_lv_psi: f64,
    pub constant: f64,
    pub defect: f64,
    /// defect over the largest of the three terms
    pub relative: f64,
}

/// ω(L_vφ, ψ) + ω(φ, L_vψ) + c_v(N/2 + 1) ω(φ, ψ) for v = t∂_t.
pub fn homothetic_identity(phi: &ModeFunction, psi: &ModeFunction, m: &FrwModel, deformed: bool, nodes: usize) -> Result<HomotheticCheck> {
    let omega = omega_checked(phi.plain(), psi.plain(), m, deformed, nodes)?;
    let a = omega_checked(phi.dilated(), psi.plain(), m, deformed, nodes)?;
    let b = omega_checked(phi.plain(), psi.dilated(), m, deformed, nodes)?;
    let c = m.homothety_constant();
    let defect = a + b + c * omega;
    let scale = a.abs().max(b.abs()).max((c * omega).abs()).max(1e-300);
    Ok(HomotheticCheck { omega, omega_lv_phi: a, omega_lv_psi: b, constant: c, defect, relative: defect.abs() / scale })
}

/// Applies −(∂_t² + (3/t)∂_t + (k² + 6ξ)/t²) by central differences to t ↦ Δ̂(t, τ, k)
/// and returns the largest residual on the given times.
pub fn mode_equation_residual(tau: f64, k: f64, xi: f64, times: &[f64], h: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in times {
        let f = |s: f64| mode_kernel(s, tau, k, xi);
        let (fm, f0, fp) = (f(t - h)?, f(t)?, f(t + h)?);
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        let d1 = (fp - fm) / (2.0 * h);
        worst = worst.max((d2 + 3.0 / t * d1 + (k * k + 6.0 * xi) / (t * t) * f0).abs());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Z2LoopParams {
    pub beta: f64,
    pub g4: f64,
    pub mass2: f64,
    /// Λ_E / Λ_k
    pub ratio: f64,
}

impl Z2LoopParams {
    fn validate(&self) -> Result<()> {
        if [self.beta, self.g4, self.mass2, self.ratio].iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::BadParams(format!("loop parameters must be positive: {self:?}")))
        }
    }

    /// √2/(4π²β^{3/2})
    pub fn analytic_coefficient(&self) -> f64 {
        2f64.sqrt() / (4.0 * PI * PI * self.beta.powf(1.5))
    }
}

const LOOP_PANELS: usize = 400;
const LOOP_NODES: usize = 16;

/// ∫₀^{kmax} f(k) dk on panels graded towards k = 0.
fn radial_integral(kmax: f64, f: impl Fn(f64) -> f64 + Sync + Send) -> Result<f64> {
    let r = rule(LOOP_NODES, 0.0, 1.0)?;
    // panel edges kmax·(i/P)² concentrate nodes where the integrand turns over
    let panels: Vec<usize> = (0..LOOP_PANELS).collect();
    Ok(exec::map_reduce(
        &panels,
        0.0,
        |i| {
            let a = kmax * (*i as f64 / LOOP_PANELS as f64).powi(2);
            let b = kmax * ((*i + 1) as f64 / LOOP_PANELS as f64).powi(2);
            r.iter().map(|(x, w)| (b - a) * w * f(a + (b - a) * x)).sum::<f64>()
        },
        |a, b| a + b,
    ))
}

/// I(Λ_E) = ∫_{|E|≤Λ_E, k≤Λ_k} dE k²dk/(4π³) (E² + k² + β²k⁴ + M²)⁻¹, E done in closed form.
pub fn z2_tadpole(p: &Z2LoopParams, cutoff: f64) -> Result<f64> {
    p.validate()?;
    let kmax = cutoff / p.ratio;
    radial_integral(kmax, |k| {
        let a = k * k + p.beta * p.beta * k.powi(4) + p.mass2;
        let s = a.sqrt();
        k * k * 2.0 * (cutoff / s).atan() / s
    })
    .map(|v| v / (4.0 * PI.powi(3)))
}

/// ∫ G(p)² at zero external momentum with the same cutoffs.
pub fn z2_bubble(p: &Z2LoopParams, cutoff: f64) -> Result<f64> {
    p.validate()?;
    let kmax = cutoff / p.ratio;
    radial_integral(kmax, |k| {
        let a = k * k + p.beta * p.beta * k.powi(4) + p.mass2;
        let s = a.sqrt();
        // ∫_{−Λ}^{Λ} dE (E² + A)⁻²
        let e = cutoff;
        k * k * (e / (a * (e * e + a)) + (e / s).atan() / (a * s))
    })
    .map(|v| v / (4.0 * PI.powi(3)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Z2Fit {
    pub beta: f64,
    pub cutoffs: Vec<f64>,
    pub integrals: Vec<f64>,
    /// I ≈ c√Λ_E + d
    pub c: f64,
    pub d: f64,
    pub c_analytic: f64,
    pub relative_error: f64,
    /// −g₄·c, the coefficient of √Λ_E in the self-energy with Π = −g₄·I
    pub pi_coefficient: f64,
    pub pi_analytic: f64,
    pub bubble: Vec<f64>,
    pub bubble_differences: Vec<f64>,
    pub bubble_converges: bool,
    pub note: String,
}

pub fn z2_loop_integral(p: &Z2LoopParams, scan: &[f64]) -> Result<Z2Fit> {
    p.validate()?;
    let lo = scan.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scan.iter().cloned().fold(0.0, f64::max);
    if scan.len() < 3 || !(lo > 0.0) || hi / lo < 10.0 {
        return Err(Error::FitDegenerate(format!("need ≥ 3 positive cutoffs spanning a decade, got {scan:?}")));
    }
    let integrals: Vec<f64> = scan.iter().map(|l| z2_tadpole(p, *l)).collect::<Result<_>>()?;
    // least squares in x = √Λ
    let xs: Vec<f64> = scan.iter().map(|l| l.sqrt()).collect();
    let n = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), integrals.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&integrals).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx {
        return Err(Error::FitDegenerate("cutoffs do not separate slope and offset".into()));
    }
    let c = (n * sxy - sx * sy) / det;
    let d = (sy - c * sx) / n;
    let c_analytic = p.analytic_coefficient();

    let mut sorted = scan.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bubble: Vec<f64> = sorted.iter().map(|l| z2_bubble(p, *l)).collect::<Result<_>>()?;
    let bubble_differences: Vec<f64> = bubble.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let bubble_converges = bubble_differences.windows(2).all(|w| w[1] < w[0]);
    Ok(Z2Fit {
        beta: p.beta,
        cutoffs: scan.to_vec(),
        integrals,
        c,
        d,
        c_analytic,
        relative_error: (c - c_analytic).abs() / c_analytic,
        pi_coefficient: -p.g4 * c,
        pi_analytic: -p.g4 / (8f64.sqrt() * PI * PI * p.beta.powf(1.5)),
        bubble,
        bubble_differences,
        bubble_converges,
        note: "Π = −g₄·I; the usual 1/2 symmetry factor of the tadpole is not applied".into(),
    })
}
