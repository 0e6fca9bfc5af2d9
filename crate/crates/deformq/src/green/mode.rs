//! Per-mode κ-Minkowski Green operators on a uniform time grid.
//!
//! For spatial momentum k the undeformed operator is P_(0) = −(∂_t² + E²),
//! E² = k² + M², and the second-order correction is
//! P̃_(2) = (9/8)∂_t²(∂_t² + M²) + (25/8)k²∂_t².

use serde::Serialize;

use super::Sign;
use crate::error::{Error, Result};
use crate::exec;

const C_TIME: f64 = 9.0 / 8.0;
const C_SPACE: f64 = 25.0 / 8.0;
/// Grid cells excluded at each end when finite differences are involved.
const EDGE: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    pub k: f64,
    pub mass2: f64,
    pub t0: f64,
    pub h: f64,
    pub len: usize,
}

impl ModeGrid {
    pub fn new(k: f64, mass2: f64, t0: f64, t1: f64, points: usize) -> Result<Self> {
        if points < 16 || !(t1 > t0) || !k.is_finite() || !(mass2 >= 0.0) {
            return Err(Error::BadParams(format!("grid [{t0}, {t1}] with {points} points, k={k}, M²={mass2}")));
        }
        Ok(ModeGrid { k, mass2, t0, h: (t1 - t0) / (points - 1) as f64, len: points })
    }

    pub fn energy(&self) -> f64 {
        (self.k * self.k + self.mass2).sqrt()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.h * i as f64
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.len).map(|i| f(self.time(i))).collect()
    }

    /// Δ±(t) = ∓Θ(±t) sin(Et)/E with Θ(0) = ½.
    pub fn kernel(&self, sign: Sign, t: f64) -> f64 {
        let e = self.energy();
        let s = if e == 0.0 { t } else { (e * t).sin() / e };
        let theta = |x: f64| if x > 0.0 { 1.0 } else if x == 0.0 { 0.5 } else { 0.0 };
        match sign {
            Sign::Retarded => -theta(t) * s,
            Sign::Advanced => theta(-t) * s,
        }
    }

    fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.len {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// (Δ±f)(t_i) by trapezoid convolution.
    pub fn green(&self, sign: Sign, f: &[f64]) -> Vec<f64> {
        let support: Vec<usize> = (0..self.len).filter(|&j| f[j] != 0.0).collect();
        exec::map_range(self.len, |i| {
            let ti = self.time(i);
            let (mut acc, mut comp) = (0.0f64, 0.0f64);
            for &j in &support {
                let x = self.weight(j) * self.kernel(sign, ti - self.time(j)) * f[j];
                let t = acc + x;
                comp += if acc.abs() >= x.abs() { (acc - t) + x } else { (x - t) + acc };
                acc = t;
            }
            acc + comp
        })
    }

    /// Central second difference; the two end values are set to zero.
    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        let h2 = self.h * self.h;
        let mut out = vec![0.0; self.len];
        for i in 1..self.len - 1 {
            out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
        }
        out
    }

    /// P_(0)f = −(f'' + E²f).
    pub fn p0(&self, f: &[f64]) -> Vec<f64> {
        let e2 = self.energy().powi(2);
        self.d2(f).iter().zip(f).map(|(a, b)| -(a + e2 * b)).collect()
    }

    /// P̃_(2) on a profile, from its exact derivatives.
    pub fn p2(&self, f: &Profile) -> Vec<f64> {
        let k2 = self.k * self.k;
        (0..self.len).map(|i| C_TIME * (f.d4[i] + self.mass2 * f.d2[i]) + C_SPACE * k2 * f.d2[i]).collect()
    }

    /// Δ̃_(2)±f = (9/8)Δ±∂_t²f + 2Δ±∂_t²(−k²)Δ±f. The convolutions commute with ∂_t on
    /// compactly supported input, so ∂_t²Δ±f is evaluated as Δ±f''.
    pub fn green2(&self, sign: Sign, f: &Profile) -> Vec<f64> {
        let a = self.green(sign, &f.d2);
        let b = self.green(sign, &a);
        let k2 = self.k * self.k;
        a.iter().zip(&b).map(|(x, y)| C_TIME * x - 2.0 * k2 * y).collect()
    }

    /// Trapezoid ∫ f g.
    pub fn pairing(&self, f: &[f64], g: &[f64]) -> f64 {
        (0..self.len).map(|i| self.weight(i) * f[i] * g[i]).sum()
    }

    /// Discrete L² norm over the interior.
    pub fn norm(&self, f: &[f64]) -> f64 {
        (f[EDGE..self.len - EDGE].iter().map(|x| x * x).sum::<f64>() * self.h).sqrt()
    }
}

/// Compactly supported polynomial bump (1 − s²)⁸, s = (t − c)/w.
pub fn bump(c: f64, w: f64) -> impl Fn(f64) -> f64 {
    move |t| bump_derivative(c, w, 0, t)
}

/// n-th t-derivative of [`bump`], from the expanded polynomial in s.
pub fn bump_derivative(c: f64, w: f64, n: u32, t: f64) -> f64 {
    let s = (t - c) / w;
    if s.abs() >= 1.0 {
        return 0.0;
    }
    // (1 − s²)⁸ = Σ_j C(8, j)(−1)^j s^{2j}
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=8u32 {
        let p = 2 * j;
        if p >= n {
            let falling: f64 = (0..n).map(|i| (p - i) as f64).product();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * falling * s.powi((p - n) as i32);
        }
        binom = binom * (8 - j) as f64 / (j + 1) as f64;
    }
    acc / w.powi(n as i32)
}

/// Samples of a test function with its second and fourth derivatives.
#[derive(Clone, Debug)]
pub struct Profile {
    pub values: Vec<f64>,
    pub d2: Vec<f64>,
    pub d4: Vec<f64>,
}

impl Profile {
    pub fn bump(g: &ModeGrid, c: f64, w: f64) -> Profile {
        let at = |n| g.sample(|t| bump_derivative(c, w, n, t));
        Profile { values: at(0), d2: at(2), d4: at(4) }
    }

    /// The profile of P_(0)f = −(f'' + E²f); its fourth derivative is left out.
    fn p0(&self, g: &ModeGrid) -> Profile {
        let e2 = g.energy().powi(2);
        let values = self.values.iter().zip(&self.d2).map(|(f, f2)| -(f2 + e2 * f)).collect();
        let d2 = self.d2.iter().zip(&self.d4).map(|(f2, f4)| -(f4 + e2 * f2)).collect();
        Profile { values, d2, d4: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeGreenReport {
    pub k: f64,
    pub mass2: f64,
    pub order: usize,
    pub points: usize,
    /// max over ± of ‖P_(0)Δ±φ − φ‖/‖φ‖
    pub order0_residual: f64,
    /// max over ± of ‖P_(0)Δ̃_(2)±φ + P̃_(2)Δ±φ‖/‖φ‖ (zero below order 2)
    pub residual: f64,
    /// max |Δ̃_(2)₊φ| before supp φ, relative to ‖φ‖
    pub support_leak: f64,
    /// relative defect of ∫φ Δ̃_(n)₊ψ = ∫(Δ̃_(n)₋φ)ψ over n ≤ order
    pub antihermiticity: f64,
    /// relative size of P̃⋆Δ̃⋆φ and Δ̃⋆P̃⋆φ, Δ̃⋆ = Δ̃⋆₊ − Δ̃⋆₋, over n ≤ order
    pub exactness: f64,
}

pub const SUPPORTED_MODEL: &str = "kappa-minkowski";

/// Window length, bump centres and widths.
const WINDOW: [f64; 5] = [12.0, 4.5, 1.5, 5.5, 1.75];

/// Runs the per-mode checks on [0, 12] with φ supported in [3, 6] and ψ in [3.75, 7.25].
pub fn mode_green_numeric(model: &str, k: f64, mass2: f64, order: usize, points: usize) -> Result<ModeGreenReport> {
    if model != SUPPORTED_MODEL {
        return Err(Error::UnknownModel(model.to_string()));
    }
    if order > 2 {
        return Err(Error::Unsupported(format!("mode Green operators are implemented up to order 2, not {order}")));
    }
    let [len, c1, w1, c2, w2] = WINDOW;
    let g = ModeGrid::new(k, mass2, 0.0, len, points)?;
    let phi_p = Profile::bump(&g, c1, w1);
    let psi_p = Profile::bump(&g, c2, w2);
    let (phi, psi) = (phi_p.values.clone(), psi_p.values.clone());
    let nphi = g.norm(&phi);
    let rel = |v: &[f64]| g.norm(v) / nphi;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
    let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>();

    let signs = [Sign::Retarded, Sign::Advanced];
    let d0: Vec<Vec<f64>> = signs.iter().map(|s| g.green(*s, &phi)).collect();
    let order0 = d0.iter().map(|d| rel(&diff(&g.p0(d), &phi))).fold(0.0, f64::max);
    if order0 > 1e-4 {
        return Err(Error::GridTooCoarse(format!("P_(0)Δφ = φ fails with relative residual {order0:.3e}")));
    }

    let first_support = phi.iter().position(|x| *x != 0.0).unwrap_or(0);
    let mut residual = 0.0;
    let mut leak = 0.0;
    let pair_scale = g.pairing(&phi, &phi).abs().max(f64::MIN_POSITIVE);
    let mut antiherm = {
        let a = g.pairing(&phi, &g.green(Sign::Retarded, &psi));
        let b = g.pairing(&g.green(Sign::Advanced, &phi), &psi);
        (a - b).abs() / pair_scale
    };
    let causal0 = diff(&d0[0], &d0[1]);
    let mut exact = rel(&g.p0(&causal0));
    let psi_p0 = psi_p.p0(&g);
    let back0 = diff(&g.green(Sign::Retarded, &psi_p0.values), &g.green(Sign::Advanced, &psi_p0.values));
    exact = exact.max(g.norm(&back0) / g.norm(&psi));

    if order == 2 {
        // P̃_(2)Δ±φ = Δ±P̃_(2)φ by translation invariance
        let p2phi = g.p2(&phi_p);
        let d2: Vec<Vec<f64>> = signs.iter().map(|s| g.green2(*s, &phi_p)).collect();
        let p2d0: Vec<Vec<f64>> = signs.iter().map(|s| g.green(*s, &p2phi)).collect();
        for (a, b) in d2.iter().zip(&p2d0) {
            residual = f64::max(residual, rel(&sum(&g.p0(a), b)));
        }
        leak = d2[0][..first_support].iter().fold(0.0, |m: f64, x| m.max(x.abs())) / nphi;

        let a = g.pairing(&phi, &g.green2(Sign::Retarded, &psi_p));
        let b = g.pairing(&g.green2(Sign::Advanced, &phi_p), &psi);
        antiherm = antiherm.max((a - b).abs() / pair_scale);

        let causal2 = diff(&d2[0], &d2[1]);
        exact = exact.max(rel(&sum(&g.p0(&causal2), &diff(&p2d0[0], &p2d0[1]))));
        let p2psi = g.p2(&psi_p);
        let fwd = |s: Sign| sum(&g.green2(s, &psi_p0), &g.green(s, &p2psi));
        let back2 = diff(&fwd(Sign::Retarded), &fwd(Sign::Advanced));
        exact = exact.max(g.norm(&back2) / g.norm(&psi));
    }

    Ok(ModeGreenReport {
        k,
        mass2,
        order,
        points,
        order0_residual: order0,
        residual,
        support_leak: leak,
        antihermiticity: antiherm,
        exactness: exact,
    })
}

/// Runs [`mode_green_numeric`] over several momenta in parallel.
pub fn mode_sweep(model: &str, ks: &[f64], mass2: f64, order: usize, points: usize) -> Result<Vec<ModeGreenReport>> {
    exec::map(ks, |k| mode_green_numeric(model, *k, mass2, order, points)).into_iter().collect()
}
