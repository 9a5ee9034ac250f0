//! The explicit one-parameter family of `L`-periodic cnoidal profiles.
//!
//! For fixed period `L > 4π` and modulus `k ∈ (0, k_L)` the profile is
//!
//! ```text
//! φₖ(x) = ψ(x)²,   ψ(x) = a (b + cn²(2K(k) x / L, k)) = β₂ + (β₃ - β₂) cn²(..)
//! ```
//!
//! and solves `-c φ'' + (c - 1) φ - φ^{3/2} + A = 0` with the second
//! integration constant `B = 0`. All scalars hang off [`WaveParams`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fourier::{nodes, Fourier};
use crate::special::{complete_integrals, elliptic_derivatives, EllipticModulus, JacobiEvaluator};
use crate::stability;

/// Moduli below this are rejected: `b ~ 2/(3k²)` and the family degenerates.
pub const MIN_MODULUS: f64 = 1e-3;

/// Half-width at which the `k_L` bisection stops.
const BISECTION_TOL: f64 = 1e-13;

/// `√(k⁴ - k² + 1)`, the radical that appears throughout the family.
#[inline]
pub fn radical(k: f64) -> f64 {
    let q = k * k;
    (q * q - q + 1.0).sqrt()
}

/// `g(k) = 64 K²(k) √(k⁴ - k² + 1)`, strictly increasing from `16π²`.
pub fn period_gauge(k: EllipticModulus) -> f64 {
    let kk = complete_integrals(k).k;
    64.0 * kk * kk * radical(k.get())
}

fn check_period(period: f64) -> Result<()> {
    if !period.is_finite() || period <= 4.0 * PI {
        return Err(domain(format!("period must exceed 4π, got {period}")));
    }
    Ok(())
}

/// The unique `k_L ∈ (0, 1)` with `g(k_L) = L²`, by bisection.
pub fn max_modulus(period: f64) -> Result<f64> {
    check_period(period)?;
    let target = period * period;
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = crate::special::MAX_MODULUS;
    if period_gauge(EllipticModulus::new(hi)?) <= target {
        return Err(domain(format!(
            "period {period} too large: k_L is not separable from 1 in double precision"
        )));
    }
    while 0.5 * (hi - lo) > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if period_gauge(EllipticModulus::new(mid)?) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The two roots of `P` determined by `(c, β₂)`, plus `Δ_c(β₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootPair {
    pub beta1: f64,
    pub beta3: f64,
    pub delta: f64,
}

/// `Δ_c(x) = (x - 5(c-1)/4)² - 4(x² - 5(c-1)x/4) = (β₃ - β₁)²`.
fn delta_c(c: f64, x: f64) -> f64 {
    let s = 1.25 * (c - 1.0);
    (x - s) * (x - s) - 4.0 * (x * x - s * x)
}

fn check_speed_beta2(c: f64, beta2: f64) -> Result<()> {
    if !(c.is_finite() && c > 1.0) {
        return Err(domain(format!("wave speed must exceed 1, got {c}")));
    }
    let upper = 5.0 * (c - 1.0) / 6.0;
    if !(beta2 > 0.0 && beta2 < upper) {
        return Err(domain(format!(
            "beta2 must lie in (0, 5(c-1)/6 = {upper}), got {beta2}"
        )));
    }
    Ok(())
}

/// Solves `β₁ + β₂ + β₃ = 5(c-1)/4`, `β₁β₂ + β₁β₃ + β₂β₃ = 0` for `β₁ < 0 < β₂ < β₃`.
pub fn roots_from_speed_beta2(c: f64, beta2: f64) -> Result<RootPair> {
    check_speed_beta2(c, beta2)?;
    let s = 1.25 * (c - 1.0);
    let delta = delta_c(c, beta2);
    let beta3 = 0.5 * (s - beta2) + 0.5 * delta.sqrt();
    let beta1 = s - beta2 - beta3;
    Ok(RootPair {
        beta1,
        beta3,
        delta,
    })
}

/// Period `T(c, β₂) = 4√(5c) K(k) / Δ_c(β₂)^{1/4}` and the modulus `k(c, β₂)`.
pub fn period_and_modulus(c: f64, beta2: f64) -> Result<(f64, f64)> {
    check_speed_beta2(c, beta2)?;
    let delta = delta_c(c, beta2);
    let k2 = (5.0 * (c - 1.0) - 12.0 * beta2) / (8.0 * delta.sqrt()) + 0.5;
    let k = k2.sqrt();
    let kk = complete_integrals(EllipticModulus::new(k)?).k;
    let t = 4.0 * (5.0 * c).sqrt() * kk / delta.sqrt().sqrt();
    Ok((t, k))
}

/// Every scalar attached to one wave of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    /// Spatial period `L`.
    pub period: f64,
    /// Elliptic modulus `k`.
    pub modulus: f64,
    /// Largest admissible modulus `k_L` for this period.
    pub max_modulus: f64,
    /// Wave speed `c`.
    pub speed: f64,
    /// First integration constant `A`.
    pub a_integration: f64,
    /// Second integration constant `B`, always zero on this family.
    pub b_integration: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// Amplitude factor `a = β₃ - β₂`.
    pub amplitude: f64,
    /// Offset factor `b = β₂ / a`.
    pub offset: f64,
    /// Spatial scale `η = L / (2K)`.
    pub eta: f64,
    /// `K(k)`
    pub complete_k: f64,
    /// `E(k)`
    pub complete_e: f64,
    /// `m̃(k) = L² - 64 K² √(k⁴ - k² + 1)`, positive below `k_L`.
    pub m_tilde: f64,
}

impl WaveParams {
    /// Builds the wave of period `period` and modulus `k`.
    pub fn from_modulus(period: f64, k: f64) -> Result<Self> {
        let k_max = max_modulus(period)?;
        if !(k >= MIN_MODULUS && k < k_max) {
            return Err(domain(format!(
                "modulus must lie in [{MIN_MODULUS}, k_L = {k_max:.12}) for L = {period}, got {k}"
            )));
        }
        Self::build(period, k, k_max)
    }

    fn build(period: f64, k: f64, k_max: f64) -> Result<Self> {
        let modulus = EllipticModulus::new(k)?;
        let ci = complete_integrals(modulus);
        let (kk, q, s) = (ci.k, k * k, radical(k));
        let l2 = period * period;
        let m_tilde = l2 - 64.0 * kk * kk * s;
        if m_tilde <= 0.0 {
            return Err(domain(format!("m̃(k) = {m_tilde} is not positive")));
        }
        let c = l2 / m_tilde;
        let amplitude = 80.0 * q * kk * kk / m_tilde;
        let offset = (s - 2.0 * q + 1.0) / (3.0 * q);
        let beta2 = 5.0 / 12.0 * ((l2 - 64.0 * (2.0 * q - 1.0) * kk * kk) / m_tilde - 1.0);
        let roots = roots_from_speed_beta2(c, beta2)?;
        let t = 2.0 * q - 1.0;
        let a_integration = -204_800.0 * kk.powi(6) / (27.0 * m_tilde.powi(3))
            * ((s - t) * (s - t) * (2.0 * s + t));
        Ok(Self {
            period,
            modulus: k,
            max_modulus: k_max,
            speed: c,
            a_integration,
            b_integration: 0.0,
            beta1: roots.beta1,
            beta2,
            beta3: roots.beta3,
            amplitude,
            offset,
            eta: period / (2.0 * kk),
            complete_k: kk,
            complete_e: ci.e,
            m_tilde,
        })
    }

    /// Same period, different modulus. `k_L` is reused, not recomputed.
    pub fn with_modulus(&self, k: f64) -> Result<Self> {
        if !(k >= MIN_MODULUS && k < self.max_modulus) {
            return Err(domain(format!(
                "modulus must lie in [{MIN_MODULUS}, {}), got {k}",
                self.max_modulus
            )));
        }
        Self::build(self.period, k, self.max_modulus)
    }

    pub fn elliptic_modulus(&self) -> EllipticModulus {
        EllipticModulus::new(self.modulus).expect("validated at construction")
    }

    pub fn evaluator(&self) -> ProfileEvaluator {
        ProfileEvaluator {
            jacobi: JacobiEvaluator::new(self.elliptic_modulus()),
            scale: 2.0 * self.complete_k / self.period,
            amplitude: self.amplitude,
            offset: self.offset,
        }
    }

    /// `(φ(x), ψ(x))`
    pub fn profile(&self, x: f64) -> (f64, f64) {
        let p = self.evaluator().eval(x);
        (p.phi, p.psi)
    }

    /// `φₖ` sampled at the `n` uniform nodes of `[0, L)`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let ev = self.evaluator();
        nodes(n, self.period).into_iter().map(|x| ev.eval(x).phi).collect()
    }

    /// `∂φₖ/∂k` at fixed `L` by a central difference of step `h`.
    pub fn k_derivative_samples(&self, n: usize, h: f64) -> Result<Vec<f64>> {
        let plus = self.with_modulus(self.modulus + h)?.samples(n);
        let minus = self.with_modulus(self.modulus - h)?.samples(n);
        Ok(plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect())
    }

    /// `(dc/dk, dA/dk)` along the family at fixed `L`, in closed form.
    pub fn dparams_dk(&self) -> (f64, f64) {
        let (k, kk) = (self.modulus, self.complete_k);
        let s = radical(k);
        let (dkk, _) = elliptic_derivatives(self.elliptic_modulus());
        let ds = (2.0 * k * k * k - k) / s;
        let dm = -64.0 * (2.0 * kk * dkk * s + kk * kk * ds);
        let c = self.speed;
        let dc = -self.period * self.period * dm / (self.m_tilde * self.m_tilde);
        let g3 = stability::g3(self.period, k, kk, self.complete_e);
        let dg3 = stability::dg3(self.period, k, kk, self.complete_e);
        let da = 3.0 * c * c * dc * g3 + c * c * c * dg3;
        (dc, da)
    }

    /// Residuals of the structural identities, each scaled to be
    /// dimensionless.
    pub fn identity_residuals(&self) -> IdentityResiduals {
        let (b1, b2, b3) = (self.beta1, self.beta2, self.beta3);
        let scale = b1.abs().max(b2.abs()).max(b3.abs());
        let c = self.speed;
        let s = 1.25 * (c - 1.0);
        let delta = delta_c(c, b2);
        let k2 = self.modulus * self.modulus;
        IdentityResiduals {
            vieta_sum: (b1 + b2 + b3 - s).abs() / scale,
            vieta_pairs: (b1 * b2 + b1 * b3 + b2 * b3).abs() / (scale * scale),
            a_product: (self.a_integration - 0.4 * b1 * b2 * b3).abs() / scale.powi(3),
            modulus: (k2 - (b3 - b2) / (b3 - b1)).abs(),
            auxiliary: (2.0 * delta.sqrt() * (2.0 * k2 - 1.0) - (2.5 * (c - 1.0) - 6.0 * b2)).abs()
                / scale,
            profile_forms: ((self.amplitude * (self.offset + 1.0) - b3).abs()
                + (self.amplitude * self.offset - b2).abs())
                / scale,
        }
    }

    /// Ordering, sign and positivity conditions of the family.
    pub fn ordering_holds(&self) -> bool {
        let c = self.speed;
        let (b1, b2, b3) = (self.beta1, self.beta2, self.beta3);
        c > 1.0
            && b1 < 0.0
            && 0.0 < b2
            && b2 < b3
            && b2 < 5.0 * (c - 1.0) / 6.0
            && 5.0 * (c - 1.0) / 6.0 < b3
            && b3 < 1.25 * (c - 1.0)
            && self.m_tilde > 0.0
            && self.b_integration == 0.0
    }
}

/// Dimensionless residuals of the algebraic identities of one wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub vieta_sum: f64,
    pub vieta_pairs: f64,
    pub a_product: f64,
    pub modulus: f64,
    pub auxiliary: f64,
    pub profile_forms: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.vieta_sum,
            self.vieta_pairs,
            self.a_product,
            self.modulus,
            self.auxiliary,
            self.profile_forms,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// One point of the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub phi: f64,
    pub psi: f64,
    /// `dψ/dx`
    pub dpsi: f64,
    /// `dφ/dx = 2ψψ'`
    pub dphi: f64,
}

/// Cached Jacobi ladder for repeated evaluation of one profile.
#[derive(Debug, Clone)]
pub struct ProfileEvaluator {
    jacobi: JacobiEvaluator,
    scale: f64,
    amplitude: f64,
    offset: f64,
}

impl ProfileEvaluator {
    pub fn eval(&self, x: f64) -> ProfilePoint {
        let j = self.jacobi.eval(self.scale * x);
        let psi = self.amplitude * (self.offset + j.cn * j.cn);
        let dpsi = -2.0 * self.amplitude * self.scale * j.cn * j.sn * j.dn;
        ProfilePoint {
            phi: psi * psi,
            psi,
            dpsi,
            dphi: 2.0 * psi * dpsi,
        }
    }
}

/// Maximal residuals of the profile equations on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeResidual {
    /// `max |-cφ'' + (c-1)φ - φ^{3/2} + A|`, `φ''` spectral.
    pub euler_lagrange: f64,
    /// `max |(1-c)φ²/2 + c φ'²/2 + (2/5)φ^{5/2} - Aφ|`, `φ'` spectral.
    pub quadrature: f64,
    /// `max |ψ'² - (ψ-β₁)(ψ-β₂)(β₃-ψ)/(5c)|`, `ψ'` analytic.
    pub psi_quadrature: f64,
}

pub fn ode_residual(p: &WaveParams, n_samples: usize) -> Result<OdeResidual> {
    if n_samples < 64 || !n_samples.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "residual grid must be even and at least 64, got {n_samples}"
        )));
    }
    let ev = p.evaluator();
    let pts: Vec<ProfilePoint> = nodes(n_samples, p.period).into_iter().map(|x| ev.eval(x)).collect();
    let phi: Vec<f64> = pts.iter().map(|q| q.phi).collect();
    let mut fourier = Fourier::new(n_samples, p.period);
    let d1 = fourier.derivative(&phi, 1);
    let d2 = fourier.derivative(&phi, 2);
    let (c, a) = (p.speed, p.a_integration);
    let mut out = OdeResidual {
        euler_lagrange: 0.0,
        quadrature: 0.0,
        psi_quadrature: 0.0,
    };
    for (j, pt) in pts.iter().enumerate() {
        let f = pt.phi;
        let el = -c * d2[j] + (c - 1.0) * f - f * f.sqrt() + a;
        let quad = 0.5 * (1.0 - c) * f * f + 0.5 * c * d1[j] * d1[j] + 0.4 * f * f * f.sqrt() - a * f;
        let y = pt.psi;
        let cubic = (y - p.beta1) * (y - p.beta2) * (p.beta3 - y) / (5.0 * c);
        out.euler_lagrange = out.euler_lagrange.max(el.abs());
        out.quadrature = out.quadrature.max(quad.abs());
        out.psi_quadrature = out.psi_quadrature.max((pt.dpsi * pt.dpsi - cubic).abs());
    }
    Ok(out)
}
