//! Closed forms for the stability functional
//!
//! ```text
//! Φ = ⟨𝓛ₖ ∂ₖφₖ, ∂ₖφₖ⟩,   -Φ = f₁ c³ c'² + f₂ c⁴ c' + f₃ c⁵
//! ```
//!
//! with `V(φₖ) = c² g₁`, `Q(φₖ) = c⁴ g₂`, `A = c³ g₃` and `2 g₂ = s₁ + s₂`.
//! The numeric routes in [`phi_numeric`] check the closed forms without
//! sharing any of them.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::evolution::{conserved, PeriodicField};
use crate::fourier::{nodes, trapezoid};
use crate::operator::{assemble_linearized_operator, Grid};
use crate::special::{complete_integrals, EllipticModulus};
use crate::wave::{radical, WaveParams};

/// Open band of moduli on which the derivative formulas are evaluated.
pub const DERIVATIVE_BAND: (f64, f64) = (0.01, 0.99);

/// Grid and k-step of [`phi_numeric`].
pub const PHI_GRID: usize = 256;
pub const PHI_STEP: f64 = 1e-5;

/// Evaluates `c[0] qⁿ + … + c[n]` by Horner's rule.
fn horner(q: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * q + c)
}

/// `P(q) + R(q) s` with both polynomials given highest degree first.
fn split(q: f64, s: f64, poly: &[f64], rad: &[f64]) -> f64 {
    horner(q, poly) + horner(q, rad) * s
}

/// `p₁ … p₁₁`, stored at indices `0 … 10`.
///
/// Each is a polynomial in `k²` plus a polynomial multiple of
/// `√(k⁴ - k² + 1)`. The radical part of `p₆` carries `-275 k²`.
pub fn p_polynomials(k: EllipticModulus) -> [f64; 11] {
    let q = k.squared();
    let s = radical(k.get());
    [
        split(q, s, &[2.0, -7.0, 10.0, -5.0], &[2.0, -6.0, 4.0]),
        split(q, s, &[-4.0, 15.0, -21.0, 14.0], &[-4.0, 4.0, -4.0]),
        horner(q, &[-9.0, 9.0, -9.0]),
        split(q, s, &[-1.0, 4.0, -6.0, 5.0, -2.0], &[-1.0, -1.0, 4.0, -2.0]),
        split(q, s, &[2.0, -4.0, 6.0, -4.0, 2.0], &[2.0, -3.0, -3.0, 2.0]),
        split(
            q,
            s,
            &[40.0, -276.0, 686.0, -878.0, 642.0, -214.0],
            &[40.0, -175.0, 300.0, -275.0, 110.0],
        ),
        split(
            q,
            s,
            &[-80.0, 494.0, -1256.0, 1684.0, -1270.0, 508.0],
            &[-80.0, 130.0, -270.0, 280.0, -140.0],
        ),
        split(
            q,
            s,
            &[-294.0, 588.0, -882.0, 588.0, -294.0],
            &[30.0, -45.0, -45.0, 30.0],
        ),
        split(
            q,
            s,
            &[10.0, -55.0, 125.0, -155.0, 105.0, -30.0],
            &[28.0, -98.0, 154.0, -126.0, 42.0],
        ),
        split(
            q,
            s,
            &[30.0, -15.0, -90.0, 195.0, -180.0, 60.0],
            &[-42.0, 168.0, -252.0, 210.0, -84.0],
        ),
        split(
            q,
            s,
            &[-30.0, 75.0, -30.0, -30.0, 75.0, -30.0],
            &[42.0, -84.0, 126.0, -84.0, 42.0],
        ),
    ]
}

/// Bracket of `g₁` without its prefactor.
fn g1_bracket(q: f64, s: f64, kk: f64, ee: f64) -> f64 {
    ((q * q - q + 1.0) + (q - 2.0) * s) * kk + 3.0 * s * ee
}

/// Bracket of `g₃` without its prefactor.
fn g3_bracket(q: f64, s: f64) -> f64 {
    split(q, s, &[2.0, -3.0, -3.0, 2.0], &[2.0, -2.0, 2.0])
}

/// `k (k² - 1) √(k⁴ - k² + 1)`, the common denominator of the derivatives.
fn derivative_denominator(k: f64) -> f64 {
    k * (k * k - 1.0) * radical(k)
}

/// `g₁(k) = 12800 K³ / (9 L³) [((k⁴-k²+1) + (k²-2)s) K + 3 s E]`.
pub fn g1(period: f64, k: f64, kk: f64, ee: f64) -> f64 {
    let (q, s) = (k * k, radical(k));
    12_800.0 * kk.powi(3) / (9.0 * period.powi(3)) * g1_bracket(q, s, kk, ee)
}

/// `g₃(k) = -204800 K⁶ / (27 L⁶) [2k⁶-3k⁴-3k²+2 + (2k⁴-2k²+2)s]`.
pub fn g3(period: f64, k: f64, kk: f64, _ee: f64) -> f64 {
    let (q, s) = (k * k, radical(k));
    -204_800.0 * kk.powi(6) / (27.0 * period.powi(6)) * g3_bracket(q, s)
}

fn s1(period: f64, k: f64, kk: f64, ee: f64) -> f64 {
    let (q, s) = (k * k, radical(k));
    let bracket = horner(q, &[70.0, -125.0, 225.0, -200.0, 100.0]) * kk
        + horner(q, &[70.0, -252.0, 336.0, -224.0]) * s * kk
        + horner(q, &[-30.0, 45.0, 45.0, -30.0]) * ee
        + horner(q, &[294.0, -294.0, 294.0]) * s * ee;
    32_768_000.0 * kk.powi(7) / (567.0 * period.powi(7)) * bracket
}

fn s2(period: f64, k: f64, kk: f64, ee: f64) -> f64 {
    let (q, s) = (k * k, radical(k));
    let bracket = horner(q, &[7.0, -28.0, 42.0, -35.0, 14.0]) * kk
        + horner(q, &[-5.0, -5.0, 20.0, -10.0]) * s * kk
        + horner(q, &[-14.0, 28.0, -42.0, 28.0, -14.0]) * ee
        + horner(q, &[10.0, -15.0, -15.0, 10.0]) * s * ee;
    -1_048_576_000.0 * kk.powi(9) / (189.0 * period.powi(9)) * bracket
}

/// `dg₃/dk` at fixed `L`. Singular at `k = 0` and `k = 1`.
pub fn dg3(period: f64, k: f64, kk: f64, ee: f64) -> f64 {
    let p = p_polynomials(EllipticModulus::new(k).expect("modulus in (0, 1)"));
    409_600.0 * kk.powi(5) / (9.0 * period.powi(6) * derivative_denominator(k))
        * (p[3] * kk + p[4] * ee)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValues {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub s1: f64,
    pub s2: f64,
}

pub fn g_functions(p: &WaveParams) -> GValues {
    let (l, k, kk, ee) = (p.period, p.modulus, p.complete_k, p.complete_e);
    let (a, b) = (s1(l, k, kk, ee), s2(l, k, kk, ee));
    GValues {
        g1: g1(l, k, kk, ee),
        g2: 0.5 * (a + b),
        g3: g3(l, k, kk, ee),
        s1: a,
        s2: b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GDerivatives {
    pub dg1: f64,
    pub dg2: f64,
    pub dg3: f64,
    pub ds1: f64,
    pub ds2: f64,
}

fn check_band(k: f64) -> Result<()> {
    let (lo, hi) = DERIVATIVE_BAND;
    if !(k > lo && k < hi) {
        return Err(domain(format!(
            "derivative formulas need k in ({lo}, {hi}), got {k}"
        )));
    }
    Ok(())
}

pub fn g_derivatives(p: &WaveParams) -> Result<GDerivatives> {
    check_band(p.modulus)?;
    let (l, k, kk, ee) = (p.period, p.modulus, p.complete_k, p.complete_e);
    let pp = p_polynomials(p.elliptic_modulus());
    let den = derivative_denominator(k);
    let quad = |a: f64, b: f64, c: f64| a * kk * kk + b * ee * kk + c * ee * ee;
    let dg1 = 12_800.0 * kk * kk / (9.0 * l.powi(3) * den) * quad(pp[0], pp[1], pp[2]);
    let ds1 = 32_768_000.0 * kk.powi(6) / (81.0 * l.powi(7) * den) * quad(pp[5], pp[6], pp[7]);
    let ds2 = -1_048_576_000.0 * kk.powi(8) / (63.0 * l.powi(9) * den) * quad(pp[8], pp[9], pp[10]);
    Ok(GDerivatives {
        dg1,
        dg2: 0.5 * (ds1 + ds2),
        dg3: dg3(l, k, kk, ee),
        ds1,
        ds2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MValues {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

pub fn m_functions(k: EllipticModulus) -> MValues {
    let ci = complete_integrals(k);
    let (kk, ee) = (ci.k, ci.e);
    let (q, s) = (k.squared(), radical(k.get()));
    let p = p_polynomials(k);
    let quad = |a: f64, b: f64, c: f64| a * kk * kk + b * ee * kk + c * ee * ee;
    MValues {
        m1: quad(p[5], p[6], p[7]),
        m2: quad(p[8], p[9], p[10]),
        m3: g3_bracket(q, s) * quad(p[0], p[1], p[2]),
        m4: g1_bracket(q, s, kk, ee) * (p[3] * kk + p[4] * ee),
    }
}

/// `X m₁/9 - 32 m₂ K²/7 - 160 m₃ K²/9 + 640 m₄ K²/9`.
fn m_combination(x: f64, m: &MValues, kk: f64) -> f64 {
    let k2 = kk * kk;
    x * m.m1 / 9.0 - 32.0 * m.m2 * k2 / 7.0 - 160.0 * m.m3 * k2 / 9.0 + 640.0 * m.m4 * k2 / 9.0
}

/// `r(k) = 16π² m₁/9 - 32 m₂ K²/7 - 160 m₃ K²/9 + 640 m₄ K²/9`, free of `L`.
pub fn r_function(k: EllipticModulus) -> f64 {
    let kk = complete_integrals(k).k;
    m_combination(16.0 * PI * PI, &m_functions(k), kk)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FValues {
    pub f1: f64,
    /// `g₂' + 3 g₃ g₁' + 2 g₁ g₃'`, computed directly.
    pub f2: f64,
    pub f3: f64,
    pub r: f64,
    /// `L² m₁/9 - 32 m₂ K²/7 - 160 m₃ K²/9 + 640 m₄ K²/9`; negative iff `f₂ > 0`.
    pub m_bracket: f64,
}

impl FValues {
    /// `f₂ k(k²-1)√(k⁴-k²+1) L⁹ / K⁶`, which equals `(16384000/9) · m_bracket`.
    pub fn f2_scaled(&self, p: &WaveParams) -> f64 {
        self.f2 * derivative_denominator(p.modulus) * p.period.powi(9) / p.complete_k.powi(6)
    }
}

/// Ratio between [`FValues::f2_scaled`] and [`FValues::m_bracket`].
pub const F2_BRACKET_FACTOR: f64 = 16_384_000.0 / 9.0;

pub fn f_and_r(p: &WaveParams) -> Result<FValues> {
    let g = g_functions(p);
    let d = g_derivatives(p)?;
    let m = m_functions(p.elliptic_modulus());
    Ok(FValues {
        f1: 4.0 * g.g2 + 6.0 * g.g1 * g.g3,
        f2: d.dg2 + 3.0 * g.g3 * d.dg1 + 2.0 * g.g1 * d.dg3,
        f3: d.dg1 * d.dg3,
        r: r_function(p.elliptic_modulus()),
        m_bracket: m_combination(p.period * p.period, &m, p.complete_k),
    })
}

/// `Φ` from the closed forms.
pub fn phi_analytic(p: &WaveParams) -> Result<f64> {
    let f = f_and_r(p)?;
    let (dc, _) = p.dparams_dk();
    let c = p.speed;
    Ok(-(f.f1 * c.powi(3) * dc * dc + f.f2 * c.powi(4) * dc + f.f3 * c.powi(5)))
}

/// `Φ` by three routes that avoid the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiNumeric {
    /// `⟨𝓛ₖ ∂ₖφ, ∂ₖφ⟩` with the collocation matrix.
    pub quadratic_form: f64,
    /// `-(M'ₖ(φₖ), ∂ₖφ)` with `M' = c'(φ - φ'') + A'`.
    pub gradient_pairing: f64,
    /// `-(c' ∂ₖQ(φₖ) + A' ∂ₖV(φₖ))`, both `∂ₖ` by central differences.
    pub conserved_route: f64,
}

pub fn phi_numeric(p: &WaveParams) -> Result<PhiNumeric> {
    phi_numeric_with(p, PHI_GRID, PHI_STEP)
}

pub fn phi_numeric_with(p: &WaveParams, n: usize, h: f64) -> Result<PhiNumeric> {
    let grid = Grid::new(n, p.period)?;
    let dphi_dk = p.k_derivative_samples(n, h)?;
    let op = assemble_linearized_operator(p, &grid)?;
    let l_dphi = op.apply(&dphi_dk);
    let pairing: Vec<f64> = l_dphi.iter().zip(&dphi_dk).map(|(a, b)| a * b).collect();
    let quadratic_form = trapezoid(&pairing, p.period);

    let (dc, da) = p.dparams_dk();
    let phi = p.samples(n);
    let field = PeriodicField::new(p.period, phi.clone())?;
    let d2 = field.derivative(2);
    let grad: Vec<f64> = phi
        .iter()
        .zip(&d2)
        .zip(&dphi_dk)
        .map(|((f, f2), g)| (dc * (f - f2) + da) * g)
        .collect();
    let gradient_pairing = -trapezoid(&grad, p.period);

    let plus = p.with_modulus(p.modulus + h)?;
    let minus = p.with_modulus(p.modulus - h)?;
    let (qp, vp) = profile_q_v(&plus, n);
    let (qm, vm) = profile_q_v(&minus, n);
    let conserved_route = -(dc * (qp - qm) + da * (vp - vm)) / (2.0 * h);

    Ok(PhiNumeric {
        quadratic_form,
        gradient_pairing,
        conserved_route,
    })
}

/// `(Q(φₖ), V(φₖ))` by the trapezoid rule with the analytic `φₖ'`.
fn profile_q_v(p: &WaveParams, n: usize) -> (f64, f64) {
    let ev = p.evaluator();
    let (mut q, mut v) = (0.0, 0.0);
    for x in nodes(n, p.period) {
        let pt = ev.eval(x);
        q += pt.phi * pt.phi + pt.dphi * pt.dphi;
        v += pt.phi;
    }
    let w = p.period / n as f64;
    (0.5 * q * w, v * w)
}

/// `C₂ₙ = ∫₀^L cn²ⁿ(2Kx/L, k) dx` for `n = 1 … n_max`.
///
/// `C̃₂`, `C̃₄` are closed forms; higher orders use the three-term
/// recursion, which divides by `k²` at every step and loses accuracy
/// like `ε/k¹⁰` for small moduli.
pub fn cn_power_integrals(p: &WaveParams, n_max: usize) -> Result<Vec<f64>> {
    if !(1..=5).contains(&n_max) {
        return Err(Error::Config(format!("n_max must lie in 1..=5, got {n_max}")));
    }
    let (kk, ee) = (p.complete_k, p.complete_e);
    let q = p.modulus * p.modulus;
    let mut tilde = vec![kk, (ee - (1.0 - q) * kk) / q];
    tilde.push(((2.0 - 3.0 * q) * (1.0 - q) * kk + 2.0 * (2.0 * q - 1.0) * ee) / (3.0 * q * q));
    for n in 2..n_max {
        let nf = n as f64;
        let next = (2.0 * nf * (2.0 * q - 1.0) * tilde[n] + (2.0 * nf - 1.0) * (1.0 - q) * tilde[n - 1])
            / ((2.0 * nf + 1.0) * q);
        tilde.push(next);
    }
    Ok(tilde[1..=n_max].iter().map(|t| p.period / kk * t).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedIntegrals {
    /// `∫ φₖ`
    pub v_int: f64,
    /// `∫ φₖ²`
    pub q_int: f64,
    /// `∫ (φₖ')²`
    pub dphi_int: f64,
}

impl ConservedIntegrals {
    pub fn q(&self) -> f64 {
        0.5 * (self.q_int + self.dphi_int)
    }
}

/// `∫φₖ`, `∫φₖ²` and `∫φₖ'²` expanded in powers of `cn²`.
pub fn conserved_representations(p: &WaveParams) -> Result<ConservedIntegrals> {
    let c = cn_power_integrals(p, 5)?;
    // moments[j] = ∫ cn^{2j}, j = 0 … 5
    let mut moments = vec![p.period];
    moments.extend(c);
    let (a, b) = (p.amplitude, p.offset);
    let q = p.modulus * p.modulus;
    let integrate = |coeffs: &[f64]| -> f64 { coeffs.iter().zip(&moments).map(|(x, m)| x * m).sum() };

    let v_int = a * a * integrate(&[b * b, 2.0 * b, 1.0]);
    let q_int = a.powi(4) * integrate(&[b.powi(4), 4.0 * b.powi(3), 6.0 * b * b, 4.0 * b, 1.0]);

    // φ'² = 16 a⁴ (2K/L)² (b + w)² w (1 - w)(1 - k² + k² w), w = cn²
    let mut poly = vec![0.0, 1.0];
    for factor in [[b, 1.0], [b, 1.0], [1.0, -1.0], [1.0 - q, q]] {
        poly = poly_mul(&poly, &factor);
    }
    let scale = 2.0 * p.complete_k / p.period;
    let dphi_int = 16.0 * a.powi(4) * scale * scale * integrate(&poly);
    Ok(ConservedIntegrals {
        v_int,
        q_int,
        dphi_int,
    })
}

/// Product of polynomials stored lowest degree first.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `Mₖ(u) = (∂c/∂k) Q(u) + (∂A/∂k) V(u)`.
pub fn m_functional(p: &WaveParams, u: &PeriodicField) -> Result<f64> {
    if (u.period() - p.period).abs() > 1e-12 * p.period {
        return Err(Error::Config(format!(
            "field period {} differs from wave period {}",
            u.period(),
            p.period
        )));
    }
    let (dc, da) = p.dparams_dk();
    let cq = conserved(u);
    Ok(dc * cq.q + da * cq.v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub period: f64,
    pub modulus: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub s1: f64,
    pub s2: f64,
    pub dg1: f64,
    pub dg2: f64,
    pub dg3: f64,
    pub ds1: f64,
    pub ds2: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub r: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m_bracket: f64,
    pub phi_analytic: f64,
    pub phi_numeric: f64,
    pub phi_gradient_pairing: f64,
    pub phi_conserved_route: f64,
    pub m_value: f64,
    pub e_val: f64,
    pub q_val: f64,
    pub v_val: f64,
}

impl StabilityReport {
    pub fn new(p: &WaveParams) -> Result<Self> {
        let g = g_functions(p);
        let d = g_derivatives(p)?;
        let f = f_and_r(p)?;
        let m = m_functions(p.elliptic_modulus());
        let num = phi_numeric(p)?;
        let field = PeriodicField::new(p.period, p.samples(PHI_GRID))?;
        let cq = conserved(&field);
        Ok(Self {
            period: p.period,
            modulus: p.modulus,
            g1: g.g1,
            g2: g.g2,
            g3: g.g3,
            s1: g.s1,
            s2: g.s2,
            dg1: d.dg1,
            dg2: d.dg2,
            dg3: d.dg3,
            ds1: d.ds1,
            ds2: d.ds2,
            f1: f.f1,
            f2: f.f2,
            f3: f.f3,
            r: f.r,
            m1: m.m1,
            m2: m.m2,
            m3: m.m3,
            m4: m.m4,
            m_bracket: f.m_bracket,
            phi_analytic: phi_analytic(p)?,
            phi_numeric: num.quadratic_form,
            phi_gradient_pairing: num.gradient_pairing,
            phi_conserved_route: num.conserved_route,
            m_value: m_functional(p, &field)?,
            e_val: cq.e,
            q_val: cq.q,
            v_val: cq.v,
        })
    }

    /// Names of the sign conditions that fail.
    pub fn violations(&self) -> Vec<&'static str> {
        let checks = [
            ("phi_analytic < 0", self.phi_analytic < 0.0),
            ("phi_numeric < 0", self.phi_numeric < 0.0),
            ("f1 > 0", self.f1 > 0.0),
            ("f2 > 0", self.f2 > 0.0),
            ("f3 > 0", self.f3 > 0.0),
            ("r < 0", self.r < 0.0),
            ("m1 < 0", self.m1 < 0.0),
            ("M(phi) > 0", self.m_value > 0.0),
        ];
        checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.violations().is_empty()
    }
}
