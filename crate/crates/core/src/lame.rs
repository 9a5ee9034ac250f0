//! The bottom of the spectrum of `𝓛ₖ` in closed form.
//!
//! With `y = x/η` the eigenproblem `𝓛ₖχ = λχ` becomes the Lamé equation
//!
//! ```text
//! Λ'' + (h - 30 k² sn²(y, k)) Λ = 0,   λ = (4K²/m̃)(h + 6√(k⁴-k²+1) - 10(k²+1))
//! ```
//!
//! whose five lowest `2K`-periodic solutions are `cn·dn·(sn + D₃sn³)` for the
//! two roots of a quadratic in `h` and `dn·(1 + C₂sn² + C₄sn⁴)` for the three
//! roots of a cubic.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::nodes;
use crate::special::{EllipticModulus, JacobiEvaluator};
use crate::wave::{radical, WaveParams};

/// Tolerance on the arccos argument of the trigonometric method.
const ARCCOS_SLACK: f64 = 1e-12;

/// Default zero-counting grid.
pub const ZERO_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LameFamily {
    /// `cn·dn·(sn + D₃ sn³)`
    OddCnDnSn,
    /// `dn·(1 + C₂ sn² + C₄ sn⁴)`
    EvenDn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LameEigenpair {
    pub h: f64,
    pub family: LameFamily,
    pub d3: Option<f64>,
    pub c2: Option<f64>,
    pub c4: Option<f64>,
    /// Zeros in one period `[0, 2K)` of `y`.
    pub zero_count: usize,
}

impl LameEigenpair {
    fn new(k: EllipticModulus, h: f64, family: LameFamily) -> Self {
        let q = k.squared();
        let (d3, c2, c4) = match family {
            LameFamily::OddCnDnSn => (Some(odd_coefficient(q, h)), None, None),
            LameFamily::EvenDn => {
                let (c2, c4) = even_coefficients(q, h);
                (None, Some(c2), Some(c4))
            }
        };
        let mut pair = Self {
            h,
            family,
            d3,
            c2,
            c4,
            zero_count: 0,
        };
        let ev = JacobiEvaluator::new(k);
        let two_k = 2.0 * ev.quarter_period();
        pair.zero_count = zeros_on_period(|y| pair.eval(&ev, y), two_k, ZERO_GRID).len();
        pair
    }

    /// `Λ(y)`
    pub fn eval(&self, ev: &JacobiEvaluator, y: f64) -> f64 {
        let j = ev.eval(y);
        let s2 = j.sn * j.sn;
        match self.family {
            LameFamily::OddCnDnSn => j.cn * j.dn * j.sn * (1.0 + self.d3.unwrap_or(0.0) * s2),
            LameFamily::EvenDn => {
                j.dn * (1.0 + s2 * (self.c2.unwrap_or(0.0) + self.c4.unwrap_or(0.0) * s2))
            }
        }
    }
}

/// `D₃ = (4k² + 4 - h)/6`
fn odd_coefficient(q: f64, h: f64) -> f64 {
    (4.0 * q + 4.0 - h) / 6.0
}

/// `C₂ = (k² - h)/2`, `C₄ = (28k² - C₂(h - 4 - 9k²))/12`
fn even_coefficients(q: f64, h: f64) -> (f64, f64) {
    let c2 = 0.5 * (q - h);
    (c2, (28.0 * q - c2 * (h - 4.0 - 9.0 * q)) / 12.0)
}

/// Coefficients `(z₁, z₂, z₃)` of the monic cubic `h³ + z₁h² + z₂h + z₃`.
pub fn cubic_coefficients(k: EllipticModulus) -> (f64, f64, f64) {
    let q = k.squared();
    (
        -(20.0 + 35.0 * q),
        64.0 + 536.0 * q + 259.0 * q * q,
        -q * (960.0 + q * (1860.0 + 225.0 * q)),
    )
}

/// `h² - 20(1+k²)h + 64(1+k²)² + 108k²` at `h`.
pub fn quadratic_residual(k: EllipticModulus, h: f64) -> f64 {
    let q = k.squared();
    h * h - 20.0 * (1.0 + q) * h + 64.0 * (1.0 + q) * (1.0 + q) + 108.0 * q
}

pub fn cubic_residual(k: EllipticModulus, h: f64) -> f64 {
    let (z1, z2, z3) = cubic_coefficients(k);
    ((h + z1) * h + z2) * h + z3
}

/// `h₁ = 10(1+k²) + 6√(k⁴-k²+1) > h₂ = 10(1+k²) - 6√(k⁴-k²+1)`.
pub fn lame_quadratic_roots(k: EllipticModulus) -> (f64, f64) {
    let q = k.squared();
    let s = radical(k.get());
    (10.0 * (1.0 + q) + 6.0 * s, 10.0 * (1.0 + q) - 6.0 * s)
}

/// `(h₃, h₄, h₅)` by the trigonometric method, phases `-4π/3, -2π/3, 0`.
pub fn lame_cubic_roots(k: EllipticModulus) -> Result<(f64, f64, f64)> {
    let (z1, z2, z3) = cubic_coefficients(k);
    let pq = 3.0 * z2 - z1 * z1;
    if pq >= 0.0 {
        return Err(Error::Numeric(format!(
            "Lamé cubic is not in the three-real-root regime at k = {}",
            k.get()
        )));
    }
    let mut arg = (2.0 * z1.powi(3) - 9.0 * z1 * z2 + 27.0 * z3) / (6.0 * pq) * (-9.0 / pq).sqrt();
    if arg.abs() > 1.0 + ARCCOS_SLACK {
        return Err(Error::Numeric(format!(
            "arccos argument {arg} outside [-1, 1] at k = {}",
            k.get()
        )));
    }
    arg = arg.clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let radius = 2.0 * (-pq / 9.0).sqrt();
    let root = |phase: f64| radius * (theta - phase).cos() - z1 / 3.0;
    Ok((root(4.0 * PI / 3.0), root(2.0 * PI / 3.0), root(0.0)))
}

/// Analytic `λ₀ … λ₄` with their Lamé data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorSpectrum {
    pub lambdas: [f64; 5],
    /// `h₃, h₂, h₄, h₁, h₅`
    pub h_values: [f64; 5],
    pub eta: f64,
    pub pairs: [LameEigenpair; 5],
}

/// `4K²/m̃ (h + 6√(k⁴-k²+1) - 10(k²+1))`
pub fn lambda_from_h(p: &WaveParams, h: f64) -> f64 {
    let q = p.modulus * p.modulus;
    4.0 * p.complete_k * p.complete_k / p.m_tilde * (h + 6.0 * radical(p.modulus) - 10.0 * (q + 1.0))
}

pub fn operator_eigenvalues(p: &WaveParams) -> Result<OperatorSpectrum> {
    let k = p.elliptic_modulus();
    let (h1, h2) = lame_quadratic_roots(k);
    let (h3, h4, h5) = lame_cubic_roots(k)?;
    // h₅ - h₁ shrinks like k⁸, so the last comparison allows for rounding.
    let slack = 64.0 * f64::EPSILON * h5;
    if !(h3 < h2 && h2 < h4 && h4 < h1 && h1 < h5 + slack) {
        return Err(Error::Numeric(format!(
            "Lamé roots do not interleave at k = {}: {h3} {h2} {h4} {h1} {h5}",
            p.modulus
        )));
    }
    let h_values = [h3, h2, h4, h1, h5];
    let families = [
        LameFamily::EvenDn,
        LameFamily::OddCnDnSn,
        LameFamily::EvenDn,
        LameFamily::OddCnDnSn,
        LameFamily::EvenDn,
    ];
    let lambdas = h_values.map(|h| lambda_from_h(p, h));
    Ok(OperatorSpectrum {
        lambdas,
        h_values,
        eta: p.eta,
        pairs: [0, 1, 2, 3, 4].map(|i| LameEigenpair::new(k, h_values[i], families[i])),
    })
}

/// `χ_index` on the `x`-axis, unnormalized.
pub struct EigenfunctionEvaluator {
    pair: LameEigenpair,
    jacobi: JacobiEvaluator,
    eta: f64,
}

impl EigenfunctionEvaluator {
    pub fn new(index: usize, p: &WaveParams) -> Result<Self> {
        if index > 4 {
            return Err(Error::Config(format!("eigenfunction index must be 0..=4, got {index}")));
        }
        let bottom = operator_eigenvalues(p)?;
        Ok(Self {
            pair: bottom.pairs[index],
            jacobi: JacobiEvaluator::new(p.elliptic_modulus()),
            eta: p.eta,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pair.eval(&self.jacobi, x / self.eta)
    }

    pub fn pair(&self) -> &LameEigenpair {
        &self.pair
    }
}

pub fn eigenfunction(index: usize, p: &WaveParams, x: f64) -> Result<f64> {
    Ok(EigenfunctionEvaluator::new(index, p)?.eval(x))
}

/// `χ_index` at `n` uniform nodes, scaled to unit discrete L² norm.
pub fn normalized_eigenfunction_samples(index: usize, p: &WaveParams, n: usize) -> Result<Vec<f64>> {
    let ev = EigenfunctionEvaluator::new(index, p)?;
    let mut v: Vec<f64> = nodes(n, p.period).into_iter().map(|x| ev.eval(x)).collect();
    let norm = (v.iter().map(|a| a * a).sum::<f64>() * p.period / n as f64).sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    Ok(v)
}

/// `χ₁ = C₀ φₖ'` with `C₀ = -L / (8a²(b+1)K)`.
pub fn translation_constant(p: &WaveParams) -> f64 {
    -p.period / (8.0 * p.amplitude * p.amplitude * (p.offset + 1.0) * p.complete_k)
}

/// Zeros of `f` on `[0, period)`, located by sign changes on a grid offset
/// by half a cell, then refined by bisection.
pub fn zeros_on_period<F: Fn(f64) -> f64>(f: F, period: f64, n: usize) -> Vec<f64> {
    let h = period / n as f64;
    let xs: Vec<f64> = (0..=n).map(|j| (j as f64 + 0.5) * h).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for j in 0..n {
        let (mut a, mut b) = (xs[j], xs[j + 1]);
        let (mut fa, fb) = (vals[j], vals[j + 1]);
        if fa == 0.0 {
            out.push(a % period);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        out.push((0.5 * (a + b)) % period);
    }
    out.sort_by(f64::total_cmp);
    out
}
