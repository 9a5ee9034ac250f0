//! Complete elliptic integrals and Jacobi elliptic functions.
//!
//! Everything is parameterized by the modulus `k`, never by `m = k²`.
//! `K` and `E` come from the arithmetic-geometric mean; `sn`, `cn`, `dn`
//! from the AGM with backward recurrence of the amplitude.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest modulus accepted. Downstream formulas divide by `1 - k²`.
pub const MAX_MODULUS: f64 = 1.0 - 1e-12;

const AGM_MAX_ITER: usize = 64;

/// Elliptic modulus `k ∈ (0, 1 - 1e-12]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 || k > MAX_MODULUS {
            return Err(domain(format!(
                "elliptic modulus must lie in (0, 1 - 1e-12], got {k}"
            )));
        }
        Ok(Self(k))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `k²`
    #[inline]
    pub fn squared(self) -> f64 {
        self.0 * self.0
    }

    /// Complementary modulus `√(1 - k²)`.
    #[inline]
    pub fn complementary(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }
}

/// Complete elliptic integrals of both kinds, evaluated together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteIntegrals {
    pub k: f64,
    pub e: f64,
}

/// `K(k)` and `E(k)` by one AGM run.
///
/// With `a₀ = 1, b₀ = k', c₀ = k`, the AGM gives `K = π / (2 a_N)` and
/// `E = K (1 - Σ 2ⁿ⁻¹ cₙ²)`.
pub fn complete_integrals(k: EllipticModulus) -> CompleteIntegrals {
    let mut a = 1.0_f64;
    let mut b = k.complementary();
    let mut c = k.get();
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..AGM_MAX_ITER {
        let a_next = 0.5 * (a + b);
        let b_next = (a * b).sqrt();
        c = 0.5 * (a - b);
        pow *= 2.0;
        sum += pow * c * c;
        a = a_next;
        b = b_next;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    let kk = PI / (2.0 * a);
    CompleteIntegrals {
        k: kk,
        e: kk * (1.0 - sum),
    }
}

/// Complete elliptic integral of the first kind.
pub fn complete_elliptic_k(k: EllipticModulus) -> f64 {
    complete_integrals(k).k
}

/// Complete elliptic integral of the second kind.
pub fn complete_elliptic_e(k: EllipticModulus) -> f64 {
    complete_integrals(k).e
}

/// `(dK/dk, dE/dk)` from the classical closed forms.
pub fn elliptic_derivatives(k: EllipticModulus) -> (f64, f64) {
    let CompleteIntegrals { k: kk, e } = complete_integrals(k);
    let m = k.get();
    let kp2 = (1.0 - m) * (1.0 + m);
    let dk = (e - kp2 * kk) / (m * kp2);
    let de = (e - kk) / m;
    (dk, de)
}

/// Jacobi elliptic functions at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// Precomputed AGM ladder for one modulus, reusable across many arguments.
#[derive(Debug, Clone)]
pub struct JacobiEvaluator {
    modulus: EllipticModulus,
    quarter_period: f64,
    a: Vec<f64>,
    c: Vec<f64>,
}

impl JacobiEvaluator {
    pub fn new(k: EllipticModulus) -> Self {
        let mut a = vec![1.0];
        let mut c = vec![k.get()];
        let mut b = k.complementary();
        for _ in 0..AGM_MAX_ITER {
            let an = *a.last().unwrap();
            let a_next = 0.5 * (an + b);
            let c_next = 0.5 * (an - b);
            b = (an * b).sqrt();
            a.push(a_next);
            c.push(c_next);
            if c_next.abs() <= f64::EPSILON * a_next {
                break;
            }
        }
        let quarter_period = PI / (2.0 * a.last().unwrap());
        Self {
            modulus: k,
            quarter_period,
            a,
            c,
        }
    }

    pub fn modulus(&self) -> EllipticModulus {
        self.modulus
    }

    /// `K(k)` as produced by the same AGM ladder.
    pub fn quarter_period(&self) -> f64 {
        self.quarter_period
    }

    pub fn eval(&self, u: f64) -> Jacobi {
        // Reduce to [-2K, 2K) using the 4K period of sn and cn.
        let period = 4.0 * self.quarter_period;
        let mut v = u - period * (u / period).round();
        if v >= 0.5 * period {
            v -= period;
        }
        let n = self.a.len() - 1;
        let mut phi = (1u64 << n) as f64 * self.a[n] * v;
        for i in (1..=n).rev() {
            let ratio = (self.c[i] / self.a[i] * phi.sin()).clamp(-1.0, 1.0);
            phi = 0.5 * (phi + ratio.asin());
        }
        let (sn, cn) = phi.sin_cos();
        // dn² = k'² + k² cn² has no cancellation, unlike cn / cos(φ₁ - φ₀) near u = K.
        let kp = self.modulus.complementary();
        let k = self.modulus.get();
        let dn = (kp * kp + k * k * cn * cn).sqrt();
        Jacobi { sn, cn, dn }
    }
}

/// `(sn, cn, dn)(u, k)` for a single evaluation.
pub fn jacobi_elliptic(u: f64, k: EllipticModulus) -> Result<Jacobi> {
    if !u.is_finite() {
        return Err(domain(format!("argument u must be finite, got {u}")));
    }
    Ok(JacobiEvaluator::new(k).eval(u))
}

/// Limit `K(0⁺) = E(0⁺) = π/2`.
pub const K_AT_ZERO: f64 = FRAC_PI_2;
