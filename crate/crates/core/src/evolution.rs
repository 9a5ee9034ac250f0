//! Pseudospectral time stepping of the regularized Schamel equation in the
//! integral form
//!
//! ```text
//! u_t = 𝒦 * (u + |u|^{3/2}),   𝒦̂(ξ) = -iξ / (1 + ξ²)
//! ```
//!
//! plus the conserved quantities and the orbit pseudo-metric `ρ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{nodes, trapezoid, Fourier};
use crate::wave::WaveParams;

/// `max |u|` above which a run is declared blown up.
pub const BLOW_UP: f64 = 1e6;

/// Default perturbation seed.
pub const DEFAULT_SEED: u64 = 0x5eed_cafe_f00d_0001;

/// Number of Fourier modes in the default perturbation.
const PERTURBATION_MODES: usize = 8;

/// Samples of an `L`-periodic function on `N` uniform nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    period: f64,
    values: Vec<f64>,
}

impl PeriodicField {
    pub const MIN_NODES: usize = 64;

    pub fn new(period: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < Self::MIN_NODES || !n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "field needs an even number of samples >= {}, got {n}",
                Self::MIN_NODES
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("field period must be positive, got {period}")));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite sample at node {j}")));
        }
        Ok(Self { period, values })
    }

    /// Samples `f` at the nodes `jL/N`.
    pub fn from_fn<F: Fn(f64) -> f64>(period: f64, n: usize, f: F) -> Result<Self> {
        Self::new(period, nodes(n, period).into_iter().map(f).collect())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn derivative(&self, order: u32) -> Vec<f64> {
        Fourier::new(self.len(), self.period).derivative(&self.values, order)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `-iξ/(1+ξ²)` per FFT bin, with the Nyquist bin zeroed.
fn kernel_symbol(fourier: &Fourier) -> Vec<Complex64> {
    let n = fourier.len();
    fourier
        .wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &xi)| {
            if j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -xi / (1.0 + xi * xi))
            }
        })
        .collect()
}

#[inline]
fn nonlinearity(u: f64) -> f64 {
    let a = u.abs();
    u + a * a.sqrt()
}

pub fn apply_kernel(f: &PeriodicField) -> PeriodicField {
    let mut fourier = Fourier::new(f.len(), f.period);
    let symbol = kernel_symbol(&fourier);
    let mut hat = fourier.forward(&f.values);
    hat.iter_mut().zip(&symbol).for_each(|(c, s)| *c *= s);
    PeriodicField {
        period: f.period,
        values: fourier.inverse_real(hat),
    }
}

/// `𝒦 * (u + |u|^{3/2})`
pub fn rhs(u: &PeriodicField) -> PeriodicField {
    let f = PeriodicField {
        period: u.period,
        values: u.values.iter().map(|&v| nonlinearity(v)).collect(),
    };
    apply_kernel(&f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Picard,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "picard" => Ok(Self::Picard),
            other => Err(Error::Config(format!("unknown scheme {other:?}, expected rk4 or picard"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_max: f64,
    pub scheme: Scheme,
    pub picard_iters: usize,
    pub record_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 1.0,
            scheme: Scheme::Rk4,
            picard_iters: 4,
            record_every: 100,
        }
    }
}

impl EvolveConfig {
    pub const MAX_DT: f64 = 0.1;

    /// Checks the invariants and returns the number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt <= Self::MAX_DT) {
            return Err(Error::Config(format!("dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.picard_iters < 2 {
            return Err(Error::Config("picard_iters must be at least 2".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        let ratio = self.t_max / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "t_max / dt = {ratio} is not an integer"
            )));
        }
        Ok(steps as usize)
    }
}

/// Owns the FFT plans and stage buffers for one run.
#[derive(Debug, Clone)]
pub struct Stepper {
    fourier: Fourier,
    symbol: Vec<Complex64>,
    cfg: EvolveConfig,
    stages: [Vec<f64>; 5],
}

impl Stepper {
    pub fn new(n: usize, period: f64, cfg: EvolveConfig) -> Result<Self> {
        cfg.steps()?;
        let fourier = Fourier::new(n, period);
        let symbol = kernel_symbol(&fourier);
        Ok(Self {
            fourier,
            symbol,
            cfg,
            stages: std::array::from_fn(|_| vec![0.0; n]),
        })
    }

    pub fn config(&self) -> &EvolveConfig {
        &self.cfg
    }

    fn rhs_into(&mut self, u: &[f64], out: &mut [f64]) {
        let f: Vec<f64> = u.iter().map(|&v| nonlinearity(v)).collect();
        let mut hat = self.fourier.forward(&f);
        hat.iter_mut().zip(&self.symbol).for_each(|(c, s)| *c *= s);
        out.copy_from_slice(&self.fourier.inverse_real(hat));
    }

    /// Advances `u` by one step of size `dt`.
    pub fn step(&mut self, u: &mut [f64], t: f64) -> Result<()> {
        match self.cfg.scheme {
            Scheme::Rk4 => self.rk4(u),
            Scheme::Picard => self.picard(u),
        }
        let max_abs = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_abs.is_nan() || max_abs > BLOW_UP {
            return Err(Error::BlowUp {
                t: t + self.cfg.dt,
                max_abs,
            });
        }
        Ok(())
    }

    fn rk4(&mut self, u: &mut [f64]) {
        let dt = self.cfg.dt;
        let mut st = std::mem::take(&mut self.stages);
        let [k1, k2, k3, k4, tmp] = &mut st;
        self.rhs_into(u, k1);
        axpy(tmp, u, 0.5 * dt, k1);
        self.rhs_into(tmp, k2);
        axpy(tmp, u, 0.5 * dt, k2);
        self.rhs_into(tmp, k3);
        axpy(tmp, u, dt, k3);
        self.rhs_into(tmp, k4);
        for j in 0..u.len() {
            u[j] += dt / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
        }
        self.stages = st;
    }

    /// `u_{m+1} = u₀ + (dt/2)(F(u₀) + F(u_m))`, iterated from `u_0 = u₀`.
    fn picard(&mut self, u: &mut [f64]) {
        let dt = self.cfg.dt;
        let mut st = std::mem::take(&mut self.stages);
        let [f0, fm, iterate, _, _] = &mut st;
        self.rhs_into(u, f0);
        iterate.copy_from_slice(u);
        for _ in 0..self.cfg.picard_iters {
            self.rhs_into(iterate, fm);
            for j in 0..u.len() {
                iterate[j] = u[j] + 0.5 * dt * (f0[j] + fm[j]);
            }
        }
        u.copy_from_slice(iterate);
        self.stages = st;
    }
}

fn axpy(out: &mut [f64], u: &[f64], a: f64, k: &[f64]) {
    for ((o, &x), &y) in out.iter_mut().zip(u).zip(k) {
        *o = x + a * y;
    }
}

/// One step of `cfg.scheme` from `u`.
pub fn step(u: &PeriodicField, cfg: &EvolveConfig) -> Result<PeriodicField> {
    let mut stepper = Stepper::new(u.len(), u.period, *cfg)?;
    let mut v = u.values.clone();
    stepper.step(&mut v, 0.0)?;
    PeriodicField::new(u.period, v)
}

/// Integrates from `u0` to `cfg.t_max`.
pub fn evolve(u0: &PeriodicField, cfg: &EvolveConfig) -> Result<PeriodicField> {
    let steps = cfg.steps()?;
    let mut stepper = Stepper::new(u0.len(), u0.period, *cfg)?;
    let mut v = u0.values.clone();
    for i in 0..steps {
        stepper.step(&mut v, i as f64 * cfg.dt)?;
    }
    PeriodicField::new(u0.period, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    pub e: f64,
    pub q: f64,
    pub v: f64,
}

/// `E = ½∫(u_x² - (4/5) sgn(u)|u|^{5/2})`, `Q = ½∫(u² + u_x²)`, `V = ∫u`.
pub fn conserved(u: &PeriodicField) -> Conserved {
    let ux = u.derivative(1);
    let l = u.period;
    let e: Vec<f64> = u
        .values
        .iter()
        .zip(&ux)
        .map(|(&v, &d)| d * d - 0.8 * v.signum() * v.abs().powf(2.5))
        .collect();
    let q: Vec<f64> = u.values.iter().zip(&ux).map(|(&v, &d)| v * v + d * d).collect();
    Conserved {
        e: 0.5 * trapezoid(&e, l),
        q: 0.5 * trapezoid(&q, l),
        v: trapezoid(&u.values, l),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub rho: f64,
    pub e_val: f64,
    pub q_val: f64,
    pub v_val: f64,
}

/// Squared H¹ distance between `u` and the trigonometric interpolant of
/// `v(· + r)`, in Fourier space.
fn shifted_distance_sq(uh: &[Complex64], vh: &[Complex64], xi: &[f64], period: f64, r: f64) -> f64 {
    let n = uh.len();
    let nyq = n / 2;
    let mut sum = 0.0;
    for j in 0..n {
        let phase = if j == nyq {
            Complex64::new((xi[j] * r).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, xi[j] * r)
        };
        sum += (1.0 + xi[j] * xi[j]) * (uh[j] - vh[j] * phase).norm_sqr();
    }
    period * sum / (n as f64 * n as f64)
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// `ρ(u, v) = inf_r ‖u - v(· + r)‖_{H¹}` and the minimizing shift `r`.
///
/// All `N` grid shifts are scored at once through the cross-correlation
/// `IFFT((1+ξ²) û conj(v̂))`; the best is refined by golden section on the
/// exact distance.
pub fn orbital_distance_fields(u: &PeriodicField, v: &PeriodicField) -> Result<(f64, f64)> {
    if u.len() != v.len() || (u.period - v.period).abs() > 1e-12 * u.period {
        return Err(Error::Config("fields must share grid and period".into()));
    }
    let n = u.len();
    let l = u.period;
    let mut fourier = Fourier::new(n, l);
    let uh = fourier.forward(&u.values);
    let vh = fourier.forward(&v.values);
    let xi = fourier.wavenumbers().to_vec();
    let cross: Vec<Complex64> = uh
        .iter()
        .zip(&vh)
        .zip(&xi)
        .map(|((a, b), x)| (1.0 + x * x) * a * b.conj())
        .collect();
    let corr = fourier.inverse_real(cross);
    let dx = l / n as f64;
    let best = (0..n)
        .max_by(|&i, &j| corr[i].total_cmp(&corr[j]))
        .expect("non-empty grid");
    // corr[m] pairs u with v shifted by r = -m dx.
    let r0 = -(best as f64) * dx;
    let dist = |r: f64| shifted_distance_sq(&uh, &vh, &xi, l, r);
    let (r, d2) = golden_section(dist, r0 - dx, r0 + dx, 1e-12 * l);
    let r = r.rem_euclid(l);
    Ok((d2.max(0.0).sqrt(), r))
}

/// `ρ(u, φₖ)` with `φₖ` sampled on the grid of `u`.
pub fn orbital_distance(u: &PeriodicField, p: &WaveParams) -> Result<(f64, f64)> {
    if (u.period - p.period).abs() > 1e-12 * p.period {
        return Err(Error::Config(format!(
            "field period {} differs from wave period {}",
            u.period, p.period
        )));
    }
    let phi = PeriodicField::new(p.period, p.samples(u.len()))?;
    orbital_distance_fields(u, &phi)
}

/// Band-limited noise on modes `1..=8` with amplitudes decaying like `1/m²`,
/// rescaled to H¹ norm `epsilon`.
pub fn perturbation(period: f64, n: usize, epsilon: f64, seed: u64) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (1..=PERTURBATION_MODES)
        .map(|m| {
            let w = 1.0 / (m * m) as f64;
            (w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0))
        })
        .collect();
    let base = 2.0 * std::f64::consts::PI / period;
    let mut v: Vec<f64> = nodes(n, period)
        .into_iter()
        .map(|x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let arg = base * (i + 1) as f64 * x;
                    a * arg.cos() + b * arg.sin()
                })
                .sum()
        })
        .collect();
    let norm = Fourier::new(n, period).h1_norm_sq(&v).sqrt();
    v.iter_mut().for_each(|x| *x *= epsilon / norm);
    Ok(v)
}

/// Evolves `φₖ + perturbation` and records `(t, ρ, E, Q, V)`.
pub fn run_experiment(
    p: &WaveParams,
    epsilon: f64,
    cfg: &EvolveConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<TraceRecord>> {
    let steps = cfg.steps()?;
    let phi = PeriodicField::new(p.period, p.samples(n))?;
    let noise = perturbation(p.period, n, epsilon, seed)?;
    let mut u: Vec<f64> = phi.values.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let mut stepper = Stepper::new(n, p.period, *cfg)?;
    let record = |t: f64, u: &[f64]| -> Result<TraceRecord> {
        let field = PeriodicField::new(p.period, u.to_vec())?;
        let (rho, _) = orbital_distance_fields(&field, &phi)?;
        let c = conserved(&field);
        Ok(TraceRecord {
            t,
            rho,
            e_val: c.e,
            q_val: c.q,
            v_val: c.v,
        })
    };
    let mut trace = vec![record(0.0, &u)?];
    for i in 0..steps {
        stepper.step(&mut u, i as f64 * cfg.dt)?;
        if (i + 1) % cfg.record_every == 0 || i + 1 == steps {
            trace.push(record((i + 1) as f64 * cfg.dt, &u)?);
        }
    }
    Ok(trace)
}

/// `ρ(t) ≤ 10 ε` at every recorded time.
pub fn stability_verdict(trace: &[TraceRecord], epsilon: f64) -> bool {
    trace.iter().all(|r| r.rho <= 10.0 * epsilon)
}

/// Largest relative change of `E`, `Q`, `V` against the first record.
pub fn max_relative_drift(trace: &[TraceRecord]) -> (f64, f64, f64) {
    let first = trace[0];
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    trace.iter().fold((0.0, 0.0, 0.0), |(e, q, v), r| {
        (
            e.max(rel(r.e_val, first.e_val)),
            q.max(rel(r.q_val, first.q_val)),
            v.max(rel(r.v_val, first.v_val)),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wave() -> WaveParams {
        WaveParams::from_modulus(16.0, 0.3).unwrap()
    }

    fn cfg(dt: f64, t_max: f64) -> EvolveConfig {
        EvolveConfig {
            dt,
            t_max,
            ..EvolveConfig::default()
        }
    }

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn field_validation() {
        assert!(PeriodicField::new(16.0, vec![0.0; 63]).is_err());
        assert!(PeriodicField::new(16.0, vec![0.0; 32]).is_err());
        let mut v = vec![0.0; 64];
        v[3] = f64::NAN;
        assert!(PeriodicField::new(16.0, v).is_err());
    }

    #[test]
    fn kernel_on_simple_fields() {
        let l = 16.0;
        let c = PeriodicField::new(l, vec![2.5; 64]).unwrap();
        assert!(apply_kernel(&c).values().iter().all(|v| v.abs() < 1e-15));
        let w = 2.0 * PI / l;
        let f = PeriodicField::from_fn(l, 64, |x| (w * x).cos()).unwrap();
        let g = apply_kernel(&f);
        for (x, v) in nodes(64, l).iter().zip(g.values()) {
            assert!((v - w / (1.0 + w * w) * (w * x).sin()).abs() < 1e-14);
        }
        let l = 2.0 * PI;
        let f = PeriodicField::from_fn(l, 64, |x| (3.0 * x).cos()).unwrap();
        let g = apply_kernel(&f);
        for (x, v) in nodes(64, l).iter().zip(g.values()) {
            assert!((v - 3.0 / 10.0 * (3.0 * x).sin()).abs() < 1e-14);
        }
        let noisy = PeriodicField::from_fn(16.0, 128, |x| (x * x).sin() + 0.3).unwrap();
        assert!(trapezoid(apply_kernel(&noisy).values(), 16.0).abs() < 1e-13);
    }

    #[test]
    fn rhs_fixed_points() {
        let z = PeriodicField::new(16.0, vec![0.0; 64]).unwrap();
        assert!(rhs(&z).values().iter().all(|v| *v == 0.0));
        let c = PeriodicField::new(16.0, vec![0.7; 64]).unwrap();
        assert!(rhs(&c).values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0.2, 1.0).steps().is_err());
        assert!(cfg(0.03, 1.0).steps().is_err());
        assert_eq!(cfg(1e-3, 1.0).steps().unwrap(), 1000);
        let mut c = cfg(1e-3, 1.0);
        c.picard_iters = 1;
        assert!(c.steps().is_err());
        assert_eq!("picard".parse::<Scheme>().unwrap(), Scheme::Picard);
        assert!("euler".parse::<Scheme>().is_err());
    }

    #[test]
    fn rk4_time_reversal_on_single_mode() {
        let l = 16.0;
        let w = 2.0 * PI * 2.0 / l;
        let u = PeriodicField::from_fn(l, 64, |x| 1e-8 * (w * x).cos()).unwrap();
        let dt = 0.05;
        let fwd = step(&u, &cfg(dt, dt)).unwrap();
        // The symbol is odd, so the mirror image x -> -x runs backwards in time.
        let mirrored = PeriodicField::new(l, {
            let v = fwd.values();
            (0..64).map(|j| v[(64 - j) % 64]).collect()
        })
        .unwrap();
        let back = step(&mirrored, &cfg(dt, dt)).unwrap();
        let restored: Vec<f64> = (0..64).map(|j| back.values()[(64 - j) % 64]).collect();
        let err = sup_diff(&restored, u.values());
        assert!(err < 1e-8 * dt.powi(5) * 10.0, "err {err}");
    }

    #[test]
    fn blow_up_guard() {
        let u = PeriodicField::from_fn(16.0, 64, |x| 2e6 * (x / 16.0 * 2.0 * PI).cos()).unwrap();
        assert!(matches!(step(&u, &cfg(1e-3, 1e-3)), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn traveling_wave_is_translated() {
        let p = wave();
        let n = 256;
        let u0 = PeriodicField::new(p.period, p.samples(n)).unwrap();
        let u1 = evolve(&u0, &cfg(1e-3, 1.0)).unwrap();
        let ev = p.evaluator();
        let exact: Vec<f64> = nodes(n, p.period).iter().map(|&x| ev.eval(x - p.speed).phi).collect();
        assert!(sup_diff(u1.values(), &exact) <= 1e-5);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let p = wave();
        let n = 256;
        let u0 = PeriodicField::new(p.period, p.samples(n)).unwrap();
        let t = 4.0;
        let ev = p.evaluator();
        let exact: Vec<f64> = nodes(n, p.period).iter().map(|&x| ev.eval(x - p.speed * t).phi).collect();
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&dt| sup_diff(evolve(&u0, &cfg(dt, t)).unwrap().values(), &exact))
            .collect();
        assert!(errs[0] / errs[1] >= 12.0, "{errs:?}");
    }

    #[test]
    fn picard_agrees_with_rk4() {
        let p = wave();
        let u0 = PeriodicField::new(p.period, p.samples(256)).unwrap();
        let a = evolve(&u0, &cfg(1e-3, 0.1)).unwrap();
        let mut c = cfg(1e-3, 0.1);
        c.scheme = Scheme::Picard;
        let b = evolve(&u0, &c).unwrap();
        assert!(sup_diff(a.values(), b.values()) <= 1e-4);
    }

    #[test]
    fn conserved_of_zero_and_profile() {
        let z = PeriodicField::new(16.0, vec![0.0; 64]).unwrap();
        let c = conserved(&z);
        assert_eq!((c.e, c.q, c.v), (0.0, 0.0, 0.0));
        let p = wave();
        let f = PeriodicField::new(p.period, p.samples(512)).unwrap();
        let g = crate::stability::g_functions(&p);
        let q = conserved(&f).q;
        assert!(((q - p.speed.powi(4) * g.g2) / q).abs() < 1e-8);
    }

    #[test]
    fn conservation_over_ten_time_units() {
        let p = wave();
        let mut c = cfg(1e-3, 10.0);
        c.record_every = 1000;
        let trace = run_experiment(&p, 1e-3, &c, 256, DEFAULT_SEED).unwrap();
        let (e, q, v) = max_relative_drift(&trace);
        assert!(e <= 1e-7 && q <= 1e-8 && v <= 1e-7, "{e} {q} {v}");
        assert!(stability_verdict(&trace, 1e-3));
    }

    #[test]
    fn distance_vanishes_on_orbit() {
        let p = wave();
        let n = 256;
        let ev = p.evaluator();
        let shifted = PeriodicField::from_fn(p.period, n, |x| ev.eval(x + p.period / 3.0).phi).unwrap();
        let (rho, r) = orbital_distance(&shifted, &p).unwrap();
        assert!(rho < 1e-10, "rho {rho}");
        let phi = PeriodicField::new(p.period, p.samples(n)).unwrap();
        let back = PeriodicField::from_fn(p.period, n, |x| ev.eval(x + r).phi).unwrap();
        assert!(sup_diff(back.values(), shifted.values()) < 1e-9);
        for m in [0, 17, 100] {
            let v: Vec<f64> = (0..n).map(|j| phi.values()[(j + m) % n]).collect();
            let (rho, _) = orbital_distance(&PeriodicField::new(p.period, v).unwrap(), &p).unwrap();
            assert!(rho < 1e-9);
        }
    }

    #[test]
    fn distance_bounded_by_perturbation_norm() {
        let p = wave();
        let eps = 1e-3;
        let w = 2.0 * PI / p.period;
        let ev = p.evaluator();
        let u = PeriodicField::from_fn(p.period, 256, |x| ev.eval(x).phi + eps * (w * x).cos()).unwrap();
        let (rho, _) = orbital_distance(&u, &p).unwrap();
        let bound = eps * (p.period * (1.0 + w * w) / 2.0).sqrt() * (1.0 + 1e-6);
        assert!(rho <= bound && rho > 0.0);
    }

    #[test]
    fn distance_is_symmetric_in_orbit() {
        let p = wave();
        let phi = PeriodicField::new(p.period, p.samples(256)).unwrap();
        let noise = perturbation(p.period, 256, 0.05, 3).unwrap();
        let u = PeriodicField::new(p.period, phi.values().iter().zip(&noise).map(|(a, b)| a + b).collect()).unwrap();
        let (a, _) = orbital_distance_fields(&u, &phi).unwrap();
        let (b, _) = orbital_distance_fields(&phi, &u).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn perturbation_has_requested_norm() {
        let v = perturbation(16.0, 256, 1e-3, DEFAULT_SEED).unwrap();
        let norm = Fourier::new(256, 16.0).h1_norm_sq(&v).sqrt();
        assert!((norm - 1e-3).abs() < 1e-15);
        assert_eq!(v, perturbation(16.0, 256, 1e-3, DEFAULT_SEED).unwrap());
        assert!(perturbation(16.0, 256, 0.0, 1).unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn unperturbed_run_stays_on_orbit() {
        let p = wave();
        let mut c = cfg(1e-3, 2.0);
        c.record_every = 500;
        let trace = run_experiment(&p, 0.0, &c, 256, DEFAULT_SEED).unwrap();
        assert!(trace.iter().all(|r| r.rho <= 1e-5));
    }
}
