//! Named invariant checks behind `verify`.
//!
//! Each check returns a short detail string on success and the reason on
//! failure. Checks are independent and run on a small worker pool; results
//! come back in declaration order.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schamel_core::evolution::{self, EvolveConfig, PeriodicField};
use schamel_core::fourier::trapezoid;
use schamel_core::lame::{self, operator_eigenvalues};
use schamel_core::operator::{assemble_linearized_operator, spectrum_report, Grid};
use schamel_core::special::{complete_integrals, JacobiEvaluator};
use schamel_core::stability::{self, DERIVATIVE_BAND};
use schamel_core::wave::{self, max_modulus, ode_residual, period_and_modulus};
use schamel_core::{EllipticModulus, WaveParams};

type CheckResult = Result<String, String>;

pub struct Record {
    pub name: &'static str,
    pub outcome: CheckResult,
    pub seconds: f64,
}

#[derive(Clone, Copy)]
struct Mode {
    quick: bool,
}

type Check = fn(Mode) -> CheckResult;

const CHECKS: &[(&str, Check)] = &[
    ("special.elliptic_identities", elliptic_identities),
    ("wave.profile_equations", profile_equations),
    ("wave.root_identities", root_identities),
    ("wave.ordering", ordering),
    ("wave.monotonicity", monotonicity),
    ("lame.polynomial_roots", lame_roots),
    ("lame.eigenfunction_residuals", eigenfunction_residuals),
    ("operator.spectrum", spectrum),
    ("stability.conserved_representations", conserved_representations),
    ("stability.cn_power_integrals", cn_power_integrals),
    ("stability.sign_conditions", sign_conditions),
    ("stability.phi_routes", phi_routes),
    ("stability.small_modulus_limits", small_modulus_limits),
    ("evolution.traveling_wave", traveling_wave),
    ("evolution.conservation", conservation),
    ("evolution.orbital_stability", orbital_stability),
];

pub fn run(quick: bool) -> Vec<Record> {
    let mode = Mode { quick };
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Record>>> = CHECKS.iter().map(|_| Mutex::new(None)).collect();
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(CHECKS.len());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(name, check)) = CHECKS.get(i) else { break };
                let start = Instant::now();
                let outcome = match std::panic::catch_unwind(|| check(mode)) {
                    Ok(r) => r,
                    Err(_) => Err("panicked".into()),
                };
                let rec = Record {
                    name,
                    outcome,
                    seconds: start.elapsed().as_secs_f64(),
                };
                *slots[i].lock().unwrap() = Some(rec);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every check ran"))
        .collect()
}

fn core<T>(r: schamel_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `(L, k)` cases with `k` drawn from fixed values and `0.8 k_L`.
fn standard_grid() -> Result<Vec<WaveParams>, String> {
    let mut out = Vec::new();
    for l in [14.0, 16.0, 20.0, 40.0] {
        let kl = core(max_modulus(l))?;
        for k in [0.1, 0.3, 0.5, 0.8 * kl] {
            if k < kl {
                out.push(core(WaveParams::from_modulus(l, k))?);
            }
        }
    }
    Ok(out)
}

fn elliptic_identities(_: Mode) -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 1..20 {
        let k = 0.05 * i as f64;
        let m = core(EllipticModulus::new(k))?;
        let mc = core(EllipticModulus::new(m.complementary()))?;
        let (a, b) = (complete_integrals(m), complete_integrals(mc));
        let legendre = a.e * b.k + b.e * a.k - a.k * b.k - PI / 2.0;
        worst = worst.max(legendre.abs());
        let ev = JacobiEvaluator::new(m);
        for j in 0..64 {
            let u = -3.0 * a.k + 0.11 * a.k * j as f64;
            let v = ev.eval(u);
            worst = worst.max((v.sn * v.sn + v.cn * v.cn - 1.0).abs());
            worst = worst.max((v.dn * v.dn + k * k * v.sn * v.sn - 1.0).abs());
        }
    }
    ensure(worst < 1e-13, || format!("worst identity residual {worst:e}"))?;
    Ok(format!("max residual {worst:.1e}"))
}

fn profile_equations(_: Mode) -> CheckResult {
    let mut worst: f64 = 0.0;
    for p in standard_grid()? {
        let r = core(ode_residual(&p, 512))?;
        let el = r.euler_lagrange / p.a_integration.abs().max(1.0);
        ensure(el <= 1e-7 && r.quadrature <= 1e-7, || {
            format!(
                "L={} k={}: el {:e}, quad {:e}",
                p.period, p.modulus, r.euler_lagrange, r.quadrature
            )
        })?;
        worst = worst.max(el).max(r.quadrature);
    }
    Ok(format!("max residual {worst:.1e}"))
}

fn root_identities(_: Mode) -> CheckResult {
    let mut worst: f64 = 0.0;
    for p in standard_grid()? {
        let id = p.identity_residuals().max();
        let (t, k) = core(period_and_modulus(p.speed, p.beta2))?;
        let trip = rel(t, p.period).max((k - p.modulus).abs());
        ensure(id <= 1e-10 && trip <= 1e-10, || {
            format!("L={} k={}: identities {id:e}, round trip {trip:e}", p.period, p.modulus)
        })?;
        worst = worst.max(id).max(trip);
    }
    Ok(format!("max residual {worst:.1e}"))
}

fn ordering(_: Mode) -> CheckResult {
    for l in [13.0, 16.0, 20.0, 40.0, 80.0] {
        let kl = core(max_modulus(l))?;
        for i in 1..100 {
            let k = kl * i as f64 / 100.0;
            if k < wave::MIN_MODULUS {
                continue;
            }
            let p = core(WaveParams::from_modulus(l, k))?;
            ensure(p.ordering_holds(), || format!("ordering fails at L={l} k={k}"))?;
        }
    }
    Ok("5 periods x 99 moduli".into())
}

/// Interior point `k ∈ (0.05, 0.9 k_L)` with `L ∈ (13, 40)`.
fn random_interior(rng: &mut ChaCha8Rng) -> Result<WaveParams, String> {
    let l = rng.gen_range(13.0..40.0);
    let kl = core(max_modulus(l))?;
    let k = rng.gen_range(0.05..0.9 * kl);
    core(WaveParams::from_modulus(l, k))
}

fn monotonicity(_: Mode) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6e6f);
    for _ in 0..50 {
        let p = random_interior(&mut rng)?;
        let (dc, _) = p.dparams_dk();
        ensure(dc > 0.0, || format!("dc/dk = {dc:e} at L={} k={}", p.period, p.modulus))?;
    }
    for _ in 0..50 {
        let p = random_interior(&mut rng)?;
        let h = 1e-6 * p.beta2;
        let (tp, _) = core(period_and_modulus(p.speed, p.beta2 + h))?;
        let (tm, _) = core(period_and_modulus(p.speed, p.beta2 - h))?;
        let dt = (tp - tm) / (2.0 * h);
        ensure(dt < 0.0, || format!("dT/dbeta2 = {dt:e} at L={} k={}", p.period, p.modulus))?;
    }
    for p in standard_grid()? {
        let field = core(PeriodicField::new(p.period, p.samples(256)))?;
        let m = core(stability::m_functional(&p, &field))?;
        ensure(m > 0.0, || format!("M(phi) = {m:e} at L={} k={}", p.period, p.modulus))?;
    }
    Ok("dc/dk > 0, dT/dbeta2 < 0, M(phi) > 0".into())
}

fn lame_roots(_: Mode) -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let k = 0.05 + 0.94 * i as f64 / 99.0;
        let m = core(EllipticModulus::new(k))?;
        let q = k * k;
        let (h1, h2) = lame::lame_quadratic_roots(m);
        let (h3, h4, h5) = core(lame::lame_cubic_roots(m))?;
        let (z1, z2, z3) = lame::cubic_coefficients(m);
        for h in [h1, h2] {
            let scale = h * h + 20.0 * (1.0 + q) * h + 64.0 * (1.0 + q) * (1.0 + q) + 108.0 * q;
            worst = worst.max(lame::quadratic_residual(m, h).abs() / scale);
        }
        for h in [h3, h4, h5] {
            let scale = h.powi(3) + (z1 * h * h).abs() + (z2 * h).abs() + z3.abs();
            worst = worst.max(lame::cubic_residual(m, h).abs() / scale);
        }
        ensure(h3 < h2 && h2 < h4 && h4 < h1 && h1 < h5, || {
            format!("order h3<h2<h4<h1<h5 fails at k={k}")
        })?;
    }
    ensure(worst <= 1e-8, || format!("relative root residual {worst:e}"))?;
    for l in [16.0, 40.0] {
        for k in [0.1, 0.5] {
            let s = core(operator_eigenvalues(&core(WaveParams::from_modulus(l, k))?))?;
            ensure(s.lambdas[1].abs() <= 1e-12, || format!("lambda1 = {:e}", s.lambdas[1]))?;
        }
    }
    Ok(format!("max relative residual {worst:.1e}"))
}

fn operator_cases(mode: Mode) -> Result<Vec<WaveParams>, String> {
    let mut cases = vec![core(WaveParams::from_modulus(16.0, 0.3))?];
    if !mode.quick {
        cases.push(core(WaveParams::from_modulus(20.0, 0.6))?);
        let kl = core(max_modulus(40.0))?;
        cases.push(core(WaveParams::from_modulus(40.0, 0.8 * kl))?);
    }
    Ok(cases)
}

fn eigenfunction_residuals(mode: Mode) -> CheckResult {
    let mut worst: f64 = 0.0;
    for p in operator_cases(mode)? {
        let g = core(Grid::new(512, p.period))?;
        let m = core(assemble_linearized_operator(&p, &g))?;
        let bottom = core(operator_eigenvalues(&p))?;
        for i in 0..5 {
            let chi = core(lame::normalized_eigenfunction_samples(i, &p, 512))?;
            let lchi = m.apply(&chi);
            let num: f64 = lchi
                .iter()
                .zip(&chi)
                .map(|(a, b)| (a - bottom.lambdas[i] * b).powi(2))
                .sum();
            let den: f64 = chi.iter().map(|b| b * b).sum();
            let r = (num / den).sqrt();
            ensure(r <= 1e-7, || format!("L={} k={} chi{i}: residual {r:e}", p.period, p.modulus))?;
            worst = worst.max(r);
        }
        let ev = core(lame::EigenfunctionEvaluator::new(1, &p))?;
        let prof = p.evaluator();
        let c0 = lame::translation_constant(&p);
        let (mut diff, mut size): (f64, f64) = (0.0, 0.0);
        for x in g.nodes() {
            let chi = ev.eval(*x);
            diff = diff.max((chi - c0 * prof.eval(*x).dphi).abs());
            size = size.max(chi.abs());
        }
        ensure(diff <= 1e-9 * size, || {
            format!("chi1 differs from C0 phi' by {:e}", diff / size)
        })?;
    }
    Ok(format!("max residual {worst:.1e}"))
}

fn spectrum(mode: Mode) -> CheckResult {
    let mut worst: f64 = 0.0;
    for p in operator_cases(mode)? {
        let g = core(Grid::new(512, p.period))?;
        let report = core(spectrum_report(&p, &g))?;
        let bad = report.violations();
        ensure(bad.is_empty(), || {
            format!("L={} k={}: {}", p.period, p.modulus, bad.join("; "))
        })?;
        worst = report.rows.iter().map(|r| r.rel_gap).fold(worst, f64::max);
    }
    Ok(format!("max relative gap {worst:.1e}"))
}

fn conserved_representations(_: Mode) -> CheckResult {
    let n = 4096;
    let mut worst: f64 = 0.0;
    for (l, k) in [(16.0, 0.3), (20.0, 0.6), (40.0, 0.9)] {
        let p = core(WaveParams::from_modulus(l, k))?;
        let g = stability::g_functions(&p);
        let phi = p.samples(n);
        let field = core(PeriodicField::new(l, phi))?;
        let cq = evolution::conserved(&field);
        let c = p.speed;
        let errs = [
            rel(c * c * g.g1, cq.v),
            rel(c.powi(4) * g.g2, cq.q),
            rel(c.powi(3) * g.g3, p.a_integration),
        ];
        let e = errs.into_iter().fold(0.0, f64::max);
        ensure(e <= 1e-8, || format!("L={l} k={k}: relative error {e:e}"))?;
        worst = worst.max(e);
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn cn_power_integrals(_: Mode) -> CheckResult {
    let n = 8192;
    let mut worst: f64 = 0.0;
    for k in [0.3, 0.5, 0.8] {
        let p = core(WaveParams::from_modulus(16.0, k))?;
        let closed = core(stability::cn_power_integrals(&p, 5))?;
        let ev = JacobiEvaluator::new(p.elliptic_modulus());
        let scale = 2.0 * p.complete_k / p.period;
        let cn2: Vec<f64> = (0..n)
            .map(|j| ev.eval(scale * j as f64 * p.period / n as f64).cn.powi(2))
            .collect();
        for (i, c) in closed.iter().enumerate() {
            let vals: Vec<f64> = cn2.iter().map(|w| w.powi(i as i32 + 1)).collect();
            let e = rel(*c, trapezoid(&vals, p.period));
            ensure(e <= 1e-10, || format!("k={k} C{}: relative error {e:e}", 2 * (i + 1)))?;
            worst = worst.max(e);
        }
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn sign_conditions(mode: Mode) -> CheckResult {
    let points = if mode.quick { 20 } else { 50 };
    let mut count = 0;
    for l in [14.0, 16.0, 20.0, 40.0] {
        let kl = core(max_modulus(l))?;
        let hi = (0.9 * kl).min(DERIVATIVE_BAND.1);
        for i in 0..points {
            let k = 0.05 + (hi - 0.05) * (i as f64 + 0.5) / points as f64;
            let p = core(WaveParams::from_modulus(l, k))?;
            let f = core(stability::f_and_r(&p))?;
            let phi = core(stability::phi_analytic(&p))?;
            let m = stability::m_functions(p.elliptic_modulus());
            let ok = phi < 0.0 && f.f1 > 0.0 && f.f2 > 0.0 && f.f3 > 0.0 && f.r < 0.0 && m.m1 < 0.0;
            ensure(ok, || {
                format!(
                    "L={l} k={k}: phi {phi:e} f1 {:e} f2 {:e} f3 {:e} r {:e} m1 {:e}",
                    f.f1, f.f2, f.f3, f.r, m.m1
                )
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} points"))
}

fn phi_routes(mode: Mode) -> CheckResult {
    let cases: &[(f64, f64)] = if mode.quick {
        &[(16.0, 0.3), (20.0, 0.6)]
    } else {
        &[(14.0, 0.2), (16.0, 0.3), (20.0, 0.6), (40.0, 0.9)]
    };
    let mut worst: f64 = 0.0;
    for &(l, k) in cases {
        let p = core(WaveParams::from_modulus(l, k))?;
        let a = core(stability::phi_analytic(&p))?;
        let n = core(stability::phi_numeric(&p))?;
        let e = rel(n.quadratic_form, a).max(rel(n.conserved_route, a));
        ensure(e <= 1e-3, || format!("L={l} k={k}: relative gap {e:e}"))?;
        worst = worst.max(e);
    }
    Ok(format!("max relative gap {worst:.1e}"))
}

/// Leading small-`k` terms: `r ≈ -80π⁴k⁴`, and for `f₁`, `f₃` the limits
/// obtained from the series of `g₁ … s₂`.
fn small_modulus_limits(_: Mode) -> CheckResult {
    let k = 0.05;
    let m = core(EllipticModulus::new(k))?;
    let r = stability::r_function(m) / k.powi(4) / (-80.0 * PI.powi(4));
    ensure((r - 1.0).abs() <= 0.05, || format!("r/k^4 ratio {r}"))?;
    let l: f64 = 16.0;
    let k = 0.02;
    let p = core(WaveParams::from_modulus(l, k))?;
    let f = core(stability::f_and_r(&p))?;
    let f1_limit = 5_120_000.0 * PI.powi(8) / 81.0 / l.powi(7) - 40_960_000.0 * PI.powi(10) / 81.0 / l.powi(9);
    let f3_limit = 2_240_000.0 * PI.powi(10) / 9.0 * k.powi(6) / l.powi(9);
    let (e1, e3) = (rel(f.f1, f1_limit), rel(f.f3, f3_limit));
    ensure(e1 <= 0.02 && e3 <= 0.02, || format!("f1 off by {e1:e}, f3 off by {e3:e}"))?;
    Ok(format!("r ratio {r:.4}, f1 {e1:.1e}, f3 {e3:.1e}"))
}

fn traveling_wave(_: Mode) -> CheckResult {
    let p = core(WaveParams::from_modulus(16.0, 0.3))?;
    let u0 = core(PeriodicField::new(16.0, p.samples(256)))?;
    let cfg = EvolveConfig {
        dt: 1e-3,
        t_max: 1.0,
        ..EvolveConfig::default()
    };
    let u = core(evolution::evolve(&u0, &cfg))?;
    let ev = p.evaluator();
    let h = 16.0 / 256.0;
    let err = u
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| (v - ev.eval(j as f64 * h - p.speed).phi).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-5, || format!("sup error {err:e}"))?;
    Ok(format!("sup error {err:.1e}"))
}

fn conservation(_: Mode) -> CheckResult {
    let p = core(WaveParams::from_modulus(16.0, 0.3))?;
    let cfg = EvolveConfig {
        dt: 1e-3,
        t_max: 10.0,
        record_every: 500,
        ..EvolveConfig::default()
    };
    let trace = core(evolution::run_experiment(&p, 1e-3, &cfg, 256, evolution::DEFAULT_SEED))?;
    let (e, q, v) = evolution::max_relative_drift(&trace);
    let worst = e.max(q).max(v);
    ensure(worst <= 1e-7, || format!("drift E {e:e}, Q {q:e}, V {v:e}"))?;
    Ok(format!("max drift {worst:.1e}"))
}

fn orbital_stability(mode: Mode) -> CheckResult {
    let eps = 1e-3;
    let t_max = if mode.quick { 10.0 } else { 50.0 };
    let p = core(WaveParams::from_modulus(16.0, 0.3))?;
    let cfg = EvolveConfig {
        dt: 1e-3,
        t_max,
        record_every: 250,
        ..EvolveConfig::default()
    };
    let trace = core(evolution::run_experiment(&p, eps, &cfg, 256, evolution::DEFAULT_SEED))?;
    let peak = trace.iter().map(|r| r.rho).fold(0.0, f64::max);
    ensure(evolution::stability_verdict(&trace, eps), || {
        format!("rho reaches {peak:e} > 10 eps")
    })?;
    let ev = p.evaluator();
    let shifted = core(PeriodicField::from_fn(16.0, 256, |x| ev.eval(x - 3.7).phi))?;
    let u = core(evolution::evolve(
        &shifted,
        &EvolveConfig {
            t_max: 1.0,
            ..cfg
        },
    ))?;
    let (rho, _) = core(evolution::orbital_distance(&u, &p))?;
    ensure(rho <= 1e-5, || format!("unperturbed rho {rho:e}"))?;
    Ok(format!("peak rho {peak:.2e} up to t={t_max}, unperturbed {rho:.1e}"))
}
