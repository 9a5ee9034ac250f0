use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand};

use schamel_core::evolution::{self, EvolveConfig, Scheme, DEFAULT_SEED};
use schamel_core::operator::{spectrum_report, Grid};
use schamel_core::stability::{self, StabilityReport, DERIVATIVE_BAND};
use schamel_core::wave::max_modulus;
use schamel_core::{Error, WaveParams};

mod output;
mod suite;

use output::{emit, float, RunManifest, Table};

#[derive(Parser)]
#[command(name = "schamel", version, about = "Periodic cnoidal waves of the regularized Schamel equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one wave profile.
    Wave {
        #[arg(long)]
        period: f64,
        #[arg(long)]
        modulus: f64,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scalars and stability verdicts along the family at fixed period.
    Family {
        #[arg(long)]
        period: f64,
        #[arg(long)]
        k_min: f64,
        #[arg(long)]
        k_max: f64,
        /// Number of moduli, both ends included.
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic versus collocation eigenvalues of the linearized operator.
    Spectrum {
        #[arg(long)]
        period: f64,
        #[arg(long)]
        modulus: f64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stability functional and its ingredients as JSON.
    Stability {
        #[arg(long)]
        period: f64,
        #[arg(long)]
        modulus: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a perturbed wave and trace the orbital distance.
    Evolve {
        #[arg(long)]
        period: f64,
        #[arg(long)]
        modulus: f64,
        #[arg(long)]
        perturb: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value = "rk4")]
        scheme: Scheme,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Steps between trace rows.
        #[arg(long, default_value_t = 100)]
        record_every: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Verify {
        /// Smaller grids and shorter runs.
        #[arg(long)]
        quick: bool,
    },
}

enum Failure {
    /// Bad input, exit 2.
    Usage(String),
    /// A check failed, exit 1.
    Check(Vec<String>),
    /// Numerical or I/O failure, exit 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Config(_) => Self::Usage(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Wave {
            period,
            modulus,
            samples,
            out,
        } => wave(period, modulus, samples, out),
        Command::Family {
            period,
            k_min,
            k_max,
            steps,
            out,
        } => family(period, k_min, k_max, steps, out),
        Command::Spectrum {
            period,
            modulus,
            grid,
            out,
        } => spectrum(period, modulus, grid, out),
        Command::Stability { period, modulus, out } => stability_cmd(period, modulus, out),
        Command::Evolve {
            period,
            modulus,
            perturb,
            tmax,
            dt,
            scheme,
            grid,
            seed,
            record_every,
            out,
        } => {
            let cfg = EvolveConfig {
                dt,
                t_max: tmax,
                scheme,
                record_every,
                ..EvolveConfig::default()
            };
            evolve(period, modulus, perturb, cfg, grid, seed, out)
        }
        Command::Verify { quick } => verify(quick),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(names)) => {
            for name in names {
                eprintln!("failed: {name}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn wave(period: f64, modulus: f64, samples: usize, out: Option<PathBuf>) -> Outcome {
    let p = WaveParams::from_modulus(period, modulus)?;
    if samples < 2 {
        return Err(Failure::Usage(format!("samples must be at least 2, got {samples}")));
    }
    let ev = p.evaluator();
    let h = period / samples as f64;
    let mut table = Table::new(&["x", "phi", "psi", "dphi_dx"]);
    for j in 0..samples {
        let x = j as f64 * h;
        let pt = ev.eval(x);
        table.push_floats(&[x, pt.phi, pt.psi, pt.dphi]);
    }
    let manifest = RunManifest::new("wave")
        .param("period", period)
        .param("modulus", modulus)
        .param("samples", samples)
        .with_wave(&p);
    emit(&table.to_csv(), out.as_deref(), manifest)?;
    Ok(())
}

fn family_row(period: f64, k: f64) -> Result<Vec<String>, Error> {
    let p = WaveParams::from_modulus(period, k)?;
    let ci = stability::conserved_representations(&p)?;
    let f = stability::f_and_r(&p)?;
    let phi = stability::phi_analytic(&p)?;
    let checks = [
        ("phi<0", phi < 0.0),
        ("f1>0", f.f1 > 0.0),
        ("f2>0", f.f2 > 0.0),
        ("f3>0", f.f3 > 0.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let verdict = if failed.is_empty() {
        "stable".to_owned()
    } else {
        format!("violated:{}", failed.join(";"))
    };
    let mut row: Vec<String> = [k, p.speed, p.a_integration, p.beta1, p.beta2, p.beta3, ci.q(), ci.v_int, phi]
        .iter()
        .map(|&x| float(x))
        .collect();
    row.push(verdict);
    Ok(row)
}

fn family(period: f64, k_min: f64, k_max: f64, steps: usize, out: Option<PathBuf>) -> Outcome {
    let kl = max_modulus(period)?;
    let (lo, hi) = DERIVATIVE_BAND;
    if !(lo < k_min && k_min <= k_max && k_max < hi.min(kl)) {
        return Err(Failure::Usage(format!(
            "need {lo} < k-min <= k-max < min({hi}, k_L = {kl:.12}), got [{k_min}, {k_max}]"
        )));
    }
    let ks: Vec<f64> = match steps {
        0 => return Err(Failure::Usage("steps must be positive".into())),
        1 => vec![k_min],
        n => (0..n)
            .map(|i| k_min + (k_max - k_min) * i as f64 / (n - 1) as f64)
            .collect(),
    };
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(ks.len());
    let chunk = ks.len().div_ceil(workers);
    // Chunks are contiguous and joined in order, so rows follow `ks`.
    let rows: Vec<Result<Vec<String>, Error>> = thread::scope(|s| {
        let handles: Vec<_> = ks
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&k| family_row(period, k)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("family worker panicked"))
            .collect()
    });
    let mut table = Table::new(&["k", "c", "A", "beta1", "beta2", "beta3", "Q", "V", "Phi", "verdicts"]);
    for row in rows {
        table.push(row?);
    }
    let manifest = RunManifest::new("family")
        .param("period", period)
        .param("k_min", k_min)
        .param("k_max", k_max)
        .param("steps", steps);
    emit(&table.to_csv(), out.as_deref(), manifest)?;
    Ok(())
}

fn spectrum(period: f64, modulus: f64, grid: usize, out: Option<PathBuf>) -> Outcome {
    let p = WaveParams::from_modulus(period, modulus)?;
    let g = Grid::new(grid, period)?;
    let report = spectrum_report(&p, &g)?;
    let mut table = Table::new(&["index", "lambda_analytic", "lambda_numeric", "abs_gap", "rel_gap"]);
    for row in &report.rows {
        let mut cells = vec![row.index.to_string()];
        cells.extend([row.analytic, row.numeric, row.abs_gap, row.rel_gap].map(float));
        table.push(cells);
    }
    let manifest = RunManifest::new("spectrum")
        .param("period", period)
        .param("modulus", modulus)
        .param("grid", grid);
    emit(&table.to_csv(), out.as_deref(), manifest)?;
    let bad = report.violations();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(bad))
    }
}

fn stability_cmd(period: f64, modulus: f64, out: Option<PathBuf>) -> Outcome {
    let p = WaveParams::from_modulus(period, modulus)?;
    let report = StabilityReport::new(&p)?;
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let manifest = RunManifest::new("stability")
        .param("period", period)
        .param("modulus", modulus);
    emit(&body, out.as_deref(), manifest)?;
    let checks = [
        ("Phi < 0", report.phi_analytic < 0.0),
        ("f1 > 0", report.f1 > 0.0),
        ("f2 > 0", report.f2 > 0.0),
        ("f3 > 0", report.f3 > 0.0),
    ];
    let bad: Vec<String> = checks.iter().filter(|c| !c.1).map(|c| c.0.to_owned()).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(bad))
    }
}

fn evolve(
    period: f64,
    modulus: f64,
    eps: f64,
    cfg: EvolveConfig,
    grid: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Outcome {
    let p = WaveParams::from_modulus(period, modulus)?;
    let trace = evolution::run_experiment(&p, eps, &cfg, grid, seed)?;
    let mut table = Table::new(&["t", "rho", "E", "Q", "V"]);
    for r in &trace {
        table.push_floats(&[r.t, r.rho, r.e_val, r.q_val, r.v_val]);
    }
    let manifest = RunManifest::new("evolve")
        .param("period", period)
        .param("modulus", modulus)
        .param("perturb", eps)
        .param("tmax", cfg.t_max)
        .param("dt", cfg.dt)
        .param("scheme", serde_json::to_value(cfg.scheme).expect("scheme serializes"))
        .param("grid", grid)
        .param("seed", seed)
        .param("record_every", cfg.record_every);
    emit(&table.to_csv(), out.as_deref(), manifest)?;
    Ok(())
}

fn verify(quick: bool) -> Outcome {
    let results = suite::run(quick);
    let mut failed = Vec::new();
    for r in &results {
        match &r.outcome {
            Ok(detail) => println!("PASS {:<38} {:>7.2}s  {detail}", r.name, r.seconds),
            Err(reason) => {
                println!("FAIL {:<38} {:>7.2}s  {reason}", r.name, r.seconds);
                failed.push(format!("{}: {reason}", r.name));
            }
        }
    }
    println!("{} of {} checks passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed))
    }
}
