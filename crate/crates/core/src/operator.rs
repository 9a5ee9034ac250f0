//! Fourier collocation of the linearized operator
//!
//! ```text
//! 𝓛ₖ = -c d²/dx² + (c - 1) - (3/2) φₖ^{1/2}
//! ```
//!
//! and a dense cyclic Jacobi eigensolver for it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::nodes;
use crate::lame::operator_eigenvalues;
use crate::wave::WaveParams;

/// Uniform periodic grid with an even number of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    period: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub const MIN_NODES: usize = 64;

    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < Self::MIN_NODES || !n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid needs an even number of nodes >= {}, got {n}",
                Self::MIN_NODES
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("grid period must be positive, got {period}")));
        }
        Ok(Self {
            n,
            period,
            nodes: nodes(n, period),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Dense symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from rows; fails unless square and symmetric to `1e-12 · max|Mᵢⱼ|`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config("matrix rows must all have length n".into()));
        }
        let m = Self {
            n,
            data: rows.concat(),
        };
        let scale = m.max_abs();
        if m.asymmetry() > 1e-12 * scale {
            return Err(Error::Config("matrix is not symmetric".into()));
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |Mᵢⱼ - Mⱼᵢ|`
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn add_diagonal(&mut self, d: &[f64]) {
        for (i, v) in d.iter().enumerate() {
            self.data[i * self.n + i] += v;
        }
    }

    fn scale(&mut self, f: f64) {
        self.data.iter_mut().for_each(|v| *v *= f);
    }
}

/// Fourier collocation second-derivative matrix on an even periodic grid.
///
/// With `h = 2π/N` the entries are `-π²/(3h²) - 1/6` on the diagonal and
/// `-(-1)^{i-j} / (2 sin²((i-j)h/2))` off it, times `(2π/L)²`.
pub fn second_derivative_matrix(g: &Grid) -> SymmetricMatrix {
    let n = g.len();
    let h = 2.0 * PI / n as f64;
    let column: Vec<f64> = (0..n)
        .map(|j| {
            if j == 0 {
                -PI * PI / (3.0 * h * h) - 1.0 / 6.0
            } else {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let s = (0.5 * j as f64 * h).sin();
                -sign / (2.0 * s * s)
            }
        })
        .collect();
    let scale = (2.0 * PI / g.period()).powi(2);
    let mut m = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let d = (i + n - j) % n;
            m.data[i * n + j] = scale * column[d.min(n - d)];
        }
    }
    m
}

/// `-c D₂ + diag((c - 1) - (3/2) ψ(xⱼ))` with `ψ = √φₖ > 0`.
pub fn assemble_linearized_operator(p: &WaveParams, g: &Grid) -> Result<SymmetricMatrix> {
    if (g.period() - p.period).abs() > 1e-12 * p.period {
        return Err(Error::Config(format!(
            "grid period {} differs from wave period {}",
            g.period(),
            p.period
        )));
    }
    let mut m = second_derivative_matrix(g);
    m.scale(-p.speed);
    let ev = p.evaluator();
    let diag: Vec<f64> = g
        .nodes()
        .iter()
        .map(|&x| (p.speed - 1.0) - 1.5 * ev.eval(x).psi)
        .collect();
    m.add_diagonal(&diag);
    Ok(m)
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 60;

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Rows `p` and `q` are rotated in place and mirrored into the columns, so
/// the working matrix stays exactly symmetric. Eigenvectors are accumulated
/// as rows of `Vᵀ`.
pub fn symmetric_eigen(m: &SymmetricMatrix) -> Result<SymmetricEigen> {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = m.frobenius();
    if n <= 1 || norm == 0.0 {
        return Ok(finish(n, &a, v, 0));
    }
    let target = f64::EPSILON * norm;
    let mut row_p = vec![0.0; n];
    let mut row_q = vec![0.0; n];

    for sweep in 1..=MAX_SWEEPS {
        let off = off_diagonal_norm(&a, n);
        if off <= target {
            return Ok(finish(n, &a, v, sweep - 1));
        }
        // Rotations below this size cannot move any diagonal entry.
        let skip = 1e-3 * f64::EPSILON * off / n as f64;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                row_p.copy_from_slice(&a[p * n..(p + 1) * n]);
                row_q.copy_from_slice(&a[q * n..(q + 1) * n]);
                for k in 0..n {
                    let (x, y) = (row_p[k], row_q[k]);
                    row_p[k] = c * x - s * y;
                    row_q[k] = s * x + c * y;
                }
                row_p[p] = app - t * apq;
                row_q[q] = aqq + t * apq;
                row_p[q] = 0.0;
                row_q[p] = 0.0;
                a[p * n..(p + 1) * n].copy_from_slice(&row_p);
                a[q * n..(q + 1) * n].copy_from_slice(&row_q);
                for k in 0..n {
                    a[k * n + p] = row_p[k];
                    a[k * n + q] = row_q[k];
                }

                let (vp, vq) = rows_mut(&mut v, n, p, q);
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
    }
    let off = off_diagonal_norm(&a, n);
    if off <= 1e-12 * norm {
        return Ok(finish(n, &a, v, MAX_SWEEPS));
    }
    Err(Error::Convergence(format!(
        "Jacobi eigensolver (off-diagonal norm {off:e} after {MAX_SWEEPS} sweeps, matrix norm {norm:e})"
    )))
}

fn rows_mut(v: &mut [f64], n: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (head, tail) = v.split_at_mut(q * n);
    (&mut head[p * n..(p + 1) * n], &mut tail[..n])
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

fn finish(n: usize, a: &[f64], v: Vec<f64>, sweeps: usize) -> SymmetricEigen {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    SymmetricEigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order.iter().map(|&i| v[i * n..(i + 1) * n].to_vec()).collect(),
        sweeps,
    }
}

/// Sign changes of periodic samples, counted cyclically and skipping exact zeros.
pub fn periodic_sign_changes(values: &[f64]) -> usize {
    let signs: Vec<f64> = values.iter().filter(|v| **v != 0.0).map(|v| v.signum()).collect();
    if signs.is_empty() {
        return 0;
    }
    (0..signs.len())
        .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_gap: f64,
    /// `abs_gap / |analytic|`, or `abs_gap` for the analytic zero eigenvalue.
    pub rel_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub rows: Vec<SpectrumRow>,
    /// The lowest numeric eigenvalues, at least seven.
    pub numeric_bottom: Vec<f64>,
    pub negative_count: usize,
    pub ground_state_zeros: usize,
    pub second_state_zeros: usize,
}

/// Tolerances of [`SpectrumReport::violations`].
pub const KERNEL_TOL: f64 = 1e-8;
pub const SIMPLICITY_GAP: f64 = 1e-6;
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Analytic eigenvalues this small are treated as the zero eigenvalue.
pub const ANALYTIC_ZERO: f64 = 1e-12;

impl SpectrumReport {
    /// Names of the failed checks.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.negative_count != 1 {
            out.push(format!("negative eigenvalue count is {}", self.negative_count));
        }
        let ev = &self.numeric_bottom;
        if ev[1].abs() >= KERNEL_TOL {
            out.push(format!("numeric lambda1 = {:e} is not zero", ev[1]));
        }
        if ev[1] - ev[0] <= SIMPLICITY_GAP || ev[2] - ev[1] <= SIMPLICITY_GAP {
            out.push("lambda0 or lambda1 is not simple".into());
        }
        for row in &self.rows {
            let bad = if row.analytic.abs() <= ANALYTIC_ZERO {
                row.abs_gap >= KERNEL_TOL
            } else {
                row.rel_gap > AGREEMENT_TOL
            };
            if bad {
                out.push(format!("lambda{} relative gap {:e}", row.index, row.rel_gap));
            }
        }
        if ev[5] <= self.rows[4].analytic {
            out.push("sixth numeric eigenvalue does not exceed lambda4".into());
        }
        if self.ground_state_zeros != 0 || self.second_state_zeros != 2 {
            out.push(format!(
                "eigenvector zero counts ({}, {}) differ from (0, 2)",
                self.ground_state_zeros, self.second_state_zeros
            ));
        }
        out
    }
}

/// Numeric versus analytic bottom of the spectrum; needs `N ≥ 256`.
pub fn spectrum_report(p: &WaveParams, g: &Grid) -> Result<SpectrumReport> {
    if g.len() < 256 {
        return Err(Error::Config(format!(
            "spectrum report needs N >= 256, got {}",
            g.len()
        )));
    }
    let m = assemble_linearized_operator(p, g)?;
    let eig = symmetric_eigen(&m)?;
    let analytic = operator_eigenvalues(p)?;
    let rows = (0..5)
        .map(|i| {
            let (a, num) = (analytic.lambdas[i], eig.values[i]);
            let abs_gap = (a - num).abs();
            let rel_gap = if a.abs() <= ANALYTIC_ZERO { abs_gap } else { abs_gap / a.abs() };
            SpectrumRow {
                index: i,
                analytic: a,
                numeric: num,
                abs_gap,
                rel_gap,
            }
        })
        .collect();
    Ok(SpectrumReport {
        rows,
        numeric_bottom: eig.values[..7].to_vec(),
        negative_count: eig.values.iter().filter(|&&v| v < -KERNEL_TOL).count(),
        ground_state_zeros: periodic_sign_changes(&eig.vectors[0]),
        second_state_zeros: periodic_sign_changes(&eig.vectors[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(63, 16.0).is_err());
        assert!(Grid::new(32, 16.0).is_err());
        assert!(Grid::new(64, -1.0).is_err());
        let g = Grid::new(64, 16.0).unwrap();
        assert_eq!(g.nodes()[1], 0.25);
    }

    #[test]
    fn second_derivative_properties() {
        let g = Grid::new(128, 14.0).unwrap();
        let d = second_derivative_matrix(&g);
        assert_eq!(d.asymmetry(), 0.0);
        for i in 0..128 {
            assert!(d.row(i).iter().sum::<f64>().abs() < 1e-12 * d.max_abs());
        }
        let w = 2.0 * PI / 14.0;
        let v: Vec<f64> = g.nodes().iter().map(|&x| (w * x).cos()).collect();
        let dv = d.apply(&v);
        for (a, b) in dv.iter().zip(&v) {
            assert!((a + w * w * b).abs() < 1e-12);
        }
        let ones = vec![1.0; 128];
        assert!(d.apply(&ones).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn jacobi_small_cases() {
        let m = SymmetricMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        assert_eq!(symmetric_eigen(&m).unwrap().values, vec![1.0, 2.0, 3.0]);
        let m = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        assert!(SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    }

    /// Oracle: rebuild `V Λ Vᵀ` and compare entrywise.
    #[test]
    fn jacobi_reconstructs_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                rows[i][j] = x;
                rows[j][i] = x;
            }
        }
        let m = SymmetricMatrix::from_rows(&rows).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        for i in 0..n {
            for j in 0..n {
                let rebuilt: f64 = (0..n).map(|l| e.values[l] * e.vectors[l][i] * e.vectors[l][j]).sum();
                assert!((rebuilt - rows[i][j]).abs() < 1e-9);
                let dot: f64 = e.vectors[i].iter().zip(&e.vectors[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        for (l, vec) in e.vectors.iter().enumerate() {
            let mv = m.apply(vec);
            let res: f64 = mv.iter().zip(vec).map(|(a, b)| (a - e.values[l] * b).powi(2)).sum();
            assert!(res.sqrt() <= 1e-9 * m.frobenius());
        }
    }

    #[test]
    fn operator_annihilates_translation_mode() {
        let p = WaveParams::from_modulus(16.0, 0.3).unwrap();
        let g = Grid::new(512, 16.0).unwrap();
        let m = assemble_linearized_operator(&p, &g).unwrap();
        assert!(m.asymmetry() <= 1e-12 * m.max_abs());
        let ev = p.evaluator();
        let dphi: Vec<f64> = g.nodes().iter().map(|&x| ev.eval(x).dphi).collect();
        let res = m.apply(&dphi);
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm(&res) <= 1e-7 * norm(&dphi));
        assert!(assemble_linearized_operator(&p, &Grid::new(512, 14.0).unwrap()).is_err());
    }

    #[test]
    fn spectrum_matches_analytic() {
        let p = WaveParams::from_modulus(16.0, 0.3).unwrap();
        let r = spectrum_report(&p, &Grid::new(512, 16.0).unwrap()).unwrap();
        assert!(r.violations().is_empty(), "{:?}", r.violations());
        assert!(spectrum_report(&p, &Grid::new(128, 16.0).unwrap()).is_err());
    }

    #[test]
    fn sign_changes() {
        assert_eq!(periodic_sign_changes(&[1.0, 2.0, 3.0]), 0);
        assert_eq!(periodic_sign_changes(&[1.0, -2.0, 3.0, -1.0]), 4);
        assert_eq!(periodic_sign_changes(&[1.0, 0.0, -2.0, -3.0]), 2);
    }
}
