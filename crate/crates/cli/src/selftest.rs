//! Fast invariant checks of a build, printed as a table.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tvwhittle::inference::{InverseGamma, InverseWishart};
use tvwhittle::likelihood::{block_whittle_loglik, dynamic_whittle_loglik, time_domain_tvar_loglik};
use tvwhittle::localper::{block_periodogram, moving_periodogram, segment_geometry, segment_periodogram};
use tvwhittle::modify::{hanning_window, TaperWindow};
use tvwhittle::spectral::{dft, dft_naive, exact_ar1_loglik, fourier_frequencies};
use tvwhittle::tvar::stability::{phi_to_theta, theta_to_phi};
use tvwhittle::{TimeSeries64, TvarPath64};

/// Deliberate corruption used to confirm that checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    TaperNormalizer,
}

impl std::str::FromStr for Fault {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "taper-normalizer" => Ok(Self::TaperNormalizer),
            other => anyhow::bail!("unknown fault '{other}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn naive_density(phi: &[f64], s2: f64, w: f64) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    for (j, p) in phi.iter().enumerate() {
        re -= p * (w * (j + 1) as f64).cos();
        im += p * (w * (j + 1) as f64).sin();
    }
    s2 / (2.0 * PI * (re * re + im * im))
}

fn naive_periodogram(x: &[f64], w: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (s, v) in x.iter().enumerate() {
        re += v * (w * (s + 1) as f64).cos();
        im -= v * (w * (s + 1) as f64).sin();
    }
    (re * re + im * im) / (2.0 * PI * x.len() as f64)
}

fn parseval(rng: &mut ChaCha8Rng) -> f64 {
    let x = normals(rng, 64);
    let n = x.len();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let spec: f64 = (0..n).map(|k| dft(&x, 2.0 * PI * k as f64 / n as f64).norm_sqr()).sum();
    rel(spec / n as f64, energy)
}

fn fft_vs_naive(rng: &mut ChaCha8Rng) -> f64 {
    let x = normals(rng, 50);
    (0..50)
        .map(|k| {
            let w = 2.0 * PI * k as f64 / 50.0;
            (dft(&x, w) - dft_naive(&x, w)).norm()
        })
        .fold(0.0, f64::max)
}

/// Tapered white-noise ordinates have mean `1 / (2 pi)` exactly: the mean of
/// the quadratic form is its trace, obtained from unit vectors.
fn taper_mean(fault: Option<Fault>) -> f64 {
    let n = 32;
    let mut w = hanning_window::<f64>(n).expect("valid length");
    if fault == Some(Fault::TaperNormalizer) {
        w = TaperWindow::new(w.weights().to_vec(), w.normalizer() * 1.5, false).expect("valid window");
    }
    let grid = fourier_frequencies(n, false).expect("valid grid");
    let mut mean = vec![0.0; grid.len()];
    for s in 0..n {
        let mut e = vec![0.0; n];
        e[s] = 1.0;
        for (m, v) in mean.iter_mut().zip(segment_periodogram(&e, &grid, Some(&w)).expect("matching length")) {
            *m += v;
        }
    }
    mean.iter().map(|m| (m * 2.0 * PI - 1.0).abs()).fold(0.0, f64::max)
}

fn round_trip(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = rng.random_range(1..=6);
        let theta = normals(rng, p);
        let phi = theta_to_phi(&theta).into_inner();
        let back = phi_to_theta(&phi).map(|t| t.into_inner()).unwrap_or_else(|_| vec![f64::INFINITY; p]);
        worst = worst.max(theta.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    worst
}

/// Largest companion-matrix eigenvalue modulus over mapped coefficients.
fn stability(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = rng.random_range(1..=6);
        let theta: Vec<f64> = (0..p).map(|_| rng.random_range(-6.0..6.0)).collect();
        let phi = theta_to_phi(&theta).into_inner();
        let mut c = DMatrix::zeros(p, p);
        for j in 0..p {
            c[(0, j)] = phi[j];
        }
        for i in 1..p {
            c[(i, i - 1)] = 1.0;
        }
        let rho = c.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(rho);
    }
    (worst - 1.0).max(0.0)
}

fn random_path(rng: &mut ChaCha8Rng, p: usize, n: usize) -> TvarPath64 {
    let theta: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.5..1.5)).collect();
    let s2: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    TvarPath64::from_theta(p, theta, s2).expect("valid path")
}

fn block_oracle(rng: &mut ChaCha8Rng) -> f64 {
    let (t, n, s, p) = (120, 20, 10, 2);
    let x = TimeSeries64::new(normals(rng, t)).expect("finite");
    let geo = segment_geometry(t, n, s).expect("valid geometry");
    let bp = block_periodogram(&x, &geo, None).expect("matching length");
    let path = random_path(rng, p, bp.n_segments());
    let fast = block_whittle_loglik(&bp, &path).expect("matching path");
    let mut slow = 0.0;
    for j in 0..bp.n_segments() {
        let start = s * j;
        let seg = &x.values()[start..start + n];
        for k in 1..n / 2 {
            let w = 2.0 * PI * k as f64 / n as f64;
            let f = naive_density(path.phi_at(j + 1), path.sigma2_at(j + 1), w);
            slow -= f.ln() + naive_periodogram(seg, w) / f;
        }
    }
    (fast - slow).abs() / slow.abs()
}

fn dynamic_oracle(rng: &mut ChaCha8Rng) -> f64 {
    let (t, m, p) = (80, 5, 2);
    let x = TimeSeries64::new(normals(rng, t)).expect("finite");
    let mp = moving_periodogram(&x, m, None).expect("valid window");
    let path = random_path(rng, p, mp.len());
    let fast = dynamic_whittle_loglik(&mp, &path).expect("matching path");
    let mut slow = 0.0;
    for (i, tt) in (m + 1..=t - m).enumerate() {
        let k = 1 + (tt - 1) % m;
        let w = 2.0 * PI * k as f64 / (2 * m + 1) as f64;
        let f = naive_density(path.phi_at(i + 1), path.sigma2_at(i + 1), w);
        slow -= f.ln() + naive_periodogram(&x.values()[tt - 1 - m..tt + m], w) / f;
    }
    (fast - slow).abs() / slow.abs()
}

fn time_domain_oracle(rng: &mut ChaCha8Rng) -> f64 {
    let (phi, s2) = (0.6, 1.3);
    let x = TimeSeries64::new(normals(rng, 60)).expect("finite");
    let path = TvarPath64::constant(&[phi], s2, 60).expect("stable");
    let td = time_domain_tvar_loglik(&x, &path).expect("matching path");
    let v0 = s2 / (1.0 - phi * phi);
    let init = -0.5 * ((2.0 * PI * v0).ln() + x.values()[0].powi(2) / v0);
    (td - (exact_ar1_loglik(&x, phi, s2).expect("valid") - init)).abs()
}

/// Largest standardised error of the inverse-gamma mean.
fn inverse_gamma_moments(rng: &mut ChaCha8Rng) -> f64 {
    let d = InverseGamma::new(6.0, 3.0).expect("valid");
    let n = 20_000;
    let draws: Vec<f64> = (0..n).map(|_| d.sample(rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let se = (d.variance().expect("finite") / n as f64).sqrt();
    (mean - d.mean().expect("finite")).abs() / se
}

/// Largest standardised error of the inverse-Wishart mean entries.
fn inverse_wishart_moments(rng: &mut ChaCha8Rng) -> f64 {
    let scale = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let d = InverseWishart::new(12.0, scale).expect("valid");
    let n = 20_000;
    let draws: Vec<DMatrix<f64>> = (0..n).map(|_| d.sample(rng)).collect();
    let mean = d.mean().expect("finite");
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let v: DVector<f64> = DVector::from_iterator(n, draws.iter().map(|q| q[(i, j)]));
            let m = v.mean();
            let sd = v.variance().sqrt();
            worst = worst.max((m - mean[(i, j)]).abs() / (sd / (n as f64).sqrt()));
        }
    }
    worst
}

pub fn run_checks(fault: Option<Fault>) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    vec![
        Check { name: "parseval", deviation: parseval(&mut rng), tolerance: 1e-12 },
        Check { name: "fft_vs_naive_dft", deviation: fft_vs_naive(&mut rng), tolerance: 1e-10 },
        Check { name: "taper_normalizer", deviation: taper_mean(fault), tolerance: 1e-12 },
        Check { name: "theta_phi_round_trip", deviation: round_trip(&mut rng), tolerance: 1e-10 },
        Check { name: "mapped_phi_stable", deviation: stability(&mut rng), tolerance: 0.0 },
        Check { name: "block_whittle_oracle", deviation: block_oracle(&mut rng), tolerance: 1e-9 },
        Check { name: "dynamic_whittle_oracle", deviation: dynamic_oracle(&mut rng), tolerance: 1e-9 },
        Check { name: "time_domain_vs_exact_ar1", deviation: time_domain_oracle(&mut rng), tolerance: 1e-10 },
        Check { name: "inverse_gamma_mean_se", deviation: inverse_gamma_moments(&mut rng), tolerance: 4.0 },
        Check { name: "inverse_wishart_mean_se", deviation: inverse_wishart_moments(&mut rng), tolerance: 4.0 },
    ]
}

pub fn report(checks: &[Check]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:<6} {:>14} {:>10}", "check", "status", "max_deviation", "tolerance");
    for c in checks {
        let status = if c.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(s, "{:<28} {:<6} {:>14.3e} {:>10.1e}", c.name, status, c.deviation, c.tolerance);
    }
    s
}
