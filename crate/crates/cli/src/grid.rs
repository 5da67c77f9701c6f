//! Stationary AR(1) study: exact and Whittle posteriors of `phi` on a grid
//! under a uniform prior, with `sigma2 = 1` known.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tvwhittle::metrics::{efficiency, perturbation, rmse};
use tvwhittle::spectral::{
    ar_spectral_density, default_phi_grid, exact_ar1_loglik, fourier_frequencies, grid_posterior, periodogram,
    whittle_loglik_symmetric, ArSpec, GridPosterior, QUANTILE_PROBS,
};
use tvwhittle::tvar::{simulate_tvar, DEFAULT_BURN_IN};
use tvwhittle::{TimeSeries64, TvarPath64};

use crate::config::GridSettings;
use crate::output::{fmt_f64, quantile_column, write_toml, CsvFile};

/// Exact and Whittle grid posteriors for one data set.
pub struct GridPair {
    pub exact: GridPosterior<f64>,
    pub whittle: GridPosterior<f64>,
}

pub fn grid_pair(x: &TimeSeries64, grid: &[f64]) -> Result<GridPair> {
    let exact = grid_posterior(x, grid, |x, phi| exact_ar1_loglik(x, phi, 1.0))?;
    let pg = periodogram(x, &fourier_frequencies(x.len(), false)?)?;
    let whittle = grid_posterior(x, grid, |_, phi| {
        let spec = ArSpec::new(vec![phi], 1.0)?;
        whittle_loglik_symmetric(&pg, |w| ar_spectral_density(&spec, w))
    })?;
    Ok(GridPair { exact, whittle })
}

/// One line of the study summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub phi_true: f64,
    pub t_len: usize,
    pub efficiency: f64,
    pub perturbation: f64,
    pub n_rep: usize,
    pub rmse_exact: f64,
    pub rmse_whittle: f64,
}

struct RepOutcome {
    phi_index: usize,
    rep: usize,
    /// Per sample size: (exact, whittle).
    pairs: Vec<GridPair>,
}

/// Simulates one series of the largest length per (phi, replication); the
/// shorter samples are its leading segments.
pub fn simulate_ar1(phi: f64, t_len: usize, seed: u64) -> Result<TimeSeries64> {
    let path = TvarPath64::constant(&[phi], 1.0, t_len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(simulate_tvar(&path, &mut rng, DEFAULT_BURN_IN)?)
}

/// Summary rows and the per-data-set posteriors indexed `[phi][T][rep]`.
pub fn compute(settings: &GridSettings) -> Result<(Vec<GridRow>, Vec<Vec<Vec<GridPair>>>)> {
    let grid = default_phi_grid::<f64>(settings.grid_points);
    let t_max = *settings.t_lens.iter().max().expect("non-empty");
    let jobs: Vec<(usize, usize)> =
        (0..settings.phi.len()).flat_map(|i| (0..settings.n_rep).map(move |r| (i, r))).collect();
    let outcomes: Vec<RepOutcome> = jobs
        .par_iter()
        .map(|&(i, rep)| -> Result<RepOutcome> {
            let full = simulate_ar1(settings.phi[i], t_max, settings.common.seed + rep as u64)?;
            let pairs = settings
                .t_lens
                .iter()
                .map(|&t| grid_pair(&TimeSeries64::new(full.values()[..t].to_vec())?, &grid))
                .collect::<Result<_>>()?;
            Ok(RepOutcome { phi_index: i, rep, pairs })
        })
        .collect::<Result<_>>()?;

    // [phi][T][rep]
    let mut by: Vec<Vec<Vec<Option<GridPair>>>> = (0..settings.phi.len())
        .map(|_| (0..settings.t_lens.len()).map(|_| (0..settings.n_rep).map(|_| None).collect()).collect())
        .collect();
    for o in outcomes {
        for (ti, pair) in o.pairs.into_iter().enumerate() {
            by[o.phi_index][ti][o.rep] = Some(pair);
        }
    }
    let by: Vec<Vec<Vec<GridPair>>> = by
        .into_iter()
        .map(|a| a.into_iter().map(|b| b.into_iter().map(|c| c.expect("every job ran")).collect()).collect())
        .collect();

    let mut rows = Vec::new();
    for (i, &phi) in settings.phi.iter().enumerate() {
        for (ti, &t) in settings.t_lens.iter().enumerate() {
            let pairs = &by[i][ti];
            let est_e: Vec<Vec<f64>> = pairs.iter().map(|p| vec![p.exact.mode()]).collect();
            let est_w: Vec<Vec<f64>> = pairs.iter().map(|p| vec![p.whittle.mode()]).collect();
            let rmse_exact = rmse(&est_e, &[phi])?;
            let rmse_whittle = rmse(&est_w, &[phi])?;
            let q_e: Vec<Vec<f64>> = pairs.iter().map(|p| p.exact.default_quantiles()).collect();
            let q_w: Vec<Vec<f64>> = pairs.iter().map(|p| p.whittle.default_quantiles()).collect();
            rows.push(GridRow {
                phi_true: phi,
                t_len: t,
                efficiency: efficiency(rmse_exact, rmse_whittle)?,
                perturbation: perturbation(&q_w, &q_e)?,
                n_rep: settings.n_rep,
                rmse_exact,
                rmse_whittle,
            });
        }
    }
    Ok((rows, by))
}

pub fn run(settings: &GridSettings) -> Result<Vec<GridRow>> {
    let out = &settings.common.out;
    std::fs::create_dir_all(out)?;
    write_toml(&out.join("config.toml"), &settings.echo())?;
    let (rows, by) = compute(settings)?;

    let mut summary = CsvFile::create(
        &out.join("summary.csv"),
        &["phi_true", "T", "efficiency", "perturbation", "n_rep", "rmse_exact", "rmse_whittle"],
    )?;
    for r in &rows {
        summary.row(&[
            fmt_f64(r.phi_true),
            r.t_len.to_string(),
            fmt_f64(r.efficiency),
            fmt_f64(r.perturbation),
            r.n_rep.to_string(),
            fmt_f64(r.rmse_exact),
            fmt_f64(r.rmse_whittle),
        ])?;
    }
    summary.finish()?;

    let mut header: Vec<String> = ["phi_true", "T", "rep", "likelihood", "mode"].map(String::from).to_vec();
    header.extend(QUANTILE_PROBS.iter().map(|&p| quantile_column(p)));
    let mut quant = CsvFile::create(&out.join("quantiles.csv"), &header)?;
    let mut curves = CsvFile::create(&out.join("curves.csv"), &["phi_true", "T", "rep", "phi", "exact", "whittle"])?;
    let step = 1.998 / (settings.grid_points - 1) as f64;
    for (i, &phi) in settings.phi.iter().enumerate() {
        for (ti, &t) in settings.t_lens.iter().enumerate() {
            for (rep, pair) in by[i][ti].iter().enumerate() {
                for (name, post) in [("exact", &pair.exact), ("whittle", &pair.whittle)] {
                    let mut row =
                        vec![fmt_f64(phi), t.to_string(), rep.to_string(), name.to_string(), fmt_f64(post.mode())];
                    row.extend(post.default_quantiles().into_iter().map(fmt_f64));
                    quant.row(&row)?;
                }
                if rep < settings.n_curves {
                    for (k, g) in pair.exact.grid.iter().enumerate() {
                        curves.row(&[
                            fmt_f64(phi),
                            t.to_string(),
                            rep.to_string(),
                            fmt_f64(*g),
                            fmt_f64(pair.exact.weights[k] / step),
                            fmt_f64(pair.whittle.weights[k] / step),
                        ])?;
                    }
                }
            }
        }
    }
    quant.finish()?;
    curves.finish()?;
    Ok(rows)
}
