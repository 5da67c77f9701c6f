//! Replicated tvAR simulation experiments comparing each approximate
//! likelihood with the time-domain posterior on the same data.
//!
//! Every replication writes `reps/rep_NNNN.csv` and, last,
//! `reps/rep_NNNN_status.csv`; a replication with a status file is complete
//! and is skipped when the command is run again with the same output
//! directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use tvwhittle::inference::{gibbs_run, interpolation_index, quantile_sorted, GibbsConfig, QuantileTable};
use tvwhittle::localper::segment_geometry;
use tvwhittle::metrics::{efficiency, perturbation, rmse_paired};
use tvwhittle::spectral::{fourier_frequencies, QUANTILE_PROBS};
use tvwhittle::tvar::{dgp_experiment1, dgp_experiment2, dgp_experiment3, simulate_tvar, DEFAULT_BURN_IN};
use tvwhittle::{Family, LikelihoodSpec, TvarPath64};

use crate::config::{ExperimentSettings, Method, PriorSettings};
use crate::output::{fmt_f64, quantile_column, write_toml, CsvFile, Table};

pub fn truth(settings: &ExperimentSettings) -> Result<TvarPath64> {
    Ok(match settings.experiment {
        1 => dgp_experiment1(settings.t_len)?,
        2 => dgp_experiment2(settings.t_len)?,
        3 => dgp_experiment3(settings.t_len, settings.rescale)?,
        e => bail!("unknown experiment {e}"),
    })
}

/// The time-domain reference followed by the configured approximations.
pub fn all_methods(settings: &ExperimentSettings) -> Vec<Method> {
    let mut v = vec![Method::TIME_DOMAIN];
    v.extend(settings.methods.iter().copied());
    v
}

/// Data seed of a replication.
pub fn data_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

/// Seed of chain `k` in replication `rep`, drawn from its own ChaCha stream.
pub fn chain_seed(base: u64, rep: usize, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed(base, rep));
    rng.set_stream(k as u64 + 1);
    rng.next_u64()
}

/// Times `t` (1-based, inclusive) on which every method has an estimate.
pub fn valid_range(t_len: usize, methods: &[Method]) -> (usize, usize) {
    let gap = methods.iter().map(Method::boundary_gap).max().unwrap_or(0);
    (gap + 1, t_len - gap)
}

fn param_names(order: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=order).map(|j| format!("phi{j}")).collect();
    v.push("sigma2".into());
    v
}

/// Posterior quantiles of one chain, per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub centers: Vec<usize>,
    /// Mean fraction of sweeps in which a state changed.
    pub update_rate: f64,
    /// `phi1..phip` then `sigma2`.
    pub table: QuantileTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutcome {
    pub method: Method,
    pub seconds: f64,
    pub result: std::result::Result<ChainSummary, String>,
}

fn run_chain(
    settings: &ExperimentSettings,
    x: &tvwhittle::TimeSeries64,
    method: &Method,
    seed: u64,
) -> Result<ChainSummary, String> {
    let spec = settings.spec(method);
    let priors = settings.priors.priors_for(&spec).map_err(|e| e.to_string())?;
    let cfg = GibbsConfig { seed, ..settings.gibbs };
    let draws = gibbs_run(x, &spec, &priors, &cfg).map_err(|e| e.to_string())?;
    let phi = draws.phi_quantiles(&QUANTILE_PROBS).map_err(|e| e.to_string())?;
    let s2 = draws.sigma2_quantiles(&QUANTILE_PROBS).map_err(|e| e.to_string())?;
    let p = settings.order;
    let n = draws.n_states;
    let mut values = Vec::with_capacity(QUANTILE_PROBS.len() * n * (p + 1));
    for i in 0..QUANTILE_PROBS.len() {
        for s in 0..n {
            for k in 0..p {
                values.push(phi.get(i, s, k));
            }
            values.push(s2.get(i, s, 0));
        }
    }
    let table = QuantileTable::new(QUANTILE_PROBS.to_vec(), n, p + 1, values).map_err(|e| e.to_string())?;
    Ok(ChainSummary { update_rate: draws.mean_update_rate(), centers: draws.centers, table })
}

/// Simulates replication `rep` and runs every method on it.
pub fn run_replication(settings: &ExperimentSettings, truth: &TvarPath64, rep: usize) -> Result<Vec<ChainOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed(settings.common.seed, rep));
    let x = simulate_tvar(truth, &mut rng, DEFAULT_BURN_IN)?;
    let mut out = Vec::new();
    for (k, method) in all_methods(settings).iter().enumerate() {
        let start = Instant::now();
        let seed = chain_seed(settings.common.seed, rep, k);
        let result = run_chain(settings, &x, method, seed);
        out.push(ChainOutcome { method: *method, seconds: start.elapsed().as_secs_f64(), result });
    }
    Ok(out)
}

fn rep_paths(out: &Path, rep: usize) -> (PathBuf, PathBuf) {
    let dir = out.join("reps");
    (dir.join(format!("rep_{rep:04}.csv")), dir.join(format!("rep_{rep:04}_status.csv")))
}

fn write_replication(
    out: &Path,
    rep: usize,
    order: usize,
    truth: &TvarPath64,
    outcomes: &[ChainOutcome],
) -> Result<()> {
    let (data_path, status_path) = rep_paths(out, rep);
    let names = param_names(order);
    let mut header: Vec<String> = ["method", "param", "t", "truth"].map(String::from).to_vec();
    header.extend(QUANTILE_PROBS.iter().map(|&p| quantile_column(p)));
    let mut f = CsvFile::create(&data_path, &header)?;
    for o in outcomes {
        let Ok(sum) = &o.result else { continue };
        for (k, name) in names.iter().enumerate() {
            for (s, &t) in sum.centers.iter().enumerate() {
                let tv = if k < order { truth.phi_at(t)[k] } else { truth.sigma2_at(t) };
                let mut row = vec![o.method.to_string(), name.clone(), t.to_string(), fmt_f64(tv)];
                row.extend((0..QUANTILE_PROBS.len()).map(|i| fmt_f64(sum.table.get(i, s, k))));
                f.row(&row)?;
            }
        }
    }
    f.finish()?;
    let mut st = CsvFile::create(&status_path, &["method", "status", "seconds", "update_rate", "message"])?;
    for o in outcomes {
        let (status, rate, msg) = match &o.result {
            Ok(s) => ("ok", fmt_f64(s.update_rate), String::new()),
            Err(e) => ("failed", String::new(), e.clone()),
        };
        st.row(&[o.method.to_string(), status.to_string(), format!("{:.3}", o.seconds), rate, msg])?;
    }
    st.finish()
}

/// Reads a completed replication back.
pub fn read_replication(out: &Path, rep: usize, order: usize) -> Result<Vec<ChainOutcome>> {
    let (data_path, status_path) = rep_paths(out, rep);
    let status = Table::read(&status_path)?;
    let data = Table::read(&data_path)?;
    let names = param_names(order);
    let (cm, cp, ct) = (data.column("method")?, data.column("param")?, data.column("t")?);
    let qcols: Vec<usize> = QUANTILE_PROBS.iter().map(|&p| data.column(&quantile_column(p))).collect::<Result<_>>()?;
    // method -> param -> [(t, quantiles)]
    let mut rows: BTreeMap<&str, BTreeMap<&str, Vec<(usize, Vec<f64>)>>> = BTreeMap::new();
    for (r, row) in data.rows.iter().enumerate() {
        let t: usize = row[ct].parse().with_context(|| format!("{}: bad t on row {}", data_path.display(), r + 2))?;
        let q = qcols.iter().map(|&c| data.f64_at(r, c)).collect::<Result<_>>()?;
        rows.entry(row[cm].as_str()).or_default().entry(row[cp].as_str()).or_default().push((t, q));
    }
    let mut out = Vec::new();
    for row in &status.rows {
        let method: Method = row[0].parse()?;
        let seconds = row[2].parse().unwrap_or(f64::NAN);
        let update_rate = row[3].parse().unwrap_or(f64::NAN);
        let result = if row[1] == "ok" {
            let per = rows
                .get(row[0].as_str())
                .with_context(|| format!("{}: no rows for {}", data_path.display(), row[0]))?;
            let first = per.get(names[0].as_str()).context("missing phi1 rows")?;
            let centers: Vec<usize> = first.iter().map(|(t, _)| *t).collect();
            let n = centers.len();
            let mut values = vec![0.0; QUANTILE_PROBS.len() * n * names.len()];
            for (k, name) in names.iter().enumerate() {
                let series = per.get(name.as_str()).with_context(|| format!("missing {name} rows"))?;
                if series.len() != n {
                    bail!("{}: {name} rows do not match phi1", data_path.display());
                }
                for (s, (_, q)) in series.iter().enumerate() {
                    for (i, v) in q.iter().enumerate() {
                        values[(i * n + s) * names.len() + k] = *v;
                    }
                }
            }
            Ok(ChainSummary {
                centers,
                update_rate,
                table: QuantileTable::new(QUANTILE_PROBS.to_vec(), n, names.len(), values)?,
            })
        } else {
            Err(row[4].clone())
        };
        out.push(ChainOutcome { method, seconds, result });
    }
    Ok(out)
}

/// Accuracy of one method relative to the time-domain posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    /// RMSE of the posterior median of `phi` over the reps where this method ran.
    pub rmse: f64,
    /// Time-domain RMSE over the reps where both ran, divided by this method's on the same reps.
    pub efficiency: f64,
    pub perturbation: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub n_paired: usize,
}

/// Flattened `phi` medians, truth and quantiles on the valid range.
struct Evaluated {
    median: Vec<f64>,
    truth: Vec<f64>,
    quantiles: Vec<f64>,
}

fn evaluate(sum: &ChainSummary, truth: &TvarPath64, order: usize, range: (usize, usize)) -> Result<Evaluated> {
    let map = interpolation_index(&sum.centers, truth.len())?;
    let mid = QUANTILE_PROBS.iter().position(|&p| p == 0.5).expect("median listed");
    let mut e = Evaluated { median: vec![], truth: vec![], quantiles: vec![] };
    for t in range.0..=range.1 {
        let s = map[t - 1];
        for k in 0..order {
            e.median.push(sum.table.get(mid, s, k));
            e.truth.push(truth.phi_at(t)[k]);
            for i in 0..QUANTILE_PROBS.len() {
                e.quantiles.push(sum.table.get(i, s, k));
            }
        }
    }
    Ok(e)
}

pub fn summarize(
    reps: &[Vec<ChainOutcome>],
    truth: &TvarPath64,
    order: usize,
    methods: &[Method],
) -> Result<Vec<MethodSummary>> {
    let range = valid_range(truth.len(), methods);
    let eval: Vec<Vec<Option<Evaluated>>> = reps
        .iter()
        .map(|rep| {
            methods
                .iter()
                .map(|m| {
                    rep.iter()
                        .find(|o| o.method == *m)
                        .and_then(|o| o.result.as_ref().ok())
                        .map(|s| evaluate(s, truth, order, range))
                        .transpose()
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (k, m) in methods.iter().enumerate() {
        let own: Vec<&Evaluated> = eval.iter().filter_map(|r| r[k].as_ref()).collect();
        let pairs: Vec<(&Evaluated, &Evaluated)> =
            eval.iter().filter_map(|r| Some((r[0].as_ref()?, r[k].as_ref()?))).collect();
        let nan_if_empty = |r: tvwhittle::Result<f64>| r.unwrap_or(f64::NAN);
        let rmse = nan_if_empty(rmse_paired(
            &own.iter().map(|e| e.median.clone()).collect::<Vec<_>>(),
            &own.iter().map(|e| e.truth.clone()).collect::<Vec<_>>(),
        ));
        let truths: Vec<Vec<f64>> = pairs.iter().map(|(a, _)| a.truth.clone()).collect();
        let rmse_td = rmse_paired(&pairs.iter().map(|(a, _)| a.median.clone()).collect::<Vec<_>>(), &truths);
        let rmse_m = rmse_paired(&pairs.iter().map(|(_, b)| b.median.clone()).collect::<Vec<_>>(), &truths);
        let eff = match (rmse_td, rmse_m) {
            (Ok(a), Ok(b)) => nan_if_empty(efficiency(a, b)),
            _ => f64::NAN,
        };
        let pert = nan_if_empty(perturbation(
            &pairs.iter().map(|(_, b)| b.quantiles.clone()).collect::<Vec<_>>(),
            &pairs.iter().map(|(a, _)| a.quantiles.clone()).collect::<Vec<_>>(),
        ));
        out.push(MethodSummary {
            method: *m,
            rmse,
            efficiency: eff,
            perturbation: pert,
            n_ok: own.len(),
            n_failed: reps.len() - own.len(),
            n_paired: pairs.len(),
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct DerivedRun {
    command: String,
    t_len: usize,
    stored_draws: usize,
    valid_t: [usize; 2],
}

#[derive(Serialize)]
pub struct MethodDerived {
    pub family: String,
    pub modification: String,
    pub n_states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<usize>,
    pub q_dof: f64,
    pub q_scale: Vec<Vec<f64>>,
    pub sigma2_shape: f64,
    pub sigma2_scale: f64,
    pub init_mean: Vec<f64>,
    pub init_cov: Vec<Vec<f64>>,
}

/// Geometry and priors a method resolves to for a series of length `t_len`.
pub fn method_derived(spec: &LikelihoodSpec, priors: &PriorSettings, t_len: usize) -> Result<MethodDerived> {
    let (n_states, segments, frequencies) = match spec.family {
        Family::TimeDomain => (t_len, None, None),
        Family::WhittleStationary => (1, None, Some(fourier_frequencies(t_len, false)?.len())),
        Family::BlockWhittle { seg_len, step } => {
            let g = segment_geometry(t_len, seg_len, step)?;
            let k = fourier_frequencies(seg_len, false)?.len();
            (g.n_segments(), Some(g.n_segments()), Some(k))
        }
        Family::DynamicWhittle { m } => {
            if t_len <= 2 * m {
                bail!("dynamic Whittle with m = {m} needs T > {}", 2 * m);
            }
            (t_len - 2 * m, None, None)
        }
    };
    let pr = priors.priors_for(spec)?;
    let rows = |m: &nalgebra::DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    Ok(MethodDerived {
        family: spec.family.to_string(),
        modification: spec.modification.to_string(),
        n_states,
        segments,
        frequencies,
        q_dof: pr.q_dof,
        q_scale: rows(&pr.q_scale),
        sigma2_shape: pr.sigma2_shape,
        sigma2_scale: pr.sigma2_scale,
        init_mean: pr.init_mean.iter().copied().collect(),
        init_cov: rows(&pr.init_cov),
    })
}

#[derive(Serialize)]
struct Derived {
    run: DerivedRun,
    methods: BTreeMap<String, MethodDerived>,
}

pub fn write_config(settings: &ExperimentSettings) -> Result<()> {
    let out = &settings.common.out;
    std::fs::create_dir_all(out)?;
    write_toml(&out.join("config.toml"), &settings.echo())?;
    let methods = all_methods(settings);
    let mut derived = BTreeMap::new();
    for m in &methods {
        derived.insert(m.to_string(), method_derived(&settings.spec(m), &settings.priors, settings.t_len)?);
    }
    let range = valid_range(settings.t_len, &methods);
    let d = Derived {
        run: DerivedRun {
            command: "experiment".into(),
            t_len: settings.t_len,
            stored_draws: settings.gibbs.n_stored(),
            valid_t: [range.0, range.1],
        },
        methods: derived,
    };
    write_toml(&out.join("derived.toml"), &d)
}

pub fn run(settings: &ExperimentSettings) -> Result<Vec<MethodSummary>> {
    write_config(settings)?;
    let out = &settings.common.out;
    let truth = truth(settings)?;
    let todo: Vec<usize> = (0..settings.n_rep).filter(|&r| !rep_paths(out, r).1.exists()).collect();
    if todo.len() < settings.n_rep {
        eprintln!("resuming: {} of {} replications already complete", settings.n_rep - todo.len(), settings.n_rep);
    }
    todo.par_iter().try_for_each(|&rep| -> Result<()> {
        let start = Instant::now();
        let outcomes = run_replication(settings, &truth, rep)?;
        write_replication(out, rep, settings.order, &truth, &outcomes)?;
        let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
        eprintln!("rep {rep}: {:.1}s, {failed} failed chain(s)", start.elapsed().as_secs_f64());
        Ok(())
    })?;

    let reps: Vec<Vec<ChainOutcome>> =
        (0..settings.n_rep).map(|r| read_replication(out, r, settings.order)).collect::<Result<_>>()?;
    let methods = all_methods(settings);
    let summary = summarize(&reps, &truth, settings.order, &methods)?;
    write_outputs(out, &reps, &truth, settings.order, &methods, &summary)?;
    Ok(summary)
}

fn write_outputs(
    out: &Path,
    reps: &[Vec<ChainOutcome>],
    truth: &TvarPath64,
    order: usize,
    methods: &[Method],
    summary: &[MethodSummary],
) -> Result<()> {
    let mut f = CsvFile::create(
        &out.join("summary.csv"),
        &["method", "rmse", "efficiency", "perturbation", "n_ok", "n_failed", "n_paired"],
    )?;
    for s in summary {
        f.row(&[
            s.method.to_string(),
            fmt_f64(s.rmse),
            fmt_f64(s.efficiency),
            fmt_f64(s.perturbation),
            s.n_ok.to_string(),
            s.n_failed.to_string(),
            s.n_paired.to_string(),
        ])?;
    }
    f.finish()?;

    let mut f = CsvFile::create(&out.join("failures.csv"), &["rep", "method", "message"])?;
    for (r, rep) in reps.iter().enumerate() {
        for o in rep {
            if let Err(e) = &o.result {
                f.row(&[r.to_string(), o.method.to_string(), e.clone()])?;
            }
        }
    }
    f.finish()?;

    // Sampling distribution of the posterior median across replications.
    let names = param_names(order);
    let mid = QUANTILE_PROBS.iter().position(|&p| p == 0.5).expect("median listed");
    let mut header: Vec<String> = ["method", "param", "t", "truth", "mean"].map(String::from).to_vec();
    header.extend(QUANTILE_PROBS.iter().map(|&p| quantile_column(p)));
    header.push("n_ok".into());
    let mut f = CsvFile::create(&out.join("medians.csv"), &header)?;
    for m in methods {
        let ok: Vec<&ChainSummary> =
            reps.iter().filter_map(|rep| rep.iter().find(|o| o.method == *m)?.result.as_ref().ok()).collect();
        if ok.is_empty() {
            continue;
        }
        let maps: Vec<Vec<usize>> =
            ok.iter().map(|s| interpolation_index(&s.centers, truth.len())).collect::<tvwhittle::Result<_>>()?;
        let mut col = vec![0.0; ok.len()];
        for (k, name) in names.iter().enumerate() {
            for t in 1..=truth.len() {
                for ((c, s), map) in col.iter_mut().zip(&ok).zip(&maps) {
                    *c = s.table.get(mid, map[t - 1], k);
                }
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                col.sort_by(|a, b| a.total_cmp(b));
                let tv = if k < order { truth.phi_at(t)[k] } else { truth.sigma2_at(t) };
                let mut row = vec![m.to_string(), name.clone(), t.to_string(), fmt_f64(tv), fmt_f64(mean)];
                row.extend(QUANTILE_PROBS.iter().map(|&p| fmt_f64(quantile_sorted(&col, p))));
                row.push(ok.len().to_string());
                f.row(&row)?;
            }
        }
    }
    f.finish()
}
