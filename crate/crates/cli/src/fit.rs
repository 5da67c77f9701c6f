//! Fitting a tvAR model to a user-supplied series.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tvwhittle::inference::{gibbs_run, interpolation_index, PosteriorDraws};
use tvwhittle::spectral::{squared_gain, QUANTILE_PROBS};
use tvwhittle::TimeSeries64;

use crate::config::{Difference, FitSettings};
use crate::experiment::{method_derived, MethodDerived};
use crate::output::{fmt_f64, quantile_column, write_toml, CsvFile};

/// A series read from CSV, with dates when the file has two columns.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSeries {
    pub values: Vec<f64>,
    pub dates: Option<Vec<String>>,
}

/// Parses `value` or `date,value` rows. A first row whose value does not
/// parse is taken as a header; any later bad row is an error naming its line.
pub fn parse_series(text: &str) -> Result<InputSeries> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut dates = Vec::new();
    let mut width = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.context("malformed CSV")?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() > 2 {
            bail!("line {line}: expected 1 or 2 columns, found {}", rec.len());
        }
        match width {
            Some(w) if w != rec.len() => bail!("line {line}: expected {w} column(s), found {}", rec.len()),
            _ => {}
        }
        let field = &rec[rec.len() - 1];
        let value = match field.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            Ok(_) => bail!("line {line}: value '{field}' is not finite"),
            Err(_) if width.is_none() && values.is_empty() => {
                width = Some(rec.len());
                continue;
            }
            Err(_) => bail!("line {line}: cannot parse '{field}' as a number"),
        };
        width = Some(rec.len());
        if rec.len() == 2 {
            dates.push(rec[0].to_string());
        }
        values.push(value);
    }
    if values.is_empty() {
        bail!("no observations in input");
    }
    Ok(InputSeries { dates: (width == Some(2)).then_some(dates), values })
}

pub fn read_series(path: &Path) -> Result<InputSeries> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_series(&text).with_context(|| format!("in {}", path.display()))
}

/// Applies the differencing; dates follow the later observation.
pub fn difference(series: &InputSeries, how: Difference) -> Result<InputSeries> {
    match how {
        Difference::None => Ok(series.clone()),
        Difference::First => {
            if series.values.len() < 2 {
                bail!("cannot difference a series of length {}", series.values.len());
            }
            Ok(InputSeries {
                values: series.values.windows(2).map(|w| w[1] - w[0]).collect(),
                dates: series.dates.as_ref().map(|d| d[1..].to_vec()),
            })
        }
    }
}

/// Frequencies `pi * j / (n - 1)`, `j = 0..n`.
pub fn frequency_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| PI * j as f64 / (n - 1) as f64).collect()
}

/// Same value as [`tvwhittle::inference::quantile_sorted`] on the sorted data, by selection.
pub fn select_quantile(buf: &mut [f64], prob: f64) -> f64 {
    let h = (buf.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let (_, &mut v_lo, rest) = buf.select_nth_unstable_by(lo, |a, b| a.total_cmp(b));
    let frac = h - lo as f64;
    if frac == 0.0 || rest.is_empty() {
        return v_lo;
    }
    let v_hi = rest.iter().copied().fold(f64::INFINITY, f64::min);
    v_lo + frac * (v_hi - v_lo)
}

/// Quantiles over draws of `g(phi, sigma2)` at every state and frequency,
/// laid out `(state, frequency, prob)`.
fn surface_quantiles(
    draws: &PosteriorDraws,
    omegas: &[f64],
    probs: &[f64],
    g: impl Fn(&[f64], f64, f64) -> f64,
) -> Vec<f64> {
    let (p, n) = (draws.order, draws.n_states);
    let mut out = Vec::with_capacity(n * omegas.len() * probs.len());
    let mut col = vec![0.0; draws.n_draws];
    for s in 0..n {
        for &w in omegas {
            for (d, c) in col.iter_mut().enumerate() {
                let phi = &draws.phi[(d * n + s) * p..(d * n + s + 1) * p];
                *c = g(phi, draws.sigma2[d * n + s], w);
            }
            out.extend(probs.iter().map(|&q| select_quantile(&mut col, q)));
        }
    }
    out
}

#[derive(Serialize)]
struct FitDerived {
    input_len: usize,
    n_obs: usize,
    differenced: String,
    centering_mean: f64,
    stored_draws: usize,
    mean_update_rate: f64,
    method: MethodDerived,
}

pub fn write_config(
    settings: &FitSettings,
    n_obs: usize,
    input_len: usize,
    mean: f64,
    draws: Option<&PosteriorDraws>,
) -> Result<()> {
    let out = &settings.common.out;
    std::fs::create_dir_all(out)?;
    write_toml(&out.join("config.toml"), &settings.echo())?;
    let d = FitDerived {
        input_len,
        n_obs,
        differenced: settings.difference.to_string(),
        centering_mean: mean,
        stored_draws: draws.map_or(settings.gibbs.n_stored(), |d| d.n_draws),
        mean_update_rate: draws.map_or(f64::NAN, |d| d.mean_update_rate()),
        method: method_derived(&settings.spec(), &settings.priors, n_obs)?,
    };
    write_toml(&out.join("derived.toml"), &d)
}

/// Loads, differences and centres the input; returns the series and the removed mean.
pub fn prepare_input(settings: &FitSettings) -> Result<(InputSeries, TimeSeries64, f64, usize)> {
    let raw = read_series(&settings.input)?;
    let diffed = difference(&raw, settings.difference)?;
    let (x, mean) = TimeSeries64::new(diffed.values.clone())?.centered();
    Ok((diffed, x, mean, raw.values.len()))
}

pub fn dry_run(settings: &FitSettings) -> Result<()> {
    let (_, x, mean, input_len) = prepare_input(settings)?;
    write_config(settings, x.len(), input_len, mean, None)
}

pub fn run(settings: &FitSettings) -> Result<PosteriorDraws> {
    let (series, x, mean, input_len) = prepare_input(settings)?;
    write_config(settings, x.len(), input_len, mean, None)?;
    let spec = settings.spec();
    let priors = settings.priors.priors_for(&spec)?;
    let draws = gibbs_run(&x, &spec, &priors, &settings.gibbs)?;
    write_config(settings, x.len(), input_len, mean, Some(&draws))?;
    write_outputs(&settings.common.out, &series, &draws, settings.n_freq)?;
    Ok(draws)
}

fn write_outputs(out: &Path, series: &InputSeries, draws: &PosteriorDraws, n_freq: usize) -> Result<()> {
    let t_len = draws.t_len;
    let map = interpolation_index(&draws.centers, t_len)?;
    let date = |t: usize| series.dates.as_ref().map_or(String::new(), |d| d[t - 1].clone());
    let p = draws.order;

    let mut params: BTreeMap<usize, (String, Vec<f64>)> = BTreeMap::new();
    let phi = draws.phi_quantiles(&QUANTILE_PROBS)?;
    for k in 0..p {
        let mut v = Vec::new();
        for s in 0..draws.n_states {
            v.extend((0..QUANTILE_PROBS.len()).map(|i| phi.get(i, s, k)));
        }
        params.insert(k, (format!("phi{}", k + 1), v));
    }
    let s2 = draws.sigma2_quantiles(&QUANTILE_PROBS)?;
    let h = draws.log_variance_quantiles(&QUANTILE_PROBS)?;
    for (k, (name, table)) in [("sigma2", &s2), ("log_sigma2", &h)].into_iter().enumerate() {
        let mut v = Vec::new();
        for s in 0..draws.n_states {
            v.extend((0..QUANTILE_PROBS.len()).map(|i| table.get(i, s, 0)));
        }
        params.insert(p + k, (name.to_string(), v));
    }
    let r = QUANTILE_PROBS.len();
    let mut header: Vec<String> = ["param", "t", "date"].map(String::from).to_vec();
    header.extend(QUANTILE_PROBS.iter().map(|&q| quantile_column(q)));
    let mut f = CsvFile::create(&out.join("paths.csv"), &header)?;
    for (name, v) in params.values() {
        for t in 1..=t_len {
            let s = map[t - 1];
            let mut row = vec![name.clone(), t.to_string(), date(t)];
            row.extend(v[s * r..(s + 1) * r].iter().map(|&x| fmt_f64(x)));
            f.row(&row)?;
        }
    }
    f.finish()?;

    let omegas = frequency_grid(n_freq);
    let probs = [0.025, 0.5, 0.975];
    let ln_2pi = (2.0 * PI).ln();
    let spectrum = surface_quantiles(draws, &omegas, &probs, |phi, s2, w| s2.ln() - ln_2pi - squared_gain(phi, w).ln());
    let transfer = surface_quantiles(draws, &omegas, &probs, |phi, _, w| squared_gain(phi, w).ln());
    for (file, values) in [("spectrogram.csv", &spectrum), ("transfer.csv", &transfer)] {
        let mut header: Vec<String> = ["t", "date", "omega"].map(String::from).to_vec();
        header.extend(probs.iter().map(|&q| quantile_column(q)));
        let mut f = CsvFile::create(&out.join(file), &header)?;
        for t in 1..=t_len {
            let s = map[t - 1];
            for (j, &w) in omegas.iter().enumerate() {
                let base = (s * omegas.len() + j) * probs.len();
                let mut row = vec![t.to_string(), date(t), fmt_f64(w)];
                row.extend(values[base..base + probs.len()].iter().map(|&x| fmt_f64(x)));
                f.row(&row)?;
            }
        }
        f.finish()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tvwhittle::inference::quantile_sorted;

    #[test]
    fn header_and_dates() {
        let s = parse_series("date,value\n2000-01-01,3\n2000-01-08,5\n2000-01-15,4\n").unwrap();
        assert_eq!(s.values, vec![3.0, 5.0, 4.0]);
        assert_eq!(s.dates.as_ref().unwrap()[2], "2000-01-15");
        let d = difference(&s, Difference::First).unwrap();
        assert_eq!(d.values, vec![2.0, -1.0]);
        assert_eq!(d.dates.unwrap(), vec!["2000-01-08", "2000-01-15"]);
    }

    #[test]
    fn single_column_without_header() {
        let s = parse_series("1.5\n-2\n\n3e-1\n").unwrap();
        assert_eq!(s.values, vec![1.5, -2.0, 0.3]);
        assert!(s.dates.is_none());
    }

    #[test]
    fn bad_row_names_its_line() {
        let err = parse_series("value\n1\n2\nabc\n").unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        let err = parse_series("a,1\nb,2,3\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = parse_series("1\nb,2\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(parse_series("value\n").is_err());
    }

    #[test]
    fn selection_matches_sorting() {
        let mut v: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 * 0.37 - 3.0).collect();
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        for q in [0.0, 0.025, 0.1, 0.5, 0.975, 1.0] {
            assert_eq!(select_quantile(&mut v, q), quantile_sorted(&sorted, q));
        }
    }

    #[test]
    fn grid_ends() {
        let g = frequency_grid(5);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[4], PI);
    }
}
