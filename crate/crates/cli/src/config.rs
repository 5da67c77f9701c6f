//! Flat key/value run configuration: file values, command-line overrides
//! and per-command resolution with defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tvwhittle::inference::{GibbsConfig, Priors, DEFAULT_PARTICLES};
use tvwhittle::modify::DEFAULT_P_MAX;
use tvwhittle::spectral::DEFAULT_GRID_POINTS;
use tvwhittle::{Family, LikelihoodSpec, Modification};

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

/// Every key the config file accepts. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<OneOrMany<f64>>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_len: Option<OneOrMany<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rep: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_curves: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(rename = "mod", skip_serializing_if = "Option::is_none")]
    pub modification: Option<String>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub seg_len: Option<usize>,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sv: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rescale: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_dof: Option<f64>,
    /// Diagonal of the IW scale matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_scale: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_scale_by_step: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_freq: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Values set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &RunConfig) {
        overlay!(self, other; seed, threads, out, preset, experiment, phi, t_len, n_rep, grid_points, n_curves,
            order, methods, family, modification, seg_len, step, m, sv, difference, rescale, n_iter, burn_in,
            thin, n_particles, p_max, q_dof, q_scale, q_scale_by_step, sigma2_shape, sigma2_scale, init_var,
            input, n_freq);
    }
}

/// A likelihood choice written as a token: `td`, `whittle`, `dw:<m>[:<mod>]`, `bw:<N>:<S>[:<mod>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub family: Family,
    pub modification: Modification,
}

impl Method {
    pub const TIME_DOMAIN: Method = Method { family: Family::TimeDomain, modification: Modification::None };

    pub fn spec(&self, order: usize, sv: bool) -> LikelihoodSpec {
        LikelihoodSpec::new(self.family, self.modification, order).with_sv(sv)
    }

    /// Half-width of the boundary the method leaves uncovered.
    pub fn boundary_gap(&self) -> usize {
        match self.family {
            Family::DynamicWhittle { m } => m,
            _ => 0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.modification {
            Modification::None => write!(f, "{}", self.family),
            m => write!(f, "{}:{}", self.family, m),
        }
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let n_geo = match parts[0] {
            "td" | "whittle" => 0,
            "dw" => 1,
            "bw" => 2,
            other => bail!("unknown likelihood family '{other}' in method '{s}'"),
        };
        if parts.len() < 1 + n_geo || parts.len() > 2 + n_geo {
            bail!("method '{s}' should look like td, whittle, dw:<m>[:<mod>] or bw:<N>:<S>[:<mod>]");
        }
        let family: Family = parts[..1 + n_geo].join(":").parse()?;
        let modification = match parts.get(1 + n_geo) {
            Some(m) => m.parse()?,
            None => Modification::None,
        };
        let method = Method { family, modification };
        method.spec(1, false).validate()?;
        Ok(method)
    }
}

fn method_from_parts(cfg: &RunConfig) -> Result<Option<Method>> {
    let Some(family) = cfg.family.as_deref() else {
        if cfg.modification.is_some() || cfg.seg_len.is_some() || cfg.step.is_some() || cfg.m.is_some() {
            bail!("--mod/--N/--S/--m need --family");
        }
        return Ok(None);
    };
    let family = match family {
        "td" | "time-domain" | "time_domain" => Family::TimeDomain,
        "whittle" => Family::WhittleStationary,
        "dw" | "dynamic" => Family::DynamicWhittle { m: cfg.m.ok_or_else(|| anyhow!("dynamic Whittle needs m"))? },
        "bw" | "block" => Family::BlockWhittle {
            seg_len: cfg.seg_len.ok_or_else(|| anyhow!("block Whittle needs N"))?,
            step: cfg.step.ok_or_else(|| anyhow!("block Whittle needs S"))?,
        },
        other => bail!("unknown family '{other}'"),
    };
    let modification = match cfg.modification.as_deref() {
        Some(m) => m.parse()?,
        None => Modification::None,
    };
    Ok(Some(Method { family, modification }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Full,
    Desk,
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "desk" => Ok(Self::Desk),
            other => bail!("unknown preset '{other}' (full or desk)"),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Desk => "desk",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    None,
    First,
}

impl FromStr for Difference {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "first" => Ok(Self::First),
            other => bail!("unknown differencing '{other}' (none or first)"),
        }
    }
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::First => "first",
        })
    }
}

/// Prior settings before they are specialised to a likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSettings {
    pub q_dof: Option<f64>,
    pub q_scale: Option<Vec<f64>>,
    pub q_scale_by_step: bool,
    pub sigma2_shape: Option<f64>,
    pub sigma2_scale: Option<f64>,
    pub init_var: Option<f64>,
}

impl PriorSettings {
    fn from_config(cfg: &RunConfig) -> Self {
        Self {
            q_dof: cfg.q_dof,
            q_scale: cfg.q_scale.clone(),
            q_scale_by_step: cfg.q_scale_by_step.unwrap_or(true),
            sigma2_shape: cfg.sigma2_shape,
            sigma2_scale: cfg.sigma2_scale,
            init_var: cfg.init_var,
        }
    }

    /// Default priors for the spec with any overrides applied.
    pub fn priors_for(&self, spec: &LikelihoodSpec) -> Result<Priors> {
        let mut pr = if spec.sv { Priors::sv_default(spec.order) } else { Priors::standard(spec.order) };
        let d = pr.dim();
        if let Some(v) = self.q_dof {
            pr.q_dof = v;
        }
        if let Some(diag) = &self.q_scale {
            if diag.len() != d {
                bail!("q_scale has {} entries, state dimension is {d}", diag.len());
            }
            for (i, v) in diag.iter().enumerate() {
                for j in 0..d {
                    pr.q_scale[(i, j)] = if i == j { *v } else { 0.0 };
                }
            }
        }
        if let Some(v) = self.sigma2_shape {
            pr.sigma2_shape = v;
        }
        if let Some(v) = self.sigma2_scale {
            pr.sigma2_scale = v;
        }
        if let Some(v) = self.init_var {
            pr.init_cov = pr.init_cov.map(|c| if c != 0.0 { v } else { 0.0 });
        }
        if let (true, Family::BlockWhittle { step, .. }) = (self.q_scale_by_step, spec.family) {
            pr = pr.scale_q(step as f64);
        }
        pr.validate(d)?;
        Ok(pr)
    }

    fn echo(&self, cfg: &mut RunConfig) {
        cfg.q_dof = self.q_dof;
        cfg.q_scale = self.q_scale.clone();
        cfg.q_scale_by_step = Some(self.q_scale_by_step);
        cfg.sigma2_shape = self.sigma2_shape;
        cfg.sigma2_scale = self.sigma2_scale;
        cfg.init_var = self.init_var;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Common {
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
}

pub const DEFAULT_SEED: u64 = 2024;

fn common(cfg: &RunConfig, default_out: &str) -> Common {
    Common {
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        threads: cfg.threads.unwrap_or(0),
        out: PathBuf::from(cfg.out.clone().unwrap_or_else(|| default_out.to_string())),
    }
}

fn echo_common(c: &Common, cfg: &mut RunConfig) {
    cfg.seed = Some(c.seed);
    cfg.threads = Some(c.threads);
    cfg.out = Some(c.out.display().to_string());
}

fn reject(command: &str, keys: &[(&str, bool)]) -> Result<()> {
    if let Some((k, _)) = keys.iter().find(|(_, set)| *set) {
        bail!("key '{k}' does not apply to the {command} command");
    }
    Ok(())
}

fn gibbs(cfg: &RunConfig, n_iter: usize, burn_in: usize, thin: usize, seed: u64) -> Result<GibbsConfig> {
    let g = GibbsConfig {
        n_iter: cfg.n_iter.unwrap_or(n_iter),
        burn_in: cfg.burn_in.unwrap_or(burn_in),
        thin: cfg.thin.unwrap_or(thin),
        n_particles: cfg.n_particles.unwrap_or(DEFAULT_PARTICLES),
        seed,
    };
    g.validate()?;
    Ok(g)
}

fn echo_gibbs(g: &GibbsConfig, cfg: &mut RunConfig) {
    cfg.n_iter = Some(g.n_iter);
    cfg.burn_in = Some(g.burn_in);
    cfg.thin = Some(g.thin);
    cfg.n_particles = Some(g.n_particles);
}

/// Settings of the stationary AR(1) grid-posterior study.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSettings {
    pub common: Common,
    pub phi: Vec<f64>,
    pub t_lens: Vec<usize>,
    pub n_rep: usize,
    pub grid_points: usize,
    pub n_curves: usize,
}

impl GridSettings {
    pub fn resolve(cfg: &RunConfig) -> Result<Self> {
        reject(
            "grid-ar1",
            &[
                ("experiment", cfg.experiment.is_some()),
                ("methods", cfg.methods.is_some()),
                ("family", cfg.family.is_some()),
                ("input", cfg.input.is_some()),
                ("sv", cfg.sv.is_some()),
                ("n_iter", cfg.n_iter.is_some()),
            ],
        )?;
        let s = Self {
            common: common(cfg, "out/grid-ar1"),
            phi: cfg.phi.as_ref().map_or_else(|| vec![0.2, 0.5, 0.8], |v| v.to_vec()),
            t_lens: cfg.t_len.as_ref().map_or_else(|| vec![50, 100, 200], |v| v.to_vec()),
            n_rep: cfg.n_rep.unwrap_or(100),
            grid_points: cfg.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
            n_curves: cfg.n_curves.unwrap_or(4),
        };
        if let Some(p) = s.phi.iter().find(|p| !(p.abs() < 1.0)) {
            bail!("phi must lie in (-1, 1), got {p}");
        }
        if s.t_lens.is_empty() || s.t_lens.iter().any(|&t| t < 4) {
            bail!("T values must be at least 4");
        }
        if s.n_rep < 2 || s.grid_points < 2 {
            bail!("need n_rep >= 2 and grid_points >= 2");
        }
        Ok(s)
    }

    pub fn echo(&self) -> RunConfig {
        let mut cfg = RunConfig::default();
        echo_common(&self.common, &mut cfg);
        cfg.phi = Some(OneOrMany::Many(self.phi.clone()));
        cfg.t_len = Some(OneOrMany::Many(self.t_lens.clone()));
        cfg.n_rep = Some(self.n_rep);
        cfg.grid_points = Some(self.grid_points);
        cfg.n_curves = Some(self.n_curves);
        cfg
    }
}

/// Settings of the replicated tvAR simulation experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub common: Common,
    pub preset: Preset,
    pub experiment: u8,
    pub t_len: usize,
    pub n_rep: usize,
    pub order: usize,
    pub rescale: bool,
    pub methods: Vec<Method>,
    pub gibbs: GibbsConfig,
    pub p_max: usize,
    pub priors: PriorSettings,
}

pub fn default_experiment_methods() -> Vec<Method> {
    let mut out = Vec::new();
    for fam in ["dw:15", "dw:30", "bw:30:15", "bw:60:30"] {
        for m in ["", ":ta", ":pw", ":bc"] {
            out.push(format!("{fam}{m}").parse().expect("valid default method"));
        }
    }
    out
}

impl ExperimentSettings {
    pub fn resolve(cfg: &RunConfig) -> Result<Self> {
        reject(
            "experiment",
            &[
                ("phi", cfg.phi.is_some()),
                ("input", cfg.input.is_some()),
                ("difference", cfg.difference.is_some()),
                ("grid_points", cfg.grid_points.is_some()),
            ],
        )?;
        let preset: Preset = cfg.preset.as_deref().unwrap_or("full").parse()?;
        let experiment = cfg.experiment.unwrap_or(1);
        let default_order = match experiment {
            1 | 3 => 2,
            2 => 3,
            e => bail!("unknown experiment {e} (1, 2 or 3)"),
        };
        let (t_def, rep_def, it_def, burn_def, thin_def) = match preset {
            Preset::Full => (1500, 100, 12_000, 2_000, 2),
            Preset::Desk => (500, 10, 3_000, 500, 2),
        };
        let t_len = match &cfg.t_len {
            Some(OneOrMany::One(t)) => *t,
            Some(OneOrMany::Many(v)) if v.len() == 1 => v[0],
            Some(_) => bail!("experiment takes a single T"),
            None => t_def,
        };
        if cfg.sv == Some(true) {
            bail!("stochastic volatility is only available for fit");
        }
        let methods = match (method_from_parts(cfg)?, &cfg.methods) {
            (Some(_), Some(_)) => bail!("give either methods or family, not both"),
            (Some(m), None) => vec![m],
            (None, Some(list)) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
            (None, None) => default_experiment_methods(),
        };
        if methods.contains(&Method::TIME_DOMAIN) {
            bail!("the time-domain gold standard is always run; do not list td");
        }
        let c = common(cfg, &format!("out/experiment{experiment}"));
        let gibbs = gibbs(cfg, it_def, burn_def, thin_def, c.seed)?;
        Ok(Self {
            preset,
            experiment,
            t_len,
            n_rep: cfg.n_rep.unwrap_or(rep_def),
            order: cfg.order.unwrap_or(default_order),
            rescale: cfg.rescale.unwrap_or(experiment == 3 && t_len != tvwhittle::tvar::EXPERIMENT3_LEN),
            methods,
            gibbs,
            p_max: cfg.p_max.unwrap_or(DEFAULT_P_MAX),
            priors: PriorSettings::from_config(cfg),
            common: c,
        })
    }

    pub fn echo(&self) -> RunConfig {
        let mut cfg = RunConfig::default();
        echo_common(&self.common, &mut cfg);
        cfg.preset = Some(self.preset.to_string());
        cfg.experiment = Some(self.experiment);
        cfg.t_len = Some(OneOrMany::One(self.t_len));
        cfg.n_rep = Some(self.n_rep);
        cfg.order = Some(self.order);
        cfg.rescale = Some(self.rescale);
        cfg.methods = Some(self.methods.iter().map(|m| m.to_string()).collect());
        echo_gibbs(&self.gibbs, &mut cfg);
        cfg.p_max = Some(self.p_max);
        self.priors.echo(&mut cfg);
        cfg
    }

    pub fn spec(&self, method: &Method) -> LikelihoodSpec {
        let mut s = method.spec(self.order, false);
        s.p_max = self.p_max;
        s
    }
}

/// Settings of the `fit` command.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub common: Common,
    pub input: PathBuf,
    pub method: Method,
    pub order: usize,
    pub sv: bool,
    pub difference: Difference,
    pub gibbs: GibbsConfig,
    pub p_max: usize,
    pub n_freq: usize,
    pub priors: PriorSettings,
}

impl FitSettings {
    pub fn resolve(cfg: &RunConfig) -> Result<Self> {
        reject(
            "fit",
            &[
                ("phi", cfg.phi.is_some()),
                ("experiment", cfg.experiment.is_some()),
                ("T", cfg.t_len.is_some()),
                ("n_rep", cfg.n_rep.is_some()),
                ("grid_points", cfg.grid_points.is_some()),
                ("preset", cfg.preset.is_some()),
            ],
        )?;
        let method = match (method_from_parts(cfg)?, &cfg.methods) {
            (Some(_), Some(_)) => bail!("give either methods or family, not both"),
            (Some(m), None) => m,
            (None, Some(list)) if list.len() == 1 => list[0].parse()?,
            (None, Some(_)) => bail!("fit takes a single method"),
            (None, None) => "dw:50".parse()?,
        };
        let input = cfg.input.clone().ok_or_else(|| anyhow!("fit needs an input CSV (input = \"...\" or --input)"))?;
        let c = common(cfg, "out/fit");
        let s = Self {
            input: PathBuf::from(input),
            method,
            order: cfg.order.unwrap_or(2),
            sv: cfg.sv.unwrap_or(true),
            difference: cfg.difference.as_deref().unwrap_or("first").parse()?,
            gibbs: gibbs(cfg, 12_000, 2_000, 2, c.seed)?,
            p_max: cfg.p_max.unwrap_or(DEFAULT_P_MAX),
            n_freq: cfg.n_freq.unwrap_or(64),
            priors: PriorSettings::from_config(cfg),
            common: c,
        };
        if s.n_freq < 2 {
            bail!("n_freq must be at least 2");
        }
        Ok(s)
    }

    pub fn echo(&self) -> RunConfig {
        let mut cfg = RunConfig::default();
        echo_common(&self.common, &mut cfg);
        cfg.input = Some(self.input.display().to_string());
        cfg.methods = Some(vec![self.method.to_string()]);
        cfg.order = Some(self.order);
        cfg.sv = Some(self.sv);
        cfg.difference = Some(self.difference.to_string());
        echo_gibbs(&self.gibbs, &mut cfg);
        cfg.p_max = Some(self.p_max);
        cfg.n_freq = Some(self.n_freq);
        self.priors.echo(&mut cfg);
        cfg
    }

    pub fn spec(&self) -> LikelihoodSpec {
        let mut s = self.method.spec(self.order, self.sv);
        s.p_max = self.p_max;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_toml("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(format!("{err}").contains("bogus"));
    }

    #[test]
    fn scalar_or_list() {
        let c = RunConfig::from_toml("phi = 0.5\nT = [50, 200]\n").unwrap();
        assert_eq!(c.phi.unwrap().to_vec(), vec![0.5]);
        assert_eq!(c.t_len.unwrap().to_vec(), vec![50, 200]);
    }

    #[test]
    fn method_tokens() {
        for tok in ["td", "whittle", "dw:15", "dw:15:ta", "bw:30:15", "bw:30:15:bc", "dw:25:bcnt", "bw:100:50:tar"] {
            let m: Method = tok.parse().unwrap();
            assert_eq!(m.to_string(), tok);
        }
        assert!("dw".parse::<Method>().is_err());
        assert!("bw:30".parse::<Method>().is_err());
        assert!("dw:15:xx".parse::<Method>().is_err());
        assert!("td:ta".parse::<Method>().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c =
            RunConfig::from_toml("experiment = 1\npreset = \"desk\"\nmethods = [\"dw:15\", \"dw:15:ta\"]\n").unwrap();
        c.seed = Some(7);
        let s = ExperimentSettings::resolve(&c).unwrap();
        let text = s.echo().to_toml().unwrap();
        let again = ExperimentSettings::resolve(&RunConfig::from_toml(&text).unwrap()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.gibbs.n_iter, 3000);
        assert_eq!(s.t_len, 500);
    }

    #[test]
    fn wrong_command_keys() {
        let c = RunConfig::from_toml("input = \"x.csv\"\n").unwrap();
        assert!(ExperimentSettings::resolve(&c).is_err());
        assert!(FitSettings::resolve(&RunConfig::default()).is_err());
    }

    #[test]
    fn prior_overrides() {
        let spec = "bw:30:15".parse::<Method>().unwrap().spec(2, false);
        let mut ps = PriorSettings::from_config(&RunConfig::default());
        let pr = ps.priors_for(&spec).unwrap();
        assert!((pr.q_scale[(1, 1)] - 0.035 * 15.0).abs() < 1e-12);
        ps.q_scale_by_step = false;
        ps.q_scale = Some(vec![0.1, 0.2]);
        let pr = ps.priors_for(&spec).unwrap();
        assert_eq!(pr.q_scale[(1, 1)], 0.2);
        ps.q_scale = Some(vec![0.1]);
        assert!(ps.priors_for(&spec).is_err());
    }
}
