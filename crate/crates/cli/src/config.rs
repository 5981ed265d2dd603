//! Experiment configuration: command-line flags layered over an optional
//! TOML or JSON file layered over per-command defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use snm_core::experiments::Grid;
use snm_core::{DistributionSpec, PopulationStat, QuadratureConfig, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    #[value(name = "svg+csv")]
    #[serde(rename = "svg+csv")]
    SvgCsv,
}

/// Options shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Distribution, e.g. `gamma(shape=2,scale=1)` or `pareto(shape=2)`.
    #[arg(long)]
    pub dist: Option<String>,
    /// Statistic: gini, scv or theil.
    #[arg(long)]
    pub stat: Option<String>,
    /// Sample sizes, comma separated.
    #[arg(long)]
    pub n: Option<String>,
    /// Grid over the primary parameter, START:STOP:STEP. Without it a
    /// user-given distribution is evaluated at its own parameter.
    #[arg(long)]
    pub grid: Option<String>,
    /// Fallback value of the statistic on the all-zero sample.
    #[arg(long)]
    pub r: Option<f64>,
    /// Monte Carlo replications.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the quadrature.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML or JSON file with any of the options above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureFile {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub transform: Option<Transform>,
    pub truncation_lambda_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SizeList {
    List(Vec<usize>),
    One(usize),
    Text(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub dist: Option<String>,
    pub stat: Option<String>,
    pub n: Option<SizeList>,
    pub grid: Option<String>,
    pub r: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub rel_tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub quadrature: Option<QuadratureFile>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(anyhow::Error::from)
        } else {
            toml::from_str(&text).map_err(anyhow::Error::from)
        };
        parsed.with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Per-command fallbacks used when neither a flag nor the file sets a value.
#[derive(Debug, Clone)]
pub struct Defaults {
    pub dist: Option<&'static str>,
    pub stat: PopulationStat,
    pub n: &'static str,
    pub grid: Option<&'static str>,
    pub reps: usize,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dist: Option<DistributionSpec>,
    pub stat: PopulationStat,
    pub n_list: Vec<usize>,
    pub params: Option<Vec<f64>>,
    pub r: f64,
    pub replications: usize,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let sizes = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("invalid sample size `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    if sizes.is_empty() {
        bail!("sample size list is empty");
    }
    Ok(sizes)
}

impl ExperimentConfig {
    /// Resolves `flags` over the file named by `--config` over `defaults`.
    pub fn resolve(flags: &CommonArgs, defaults: &Defaults) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let user_dist = flags.dist.clone().or(file.dist);
        let default_dist = user_dist.is_none();
        let dist_text = user_dist.or(defaults.dist.map(String::from));
        let dist = dist_text.map(|t| t.parse::<DistributionSpec>()).transpose()?;
        let stat = match flags.stat.clone().or(file.stat) {
            Some(s) => s.parse::<PopulationStat>()?,
            None => defaults.stat,
        };
        let n_list = match (&flags.n, file.n) {
            (Some(t), _) => parse_sizes(t)?,
            (None, Some(SizeList::List(v))) => v,
            (None, Some(SizeList::One(v))) => vec![v],
            (None, Some(SizeList::Text(t))) => parse_sizes(&t)?,
            (None, None) => parse_sizes(defaults.n)?,
        };
        if n_list.is_empty() {
            bail!("sample size list is empty");
        }
        // the default grid belongs to the default distribution
        let grid = flags.grid.clone().or(file.grid).or(defaults.grid.filter(|_| default_dist).map(String::from));
        let params = grid.map(|g| g.parse::<Grid>().map(|g| g.values())).transpose()?;
        let mut quadrature = QuadratureConfig::default();
        if let Some(q) = file.quadrature {
            quadrature.rel_tol = q.rel_tol.unwrap_or(quadrature.rel_tol);
            quadrature.abs_tol = q.abs_tol.unwrap_or(quadrature.abs_tol);
            quadrature.max_subdivisions = q.max_subdivisions.unwrap_or(quadrature.max_subdivisions);
            quadrature.transform = q.transform.unwrap_or(quadrature.transform);
            quadrature.truncation_lambda_max = q.truncation_lambda_max.unwrap_or(quadrature.truncation_lambda_max);
        }
        if let Some(t) = flags.rel_tol.or(file.rel_tol) {
            quadrature.rel_tol = t;
        }
        quadrature.validate()?;
        let r = flags.r.or(file.r).unwrap_or(0.0);
        if !(r >= 0.0 && r.is_finite()) {
            bail!("r must be finite and non-negative, got {r}");
        }
        Ok(Self {
            dist,
            stat,
            n_list,
            params,
            r,
            replications: flags.reps.or(file.reps).unwrap_or(defaults.reps),
            seed: flags.seed.or(file.seed).unwrap_or(1),
            quadrature,
            out: flags.out.clone().or(file.out),
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
        })
    }

    pub fn require_dist(&self) -> Result<DistributionSpec> {
        self.dist.context("--dist is required for this command")
    }

    /// Grid values, or the distribution's own primary parameter.
    pub fn params_or_primary(&self, dist: &DistributionSpec) -> Vec<f64> {
        self.params.clone().unwrap_or_else(|| vec![dist.params()[0].1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn defaults() -> Defaults {
        Defaults { dist: None, stat: PopulationStat::Gini, n: "3,5", grid: None, reps: 1000 }
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(f, "dist = \"gamma(shape=2)\"\nn = [4, 6]\nr = 0.5\nseed = 9\n[quadrature]\nrel_tol = 1e-8").unwrap();
        let flags = CommonArgs { config: Some(f.path().to_path_buf()), seed: Some(3), ..Default::default() };
        let c = ExperimentConfig::resolve(&flags, &defaults()).unwrap();
        assert_eq!(c.dist.unwrap(), DistributionSpec::gamma(2.0, 1.0).unwrap());
        assert_eq!(c.n_list, vec![4, 6]);
        assert_eq!((c.r, c.seed, c.replications), (0.5, 3, 1000));
        assert_eq!(c.quadrature.rel_tol, 1e-8);
        let flags = CommonArgs { rel_tol: Some(1e-6), ..flags };
        assert_eq!(ExperimentConfig::resolve(&flags, &defaults()).unwrap().quadrature.rel_tol, 1e-6);
    }

    #[test]
    fn json_files_and_unknown_keys() {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        write!(f, r#"{{"stat": "scv", "n": "2,7", "format": "svg+csv"}}"#).unwrap();
        let flags = CommonArgs { config: Some(f.path().to_path_buf()), ..Default::default() };
        let c = ExperimentConfig::resolve(&flags, &defaults()).unwrap();
        assert_eq!((c.stat, c.n_list.clone(), c.format), (PopulationStat::Scv, vec![2, 7], Format::SvgCsv));
        let mut g = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(g, "colour = 1").unwrap();
        let flags = CommonArgs { config: Some(g.path().to_path_buf()), ..Default::default() };
        assert!(ExperimentConfig::resolve(&flags, &defaults()).is_err());
    }

    #[test]
    fn default_grid_follows_default_distribution() {
        let d = Defaults { dist: Some("pareto(shape=2)"), grid: Some("1.5:2.5:0.5"), ..defaults() };
        let c = ExperimentConfig::resolve(&CommonArgs::default(), &d).unwrap();
        assert_eq!(c.params, Some(vec![1.5, 2.0, 2.5]));
        let flags = CommonArgs { dist: Some("gamma(shape=3)".into()), ..Default::default() };
        let c = ExperimentConfig::resolve(&flags, &d).unwrap();
        assert_eq!(c.params, None);
        assert_eq!(c.params_or_primary(&c.dist.unwrap()), vec![3.0]);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = |f: CommonArgs| ExperimentConfig::resolve(&f, &defaults()).is_err();
        assert!(bad(CommonArgs { n: Some("3,x".into()), ..Default::default() }));
        assert!(bad(CommonArgs { grid: Some("3:1:1".into()), ..Default::default() }));
        assert!(bad(CommonArgs { rel_tol: Some(0.0), ..Default::default() }));
        assert!(bad(CommonArgs { r: Some(-1.0), ..Default::default() }));
        assert!(bad(CommonArgs { dist: Some("weibull(k=1)".into()), ..Default::default() }));
    }
}
