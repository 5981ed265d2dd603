//! `snm`: exact moments of self-normalized statistics from the command line.
//!
//! Exit status is 0 on success, 1 when `validate` finds a failing check and
//! 2 when the command cannot run (bad flags, bad config, unwritable output).

mod config;
mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use snm_core::estimators::{debiased_gini, sample_gini, sample_scv, sample_theil, EngineBias, EstimatorMethod};
use snm_core::experiments::{debias_experiment, expected_curve, gini_variance_curve, require_pareto};
use snm_core::statistics::{gini_expectation, scv_expectation, theil_expectation, TheilConfig};
use snm_core::validation::{find_suite, run_all, run_suite, SuiteReport, ValidationScale};
use snm_core::{PopulationStat, SampleData};

use config::{CommonArgs, Defaults, ExperimentConfig, Format};
use output::CsvRow;

#[derive(Parser)]
#[command(name = "snm", version, about = "Exact moments of self-normalized statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected statistic and ratio R over a parameter grid, one curve per n.
    BiasCurve(CommonArgs),
    /// Mean, second moment and variance of the sample Gini over a grid.
    VarianceCurve(CommonArgs),
    /// Expected squared coefficient of variation over a grid.
    ScvCurve(CommonArgs),
    /// Monte Carlo bias of the five Gini estimators on Pareto samples.
    DebiasExperiment(CommonArgs),
    /// Run the engine-versus-oracle acceptance suites.
    Validate(ValidateArgs),
    /// One engine evaluation, printed as JSON.
    Moment(CommonArgs),
    /// Render the SVG of a CSV written by one of the curve commands.
    Plot(PlotArgs),
    /// Sample statistics and Gini estimators for observed data.
    Estimate(EstimateArgs),
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// Deterministic suites only.
    #[arg(long)]
    quick: bool,
    /// Run a single suite, by slug or number.
    #[arg(long)]
    suite: Option<String>,
    /// Monte Carlo replications for mean and variance bands.
    #[arg(long)]
    reps: Option<usize>,
    /// Draws for the xi1 oracle.
    #[arg(long)]
    xi1_samples: Option<usize>,
    /// Replications per point of the debiasing suite.
    #[arg(long)]
    debias_reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// Observations, comma separated.
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    values: Option<String>,
    /// File with one observation per line.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Fallback value on the all-zero sample.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long)]
    rel_tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::BiasCurve(a) => curve(&a, "pareto(shape=2,scale=1)", PopulationStat::Gini, "1.1:3.0:0.1", "3,5,10,20"),
        Command::ScvCurve(a) => curve(&a, "gamma(shape=1,scale=1)", PopulationStat::Scv, "0.5:5.0:0.5", "2,5,10,20"),
        Command::VarianceCurve(a) => variance_curve(&a),
        Command::DebiasExperiment(a) => debias(&a),
        Command::Validate(a) => validate(&a),
        Command::Moment(a) => moment(&a),
        Command::Plot(a) => {
            let text = std::fs::read_to_string(&a.csv).with_context(|| format!("reading {}", a.csv.display()))?;
            output::write_text(&a.out, &svg::render(&text)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Estimate(a) => estimate(&a),
    }
}

fn check_sizes(cfg: &ExperimentConfig) -> Result<()> {
    let pairwise = matches!(cfg.stat, PopulationStat::Gini | PopulationStat::Scv);
    if let Some(&n) = cfg.n_list.iter().find(|&&n| n < 1 || (pairwise && n < 2)) {
        bail!("sample size {n} is too small for {:?}", cfg.stat);
    }
    Ok(())
}

fn theil_config(cfg: &ExperimentConfig) -> TheilConfig {
    TheilConfig { seed: cfg.seed, ..TheilConfig::default() }
}

/// Writes rows in the requested format. `svg+csv` writes the CSV to `out`
/// and the plot next to it with an `.svg` extension.
fn write_rows<T: CsvRow>(cfg: &ExperimentConfig, rows: &[T]) -> Result<()> {
    match cfg.format {
        Format::Csv => output::emit(cfg.out.as_deref(), &output::to_csv(rows)?),
        Format::Json => output::emit(cfg.out.as_deref(), &output::to_json(&rows)?),
        Format::SvgCsv => {
            let out = cfg.out.as_deref().context("--format svg+csv needs --out")?;
            let csv_path = if out.extension().is_some_and(|e| e == "svg") { out.with_extension("csv") } else { out.to_path_buf() };
            let text = output::to_csv(rows)?;
            output::write_text(&csv_path, &text)?;
            output::write_text(&csv_path.with_extension("svg"), &svg::render(&text)?)
        }
    }
}

fn require_out_for_svg(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.format == Format::SvgCsv && cfg.out.is_none() {
        bail!("--format svg+csv needs --out");
    }
    Ok(())
}

fn curve(args: &CommonArgs, dist: &'static str, stat: PopulationStat, grid: &'static str, n: &'static str) -> Result<ExitCode> {
    let defaults = Defaults { dist: Some(dist), stat, n, grid: Some(grid), reps: 0 };
    let cfg = ExperimentConfig::resolve(args, &defaults)?;
    if stat == PopulationStat::Scv && cfg.stat != PopulationStat::Scv {
        bail!("scv-curve only computes the scv statistic");
    }
    check_sizes(&cfg)?;
    require_out_for_svg(&cfg)?;
    let base = cfg.require_dist()?;
    let params = cfg.params_or_primary(&base);
    let rows = expected_curve(&base, cfg.stat, &params, &cfg.n_list, cfg.r, &cfg.quadrature, &theil_config(&cfg));
    write_rows(&cfg, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn variance_curve(args: &CommonArgs) -> Result<ExitCode> {
    let defaults = Defaults {
        dist: Some("gamma(shape=1,scale=1)"),
        stat: PopulationStat::Gini,
        n: "5,10,20",
        grid: Some("0.5:5.0:0.5"),
        reps: 0,
    };
    let cfg = ExperimentConfig::resolve(args, &defaults)?;
    if cfg.stat != PopulationStat::Gini {
        bail!("variance-curve only computes the gini statistic");
    }
    check_sizes(&cfg)?;
    require_out_for_svg(&cfg)?;
    let base = cfg.require_dist()?;
    let params = cfg.params_or_primary(&base);
    let rows = gini_variance_curve(&base, &params, &cfg.n_list, cfg.r, &cfg.quadrature);
    write_rows(&cfg, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn debias(args: &CommonArgs) -> Result<ExitCode> {
    let defaults = Defaults {
        dist: Some("pareto(shape=2,scale=1)"),
        stat: PopulationStat::Gini,
        n: "20,50",
        grid: Some("1.1:3.0:0.1"),
        reps: 100_000,
    };
    let cfg = ExperimentConfig::resolve(args, &defaults)?;
    let base = cfg.require_dist()?;
    require_pareto(&base)?;
    if cfg.stat != PopulationStat::Gini {
        bail!("debias-experiment only studies the gini statistic");
    }
    check_sizes(&cfg)?;
    require_out_for_svg(&cfg)?;
    let alphas = cfg.params_or_primary(&base);
    let rows = debias_experiment(&alphas, &cfg.n_list, cfg.replications, cfg.seed, &cfg.quadrature)?;
    write_rows(&cfg, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(args: &ValidateArgs) -> Result<ExitCode> {
    let mut scale = ValidationScale::default();
    scale.mc_replications = args.reps.unwrap_or(scale.mc_replications);
    scale.xi1_samples = args.xi1_samples.unwrap_or(scale.xi1_samples);
    scale.debias_replications = args.debias_reps.unwrap_or(scale.debias_replications);
    scale.seed = args.seed.unwrap_or(scale.seed);
    let reports: Vec<SuiteReport> = match &args.suite {
        Some(key) => vec![run_suite(find_suite(key)?, &scale)],
        None => run_all(args.quick, &scale),
    };
    for report in &reports {
        print_report(report);
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("{passed} of {} suites passed", reports.len());
    if let Some(out) = &args.out {
        output::write_text(out, &output::to_json(&json!({ "scale": scale, "suites": reports }))?)?;
    }
    Ok(if passed == reports.len() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_report(report: &SuiteReport) {
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    println!("{verdict} C{} {} ({:.1}s): {}", report.id, report.slug, report.seconds, report.title);
    if let Some(e) = &report.error {
        println!("  error: {e}");
    }
    for c in &report.checks {
        let mark = if c.pass { "ok  " } else { "FAIL" };
        if c.tolerance.is_nan() {
            println!("  {mark} {}: {} vs {}", c.label, c.engine, c.reference);
        } else {
            println!(
                "  {mark} {}: engine {} reference {} |diff| {:.3e} tol {:.3e}",
                c.label,
                c.engine,
                c.reference,
                (c.engine - c.reference).abs(),
                c.tolerance
            );
        }
    }
}

fn moment(args: &CommonArgs) -> Result<ExitCode> {
    let defaults = Defaults { dist: None, stat: PopulationStat::Gini, n: "2", grid: None, reps: 0 };
    let cfg = ExperimentConfig::resolve(args, &defaults)?;
    let dist = cfg.require_dist()?;
    let [n] = cfg.n_list[..] else { bail!("moment takes a single sample size") };
    check_sizes(&cfg)?;
    let head = json!({ "dist": dist.to_string(), "stat": cfg.stat, "n": n, "r": cfg.r });
    let body = match cfg.stat {
        PopulationStat::Gini => {
            let g = gini_expectation(&dist, n, cfg.r, &cfg.quadrature)?;
            json!({ "value": g.expected, "population_value": g.population_g, "ratio": g.ratio_r, "moment": g.moment })
        }
        PopulationStat::Scv => {
            let s = scv_expectation(&dist, n, cfg.r, &cfg.quadrature)?;
            json!({ "value": s.expected, "population_value": s.population_cv2, "ratio": s.ratio_rv, "moment": s.moment })
        }
        PopulationStat::Theil => {
            let t = theil_expectation(&dist, n, cfg.r, &cfg.quadrature, &theil_config(&cfg))?;
            let ratio = (t.population_theil > 0.0).then(|| t.expected / t.population_theil);
            json!({ "value": t.expected, "population_value": t.population_theil, "ratio": ratio, "theil": t })
        }
    };
    let mut obj = head;
    obj.as_object_mut().unwrap().extend(body.as_object().unwrap().clone());
    output::emit(cfg.out.as_deref(), &output::to_json(&obj)?)?;
    Ok(ExitCode::SUCCESS)
}

fn load_sample(args: &EstimateArgs) -> Result<SampleData> {
    Ok(match (&args.values, &args.data) {
        (Some(v), _) => SampleData::from_list(v)?,
        (None, Some(p)) => SampleData::from_lines(&read(p)?)?,
        (None, None) => bail!("give --values or --data"),
    })
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn estimate(args: &EstimateArgs) -> Result<ExitCode> {
    let data = load_sample(args)?;
    let mut engine = EngineBias::default();
    if let Some(t) = args.rel_tol {
        engine.config.rel_tol = t;
        engine.config.validate()?;
    }
    let estimators: Vec<_> = EstimatorMethod::ALL
        .iter()
        .map(|&m| match debiased_gini(&data, m, &engine) {
            Ok(e) => json!(e),
            Err(err) => json!({ "method": m, "error": err.to_string() }),
        })
        .collect();
    let report = json!({
        "n": data.n(),
        "gini": sample_gini(&data, args.r)?,
        "scv": sample_scv(&data, args.r)?,
        "theil": sample_theil(&data, args.r)?,
        "estimators": estimators,
    });
    print!("{}", output::to_json(&report)?);
    Ok(ExitCode::SUCCESS)
}
