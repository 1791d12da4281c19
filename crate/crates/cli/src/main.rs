mod config;
mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use macroparasite::{
    build_system, convex_order_check, equilibrium_pgf_complex, invert, lorenz_order_check,
    prevalence_complement, report, report_phi_mixture, run_ensemble, AggregationReport,
    ClumpDistribution, Error as CoreError, ModelParams, OrderVerdict, PgfEvaluator, SimConfig,
};
use serde::Serialize;

use config::{
    CompareConfig, DecomposeConfig, FigureConfig, GridSpec, InvertConfig, ReportConfig,
    SimulateConfig,
};

/// CLI failure classes, mapped onto process exit codes:
/// 2 config, 3 numeric/runtime, 4 consistency gate.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Gate(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Gate(m) => write!(f, "consistency gate failure: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) | CoreError::InvalidClump(_) => {
                CliError::Config(e.to_string())
            }
            CoreError::ConsistencyGate { .. } => CliError::Gate(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Gate(_) => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Numeric(format!("cannot write {}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "macroparasite",
    about = "Equilibrium parasite-load analysis: reports, figure sweeps, order comparisons, simulation, decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (.toml or .json)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the RNG seed from the config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Also write SVG line plots (figure subcommand)
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full aggregation report for one parameter set
    Report,
    /// Reproduce one of the three parameter sweeps
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
    },
    /// Lorenz/convex order comparison between two parameter sets
    Compare,
    /// Monte Carlo ensemble of simulated hosts
    Simulate,
    /// Dump the compound-Poisson decomposition as CSV
    Decompose,
    /// Invert the equilibrium PGF to a pmf
    Invert,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Numeric(format!("cannot create {}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Report => cmd_report(cli),
        Command::Figure { which } => cmd_figure(cli, *which),
        Command::Compare => cmd_compare(cli),
        Command::Simulate => cmd_simulate(cli),
        Command::Decompose => cmd_decompose(cli),
        Command::Invert => cmd_invert(cli),
    }
}

fn required_config(cli: &Cli) -> Result<&Path, CliError> {
    cli.config
        .as_deref()
        .ok_or_else(|| CliError::Config("this subcommand requires --config PATH".into()))
}

fn write_csv(path: &Path, schema: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut text = String::with_capacity(rows.len() * 32 + 64);
    text.push_str(&format!("# schema: {schema}\n{header}\n"));
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn pmf_rows(pmf: &macroparasite::Pmf) -> Vec<String> {
    pmf.mass()
        .iter()
        .enumerate()
        .map(|(k, p)| format!("{k},{p}"))
        .collect()
}

// ---------------------------------------------------------------- report

#[derive(Serialize)]
struct ReportDocument<'a> {
    schema: &'static str,
    phi: f64,
    alpha: f64,
    mu_m: f64,
    lambda: f64,
    phi_mixture: Option<&'a config::PhiMixtureSpec>,
    report: &'a AggregationReport,
}

fn cmd_report(cli: &Cli) -> Result<(), CliError> {
    let cfg: ReportConfig = config::load(required_config(cli)?)?;
    let params = cfg.params.build(&cfg.clump)?;
    let budget = cfg.inversion.budget();

    let report = match &cfg.phi_mixture {
        Some(spec) => report_phi_mixture(&params, &spec.build()?, &budget)?,
        None => report(&params, &budget)?,
    };

    let doc = ReportDocument {
        schema: "report/v1",
        phi: params.phi(),
        alpha: params.alpha(),
        mu_m: params.mu_m(),
        lambda: params.lambda(),
        phi_mixture: cfg.phi_mixture.as_ref(),
        report: &report,
    };
    write_json(&cli.out.join("report.json"), &doc)?;
    write_csv(
        &cli.out.join("pmf.csv"),
        "pmf/v1",
        "k,probability",
        &pmf_rows(&report.pmf),
    )?;

    println!(
        "mean {} variance {} vmr {} cv {} prevalence_complement {} gini {} pietra {}",
        report.mean,
        report.variance,
        report.vmr,
        report.cv,
        report.prevalence_complement,
        report.gini,
        report.pietra
    );
    Ok(())
}

// ---------------------------------------------------------------- figure

struct FigureDefaults {
    phi: f64,
    alpha: f64,
    mu_m: f64,
    x: GridSpec,
    series: Vec<f64>,
}

fn figure_defaults(which: u8) -> FigureDefaults {
    match which {
        1 => FigureDefaults {
            phi: 5.0,
            alpha: f64::NAN, // x-axis
            mu_m: 1.0,
            x: GridSpec {
                min: 0.05,
                max: 3.0,
                step: 0.05,
            },
            series: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        },
        2 => FigureDefaults {
            phi: 5.0,
            alpha: 1.0,
            mu_m: f64::NAN,
            x: GridSpec {
                min: 0.0,
                max: 3.0,
                step: 0.05,
            },
            series: vec![4.0, 5.0, 6.0],
        },
        _ => FigureDefaults {
            phi: 5.0,
            alpha: 1.0,
            mu_m: 1.0,
            x: GridSpec {
                min: 0.25,
                max: 6.0,
                step: 0.25,
            },
            series: vec![],
        },
    }
}

#[cfg(feature = "parallel")]
fn map_points<T, F>(n: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_points<T, F>(n: usize, f: F) -> Result<Vec<T>, CliError>
where
    F: Fn(usize) -> Result<T, CliError>,
{
    (0..n).map(f).collect()
}

fn at_point<T>(label: String, r: Result<T, CoreError>) -> Result<T, CliError> {
    r.map_err(|e| {
        let wrapped = CliError::from(e);
        match wrapped {
            CliError::Config(m) => CliError::Config(format!("at {label}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("at {label}: {m}")),
            CliError::Gate(m) => CliError::Gate(format!("at {label}: {m}")),
        }
    })
}

fn cmd_figure(cli: &Cli, which: u8) -> Result<(), CliError> {
    let overrides: FigureConfig = match &cli.config {
        Some(path) => config::load(path)?,
        None => FigureConfig::default(),
    };
    let defaults = figure_defaults(which);
    let phi = overrides.phi.unwrap_or(defaults.phi);
    let x_grid = overrides.x.unwrap_or(defaults.x).points()?;
    let series = overrides.series.unwrap_or(defaults.series);

    match which {
        1 => {
            // CV and parasite-free probability vs alpha, one line per dispersion k
            let mu_m = overrides.mu_m.unwrap_or(defaults.mu_m);
            let cells: Vec<(f64, f64)> = series
                .iter()
                .flat_map(|k| x_grid.iter().map(move |a| (*k, *a)))
                .collect();
            let values = map_points(cells.len(), |i| {
                let (k, alpha) = cells[i];
                let label = format!("alpha={alpha} k={k}");
                let clump = at_point(label.clone(), ClumpDistribution::negative_binomial(1.0, k))?;
                let params = at_point(label.clone(), ModelParams::new(phi, alpha, mu_m, clump))?;
                let cv = at_point(label.clone(), macroparasite::cv(&params))?;
                let p0 = at_point(label, prevalence_complement(&params))?;
                Ok((cv, p0))
            })?;
            let rows: Vec<String> = cells
                .iter()
                .zip(&values)
                .map(|((k, a), (cv, p0))| format!("{a},{k},{cv},{p0}"))
                .collect();
            write_csv(
                &cli.out.join("figure1.csv"),
                "figure1/v1",
                "alpha,k,cv,one_minus_prevalence",
                &rows,
            )?;
            if cli.svg {
                for (name, pick) in [("cv", 0usize), ("prevalence", 1usize)] {
                    let mut all: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
                    for k in &series {
                        let pts: Vec<(f64, f64)> = cells
                            .iter()
                            .zip(&values)
                            .filter(|((kk, _), _)| kk == k)
                            .map(|((_, a), v)| (*a, if pick == 0 { v.0 } else { v.1 }))
                            .collect();
                        all.push((format!("k={k}"), pts));
                    }
                    let svg_series: Vec<svg::Series> = all
                        .iter()
                        .map(|(n, p)| svg::Series {
                            name: n.clone(),
                            points: p,
                        })
                        .collect();
                    let doc = svg::line_plot(
                        if pick == 0 {
                            "CV vs host-mortality increment"
                        } else {
                            "Parasite-free probability vs host-mortality increment"
                        },
                        "alpha",
                        if pick == 0 { "cv" } else { "P(load = 0)" },
                        &svg_series,
                    );
                    let path = cli.out.join(format!("figure1_{name}.svg"));
                    fs::write(&path, doc).map_err(io_err(&path))?;
                }
            }
        }
        2 => {
            // CV and parasite-free probability vs parasite mortality
            let alpha = overrides.alpha.unwrap_or(defaults.alpha);
            let cells: Vec<(f64, f64)> = series
                .iter()
                .flat_map(|m| x_grid.iter().map(move |mu| (*m, *mu)))
                .collect();
            let values = map_points(cells.len(), |i| {
                let (m_c, mu_m) = cells[i];
                let label = format!("mu_m={mu_m} m_c={m_c}");
                let clump = at_point(label.clone(), ClumpDistribution::poisson(m_c))?;
                let params = at_point(label.clone(), ModelParams::new(phi, alpha, mu_m, clump))?;
                let cv = at_point(label.clone(), macroparasite::cv(&params))?;
                let p0 = at_point(label, prevalence_complement(&params))?;
                Ok((cv, p0))
            })?;
            let rows: Vec<String> = cells
                .iter()
                .zip(&values)
                .map(|((m, mu), (cv, p0))| format!("{mu},{m},{cv},{p0}"))
                .collect();
            write_csv(
                &cli.out.join("figure2.csv"),
                "figure2/v1",
                "mu_m,m_c,cv,one_minus_prevalence",
                &rows,
            )?;
            if cli.svg {
                for (name, pick) in [("cv", 0usize), ("prevalence", 1usize)] {
                    let mut svg_data: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
                    for m in &series {
                        let pts: Vec<(f64, f64)> = cells
                            .iter()
                            .zip(&values)
                            .filter(|((mm, _), _)| mm == m)
                            .map(|((_, mu), v)| (*mu, if pick == 0 { v.0 } else { v.1 }))
                            .collect();
                        svg_data.push((format!("clump mean {m}"), pts));
                    }
                    let svg_series: Vec<svg::Series> = svg_data
                        .iter()
                        .map(|(n, p)| svg::Series {
                            name: n.clone(),
                            points: p,
                        })
                        .collect();
                    let doc = svg::line_plot(
                        if pick == 0 {
                            "CV vs parasite mortality"
                        } else {
                            "Parasite-free probability vs parasite mortality"
                        },
                        "mu_m",
                        if pick == 0 { "cv" } else { "P(load = 0)" },
                        &svg_series,
                    );
                    let path = cli.out.join(format!("figure2_{name}.svg"));
                    fs::write(&path, doc).map_err(io_err(&path))?;
                }
            }
        }
        _ => {
            // four aggregation measures vs the clump mean
            let alpha = overrides.alpha.unwrap_or(defaults.alpha);
            let mu_m = overrides.mu_m.unwrap_or(defaults.mu_m);
            let budget = overrides.inversion.budget();
            let values = map_points(x_grid.len(), |i| {
                let m_c = x_grid[i];
                let label = format!("m_c={m_c}");
                let clump =
                    at_point(label.clone(), ClumpDistribution::negative_binomial(m_c, 1.0))?;
                let params = at_point(label.clone(), ModelParams::new(phi, alpha, mu_m, clump))?;
                let rep = at_point(label, report(&params, &budget))?;
                Ok((rep.cv, rep.prevalence_complement, rep.gini, rep.pietra))
            })?;
            let rows: Vec<String> = x_grid
                .iter()
                .zip(&values)
                .map(|(m, (cv, p0, g, pi))| format!("{m},{cv},{p0},{g},{pi}"))
                .collect();
            write_csv(
                &cli.out.join("figure3.csv"),
                "figure3/v1",
                "m_c,cv,one_minus_prevalence,gini,pietra",
                &rows,
            )?;
            if cli.svg {
                let measures = [("cv", 0usize), ("prevalence", 1), ("gini", 2), ("pietra", 3)];
                for (name, idx) in &measures {
                    let pts: Vec<(f64, f64)> = x_grid
                        .iter()
                        .zip(&values)
                        .map(|(m, v)| (*m, [v.0, v.1, v.2, v.3][*idx]))
                        .collect();
                    let svg_series = [svg::Series {
                        name: name.to_string(),
                        points: &pts,
                    }];
                    let doc = svg::line_plot(
                        &format!("{name} vs clump mean"),
                        "clump mean",
                        name,
                        &svg_series,
                    );
                    let path = cli.out.join(format!("figure3_{name}.svg"));
                    fs::write(&path, doc).map_err(io_err(&path))?;
                }
            }
        }
    }
    println!("figure {which} written to {}", cli.out.display());
    Ok(())
}

// ---------------------------------------------------------------- compare

#[derive(Serialize)]
struct SideSummary {
    mean: f64,
    cv: f64,
    prevalence_complement: f64,
    gini: f64,
    pietra: f64,
}

impl From<&AggregationReport> for SideSummary {
    fn from(r: &AggregationReport) -> Self {
        Self {
            mean: r.mean,
            cv: r.cv,
            prevalence_complement: r.prevalence_complement,
            gini: r.gini,
            pietra: r.pietra,
        }
    }
}

#[derive(Serialize)]
struct CompareDocument {
    schema: &'static str,
    left: SideSummary,
    right: SideSummary,
    lorenz: OrderVerdict,
    convex: Option<OrderVerdict>,
    convex_skipped: Option<String>,
}

fn cmd_compare(cli: &Cli) -> Result<(), CliError> {
    let cfg: CompareConfig = config::load(required_config(cli)?)?;
    let budget = cfg.inversion.budget();
    let left = report(&cfg.left.params.build(&cfg.left.clump)?, &budget)?;
    let right = report(&cfg.right.params.build(&cfg.right.clump)?, &budget)?;

    let lorenz = lorenz_order_check(&left.pmf, &right.pmf)?;
    let (convex, convex_skipped) = match convex_order_check(&left.pmf, &right.pmf) {
        Ok(v) => (Some(v), None),
        Err(CoreError::UnequalMeans { left, right }) => (
            None,
            Some(format!(
                "convex order needs equal means; got {left} vs {right}"
            )),
        ),
        Err(e) => return Err(e.into()),
    };

    let doc = CompareDocument {
        schema: "compare/v1",
        left: (&left).into(),
        right: (&right).into(),
        lorenz,
        convex,
        convex_skipped,
    };
    write_json(&cli.out.join("verdict.json"), &doc)?;
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateDocument<'a> {
    schema: &'static str,
    phi: f64,
    alpha: f64,
    mu_m: f64,
    age: f64,
    replicates: u64,
    seed: u64,
    result: &'a macroparasite::SimResult,
}

fn cmd_simulate(cli: &Cli) -> Result<(), CliError> {
    let cfg: SimulateConfig = config::load(required_config(cli)?)?;
    let params = cfg.params.build(&cfg.clump)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let sim = SimConfig {
        params: params.clone(),
        age: cfg.age,
        replicates: cfg.replicates,
        seed,
        phi_mixture: cfg
            .phi_mixture
            .as_ref()
            .map(|s| s.build())
            .transpose()?,
    };
    let result = run_ensemble(&sim)?;

    let doc = SimulateDocument {
        schema: "simulate/v1",
        phi: params.phi(),
        alpha: params.alpha(),
        mu_m: params.mu_m(),
        age: cfg.age,
        replicates: cfg.replicates,
        seed,
        result: &result,
    };
    write_json(&cli.out.join("simresult.json"), &doc)?;
    write_csv(
        &cli.out.join("empirical_pmf.csv"),
        "pmf/v1",
        "k,probability",
        &pmf_rows(&result.empirical_pmf),
    )?;

    println!(
        "replicates {} survivors {} survival_fraction {} mean {} cv {} prevalence_complement {}",
        result.replicates,
        result.survivors,
        result.survival_fraction,
        result.mean_ci.value,
        result.cv_ci.value,
        result.prevalence_ci.value
    );
    Ok(())
}

// ---------------------------------------------------------------- decompose

fn cmd_decompose(cli: &Cli) -> Result<(), CliError> {
    let cfg: DecomposeConfig = config::load(required_config(cli)?)?;
    let params = cfg.params.build(&cfg.clump)?;
    let system = build_system(&params, cfg.tol)?;

    let k = cfg.component_len;
    let header = {
        let mut h = String::from("j,omega");
        for i in 0..k {
            h.push_str(&format!(",f{i}"));
        }
        h
    };
    let rows: Vec<String> = system
        .weights()
        .iter()
        .zip(system.components())
        .take(cfg.max_rows as usize)
        .enumerate()
        .map(|(j, (w, f))| {
            let mut row = format!("{j},{w}");
            for i in 0..k {
                row.push_str(&format!(",{}", f.get(i)));
            }
            row
        })
        .collect();
    write_csv(&cli.out.join("decompose.csv"), "decompose/v1", &header, &rows)?;

    println!(
        "lambda {} poisson_rate {} components {} truncation_deficit {}",
        system.lambda(),
        system.poisson_rate(),
        system.weights().len(),
        system.truncation_deficit()
    );
    Ok(())
}

// ---------------------------------------------------------------- invert

fn cmd_invert(cli: &Cli) -> Result<(), CliError> {
    let cfg: InvertConfig = config::load(required_config(cli)?)?;
    let params = cfg.params.build(&cfg.clump)?;
    let budget = cfg.inversion.budget();
    let (mean, _) = macroparasite::moments(&params)?;

    let evaluator =
        PgfEvaluator::new(|z| equilibrium_pgf_complex(&params, z))?.with_known_mean(mean);
    let k_max = match cfg.k_max {
        Some(k) => k,
        None => macroparasite::choose_k_max(&evaluator, budget.mass_tol)?,
    };
    let pmf = invert(&evaluator, k_max, budget.target_error)?;
    write_csv(
        &cli.out.join("pmf.csv"),
        "pmf/v1",
        "k,probability",
        &pmf_rows(&pmf),
    )?;
    println!("k_max {} tail_bound {}", k_max, pmf.tail_bound());
    Ok(())
}
