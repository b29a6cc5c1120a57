//! `nowcast` command-line front end.
//!
//! Exit status: 0 on success, 1 for usage, input and validation errors,
//! 2 for numerical failures. Diagnostics go to standard error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{Days, NaiveDate, NaiveTime};
use clap::{Args, Parser, Subcommand};

use nowcast::calendar::Frequency;
use nowcast::chronology::{nber_table, report, RecessionEpisode};
use nowcast::covid::{covid_pipeline, DailySeries, DEFAULT_LAMBDA};
use nowcast::estimate::{estimate_mle, standard_errors, EstimateOptions, Optimizer, ParamTransform};
use nowcast::io::{self, ParamsFile};
use nowcast::model::{simulate, DfmParams, DfmSpec, Panel, Standardization};
use nowcast::plot;
use nowcast::vintage::{
    build_vintages_from_releases, evaluation_mode, extract_path, replay, EvaluationMode, ParamsPolicy,
    ReleaseEvent, VintageDataset,
};
use nowcast::{Error, Result};

#[derive(Parser)]
#[command(name = "nowcast", version, about = "Daily mixed-frequency dynamic factor nowcasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a factor path and indicator data from a model.
    Simulate(SimulateArgs),
    /// Estimate parameters by maximum likelihood.
    Estimate(EstimateArgs),
    /// Extract the smoothed index from one data directory.
    Extract(ExtractArgs),
    /// Replay a vintage archive: one path per vintage plus the dot series.
    Replay(ReplayArgs),
    /// Recession depth, duration and severity on a path.
    Chronology(ChronologyArgs),
    /// Correlate the index with an HP-smoothed, led daily series.
    Correlate(CorrelateArgs),
}

#[derive(Args)]
struct OptimizerArgs {
    /// simplex or quasi-newton
    #[arg(long, default_value = "simplex")]
    optimizer: String,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl OptimizerArgs {
    fn options(&self) -> Result<EstimateOptions> {
        Ok(EstimateOptions {
            optimizer: self.optimizer.parse::<Optimizer>()?,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            ..Default::default()
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Parameter file; defaults to the neutral starting values.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Last simulated day when the spec has no grid_end.
    #[arg(long)]
    end: Option<NaiveDate>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Directory of `<indicator>.csv` files (`period_end,value`).
    #[arg(long)]
    data: PathBuf,
    /// Starting parameters; defaults to the neutral starting values.
    #[arg(long)]
    init: Option<PathBuf>,
    #[command(flatten)]
    opt: OptimizerArgs,
    /// Fit on raw transformed data instead of standardized data.
    #[arg(long)]
    no_standardize: bool,
    /// Output parameter file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output path CSV (`date,ads,std`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Parameter file; when absent, parameters are estimated on the first vintage.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Archive directory `<timestamp>/<indicator>.csv`.
    #[arg(long, conflicts_with = "releases", required_unless_present = "releases")]
    vintages: Option<PathBuf>,
    /// Release log CSV `timestamp,indicator,period_end,value`.
    #[arg(long)]
    releases: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    reestimate_per_vintage: bool,
    /// Worker threads for fixed-parameter replay (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Also write path_plot.svg and dot_plot.svg.
    #[arg(long)]
    svg: bool,
    /// Recorded real-time outputs (`vintage,ads`) overlaid on the dot plot.
    #[arg(long)]
    recorded: Option<PathBuf>,
    /// pseudo-real-time, final-expanding or final-full
    #[arg(long, default_value = "pseudo-real-time")]
    mode: String,
    /// Final revised data directory for the final-* modes (default: last vintage).
    #[arg(long = "final")]
    final_data: Option<PathBuf>,
    #[command(flatten)]
    opt: OptimizerArgs,
}

#[derive(Args)]
struct ChronologyArgs {
    /// Path CSV (`date,ads,std`).
    #[arg(long)]
    path: PathBuf,
    /// `builtin` or a CSV file `peak,trough` with YYYY-MM months.
    #[arg(long, default_value = "builtin")]
    table: String,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Daily series CSV (`date,value`).
    #[arg(long)]
    deaths: PathBuf,
    /// Path CSV (`date,ads,std`).
    #[arg(long)]
    path: PathBuf,
    #[arg(long, default_value_t = 20)]
    lead: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Aligned output CSV (`date,ads,smoothed`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dual-axis SVG output.
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Extract(a) => run_extract(a),
        Command::Replay(a) => run_replay(a),
        Command::Chronology(a) => run_chronology(a),
        Command::Correlate(a) => run_correlate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_params(path: Option<&Path>, spec: &DfmSpec) -> Result<ParamsFile> {
    match path {
        Some(p) => io::read_params(p, spec),
        None => Ok(ParamsFile {
            params: DfmParams::default_for(spec),
            standardization: Standardization::identity(spec.indicators.len()),
        }),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Days between a period's end and its release.
fn release_lag(frequency: Frequency) -> u64 {
    match frequency {
        Frequency::Daily => 1,
        Frequency::Weekly => 5,
        Frequency::Monthly => 7,
        Frequency::Quarterly => 30,
    }
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let mut spec = DfmSpec::from_file(&a.spec)?;
    if let Some(end) = a.end {
        spec.grid_end = Some(end);
    }
    if spec.grid_end.is_none() {
        return Err(Error::Config("simulate needs grid_end in the spec or --end".into()));
    }
    let file = load_params(a.params.as_deref(), &spec)?;
    let sim = simulate(&spec, &file.params, a.seed)?;
    create_dir(&a.out)?;

    let factor: Vec<(NaiveDate, f64)> = sim.grid.days().map(|d| d.date).zip(sim.factor.iter().copied()).collect();
    io::write_series_csv(&a.out.join("factor.csv"), &factor)?;

    // Model-unit data are mapped back to raw levels through the standardization.
    let unstd = Panel {
        series: sim
            .panel
            .series
            .iter()
            .zip(&file.standardization.moments)
            .map(|(s, &(c, sc))| s.iter().map(|&(d, v)| (d, c + sc * v)).collect())
            .collect(),
    };
    let raw = unstd.to_raw(&spec);
    io::write_data_dir(&a.out.join("data"), &raw)?;

    let release_time = NaiveTime::from_hms_opt(8, 30, 0).unwrap();
    let mut events: Vec<ReleaseEvent<f64>> = Vec::new();
    for ind in &spec.indicators {
        for &(end, value) in &raw[&ind.id] {
            let ts = (end + Days::new(release_lag(ind.frequency))).and_time(release_time);
            events.push(ReleaseEvent {
                timestamp: ts,
                indicator: ind.id.clone(),
                period_end: end,
                value,
            });
        }
    }
    events.sort_by(|x, y| (x.timestamp, &x.indicator, x.period_end).cmp(&(y.timestamp, &y.indicator, y.period_end)));
    io::write_release_log(&a.out.join("releases.csv"), &events)?;
    io::write_params(&a.out.join("params.toml"), &spec, &file)?;
    println!("days={} observations={}", sim.grid.len(), sim.panel.n_observations());
    Ok(())
}

fn fit(
    spec: &DfmSpec,
    raw: &BTreeMap<String, Vec<(NaiveDate, f64)>>,
    init: &DfmParams<f64>,
    standardize: bool,
    options: &EstimateOptions,
) -> Result<(ParamsFile, nowcast::EstimationReport, nowcast::Panel)> {
    let panel = Panel::from_raw(spec, raw)?;
    let st = if standardize {
        Standardization::fit(&panel)
    } else {
        Standardization::identity(spec.indicators.len())
    };
    let model_panel = st.apply(&panel)?;
    let report = estimate_mle(spec, &model_panel, init, options)?;
    Ok((
        ParamsFile {
            params: report.params_hat.clone(),
            standardization: st,
        },
        report,
        model_panel,
    ))
}

fn run_estimate(a: EstimateArgs) -> Result<()> {
    let spec = DfmSpec::from_file(&a.spec)?;
    let init = load_params(a.init.as_deref(), &spec)?.params;
    let raw = io::read_data_dir(&a.data)?;
    let options = a.opt.options()?;
    let (file, report, panel) = fit(&spec, &raw, &init, !a.no_standardize, &options)?;
    io::write_params(&a.out, &spec, &file)?;
    println!("loglik={}", report.loglik);
    println!("init_loglik={}", report.init_loglik);
    println!("iterations={}", report.iterations);
    println!("converged={}", report.converged);
    match standard_errors(&spec, &panel, &report.params_hat) {
        Ok(se) => {
            let names = ParamTransform::new(&spec);
            let nat = names.to_natural(&report.params_hat);
            for ((name, v), s) in names.names().iter().zip(nat).zip(se) {
                println!("{name}={v} se={s}");
            }
        }
        Err(e) => log::warn!("standard errors unavailable: {e}"),
    }
    Ok(())
}

fn run_extract(a: ExtractArgs) -> Result<()> {
    let spec = DfmSpec::from_file(&a.spec)?;
    let file = io::read_params(&a.params, &spec)?;
    let series = io::read_data_dir(&a.data)?;
    let last = series
        .values()
        .filter_map(|s| s.last().map(|o| o.0))
        .max()
        .unwrap_or(spec.grid_start);
    let vintage = VintageDataset {
        pull: last.and_time(NaiveTime::MIN),
        series,
    };
    let path = extract_path(&spec, &file.params, &file.standardization, &vintage)?;
    io::write_path_csv(&a.out, &path)?;
    if let Some(p) = path.last() {
        println!("last_date={} ads={} std={}", p.date, p.ads, p.std);
    }
    Ok(())
}

fn run_replay(a: ReplayArgs) -> Result<()> {
    let spec = DfmSpec::from_file(&a.spec)?;
    let vintages = match (&a.vintages, &a.releases) {
        (Some(dir), _) => io::ingest_vintages(dir)?,
        (None, Some(log)) => build_vintages_from_releases(&io::read_release_log(log)?)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if vintages.is_empty() {
        return Err(Error::Validation("no vintages found".into()));
    }
    let mode: EvaluationMode = a.mode.parse()?;
    let final_data = match &a.final_data {
        Some(dir) => {
            let series = io::read_data_dir(dir)?;
            let pull = vintages.last().unwrap().pull;
            Some(VintageDataset { pull, series })
        }
        None => None,
    };
    let datasets = evaluation_mode(mode, final_data.as_ref(), &vintages, &[])?;
    let options = a.opt.options()?;

    let policy = if a.reestimate_per_vintage {
        ParamsPolicy::ReestimatePerVintage {
            init: load_params(a.params.as_deref(), &spec)?.params,
            options,
            standardize: true,
        }
    } else {
        let file = match &a.params {
            Some(p) => io::read_params(p, &spec)?,
            None => {
                let init = DfmParams::default_for(&spec);
                fit(&spec, &datasets[0].series, &init, true, &options)?.0
            }
        };
        ParamsPolicy::Fixed {
            params: file.params,
            standardization: file.standardization,
        }
    };
    let out = replay(&spec, &policy, &datasets, a.jobs)?;
    let paths_dir = a.out.join("paths");
    create_dir(&paths_dir)?;
    for p in &out.paths {
        io::write_path_csv(&paths_dir.join(format!("{}.csv", nowcast::vintage::timestamp_label(p.pull))), p)?;
    }
    io::write_dots_csv(&a.out.join("dots.csv"), &out.dots)?;
    if let ParamsPolicy::Fixed {
        params,
        standardization,
    } = &policy
    {
        let file = ParamsFile {
            params: params.clone(),
            standardization: standardization.clone(),
        };
        io::write_params(&a.out.join("params.toml"), &spec, &file)?;
    }
    if a.svg {
        let recorded = a.recorded.as_deref().map(io::read_dots_csv).transpose()?;
        let write = |name: &str, text: String| {
            let p = a.out.join(name);
            fs::write(&p, text).map_err(|e| Error::Io { path: p, source: e })
        };
        write("path_plot.svg", plot::path_plot_svg(&out.paths, None, None))?;
        write("dot_plot.svg", plot::dot_plot_svg(&out.dots, recorded.as_ref()))?;
    }
    println!("vintages={}", out.paths.len());
    Ok(())
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or("NA".to_string(), |x| x.to_string())
}

fn run_chronology(a: ChronologyArgs) -> Result<()> {
    let path: Vec<(NaiveDate, f64)> = io::read_path_csv(&a.path)?.into_iter().map(|(d, v, _)| (d, v)).collect();
    let episodes: Vec<RecessionEpisode> = if a.table == "builtin" {
        nber_table().into_iter().map(|r| r.episode).collect()
    } else {
        io::read_recession_table(Path::new(&a.table))?
    };
    let rows = report(&path, &episodes);
    let round = |v: Option<f64>| v.map(|x| format!("{x:.1}"));
    println!(
        "{:<8} {:<8} {:<11} {:<11} {:>8} {:>7} {:>8} {:<10}",
        "peak", "trough", "announced", "announced", "duration", "depth", "severity", "trough_day"
    );
    let mut csv = String::from("peak,trough,peak_announced,trough_announced,duration,depth,severity,trough_day\n");
    for r in &rows {
        let e = &r.episode;
        println!(
            "{:<8} {:<8} {:<11} {:<11} {:>8} {:>7} {:>8} {:<10}",
            e.peak.to_string(),
            e.trough.to_string(),
            fmt_opt(e.peak_announced),
            fmt_opt(e.trough_announced),
            r.duration,
            fmt_opt(round(r.depth)),
            fmt_opt(round(r.severity)),
            fmt_opt(r.trough_day)
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            e.peak,
            e.trough,
            fmt_opt(e.peak_announced),
            fmt_opt(e.trough_announced),
            r.duration,
            fmt_opt(r.depth),
            fmt_opt(r.severity),
            fmt_opt(r.trough_day)
        ));
    }
    if let Some(p) = &a.csv {
        fs::write(p, csv).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn run_correlate(a: CorrelateArgs) -> Result<()> {
    let deaths = DailySeries::from_points(&io::read_series_csv(&a.deaths)?)?;
    let path: Vec<(NaiveDate, f64)> = io::read_path_csv(&a.path)?.into_iter().map(|(d, v, _)| (d, v)).collect();
    let index = DailySeries::from_points(&path)?;
    let result = covid_pipeline(&index, &deaths, a.lead, a.lambda)?;
    println!("correlation={}", result.correlation);
    println!("lead={}", a.lead);
    println!("lambda={}", a.lambda);
    println!("days={}", result.aligned.len());
    if let Some(p) = &a.out {
        let mut text = String::from("date,ads,smoothed\n");
        for (d, x, y) in &result.aligned {
            text.push_str(&format!("{d},{x},{y}\n"));
        }
        fs::write(p, text).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    if let Some(p) = &a.svg {
        let svg = plot::dual_axis_svg(&result.aligned, "index", &format!("led {} days, HP", a.lead));
        fs::write(p, svg).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    Ok(())
}
