//! Command-line front end. `run` is the whole program minus process exit.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use twolevel_core::design::{
    enumerate_designs, recommend_design, Bins, Budget, DesignGrid, Lattice, Objective, Surface, HEATMAP_BINS,
};
use twolevel_core::estimators::{
    empirical_coefficients, lepskii_threshold_g, lepskii_thresholds_f, population_bound,
    single_subject_threshold, subject_bound, Normalization, PosteriorSpec, SingleDenominator,
    SingleSubjectRule, ThresholdKind, ThresholdSelection, DEFAULT_TAU, DEFAULT_TAU1, DEFAULT_TAU2,
};
use twolevel_core::risk::{rate_f, rate_g, rate_single_subject, EstimatorSpec, RateQuery, Target};
use twolevel_core::sim::{
    simulate_regression, simulate_sequence, study1_grids, ModelConfig, SeedTree, STUDY1_LATTICE,
};
use twolevel_core::Spectrum;

use crate::config::{ConfigFile, NumList, PairList, Settings};
use crate::error::{AppError, Result};
use crate::formats::{self, Header};
use crate::lattice::LatticeEvaluator;
use crate::studies::{self, OracleCheck, Study1Config, Study2Config, StudyMode};
use crate::svg;
use crate::table::{compare_estimators, CompareSettings, MultiSubjectTable, SplitSpec};

/// Environment variable overriding the default output directory.
pub const OUTPUT_ENV: &str = "TWOLEVEL_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "twolevel-out";
/// Bumped whenever a default constant changes.
pub const DEFAULTS_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "twolevel", version, about = "Two-level function estimation: rates, designs, simulations and fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// `key = value` config file, or an artifact whose header to reuse.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the TWOLEVEL_OUTPUT_DIR environment variable).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Theoretical risk rates at one design.
    Rates(RatesArgs),
    /// Quiver maps of negative rate gradients over a budgeted design grid.
    GradientMap(GridArgs),
    /// Binned heatmap of a log-rate surface or a study summary.
    Heatmap(HeatmapArgs),
    /// Draw one dataset from the two-level model.
    Simulate(SimulateArgs),
    /// Adaptive versus fixed and single-subject estimators across designs.
    Study1(Study1Args),
    /// Monte Carlo mean log MISE surfaces under a product budget.
    Study2(Study2Args),
    /// Fit one estimator to a curve table.
    Fit(FitArgs),
    /// Held-out prediction error of single-subject versus two-threshold fits.
    Compare(CompareArgs),
    /// Adaptive thresholds against truth-dependent oracle thresholds.
    OracleCheck(OracleArgs),
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_tilde: Option<f64>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_tilde: Option<f64>,
    #[arg(long)]
    budget: Option<f64>,
    /// `product` (n·m ≤ budget) or `linear` (cost_n·n + cost_m·m ≤ budget).
    #[arg(long)]
    budget_mode: Option<String>,
    #[arg(long)]
    cost_n: Option<f64>,
    #[arg(long)]
    cost_m: Option<f64>,
    /// Lattice points per decade; 0 enumerates every integer.
    #[arg(long)]
    per_decade: Option<u32>,
    /// `g`, `f` or `both`.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args, Debug)]
struct HeatmapArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Study summary CSV to map instead of the theoretical rate.
    #[arg(long)]
    from: Option<PathBuf>,
    /// Estimator label selected from the summary.
    #[arg(long)]
    estimator: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_tilde: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicate: Option<u64>,
    /// `sequence` or `regression`.
    #[arg(long)]
    mode: Option<StudyMode>,
    /// Regression grid: `equispaced` or `study1`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    lattice: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    noise_sd: Option<f64>,
}

#[derive(Args, Debug)]
struct TauArgs {
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
}

#[derive(Args, Debug)]
struct SingleArgs {
    /// Constant of the single-subject rule.
    #[arg(long)]
    single_constant: Option<f64>,
    /// Denominator of the single-subject rule: `nm` or `n`.
    #[arg(long)]
    single_denominator: Option<DenominatorArg>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct DenominatorArg(SingleDenominator);

impl std::str::FromStr for DenominatorArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nm" => Ok(DenominatorArg(SingleDenominator::Nm)),
            "n" => Ok(DenominatorArg(SingleDenominator::N)),
            other => Err(format!("unknown denominator `{other}` (nm|n)")),
        }
    }
}

impl std::fmt::Display for DenominatorArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self.0 {
            SingleDenominator::Nm => "nm",
            SingleDenominator::N => "n",
        })
    }
}

#[derive(Args, Debug)]
struct Study1Args {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_tilde: Option<f64>,
    /// Designs as `NxM` pairs, comma separated.
    #[arg(long)]
    pairs: Option<PairList>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<StudyMode>,
    #[arg(long)]
    lattice: Option<usize>,
    /// Smoothness guesses of the fixed-threshold estimators.
    #[arg(long)]
    betas: Option<NumList<f64>>,
    #[command(flatten)]
    tau: TauArgs,
    #[command(flatten)]
    single: SingleArgs,
}

#[derive(Args, Debug)]
struct Study2Args {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_tilde: Option<f64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    per_decade: Option<u32>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    tau: TauArgs,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Curve table with columns `subject,i,t,y`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// adaptive-g, fixed-g, posterior-g, adaptive-f, fixed-f, single or posterior-f.
    #[arg(long)]
    estimator: Option<String>,
    /// Target subject id for subject-level estimators (default: first).
    #[arg(long)]
    subject: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    #[command(flatten)]
    tau: TauArgs,
    #[command(flatten)]
    single: SingleArgs,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_tilde: Option<f64>,
    /// Prior smoothness for posterior means.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_tilde: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Test indices `a,b,count` giving `{a·i + b : i = 1..count}`.
    #[arg(long, allow_hyphen_values = true)]
    split: Option<SplitSpec>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[command(flatten)]
    single: SingleArgs,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_tilde: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Parses `args` (without the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("twolevel")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Per-run context: resolved settings, output directory and written files.
struct Run {
    command: &'static str,
    settings: Settings,
    out: PathBuf,
    derived: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl Run {
    fn start(command: &'static str, common: &Common) -> Result<Self> {
        let file = match &common.config {
            None => ConfigFile::default(),
            Some(path) => {
                let text = formats::read_text(path)?;
                match formats::header_config(&text)? {
                    Some((cmd, cfg)) if cmd == command => cfg,
                    Some((cmd, _)) => {
                        return Err(AppError::config(format!(
                            "{} was written by `{cmd}`, not `{command}`",
                            path.display()
                        )))
                    }
                    None => ConfigFile::load(path)?,
                }
            }
        };
        let out = resolve_output(common.out.as_deref());
        Ok(Run { command, settings: Settings::new(file), out, derived: Vec::new(), outputs: Vec::new() })
    }

    fn header(&self) -> Header {
        let mut h = Header::new(self.command, self.settings.echo());
        h.derived = self.derived.clone();
        h
    }

    fn derive(&mut self, key: &str, value: impl std::fmt::Display) {
        self.derived.push((key.to_string(), value.to_string()));
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        formats::write_text(&self.out.join(name), text)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes the manifest; call last.
    fn finish(mut self) -> Result<PathBuf> {
        let mut h = self.header();
        h.derived.push(("defaults_version".into(), DEFAULTS_VERSION.to_string()));
        h.derived.push(("default.tau".into(), DEFAULT_TAU.to_string()));
        h.derived.push(("default.tau1".into(), DEFAULT_TAU1.to_string()));
        h.derived.push(("default.tau2".into(), DEFAULT_TAU2.to_string()));
        h.derived.push(("default.single_constant".into(), SingleSubjectRule::default().constant.to_string()));
        h.derived.push(("default.lattice".into(), STUDY1_LATTICE.to_string()));
        h.derived.push(("outputs".into(), self.outputs.join(",")));
        let path = self.out.join("manifest.txt");
        formats::write_text(&path, &h.render())?;
        self.outputs.clear();
        Ok(path)
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Rates(a) => rates(a, stdout),
        Command::GradientMap(a) => gradient_map(a, stdout),
        Command::Heatmap(a) => heatmap(a, stdout),
        Command::Simulate(a) => simulate(a, stdout),
        Command::Study1(a) => study1(a, stdout),
        Command::Study2(a) => study2(a, stdout),
        Command::Fit(a) => fit(a, stdout),
        Command::Compare(a) => compare(a, stdout),
        Command::OracleCheck(a) => oracle(a, stdout),
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text).and_then(|_| out.write_all(b"\n")).map_err(|e| AppError::io("<stdout>", e))
}

/// Twelve significant decimals without trailing zeros.
fn short(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn rates(a: RatesArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("rates", &a.common)?;
    let s = &mut run.settings;
    let n = s.value("n", a.n, 100.0)?;
    let m = s.value("m", a.m, 100.0)?;
    let alpha = s.value("alpha", a.alpha, 0.5)?;
    let alpha_tilde = s.value("alpha_tilde", a.alpha_tilde, 0.5)?;
    s.finish()?;
    let q = RateQuery::new(n, m, alpha, alpha_tilde).map_err(|e| AppError::config(e.to_string()))?;
    let (g, f, single) = (rate_g(&q), rate_f(&q), rate_single_subject(&q));
    say(stdout, format_args!("rate_g={}", short(g)))?;
    say(stdout, format_args!("rate_f={}", short(f)))?;
    say(stdout, format_args!("rate_single={}", short(single)))?;
    let text = formats::plain_csv(
        &run.header(),
        &["n", "m", "rate_g", "rate_f", "rate_single"],
        [[n, m, g, f, single].map(|v| v.to_string())],
    );
    run.write("rates.csv", &text)?;
    run.finish()?;
    Ok(())
}

fn parse_target(s: &str) -> Result<Vec<Target>> {
    match s {
        "g" => Ok(vec![Target::G]),
        "f" => Ok(vec![Target::F]),
        "both" => Ok(vec![Target::G, Target::F]),
        other => Err(AppError::config(format!("unknown target `{other}` (g|f|both)"))),
    }
}

fn target_name(t: Target) -> &'static str {
    match t {
        Target::G => "g",
        Target::F => "f",
    }
}

/// Resolves grid flags and enumerates the designs.
fn design_grid(a: &GridArgs, s: &mut Settings, default_target: &str) -> Result<(DesignGrid, Vec<Target>)> {
    let alpha = s.value("alpha", a.alpha, 0.5)?;
    let alpha_tilde = s.value("alpha_tilde", a.alpha_tilde, 0.5)?;
    let budget = s.value("budget", a.budget, 5000.0)?;
    let mode = s.value("budget_mode", a.budget_mode.clone(), "product".to_string())?;
    let per_decade = s.value("per_decade", a.per_decade, 4u32)?;
    let target = s.value("target", a.target.clone(), default_target.to_string())?;
    let budget = match mode.as_str() {
        "product" => Budget::Product { budget },
        "linear" => {
            let cost_n = s.value("cost_n", a.cost_n, 1.0)?;
            let cost_m = s.value("cost_m", a.cost_m, 1.0)?;
            Budget::Linear { budget, cost_n, cost_m }
        }
        other => return Err(AppError::config(format!("unknown budget mode `{other}` (product|linear)"))),
    };
    let lattice = if per_decade == 0 { Lattice::AllIntegers } else { Lattice::LogSpaced { per_decade } };
    let targets = parse_target(&target)?;
    let grid = enumerate_designs(budget, alpha, alpha_tilde, lattice).map_err(|e| AppError::config(e.to_string()))?;
    Ok((grid, targets))
}

fn gradient_map(a: GridArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("gradient-map", &a.common)?;
    let (grid, targets) = design_grid(&a, &mut run.settings, "both")?;
    run.settings.finish()?;
    run.derive("cells", grid.points.len());
    for t in [Target::G, Target::F] {
        let best = recommend_design(&grid, if t == Target::G { Objective::G } else { Objective::F })?;
        run.derive(&format!("recommended_{}", target_name(t)), format!("{}x{}", best.n, best.m));
        say(stdout, format_args!("recommended_{}: n={} m={}", target_name(t), best.n, best.m))?;
    }
    let csv = formats::gradient_csv(&run.header(), &grid.points);
    run.write("gradient.csv", &csv)?;
    for t in targets {
        let svg = svg::gradient_map_svg(&grid, t);
        run.write(&format!("gradient_{}.svg", target_name(t)), &svg)?;
    }
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

fn heatmap_outputs(run: &mut Run, name: &str, surface: &Surface, title: &str) -> Result<()> {
    let values: Vec<f64> = surface.present().map(|c| c.2).collect();
    let bins = Bins::quantile(&values, HEATMAP_BINS)?;
    let fit = twolevel_core::design::boundary_fit(surface).ok();
    let mut header = run.header();
    header.derived.push(("bin_edges".into(), NumList(bins.edges.clone()).to_string()));
    if let Some(f) = fit {
        header.derived.push(("boundary_verticality_deg".into(), f.verticality_deg.to_string()));
    }
    run.write(&format!("heatmap_{name}.csv"), &formats::heatmap_csv(&header, surface, &bins))?;
    run.write(&format!("heatmap_{name}.svg"), &svg::heatmap_svg(surface, &bins, title))
}

fn heatmap(a: HeatmapArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("heatmap", &a.grid.common)?;
    let from = run.settings.optional("from", a.from.as_ref().map(|p| p.display().to_string()))?;
    match from {
        Some(path) => {
            let estimator = run.settings.value("estimator", a.estimator.clone(), "adaptive_f".to_string())?;
            run.settings.finish()?;
            let path = PathBuf::from(path);
            let text = formats::read_text(&path)?;
            let records = formats::parse_summary(&text).map_err(|e| e.in_file(&path))?;
            let mut values = std::collections::BTreeMap::new();
            for r in records.iter().filter(|r| r.estimator == estimator) {
                if values.insert((r.n, r.m), r.mean_log).is_some() {
                    return Err(AppError::data(0, format!("duplicate cell ({}, {})", r.n, r.m)).in_file(&path));
                }
            }
            if values.is_empty() {
                return Err(AppError::data(0, format!("no rows for estimator `{estimator}`")).in_file(&path));
            }
            let mut n_axis: Vec<u64> = values.keys().map(|k| k.0).collect();
            let mut m_axis: Vec<u64> = values.keys().map(|k| k.1).collect();
            n_axis.sort_unstable();
            n_axis.dedup();
            m_axis.sort_unstable();
            m_axis.dedup();
            // a summary has no budget, so every lattice cell must be covered
            let surface = Surface::from_values(n_axis, m_axis, &values, |_, _| true)?;
            heatmap_outputs(&mut run, &estimator, &surface, &format!("Mean log MISE, {estimator}"))?;
        }
        None => {
            let (grid, targets) = design_grid(&a.grid, &mut run.settings, "both")?;
            run.settings.finish()?;
            for t in targets {
                let surface = Surface::log_rate(&grid, t);
                let title = format!("log rate_{} (alpha={}, alpha_tilde={})", target_name(t), grid.alpha, grid.alpha_tilde);
                heatmap_outputs(&mut run, target_name(t), &surface, &title)?;
            }
        }
    }
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

fn simulate(a: SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("simulate", &a.common)?;
    let s = &mut run.settings;
    let n = s.value("n", a.n, 100)?;
    let m = s.value("m", a.m, 10)?;
    let alpha = s.value("alpha", a.alpha, 0.5)?;
    let alpha_tilde = s.value("alpha_tilde", a.alpha_tilde, 0.5)?;
    let seed = s.value("seed", a.seed, 0u64)?;
    let replicate = s.value("replicate", a.replicate, 0u64)?;
    let mode = s.value("mode", a.mode, StudyMode::Regression)?;
    let noise_sd = s.value("noise_sd", a.noise_sd, 1.0)?;
    let prior = Spectrum::with_decay(alpha).map_err(|e| AppError::config(e.to_string()))?;
    let dev = Spectrum::with_decay(alpha_tilde).map_err(|e| AppError::config(e.to_string()))?;
    let seeds = SeedTree::new(seed);
    match mode {
        StudyMode::Sequence => {
            let base = ModelConfig::sequence(n, m, prior, dev).map_err(|e| AppError::config(e.to_string()))?;
            let k_max = s.value("k_max", a.k_max, base.k_max)?;
            s.finish()?;
            let cfg = base.with_k_max(k_max)?.with_noise_sd(noise_sd)?;
            let draw = simulate_sequence(&cfg, &seeds, replicate);
            let h = run.header();
            run.write("sequence.csv", &formats::sequence_csv(&h, &draw.rows))?;
            run.write("g.csv", &formats::series_csv(&h, &draw.g))?;
            run.write("subjects.csv", &formats::series_table_csv(&h, &draw.subjects))?;
        }
        StudyMode::Regression => {
            let grid_kind = s.value("grid", a.grid.clone(), "equispaced".to_string())?;
            let grids: Vec<Vec<f64>> = match grid_kind.as_str() {
                "equispaced" => vec![studies::equispaced(n); m],
                "study1" => {
                    let lattice = s.value("lattice", a.lattice, STUDY1_LATTICE)?;
                    (1..=m)
                        .map(|j| study1_grids(n, m, j, lattice).map(|g| g.train))
                        .collect::<twolevel_core::Result<_>>()
                        .map_err(|e| AppError::config(e.to_string()))?
                }
                other => return Err(AppError::config(format!("unknown grid `{other}` (equispaced|study1)"))),
            };
            let k_max = s.value("k_max", a.k_max, 4 * n.max(1))?;
            s.finish()?;
            let cfg = ModelConfig::regression(n, m, prior, dev, k_max)
                .and_then(|c| c.with_noise_sd(noise_sd))
                .map_err(|e| AppError::config(e.to_string()))?;
            let evaluator = LatticeEvaluator::new(k_max.max(1));
            let draw = simulate_regression(&cfg, &grids, &seeds, replicate, &evaluator)?;
            let ids: Vec<String> = (1..=m).map(|j| j.to_string()).collect();
            let values = (0..m).map(|j| draw.data.values(j).to_vec()).collect();
            let table = MultiSubjectTable::new(ids.clone(), grids, values)?;
            let h = run.header();
            run.write("dataset.csv", &formats::dataset_csv(&h, &ids, &draw.data))?;
            run.write("table.csv", &table.to_csv(&h))?;
            run.write("g.csv", &formats::series_csv(&h, &draw.g))?;
            run.write("subjects.csv", &formats::series_table_csv(&h, &draw.subjects))?;
        }
    }
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

fn single_rule(a: &SingleArgs, s: &mut Settings, default_constant: f64) -> Result<SingleSubjectRule> {
    let constant = s.value("single_constant", a.single_constant, default_constant)?;
    let denominator = s.value(
        "single_denominator",
        a.single_denominator,
        DenominatorArg(SingleSubjectRule::default().denominator),
    )?;
    Ok(SingleSubjectRule { constant, denominator: denominator.0 })
}

fn study1(a: Study1Args, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("study1", &a.common)?;
    let s = &mut run.settings;
    let alpha = s.value("alpha", a.alpha, 0.5)?;
    let mut cfg = Study1Config::new(alpha);
    cfg.alpha_tilde = s.value("alpha_tilde", a.alpha_tilde, cfg.alpha_tilde)?;
    cfg.pairs = s.value("pairs", a.pairs.clone(), PairList(cfg.pairs.clone()))?.0;
    cfg.replicates = s.value("replicates", a.replicates, cfg.replicates)?;
    cfg.seed = s.value("seed", a.seed, cfg.seed)?;
    cfg.mode = s.value("mode", a.mode, cfg.mode)?;
    cfg.lattice = s.value("lattice", a.lattice, cfg.lattice)?;
    cfg.betas = s.value("betas", a.betas.clone(), NumList(cfg.betas.clone()))?.0;
    cfg.tau = s.value("tau", a.tau.tau, cfg.tau)?;
    cfg.tau1 = s.value("tau1", a.tau.tau1, cfg.tau1)?;
    cfg.tau2 = s.value("tau2", a.tau.tau2, cfg.tau2)?;
    cfg.single = single_rule(&a.single, s, cfg.single.constant)?;
    s.finish()?;
    let designs = studies::run_study1(&cfg)?;
    let mut all = Vec::new();
    for d in &designs {
        let mut h = run.header();
        h.derived.push(("design".into(), format!("{}x{}", d.n, d.m)));
        h.derived.push(("k_max".into(), d.k_max.to_string()));
        run.write(&format!("study1_n{}_m{}.csv", d.n, d.m), &formats::reports_csv(&h, &d.reports))?;
        for r in &d.reports {
            if let Some(sm) = r.summary() {
                say(stdout, format_args!("n={} m={} {}: median MISE {}", d.n, d.m, r.label, short(sm.median)))?;
            }
        }
        all.extend(d.reports.iter().cloned());
    }
    let summary = formats::summary_csv(&run.header(), &all);
    run.write("study1_summary.csv", &summary)?;
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

fn study2(a: Study2Args, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("study2", &a.common)?;
    let s = &mut run.settings;
    let alpha = s.value("alpha", a.alpha, 0.5)?;
    let alpha_tilde = s.value("alpha_tilde", a.alpha_tilde, 0.5)?;
    let mut cfg = Study2Config::new(alpha, alpha_tilde);
    cfg.budget = s.value("budget", a.budget, cfg.budget)?;
    cfg.per_decade = s.value("per_decade", a.per_decade, cfg.per_decade)?;
    cfg.replicates = s.value("replicates", a.replicates, cfg.replicates)?;
    cfg.seed = s.value("seed", a.seed, cfg.seed)?;
    cfg.tau = s.value("tau", a.tau.tau, cfg.tau)?;
    cfg.tau1 = s.value("tau1", a.tau.tau1, cfg.tau1)?;
    cfg.tau2 = s.value("tau2", a.tau.tau2, cfg.tau2)?;
    s.finish()?;
    if cfg.per_decade == 0 {
        return Err(AppError::config("per_decade must be positive"));
    }
    let res = studies::run_study2(&cfg)?;
    let all: Vec<_> = res.cells.iter().flat_map(|c| c.reports.iter().cloned()).collect();
    let summary = formats::summary_csv(&run.header(), &all);
    run.write("study2_summary.csv", &summary)?;
    for (name, surface) in [("g", &res.surface_g), ("f", &res.surface_f)] {
        if let Some((n, m, v)) = res.best_cell(surface) {
            run.derive(&format!("best_{name}"), format!("{n}x{m}"));
            say(stdout, format_args!("best design for {name}: n={n} m={m} (mean log MISE {})", short(v)))?;
        }
        let title = format!("Mean log MISE for {name} (alpha={alpha}, alpha_tilde={alpha_tilde})");
        heatmap_outputs(&mut run, name, surface, &title)?;
    }
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

fn load_table(run: &mut Run, path: Option<PathBuf>) -> Result<(PathBuf, MultiSubjectTable)> {
    let path = run
        .settings
        .optional("data", path.map(|p| p.display().to_string()))?
        .map(PathBuf::from)
        .ok_or_else(|| AppError::config("--data is required"))?;
    let table = MultiSubjectTable::load(&path)?;
    match table.rescale() {
        Some(r) => run.derive("time_rescale", format!("[{}, {}] -> [0, 1]", r.t_min, r.t_max)),
        None => run.derive("time_rescale", "none"),
    }
    Ok((path, table))
}

fn fit(a: FitArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("fit", &a.common)?;
    let (_, table) = load_table(&mut run, a.data.clone())?;
    let s = &mut run.settings;
    let estimator = s.value("estimator", a.estimator.clone(), "adaptive-f".to_string())?;
    let subject = s.value("subject", a.subject.clone(), table.subjects()[0].clone())?;
    let j = table
        .subjects()
        .iter()
        .position(|id| *id == subject)
        .ok_or_else(|| AppError::config(format!("no subject `{subject}` in the table")))?;
    let data = table.to_dataset()?;
    let (n, m) = (data.n(), data.m());
    let default_width = population_bound(n, m).max(subject_bound(n));
    let tau = s.value("tau", a.tau.tau, DEFAULT_TAU)?;
    let tau1 = s.value("tau1", a.tau.tau1, DEFAULT_TAU1)?;
    let tau2 = s.value("tau2", a.tau.tau2, DEFAULT_TAU2)?;
    let single = single_rule(&a.single, s, SingleSubjectRule::default().constant)?;
    let beta = s.value("beta", a.beta, 0.5)?;
    let beta_tilde = s.value("beta_tilde", a.beta_tilde, 0.5)?;
    let alpha = s.value("alpha", a.alpha, 0.5)?;
    let alpha_tilde = s.value("alpha_tilde", a.alpha_tilde, 0.5)?;
    let noise_sd = s.value("noise_sd", a.noise_sd, 1.0)?;
    let spec_of = |kind: &str| -> Result<EstimatorSpec> {
        let posterior = || -> Result<PosteriorSpec> {
            let prior = Spectrum::with_decay(alpha).map_err(|e| AppError::config(e.to_string()))?;
            let dev = Spectrum::with_decay(alpha_tilde).map_err(|e| AppError::config(e.to_string()))?;
            PosteriorSpec::new(prior, dev).with_noise_sd(noise_sd).map_err(|e| AppError::config(e.to_string()))
        };
        Ok(match kind {
            "adaptive-g" => EstimatorSpec::AdaptiveG { tau },
            "fixed-g" => EstimatorSpec::FixedG { beta },
            "posterior-g" => EstimatorSpec::PosteriorG { spec: posterior()? },
            "adaptive-f" => EstimatorSpec::AdaptiveF { tau1, tau2 },
            "fixed-f" => EstimatorSpec::FixedF { beta, beta_tilde },
            "single" => EstimatorSpec::SingleSubjectF { rule: single },
            "posterior-f" => EstimatorSpec::PosteriorF { spec: posterior()? },
            other => return Err(AppError::config(format!("unknown estimator `{other}`"))),
        })
    };
    let spec = spec_of(&estimator)?;
    let width = s.value("width", a.width, default_width.max(spec.reach(n, m)).max(1))?;
    s.finish()?;
    let panel = empirical_coefficients(&data, width, Normalization::Mean)?;
    if panel.alias_warning() {
        run.derive("alias_warning", "coefficient count exceeds half the points per subject");
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.swap(0, j);
    let panel = panel.permuted(&order)?;
    let series = spec.fit(&panel)?;
    let selection: Option<ThresholdSelection> = match spec {
        EstimatorSpec::AdaptiveG { tau } => Some(lepskii_threshold_g(&panel, tau)?),
        EstimatorSpec::AdaptiveF { tau1, tau2 } => Some(lepskii_thresholds_f(&panel, 0, tau1, tau2)?),
        EstimatorSpec::SingleSubjectF { rule } => {
            let k = single_subject_threshold(panel.row(0), n, m, rule)?;
            let b = subject_bound(n);
            Some(ThresholdSelection {
                kind: ThresholdKind::FDouble,
                k1: k,
                k2: k,
                tau1: rule.constant,
                tau2: rule.constant,
                bound_inner: b,
                bound_outer: b,
            })
        }
        _ => None,
    };
    let h = run.header();
    run.write("series.csv", &formats::series_csv(&h, &series))?;
    if let Some(sel) = selection {
        say(stdout, format_args!("k1={} k2={}", sel.k1, sel.k2))?;
        run.write("threshold.csv", &formats::threshold_csv(&h, &sel))?;
    }
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

fn compare(a: CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("compare", &a.common)?;
    let (_, table) = load_table(&mut run, a.data.clone())?;
    let s = &mut run.settings;
    let split = s.value("split", a.split, SplitSpec::Arithmetic { a: 3, b: -1, count: 50 })?;
    let tau1 = s.value("tau1", a.tau1, DEFAULT_TAU1)?;
    let tau2 = s.value("tau2", a.tau2, DEFAULT_TAU2)?;
    let single = single_rule(&a.single, s, SingleSubjectRule::default().constant)?;
    let width = s.optional("width", a.width)?;
    s.finish()?;
    let settings = CompareSettings { tau1, tau2, single, width };
    let rows = compare_estimators(&table, &split, &settings)?;
    let h = run.header();
    run.write("rmspe.csv", &formats::rmspe_csv(&h, &rows))?;
    let summary = formats::compare_summary_csv(&h, &rows);
    run.write("compare_summary.csv", &summary)?;
    let wins = rows.iter().filter(|r| r.double < r.single).count();
    say(stdout, format_args!("two-threshold wins on {wins} of {} subjects", rows.len()))?;
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

fn oracle(a: OracleArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut run = Run::start("oracle-check", &a.common)?;
    let s = &mut run.settings;
    let cfg = OracleCheck {
        n: s.value("n", a.n, 100)?,
        m: s.value("m", a.m, 100)?,
        alpha: s.value("alpha", a.alpha, 0.5)?,
        alpha_tilde: s.value("alpha_tilde", a.alpha_tilde, 0.5)?,
        tau1: s.value("tau1", a.tau1, DEFAULT_TAU1)?,
        tau2: s.value("tau2", a.tau2, DEFAULT_TAU2)?,
        replicates: s.value("replicates", a.replicates, 20)?,
        seed: s.value("seed", a.seed, 0)?,
    };
    s.finish()?;
    if cfg.replicates == 0 {
        return Err(AppError::config("at least one replicate is required"));
    }
    let rows = studies::oracle_check(&cfg)?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.adaptive_mise / r.oracle_mise).collect();
    let med = twolevel_core::risk::median(&ratios).unwrap_or(f64::NAN);
    run.derive("median_mise_ratio", med);
    say(stdout, format_args!("median adaptive/oracle MISE ratio: {}", short(med)))?;
    let body = rows.iter().map(|r| {
        [
            r.replicate.to_string(),
            r.oracle_k1.to_string(),
            r.oracle_k2.to_string(),
            r.adaptive_k1.to_string(),
            r.adaptive_k2.to_string(),
            r.oracle_mise.to_string(),
            r.adaptive_mise.to_string(),
        ]
    });
    let text = formats::plain_csv(
        &run.header(),
        &["replicate", "oracle_k1", "oracle_k2", "adaptive_k1", "adaptive_k2", "oracle_mise", "adaptive_mise"],
        body,
    );
    run.write("oracle.csv", &text)?;
    let manifest = run.finish()?;
    say(stdout, format_args!("wrote {}", manifest.display()))
}

/// Output directory a command would use given `--out` and the environment.
pub fn resolve_output(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}
