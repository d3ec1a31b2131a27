//! Command-line front end: `estimate`, `simulate` and `report`.
//!
//! The argument structs double as run configurations, so the commands can be
//! driven from tests and other programs without going through a process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dml::{EstimateResult, ThetaAggregation};
use crate::error::{Error, Result};
use crate::estimators::{
    lag_name, mean_name, parse_estimator_list, ConfiguredEstimator, Estimator, EstimatorSettings,
    ModelColumns, PanelEstimator,
};
use crate::forest::{ForestParams, SplitCriterion};
use crate::montecarlo::{self, DgpParams, LagSemantics, SimulationReport};
use crate::panel::{ColumnSchema, PanelDataset};

pub const RESULTS_FILE: &str = "estimation_results.csv";
pub const SUMMARY_FILE: &str = "simulation_summary.csv";
pub const HISTOGRAM_FILE: &str = "simulation_histogram.csv";
pub const HISTOGRAM_SVG_FILE: &str = "simulation_histogram.svg";
pub const DRAWS_FILE: &str = "simulation_draws.csv";
pub const PANEL_FILE: &str = "simulated_panel.csv";

#[derive(Debug, Parser)]
#[command(
    name = "pcredml",
    version,
    about = "Panel treatment-effect estimation and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the treatment effect on a panel CSV with every selected estimator.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo comparison and write summary and histogram files.
    Simulate(SimulateArgs),
    /// Print a summary or results CSV as a table and check its consistency.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 100 replications, 50 trees of depth 5 with sqrt(p) split features.
    Desk,
    /// 1000 replications, 200 trees of depth 15 with minimum split size 5.
    Paper,
}

impl Preset {
    pub fn forest(self) -> ForestParams {
        match self {
            Preset::Desk => ForestParams::compact(),
            Preset::Paper => ForestParams::large(),
        }
    }

    pub fn n_sims(self) -> usize {
        match self {
            Preset::Desk => 100,
            Preset::Paper => 1000,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DgpVariant {
    /// d = 0.2 v + 0.1 alpha_i + 0.1 alpha_it
    Code,
    /// d = 0.5 v + 0.3 alpha_i
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    /// Size-weighted child MSE.
    Weighted,
    /// Unweighted sum of the two child MSEs.
    ChildSum,
}

impl From<CriterionArg> for SplitCriterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Weighted => SplitCriterion::WeightedMse,
            CriterionArg::ChildSum => SplitCriterion::ChildMseSum,
        }
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Args)]
pub struct SchemaArgs {
    #[arg(long, default_value = "country")]
    pub entity_col: String,
    #[arg(long, default_value = "year")]
    pub time_col: String,
    #[arg(long, default_value = "gdp_growth")]
    pub outcome: String,
    #[arg(long, default_value = "trust")]
    pub treatment: String,
    /// Comma-separated control columns.
    #[arg(long, default_value = "capital,labor,technology")]
    pub controls: String,
    /// Comma-separated proxy columns (may be empty).
    #[arg(long, default_value = "gov_effectiveness")]
    pub proxies: String,
}

impl Default for SchemaArgs {
    fn default() -> Self {
        let s = ColumnSchema::default();
        Self {
            entity_col: s.entity,
            time_col: s.time,
            outcome: s.outcome,
            treatment: s.treatment,
            controls: s.controls.join(","),
            proxies: s.proxies.join(","),
        }
    }
}

impl SchemaArgs {
    pub fn schema(&self) -> Result<ColumnSchema> {
        let schema = ColumnSchema {
            entity: self.entity_col.clone(),
            time: self.time_col.clone(),
            outcome: self.outcome.clone(),
            treatment: self.treatment.clone(),
            controls: split_list(&self.controls),
            proxies: split_list(&self.proxies),
        };
        schema.validate()?;
        Ok(schema)
    }
}

#[derive(Debug, Clone, Args)]
pub struct LearnerArgs {
    #[arg(long, default_value_t = 5)]
    pub n_folds: usize,
    /// Cross-fitting repetitions; the median coefficient is reported.
    #[arg(long, default_value_t = 1)]
    pub n_reps: usize,
    /// Average per-fold coefficients instead of pooling all residuals.
    #[arg(long)]
    pub fold_average: bool,
    /// Override the number of trees of the preset's forest.
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Override the maximum depth of the preset's forest.
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, value_enum, default_value_t = CriterionArg::Weighted)]
    pub split_criterion: CriterionArg,
    /// Bootstrap refits for the System GMM standard error.
    #[arg(long, default_value_t = 10)]
    pub n_boot: usize,
}

impl Default for LearnerArgs {
    fn default() -> Self {
        Self {
            n_folds: 5,
            n_reps: 1,
            fold_average: false,
            n_trees: None,
            max_depth: None,
            split_criterion: CriterionArg::Weighted,
            n_boot: 10,
        }
    }
}

impl LearnerArgs {
    fn settings(&self, preset: Preset, columns: ModelColumns) -> Result<EstimatorSettings> {
        let mut settings = EstimatorSettings {
            columns,
            ..EstimatorSettings::default()
        };
        let mut forest = preset.forest();
        forest.n_trees = self.n_trees.unwrap_or(forest.n_trees);
        forest.max_depth = self.max_depth.unwrap_or(forest.max_depth);
        forest.criterion = self.split_criterion.into();
        forest.validate()?;
        settings.dml.learner = forest;
        settings.dml.n_folds = self.n_folds;
        settings.dml.n_reps = self.n_reps;
        settings.dml.aggregation = if self.fold_average {
            ThetaAggregation::FoldAverage
        } else {
            ThetaAggregation::Pooled
        };
        settings.dml.validate()?;
        settings.gmm.n_boot = self.n_boot;
        Ok(settings)
    }

    fn describe(&self, preset: Preset) -> String {
        let f = preset.forest();
        format!(
            "folds={} reps={} aggregation={} trees={} depth={} criterion={:?} gmm_boot={}",
            self.n_folds,
            self.n_reps,
            if self.fold_average {
                "fold-average"
            } else {
                "pooled"
            },
            self.n_trees.unwrap_or(f.n_trees),
            self.max_depth.unwrap_or(f.max_depth),
            self.split_criterion,
            self.n_boot
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated estimator names, or `all`.
    #[arg(long, default_value = "all")]
    pub estimators: String,
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    pub preset: Preset,
    /// Keep only entities with at least this many observed values of
    /// `--min-years-column`.
    #[arg(long)]
    pub min_years: Option<usize>,
    #[arg(long, default_value = "technology")]
    pub min_years_column: String,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

impl EstimateArgs {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output_dir: output_dir.into(),
            seed: 42,
            estimators: "all".into(),
            preset: Preset::Paper,
            min_years: None,
            min_years_column: "technology".into(),
            schema: SchemaArgs::default(),
            learner: LearnerArgs::default(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "all")]
    pub estimators: String,
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    /// Number of replications; defaults to the preset's count.
    #[arg(long)]
    pub n_sims: Option<usize>,
    #[arg(long, value_enum, default_value_t = DgpVariant::Code)]
    pub dgp_variant: DgpVariant,
    /// Build lags within each entity instead of shifting the stacked arrays.
    #[arg(long)]
    pub within_entity_lags: bool,
    #[arg(long)]
    pub true_theta: Option<f64>,
    #[arg(long)]
    pub n_entities: Option<usize>,
    #[arg(long)]
    pub n_periods: Option<usize>,
    /// Also write an SVG rendering of the histograms.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

impl SimulateArgs {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            output_dir: output_dir.into(),
            seed: 42,
            estimators: "all".into(),
            preset: Preset::Desk,
            n_sims: None,
            dgp_variant: DgpVariant::Code,
            within_entity_lags: false,
            true_theta: None,
            n_entities: None,
            n_periods: None,
            svg: false,
            learner: LearnerArgs::default(),
        }
    }

    pub fn dgp(&self) -> DgpParams {
        let mut p = match self.dgp_variant {
            DgpVariant::Code => DgpParams::default(),
            DgpVariant::Prose => DgpParams::prose_treatment(),
        };
        p.seed = self.seed;
        if self.within_entity_lags {
            p.lag_semantics = LagSemantics::WithinEntity;
        }
        p.true_theta = self.true_theta.unwrap_or(p.true_theta);
        p.n_entities = self.n_entities.unwrap_or(p.n_entities);
        p.n_periods = self.n_periods.unwrap_or(p.n_periods);
        p
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Summary or results CSV written by `simulate` or `estimate`.
    #[arg(long)]
    pub input: PathBuf,
}

/// Result of one estimator in an `estimate` run.
#[derive(Debug, Clone)]
pub struct EstimateRow {
    pub estimator: Estimator,
    pub outcome: std::result::Result<EstimateResult, String>,
}

#[derive(Debug, Clone)]
pub struct EstimateRun {
    pub rows: Vec<EstimateRow>,
    pub results_path: PathBuf,
    pub n_obs: usize,
}

/// Loads, imputes and augments a panel with the lag and entity-mean columns
/// the estimators expect. Derived columns already present in the file are
/// kept as they are.
pub fn prepare_panel(
    path: &Path,
    schema: &ColumnSchema,
    min_years: Option<(usize, &str)>,
) -> Result<PanelDataset> {
    let mut ds = PanelDataset::load_csv(path, schema)?;
    if let Some((min_obs, column)) = min_years {
        ds = ds.filter_min_observations(column, min_obs)?;
        if ds.is_empty() {
            return Err(Error::Data(format!(
                "no entity has {min_obs} observed values of `{column}`"
            )));
        }
    }
    let present_proxies: Vec<&String> =
        schema.proxies.iter().filter(|p| ds.has_column(p)).collect();
    let raw: Vec<&str> = [&schema.outcome, &schema.treatment]
        .into_iter()
        .chain(&schema.controls)
        .chain(present_proxies.iter().copied())
        .map(String::as_str)
        .collect();
    ds = ds.impute(&raw)?;

    let mut lags = Vec::new();
    for base in std::iter::once(&schema.outcome).chain(present_proxies.iter().copied()) {
        let name = lag_name(base);
        if !ds.has_column(&name) {
            ds = ds.add_lag(base, 1, &name)?;
        }
        lags.push(name);
    }
    for base in [&schema.treatment, &schema.outcome]
        .into_iter()
        .chain(present_proxies.iter().copied())
    {
        let name = mean_name(base);
        if !ds.has_column(&name) {
            ds = ds.add_entity_mean(base, &name)?;
        }
    }
    for proxy in &schema.proxies {
        let lag = lag_name(proxy);
        if !lags.contains(&lag) && ds.has_column(&lag) {
            lags.push(lag);
        }
    }
    let lag_refs: Vec<&str> = lags.iter().map(String::as_str).collect();
    ds.drop_missing_rows(&lag_refs)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.filter(|v| v.is_finite())
        .map(|v| {
            let r = montecarlo::round4(v);
            if r == 0.0 { 0.0 } else { r }.to_string()
        })
        .unwrap_or_default()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn estimator_names(list: &[Estimator]) -> String {
    list.iter().map(|e| e.label()).collect::<Vec<_>>().join(";")
}

/// Runs the selected estimators on a panel CSV and writes
/// `estimation_results.csv`. Individual estimator failures leave empty cells
/// in their row instead of aborting the run.
pub fn cmd_estimate(args: &EstimateArgs) -> Result<EstimateRun> {
    let schema = args.schema.schema()?;
    let selected = parse_estimator_list(&args.estimators)?;
    let settings = args
        .learner
        .settings(args.preset, ModelColumns::from(&schema))?;
    let ds = prepare_panel(
        &args.input,
        &schema,
        args.min_years.map(|m| (m, args.min_years_column.as_str())),
    )?;
    if ds.is_empty() {
        return Err(Error::Data(
            "no complete rows remain after building lags".into(),
        ));
    }

    let rows: Vec<EstimateRow> = selected
        .iter()
        .map(|&kind| {
            let est = ConfiguredEstimator {
                kind,
                settings: settings.clone(),
            };
            EstimateRow {
                estimator: kind,
                outcome: est.estimate(&ds, args.seed).map_err(|e| e.to_string()),
            }
        })
        .collect();

    ensure_dir(&args.output_dir)?;
    let path = args.output_dir.join(RESULTS_FILE);
    let mut text = format!(
        "# seed={} preset={} estimators={} {}\n",
        args.seed,
        args.preset.name(),
        estimator_names(&selected),
        args.learner.describe(args.preset)
    );
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e| Error::csv(&path, e);
    writer
        .write_record(["Estimator", "Coefficient", "Standard Error", "p-value"])
        .map_err(csv_err)?;
    for row in &rows {
        let (coef, se, p) = match &row.outcome {
            Ok(r) => (Some(r.coef), r.se, r.p_value),
            Err(_) => (None, None, None),
        };
        writer
            .write_record([
                row.estimator.label().to_string(),
                fmt_cell(coef),
                fmt_cell(se),
                fmt_cell(p),
            ])
            .map_err(csv_err)?;
    }
    let body = writer
        .into_inner()
        .map_err(|e| Error::io(&path, e.into_error()))?;
    text.push_str(&String::from_utf8_lossy(&body));
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(EstimateRun {
        rows,
        results_path: path,
        n_obs: ds.n_rows(),
    })
}

#[derive(Debug, Clone)]
pub struct SimulateRun {
    pub report: SimulationReport,
    pub summary_path: PathBuf,
    pub histogram_path: PathBuf,
}

/// Runs the Monte Carlo study and writes the summary, histogram, draws and
/// first simulated panel into the output directory.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateRun> {
    let selected = parse_estimator_list(&args.estimators)?;
    let dgp = args.dgp();
    dgp.validate()?;
    let n_sims = args.n_sims.unwrap_or(args.preset.n_sims());
    let settings = args
        .learner
        .settings(args.preset, ModelColumns::default())?;
    let estimators: Vec<ConfiguredEstimator> = selected
        .iter()
        .map(|&kind| ConfiguredEstimator {
            kind,
            settings: settings.clone(),
        })
        .collect();
    let refs: Vec<&dyn PanelEstimator> = estimators
        .iter()
        .map(|e| e as &dyn PanelEstimator)
        .collect();
    let report = montecarlo::run_monte_carlo(&dgp, n_sims, &refs)?;

    ensure_dir(&args.output_dir)?;
    let provenance = vec![
        format!(
            "seed={} preset={} n_sims={} dgp_variant={:?} lags={:?} true_theta={}",
            args.seed,
            args.preset.name(),
            n_sims,
            args.dgp_variant,
            dgp.lag_semantics,
            dgp.true_theta
        ),
        format!("estimators={}", estimator_names(&selected)),
        args.learner.describe(args.preset),
    ];
    let summary_path = args.output_dir.join(SUMMARY_FILE);
    montecarlo::write_summary_csv(&report, &summary_path, &provenance)?;
    let histogram_path = args.output_dir.join(HISTOGRAM_FILE);
    if report.estimators.iter().any(|e| !e.draws.is_empty()) {
        montecarlo::export_histogram(&report, &histogram_path)?;
        if args.svg {
            montecarlo::export_histogram_svg(&report, &args.output_dir.join(HISTOGRAM_SVG_FILE))?;
        }
    }
    montecarlo::write_draws_csv(&report, &args.output_dir.join(DRAWS_FILE))?;
    montecarlo::simulate_panel(&dgp, 0)?.write_csv(args.output_dir.join(PANEL_FILE))?;
    Ok(SimulateRun {
        report,
        summary_path,
        histogram_path,
    })
}

/// Text table and consistency findings for a CSV written by this tool.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutcome {
    pub table: String,
    pub violations: Vec<String>,
}

/// Largest discrepancy between a rounded MSE and the rounded bias and
/// variance that rounding to four decimals alone can produce.
pub fn identity_tolerance(bias: f64) -> f64 {
    let half = 5e-5;
    half + half + 2.0 * bias.abs() * half + half * half + 1e-12
}

fn parse_number(cell: &str, what: &str, row: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Data(format!("row {row}: {what} `{cell}` is not a number")))
}

/// Renders a summary (`Estimator,Bias,Variance,MSE`) or results
/// (`Estimator,Coefficient,Standard Error,p-value`) CSV and checks it: MSE
/// must equal bias squared plus variance up to rounding, p-values must lie in
/// `[0, 1]` and standard errors must be non-negative.
pub fn cmd_report(args: &ReportArgs) -> Result<ReportOutcome> {
    let path = &args.input;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(path, e))?;
    let is_summary = header == ["Estimator", "Bias", "Variance", "MSE"];
    let is_results = header == ["Estimator", "Coefficient", "Standard Error", "p-value"];
    if !is_summary && !is_results {
        return Err(Error::Schema(format!(
            "{}: unrecognized header {:?}",
            path.display(),
            header
        )));
    }
    if records.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }

    let mut violations = Vec::new();
    let mut cells: Vec<Vec<String>> = vec![header.clone()];
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        if rec.len() != 4 {
            return Err(Error::Data(format!(
                "row {row}: expected 4 fields, found {}",
                rec.len()
            )));
        }
        let label = rec[0].to_string();
        let a = parse_number(&rec[1], &header[1], row)?;
        let b = parse_number(&rec[2], &header[2], row)?;
        let c = parse_number(&rec[3], &header[3], row)?;
        if is_summary {
            if let (Some(bias), Some(var), Some(mse)) = (a, b, c) {
                let gap = (mse - (bias * bias + var)).abs();
                if gap > identity_tolerance(bias) {
                    violations.push(format!(
                        "{label}: MSE {mse} differs from bias^2 + variance {} by {gap:.6}",
                        bias * bias + var
                    ));
                }
                if var < 0.0 {
                    violations.push(format!("{label}: negative variance {var}"));
                }
            }
        } else {
            if let Some(p) = c.filter(|p| !(0.0..=1.0).contains(p)) {
                violations.push(format!("{label}: p-value {p} outside [0, 1]"));
            }
            if let Some(se) = b.filter(|s| *s < 0.0) {
                violations.push(format!("{label}: negative standard error {se}"));
            }
        }
        let show = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
        cells.push(vec![label, show(a), show(b), show(c)]);
    }

    let widths: Vec<usize> = (0..4)
        .map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut table = String::new();
    for (i, row) in cells.iter().enumerate() {
        let _ = write!(table, "{:<w$}", row[0], w = widths[0]);
        for j in 1..4 {
            let _ = write!(table, "  {:>w$}", row[j], w = widths[j]);
        }
        table.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 6;
            table.push_str(&"-".repeat(total));
            table.push('\n');
        }
    }
    Ok(ReportOutcome { table, violations })
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Estimate(args) => match cmd_estimate(&args) {
            Ok(run) => {
                for row in &run.rows {
                    match &row.outcome {
                        Ok(r) => println!(
                            "{:<14} coef {:>10.4}  se {:>10}  p {:>8}",
                            row.estimator.label(),
                            r.coef,
                            r.se.map(|v| format!("{v:.4}"))
                                .unwrap_or_else(|| "n/a".into()),
                            r.p_value
                                .map(|v| format!("{v:.4}"))
                                .unwrap_or_else(|| "n/a".into())
                        ),
                        Err(msg) => eprintln!("{} failed: {msg}", row.estimator.label()),
                    }
                }
                println!(
                    "{} observations; results written to {}",
                    run.n_obs,
                    run.results_path.display()
                );
                0
            }
            Err(e) => fail(&e),
        },
        Command::Simulate(args) => match cmd_simulate(&args) {
            Ok(run) => {
                for e in &run.report.estimators {
                    if e.failures > 0 {
                        eprintln!(
                            "{}: {} of {} replications failed (first: {})",
                            e.label,
                            e.failures,
                            run.report.n_simulations,
                            e.first_error.as_deref().unwrap_or("unknown")
                        );
                    }
                }
                println!(
                    "{:<14} {:>10} {:>10} {:>10}",
                    "Estimator", "Bias", "Variance", "MSE"
                );
                for e in &run.report.estimators {
                    match e.summary {
                        Some(s) => println!(
                            "{:<14} {:>10.4} {:>10.4} {:>10.4}",
                            e.label, s.bias, s.variance, s.mse
                        ),
                        None => {
                            println!("{:<14} {:>10} {:>10} {:>10}", e.label, "n/a", "n/a", "n/a")
                        }
                    }
                }
                println!("summary written to {}", run.summary_path.display());
                0
            }
            Err(e) => fail(&e),
        },
        Command::Report(args) => match cmd_report(&args) {
            Ok(out) => {
                print!("{}", out.table);
                for v in &out.violations {
                    eprintln!("violation: {v}");
                }
                i32::from(!out.violations.is_empty())
            }
            Err(e) => fail(&e),
        },
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    2
}
