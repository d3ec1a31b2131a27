//! Simulation study comparing the estimators on a confounded nonlinear panel.
//!
//! Each replication draws a fresh panel from [`simulate_panel`], runs every
//! selected estimator, and records the treatment coefficient. Summaries report
//! bias, population variance and MSE of the coefficient draws against the
//! true effect.
//!
//! # Data-generating process
//!
//! Rows are laid out entity-major (`row = entity * T + period`). With
//! standard normal draws taken in the order `alpha_i`, `x` (3 per row),
//! `proxy`, confounder noise, treatment noise and then outcome noise period by
//! period:
//!
//! ```text
//! proxy_lag  = shift(proxy, T)                 (first entity block = 0)
//! alpha_it   = carry * shift(alpha_i, 1) + w_p * proxy_lag + s_c * noise
//!                                              (first entity block = 0)
//! d          = s_d * noise + a_d * alpha_i + b_d * alpha_it
//! y_t        = rho * shift(y, T)_t + theta * d + w_x * sum(x) + q * d^2
//!              + a_y * alpha_i + b_y * alpha_it + s_y * noise,   t >= 1
//! ```
//!
//! `shift(v, k)` moves the whole stacked vector down by `k` rows with
//! wrap-around, so under [`LagSemantics::StackedShift`] a "lag" of one entity
//! is read from the previous entity's block. Entity means of treatment,
//! outcome and proxy lag are taken over all periods, then period 0 is
//! dropped. [`LagSemantics::WithinEntity`] replaces every shift with a true
//! within-entity lag.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::PanelEstimator;
use crate::numeric::{self, substream_seed};
use crate::panel::PanelDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagSemantics {
    /// Lags and the confounder carry-over are whole-array shifts across the
    /// stacked panel.
    #[default]
    StackedShift,
    /// Every lag stays inside its own entity.
    WithinEntity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpParams {
    pub n_entities: usize,
    pub n_periods: usize,
    pub true_theta: f64,
    /// Coefficient on the lagged outcome.
    pub ar_coef: f64,
    /// Coefficient on the squared treatment.
    pub quad_coef: f64,
    /// Coefficient on the sum of the three controls.
    pub control_weight: f64,
    pub alpha_in_outcome: f64,
    pub alpha_it_in_outcome: f64,
    pub alpha_in_treatment: f64,
    pub alpha_it_in_treatment: f64,
    /// Weight of the (shifted) entity effect in the time-varying confounder.
    pub confounder_carry: f64,
    /// Weight of the lagged proxy in the time-varying confounder.
    pub proxy_weight: f64,
    pub treatment_noise: f64,
    pub confounder_noise: f64,
    pub outcome_noise: f64,
    pub lag_semantics: LagSemantics,
    pub seed: u64,
}

impl Default for DgpParams {
    fn default() -> Self {
        Self {
            n_entities: 89,
            n_periods: 11,
            true_theta: 0.1,
            ar_coef: 0.3,
            quad_coef: 0.05,
            control_weight: 1.0,
            alpha_in_outcome: 1.0,
            alpha_it_in_outcome: 1.0,
            alpha_in_treatment: 0.1,
            alpha_it_in_treatment: 0.1,
            confounder_carry: 0.5,
            proxy_weight: 0.3,
            treatment_noise: 0.2,
            confounder_noise: 0.2,
            outcome_noise: 0.5,
            lag_semantics: LagSemantics::StackedShift,
            seed: 42,
        }
    }
}

impl DgpParams {
    /// Treatment drawn as `0.5 * noise + 0.3 * alpha_i`, with no
    /// time-varying confounder in the treatment.
    pub fn prose_treatment() -> Self {
        Self {
            treatment_noise: 0.5,
            alpha_in_treatment: 0.3,
            alpha_it_in_treatment: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_entities == 0 {
            return Err(Error::Config("n_entities must be at least 1".into()));
        }
        if self.n_periods < 2 {
            return Err(Error::Config("n_periods must be at least 2".into()));
        }
        let coefficients = [
            self.true_theta,
            self.ar_coef,
            self.quad_coef,
            self.control_weight,
            self.alpha_in_outcome,
            self.alpha_it_in_outcome,
            self.alpha_in_treatment,
            self.alpha_it_in_treatment,
            self.confounder_carry,
            self.proxy_weight,
        ];
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("DGP coefficients must be finite".into()));
        }
        for (name, s) in [
            ("treatment_noise", self.treatment_noise),
            ("confounder_noise", self.confounder_noise),
            ("outcome_noise", self.outcome_noise),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be a finite non-negative scale"
                )));
            }
        }
        Ok(())
    }
}

/// Seed of replication `index` under master seed `master`.
pub fn replication_seed(master: u64, index: usize) -> u64 {
    substream_seed(master, index as u64)
}

/// Draws one simulated panel of `n_entities * (n_periods - 1)` rows.
pub fn simulate_panel(p: &DgpParams, replication_index: usize) -> Result<PanelDataset> {
    p.validate()?;
    let (n_ent, t_len) = (p.n_entities, p.n_periods);
    let n = n_ent * t_len;
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(
        replication_seed(p.seed, replication_index),
        0,
    ));
    let mut normals = |count: usize| -> Vec<f64> {
        (0..count)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    };

    let alpha_entity = normals(n_ent);
    let alpha_i: Vec<f64> = (0..n).map(|r| alpha_entity[r / t_len]).collect();
    let x = normals(3 * n);
    let proxy = normals(n);
    let confounder_noise = normals(n);
    let treatment_noise = normals(n);

    let stacked = p.lag_semantics == LagSemantics::StackedShift;
    // Value `k` rows back in the stacked layout (wrapping), or `k` periods back
    // within the entity (zero before the first period).
    let lagged = |v: &[f64], r: usize, k_rows: usize, k_periods: usize| -> f64 {
        if stacked {
            v[(r + n - k_rows % n) % n]
        } else if r % t_len >= k_periods {
            v[r - k_periods]
        } else {
            0.0
        }
    };

    let proxy_lag: Vec<f64> = (0..n)
        .map(|r| {
            if stacked && r < t_len {
                0.0
            } else {
                lagged(&proxy, r, t_len, 1)
            }
        })
        .collect();
    let alpha_it: Vec<f64> = (0..n)
        .map(|r| {
            if stacked && r < t_len {
                return 0.0;
            }
            let carried = if stacked {
                alpha_i[(r + n - 1) % n]
            } else {
                alpha_i[r]
            };
            p.confounder_carry * carried
                + p.proxy_weight * proxy_lag[r]
                + p.confounder_noise * confounder_noise[r]
        })
        .collect();
    let d: Vec<f64> = (0..n)
        .map(|r| {
            p.treatment_noise * treatment_noise[r]
                + p.alpha_in_treatment * alpha_i[r]
                + p.alpha_it_in_treatment * alpha_it[r]
        })
        .collect();
    let d_lag: Vec<f64> = (0..n)
        .map(|r| {
            if stacked && r < t_len {
                0.0
            } else {
                lagged(&d, r, t_len, 1)
            }
        })
        .collect();

    let mut y = vec![0.0; n];
    for t in 1..t_len {
        let noise = normals(n_ent);
        // All right-hand sides of period t are evaluated before any period-t
        // value is written.
        let previous: Vec<f64> = (0..n_ent)
            .map(|e| lagged(&y, e * t_len + t, t_len, 1))
            .collect();
        for e in 0..n_ent {
            let r = e * t_len + t;
            let sum_x = x[3 * r] + x[3 * r + 1] + x[3 * r + 2];
            y[r] = p.ar_coef * previous[e]
                + p.true_theta * d[r]
                + p.control_weight * sum_x
                + p.quad_coef * d[r] * d[r]
                + p.alpha_in_outcome * alpha_i[r]
                + p.alpha_it_in_outcome * alpha_it[r]
                + p.outcome_noise * noise[e];
        }
    }
    let y_lag: Vec<f64> = (0..n)
        .map(|r| {
            if stacked && r < t_len {
                0.0
            } else {
                lagged(&y, r, t_len, 1)
            }
        })
        .collect();

    let entity_mean = |v: &[f64]| -> Vec<f64> {
        let means: Vec<f64> = v.chunks(t_len).map(numeric::mean).collect();
        (0..n).map(|r| means[r / t_len]).collect()
    };
    let trust_mean = entity_mean(&d);
    let growth_mean = entity_mean(&y);
    let proxy_mean = entity_mean(&proxy_lag);

    let keep: Vec<usize> = (0..n).filter(|r| r % t_len != 0).collect();
    let pick = |v: &[f64]| -> Vec<f64> { keep.iter().map(|&r| v[r]).collect() };
    let width = (n_ent.saturating_sub(1)).to_string().len().max(3);
    let entities = keep
        .iter()
        .map(|&r| format!("{:0width$}", r / t_len))
        .collect();
    let times = keep.iter().map(|&r| (r % t_len) as i64).collect();
    let control = |j: usize| -> Vec<f64> { keep.iter().map(|&r| x[3 * r + j]).collect() };

    PanelDataset::from_complete(
        "country",
        "year",
        entities,
        times,
        vec![
            ("gdp_growth".into(), pick(&y)),
            ("trust".into(), pick(&d)),
            ("trust_lag".into(), pick(&d_lag)),
            ("gdp_growth_lag".into(), pick(&y_lag)),
            ("capital".into(), control(0)),
            ("labor".into(), control(1)),
            ("technology".into(), control(2)),
            ("gov_effectiveness_lag".into(), pick(&proxy_lag)),
            ("trust_mean".into(), pick(&trust_mean)),
            ("gdp_growth_mean".into(), pick(&growth_mean)),
            ("gov_effectiveness_mean".into(), pick(&proxy_mean)),
        ],
    )
}

/// Bias, variance and MSE of a set of draws against the true value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub bias: f64,
    /// Population (divide-by-n) variance.
    pub variance: f64,
    pub mse: f64,
}

/// `None` for an empty draw vector.
pub fn summarize(draws: &[f64], true_theta: f64) -> Option<Summary> {
    if draws.is_empty() {
        return None;
    }
    let bias = numeric::mean(draws) - true_theta;
    let variance = numeric::population_variance(draws);
    let mse = numeric::mean(
        &draws
            .iter()
            .map(|d| (d - true_theta) * (d - true_theta))
            .collect::<Vec<_>>(),
    );
    Some(Summary {
        bias,
        variance,
        mse,
    })
}

/// Draws and summary for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorDraws {
    pub label: String,
    /// Finite coefficient draws in replication order.
    pub draws: Vec<f64>,
    pub failures: usize,
    /// First failure message, if any.
    pub first_error: Option<String>,
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub estimators: Vec<EstimatorDraws>,
    pub n_simulations: usize,
    pub true_theta: f64,
    pub seed: u64,
}

impl SimulationReport {
    pub fn get(&self, label: &str) -> Option<&EstimatorDraws> {
        self.estimators.iter().find(|e| e.label == label)
    }

    pub fn summary(&self, label: &str) -> Option<Summary> {
        self.get(label).and_then(|e| e.summary)
    }
}

/// Coefficients (or failure messages) of one replication, one per estimator.
pub type ReplicationOutcome = Vec<std::result::Result<f64, String>>;

/// Runs replications `range` and returns their raw outcomes in index order.
pub fn run_replications(
    p: &DgpParams,
    range: std::ops::Range<usize>,
    estimators: &[&dyn PanelEstimator],
) -> Result<Vec<ReplicationOutcome>> {
    p.validate()?;
    Ok(range
        .into_par_iter()
        .map(|rep| {
            let rep_seed = replication_seed(p.seed, rep);
            match simulate_panel(p, rep) {
                Ok(ds) => estimators
                    .iter()
                    .enumerate()
                    .map(|(j, est)| {
                        let seed = substream_seed(rep_seed, 1 + j as u64);
                        match est.estimate(&ds, seed) {
                            Ok(r) if r.coef.is_finite() => Ok(r.coef),
                            Ok(r) => Err(format!("non-finite coefficient {}", r.coef)),
                            Err(e) => Err(e.to_string()),
                        }
                    })
                    .collect(),
                Err(e) => vec![Err(e.to_string()); estimators.len()],
            }
        })
        .collect())
}

/// Aggregates replication outcomes into a report.
pub fn assemble_report(
    p: &DgpParams,
    labels: &[String],
    outcomes: &[ReplicationOutcome],
) -> SimulationReport {
    let estimators = labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let mut draws = Vec::new();
            let mut failures = 0;
            let mut first_error = None;
            for outcome in outcomes {
                match &outcome[j] {
                    Ok(v) => draws.push(*v),
                    Err(msg) => {
                        failures += 1;
                        first_error.get_or_insert_with(|| msg.clone());
                    }
                }
            }
            let summary = summarize(&draws, p.true_theta);
            EstimatorDraws {
                label: label.clone(),
                draws,
                failures,
                first_error,
                summary,
            }
        })
        .collect();
    SimulationReport {
        estimators,
        n_simulations: outcomes.len(),
        true_theta: p.true_theta,
        seed: p.seed,
    }
}

/// Runs `n_sims` replications of every estimator and summarizes them.
pub fn run_monte_carlo(
    p: &DgpParams,
    n_sims: usize,
    estimators: &[&dyn PanelEstimator],
) -> Result<SimulationReport> {
    if n_sims == 0 {
        return Err(Error::Config("n_sims must be at least 1".into()));
    }
    if estimators.is_empty() {
        return Err(Error::Config("no estimators selected".into()));
    }
    let outcomes = run_replications(p, 0..n_sims, estimators)?;
    let labels: Vec<String> = estimators.iter().map(|e| e.label()).collect();
    Ok(assemble_report(p, &labels, &outcomes))
}

/// Rounds to four decimals for tabular output.
pub fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn fmt4(v: Option<f64>) -> String {
    v.map(|v| {
        let r = round4(v);
        // Avoid printing "-0".
        if r == 0.0 { 0.0 } else { r }.to_string()
    })
    .unwrap_or_default()
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `Estimator,Bias,Variance,MSE` rounded to four decimals, preceded by
/// `#`-prefixed provenance lines. Estimators without draws get empty cells.
pub fn write_summary_csv(
    report: &SimulationReport,
    path: &Path,
    provenance: &[String],
) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for line in provenance {
        writeln!(out, "# {line}").map_err(io)?;
    }
    for e in &report.estimators {
        writeln!(out, "# failures {}={}", e.label, e.failures).map_err(io)?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["Estimator", "Bias", "Variance", "MSE"])
        .map_err(|e| Error::csv(path, e))?;
    for e in &report.estimators {
        let s = e.summary;
        writer
            .write_record([
                e.label.clone(),
                fmt4(s.map(|s| s.bias)),
                fmt4(s.map(|s| s.variance)),
                fmt4(s.map(|s| s.mse)),
            ])
            .map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(io)
}

/// Writes every finite draw as `replication_order,estimator,coefficient`.
pub fn write_draws_csv(report: &SimulationReport, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    writer
        .write_record(["estimator", "draw", "coefficient"])
        .map_err(|e| Error::csv(path, e))?;
    for e in &report.estimators {
        for (i, v) in e.draws.iter().enumerate() {
            writer
                .write_record([e.label.clone(), i.to_string(), v.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]` of `draws`; the last bin is
/// closed on the right. Identical draws collapse to a single bin.
pub fn histogram(draws: &[f64], n_bins: usize) -> Vec<Bin> {
    if draws.is_empty() || n_bins == 0 {
        return Vec::new();
    }
    let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![Bin {
            left: lo,
            right: hi,
            count: draws.len(),
        }];
    }
    let width = (hi - lo) / n_bins as f64;
    let mut bins: Vec<Bin> = (0..n_bins)
        .map(|b| Bin {
            left: lo + b as f64 * width,
            right: if b + 1 == n_bins {
                hi
            } else {
                lo + (b + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for &v in draws {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        bins[b].count += 1;
    }
    bins
}

pub const HISTOGRAM_BINS: usize = 20;

/// Writes `estimator,bin_left,bin_right,count` with 20 bins per estimator
/// over that estimator's own draw range; the true effect is recorded in a
/// leading `# true_theta=` line.
pub fn export_histogram(report: &SimulationReport, path: &Path) -> Result<()> {
    if report.estimators.iter().all(|e| e.draws.is_empty()) {
        return Err(Error::Data("no estimator produced any draws".into()));
    }
    let mut out = create(path)?;
    writeln!(out, "# true_theta={}", report.true_theta).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["estimator", "bin_left", "bin_right", "count"])
        .map_err(|e| Error::csv(path, e))?;
    for e in &report.estimators {
        for bin in histogram(&e.draws, HISTOGRAM_BINS) {
            writer
                .write_record([
                    e.label.clone(),
                    bin.left.to_string(),
                    bin.right.to_string(),
                    bin.count.to_string(),
                ])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Small-multiples SVG of the per-estimator histograms with a dashed line at
/// the true effect.
pub fn export_histogram_svg(report: &SimulationReport, path: &Path) -> Result<()> {
    let panels: Vec<&EstimatorDraws> = report
        .estimators
        .iter()
        .filter(|e| !e.draws.is_empty())
        .collect();
    if panels.is_empty() {
        return Err(Error::Data("no estimator produced any draws".into()));
    }
    let (pw, ph, pad) = (360.0, 200.0, 30.0);
    let height = panels.len() as f64 * (ph + pad) + pad;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n",
        pw + 2.0 * pad
    );
    for (k, e) in panels.iter().enumerate() {
        let bins = histogram(&e.draws, HISTOGRAM_BINS);
        let top = pad + k as f64 * (ph + pad);
        let lo = bins[0].left.min(report.true_theta);
        let hi = bins[bins.len() - 1].right.max(report.true_theta);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let max_count = bins.iter().map(|b| b.count).max().unwrap_or(1).max(1) as f64;
        let sx = |v: f64| pad + (v - lo) / span * pw;
        svg += &format!(
            "<text x=\"{pad}\" y=\"{}\">{} (n={})</text>\n",
            top - 6.0,
            e.label,
            e.draws.len()
        );
        svg += &format!(
            "<rect x=\"{pad}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#999\"/>\n"
        );
        for b in &bins {
            let h = b.count as f64 / max_count * ph;
            let (x0, x1) = (sx(b.left), sx(b.right));
            svg += &format!(
                "<rect x=\"{x0:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"#7570b3\" fill-opacity=\"0.6\"/>\n",
                top + ph - h,
                (x1 - x0).max(1.0)
            );
        }
        let tx = sx(report.true_theta);
        svg += &format!(
            "<line x1=\"{tx:.2}\" y1=\"{top}\" x2=\"{tx:.2}\" y2=\"{}\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n",
            top + ph
        );
        svg += &format!(
            "<text x=\"{pad}\" y=\"{}\">{:.4}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4}</text>\n",
            top + ph + 12.0,
            lo,
            pad + pw,
            top + ph + 12.0,
            hi
        );
    }
    svg += "</svg>\n";
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
