//! Synthetic benchmark: ground truth, shared OP-COMP initialization, PGD and BCD runs,
//! localization scores and CSV output.

mod metrics;
mod trace;

pub use metrics::{match_and_score, LocalizationMetrics};
pub use trace::{load_trace, residual_jumps, save_rows, trace_rows, write_rows, TraceRow};

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bcd::{bcd_run, BcdConfig};
use crate::comp::{op_comp_traced, CompConfig};
use crate::descent::{pgd, DescentConfig, DescentOutcome};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::operators::{MeasurementOperator, MeasurementVector, MultiPlanePsfConfig, OperatorSpec};
use crate::spike::{distance, SpikeTrain};

/// Total rejections allowed when placing the true spikes.
pub const MAX_TRUTH_REJECTIONS: usize = 1_000_000;

/// Consecutive rejections of one candidate before restarting the placement from scratch.
const RESTART_AFTER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pgd,
    Bcd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pgd => "pgd",
            Method::Bcd => "bcd",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// BCD knobs; the inner descent uses the experiment's descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcdSettings {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_outer")]
    pub outer_iterations: usize,
    #[serde(default = "default_inner")]
    pub inner_iterations: usize,
}

fn default_threshold() -> f64 {
    1e-3
}
fn default_outer() -> usize {
    5_000
}
fn default_inner() -> usize {
    50
}

impl Default for BcdSettings {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
            outer_iterations: default_outer(),
            inner_iterations: default_inner(),
        }
    }
}

fn default_amplitudes() -> [f64; 2] {
    [1.0, 2.0]
}
fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}
fn default_methods() -> Vec<Method> {
    vec![Method::Pgd, Method::Bcd]
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_detection() -> f64 {
    1e-2
}

/// An experiment as read from TOML or JSON. Omitted solver sections are derived from the
/// operator and the separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operator: OperatorSpec,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    /// Minimal distance between true spikes.
    pub min_separation: f64,
    #[serde(default = "default_amplitudes")]
    pub amplitude_range: [f64; 2],
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub comp: Option<CompConfig>,
    #[serde(default)]
    pub descent: Option<DescentConfig>,
    #[serde(default)]
    pub bcd: Option<BcdSettings>,
    /// Defaults to `min_separation / 3`.
    #[serde(default)]
    pub match_radius: Option<f64>,
    /// Estimated spikes with `|a|` below this fraction of the largest `|a|` are not scored.
    #[serde(default = "default_detection")]
    pub detection_threshold: f64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Run seeds on separate threads; per-run wall times then compete for cores.
    #[serde(default)]
    pub parallel_seeds: bool,
}

impl ExperimentConfig {
    fn psf_profile(geometry: MultiPlanePsfConfig, k: usize, seeds: Vec<u64>) -> Self {
        let eps = 8.0 * geometry.pixel_width();
        Self {
            operator: OperatorSpec::MultiplanePsf(geometry),
            k,
            min_separation: eps,
            amplitude_range: default_amplitudes(),
            seeds,
            methods: default_methods(),
            comp: None,
            descent: None,
            bcd: None,
            match_radius: None,
            detection_threshold: default_detection(),
            output_dir: default_output(),
            parallel_seeds: false,
        }
    }

    /// 10 spikes, 4 planes of 32 x 32 pixels, 5 seeds.
    pub fn desk() -> Self {
        Self::psf_profile(MultiPlanePsfConfig::desk_geometry(), 10, default_seeds())
    }

    /// 50 spikes, 4 planes of 64 x 64 pixels, 10 seeds.
    pub fn paper() -> Self {
        Self::psf_profile(MultiPlanePsfConfig::paper_geometry(), 50, (0..10).collect())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.k == 0 {
            return bad("K must be >= 1");
        }
        if !(self.min_separation > 0.0) {
            return bad("min_separation must be > 0");
        }
        let [lo, hi] = self.amplitude_range;
        if !(lo < hi) {
            return bad("amplitude_range needs lo < hi");
        }
        if self.seeds.is_empty() || self.methods.is_empty() {
            return bad("seeds and methods must be nonempty");
        }
        if self.match_radius.is_some_and(|r| !(r > 0.0)) {
            return bad("match_radius must be > 0");
        }
        if !(0.0..1.0).contains(&self.detection_threshold) {
            return bad("detection_threshold must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn match_radius(&self) -> f64 {
        self.match_radius.unwrap_or(self.min_separation / 3.0)
    }

    pub fn descent_config(&self, op: &dyn MeasurementOperator) -> DescentConfig {
        self.descent
            .clone()
            .unwrap_or_else(|| DescentConfig::for_operator(op, self.min_separation))
    }

    pub fn bcd_config(&self, op: &dyn MeasurementOperator) -> BcdConfig {
        let s = self.bcd.clone().unwrap_or_default();
        let descent = self.descent_config(op);
        BcdConfig {
            threshold: s.threshold,
            outer_iterations: s.outer_iterations,
            inner_iterations: s.inner_iterations,
            stop_residual: descent.stop_residual,
            descent,
        }
    }

    /// Defaults: pixel-aligned lateral axes and 16 axial nodes for the PSF, otherwise a
    /// per-axis count giving a step below `min_separation / 3`; at most `3 K` spikes.
    pub fn comp_config(&self, op: &dyn MeasurementOperator) -> CompConfig {
        if let Some(c) = &self.comp {
            return c.clone();
        }
        let fine = |len: f64, floor: usize| {
            ((3.0 * len / self.min_separation).ceil() as usize + 1).max(floor)
        };
        let lengths = op.domain().lengths();
        let resolution = match &self.operator {
            OperatorSpec::MultiplanePsf(g) => vec![g.nx, g.ny, fine(lengths[2], 16)],
            OperatorSpec::Fourier(f) => {
                let floor = match f.dim {
                    1 => 256,
                    2 => 64,
                    _ => 16,
                };
                lengths.iter().map(|&l| fine(l, floor)).collect()
            }
        };
        CompConfig::new(resolution, 3 * self.k)
    }
}

/// Parses `"a..b"` (inclusive), `"a,b,c"` or a single seed.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad seed '{s}'")))
    };
    let seeds = if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(Error::Parse(format!("empty seed range '{text}'")));
        }
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    Ok(seeds)
}

/// Spikes whose `|amplitude|` is at least `threshold` times the largest `|amplitude|`.
pub fn detections(train: &SpikeTrain, threshold: f64) -> SpikeTrain {
    let max = train.iter().map(|s| s.amplitude.abs()).fold(0.0, f64::max);
    let kept: Vec<usize> = (0..train.len())
        .filter(|&i| train.spikes()[i].amplitude.abs() >= threshold * max)
        .collect();
    train.select(&kept).expect("indices are in range")
}

/// Places `k` spikes uniformly in the operator domain, pairwise more than `epsilon` apart,
/// with amplitudes uniform in `amplitude_range`. Returns the truth and its observation.
pub fn generate_truth_with(
    op: &dyn MeasurementOperator,
    k: usize,
    epsilon: f64,
    amplitude_range: [f64; 2],
    seed: u64,
) -> Result<(SpikeTrain, MeasurementVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(k);
    let (mut total, mut streak) = (0usize, 0usize);
    while positions.len() < k {
        let p = op.domain().sample(&mut rng);
        if positions.iter().all(|q| distance(q, &p) > epsilon) {
            positions.push(p);
            streak = 0;
            continue;
        }
        total += 1;
        streak += 1;
        if total >= MAX_TRUTH_REJECTIONS {
            return Err(Error::PackingInfeasible {
                k,
                epsilon,
                attempts: total,
            });
        }
        if streak >= RESTART_AFTER {
            positions.clear();
            streak = 0;
        }
    }
    let [lo, hi] = amplitude_range;
    let amplitudes: Vec<f64> = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
    let truth = SpikeTrain::from_parts(op.dim(), &amplitudes, &positions)?;
    let y = op.apply(&truth)?;
    Ok((truth, y))
}

pub fn generate_truth(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(SpikeTrain, MeasurementVector)> {
    let op = cfg.operator.build()?;
    generate_truth_with(
        op.as_ref(),
        cfg.k,
        cfg.min_separation,
        cfg.amplitude_range,
        seed,
    )
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub outcome: DescentOutcome,
    /// Scored part of the final train, see [`detections`].
    pub detected: SpikeTrain,
    pub metrics: LocalizationMetrics,
    /// Wall time of the last trace row.
    pub wall_time_seconds: f64,
    pub converged: bool,
    pub spikes_outside_domain: usize,
}

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub truth: SpikeTrain,
    pub init: SpikeTrain,
    pub comp_values: Vec<f64>,
    pub runs: Vec<MethodRun>,
}

impl SeedResult {
    pub fn run(&self, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == method)
    }

    /// PGD wall time over BCD wall time.
    pub fn speedup(&self) -> Option<f64> {
        Some(self.run(Method::Pgd)?.wall_time_seconds / self.run(Method::Bcd)?.wall_time_seconds)
    }
}

/// One seed end to end, without touching the filesystem.
pub fn run_seed(
    cfg: &ExperimentConfig,
    op: &dyn MeasurementOperator,
    seed: u64,
) -> Result<SeedResult> {
    let (truth, y) = generate_truth_with(op, cfg.k, cfg.min_separation, cfg.amplitude_range, seed)?;
    let obj = Objective::new(op, y)?;
    let comp = op_comp_traced(&obj, &cfg.comp_config(op))?;
    let init = comp.train;
    let descent = cfg.descent_config(op);
    let stop = descent.stop_residual;
    let mut runs = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let outcome = match method {
            Method::Pgd => pgd(&obj, &init, &descent)?,
            Method::Bcd => bcd_run(&obj, &init, &cfg.bcd_config(op))?,
        };
        let detected = detections(&outcome.train, cfg.detection_threshold);
        let metrics = match_and_score(&truth, &detected, cfg.match_radius())?;
        let wall_time_seconds = outcome.trace.last().map_or(0.0, |r| r.wall_time_seconds);
        let spikes_outside_domain = outcome
            .train
            .iter()
            .filter(|s| !op.domain().contains(&s.position))
            .count();
        runs.push(MethodRun {
            method,
            converged: outcome.final_value <= stop,
            outcome,
            detected,
            metrics,
            wall_time_seconds,
            spikes_outside_domain,
        });
    }
    Ok(SeedResult {
        seed,
        truth,
        init,
        comp_values: comp.values,
        runs,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub method: Method,
    /// `converged` or `budget_exhausted`.
    pub status: String,
    pub termination: String,
    pub final_residual: f64,
    pub wall_time_seconds: f64,
    pub iterations: usize,
    pub init_spike_count: usize,
    pub final_spike_count: usize,
    pub detected_spike_count: usize,
    pub block_gradient_evals: usize,
    /// PGD wall time over BCD wall time, on BCD rows when both ran.
    pub speedup: Option<f64>,
    pub jaccard: f64,
    pub precision: f64,
    pub recall: f64,
    pub spikes_outside_domain: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub method: Method,
    pub jaccard: f64,
    pub precision: f64,
    pub recall: f64,
    pub match_radius: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ResidualPoint {
    method: Method,
    seed: u64,
    wall_time_seconds: f64,
    residual_norm_squared: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FractionPoint {
    seed: u64,
    outer_iteration: usize,
    active_fraction: f64,
}

fn summary_rows(result: &SeedResult) -> Vec<SummaryRow> {
    result
        .runs
        .iter()
        .map(|run| {
            let o = &run.outcome;
            let termination = serde_json::to_value(o.termination)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            SummaryRow {
                seed: result.seed,
                method: run.method,
                status: if run.converged {
                    "converged"
                } else {
                    "budget_exhausted"
                }
                .into(),
                termination,
                final_residual: o.final_value,
                wall_time_seconds: run.wall_time_seconds,
                iterations: o.iterations_run,
                init_spike_count: result.init.len(),
                final_spike_count: o.train.len(),
                detected_spike_count: run.detected.len(),
                block_gradient_evals: o.block_gradient_evals,
                speedup: (run.method == Method::Bcd)
                    .then(|| result.speedup())
                    .flatten(),
                jaccard: run.metrics.jaccard,
                precision: run.metrics.precision,
                recall: run.metrics.recall,
                spikes_outside_domain: run.spikes_outside_domain,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub results: Vec<SeedResult>,
    pub summary: Vec<SummaryRow>,
    pub output_dir: PathBuf,
}

impl ExperimentReport {
    /// Median over seeds of `1 - t_bcd / t_pgd`.
    pub fn median_time_reduction(&self) -> Option<f64> {
        let mut r: Vec<f64> = self
            .results
            .iter()
            .filter_map(SeedResult::speedup)
            .map(|s| 1.0 - 1.0 / s)
            .collect();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        let n = r.len();
        Some(if n % 2 == 1 {
            r[n / 2]
        } else {
            0.5 * (r[n / 2 - 1] + r[n / 2])
        })
    }
}

/// Runs every seed and writes traces, spike trains, `summary.csv`, `metrics.csv` and the
/// plot files `residual_vs_time.csv` and `active_fraction.csv` into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let op = cfg.operator.build()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;

    let results: Vec<SeedResult> = if cfg.parallel_seeds {
        std::thread::scope(|scope| {
            let handles: Vec<_> = cfg
                .seeds
                .iter()
                .map(|&seed| {
                    let op = op.as_ref();
                    scope.spawn(move || run_seed(cfg, op, seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("seed worker panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        cfg.seeds
            .iter()
            .map(|&seed| run_seed(cfg, op.as_ref(), seed))
            .collect::<Result<Vec<_>>>()?
    };

    let mut summary = Vec::new();
    let mut metrics = Vec::new();
    let mut residuals = Vec::new();
    let mut fractions = Vec::new();
    for res in &results {
        res.truth
            .save_csv(dir.join(format!("truth_{}.csv", res.seed)))?;
        res.init
            .save_csv(dir.join(format!("init_{}.csv", res.seed)))?;
        for run in &res.runs {
            let rows = trace_rows(run.method, res.seed, &run.outcome.trace);
            save_rows(
                &rows,
                dir.join(format!("trace_{}_{}.csv", run.method, res.seed)),
            )?;
            run.outcome
                .train
                .save_csv(dir.join(format!("estimate_{}_{}.csv", run.method, res.seed)))?;
            residuals.extend(rows.iter().map(|r| ResidualPoint {
                method: r.method,
                seed: r.seed,
                wall_time_seconds: r.wall_time_seconds,
                residual_norm_squared: r.residual_norm_squared,
            }));
            if run.method == Method::Bcd {
                fractions.extend(rows.iter().skip(1).map(|r| FractionPoint {
                    seed: r.seed,
                    outer_iteration: r.outer_iteration,
                    active_fraction: r.active_fraction,
                }));
            }
            let m = &run.metrics;
            metrics.push(MetricsRow {
                seed: res.seed,
                method: run.method,
                jaccard: m.jaccard,
                precision: m.precision,
                recall: m.recall,
                match_radius: m.match_radius,
                true_positives: m.true_positives,
                false_positives: m.false_positives,
                false_negatives: m.false_negatives,
            });
        }
        summary.extend(summary_rows(res));
    }
    save_rows(&summary, dir.join("summary.csv"))?;
    save_rows(&metrics, dir.join("metrics.csv"))?;
    save_rows(&residuals, dir.join("residual_vs_time.csv"))?;
    save_rows(&fractions, dir.join("active_fraction.csv"))?;
    Ok(ExperimentReport {
        results,
        summary,
        output_dir: dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{FourierOperatorConfig, MultiPlanePsf};
    use crate::spike::{min_pairwise_separation, SeparationModel};

    #[test]
    fn detections_drop_negligible_amplitudes() {
        let t = SpikeTrain::from_parts(
            1,
            &[2.0, -1e-4, -1.5, 0.019],
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        )
        .unwrap();
        let d = detections(&t, 1e-2);
        assert_eq!(d.amplitudes(), vec![2.0, -1.5]);
        assert_eq!(detections(&t, 0.0), t);
        assert!(detections(&SpikeTrain::new(2), 1e-2).is_empty());
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("0..9").unwrap(), (0..=9).collect::<Vec<_>>());
        assert_eq!(parse_seeds("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1, 4,2").unwrap(), vec![1, 4, 2]);
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn truth_is_separated_and_deterministic() {
        let cfg = ExperimentConfig::desk();
        let (t1, y1) = generate_truth(&cfg, 4).unwrap();
        let (t2, y2) = generate_truth(&cfg, 4).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(y1, y2);
        assert_eq!(t1.len(), 10);
        assert!(min_pairwise_separation(&t1) > cfg.min_separation);
        assert!(t1.iter().all(|s| (1.0..=2.0).contains(&s.amplitude)));
    }

    #[test]
    fn paper_profile_packs_fifty_spikes() {
        let cfg = ExperimentConfig::paper();
        let (t, y) = generate_truth(&cfg, 0).unwrap();
        assert_eq!(y.len(), 16_384);
        let sep = SeparationModel::new(cfg.min_separation, 50).unwrap();
        assert!(crate::spike::satisfies_separation(&t, &sep));
        assert_eq!(t.len(), 50);
    }

    #[test]
    fn infeasible_packing_is_reported() {
        let op = MultiPlanePsf::new(&MultiPlanePsfConfig::desk_geometry()).unwrap();
        let err = generate_truth_with(&op, 200, 1.6, [1.0, 2.0], 0).unwrap_err();
        assert!(matches!(err, Error::PackingInfeasible { .. }));
    }

    #[test]
    fn config_round_trips_through_toml_and_json() {
        let text = r#"
            K = 3
            min_separation = 0.3
            seeds = [1, 2]
            methods = ["bcd"]

            [operator]
            kind = "fourier"
            dim = 2
            measurements = 80
            seed = 4

            [bcd]
            inner_iterations = 20
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(
            cfg.operator,
            OperatorSpec::Fourier(FourierOperatorConfig::new(2, 80, 4))
        );
        assert_eq!(cfg.bcd.as_ref().unwrap().inner_iterations, 20);
        assert_eq!(cfg.bcd.as_ref().unwrap().threshold, 1e-3);
        assert_eq!(cfg.amplitude_range, [1.0, 2.0]);
        let back = ExperimentConfig::from_json_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_toml_str("K = 1\nbogus = 2").is_err());
    }

    #[test]
    fn comp_defaults_follow_geometry() {
        let cfg = ExperimentConfig::desk();
        let op = cfg.operator.build().unwrap();
        let c = cfg.comp_config(op.as_ref());
        assert_eq!(c.grid_resolution, vec![32, 32, 16]);
        assert_eq!(c.max_spikes, 30);
        let steps: Vec<f64> = op
            .domain()
            .lengths()
            .iter()
            .zip(&c.grid_resolution)
            .map(|(l, n)| l / *n as f64)
            .collect();
        assert!(steps.iter().all(|s| *s < cfg.min_separation / 3.0));
    }

    #[test]
    fn small_fourier_experiment_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            operator: OperatorSpec::Fourier(FourierOperatorConfig::new(1, 60, 2)),
            k: 2,
            min_separation: 0.3,
            ..ExperimentConfig::desk()
        };
        cfg.seeds = vec![0, 1];
        cfg.output_dir = dir.path().to_path_buf();
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.summary.len(), 4);
        for name in [
            "summary.csv",
            "metrics.csv",
            "residual_vs_time.csv",
            "active_fraction.csv",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let trace = load_trace(dir.path().join("trace_bcd_1.csv")).unwrap();
        assert!(trace
            .windows(2)
            .all(|w| w[1].wall_time_seconds >= w[0].wall_time_seconds));
        for res in &report.results {
            assert_eq!(
                res.run(Method::Pgd).unwrap().outcome.trace[0].residual_norm_squared,
                res.run(Method::Bcd).unwrap().outcome.trace[0].residual_norm_squared
            );
        }
        let pgd_only = ExperimentConfig {
            methods: vec![Method::Pgd],
            output_dir: dir.path().join("pgd"),
            ..cfg
        };
        let report = run_experiment(&pgd_only).unwrap();
        assert!(report.summary.iter().all(|r| r.speedup.is_none()));
        assert!(report.median_time_reduction().is_none());
    }
}
