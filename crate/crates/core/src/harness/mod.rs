//! Multi-seed experiments: arms of regulatory settings run over common
//! seeds, with per-arm tables, shared-bin histograms and summaries.

pub mod stats;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::abm::{run_simulation, RunResult};
use crate::basel::{Regime, WeightsPreset};
use crate::config::ModelConfig;
use crate::error::{Result, SimError};

/// Cascades at least this large count as large.
pub const LARGE_CASCADE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    RegulationComparison,
    SurchargeLevels,
    WeightDistributions,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::RegulationComparison, Preset::SurchargeLevels, Preset::WeightDistributions];
}

impl FromStr for Preset {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regulation-comparison" => Ok(Preset::RegulationComparison),
            "surcharge-levels" => Ok(Preset::SurchargeLevels),
            "weight-distributions" => Ok(Preset::WeightDistributions),
            _ => Err(SimError::Parse(format!(
                "unknown experiment `{s}` (expected regulation-comparison, surcharge-levels or weight-distributions)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::RegulationComparison => "regulation-comparison",
            Preset::SurchargeLevels => "surcharge-levels",
            Preset::WeightDistributions => "weight-distributions",
        })
    }
}

/// Regulatory overrides for one arm; everything else comes from the base
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub name: String,
    pub policy: Regime,
    pub surcharge_multiplier: f64,
    pub weights_preset: WeightsPreset,
}

impl ArmSpec {
    pub fn new(name: &str, policy: Regime, surcharge_multiplier: f64, weights_preset: WeightsPreset) -> Self {
        ArmSpec { name: name.to_string(), policy, surcharge_multiplier, weights_preset }
    }

    pub fn config(&self, base: &ModelConfig) -> ModelConfig {
        let mut cfg = base.clone();
        cfg.regulation.policy = self.policy;
        cfg.regulation.surcharge_multiplier = self.surcharge_multiplier;
        cfg.regulation.weights_preset = self.weights_preset;
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: ModelConfig,
    pub arms: Vec<ArmSpec>,
    /// Every arm runs on the same seeds.
    pub seeds: Vec<u64>,
}

impl ExperimentSpec {
    pub fn preset(preset: Preset, base: ModelConfig, seeds: Vec<u64>) -> Self {
        use WeightsPreset::*;
        let arms = match preset {
            Preset::RegulationComparison => vec![
                ArmSpec::new("baselII", Regime::BaselII, 0.0, Basel),
                ArmSpec::new("baselIII", Regime::BaselIII, 1.0, Basel),
                ArmSpec::new("srt", Regime::Srt, 0.0, Basel),
            ],
            Preset::SurchargeLevels => vec![
                ArmSpec::new("mu1", Regime::BaselIII, 1.0, Basel),
                ArmSpec::new("mu2", Regime::BaselIII, 2.0, Basel),
                ArmSpec::new("mu3", Regime::BaselIII, 3.0, Basel),
            ],
            Preset::WeightDistributions => vec![
                ArmSpec::new("basel", Regime::BaselIII, 2.75, Basel),
                ArmSpec::new("liabilities-only", Regime::BaselIII, 3.0, LiabilitiesOnly),
                ArmSpec::new("assets-only", Regime::BaselIII, 4.5, AssetsOnly),
            ],
        };
        ExperimentSpec { name: preset.to_string(), base, arms, seeds }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.arms.len() < 2 {
            return Err(SimError::Config(format!("experiment needs at least 2 arms, got {}", self.arms.len())));
        }
        if self.seeds.is_empty() {
            return Err(SimError::Config("experiment needs at least one seed".into()));
        }
        let mut names: Vec<&str> = self.arms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::Config("arm names must be unique".into()));
        }
        if names.iter().any(|n| n.is_empty() || n.contains(['/', '\\'])) {
            return Err(SimError::Config("arm names must be non-empty file-name fragments".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::Config("seeds must be unique".into()));
        }
        for a in &self.arms {
            a.config(&self.base).validate()?;
        }
        Ok(())
    }
}

/// Replicate seeds drawn from a stream keyed by the base seed.
pub fn replicate_seeds(base: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    (0..n).map(|_| rng.gen()).collect()
}

#[derive(Debug, Clone)]
pub struct ArmOutcome {
    pub name: String,
    /// Sorted by seed.
    pub runs: Vec<RunResult>,
    pub failures: Vec<(u64, String)>,
}

impl ArmOutcome {
    pub fn summary(&self) -> ArmSummary {
        ArmSummary::of(self)
    }

    pub fn firm_cascade_sizes(&self) -> Vec<f64> {
        self.runs.iter().flat_map(|r| r.firm_cascades.iter().map(|&c| c as f64)).collect()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.losses).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.volume).collect()
    }

    pub fn cascade_sizes(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.cascade_size as f64).collect()
    }

    pub fn large_cascades(&self) -> usize {
        self.runs.iter().filter(|r| r.cascade_size >= LARGE_CASCADE).count()
    }

    /// Rank-wise mean of a per-run profile.
    pub fn mean_profile(&self, f: impl Fn(&RunResult) -> &[f64]) -> Vec<f64> {
        let Some(first) = self.runs.first() else { return Vec::new() };
        let mut acc = vec![0.0; f(first).len()];
        for r in &self.runs {
            acc.iter_mut().zip(f(r)).for_each(|(a, x)| *a += x);
        }
        let n = self.runs.len() as f64;
        acc.iter().map(|a| a / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub runs: usize,
    pub failures: usize,
    pub mean_steps: f64,
    pub mean_cascade: f64,
    pub large_cascade_share: f64,
    pub mean_losses: f64,
    pub losses_q50: f64,
    pub losses_q90: f64,
    pub losses_q99: f64,
    pub volume_runs: usize,
    pub mean_volume: f64,
    pub firm_cascade_events: usize,
    pub mean_firm_cascade: f64,
    pub max_sr_terminal: f64,
    pub max_sr_mean: f64,
    pub mean_fund: f64,
}

impl ArmSummary {
    fn of(arm: &ArmOutcome) -> Self {
        let n = arm.runs.len();
        let steps: Vec<f64> = arm.runs.iter().map(|r| r.steps as f64).collect();
        let losses = stats::sorted(&arm.losses());
        let volumes = arm.volumes();
        let firm = arm.firm_cascade_sizes();
        let first = |p: Vec<f64>| p.first().copied().unwrap_or(f64::NAN);
        ArmSummary {
            runs: n,
            failures: arm.failures.len(),
            mean_steps: stats::mean(&steps),
            mean_cascade: stats::mean(&arm.cascade_sizes()),
            large_cascade_share: if n == 0 { f64::NAN } else { arm.large_cascades() as f64 / n as f64 },
            mean_losses: stats::mean(&losses),
            losses_q50: stats::quantile(&losses, 0.5),
            losses_q90: stats::quantile(&losses, 0.9),
            losses_q99: stats::quantile(&losses, 0.99),
            volume_runs: volumes.len(),
            mean_volume: stats::mean(&volumes),
            firm_cascade_events: firm.len(),
            mean_firm_cascade: stats::mean(&firm),
            max_sr_terminal: first(arm.mean_profile(|r| &r.sr_profile)),
            max_sr_mean: first(arm.mean_profile(|r| &r.sr_profile_mean)),
            mean_fund: stats::mean(&arm.runs.iter().map(|r| r.fund).collect::<Vec<_>>()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub name: String,
    pub arms: Vec<ArmOutcome>,
}

impl ExperimentOutput {
    pub fn arm(&self, name: &str) -> Option<&ArmOutcome> {
        self.arms.iter().find(|a| a.name == name)
    }
}

/// Runs every seed of one configuration. Failed runs are collected rather
/// than aborting the rest.
pub fn run_arm(name: &str, cfg: &ModelConfig, seeds: &[u64]) -> ArmOutcome {
    let results: Vec<(u64, Result<RunResult>)> =
        seeds.par_iter().map(|&s| (s, run_simulation(cfg, s))).collect();
    collect_arm(name, results)
}

fn collect_arm(name: &str, results: Vec<(u64, Result<RunResult>)>) -> ArmOutcome {
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(r) => runs.push(r),
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    runs.sort_by_key(|r| r.seed);
    failures.sort();
    ArmOutcome { name: name.to_string(), runs, failures }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let configs: Vec<ModelConfig> = spec.arms.iter().map(|a| a.config(&spec.base)).collect();
    let jobs: Vec<(usize, u64)> =
        (0..spec.arms.len()).flat_map(|a| spec.seeds.iter().map(move |&s| (a, s))).collect();
    let results: Vec<(usize, u64, Result<RunResult>)> =
        jobs.par_iter().map(|&(a, s)| (a, s, run_simulation(&configs[a], s))).collect();
    let mut per_arm: Vec<Vec<(u64, Result<RunResult>)>> = spec.arms.iter().map(|_| Vec::new()).collect();
    for (a, s, r) in results {
        per_arm[a].push((s, r));
    }
    let arms = spec.arms.iter().zip(per_arm).map(|(a, res)| collect_arm(&a.name, res)).collect();
    Ok(ExperimentOutput { name: spec.name.clone(), arms })
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

impl ExperimentOutput {
    /// Writes all tables into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for arm in &self.arms {
            self.write_arm(dir, arm)?;
        }
        self.write_histograms(dir)?;
        self.write_summary(dir)?;
        self.write_comparisons(dir)?;
        write_rows(
            &dir.join("failures.csv"),
            &["arm", "seed", "error"],
            self.arms.iter().flat_map(|a| {
                a.failures.iter().map(|(s, e)| vec![a.name.clone(), s.to_string(), e.clone()])
            }),
        )
    }

    fn write_arm(&self, dir: &Path, arm: &ArmOutcome) -> Result<()> {
        let n = &arm.name;
        write_rows(
            &dir.join(format!("losses_{n}.csv")),
            &["seed", "losses"],
            arm.runs.iter().map(|r| vec![r.seed.to_string(), num(r.losses)]),
        )?;
        write_rows(
            &dir.join(format!("cascades_{n}.csv")),
            &["seed", "steps", "initial_defaults", "cascade_size"],
            arm.runs.iter().map(|r| {
                vec![r.seed.to_string(), r.steps.to_string(), r.initial_defaults.to_string(), r.cascade_size.to_string()]
            }),
        )?;
        write_rows(
            &dir.join(format!("volume_{n}.csv")),
            &["seed", "steps", "volume"],
            arm.runs.iter().map(|r| vec![r.seed.to_string(), r.steps.to_string(), r.volume.map_or(String::new(), num)]),
        )?;
        write_rows(
            &dir.join(format!("firm_cascades_{n}.csv")),
            &["seed", "size"],
            arm.runs
                .iter()
                .flat_map(|r| r.firm_cascades.iter().map(move |c| vec![r.seed.to_string(), c.to_string()])),
        )?;
        for (file, terminal, mean) in [
            ("sr_profile", arm.mean_profile(|r| &r.sr_profile), arm.mean_profile(|r| &r.sr_profile_mean)),
            ("cr_profile", arm.mean_profile(|r| &r.cr_profile), arm.mean_profile(|r| &r.cr_profile_mean)),
        ] {
            write_rows(
                &dir.join(format!("{file}_{n}.csv")),
                &["rank", "terminal", "time_mean"],
                terminal.iter().zip(&mean).enumerate().map(|(k, (t, m))| vec![(k + 1).to_string(), num(*t), num(*m)]),
            )?;
        }
        Ok(())
    }

    fn write_histograms(&self, dir: &Path) -> Result<()> {
        let observables: [(&str, fn(&ArmOutcome) -> Vec<f64>); 4] = [
            ("losses", ArmOutcome::losses),
            ("cascade_size", ArmOutcome::cascade_sizes),
            ("volume", ArmOutcome::volumes),
            ("firm_cascade", ArmOutcome::firm_cascade_sizes),
        ];
        for (name, f) in observables {
            let samples: Vec<Vec<f64>> = self.arms.iter().map(f).collect();
            let pooled: Vec<f64> = samples.concat();
            let edges = stats::freedman_diaconis(&pooled);
            let counts: Vec<Vec<usize>> = samples.iter().map(|s| stats::histogram(s, &edges)).collect();
            let mut header = vec!["bin_lo", "bin_hi"];
            header.extend(self.arms.iter().map(|a| a.name.as_str()));
            write_rows(
                &dir.join(format!("hist_{name}.csv")),
                &header,
                (0..edges.len() - 1).map(|k| {
                    let mut row = vec![num(edges[k]), num(edges[k + 1])];
                    row.extend(counts.iter().map(|c| c[k].to_string()));
                    row
                }),
            )?;
        }
        Ok(())
    }

    fn write_summary(&self, dir: &Path) -> Result<()> {
        write_rows(
            &dir.join("summary.csv"),
            &[
                "arm", "runs", "failures", "mean_steps", "mean_cascade", "large_cascade_share", "mean_losses",
                "losses_q50", "losses_q90", "losses_q99", "volume_runs", "mean_volume", "firm_cascade_events",
                "mean_firm_cascade", "max_sr_terminal", "max_sr_mean", "mean_fund",
            ],
            self.arms.iter().map(|a| {
                let s = a.summary();
                vec![
                    a.name.clone(),
                    s.runs.to_string(),
                    s.failures.to_string(),
                    num(s.mean_steps),
                    num(s.mean_cascade),
                    num(s.large_cascade_share),
                    num(s.mean_losses),
                    num(s.losses_q50),
                    num(s.losses_q90),
                    num(s.losses_q99),
                    s.volume_runs.to_string(),
                    num(s.mean_volume),
                    s.firm_cascade_events.to_string(),
                    num(s.mean_firm_cascade),
                    num(s.max_sr_terminal),
                    num(s.max_sr_mean),
                    num(s.mean_fund),
                ]
            }),
        )
    }

    /// One-sided tests of every arm against the first.
    pub fn comparisons(&self) -> Vec<Comparison> {
        let Some(reference) = self.arms.first() else { return Vec::new() };
        let rs = reference.summary();
        let mut out = Vec::new();
        for arm in &self.arms[1..] {
            let s = arm.summary();
            out.push(Comparison {
                arm: arm.name.clone(),
                reference: reference.name.clone(),
                statistic: "large_cascade_share",
                alternative: "less",
                reference_value: rs.large_cascade_share,
                value: s.large_cascade_share,
                p_value: stats::fisher_less(reference.large_cascades(), rs.runs, arm.large_cascades(), s.runs),
            });
            out.push(Comparison {
                arm: arm.name.clone(),
                reference: reference.name.clone(),
                statistic: "mean_losses",
                alternative: "less",
                reference_value: rs.mean_losses,
                value: s.mean_losses,
                p_value: stats::welch_greater(&arm.losses(), &reference.losses()),
            });
            out.push(Comparison {
                arm: arm.name.clone(),
                reference: reference.name.clone(),
                statistic: "mean_firm_cascade",
                alternative: "greater",
                reference_value: rs.mean_firm_cascade,
                value: s.mean_firm_cascade,
                p_value: stats::welch_greater(&reference.firm_cascade_sizes(), &arm.firm_cascade_sizes()),
            });
        }
        out
    }

    fn write_comparisons(&self, dir: &Path) -> Result<()> {
        write_rows(
            &dir.join("comparisons.csv"),
            &["arm", "reference", "statistic", "alternative", "reference_value", "value", "p_value"],
            self.comparisons().into_iter().map(|c| {
                vec![
                    c.arm,
                    c.reference,
                    c.statistic.to_string(),
                    c.alternative.to_string(),
                    num(c.reference_value),
                    num(c.value),
                    num(c.p_value),
                ]
            }),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub arm: String,
    pub reference: String,
    pub statistic: &'static str,
    /// Direction of the alternative hypothesis for the arm.
    pub alternative: &'static str,
    pub reference_value: f64,
    pub value: f64,
    pub p_value: f64,
}
