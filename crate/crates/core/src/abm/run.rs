use serde::Serialize;

use super::{risk_profiles, Economy, StepOutcome, TraceEvent};
use crate::config::ModelConfig;
use crate::error::Result;

/// Observables of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub steps: usize,
    /// Banks defaulting in the terminal cascade, 0 if none.
    pub cascade_size: usize,
    /// Banks failing on their own in the terminal step.
    pub initial_defaults: usize,
    /// Interbank liabilities of the defaulted banks.
    pub losses: f64,
    pub volume_per_step: Vec<f64>,
    /// Mean new interbank principal per step; only for runs longer than
    /// `run.volume_min_steps`.
    pub volume: Option<f64>,
    /// Descending DebtRanks at the last step before termination.
    pub sr_profile: Vec<f64>,
    pub cr_profile: Vec<f64>,
    /// Descending profiles averaged over every `run.profile_every`-th step.
    pub sr_profile_mean: Vec<f64>,
    pub cr_profile_mean: Vec<f64>,
    /// Number of firms defaulting in each step that had at least one.
    pub firm_cascades: Vec<usize>,
    pub fund: f64,
    pub household_losses: f64,
}

pub fn run_simulation(cfg: &ModelConfig, seed: u64) -> Result<RunResult> {
    Ok(run_inner(cfg, seed, false)?.0)
}

/// Same run with the event log.
pub fn run_with_trace(cfg: &ModelConfig, seed: u64) -> Result<(RunResult, Vec<TraceEvent>)> {
    run_inner(cfg, seed, true)
}

fn run_inner(cfg: &ModelConfig, seed: u64, trace: bool) -> Result<(RunResult, Vec<TraceEvent>)> {
    let mut eco = Economy::new(cfg, seed)?;
    if trace {
        eco.enable_trace();
    }
    let b = cfg.economy.banks;
    let mut snapshot = eco.risk_snapshot();
    let (mut sr_sum, mut cr_sum, mut samples) = (vec![0.0; b], vec![0.0; b], 0usize);
    let mut volume_per_step = Vec::new();
    let mut firm_cascades = Vec::new();
    let mut terminal = None;
    while eco.step_count() < cfg.run.t_max {
        let out = eco.step()?;
        let report = match &out {
            StepOutcome::Continue(r) | StepOutcome::Terminal(r, _) => r,
        };
        volume_per_step.push(report.interbank_volume);
        if report.firm_defaults > 0 {
            firm_cascades.push(report.firm_defaults);
        }
        if let StepOutcome::Terminal(_, c) = out {
            terminal = Some(c);
            break;
        }
        snapshot = eco.risk_snapshot();
        if eco.step_count() % cfg.run.profile_every == 0 {
            let (sr, cr) = risk_profiles(&snapshot.0, &snapshot.1, &cfg.debtrank)?;
            sr_sum.iter_mut().zip(&sr).for_each(|(a, x)| *a += x);
            cr_sum.iter_mut().zip(&cr).for_each(|(a, x)| *a += x);
            samples += 1;
        }
    }
    let (sr_profile, cr_profile) = risk_profiles(&snapshot.0, &snapshot.1, &cfg.debtrank)?;
    let (sr_profile_mean, cr_profile_mean) = if samples == 0 {
        (sr_profile.clone(), cr_profile.clone())
    } else {
        let k = samples as f64;
        (sr_sum.iter().map(|x| x / k).collect(), cr_sum.iter().map(|x| x / k).collect())
    };
    let steps = eco.step_count();
    let volume = (steps > cfg.run.volume_min_steps).then(|| volume_per_step.iter().sum::<f64>() / steps as f64);
    let result = RunResult {
        seed,
        steps,
        cascade_size: terminal.as_ref().map_or(0, |c| c.defaults.len()),
        initial_defaults: terminal.as_ref().map_or(0, |c| c.initial),
        losses: terminal.as_ref().map_or(0.0, |c| c.losses),
        volume_per_step,
        volume,
        sr_profile,
        cr_profile,
        sr_profile_mean,
        cr_profile_mean,
        firm_cascades,
        fund: eco.fund(),
        household_losses: terminal.as_ref().map_or(0.0, |c| c.household_losses),
    };
    Ok((result, eco.take_trace()))
}
