//! DebtRank systemic impact and average vulnerability.
//!
//! All functions take the liability matrix exactly as given; callers pass
//! the net matrix (`LiabilityNetwork::net_liabilities`) or a hypothetical
//! matrix built from it. Capital `C_j` is the common equity of bank `j`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::netcore::{exposures_and_value, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebtRankConfig {
    /// Initial distress of the seed set, in `[0, 1]`; `1` means default.
    pub psi: f64,
    /// Maximum number of propagation steps; `None` means `B + 2`.
    pub max_steps: Option<usize>,
}

impl Default for DebtRankConfig {
    fn default() -> Self {
        DebtRankConfig {
            psi: 1.0,
            max_steps: None,
        }
    }
}

impl DebtRankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.psi) {
            return Err(SimError::Config(format!("debtrank.psi = {} not in [0, 1]", self.psi)));
        }
        if self.max_steps == Some(0) {
            return Err(SimError::Config("debtrank.max_steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps_for(&self, banks: usize) -> usize {
        self.max_steps.unwrap_or(banks + 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebtRankResult {
    pub h_final: Vec<f64>,
    /// Distress excluding the initial distress of the seed set.
    pub r_excl: f64,
    /// Distress including the initial distress.
    pub r_incl: f64,
    pub steps_taken: usize,
}

/// Single-seed DebtRanks of every bank, both variants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemicImpacts {
    pub r_incl: Vec<f64>,
    pub r_excl: Vec<f64>,
}

/// `W[i][j] = min(1, L[i][j] / C_j)`; a bank with `C_j <= 0` is fully
/// impacted by any positive exposure.
pub fn impact_matrix(l: &Matrix, capital: &[f64]) -> Result<Matrix> {
    check_len(l, capital)?;
    let n = l.dim();
    let mut w = Matrix::zeros(n);
    for i in 0..n {
        for (j, &c) in capital.iter().enumerate() {
            let lij = l.get(i, j);
            if lij > 0.0 {
                w.set(i, j, if c > 0.0 { (lij / c).min(1.0) } else { 1.0 });
            }
        }
    }
    Ok(w)
}

fn check_len(l: &Matrix, capital: &[f64]) -> Result<()> {
    if capital.len() != l.dim() {
        return Err(SimError::LengthMismatch {
            expected: l.dim(),
            got: capital.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum NodeState {
    Undistressed,
    Distressed,
    Inactive,
}

/// Precomputed impact matrix and economic values, reused across seed sets.
pub struct Propagator {
    w: Matrix,
    value: Vec<f64>,
    psi: f64,
    max_steps: usize,
}

impl Propagator {
    pub fn new(l: &Matrix, capital: &[f64], cfg: &DebtRankConfig) -> Result<Self> {
        cfg.validate()?;
        let w = impact_matrix(l, capital)?;
        let value = exposures_and_value(l).value;
        Ok(Propagator {
            max_steps: cfg.steps_for(l.dim()),
            w,
            value,
            psi: cfg.psi,
        })
    }

    pub fn banks(&self) -> usize {
        self.w.dim()
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    /// Synchronous three-state propagation from `seeds`.
    pub fn run(&self, seeds: &[usize]) -> Result<DebtRankResult> {
        let (h, steps_taken) = propagate(&self.w, seeds, self.psi, self.max_steps)?;
        let initial: f64 = seeds.iter().map(|&s| self.psi * self.value[s]).sum();
        let r_incl: f64 = h.iter().zip(&self.value).map(|(a, b)| a * b).sum();
        Ok(DebtRankResult {
            r_excl: r_incl - initial,
            r_incl,
            h_final: h,
            steps_taken,
        })
    }
}

/// Runs the U/D/I dynamics on an impact matrix; returns `h(T)` and the
/// number of steps taken (the initial state counts as step 1).
pub fn propagate(w: &Matrix, seeds: &[usize], psi: f64, max_steps: usize) -> Result<(Vec<f64>, usize)> {
    let n = w.dim();
    if seeds.is_empty() {
        return Err(SimError::EmptyDistressSet);
    }
    let mut h = vec![0.0; n];
    let mut state = vec![NodeState::Undistressed; n];
    for &s in seeds {
        if s >= n {
            return Err(SimError::BankOutOfRange { index: s, banks: n });
        }
        h[s] = psi;
        state[s] = NodeState::Distressed;
    }
    let mut distressed: Vec<usize> = (0..n).filter(|&i| state[i] == NodeState::Distressed).collect();
    let mut inflow = vec![0.0; n];
    let mut t = 1;
    while t < max_steps && !distressed.is_empty() {
        inflow.iter_mut().for_each(|x| *x = 0.0);
        for &j in &distressed {
            let hj = h[j];
            for (i, &wji) in w.row(j).iter().enumerate() {
                if wji > 0.0 {
                    inflow[i] += wji * hj;
                }
            }
        }
        for i in 0..n {
            h[i] = (h[i] + inflow[i]).min(1.0);
        }
        let mut next = Vec::new();
        for i in 0..n {
            state[i] = match state[i] {
                NodeState::Distressed => NodeState::Inactive,
                NodeState::Undistressed if h[i] > 0.0 => {
                    next.push(i);
                    NodeState::Distressed
                }
                s => s,
            };
        }
        distressed = next;
        t += 1;
    }
    Ok((h, t))
}

/// DebtRank of the distressed set `seeds`.
pub fn debtrank(l: &Matrix, capital: &[f64], seeds: &[usize], cfg: &DebtRankConfig) -> Result<DebtRankResult> {
    Propagator::new(l, capital, cfg)?.run(seeds)
}

/// Single-seed DebtRank (`S = {i}`) of every bank.
pub fn debtrank_all(l: &Matrix, capital: &[f64], cfg: &DebtRankConfig) -> Result<SystemicImpacts> {
    let p = Propagator::new(l, capital, cfg)?;
    let mut out = SystemicImpacts::default();
    for i in 0..p.banks() {
        let r = p.run(&[i])?;
        out.r_incl.push(r.r_incl);
        out.r_excl.push(r.r_excl);
    }
    Ok(out)
}

/// Row `i` is the final health vector after the default of bank `i`.
pub fn health_matrix(l: &Matrix, capital: &[f64], cfg: &DebtRankConfig) -> Result<Matrix> {
    let p = Propagator::new(l, capital, cfg)?;
    let n = p.banks();
    let mut h = Matrix::zeros(n);
    for i in 0..n {
        let r = p.run(&[i])?;
        for (j, v) in r.h_final.into_iter().enumerate() {
            h.set(i, j, v);
        }
    }
    Ok(h)
}

/// `V_i = (1/B) sum_j h_ji`: column means of the health matrix, diagonal included.
pub fn average_vulnerability(l: &Matrix, capital: &[f64], cfg: &DebtRankConfig) -> Result<Vec<f64>> {
    let h = health_matrix(l, capital, cfg)?;
    let n = h.dim();
    Ok((0..n).map(|i| h.col_sum(i) / n as f64).collect())
}
