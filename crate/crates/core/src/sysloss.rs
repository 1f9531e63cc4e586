//! Expected systemic loss, marginal contributions of liabilities and loans,
//! and systemic risk tax quotes.

use serde::{Deserialize, Serialize};

use crate::debtrank::{debtrank_all, impact_matrix, propagate, DebtRankConfig};
use crate::error::{Result, SimError};
use crate::netcore::{exposures_and_value, with_liability, LiabilityNetwork, LoanRecord, Matrix};

/// Which single-seed DebtRank enters the expected loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankVariant {
    /// Includes the direct loss of the seed bank.
    #[default]
    Incl,
    /// Contagion only.
    Excl,
}

/// Per-bank one-step default probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultProbabilities(Vec<f64>);

impl DefaultProbabilities {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(SimError::Config(format!("default probability {bad} not in [0, 1]")));
        }
        Ok(DefaultProbabilities(p))
    }

    pub fn uniform(banks: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; banks])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `EL = V * sum_i p_i R_i` on the matrix as given.
pub fn expected_loss_on(l: &Matrix, capital: &[f64], p: &DefaultProbabilities, variant: RankVariant) -> Result<f64> {
    if p.0.len() != l.dim() {
        return Err(SimError::LengthMismatch {
            expected: l.dim(),
            got: p.0.len(),
        });
    }
    let total = exposures_and_value(l).total;
    if total == 0.0 || p.0.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let ranks = debtrank_all(l, capital, &DebtRankConfig::default())?;
    let r = match variant {
        RankVariant::Incl => &ranks.r_incl,
        RankVariant::Excl => &ranks.r_excl,
    };
    Ok(total * p.0.iter().zip(r).map(|(a, b)| a * b).sum::<f64>())
}

/// Expected systemic loss of the network, computed on its net liabilities.
pub fn expected_systemic_loss(net: &LiabilityNetwork, capital: &[f64], p: &DefaultProbabilities) -> Result<f64> {
    expected_loss_on(&net.net_liabilities(), capital, p, RankVariant::Incl)
}

/// `EL(net(L + amount at (m, n))) - EL(net(L))`: the hypothetical liability
/// is added to the net matrix and the result is netted again, so a loan
/// against an existing opposite exposure lowers the expected loss.
pub fn marginal_el_liability(
    net: &LiabilityNetwork,
    capital: &[f64],
    p: &DefaultProbabilities,
    m: usize,
    n: usize,
    amount: f64,
) -> Result<f64> {
    marginal_el_on(&net.net_liabilities(), capital, p, m, n, amount, RankVariant::Incl)
}

/// Marginal expected loss relative to an already-netted matrix `base`.
pub fn marginal_el_on(
    base: &Matrix,
    capital: &[f64],
    p: &DefaultProbabilities,
    m: usize,
    n: usize,
    amount: f64,
    variant: RankVariant,
) -> Result<f64> {
    let after = with_liability(base, m, n, amount)?.netted();
    if amount == 0.0 {
        return Ok(0.0);
    }
    Ok(expected_loss_on(&after, capital, p, variant)? - expected_loss_on(base, capital, p, variant)?)
}

pub fn marginal_el_loan(net: &LiabilityNetwork, capital: &[f64], p: &DefaultProbabilities, loan: &LoanRecord) -> Result<f64> {
    marginal_el_liability(net, capital, p, loan.borrower, loan.lender, loan.principal)
}

/// Single-seed propagations on a fixed net matrix, cached so that the
/// marginal loss of one extra liability only re-runs the seeds whose
/// distress reaches either end of the new edge.
#[derive(Debug, Clone)]
pub struct MarginalEngine {
    base: Matrix,
    capital: Vec<f64>,
    p: Vec<f64>,
    variant: RankVariant,
    w: Matrix,
    exposure: Vec<f64>,
    health: Vec<Vec<f64>>,
    contrib: Vec<f64>,
    el: f64,
}

impl MarginalEngine {
    /// `base` must already be netted.
    pub fn new(base: Matrix, capital: &[f64], p: &DefaultProbabilities, variant: RankVariant) -> Result<Self> {
        let n = base.dim();
        if p.0.len() != n {
            return Err(SimError::LengthMismatch { expected: n, got: p.0.len() });
        }
        let w = impact_matrix(&base, capital)?;
        let exposure = exposures_and_value(&base).exposure;
        let mut health = Vec::with_capacity(n);
        let mut contrib = Vec::with_capacity(n);
        for s in 0..n {
            let (h, _) = propagate(&w, &[s], 1.0, n + 2)?;
            contrib.push(seed_loss(&h, &exposure, s, p.0[s], variant));
            health.push(h);
        }
        let el = contrib.iter().sum();
        Ok(MarginalEngine {
            base,
            capital: capital.to_vec(),
            p: p.0.clone(),
            variant,
            w,
            exposure,
            health,
            contrib,
            el,
        })
    }

    pub fn expected_loss(&self) -> f64 {
        self.el
    }

    /// Same value as [`marginal_el_on`] up to rounding.
    pub fn marginal(&self, m: usize, n: usize, amount: f64) -> Result<f64> {
        let b = self.base.dim();
        if m >= b || n >= b {
            return Err(SimError::BankOutOfRange { index: m.max(n), banks: b });
        }
        if m == n {
            return Err(SimError::SelfLoan(m));
        }
        if !(amount.is_finite() && amount >= 0.0) {
            return Err(SimError::InvalidAmount(amount));
        }
        if amount == 0.0 {
            return Ok(0.0);
        }
        let fwd = self.base.get(m, n) + amount;
        let back = self.base.get(n, m);
        let new_mn = (fwd - back).max(0.0);
        let new_nm = (back - fwd).max(0.0);
        let mut w = self.w.clone();
        w.set(m, n, self.impact(new_mn, n));
        w.set(n, m, self.impact(new_nm, m));
        let mut exposure = self.exposure.clone();
        exposure[n] += new_mn - self.base.get(m, n);
        exposure[m] += new_nm - back;

        let mut delta = 0.0;
        for s in 0..b {
            let h = &self.health[s];
            if s != m && s != n && h[m] == 0.0 && h[n] == 0.0 {
                continue;
            }
            let (h2, _) = propagate(&w, &[s], 1.0, b + 2)?;
            delta += seed_loss(&h2, &exposure, s, self.p[s], self.variant) - self.contrib[s];
        }
        Ok(delta)
    }

    fn impact(&self, l: f64, lender: usize) -> f64 {
        if l <= 0.0 {
            0.0
        } else if self.capital[lender] > 0.0 {
            (l / self.capital[lender]).min(1.0)
        } else {
            1.0
        }
    }
}

// p_s * V * R_s, with V * v_k = L_k
fn seed_loss(h: &[f64], exposure: &[f64], seed: usize, p: f64, variant: RankVariant) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let mut acc: f64 = h.iter().zip(exposure).map(|(a, b)| a * b).sum();
    if variant == RankVariant::Excl {
        acc -= exposure[seed];
    }
    p * acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrtQuote {
    pub loan_id: u64,
    pub borrower: usize,
    pub lender: usize,
    pub principal: f64,
    pub delta_el: f64,
    pub tax: f64,
    pub zeta: f64,
}

/// `tax = zeta * max(0, delta EL)`.
pub fn tax_from_delta(delta_el: f64, zeta: f64) -> f64 {
    zeta * delta_el.max(0.0)
}

pub fn srt_quote(
    net: &LiabilityNetwork,
    capital: &[f64],
    p: &DefaultProbabilities,
    loan: &LoanRecord,
    zeta: f64,
) -> Result<SrtQuote> {
    if !(zeta.is_finite() && zeta >= 0.0) {
        return Err(SimError::Config(format!("zeta = {zeta} must be >= 0")));
    }
    let delta_el = marginal_el_loan(net, capital, p, loan)?;
    Ok(SrtQuote {
        loan_id: loan.id,
        borrower: loan.borrower,
        lender: loan.lender,
        principal: loan.principal,
        delta_el,
        tax: tax_from_delta(delta_el, zeta),
        zeta,
    })
}

/// How default probabilities are produced for the expected loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbabilityConfig {
    /// When set, every bank gets this probability.
    pub constant: Option<f64>,
    /// EWMA smoothing weight on the previous estimate.
    pub lambda: f64,
    pub floor: f64,
}

impl Default for ProbabilityConfig {
    fn default() -> Self {
        ProbabilityConfig {
            constant: Some(0.01),
            lambda: 0.99,
            floor: 1e-4,
        }
    }
}

impl ProbabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.constant {
            if !(0.0..=1.0).contains(&c) {
                return Err(SimError::Config(format!("sysloss.constant = {c} not in [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(SimError::Config(format!("sysloss.lambda = {} not in [0, 1]", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.floor) {
            return Err(SimError::Config(format!("sysloss.floor = {} not in [0, 1]", self.floor)));
        }
        Ok(())
    }
}

/// Observed bank-default frequency per step, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefaultHistory {
    pub frequencies: Vec<f64>,
}

impl DefaultHistory {
    pub fn record(&mut self, defaults: usize, banks: usize) {
        self.frequencies.push(if banks == 0 { 0.0 } else { defaults as f64 / banks as f64 });
    }
}

/// Uniform probabilities: the constant override, or an EWMA of the
/// population default frequency started at the floor.
pub fn estimate_default_probabilities(history: &DefaultHistory, banks: usize, cfg: &ProbabilityConfig) -> Result<DefaultProbabilities> {
    cfg.validate()?;
    let p = match cfg.constant {
        Some(c) => c,
        None => {
            let mut p = cfg.floor;
            for f in &history.frequencies {
                p = cfg.lambda * p + (1.0 - cfg.lambda) * f;
            }
            p.clamp(cfg.floor, 1.0)
        }
    };
    DefaultProbabilities::uniform(banks, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bank() -> LiabilityNetwork {
        LiabilityNetwork::from_matrix(&Matrix::from_rows(&[vec![0., 80.], vec![0., 0.]])).unwrap()
    }

    fn p05() -> DefaultProbabilities {
        DefaultProbabilities::uniform(2, 0.05).unwrap()
    }

    #[test]
    fn el_examples() {
        let c = [100.0, 100.0];
        let el = expected_systemic_loss(&two_bank(), &c, &p05()).unwrap();
        assert!((el - 7.2).abs() < 1e-12);
        let zero = DefaultProbabilities::uniform(2, 0.0).unwrap();
        assert_eq!(expected_systemic_loss(&two_bank(), &c, &zero).unwrap(), 0.0);
        assert_eq!(expected_systemic_loss(&LiabilityNetwork::new(2), &c, &p05()).unwrap(), 0.0);
    }

    #[test]
    fn marginal_examples() {
        let c = [100.0, 100.0];
        let empty = LiabilityNetwork::new(2);
        assert_eq!(marginal_el_liability(&empty, &c, &p05(), 0, 1, 0.0).unwrap(), 0.0);
        let d = marginal_el_liability(&empty, &c, &p05(), 0, 1, 80.0).unwrap();
        assert!((d - 7.2).abs() < 1e-12);
        // a back-loan netting against a larger exposure reduces EL
        let d = marginal_el_liability(&two_bank(), &c, &p05(), 1, 0, 30.0).unwrap();
        assert!(d <= 0.0, "{d}");
        assert!(marginal_el_liability(&empty, &c, &p05(), 1, 1, 3.0).is_err());
    }

    #[test]
    fn quote_examples() {
        let c = [100.0, 100.0];
        let empty = LiabilityNetwork::new(2);
        let loan = LoanRecord {
            id: 3,
            borrower: 0,
            lender: 1,
            principal: 80.0,
            rate: 0.02,
            outstanding: 80.0,
        };
        let q = srt_quote(&empty, &c, &p05(), &loan, 1.0).unwrap();
        assert!((q.tax - 7.2).abs() < 1e-12);
        assert_eq!(q.loan_id, 3);
        assert_eq!(srt_quote(&empty, &c, &p05(), &loan, 0.0).unwrap().tax, 0.0);
        let back = LoanRecord { borrower: 1, lender: 0, principal: 30.0, ..loan };
        let q = srt_quote(&two_bank(), &c, &p05(), &back, 1.0).unwrap();
        assert_eq!(q.tax, 0.0);
        assert!(srt_quote(&empty, &c, &p05(), &back, -1.0).is_err());
    }

    #[test]
    fn engine_matches_direct_marginal() {
        let base = Matrix::from_rows(&[vec![0., 80., 0.], vec![0., 0., 40.], vec![10., 0., 0.]]).netted();
        let c = [100.0, 40.0, 100.0];
        let p = DefaultProbabilities::new(vec![0.05, 0.1, 0.02]).unwrap();
        for variant in [RankVariant::Incl, RankVariant::Excl] {
            let eng = MarginalEngine::new(base.clone(), &c, &p, variant).unwrap();
            let el = expected_loss_on(&base, &c, &p, variant).unwrap();
            assert!((eng.expected_loss() - el).abs() < 1e-9);
            for (m, n, a) in [(0, 1, 5.0), (1, 0, 30.0), (1, 0, 100.0), (2, 1, 7.0), (0, 2, 0.0)] {
                let direct = marginal_el_on(&base, &c, &p, m, n, a, variant).unwrap();
                let fast = eng.marginal(m, n, a).unwrap();
                assert!((direct - fast).abs() < 1e-9, "{m}->{n} {a}: {direct} vs {fast}");
            }
        }
    }

    #[test]
    fn probability_estimates() {
        let mut hist = DefaultHistory::default();
        let cfg = ProbabilityConfig::default();
        let p = estimate_default_probabilities(&hist, 20, &cfg).unwrap();
        assert_eq!(p.as_slice(), &[0.01; 20]);

        let ewma = ProbabilityConfig { constant: None, ..cfg };
        let p = estimate_default_probabilities(&hist, 20, &ewma).unwrap();
        assert_eq!(p.as_slice(), &[1e-4; 20]);

        hist.record(1, 20);
        let p = estimate_default_probabilities(&hist, 20, &ewma).unwrap();
        let expected = 0.99 * 1e-4 + 0.01 * (1.0 / 20.0);
        assert!((p.as_slice()[0] - expected).abs() < 1e-15);
    }
}
