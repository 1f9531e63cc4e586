//! Model configuration: a TOML document with one table per module.
//!
//! ```toml
//! [economy]
//! banks = 20
//! consumption = 0.8
//!
//! [regulation]
//! policy = "baselIII"
//! surcharge_multiplier = 2.0
//!
//! [run]
//! t_max = 500
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::basel::{CapitalPolicy, IndicatorWeights, Regime, WeightsPreset};
use crate::debtrank::DebtRankConfig;
use crate::error::{Result, SimError};
use crate::sysloss::{ProbabilityConfig, RankVariant};

/// Population and behavioural parameters of the economy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconomyConfig {
    pub banks: usize,
    pub firms: usize,
    /// Worker households; one owner household is added per firm and per bank.
    pub workers: usize,
    /// Wage per worker per step (w).
    pub wage: f64,
    /// Goods produced per worker per step (alpha).
    pub productivity: f64,
    /// Share of the account spent each step (c).
    pub consumption: f64,
    /// Firms compared by a shopping household (z).
    pub price_sample: usize,
    /// Banks approached by a borrowing firm (n).
    pub bank_sample: usize,
    /// Fraction of the desired loan requested when the best rate exceeds `rate_max` (phi).
    pub rationing_share: f64,
    /// Threshold rate (r^max).
    pub rate_max: f64,
    /// Share of outstanding debt repaid each step (tau).
    pub repayment: f64,
    pub nominal_rate: f64,
    /// Bank specificity is drawn from U(0, specificity_max) each step.
    pub specificity_max: f64,
    /// Risk premium = slope * min(cap, leverage).
    pub fragility_slope: f64,
    pub fragility_cap: f64,
    /// Largest relative price / quantity adjustment per step.
    pub eta_max: f64,
    pub dividend_share: f64,
    /// Interest-bearing stock of liquidity a firm tries to keep on top of its wage bill,
    /// as a fraction of the wage bill.
    pub liquidity_buffer: f64,
    pub initial_worker_account: f64,
    pub initial_owner_account: f64,
    pub initial_firm_liquidity: f64,
    /// Each firm starts owing this to its own bank, which funded part of
    /// its initial liquidity.
    pub initial_firm_debt: f64,
    pub initial_bank_equity: f64,
    pub initial_price: f64,
    pub initial_demand: f64,
    /// Mutual interbank claims are set off against each other when a bank
    /// defaults; otherwise creditors lose their gross claims.
    pub close_out_netting: bool,
    /// Interbank lending must also fit the lender's capital headroom;
    /// otherwise only its cash limits it.
    pub interbank_capital_check: bool,
}

impl Default for EconomyConfig {
    fn default() -> Self {
        EconomyConfig {
            banks: 20,
            firms: 100,
            workers: 1000,
            wage: 1.0,
            productivity: 3.0,
            consumption: 0.8,
            price_sample: 2,
            bank_sample: 2,
            rationing_share: 0.5,
            rate_max: 0.06,
            repayment: 0.2,
            nominal_rate: 0.02,
            specificity_max: 0.01,
            fragility_slope: 0.01,
            fragility_cap: 5.0,
            eta_max: 0.1,
            dividend_share: 0.2,
            liquidity_buffer: 0.0,
            initial_worker_account: 1.0,
            initial_owner_account: 1.0,
            initial_firm_liquidity: 10.0,
            initial_firm_debt: 0.0,
            initial_bank_equity: 30.0,
            initial_price: 0.4,
            initial_demand: 30.0,
            close_out_netting: true,
            interbank_capital_check: true,
        }
    }
}

/// Regulation regime and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegulationConfig {
    pub policy: Regime,
    pub surcharge_multiplier: f64,
    pub weights_preset: WeightsPreset,
    pub renormalize: bool,
    /// Overrides the regime's base common-equity requirement.
    pub base_requirement: Option<f64>,
    /// Share of the marginal expected systemic loss charged as tax (zeta).
    pub zeta: f64,
    /// DebtRank variant entering the tax quote.
    pub srt_rank: RankVariant,
}

impl Default for RegulationConfig {
    fn default() -> Self {
        RegulationConfig {
            policy: Regime::BaselII,
            surcharge_multiplier: 1.0,
            weights_preset: WeightsPreset::Basel,
            renormalize: true,
            base_requirement: None,
            zeta: 1.0,
            srt_rank: RankVariant::Incl,
        }
    }
}

impl RegulationConfig {
    pub fn capital_policy(&self) -> CapitalPolicy {
        let mut p = CapitalPolicy::new(self.policy, self.surcharge_multiplier);
        if let Some(b) = self.base_requirement {
            p.base = b;
        }
        p
    }

    pub fn weights(&self) -> IndicatorWeights {
        IndicatorWeights::preset(self.weights_preset, self.renormalize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub t_max: usize,
    /// Volume is only reported for runs longer than this.
    pub volume_min_steps: usize,
    /// Time-averaged risk profiles sample every this many steps.
    pub profile_every: usize,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t_max: 500,
            volume_min_steps: 100,
            profile_every: 10,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub economy: EconomyConfig,
    pub regulation: RegulationConfig,
    pub sysloss: ProbabilityConfig,
    pub debtrank: DebtRankConfig,
    pub run: RunConfig,
}

impl ModelConfig {
    /// Parses and validates; errors name the offending key and line.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate_with_source(Some(text))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_source(None)
    }

    fn validate_with_source(&self, source: Option<&str>) -> Result<()> {
        let fail = |section: &str, key: &str, msg: String| -> SimError {
            let line = source.and_then(|s| find_key_line(s, section, key));
            match line {
                Some(n) => SimError::Config(format!("line {n}: {section}.{key}: {msg}")),
                None => SimError::Config(format!("{section}.{key}: {msg}")),
            }
        };
        let e = &self.economy;
        let unit = [
            ("consumption", e.consumption),
            ("rationing_share", e.rationing_share),
            ("repayment", e.repayment),
            ("dividend_share", e.dividend_share),
            ("eta_max", e.eta_max),
        ];
        for (key, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(fail("economy", key, format!("{v} not in [0, 1]")));
            }
        }
        let positive = [
            ("wage", e.wage),
            ("productivity", e.productivity),
            ("initial_price", e.initial_price),
            ("initial_demand", e.initial_demand),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(fail("economy", key, format!("{v} must be > 0")));
            }
        }
        let non_negative = [
            ("rate_max", e.rate_max),
            ("nominal_rate", e.nominal_rate),
            ("specificity_max", e.specificity_max),
            ("fragility_slope", e.fragility_slope),
            ("fragility_cap", e.fragility_cap),
            ("liquidity_buffer", e.liquidity_buffer),
            ("initial_worker_account", e.initial_worker_account),
            ("initial_owner_account", e.initial_owner_account),
            ("initial_firm_liquidity", e.initial_firm_liquidity),
            ("initial_firm_debt", e.initial_firm_debt),
            ("initial_bank_equity", e.initial_bank_equity),
        ];
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(fail("economy", key, format!("{v} must be >= 0")));
            }
        }
        if e.initial_firm_debt > e.initial_firm_liquidity {
            return Err(fail("economy", "initial_firm_debt", "must not exceed initial_firm_liquidity".into()));
        }
        if e.banks < 2 {
            return Err(fail("economy", "banks", "need at least 2 banks".into()));
        }
        if e.firms == 0 {
            return Err(fail("economy", "firms", "need at least 1 firm".into()));
        }
        if e.price_sample == 0 {
            return Err(fail("economy", "price_sample", "must be >= 1".into()));
        }
        if e.bank_sample == 0 || e.bank_sample > e.banks {
            return Err(fail("economy", "bank_sample", format!("must be in 1..={}", e.banks)));
        }
        let r = &self.regulation;
        if !(r.surcharge_multiplier.is_finite() && r.surcharge_multiplier >= 0.0) {
            return Err(fail("regulation", "surcharge_multiplier", "must be >= 0".into()));
        }
        if !(r.zeta.is_finite() && r.zeta >= 0.0) {
            return Err(fail("regulation", "zeta", "must be >= 0".into()));
        }
        if let Some(b) = r.base_requirement {
            if !(0.0..1.0).contains(&b) {
                return Err(fail("regulation", "base_requirement", format!("{b} not in [0, 1)")));
            }
        }
        self.sysloss.validate()?;
        self.debtrank.validate()?;
        if self.run.t_max == 0 {
            return Err(fail("run", "t_max", "must be >= 1".into()));
        }
        if self.run.profile_every == 0 {
            return Err(fail("run", "profile_every", "must be >= 1".into()));
        }
        Ok(())
    }
}

/// 1-based line of `key = ...` inside `[section]`.
fn find_key_line(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(n + 1);
                }
            }
        }
    }
    None
}
