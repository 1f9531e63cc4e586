//! Basel indicator scores, G-SIB buckets and capital requirements.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::netcore::LiabilityNetwork;

/// Implemented indicators, in row order of the indicator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indicator {
    Size = 0,
    InterbankAssets = 1,
    InterbankLiabilities = 2,
    SecuritiesOutstanding = 3,
    Payments = 4,
}

pub const INDICATORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightsPreset {
    #[default]
    Basel,
    LiabilitiesOnly,
    AssetsOnly,
}

impl std::str::FromStr for WeightsPreset {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basel" => Ok(WeightsPreset::Basel),
            "liabilities-only" => Ok(WeightsPreset::LiabilitiesOnly),
            "assets-only" => Ok(WeightsPreset::AssetsOnly),
            other => Err(SimError::Config(format!(
                "unknown weights preset '{other}' (expected basel|liabilities-only|assets-only)"
            ))),
        }
    }
}

/// Indicator weights. The categories the model does not populate
/// (cross-jurisdictional activity, complexity, and the substitutability
/// indicators other than payments) are carried at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorWeights {
    pub beta: [f64; INDICATORS],
    pub renormalized: bool,
}

impl IndicatorWeights {
    pub fn preset(preset: WeightsPreset, renormalize: bool) -> Self {
        let beta = match (preset, renormalize) {
            // three populated categories at 1/3 each, split evenly inside
            (WeightsPreset::Basel, true) => [1.0 / 3.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 3.0],
            // table weights as published, zeroed categories dropped
            (WeightsPreset::Basel, false) => [0.2, 0.2 / 3.0, 0.2 / 3.0, 0.2 / 3.0, 0.2 / 3.0],
            (WeightsPreset::LiabilitiesOnly, _) => [0.0, 0.0, 1.0, 0.0, 0.0],
            (WeightsPreset::AssetsOnly, _) => [0.0, 1.0, 0.0, 0.0, 0.0],
        };
        let renormalized = renormalize || preset != WeightsPreset::Basel;
        IndicatorWeights { beta, renormalized }
    }

    pub fn total(&self) -> f64 {
        self.beta.iter().sum()
    }
}

/// Indicator matrix: `values[indicator][bank]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    pub values: [Vec<f64>; INDICATORS],
}

impl IndicatorMatrix {
    pub fn get(&self, ind: Indicator, bank: usize) -> f64 {
        self.values[ind as usize][bank]
    }
}

/// Size (firm loans plus interbank assets, cash excluded), interbank assets
/// and liabilities from the gross matrix, payments from the step's outflows.
/// Securities outstanding are zero in this model.
pub fn indicator_values(firm_loans: &[f64], payments: &[f64], net: &LiabilityNetwork) -> Result<IndicatorMatrix> {
    let b = net.banks();
    for len in [firm_loans.len(), payments.len()] {
        if len != b {
            return Err(SimError::LengthMismatch { expected: b, got: len });
        }
    }
    let assets = net.interbank_assets();
    let liabilities = net.interbank_liabilities();
    let size = firm_loans.iter().zip(&assets).map(|(f, a)| f + a).collect();
    Ok(IndicatorMatrix {
        values: [size, assets, liabilities, vec![0.0; b], payments.to_vec()],
    })
}

/// Scores in basis points: `S_j = sum_i beta_i D_ij / sum_k D_ik * 10000`.
/// An indicator whose column total is zero contributes nothing.
pub fn score(d: &IndicatorMatrix, weights: &IndicatorWeights) -> Vec<f64> {
    let b = d.values[0].len();
    let mut s = vec![0.0; b];
    for (row, &beta) in d.values.iter().zip(&weights.beta) {
        let total: f64 = row.iter().sum();
        if beta == 0.0 || total <= 0.0 {
            continue;
        }
        for (sj, x) in s.iter_mut().zip(row) {
            *sj += beta * x / total * 10_000.0;
        }
    }
    s
}

/// G-SIB bucket table: cutoff 130 bp, 100 bp bands.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTable {
    pub cutoff: f64,
    pub width: f64,
    /// Surcharges (percent of RWA) of the published buckets 1..=5.
    pub surcharges: Vec<f64>,
    /// Surcharge increment of every bucket beyond the last published one.
    pub extension_step: f64,
}

impl Default for BucketTable {
    fn default() -> Self {
        BucketTable {
            cutoff: 130.0,
            width: 100.0,
            surcharges: vec![1.0, 1.5, 2.0, 2.5, 3.5],
            extension_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bucket {
    /// 0 below the cutoff.
    pub id: usize,
    /// Percent of RWA.
    pub surcharge: f64,
}

pub fn bucket_assign(score: f64, table: &BucketTable) -> Bucket {
    if !(score >= table.cutoff) {
        return Bucket { id: 0, surcharge: 0.0 };
    }
    let id = ((score - table.cutoff) / table.width).floor() as usize + 1;
    let published = table.surcharges.len();
    let surcharge = if id <= published {
        table.surcharges[id - 1]
    } else {
        table.surcharges[published - 1] + (id - published) as f64 * table.extension_step
    };
    Bucket { id, surcharge }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    #[serde(rename = "baselII")]
    #[default]
    BaselII,
    #[serde(rename = "baselIII")]
    BaselIII,
    Srt,
}

impl std::str::FromStr for Regime {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baselII" => Ok(Regime::BaselII),
            "baselIII" => Ok(Regime::BaselIII),
            "srt" => Ok(Regime::Srt),
            other => Err(SimError::Config(format!("unknown policy '{other}' (expected baselII|baselIII|srt)"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::BaselII => "baselII",
            Regime::BaselIII => "baselIII",
            Regime::Srt => "srt",
        })
    }
}

/// Common-equity requirement of a regime.
#[derive(Debug, Clone, PartialEq)]
pub struct CapitalPolicy {
    pub regime: Regime,
    /// Fraction of RWA.
    pub base: f64,
    pub surcharge_multiplier: f64,
    pub buckets: BucketTable,
}

impl CapitalPolicy {
    pub const BASEL_II_BASE: f64 = 0.02;
    pub const BASEL_III_BASE: f64 = 0.045;

    /// Basel II and the tax regime hold 2%; Basel III holds 4.5% plus surcharges.
    pub fn new(regime: Regime, surcharge_multiplier: f64) -> Self {
        let base = match regime {
            Regime::BaselIII => Self::BASEL_III_BASE,
            Regime::BaselII | Regime::Srt => Self::BASEL_II_BASE,
        };
        CapitalPolicy {
            regime,
            base,
            surcharge_multiplier,
            buckets: BucketTable::default(),
        }
    }

    pub fn applies_surcharges(&self) -> bool {
        self.regime == Regime::BaselIII
    }
}

/// `base + mu * surcharge(score)`; surcharges only under Basel III.
pub fn required_equity_fraction(policy: &CapitalPolicy, score: f64) -> f64 {
    if !policy.applies_surcharges() {
        return policy.base;
    }
    policy.base + policy.surcharge_multiplier * bucket_assign(score, &policy.buckets).surcharge / 100.0
}

/// Risk-weighted assets: firm and interbank loans at 100%, cash at 0%.
pub fn rwa(firm_loans: f64, interbank_assets: f64) -> f64 {
    firm_loans + interbank_assets
}

/// Largest additional RWA keeping `equity / (rwa + x) >= required`.
pub fn lending_headroom(equity: f64, rwa: f64, required: f64) -> f64 {
    if equity <= 0.0 {
        return 0.0;
    }
    if required <= 0.0 {
        return f64::INFINITY;
    }
    (equity / required - rwa).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::Matrix;

    #[test]
    fn indicators() {
        let net = LiabilityNetwork::from_matrix(&Matrix::from_rows(&[vec![0., 80.], vec![0., 0.]])).unwrap();
        let d = indicator_values(&[0.0, 0.0], &[0.0, 20.0], &net).unwrap();
        // bank 0 holds only cash
        assert_eq!(d.get(Indicator::Size, 0), 0.0);
        assert_eq!(d.get(Indicator::Size, 1), 80.0);
        assert_eq!(d.get(Indicator::InterbankAssets, 1), 80.0);
        assert_eq!(d.get(Indicator::InterbankLiabilities, 1), 0.0);
        assert_eq!(d.get(Indicator::InterbankLiabilities, 0), 80.0);
        assert_eq!(d.get(Indicator::Payments, 1), 20.0);
        assert_eq!(d.get(Indicator::SecuritiesOutstanding, 1), 0.0);
        assert!(indicator_values(&[0.0], &[0.0, 0.0], &net).is_err());
    }

    #[test]
    fn scores() {
        let w = IndicatorWeights::preset(WeightsPreset::Basel, true);
        assert!((w.total() - 1.0).abs() < 1e-15);
        let same = IndicatorMatrix {
            values: [vec![5.0; 4], vec![1.0; 4], vec![2.0; 4], vec![4.0; 4], vec![3.0; 4]],
        };
        for s in score(&same, &w) {
            assert!((s - 2500.0).abs() < 1e-9);
        }
        let size_only = IndicatorWeights { beta: [1.0, 0.0, 0.0, 0.0, 0.0], renormalized: true };
        let d = IndicatorMatrix {
            values: [vec![200.0, 300.0, 500.0], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
        };
        let s = score(&d, &size_only);
        assert!((s[0] - 2000.0).abs() < 1e-9 && (s[1] - 3000.0).abs() < 1e-9 && (s[2] - 5000.0).abs() < 1e-9);
        // zero denominators contribute nothing
        let s = score(&d, &w);
        assert!((s.iter().sum::<f64>() - 10_000.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn literal_weights() {
        let w = IndicatorWeights::preset(WeightsPreset::Basel, false);
        assert!(!w.renormalized);
        assert!((w.total() - (0.2 + 4.0 * 0.2 / 3.0)).abs() < 1e-15);
        assert_eq!(IndicatorWeights::preset(WeightsPreset::AssetsOnly, true).beta[1], 1.0);
        assert_eq!(IndicatorWeights::preset(WeightsPreset::LiabilitiesOnly, true).beta[2], 1.0);
    }

    #[test]
    fn buckets() {
        let t = BucketTable::default();
        assert_eq!(bucket_assign(150.0, &t), Bucket { id: 1, surcharge: 1.0 });
        assert_eq!(bucket_assign(560.0, &t), Bucket { id: 5, surcharge: 3.5 });
        assert_eq!(bucket_assign(129.0, &t), Bucket { id: 0, surcharge: 0.0 });
        assert_eq!(bucket_assign(129.999, &t).id, 0);
        assert_eq!(bucket_assign(700.0, &t), Bucket { id: 6, surcharge: 4.5 });
        assert_eq!(bucket_assign(730.0, &t), Bucket { id: 7, surcharge: 5.5 });
        assert_eq!(bucket_assign(f64::NAN, &t).id, 0);
    }

    #[test]
    fn requirements() {
        let b2 = CapitalPolicy::new(Regime::BaselII, 3.0);
        for s in [0.0, 150.0, 5000.0] {
            assert_eq!(required_equity_fraction(&b2, s), 0.02);
        }
        let b3 = CapitalPolicy::new(Regime::BaselIII, 1.0);
        assert!((required_equity_fraction(&b3, 150.0) - 0.055).abs() < 1e-15);
        let b3x2 = CapitalPolicy::new(Regime::BaselIII, 2.0);
        assert!((required_equity_fraction(&b3x2, 560.0) - 0.115).abs() < 1e-15);
        let b3x0 = CapitalPolicy::new(Regime::BaselIII, 0.0);
        assert_eq!(required_equity_fraction(&b3x0, 900.0), 0.045);
        assert_eq!(CapitalPolicy::new(Regime::Srt, 1.0).base, 0.02);
    }

    #[test]
    fn rwa_and_headroom() {
        assert_eq!(rwa(0.0, 0.0), 0.0);
        assert_eq!(rwa(100.0, 50.0), 150.0);
        assert!((lending_headroom(10.0, 100.0, 0.05) - 100.0).abs() < 1e-9);
        assert_eq!(lending_headroom(2.0, 100.0, 0.02), 0.0);
        assert_eq!(lending_headroom(0.0, 0.0, 0.02), 0.0);
        assert_eq!(lending_headroom(-3.0, 0.0, 0.02), 0.0);
    }

    #[test]
    fn rwa_equals_size_indicator() {
        let net = LiabilityNetwork::from_matrix(&Matrix::from_rows(&[vec![0., 50.], vec![7., 0.]])).unwrap();
        let firm = [100.0, 20.0];
        let d = indicator_values(&firm, &[0.0, 0.0], &net).unwrap();
        let assets = net.interbank_assets();
        for b in 0..2 {
            assert_eq!(rwa(firm[b], assets[b]), d.get(Indicator::Size, b));
        }
    }
}
