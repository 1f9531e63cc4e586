use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Worker,
    FirmOwner(usize),
    BankOwner(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Household {
    /// Bank holding the account.
    pub bank: usize,
    pub account: f64,
    pub role: Role,
    pub employer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirmLoan {
    pub bank: usize,
    pub outstanding: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firm {
    pub owner: usize,
    /// Bank holding the firm's deposit.
    pub bank: usize,
    pub liquidity: f64,
    pub price: f64,
    pub expected_demand: f64,
    pub workers: Vec<usize>,
    pub loans: Vec<FirmLoan>,
    pub labour_demand: usize,
    pub produced: f64,
    pub inventory: f64,
    pub sold: f64,
    pub revenue: f64,
    pub wage_bill: f64,
    pub interest_paid: f64,
    /// Went bankrupt this step; the owner restarts it at the next one.
    pub bankrupt: bool,
}

impl Firm {
    pub fn debt(&self) -> f64 {
        self.loans.iter().map(|l| l.outstanding).sum()
    }

    /// Principal plus interest due this step on every loan.
    pub fn debt_service(&self, repayment: f64) -> f64 {
        self.loans.iter().map(|l| amortize(l.outstanding, l.rate, repayment).0).sum()
    }

    pub fn fragility(&self) -> f64 {
        self.debt() / self.liquidity.max(1e-9)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bank {
    pub owner: usize,
    /// Reserves. Payments between clients of different banks move them.
    pub cash: f64,
    pub equity: f64,
    pub firm_loans: f64,
    /// Sum of client accounts and firm liquidity held here.
    pub deposits: f64,
    pub specificity: f64,
    /// Payment volume routed through the bank this step.
    pub payments: f64,
    /// Profit since the last dividend.
    pub profit: f64,
    pub alive: bool,
}

/// One amortization step: returns (payment, remaining outstanding).
/// Tiny remainders are repaid in full.
pub fn amortize(outstanding: f64, rate: f64, repayment: f64) -> (f64, f64) {
    let principal = if outstanding * (1.0 - repayment) < 1e-6 { outstanding } else { repayment * outstanding };
    (principal * (1.0 + rate), outstanding - principal)
}

/// Splits `pool` among `claims` in proportion, never paying more than the
/// total claim. Returns the recovery per claim.
pub fn pro_rata(pool: f64, claims: &[f64]) -> Vec<f64> {
    let total: f64 = claims.iter().sum();
    if total <= 0.0 {
        return vec![0.0; claims.len()];
    }
    let paid = pool.clamp(0.0, total);
    claims.iter().map(|c| paid * c / total).collect()
}

/// Risk premium, monotone in fragility and capped.
pub fn fragility_premium(fragility: f64, slope: f64, cap: f64) -> f64 {
    slope * fragility.clamp(0.0, cap)
}

/// Volume requested after the rate check.
pub fn requested_volume(desired: f64, best_rate: f64, rate_max: f64, rationing_share: f64) -> f64 {
    if best_rate > rate_max {
        rationing_share * desired
    } else {
        desired
    }
}

/// Lowest offered rate; ties go to the earlier offer.
pub fn best_offer(offers: &[(usize, f64)]) -> Option<(usize, f64)> {
    offers
        .iter()
        .copied()
        .fold(None, |best, o| match best {
            Some((_, r)) if r <= o.1 => best,
            _ => Some(o),
        })
}
