//! Agent-based economy: households, firms and banks trading on the credit,
//! interbank, labour and goods markets.
//!
//! Money is held as deposits. Every account and every firm's liquidity
//! sits at one bank; a payment between clients of different banks moves
//! reserves (`Bank::cash`) between those banks. Loans create deposits, so the
//! only conserved stock is reserves. The tax fund is a depositor too.

pub mod agents;
pub mod contagion;
pub mod planning;
mod run;
pub mod trace;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basel::{indicator_values, lending_headroom, required_equity_fraction, rwa, score, CapitalPolicy, IndicatorWeights, Regime};
use crate::config::ModelConfig;
use crate::debtrank::{average_vulnerability, debtrank_all, DebtRankConfig};
use crate::error::{Result, SimError};
use crate::netcore::{LiabilityNetwork, Matrix};
use crate::sysloss::{estimate_default_probabilities, DefaultHistory, DefaultProbabilities, MarginalEngine};

pub use agents::{amortize, best_offer, fragility_premium, pro_rata, requested_volume, Bank, Firm, FirmLoan, Household, Role};
pub use contagion::{cascade_losses, choose_lender, resolve_cascade, LenderQuote};
pub use planning::{labour_demand, plan, MarketStats, Plan, PlanInput};
pub use run::{run_simulation, run_with_trace, RunResult};
pub use trace::{write_trace_csv, EventKind, TraceEvent};

const DUST: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Principal of interbank loans originated this step.
    pub interbank_volume: f64,
    pub firm_defaults: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub step: usize,
    /// Defaulted banks, ascending.
    pub defaults: Vec<usize>,
    /// Banks failing on their own before contagion.
    pub initial: usize,
    /// Interbank liabilities of the defaulted banks, net of set-off when
    /// close-out netting is on.
    pub losses: f64,
    /// Deposits frozen at the defaulted banks.
    pub household_losses: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Continue(StepReport),
    Terminal(StepReport, Cascade),
}

#[derive(Debug, Clone)]
pub struct Economy {
    cfg: ModelConfig,
    policy: CapitalPolicy,
    weights: IndicatorWeights,
    pub households: Vec<Household>,
    pub firms: Vec<Firm>,
    pub banks: Vec<Bank>,
    pub network: LiabilityNetwork,
    rng: ChaCha8Rng,
    t: usize,
    /// Tax fund deposits per bank.
    fund: Vec<f64>,
    reserves: f64,
    scores: Vec<f64>,
    requirements: Vec<f64>,
    probabilities: DefaultProbabilities,
    history: DefaultHistory,
    stats: MarketStats,
    step_volume: f64,
    trace: Option<Vec<TraceEvent>>,
}

/// Moves `amount` of deposits (and the matching reserves) between banks.
fn transfer(banks: &mut [Bank], from: usize, to: usize, amount: f64) {
    banks[from].cash -= amount;
    banks[from].deposits -= amount;
    banks[from].payments += amount;
    banks[to].cash += amount;
    banks[to].deposits += amount;
    if to != from {
        banks[to].payments += amount;
    }
}

impl Economy {
    pub fn new(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let e = &cfg.economy;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = e.banks;
        let mut households = Vec::with_capacity(e.workers + e.firms + b);
        for h in 0..e.workers + e.firms + b {
            let role = if h < e.workers {
                Role::Worker
            } else if h < e.workers + e.firms {
                Role::FirmOwner(h - e.workers)
            } else {
                Role::BankOwner(h - e.workers - e.firms)
            };
            let account = if role == Role::Worker { e.initial_worker_account } else { e.initial_owner_account };
            households.push(Household {
                bank: rng.gen_range(0..b),
                account,
                role,
                employer: None,
            });
        }
        let mut firms: Vec<Firm> = (0..e.firms)
            .map(|i| Firm {
                owner: e.workers + i,
                bank: rng.gen_range(0..b),
                liquidity: e.initial_firm_liquidity,
                price: e.initial_price,
                expected_demand: e.initial_demand,
                workers: Vec::new(),
                loans: Vec::new(),
                labour_demand: 0,
                produced: 0.0,
                inventory: 0.0,
                sold: 0.0,
                revenue: 0.0,
                wage_bill: 0.0,
                interest_paid: 0.0,
                bankrupt: false,
            })
            .collect();
        let mut banks: Vec<Bank> = (0..b)
            .map(|j| Bank {
                owner: e.workers + e.firms + j,
                cash: e.initial_bank_equity,
                equity: e.initial_bank_equity,
                firm_loans: 0.0,
                deposits: 0.0,
                specificity: 0.0,
                payments: 0.0,
                profit: 0.0,
                alive: true,
            })
            .collect();
        for h in &households {
            banks[h.bank].deposits += h.account;
            banks[h.bank].cash += h.account;
        }
        for f in &mut firms {
            banks[f.bank].deposits += f.liquidity;
            banks[f.bank].cash += f.liquidity - e.initial_firm_debt;
            if e.initial_firm_debt > 0.0 {
                banks[f.bank].firm_loans += e.initial_firm_debt;
                f.loans.push(FirmLoan {
                    bank: f.bank,
                    outstanding: e.initial_firm_debt,
                    rate: e.nominal_rate,
                });
            }
        }
        let reserves = banks.iter().map(|b| b.cash).sum();
        Ok(Economy {
            policy: cfg.regulation.capital_policy(),
            weights: cfg.regulation.weights(),
            households,
            firms,
            banks,
            network: LiabilityNetwork::new(b),
            rng,
            t: 0,
            fund: vec![0.0; b],
            reserves,
            scores: vec![0.0; b],
            requirements: vec![0.0; b],
            probabilities: DefaultProbabilities::uniform(b, 0.0)?,
            history: DefaultHistory::default(),
            stats: MarketStats {
                avg_price: e.initial_price,
                avg_demand: e.initial_demand,
            },
            step_volume: 0.0,
            trace: None,
            cfg: cfg.clone(),
        })
    }

    /// Starts recording the event log.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.take().unwrap_or_default()
    }

    pub fn step_count(&self) -> usize {
        self.t
    }

    pub fn fund(&self) -> f64 {
        self.fund.iter().sum()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn requirements(&self) -> &[f64] {
        &self.requirements
    }

    pub fn market_stats(&self) -> MarketStats {
        self.stats
    }

    pub fn equity(&self) -> Vec<f64> {
        self.banks.iter().map(|b| b.equity).collect()
    }

    fn log(&mut self, event: EventKind, agent: usize, counterparty: Option<usize>, amount: f64) {
        if let Some(tr) = &mut self.trace {
            tr.push(TraceEvent {
                step: self.t,
                event,
                agent,
                counterparty,
                amount,
            });
        }
    }

    /// Runs phases 1 to 7 once.
    pub fn step(&mut self) -> Result<StepOutcome> {
        self.begin_step()?;
        let credit = self.plan_firms();
        self.credit_and_labour(&credit)?;
        self.produce_and_consume();
        let firm_defaults = self.dividends_and_bankruptcies();
        self.repay_loans();
        let cascade = self.resolve_banks()?;
        self.audit()?;
        let report = StepReport {
            step: self.t,
            interbank_volume: self.step_volume,
            firm_defaults,
        };
        Ok(match cascade {
            Some(c) => StepOutcome::Terminal(report, c),
            None => StepOutcome::Continue(report),
        })
    }

    fn begin_step(&mut self) -> Result<()> {
        self.t += 1;
        self.step_volume = 0.0;
        let stats = self.stats;
        for f in self.firms.iter_mut().filter(|f| f.bankrupt) {
            f.bankrupt = false;
            f.price = stats.avg_price;
            f.expected_demand = stats.avg_demand;
        }
        let smax = self.cfg.economy.specificity_max;
        for b in &mut self.banks {
            b.specificity = self.rng.gen::<f64>() * smax;
        }
        let firm_loans: Vec<f64> = self.banks.iter().map(|b| b.firm_loans).collect();
        let payments: Vec<f64> = self.banks.iter().map(|b| b.payments).collect();
        let d = indicator_values(&firm_loans, &payments, &self.network)?;
        self.scores = score(&d, &self.weights);
        self.requirements = self.scores.iter().map(|&s| required_equity_fraction(&self.policy, s)).collect();
        for b in &mut self.banks {
            b.payments = 0.0;
        }
        self.probabilities = estimate_default_probabilities(&self.history, self.banks.len(), &self.cfg.sysloss)?;
        Ok(())
    }

    /// Phase 1. Returns each firm's credit demand.
    fn plan_firms(&mut self) -> Vec<f64> {
        let e = &self.cfg.economy;
        let mut credit = Vec::with_capacity(self.firms.len());
        for f in &mut self.firms {
            let eta_p = e.eta_max * (1.0 - self.rng.gen::<f64>());
            let eta_q = e.eta_max * (1.0 - self.rng.gen::<f64>());
            let input = PlanInput {
                price: f.price,
                expected_demand: f.expected_demand,
                produced: f.produced,
                sold: f.sold,
                liquidity: f.liquidity,
            };
            let p = plan(input, self.stats, eta_p, eta_q, e.wage, e.productivity, e.liquidity_buffer);
            f.price = p.price;
            f.expected_demand = p.expected_demand;
            f.labour_demand = p.labour;
            credit.push(p.credit);
        }
        credit
    }

    fn headroom(&self, bank: usize, ib_assets: f64) -> f64 {
        let b = &self.banks[bank];
        if !b.alive {
            return 0.0;
        }
        lending_headroom(b.equity, rwa(b.firm_loans, ib_assets), self.requirements[bank])
    }

    fn lender_capacity(&self, bank: usize, ib_assets: f64) -> f64 {
        let cash = self.banks[bank].cash;
        if self.cfg.economy.interbank_capital_check {
            cash.min(self.headroom(bank, ib_assets)).max(0.0)
        } else {
            cash.max(0.0)
        }
    }

    /// Phases 2 and 3: loans in random firm order, then hiring or firing.
    fn credit_and_labour(&mut self, credit: &[f64]) -> Result<()> {
        let mut pool: Vec<usize> = (0..self.households.len())
            .filter(|&h| self.households[h].role == Role::Worker && self.households[h].employer.is_none())
            .collect();
        pool.shuffle(&mut self.rng);
        let mut order: Vec<usize> = (0..self.firms.len()).collect();
        order.shuffle(&mut self.rng);
        let wage = self.cfg.economy.wage;
        for i in order {
            if credit[i] > DUST {
                self.firm_credit(i, credit[i])?;
            }
            let f = &mut self.firms[i];
            let affordable = ((f.liquidity + DUST) / wage).floor().max(0.0) as usize;
            let target = f.labour_demand.min(affordable);
            while f.workers.len() > target {
                let h = f.workers.pop().expect("non-empty");
                self.households[h].employer = None;
                pool.push(h);
            }
            while f.workers.len() < target {
                let Some(h) = pool.pop() else { break };
                self.households[h].employer = Some(i);
                f.workers.push(h);
            }
        }
        Ok(())
    }

    fn firm_credit(&mut self, i: usize, desired: f64) -> Result<()> {
        let e = &self.cfg.economy;
        let alive: Vec<usize> = (0..self.banks.len()).filter(|&b| self.banks[b].alive).collect();
        if alive.is_empty() {
            return Ok(());
        }
        let n = e.bank_sample.min(alive.len());
        let premium = fragility_premium(self.firms[i].fragility(), e.fragility_slope, e.fragility_cap);
        let offers: Vec<(usize, f64)> = index::sample(&mut self.rng, alive.len(), n)
            .into_iter()
            .map(|k| {
                let b = alive[k];
                (b, e.nominal_rate + self.banks[b].specificity + premium)
            })
            .collect();
        let (bank, rate) = best_offer(&offers).expect("sampled at least one bank");
        let request = requested_volume(desired, rate, e.rate_max, e.rationing_share);
        let grant = request.min(self.headroom(bank, self.network.gross().col_sum(bank)));
        if grant <= DUST {
            return Ok(());
        }
        let firm_bank = self.firms[i].bank;
        let mut tax = 0.0;
        // an in-house loan only creates a deposit
        if bank != firm_bank && self.banks[bank].cash < grant {
            match self.raise_interbank(bank, grant - self.banks[bank].cash)? {
                Some(t) => tax = t,
                None => return Ok(()),
            }
        }
        self.banks[bank].firm_loans += grant;
        self.banks[bank].cash -= grant;
        self.banks[firm_bank].cash += grant;
        self.banks[firm_bank].deposits += grant;
        let f = &mut self.firms[i];
        f.liquidity += grant;
        f.loans.push(FirmLoan {
            bank,
            outstanding: grant,
            rate,
        });
        self.log(EventKind::FirmLoan, i, Some(bank), grant);
        self.pay_tax(bank, Some(i), tax);
        Ok(())
    }

    /// Borrows `amount` for bank `i` from the cheapest lenders, all or
    /// nothing. Returns the tax owed on the new loans, or `None` when the
    /// market cannot supply the amount.
    fn raise_interbank(&mut self, i: usize, amount: f64) -> Result<Option<f64>> {
        let e = &self.cfg.economy;
        let b = self.banks.len();
        let assets = self.network.interbank_assets();
        let mut capacity: Vec<f64> = (0..b)
            .map(|j| {
                if j == i || !self.banks[j].alive {
                    0.0
                } else {
                    self.lender_capacity(j, assets[j])
                }
            })
            .collect();
        if capacity.iter().sum::<f64>() < amount - DUST {
            return Ok(None);
        }
        let taxed = self.policy.regime == Regime::Srt && self.cfg.regulation.zeta > 0.0;
        let zeta = self.cfg.regulation.zeta;
        let variant = self.cfg.regulation.srt_rank;
        let fragility = self.network.gross().row_sum(i) / self.banks[i].equity.max(1e-9);
        let premium = fragility_premium(fragility, e.fragility_slope, e.fragility_cap);
        let nominal = e.nominal_rate;
        let mut tax_total = 0.0;
        let mut remaining = amount;
        while remaining > DUST {
            let engine = if taxed {
                Some(MarginalEngine::new(
                    self.network.net_liabilities(),
                    &self.equity(),
                    &self.probabilities,
                    variant,
                )?)
            } else {
                None
            };
            let mut quotes = Vec::new();
            for j in (0..b).filter(|&j| capacity[j] > DUST) {
                let a = remaining.min(capacity[j]);
                let tax = match &engine {
                    Some(eng) => zeta * eng.marginal(i, j, a)?.max(0.0),
                    None => 0.0,
                };
                quotes.push(LenderQuote {
                    lender: j,
                    rate: nominal + self.banks[j].specificity + premium,
                    tax,
                    amount: a,
                });
            }
            let Some(k) = choose_lender(&quotes) else {
                return Err(SimError::Invariant {
                    step: self.t,
                    detail: "interbank capacity vanished".into(),
                });
            };
            let q = quotes[k];
            self.network.originate(i, q.lender, q.amount, q.rate)?;
            self.banks[q.lender].cash -= q.amount;
            self.banks[i].cash += q.amount;
            self.step_volume += q.amount;
            self.log(EventKind::InterbankLoan, i, Some(q.lender), q.amount);
            if q.tax > 0.0 {
                self.log(EventKind::SrtTax, i, Some(q.lender), q.tax);
            }
            tax_total += q.tax;
            remaining -= q.amount;
            let assets_l = self.network.gross().col_sum(q.lender);
            capacity[q.lender] = self.lender_capacity(q.lender, assets_l);
        }
        Ok(Some(tax_total))
    }

    /// Credits the tax to the fund's account at the payer's bank. A firm
    /// pays what its liquidity covers and the bank the rest.
    fn pay_tax(&mut self, bank: usize, firm: Option<usize>, tax: f64) {
        if tax <= 0.0 {
            return;
        }
        let from_firm = firm.map_or(0.0, |i| tax.min(self.firms[i].liquidity.max(0.0)));
        if let Some(i) = firm {
            // same bank, so only the owner of the deposit changes
            self.firms[i].liquidity -= from_firm;
            self.fund[self.firms[i].bank] += from_firm;
        }
        let rest = tax - from_firm;
        let b = &mut self.banks[bank];
        b.equity -= rest;
        b.profit -= rest;
        b.deposits += rest;
        self.fund[bank] += rest;
    }

    /// Phase 4.
    fn produce_and_consume(&mut self) {
        let e = &self.cfg.economy;
        let (wage, alpha, c, z) = (e.wage, e.productivity, e.consumption, e.price_sample);
        for i in 0..self.firms.len() {
            let f = &mut self.firms[i];
            f.produced = alpha * f.workers.len() as f64;
            f.inventory = f.produced;
            f.sold = 0.0;
            f.revenue = 0.0;
            f.wage_bill = wage * f.workers.len() as f64;
            f.liquidity -= f.wage_bill;
            let fb = f.bank;
            for k in 0..self.firms[i].workers.len() {
                let h = self.firms[i].workers[k];
                self.households[h].account += wage;
                transfer(&mut self.banks, fb, self.households[h].bank, wage);
            }
        }
        let mut order: Vec<usize> = (0..self.households.len()).collect();
        order.shuffle(&mut self.rng);
        let nf = self.firms.len();
        for h in order {
            let budget = c * self.households[h].account;
            let sample: Vec<usize> = index::sample(&mut self.rng, nf, z.min(nf)).into_vec();
            if budget <= DUST {
                continue;
            }
            let offers: Vec<(usize, f64, f64)> =
                sample.iter().map(|&i| (i, self.firms[i].price, self.firms[i].inventory)).collect();
            for (i, qty, spend) in shop(budget, &offers) {
                let f = &mut self.firms[i];
                f.inventory -= qty;
                f.sold += qty;
                f.revenue += spend;
                f.liquidity += spend;
                self.households[h].account -= spend;
                transfer(&mut self.banks, self.households[h].bank, f.bank, spend);
            }
        }
        let nf = nf as f64;
        self.stats = MarketStats {
            avg_price: self.firms.iter().map(|f| f.price).sum::<f64>() / nf,
            avg_demand: self.firms.iter().map(|f| f.expected_demand).sum::<f64>() / nf,
        };
    }

    /// Phase 5: firms that cannot meet this step's debt service go
    /// bankrupt; the others and the banks pay dividends.
    fn dividends_and_bankruptcies(&mut self) -> usize {
        let e = &self.cfg.economy;
        let (tau, share) = (e.repayment, e.dividend_share);
        let mut defaults = 0;
        for i in 0..self.firms.len() {
            let due = self.firms[i].debt_service(tau);
            if self.firms[i].liquidity < due - DUST {
                self.bankrupt_firm(i);
                defaults += 1;
                continue;
            }
            let f = &self.firms[i];
            let profit = f.revenue - f.wage_bill - f.interest_paid;
            if profit > 0.0 {
                let div = (share * profit).min(f.liquidity - due).max(0.0);
                let (owner, fb) = (f.owner, f.bank);
                self.firms[i].liquidity -= div;
                self.households[owner].account += div;
                transfer(&mut self.banks, fb, self.households[owner].bank, div);
            }
        }
        for j in 0..self.banks.len() {
            let b = &mut self.banks[j];
            if b.alive && b.profit > 0.0 {
                let div = share * b.profit;
                b.equity -= div;
                b.cash -= div;
                let owner = b.owner;
                let ob = self.households[owner].bank;
                self.households[owner].account += div;
                self.banks[ob].cash += div;
                self.banks[ob].deposits += div;
            }
            self.banks[j].profit = 0.0;
        }
        defaults
    }

    /// Creditors split the firm's liquidity and its owner's account pro
    /// rata and write off the rest.
    fn bankrupt_firm(&mut self, i: usize) {
        let (fb, owner) = (self.firms[i].bank, self.firms[i].owner);
        let ob = self.households[owner].bank;
        let claims: Vec<f64> = self.firms[i].loans.iter().map(|l| l.outstanding).collect();
        let liquidity = self.firms[i].liquidity.max(0.0);
        let pool = liquidity + self.households[owner].account;
        let recovered = pro_rata(pool, &claims);
        let total: f64 = recovered.iter().sum();
        let from_firm = total.min(liquidity);
        self.firms[i].liquidity -= from_firm;
        self.banks[fb].cash -= from_firm;
        self.banks[fb].deposits -= from_firm;
        self.banks[fb].payments += from_firm;
        let from_owner = total - from_firm;
        self.households[owner].account -= from_owner;
        self.banks[ob].cash -= from_owner;
        self.banks[ob].deposits -= from_owner;
        self.banks[ob].payments += from_owner;
        let loans = std::mem::take(&mut self.firms[i].loans);
        self.log(EventKind::FirmDefault, i, None, claims.iter().sum());
        for (loan, r) in loans.iter().zip(recovered) {
            let lost = loan.outstanding - r;
            let b = &mut self.banks[loan.bank];
            b.cash += r;
            b.payments += r;
            b.firm_loans -= loan.outstanding;
            b.equity -= lost;
            b.profit -= lost;
            self.log(EventKind::Recovery, loan.bank, Some(i), r);
            self.log(EventKind::WriteOff, loan.bank, Some(i), lost);
        }
        // leftover liquidity goes to the owner; the new firm starts empty
        let rest = self.firms[i].liquidity;
        if rest != 0.0 {
            self.firms[i].liquidity = 0.0;
            self.households[owner].account += rest;
            transfer(&mut self.banks, fb, ob, rest);
        }
        for h in std::mem::take(&mut self.firms[i].workers) {
            self.households[h].employer = None;
        }
        let f = &mut self.firms[i];
        f.bankrupt = true;
        f.produced = 0.0;
        f.sold = 0.0;
        f.interest_paid = 0.0;
    }

    /// Phase 6.
    fn repay_loans(&mut self) {
        let tau = self.cfg.economy.repayment;
        for i in 0..self.firms.len() {
            self.firms[i].interest_paid = 0.0;
            if self.firms[i].bankrupt {
                continue;
            }
            let fb = self.firms[i].bank;
            let mut loans = std::mem::take(&mut self.firms[i].loans);
            for loan in &mut loans {
                let (pay, left) = amortize(loan.outstanding, loan.rate, tau);
                let principal = loan.outstanding - left;
                let interest = pay - principal;
                loan.outstanding = left;
                self.firms[i].liquidity -= pay;
                self.firms[i].interest_paid += interest;
                self.banks[fb].cash -= pay;
                self.banks[fb].deposits -= pay;
                self.banks[fb].payments += pay;
                let b = &mut self.banks[loan.bank];
                b.cash += pay;
                b.payments += pay;
                b.firm_loans -= principal;
                b.equity += interest;
                b.profit += interest;
                self.log(EventKind::FirmRepayment, i, Some(loan.bank), pay);
            }
            loans.retain(|l| l.outstanding > 0.0);
            self.firms[i].loans = loans;
        }
        let banks = &mut self.banks;
        let trace = &mut self.trace;
        let t = self.t;
        self.network.update_loans(|loan| {
            let (pay, left) = amortize(loan.outstanding, loan.rate, tau);
            let interest = pay - (loan.outstanding - left);
            loan.outstanding = left;
            banks[loan.borrower].cash -= pay;
            banks[loan.borrower].equity -= interest;
            banks[loan.borrower].profit -= interest;
            banks[loan.lender].cash += pay;
            banks[loan.lender].equity += interest;
            banks[loan.lender].profit += interest;
            if let Some(tr) = trace {
                tr.push(TraceEvent {
                    step: t,
                    event: EventKind::InterbankRepayment,
                    agent: loan.borrower,
                    counterparty: Some(loan.lender),
                    amount: pay,
                });
            }
        });
    }

    /// Phase 7: illiquid banks borrow or fail, insolvent banks fail, and
    /// failures cascade through interbank claims.
    fn resolve_banks(&mut self) -> Result<Option<Cascade>> {
        let b = self.banks.len();
        let mut initial = Vec::new();
        for i in 0..b {
            let mut rounds = 0;
            while self.banks[i].cash < -DUST {
                if rounds == 8 {
                    break;
                }
                rounds += 1;
                match self.raise_interbank(i, -self.banks[i].cash)? {
                    Some(tax) => self.pay_tax(i, None, tax),
                    None => break,
                }
            }
            if self.banks[i].cash < -DUST {
                self.banks[i].alive = false;
                initial.push(i);
            }
        }
        for i in 0..b {
            if self.banks[i].alive && self.banks[i].equity < 0.0 {
                initial.push(i);
            }
        }
        initial.sort_unstable();
        self.history.record(initial.len(), b);
        if initial.is_empty() {
            return Ok(None);
        }
        let claims = if self.cfg.economy.close_out_netting {
            self.network.net_liabilities()
        } else {
            self.network.gross().clone()
        };
        let defaults = resolve_cascade(&self.equity(), &claims, &initial);
        let losses = cascade_losses(&claims, &defaults);
        let mut household_losses = 0.0;
        for &d in &defaults {
            self.banks[d].alive = false;
            household_losses += self.banks[d].deposits;
            self.log(EventKind::BankDefault, d, None, claims.row_sum(d));
        }
        Ok(Some(Cascade {
            step: self.t,
            initial: initial.len(),
            defaults,
            losses,
            household_losses,
        }))
    }

    /// Balance-sheet identity per bank, deposit ledger and reserve
    /// conservation.
    pub fn audit(&self) -> Result<()> {
        let fail = |detail: String| Err(SimError::Invariant { step: self.t, detail });
        let mut deposits = self.fund.clone();
        for h in &self.households {
            if h.account < -1e-9 {
                return fail(format!("negative account {}", h.account));
            }
            deposits[h.bank] += h.account;
        }
        for f in &self.firms {
            deposits[f.bank] += f.liquidity;
        }
        let assets = self.network.interbank_assets();
        let liabilities = self.network.interbank_liabilities();
        for (j, b) in self.banks.iter().enumerate() {
            let lhs = b.cash + b.firm_loans + assets[j];
            let rhs = b.deposits + liabilities[j] + b.equity;
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            if (lhs - rhs).abs() > 1e-9 * scale {
                return fail(format!("bank {j}: assets {lhs} != liabilities {rhs}"));
            }
            if (deposits[j] - b.deposits).abs() > 1e-9 * (1.0 + b.deposits.abs()) {
                return fail(format!("bank {j}: deposits {} != accounts {}", b.deposits, deposits[j]));
            }
        }
        let reserves: f64 = self.banks.iter().map(|b| b.cash).sum();
        if (reserves - self.reserves).abs() > 1e-9 * (1.0 + self.reserves.abs()) {
            return fail(format!("reserves {reserves} != {}", self.reserves));
        }
        Ok(())
    }

    /// Descending single-seed DebtRanks and average vulnerabilities of the
    /// current net interbank network.
    pub fn risk_profiles(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        risk_profiles(&self.network.net_liabilities(), &self.equity(), &self.cfg.debtrank)
    }

    /// Net matrix and equity, enough to compute risk profiles later.
    pub fn risk_snapshot(&self) -> (Matrix, Vec<f64>) {
        (self.network.net_liabilities(), self.equity())
    }
}

pub fn risk_profiles(net: &Matrix, equity: &[f64], cfg: &DebtRankConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut sr = debtrank_all(net, equity, cfg)?.r_incl;
    let mut cr = average_vulnerability(net, equity, cfg)?;
    sr.sort_by(|a, b| b.total_cmp(a));
    cr.sort_by(|a, b| b.total_cmp(a));
    Ok((sr, cr))
}

/// Spends `budget` at the sampled firms, cheapest first, moving on when a
/// firm sells out. `offers` are (firm, price, inventory); returns
/// (firm, quantity, spend) per purchase.
pub fn shop(budget: f64, offers: &[(usize, f64, f64)]) -> Vec<(usize, f64, f64)> {
    let mut sorted = offers.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut left = budget;
    let mut out = Vec::new();
    for (i, price, inventory) in sorted {
        if left <= DUST {
            break;
        }
        if inventory <= 0.0 {
            continue;
        }
        let qty = (left / price).min(inventory);
        let spend = if qty == inventory { qty * price } else { left };
        left -= spend;
        out.push((i, qty, spend));
    }
    out
}
