use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use gsibsim::abm::{run_with_trace, write_trace_csv, RunResult};
use gsibsim::basel::{bucket_assign, indicator_values, score, BucketTable, IndicatorWeights, Regime, WeightsPreset};
use gsibsim::config::ModelConfig;
use gsibsim::debtrank::{average_vulnerability, debtrank_all, DebtRankConfig};
use gsibsim::harness::{replicate_seeds, run_experiment, ExperimentSpec, Preset};
use gsibsim::netcore::{LiabilityNetwork, LoanRecord, Matrix};
use gsibsim::sysloss::{srt_quote, DefaultProbabilities};
use gsibsim::SimError;

#[derive(Parser)]
#[command(name = "gsibsim", version = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CARGO_PKG_NAME"), ")"))]
#[command(about = "Bank/real-economy simulator comparing Basel II, Basel III G-SIB surcharges and a systemic risk tax")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded simulation.
    Run {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-event log.
        #[arg(long)]
        trace: bool,
    },
    /// Run a preset experiment over replicate seeds.
    Experiment {
        #[command(flatten)]
        model: ModelArgs,
        /// regulation-comparison, surcharge-levels or weight-distributions
        #[arg(long)]
        preset: Preset,
        /// Base seed the replicate seeds are drawn from.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// DebtRank and vulnerability of every bank of a liability matrix.
    Analyze {
        /// Liability matrix CSV, row i = what bank i owes.
        net: PathBuf,
        /// Capital CSV with a `capital` column.
        capital: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        psi: f64,
    },
    /// Systemic-importance scores, buckets and surcharges.
    Score {
        net: PathBuf,
        /// CSV with `firm_loans` and `payments` columns.
        banks: PathBuf,
        #[arg(long, default_value = "basel")]
        weights: WeightsPreset,
        /// Use the published weights without renormalizing.
        #[arg(long)]
        raw_weights: bool,
    },
    /// Systemic risk tax quote for one prospective loan.
    Quote {
        net: PathBuf,
        capital: PathBuf,
        #[arg(long)]
        borrower: usize,
        #[arg(long)]
        lender: usize,
        #[arg(long)]
        principal: f64,
        /// Default probability of every bank.
        #[arg(long, default_value_t = 0.01)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        zeta: f64,
    },
    /// Check a config file and print the resolved config.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Config file plus flags that override it.
#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    policy: Option<Regime>,
    #[arg(long)]
    surcharge_multiplier: Option<f64>,
    #[arg(long)]
    weights_preset: Option<WeightsPreset>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    t_max: Option<usize>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => ModelConfig::from_toml_str(&read(p)?).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
            None => ModelConfig::default(),
        };
        let r = &mut cfg.regulation;
        if let Some(x) = self.policy {
            r.policy = x;
        }
        if let Some(x) = self.surcharge_multiplier {
            r.surcharge_multiplier = x;
        }
        if let Some(x) = self.weights_preset {
            r.weights_preset = x;
        }
        if let Some(x) = self.zeta {
            r.zeta = x;
        }
        if let Some(x) = self.t_max {
            cfg.run.t_max = x;
        }
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::Config(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        SimError::from(e).into()
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        SimError::from(e).into()
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 1, message: format!("io: {}: {e}", path.display()) })
}

fn seed_or(seed: Option<u64>, cfg: &ModelConfig) -> Result<u64, Failure> {
    seed.or(cfg.run.seed).ok_or_else(|| Failure::usage("config: a seed is required (--seed or run.seed)"))
}

fn out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure { code: 1, message: format!("io: {}: {e}", dir.display()) })
}

fn read_matrix(path: &Path) -> Result<Matrix, Failure> {
    let f = fs::File::open(path).map_err(|e| Failure { code: 1, message: format!("io: {}: {e}", path.display()) })?;
    Ok(Matrix::read_csv(f)?)
}

#[derive(Deserialize)]
struct CapitalRow {
    capital: f64,
}

#[derive(Deserialize)]
struct BankRow {
    firm_loans: f64,
    payments: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Failure> {
    let mut rd = csv::Reader::from_path(path)?;
    Ok(rd.deserialize().collect::<Result<Vec<T>, _>>()?)
}

fn read_capital(path: &Path, banks: usize) -> Result<Vec<f64>, Failure> {
    let c: Vec<f64> = read_rows::<CapitalRow>(path)?.into_iter().map(|r| r.capital).collect();
    if c.len() != banks {
        return Err(SimError::LengthMismatch { expected: banks, got: c.len() }.into());
    }
    Ok(c)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_run(dir: &Path, r: &RunResult) -> Result<(), Failure> {
    write_csv(
        &dir.join("result.csv"),
        &["seed", "steps", "cascade_size", "initial_defaults", "losses", "volume", "fund", "household_losses"],
        [vec![
            r.seed.to_string(),
            r.steps.to_string(),
            r.cascade_size.to_string(),
            r.initial_defaults.to_string(),
            r.losses.to_string(),
            r.volume.map_or(String::new(), |v| v.to_string()),
            r.fund.to_string(),
            r.household_losses.to_string(),
        ]],
    )?;
    write_csv(
        &dir.join("volume.csv"),
        &["step", "volume"],
        r.volume_per_step.iter().enumerate().map(|(t, v)| vec![(t + 1).to_string(), v.to_string()]),
    )?;
    write_csv(
        &dir.join("profiles.csv"),
        &["rank", "sr_terminal", "cr_terminal", "sr_time_mean", "cr_time_mean"],
        (0..r.sr_profile.len()).map(|k| {
            vec![
                (k + 1).to_string(),
                r.sr_profile[k].to_string(),
                r.cr_profile[k].to_string(),
                r.sr_profile_mean[k].to_string(),
                r.cr_profile_mean[k].to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join("firm_cascades.csv"),
        &["event", "size"],
        r.firm_cascades.iter().enumerate().map(|(k, c)| vec![(k + 1).to_string(), c.to_string()]),
    )
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    let stdout = io::stdout();
    match cmd {
        Command::Run { model, seed, out, trace } => {
            let mut cfg = model.resolve()?;
            let seed = seed_or(seed, &cfg)?;
            cfg.run.seed = Some(seed);
            out_dir(&out)?;
            fs::write(out.join("config.toml"), cfg.to_toml_string())?;
            let (result, events) = run_with_trace(&cfg, seed)?;
            write_run(&out, &result)?;
            if trace {
                write_trace_csv(&events, fs::File::create(out.join("trace.csv"))?)?;
            }
        }
        Command::Experiment { model, preset, seed, seeds, out } => {
            let mut cfg = model.resolve()?;
            let base = seed_or(seed, &cfg)?;
            cfg.run.seed = Some(base);
            if seeds == 0 {
                return Err(Failure::usage("config: --seeds must be at least 1"));
            }
            out_dir(&out)?;
            fs::write(out.join("config.toml"), cfg.to_toml_string())?;
            let list = replicate_seeds(base, seeds);
            write_csv(&out.join("seeds.csv"), &["replicate", "seed"], list.iter().enumerate().map(|(k, s)| vec![k.to_string(), s.to_string()]))?;
            let spec = ExperimentSpec::preset(preset, cfg, list);
            let result = run_experiment(&spec)?;
            result.write(&out)?;
            let failed: usize = result.arms.iter().map(|a| a.failures.len()).sum();
            if failed > 0 {
                eprintln!("warning: {failed} runs failed, see failures.csv");
            }
        }
        Command::Analyze { net, capital, psi } => {
            let l = read_matrix(&net)?;
            let c = read_capital(&capital, l.dim())?;
            let cfg = DebtRankConfig { psi, ..DebtRankConfig::default() };
            cfg.validate()?;
            let l = l.netted();
            let ranks = debtrank_all(&l, &c, &cfg)?;
            let vul = average_vulnerability(&l, &c, &cfg)?;
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["bank", "r_excl", "r_incl", "vulnerability"])?;
            for i in 0..l.dim() {
                w.write_record([i.to_string(), ranks.r_excl[i].to_string(), ranks.r_incl[i].to_string(), vul[i].to_string()])?;
            }
            w.flush()?;
        }
        Command::Score { net, banks, weights, raw_weights } => {
            let network = LiabilityNetwork::from_matrix(&read_matrix(&net)?)?;
            let rows: Vec<BankRow> = read_rows(&banks)?;
            let firm_loans: Vec<f64> = rows.iter().map(|r| r.firm_loans).collect();
            let payments: Vec<f64> = rows.iter().map(|r| r.payments).collect();
            let d = indicator_values(&firm_loans, &payments, &network)?;
            let s = score(&d, &IndicatorWeights::preset(weights, !raw_weights));
            let table = BucketTable::default();
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["bank", "score", "bucket", "surcharge"])?;
            for (i, x) in s.iter().enumerate() {
                let b = bucket_assign(*x, &table);
                w.write_record([i.to_string(), x.to_string(), b.id.to_string(), b.surcharge.to_string()])?;
            }
            w.flush()?;
        }
        Command::Quote { net, capital, borrower, lender, principal, p, zeta } => {
            let network = LiabilityNetwork::from_matrix(&read_matrix(&net)?)?;
            let c = read_capital(&capital, network.banks())?;
            let probs = DefaultProbabilities::uniform(network.banks(), p)?;
            let loan = LoanRecord { id: network.next_loan_id(), borrower, lender, principal, rate: 0.0, outstanding: principal };
            let q = srt_quote(&network, &c, &probs, &loan, zeta)?;
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.serialize(q)?;
            w.flush()?;
        }
        Command::Validate { config } => {
            let cfg = ModelConfig::from_toml_str(&read(&config)?).map_err(|e| Failure::usage(format!("{}: {e}", config.display())))?;
            let mut out = stdout.lock();
            out.write_all(cfg.to_toml_string().as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
