//! Interbank liability network: dense liability matrix, loan ledger and the
//! derived transforms (netting, hypothetical additions, exposures) used by
//! every analytic.
//!
//! Convention throughout the crate: `L[i][j]` is the amount bank `i` owes
//! bank `j`, i.e. the loans of `j` to `i`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Dense square matrix of currency amounts, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Build from nested rows. Panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix row {i} has wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// `max(0, L[i][j] - L[j][i])` element-wise.
    pub fn netted(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = self.get(i, j) - self.get(j, i);
                    if d > 0.0 {
                        out.set(i, j, d);
                    }
                }
            }
        }
        out
    }

    /// Writes the matrix CSV: header `bank_0,...`, one row per debtor bank.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record((0..self.n).map(|j| format!("bank_{j}")))?;
        for i in 0..self.n {
            wr.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Matrix> {
        let mut rd = csv::Reader::from_reader(r);
        let n = rd.headers()?.len();
        let mut rows = Vec::with_capacity(n);
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != n {
                return Err(SimError::Parse(format!(
                    "matrix row {} has {} columns, expected {n}",
                    line + 1,
                    rec.len()
                )));
            }
            let row = rec
                .iter()
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| {
                        SimError::Parse(format!("matrix row {}: '{s}': {e}", line + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(SimError::Parse(format!(
                "matrix has {} rows but {n} columns",
                rows.len()
            )));
        }
        let m = Matrix::from_rows(&rows);
        validate_liabilities(&m)?;
        Ok(m)
    }
}

/// Checks `L[i][j] >= 0` (finite) and a zero diagonal.
pub fn validate_liabilities(m: &Matrix) -> Result<()> {
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let v = m.get(i, j);
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::InvalidAmount(v));
            }
            if i == j && v != 0.0 {
                return Err(SimError::SelfLoan(i));
            }
        }
    }
    Ok(())
}

/// One interbank loan: `borrower` owes `lender`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoanRecord {
    pub id: u64,
    pub borrower: usize,
    pub lender: usize,
    pub principal: f64,
    /// Per-step rate applied to each amortized slice.
    pub rate: f64,
    pub outstanding: f64,
}

/// Gross liability matrix kept in sync with its loan ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct LiabilityNetwork {
    gross: Matrix,
    loans: Vec<LoanRecord>,
    next_id: u64,
}

impl LiabilityNetwork {
    pub fn new(banks: usize) -> Self {
        LiabilityNetwork {
            gross: Matrix::zeros(banks),
            loans: Vec::new(),
            next_id: 0,
        }
    }

    /// A network whose ledger holds one synthetic loan per positive entry.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        validate_liabilities(m)?;
        let mut net = LiabilityNetwork::new(m.dim());
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let v = m.get(i, j);
                if v > 0.0 {
                    net.originate(i, j, v, 0.0)?;
                }
            }
        }
        Ok(net)
    }

    pub fn from_ledger(banks: usize, loans: Vec<LoanRecord>) -> Result<Self> {
        let mut net = LiabilityNetwork::new(banks);
        for loan in loans {
            net.check_pair(loan.borrower, loan.lender)?;
            if !(loan.outstanding.is_finite() && loan.outstanding >= 0.0) {
                return Err(SimError::InvalidAmount(loan.outstanding));
            }
            net.gross.add(loan.borrower, loan.lender, loan.outstanding);
            net.next_id = net.next_id.max(loan.id + 1);
            net.loans.push(loan);
        }
        Ok(net)
    }

    pub fn banks(&self) -> usize {
        self.gross.dim()
    }

    pub fn gross(&self) -> &Matrix {
        &self.gross
    }

    pub fn loans(&self) -> &[LoanRecord] {
        &self.loans
    }

    pub fn next_loan_id(&self) -> u64 {
        self.next_id
    }

    fn check_pair(&self, borrower: usize, lender: usize) -> Result<()> {
        let b = self.banks();
        for idx in [borrower, lender] {
            if idx >= b {
                return Err(SimError::BankOutOfRange { index: idx, banks: b });
            }
        }
        if borrower == lender {
            return Err(SimError::SelfLoan(borrower));
        }
        Ok(())
    }

    /// Adds a new loan to the ledger and returns its id.
    pub fn originate(&mut self, borrower: usize, lender: usize, principal: f64, rate: f64) -> Result<u64> {
        self.check_pair(borrower, lender)?;
        if !(principal.is_finite() && principal >= 0.0) {
            return Err(SimError::InvalidAmount(principal));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.loans.push(LoanRecord {
            id,
            borrower,
            lender,
            principal,
            rate,
            outstanding: principal,
        });
        self.gross.add(borrower, lender, principal);
        Ok(id)
    }

    /// Mutable pass over the ledger; the matrix is rebuilt afterwards and
    /// loans with zero outstanding are dropped.
    pub fn update_loans<F: FnMut(&mut LoanRecord)>(&mut self, mut f: F) {
        for loan in &mut self.loans {
            f(loan);
        }
        self.loans.retain(|l| l.outstanding > 0.0);
        self.rebuild();
    }

    /// Removes every loan where `bank` is borrower or lender.
    pub fn remove_bank_loans(&mut self, bank: usize) {
        self.loans.retain(|l| l.borrower != bank && l.lender != bank);
        self.rebuild();
    }

    fn rebuild(&mut self) {
        let mut g = Matrix::zeros(self.banks());
        for l in &self.loans {
            g.add(l.borrower, l.lender, l.outstanding);
        }
        self.gross = g;
    }

    /// True when the matrix equals the ledger grouped by (borrower, lender).
    pub fn ledger_consistent(&self, tol: f64) -> bool {
        let mut g = Matrix::zeros(self.banks());
        for l in &self.loans {
            g.add(l.borrower, l.lender, l.outstanding);
        }
        (0..self.banks()).all(|i| {
            (0..self.banks()).all(|j| (g.get(i, j) - self.gross.get(i, j)).abs() <= tol)
        })
    }

    /// `L_net[i][j] = max(0, L[i][j] - L[j][i])`.
    pub fn net_liabilities(&self) -> Matrix {
        self.gross.netted()
    }

    /// Net matrix with `amount` added at `(m, n)`; `self` is untouched.
    pub fn with_liability(&self, m: usize, n: usize, amount: f64) -> Result<Matrix> {
        with_liability(&self.net_liabilities(), m, n, amount)
    }

    pub fn with_loan(&self, loan: &LoanRecord) -> Result<Matrix> {
        self.with_liability(loan.borrower, loan.lender, loan.principal)
    }

    /// Interbank assets of each bank (`sum_j L[j][i]`), on the gross matrix.
    pub fn interbank_assets(&self) -> Vec<f64> {
        (0..self.banks()).map(|i| self.gross.col_sum(i)).collect()
    }

    /// Interbank liabilities of each bank (`sum_j L[i][j]`), on the gross matrix.
    pub fn interbank_liabilities(&self) -> Vec<f64> {
        (0..self.banks()).map(|i| self.gross.row_sum(i)).collect()
    }

    pub fn write_ledger_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for l in &self.loans {
            wr.serialize(l)?;
        }
        if self.loans.is_empty() {
            wr.write_record(["id", "borrower", "lender", "principal", "rate", "outstanding"])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_ledger_csv<R: Read>(banks: usize, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let loans = rd
            .deserialize::<LoanRecord>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        LiabilityNetwork::from_ledger(banks, loans)
    }
}

/// Adds `amount` at `(m, n)` to an already-netted matrix (no re-netting).
pub fn with_liability(net: &Matrix, m: usize, n: usize, amount: f64) -> Result<Matrix> {
    let b = net.dim();
    for idx in [m, n] {
        if idx >= b {
            return Err(SimError::BankOutOfRange { index: idx, banks: b });
        }
    }
    if m == n {
        return Err(SimError::SelfLoan(m));
    }
    if !(amount.is_finite() && amount >= 0.0) {
        return Err(SimError::InvalidAmount(amount));
    }
    let mut out = net.clone();
    out.add(m, n, amount);
    Ok(out)
}

/// Per-bank exposures `L_i = sum_j L[j][i]`, value shares `v_i` and total `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposures {
    pub exposure: Vec<f64>,
    pub value: Vec<f64>,
    pub total: f64,
}

/// `v_i = L_i / V`, or all zeros when `V = 0`.
pub fn exposures_and_value(l: &Matrix) -> Exposures {
    let exposure: Vec<f64> = (0..l.dim()).map(|i| l.col_sum(i)).collect();
    let total: f64 = exposure.iter().sum();
    let value = if total > 0.0 {
        exposure.iter().map(|x| x / total).collect()
    } else {
        vec![0.0; l.dim()]
    };
    Exposures {
        exposure,
        value,
        total,
    }
}
