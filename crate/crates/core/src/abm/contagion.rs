//! Interbank lender choice and default cascades.

use crate::netcore::Matrix;

/// An interbank offer for a given principal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LenderQuote {
    pub lender: usize,
    pub rate: f64,
    pub tax: f64,
    pub amount: f64,
}

impl LenderQuote {
    /// Rate plus tax per unit of principal.
    pub fn total_rate(&self) -> f64 {
        if self.amount > 0.0 {
            self.rate + self.tax / self.amount
        } else {
            self.rate
        }
    }
}

/// Index of the quote with the smallest total rate; ties keep the first.
pub fn choose_lender(quotes: &[LenderQuote]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, q) in quotes.iter().enumerate() {
        let r = q.total_rate();
        if best.map_or(true, |(_, b)| r < b) {
            best = Some((k, r));
        }
    }
    best.map(|(k, _)| k)
}

/// Zero-recovery default cascade. `claims[i][j]` is what `i` owes `j`.
/// Starting from `initial`, every creditor loses its full claim on each
/// defaulted bank; a bank whose equity turns negative defaults in the next
/// round. Returns the defaulted set in ascending order.
pub fn resolve_cascade(equity: &[f64], claims: &Matrix, initial: &[usize]) -> Vec<usize> {
    let n = equity.len();
    let mut eq = equity.to_vec();
    let mut failed = vec![false; n];
    let mut frontier: Vec<usize> = Vec::new();
    for &i in initial {
        if !failed[i] {
            failed[i] = true;
            frontier.push(i);
        }
    }
    while !frontier.is_empty() {
        for &d in &frontier {
            for (j, &c) in claims.row(d).iter().enumerate() {
                if !failed[j] {
                    eq[j] -= c;
                }
            }
        }
        frontier = (0..n).filter(|&j| !failed[j] && eq[j] < 0.0).collect();
        for &j in &frontier {
            failed[j] = true;
        }
    }
    (0..n).filter(|&i| failed[i]).collect()
}

/// Total interbank liabilities of the defaulted set.
pub fn cascade_losses(claims: &Matrix, defaults: &[usize]) -> f64 {
    defaults.iter().map(|&i| claims.row_sum(i)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tax_free_lender_wins_at_equal_rates() {
        let quotes = [
            LenderQuote { lender: 0, rate: 0.03, tax: 7.2, amount: 100.0 },
            LenderQuote { lender: 1, rate: 0.03, tax: 0.0, amount: 100.0 },
        ];
        assert_eq!(choose_lender(&quotes), Some(1));
        assert_eq!(choose_lender(&[]), None);
    }

    #[test]
    fn two_bank_contagion() {
        // bank 1 fails owing 80 to bank 2 with equity 50
        let claims = Matrix::from_rows(&[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 80.0], vec![0.0, 0.0, 0.0]]);
        let d = resolve_cascade(&[5.0, -1.0, 50.0], &claims, &[1]);
        assert_eq!(d, vec![1, 2]);
        assert_eq!(cascade_losses(&claims, &d), 80.0);
    }

    #[test]
    fn isolated_and_absorbed_failures() {
        let claims = Matrix::from_rows(&[vec![0.0, 30.0], vec![0.0, 0.0]]);
        assert_eq!(resolve_cascade(&[-1.0, 50.0], &claims, &[0]), vec![0]);
        assert_eq!(resolve_cascade(&[-1.0, 50.0], &Matrix::zeros(2), &[0]), vec![0]);
        assert!(resolve_cascade(&[1.0, 1.0], &claims, &[]).is_empty());
    }

    #[test]
    fn chain_runs_to_fixed_point() {
        let claims = Matrix::from_rows(&[
            vec![0.0, 20.0, 0.0, 0.0],
            vec![0.0, 0.0, 20.0, 0.0],
            vec![0.0, 0.0, 0.0, 5.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ]);
        let d = resolve_cascade(&[-1.0, 10.0, 10.0, 10.0], &claims, &[0]);
        assert_eq!(d, vec![0, 1, 2]);
    }
}
