//! Adaptive price and quantity rule.

/// Goods-market averages from the previous step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketStats {
    pub avg_price: f64,
    pub avg_demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan {
    pub price: f64,
    pub expected_demand: f64,
    pub labour: usize,
    pub credit: f64,
}

/// Inputs of one firm's planning decision.
#[derive(Debug, Clone, Copy)]
pub struct PlanInput {
    pub price: f64,
    pub expected_demand: f64,
    pub produced: f64,
    pub sold: f64,
    pub liquidity: f64,
}

/// Excess demand (sold out) pushes the price up when it is below the market
/// average and the quantity up otherwise; excess supply mirrors this.
/// `eta_price` and `eta_quantity` are the shock sizes for this step.
pub fn plan(
    firm: PlanInput,
    stats: MarketStats,
    eta_price: f64,
    eta_quantity: f64,
    wage: f64,
    productivity: f64,
    buffer: f64,
) -> Plan {
    let mut price = firm.price;
    let mut d = firm.expected_demand;
    if firm.produced > 0.0 {
        let sold_out = firm.sold >= firm.produced * (1.0 - 1e-12);
        match (sold_out, price < stats.avg_price) {
            (true, true) => price *= 1.0 + eta_price,
            (true, false) => d *= 1.0 + eta_quantity,
            (false, false) if price > stats.avg_price => price *= 1.0 - eta_price,
            (false, _) => d *= 1.0 - eta_quantity,
        }
    }
    let labour = labour_demand(d, productivity);
    let bill = labour as f64 * wage * (1.0 + buffer);
    Plan {
        price,
        expected_demand: d,
        labour,
        credit: (bill - firm.liquidity).max(0.0),
    }
}

pub fn labour_demand(expected_demand: f64, productivity: f64) -> usize {
    (expected_demand / productivity).ceil().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(price: f64, produced: f64, sold: f64, liquidity: f64) -> PlanInput {
        PlanInput {
            price,
            expected_demand: 30.0,
            produced,
            sold,
            liquidity,
        }
    }

    const STATS: MarketStats = MarketStats {
        avg_price: 1.0,
        avg_demand: 30.0,
    };

    #[test]
    fn liquidity_covering_wages_needs_no_credit() {
        let p = plan(input(1.0, 30.0, 30.0, 100.0), STATS, 0.05, 0.05, 1.0, 3.0, 0.0);
        assert_eq!(p.credit, 0.0);
        let p = plan(input(1.0, 30.0, 30.0, 4.0), STATS, 0.0, 0.0, 1.0, 3.0, 0.0);
        assert_eq!(p.credit, 6.0);
    }

    #[test]
    fn sold_out_below_average_raises_price() {
        for eta in [1e-9, 0.03, 0.1] {
            let p = plan(input(0.8, 30.0, 30.0, 100.0), STATS, eta, 0.1, 1.0, 3.0, 0.0);
            assert!(p.price > 0.8 && p.price <= 0.8 * 1.1 + 1e-12);
            assert_eq!(p.expected_demand, 30.0);
        }
    }

    #[test]
    fn other_quadrants() {
        let up = plan(input(1.2, 30.0, 30.0, 100.0), STATS, 0.1, 0.1, 1.0, 3.0, 0.0);
        assert_eq!((up.price, up.expected_demand), (1.2, 33.0));
        let cut = plan(input(1.2, 30.0, 10.0, 100.0), STATS, 0.1, 0.1, 1.0, 3.0, 0.0);
        assert!((cut.price - 1.08).abs() < 1e-12);
        let shrink = plan(input(0.9, 30.0, 10.0, 100.0), STATS, 0.1, 0.1, 1.0, 3.0, 0.0);
        assert_eq!(shrink.price, 0.9);
        assert!((shrink.expected_demand - 27.0).abs() < 1e-12);
    }

    #[test]
    fn labour_is_ceiling() {
        assert_eq!(labour_demand(10.0, 3.0), 4);
        assert_eq!(labour_demand(9.0, 3.0), 3);
        assert_eq!(labour_demand(0.0, 3.0), 0);
    }
}
