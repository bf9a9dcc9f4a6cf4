//! Arbitrage detection on a one-period market whose up move is too small.

use conic_pricer::cone::arbitrage_check;
use conic_pricer::lattice::{AdaptedProcess, EventTree};
use conic_pricer::market::{MarketModel, Security};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = EventTree::new(vec![0.5, 0.5], vec![vec![vec![0, 1]], vec![vec![0], vec![1]]])?;
    for (label, down) in [("sound", 40.0), ("broken", 55.0)] {
        let bid = AdaptedProcess::from_rows(&[vec![50.0, 80.0], vec![50.0, down]])?;
        let model = MarketModel::new(tree.clone(), AdaptedProcess::zeros(2, 1), vec![Security::with_lambda("s", bid, 0.01)?])?;
        match arbitrage_check(&model, 0)? {
            None => println!("{label}: no arbitrage"),
            Some(w) => println!("{label}: arbitrage at {} with cash flow {:?}", w.node, w.cash_flow),
        }
    }
    Ok(())
}
