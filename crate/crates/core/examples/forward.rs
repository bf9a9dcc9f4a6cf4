//! Forward quotes under a flat 10% rate equal 1.21 times the spot quotes.

use conic_pricer::cli::{ModelFile, PayoffFile};
use conic_pricer::pricing::Pricer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelFile::from_json(include_str!("../fixtures/flat_rate_model.json"))?.build()?;
    let d = PayoffFile::from_json(include_str!("../fixtures/flat_rate_call.json"))?.build(&model)?;
    let pricer = Pricer::new(model)?;
    for gamma in [0.5, 5.0] {
        let spot = pricer.good_deal_prices(&d, 0, gamma)?.nodes[0];
        let fwd = pricer.forward_prices(&d, 0, gamma)?.nodes[0];
        println!("gamma={gamma:<4} spot [{:.6}, {:.6}] {}  forward [{:.6}, {:.6}]", spot.bid, spot.ask, spot.status, fwd.bid, fwd.ask);
    }
    Ok(())
}
