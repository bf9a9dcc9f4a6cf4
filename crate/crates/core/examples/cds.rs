//! Bounds on a credit default swap written on a defaultable bond.

use conic_pricer::cli::{ModelFile, PayoffFile, Side};
use conic_pricer::pricing::Pricer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelFile::from_json(include_str!("../fixtures/cds_model.json"))?.build()?;
    let buyer = PayoffFile::from_json(include_str!("../fixtures/cds_buyer.json"))?;
    let seller = match buyer.clone() {
        PayoffFile::Cds { tau, delta, kappa_ask, kappa_bid, .. } => PayoffFile::Cds { tau, delta, kappa_ask, kappa_bid, side: Side::Sell },
        other => other,
    };
    let pricer = Pricer::new(model.clone())?;
    for (name, p) in [("buyer", buyer), ("seller", seller)] {
        let d = p.build(&model)?;
        let b = pricer.noarb_bounds(&d, 0)?.nodes[0];
        println!("{name:<7} lower={:.6} upper={:.6}", b.bid, b.ask);
    }
    Ok(())
}
