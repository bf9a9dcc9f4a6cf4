//! Liquidity surface of the Asian call as CSV.

use conic_pricer::cli::{surface_csv, ModelFile, PayoffFile};
use conic_pricer::lattice::NodeRef;
use conic_pricer::pricing::{liquidity_surface, PricingError};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mf = ModelFile::from_json(include_str!("../fixtures/asian_model.json"))?;
    let pf = PayoffFile::from_json(include_str!("../fixtures/asian_call_k65.json"))?;
    let build = |lambda: f64| mf.build_with(Some(lambda)).map_err(|e| PricingError::Oracle(e.message));
    let pay = |m: &_| pf.build(m).map_err(|e| PricingError::Oracle(e.message));
    let gammas = [0.05, 0.5, 1.25, 2.0, 10.0];
    let lambdas = [0.0, 0.005, 0.01];
    let rows = liquidity_surface(build, pay, &gammas, &lambdas, NodeRef::new(0, 0))?;
    print!("{}", surface_csv(&rows, 6));
    Ok(())
}
