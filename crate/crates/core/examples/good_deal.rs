//! Good-deal quotes: a binomial model where the no-good-deal condition holds
//! for large levels, and the trinomial Asian model where it fails.

use conic_pricer::cli::{ModelFile, PayoffFile};
use conic_pricer::pricing::{NgdOutcome, Pricer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut binomial = ModelFile::from_json(include_str!("../fixtures/binomial.json"))?;
    binomial.probabilities = vec![
        conic_pricer::cli::Probability::Number(0.6),
        conic_pricer::cli::Probability::Number(0.4),
    ];
    let model = binomial.build()?;
    let pricer = Pricer::new(model.clone())?;
    let call = PayoffFile::from_json(include_str!("../fixtures/binomial_call_k60.json"))?.build(&model)?;
    for gamma in [1.0, 3.0, 4.0, 10.0] {
        let q = pricer.good_deal_prices(&call, 0, gamma)?;
        let n = q.nodes[0];
        println!("binomial  gamma={gamma:<5} bid={:<10.6} ask={:<10.6} {}", n.bid, n.ask, n.status);
    }

    let asian = ModelFile::from_json(include_str!("../fixtures/asian_model.json"))?.build()?;
    let pricer = Pricer::new(asian.clone())?;
    match pricer.ngd_check(0, 0.05)? {
        NgdOutcome::Holds { .. } => println!("asian: no good deal at gamma=0.05"),
        NgdOutcome::Violated { certificate } => {
            let c = certificate.expect("a certificate");
            println!("asian: good deal at {} via {}", c.node, c.label);
            println!("       dGLR = {:.6}, cash flow {:?}", c.dglr, c.cash_flow);
        }
    }
    Ok(())
}
