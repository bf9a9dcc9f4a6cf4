//! No-arbitrage bounds of the strike-65 Asian call for three cost levels.

use conic_pricer::cli::{ModelFile, PayoffFile};
use conic_pricer::pricing::Pricer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model_file = ModelFile::from_json(include_str!("../fixtures/asian_model.json"))?;
    let payoff = PayoffFile::from_json(include_str!("../fixtures/asian_call_k65.json"))?;
    println!("lambda  t  node    lower     upper");
    for lambda in [0.0, 0.005, 0.01] {
        let model = model_file.build_with(Some(lambda))?;
        let d = payoff.build(&model)?;
        let pricer = Pricer::new(model)?;
        for t in 0..2 {
            for q in pricer.noarb_bounds(&d, t)?.nodes {
                println!("{lambda:<7} {t}  {:<6} {:>8.5} {:>9.5}", q.node, q.bid, q.ask);
            }
        }
    }
    Ok(())
}
