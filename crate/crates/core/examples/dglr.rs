//! Gain-loss ratio of the buy-and-hold flow and the matching band minimum.

use conic_pricer::acceptability::{closed_form_band_minimum, dglr_eval, index_level, rho_gamma};
use conic_pricer::cli::{ModelFile, PayoffFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelFile::from_json(include_str!("../fixtures/asian_model.json"))?.build()?;
    let flow = PayoffFile::from_json(include_str!("../fixtures/buy_and_hold.json"))?.build(&model)?;
    let tree = model.tree();
    println!("dGLR at t=0:        {:.6}", dglr_eval(tree, flow.values(), 0)[0]);
    println!("index by bisection: {:.6}", index_level(tree, flow.values(), 0)[0]);
    let x = flow.values().tail_sum(0);
    for gamma in [1.0, 1.714286, 2.0] {
        let rho = rho_gamma(tree, flow.values(), 0, gamma)?[0].value;
        let min = closed_form_band_minimum(tree.probabilities(), &x, gamma);
        println!("gamma={gamma:<9} rho={rho:>9.6}  E - gamma E[X-]={min:>9.6}");
    }
    Ok(())
}
