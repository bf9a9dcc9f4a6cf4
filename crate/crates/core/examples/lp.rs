//! The simplex kernel on a plain LP and on a linear-fractional objective.

use conic_pricer::lp::{solve, solve_ratio, Affine, LinearProgram, Sense};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
    lp.leq(vec![1.0, 1.0], 4.0);
    lp.leq(vec![1.0, 3.0], 6.0);
    lp.bounds(0, 0.0, Some(3.0));
    let sol = solve(&lp)?;
    println!("max 3x+2y: {:?} value={} at {:?}", sol.status, sol.value, sol.primal);

    let mut box_ = LinearProgram::feasibility(1);
    box_.leq(vec![1.0], 1.0);
    let r = solve_ratio(&Affine::new(vec![2.0], 1.0), &Affine::new(vec![1.0], 1.0), &box_, Sense::Maximize)?;
    println!("max (2x+1)/(x+1) on [0,1]: {} at {:?}", r.value, r.point);
    Ok(())
}
