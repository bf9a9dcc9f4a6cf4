pub mod acceptability;
pub mod cli;
pub mod cone;
pub mod lattice;
pub mod lp;
pub mod market;
pub mod pricing;
