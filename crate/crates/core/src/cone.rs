//! A finite generating family of hedging cash flows, and arbitrage detection.
//!
//! A generator buys (or shorts) one unit of a security at a root node and
//! unwinds it along a stopping profile: an antichain of later nodes that every
//! path through the root crosses exactly once. Conic combinations of these
//! round trips, minus nonnegative throwaways, give every discounted hedging
//! cash flow started at or after a date.

use std::fmt;

use thiserror::Error;

use crate::lattice::{EventTree, NodeRef};
use crate::lp::{self, LinearProgram, LpError, LpStatus, SolverOptions};
use crate::market::{wealth_process, MarketError, MarketModel, TradingStrategy};

pub const DEFAULT_GENERATOR_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("no stopping profile below node {0}: it sits at the horizon")]
    RootAtHorizon(NodeRef),
    #[error("start time {t} outside 0..{horizon}")]
    StartTime { t: usize, horizon: usize },
    #[error("{count} generators exceed the cap of {cap}; use a shorter horizon or a coarser tree")]
    CapExceeded { count: u128, cap: usize },
    #[error("generator {index} disagrees with its strategy by {error:.3e}")]
    Inconsistent { index: usize, error: f64 },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StoppingProfile {
    pub root: NodeRef,
    /// Liquidation nodes, in child order.
    pub sells: Vec<NodeRef>,
}

impl StoppingProfile {
    /// The liquidation node crossed by `path`, if the path goes through the root.
    pub fn sell_node_for(&self, tree: &EventTree, path: usize) -> Option<NodeRef> {
        self.sells.iter().copied().find(|w| tree.node_of(path, w.time) == *w)
    }
}

impl fmt::Display for StoppingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {{", self.root)?;
        for (k, w) in self.sells.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "}}")
    }
}

fn check_root(tree: &EventTree, root: NodeRef) -> Result<(), ConeError> {
    tree.check_node(root).map_err(|e| ConeError::Market(e.into()))?;
    if root.time >= tree.horizon() {
        return Err(ConeError::RootAtHorizon(root));
    }
    Ok(())
}

/// Number of cuts of the subtree below `node` that include `node` itself as an option.
fn cuts_through(tree: &EventTree, node: NodeRef) -> u128 {
    if node.time == tree.horizon() {
        return 1;
    }
    let below = tree.children(node).fold(1u128, |acc, c| acc.saturating_mul(cuts_through(tree, c)));
    below.saturating_add(1)
}

/// Number of stopping profiles below `root`.
pub fn count_profiles(tree: &EventTree, root: NodeRef) -> Result<u128, ConeError> {
    check_root(tree, root)?;
    Ok(tree.children(root).fold(1u128, |acc, c| acc.saturating_mul(cuts_through(tree, c))))
}

fn cuts_of(tree: &EventTree, node: NodeRef) -> Vec<Vec<NodeRef>> {
    let mut out = vec![vec![node]];
    if node.time < tree.horizon() {
        out.extend(product_of_cuts(tree, node));
    }
    out
}

fn product_of_cuts(tree: &EventTree, node: NodeRef) -> Vec<Vec<NodeRef>> {
    let mut acc: Vec<Vec<NodeRef>> = vec![Vec::new()];
    for child in tree.children(node) {
        let options = cuts_of(tree, child);
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for prefix in &acc {
            for opt in &options {
                let mut v = prefix.clone();
                v.extend_from_slice(opt);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// All liquidation profiles strictly below `root`.
///
/// Order: the first child is most significant; for each child, selling at the
/// child comes before every deeper cut.
pub fn stopping_profiles(tree: &EventTree, root: NodeRef) -> Result<Vec<StoppingProfile>, ConeError> {
    check_root(tree, root)?;
    Ok(product_of_cuts(tree, root).into_iter().map(|sells| StoppingProfile { root, sells }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Long,
    Short,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeGenerator {
    pub kind: Kind,
    pub security: usize,
    pub profile: StoppingProfile,
    /// Discounted total cash flow per path; zero off the root's paths.
    pub value: Vec<f64>,
}

impl ConeGenerator {
    pub fn root(&self) -> NodeRef {
        self.profile.root
    }

    /// The round trip as a self-financing strategy with zero initial cost at the root.
    pub fn strategy(&self, model: &MarketModel) -> TradingStrategy {
        let tree = model.tree();
        let sec = &model.securities()[self.security];
        let slot = self.security + 1;
        let s = self.profile.root.time;
        let horizon = model.horizon();
        let mut phi = TradingStrategy::zeros(model);
        for &i in tree.paths_of(self.profile.root) {
            let w = self.profile.sell_node_for(tree, i).expect("profiles cover the root");
            let (sign, open) = match self.kind {
                Kind::Long => (1.0, sec.ask.get(i, s)),
                Kind::Short => (-1.0, sec.bid.get(i, s)),
            };
            let mut cash = -sign * open / model.b(i, s);
            for t in s + 1..=horizon {
                phi.set(0, i, t, cash);
                if t <= w.time {
                    phi.set(slot, i, t, sign);
                }
                let div = match self.kind {
                    Kind::Long => sec.d_ask(i, t),
                    Kind::Short => sec.d_bid(i, t),
                };
                if t <= w.time {
                    cash += sign * div / model.b(i, t);
                }
                if t == w.time {
                    let close = match self.kind {
                        Kind::Long => sec.bid.get(i, t),
                        Kind::Short => sec.ask.get(i, t),
                    };
                    cash += sign * close / model.b(i, t);
                }
            }
        }
        phi
    }

    pub fn label(&self, model: &MarketModel) -> String {
        let kind = match self.kind {
            Kind::Long => "long",
            Kind::Short => "short",
        };
        format!("{kind} {} {}", model.securities()[self.security].name, self.profile)
    }
}

fn generator_value(model: &MarketModel, kind: Kind, j: usize, profile: &StoppingProfile) -> Vec<f64> {
    let tree = model.tree();
    let sec = &model.securities()[j];
    let s = profile.root.time;
    let mut value = vec![0.0; tree.n_paths()];
    for &i in tree.paths_of(profile.root) {
        let w = profile.sell_node_for(tree, i).expect("profiles cover the root");
        let u = w.time;
        value[i] = match kind {
            Kind::Long => {
                let divs: f64 = (s + 1..=u).map(|v| sec.d_ask(i, v) / model.b(i, v)).sum();
                -sec.ask.get(i, s) / model.b(i, s) + divs + sec.bid.get(i, u) / model.b(i, u)
            }
            Kind::Short => {
                let divs: f64 = (s + 1..=u).map(|v| sec.d_bid(i, v) / model.b(i, v)).sum();
                sec.bid.get(i, s) / model.b(i, s) - divs - sec.ask.get(i, u) / model.b(i, u)
            }
        };
    }
    value
}

/// Generators rooted at dates `start..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    pub start: usize,
    pub generators: Vec<ConeGenerator>,
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ConeGenerator> {
        self.generators.iter()
    }

    /// Indices of generators rooted in the subtree of `node`.
    pub fn rooted_in(&self, tree: &EventTree, node: NodeRef) -> Vec<usize> {
        (0..self.generators.len()).filter(|&k| tree.is_descendant(self.generators[k].root(), node)).collect()
    }

    /// The subset rooted at dates `≥ t`.
    pub fn from_time(&self, t: usize) -> GeneratorSet {
        GeneratorSet {
            start: t.max(self.start),
            generators: self.generators.iter().filter(|g| g.root().time >= t).cloned().collect(),
        }
    }
}

pub fn count_generators(model: &MarketModel, t: usize) -> Result<u128, ConeError> {
    let tree = model.tree();
    let horizon = model.horizon();
    if t >= horizon {
        return Err(ConeError::StartTime { t, horizon });
    }
    let per_root: u128 = 2 * model.securities().len() as u128;
    let mut total = 0u128;
    for s in t..horizon {
        for node in tree.nodes_at(s) {
            total = total.saturating_add(count_profiles(tree, node)?.saturating_mul(per_root));
        }
    }
    Ok(total)
}

pub fn generators_for(model: &MarketModel, t: usize) -> Result<GeneratorSet, ConeError> {
    generators_with_cap(model, t, DEFAULT_GENERATOR_CAP)
}

/// Enumerates generators rooted at dates `t..T`: roots by (time, cell), then
/// security, then profile, long before short.
pub fn generators_with_cap(model: &MarketModel, t: usize, cap: usize) -> Result<GeneratorSet, ConeError> {
    let count = count_generators(model, t)?;
    if count > cap as u128 {
        return Err(ConeError::CapExceeded { count, cap });
    }
    let tree = model.tree();
    let mut generators = Vec::with_capacity(count as usize);
    for s in t..model.horizon() {
        for root in tree.nodes_at(s) {
            let profiles = stopping_profiles(tree, root)?;
            for j in 0..model.securities().len() {
                for profile in &profiles {
                    for kind in [Kind::Long, Kind::Short] {
                        let value = generator_value(model, kind, j, profile);
                        generators.push(ConeGenerator { kind, security: j, profile: profile.clone(), value });
                    }
                }
            }
        }
    }
    let set = GeneratorSet { start: t, generators };
    verify_against_strategies(model, &set)?;
    Ok(set)
}

/// Checks every generator against the discounted terminal wealth of its strategy.
pub fn verify_against_strategies(model: &MarketModel, set: &GeneratorSet) -> Result<(), ConeError> {
    let horizon = model.horizon();
    for (index, g) in set.generators.iter().enumerate() {
        let v = wealth_process(model, &g.strategy(model))?;
        let error = (0..model.tree().n_paths())
            .map(|i| (v.get(i, horizon) / model.b(i, horizon) - g.value[i]).abs())
            .fold(0.0, f64::max);
        let scale = 1.0 + g.value.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if !(error <= 1e-9 * scale) {
            return Err(ConeError::Inconsistent { index, error });
        }
    }
    Ok(())
}

/// A conic combination of generators with nonnegative value and positive mean on a node.
#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageWitness {
    pub node: NodeRef,
    /// `(generator index, weight)` with positive weights only.
    pub weights: Vec<(usize, f64)>,
    /// Combined discounted cash flow per path.
    pub cash_flow: Vec<f64>,
}

pub fn arbitrage_check(model: &MarketModel, t: usize) -> Result<Option<ArbitrageWitness>, ConeError> {
    let set = generators_for(model, t)?;
    arbitrage_check_with(model, &set, t, &SolverOptions::from_env())
}

/// Per time-`t` node, looks for weights `x ≥ 0` with `Σ xG ≥ 0` on the node
/// and `Σ x·𝔼[G; node] ≥ 1`.
pub fn arbitrage_check_with(
    model: &MarketModel,
    set: &GeneratorSet,
    t: usize,
    opts: &SolverOptions,
) -> Result<Option<ArbitrageWitness>, ConeError> {
    let tree = model.tree();
    let p = tree.probabilities();
    for node in tree.nodes_at(t) {
        let ks = set.rooted_in(tree, node);
        if ks.is_empty() {
            continue;
        }
        let paths = tree.paths_of(node);
        let mut lp = LinearProgram::feasibility(ks.len());
        for &i in paths {
            lp.geq(ks.iter().map(|&k| set.generators[k].value[i]).collect(), 0.0);
        }
        let mass: Vec<f64> = ks.iter().map(|&k| paths.iter().map(|&i| p[i] * set.generators[k].value[i]).sum()).collect();
        lp.geq(mass, 1.0);
        let sol = lp::solve_with(&lp, opts)?;
        if sol.status == LpStatus::Optimal {
            let weights: Vec<(usize, f64)> =
                ks.iter().zip(&sol.primal).filter(|(_, &x)| x > 0.0).map(|(&k, &x)| (k, x)).collect();
            let mut cash_flow = vec![0.0; tree.n_paths()];
            for &(k, x) in &weights {
                for (c, g) in cash_flow.iter_mut().zip(&set.generators[k].value) {
                    *c += x * g;
                }
            }
            return Ok(Some(ArbitrageWitness { node, weights, cash_flow }));
        }
        debug_assert_eq!(sol.status, LpStatus::Infeasible);
    }
    Ok(None)
}
