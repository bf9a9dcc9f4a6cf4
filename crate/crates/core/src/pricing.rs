//! Price bounds from measure polytopes.
//!
//! A measure is encoded by its density on paths, `u(ω) = dℚ/dℙ` up to scale.
//! Risk neutrality against the cone generators is one row per generator,
//! `Σ u ℙ G ≤ 0`, and the dGLR density band adds `m ≤ u ≤ (1+γ)m`. Conditional
//! expectations on a node are linearized by normalizing `Σ_A u ℙ = 1`, which is
//! legitimate because every other row is homogeneous in `(u, m)`.

use thiserror::Error;

use crate::acceptability::{self, AcceptabilityError, DensityBand, RiskLevel};
use crate::cone::{self, ConeError, GeneratorSet};
use crate::lattice::NodeRef;
use crate::lp::{self, LinearProgram, LpError, LpStatus, Sense, SolverOptions};
use crate::market::{CashFlow, MarketError, MarketModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("pricing date {t} outside 0..{horizon}")]
    Time { t: usize, horizon: usize },
    #[error("forward prices need deterministic interest rates")]
    StochasticRates,
    #[error("cash flow does not match the model's tree")]
    Shape,
    #[error("no preset at λ = {lambda}: {source}")]
    Builder { lambda: f64, source: Box<PricingError> },
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("{0} list is empty")]
    EmptyGrid(&'static str),
    #[error("unexpected LP status {0:?}")]
    Status(LpStatus),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Acceptability(#[from] AcceptabilityError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteStatus {
    Ok,
    NgdViolated,
    Arbitrage,
    Infeasible,
}

impl QuoteStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QuoteStatus::Ok => "ok",
            QuoteStatus::NgdViolated => "ngd-violated",
            QuoteStatus::Arbitrage => "arbitrage",
            QuoteStatus::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for QuoteStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeQuote {
    pub node: NodeRef,
    pub bid: f64,
    pub ask: f64,
    pub status: QuoteStatus,
}

impl NodeQuote {
    fn sentinel(node: NodeRef, status: QuoteStatus) -> Self {
        match status {
            QuoteStatus::NgdViolated => Self { node, bid: f64::INFINITY, ask: f64::NEG_INFINITY, status },
            _ => Self { node, bid: f64::NAN, ask: f64::NAN, status },
        }
    }

    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }
}

/// A hedging cash flow that is a good deal on some node.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodDealCertificate {
    pub node: NodeRef,
    /// `(generator index, weight)` into the set rooted at dates `≥ t`.
    pub weights: Vec<(usize, f64)>,
    /// Discounted total cash flow per path.
    pub cash_flow: Vec<f64>,
    /// dGLR of the cash flow on `node`.
    pub dglr: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceQuote {
    pub t: usize,
    pub gamma: Option<f64>,
    pub nodes: Vec<NodeQuote>,
    pub certificate: Option<GoodDealCertificate>,
}

impl PriceQuote {
    pub fn node(&self, node: NodeRef) -> Option<&NodeQuote> {
        self.nodes.iter().find(|q| q.node == node)
    }

    pub fn status(&self) -> QuoteStatus {
        self.nodes
            .iter()
            .map(|q| q.status)
            .find(|s| *s != QuoteStatus::Ok)
            .unwrap_or(QuoteStatus::Ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NgdOutcome {
    /// A density in the band that is risk neutral for every generator.
    Holds { density: Vec<f64> },
    Violated { certificate: Option<GoodDealCertificate> },
}

impl NgdOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, NgdOutcome::Holds { .. })
    }
}

const ROW_SLACK: f64 = 64.0 * f64::EPSILON;

/// Columns `u(ω)` for the given paths, plus `m` when a band is present.
#[derive(Debug, Clone)]
pub struct MeasurePolytope {
    pub paths: Vec<usize>,
    pub band: Option<DensityBand>,
    pub program: LinearProgram,
}

impl MeasurePolytope {
    /// Generator rows over `paths` (generators vanishing there are skipped), and
    /// optionally the band over the same paths.
    pub fn new(model: &MarketModel, paths: Vec<usize>, generators: &GeneratorSet, band: Option<DensityBand>) -> Self {
        let p = model.tree().probabilities();
        let n = paths.len() + usize::from(band.is_some());
        let mut program = LinearProgram::feasibility(n);
        for g in generators.iter() {
            if paths.iter().all(|&i| g.value[i] == 0.0) {
                continue;
            }
            let mut row: Vec<f64> = paths.iter().map(|&i| p[i] * g.value[i]).collect();
            // generators are rounded separately, so in a complete market the pinned
            // measure misses some rows by a few ulps; allow that much slack
            let slack = ROW_SLACK * row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            row.resize(n, 0.0);
            program.leq(row, slack);
        }
        if let Some(b) = band {
            let cols: Vec<usize> = (0..paths.len()).collect();
            b.add_rows(&mut program, &cols, paths.len());
        }
        Self { paths, band, program }
    }

    pub fn m_col(&self) -> Option<usize> {
        self.band.map(|_| self.paths.len())
    }

    /// `Σ_{ω ∈ subset} u ℙ = 1`.
    pub fn normalize_on(&mut self, model: &MarketModel, subset: &[usize]) {
        let p = model.tree().probabilities();
        let mut row = vec![0.0; self.program.num_vars()];
        for (c, &i) in self.paths.iter().enumerate() {
            if subset.contains(&i) {
                row[c] = p[i];
            }
        }
        self.program.equal(row, 1.0);
    }

    /// Objective `Σ_{ω ∈ subset} u ℙ x`.
    pub fn objective_on(&self, model: &MarketModel, subset: &[usize], x: &[f64]) -> Vec<f64> {
        let p = model.tree().probabilities();
        let mut obj = vec![0.0; self.program.num_vars()];
        for (c, &i) in self.paths.iter().enumerate() {
            if subset.contains(&i) {
                obj[c] = p[i] * x[i];
            }
        }
        obj
    }

    fn optimize(&self, sense: Sense, objective: Vec<f64>, opts: &SolverOptions) -> Result<lp::LpSolution, LpError> {
        let mut program = self.program.clone();
        program.sense = sense;
        program.objective = objective;
        lp::solve_with(&program, opts)
    }
}

/// Pricing engine over one market model; caches the generator family.
#[derive(Debug, Clone)]
pub struct Pricer {
    model: MarketModel,
    generators: GeneratorSet,
    opts: SolverOptions,
}

impl Pricer {
    pub fn new(model: MarketModel) -> Result<Self, PricingError> {
        Self::with_options(model, SolverOptions::from_env())
    }

    pub fn with_options(model: MarketModel, opts: SolverOptions) -> Result<Self, PricingError> {
        let generators = cone::generators_for(&model, 0)?;
        Ok(Self { model, generators, opts })
    }

    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    /// Generators rooted at dates `t..T`.
    pub fn generators(&self, t: usize) -> GeneratorSet {
        self.generators.from_time(t)
    }

    fn check_time(&self, t: usize) -> Result<(), PricingError> {
        let horizon = self.model.horizon();
        if t >= horizon {
            return Err(PricingError::Time { t, horizon });
        }
        Ok(())
    }

    /// `tail_sum(D*, t+1)` per path.
    pub fn discounted_tail(&self, d: &CashFlow, t: usize) -> Result<Vec<f64>, PricingError> {
        self.model.tree().check_shape(d.values()).map_err(|_| PricingError::Shape)?;
        Ok(self.model.discounted(d).tail_sum(t + 1))
    }

    /// Arbitrage witness per time-`t` node.
    pub fn arbitrage(&self, t: usize) -> Result<Option<cone::ArbitrageWitness>, PricingError> {
        self.check_time(t)?;
        Ok(cone::arbitrage_check_with(&self.model, &self.generators(t), t, &self.opts)?)
    }

    /// Lower and upper no-arbitrage bounds on every time-`t` node.
    pub fn noarb_bounds(&self, d: &CashFlow, t: usize) -> Result<PriceQuote, PricingError> {
        self.check_time(t)?;
        let x = self.discounted_tail(d, t)?;
        let tree = self.model.tree();
        let set = self.generators(t);
        let mut nodes = Vec::new();
        for node in tree.nodes_at(t) {
            let single = GeneratorSet { start: t, generators: set.rooted_in(tree, node).into_iter().map(|k| set.generators[k].clone()).collect() };
            if cone::arbitrage_check_with(&self.model, &single, t, &self.opts)?.map_or(false, |w| w.node == node) {
                nodes.push(NodeQuote::sentinel(node, QuoteStatus::Arbitrage));
                continue;
            }
            let paths = tree.paths_of(node).to_vec();
            let mut poly = MeasurePolytope::new(&self.model, paths.clone(), &single, None);
            poly.normalize_on(&self.model, &paths);
            nodes.push(self.extremes(&poly, node, &paths, &x)?);
        }
        Ok(PriceQuote { t, gamma: None, nodes, certificate: None })
    }

    fn extremes(&self, poly: &MeasurePolytope, node: NodeRef, subset: &[usize], x: &[f64]) -> Result<NodeQuote, PricingError> {
        let obj = poly.objective_on(&self.model, subset, x);
        let hi = poly.optimize(Sense::Maximize, obj.clone(), &self.opts)?;
        let lo = poly.optimize(Sense::Minimize, obj, &self.opts)?;
        match (hi.status, lo.status) {
            (LpStatus::Optimal, LpStatus::Optimal) => Ok(NodeQuote { node, bid: lo.value + 0.0, ask: hi.value + 0.0, status: QuoteStatus::Ok }),
            (LpStatus::Infeasible, _) | (_, LpStatus::Infeasible) => Ok(NodeQuote::sentinel(node, QuoteStatus::Infeasible)),
            (s, _) if s != LpStatus::Optimal => Err(PricingError::Status(s)),
            (_, s) => Err(PricingError::Status(s)),
        }
    }

    /// The full polytope at level `γ`: band over all paths, all generator rows from `t`.
    pub fn good_deal_polytope(&self, t: usize, level: RiskLevel) -> MeasurePolytope {
        let n = self.model.tree().n_paths();
        MeasurePolytope::new(&self.model, (0..n).collect(), &self.generators(t), Some(DensityBand::new(level)))
    }

    /// Whether some band density is risk neutral for the generators from `t`.
    pub fn ngd_check(&self, t: usize, gamma: f64) -> Result<NgdOutcome, PricingError> {
        self.check_time(t)?;
        let level = RiskLevel::new(gamma)?;
        let n = self.model.tree().n_paths();
        let mut poly = self.good_deal_polytope(t, level);
        poly.normalize_on(&self.model, &(0..n).collect::<Vec<_>>());
        let sol = lp::solve_with(&poly.program, &self.opts)?;
        match sol.status {
            LpStatus::Optimal => Ok(NgdOutcome::Holds { density: sol.primal[..n].to_vec() }),
            LpStatus::Infeasible => Ok(NgdOutcome::Violated { certificate: self.good_deal_certificate(t, gamma)? }),
            s => Err(PricingError::Status(s)),
        }
    }

    /// A hedging flow with `ρ^γ < 0` on some time-`t` node: the first single
    /// generator in enumeration order that qualifies, else the best convex
    /// combination found by LP.
    pub fn good_deal_certificate(&self, t: usize, gamma: f64) -> Result<Option<GoodDealCertificate>, PricingError> {
        self.check_time(t)?;
        let tree = self.model.tree();
        let p = tree.probabilities();
        let set = self.generators(t);
        let margin = |xs: &[f64], ps: &[f64]| acceptability::closed_form_band_minimum(ps, xs, gamma);
        for node in tree.nodes_at(t) {
            let paths = tree.paths_of(node);
            let ps: Vec<f64> = paths.iter().map(|&i| p[i]).collect();
            for k in set.rooted_in(tree, node) {
                let g = &set.generators[k];
                let xs: Vec<f64> = paths.iter().map(|&i| g.value[i]).collect();
                let scale = 1.0 + xs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                if margin(&xs, &ps) > 1e-9 * scale {
                    return Ok(Some(GoodDealCertificate {
                        node,
                        weights: vec![(k, 1.0)],
                        cash_flow: g.value.clone(),
                        dglr: acceptability::gain_loss_ratio(&ps, &xs),
                        label: g.label(&self.model),
                    }));
                }
            }
        }
        for node in tree.nodes_at(t) {
            if let Some(c) = self.combination_certificate(&set, node, gamma)? {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }

    /// `max 𝔼[X] − γ𝔼[z]` with `z ≥ X⁻`, `X = Σ xG`, `Σ x = 1`, over generators rooted in `node`.
    fn combination_certificate(&self, set: &GeneratorSet, node: NodeRef, gamma: f64) -> Result<Option<GoodDealCertificate>, PricingError> {
        let tree = self.model.tree();
        let p = tree.probabilities();
        let ks = set.rooted_in(tree, node);
        if ks.is_empty() {
            return Ok(None);
        }
        let paths = tree.paths_of(node);
        let (nk, np) = (ks.len(), paths.len());
        let mass: f64 = paths.iter().map(|&i| p[i]).sum();
        let mut obj = vec![0.0; nk + np];
        for (c, &k) in ks.iter().enumerate() {
            obj[c] = paths.iter().map(|&i| p[i] * set.generators[k].value[i]).sum::<f64>() / mass;
        }
        for (r, &i) in paths.iter().enumerate() {
            obj[nk + r] = -gamma * p[i] / mass;
        }
        let mut program = LinearProgram::new(Sense::Maximize, obj);
        for (r, &i) in paths.iter().enumerate() {
            // −Σ x G(ω) − z(ω) ≤ 0
            let mut row = vec![0.0; nk + np];
            for (c, &k) in ks.iter().enumerate() {
                row[c] = -set.generators[k].value[i];
            }
            row[nk + r] = -1.0;
            program.leq(row, 0.0);
        }
        let mut simplex = vec![0.0; nk + np];
        simplex[..nk].iter_mut().for_each(|v| *v = 1.0);
        program.equal(simplex, 1.0);
        let sol = lp::solve_with(&program, &self.opts)?;
        if sol.status != LpStatus::Optimal || sol.value <= self.opts.tolerance * 10.0 {
            return Ok(None);
        }
        let weights: Vec<(usize, f64)> = ks.iter().zip(&sol.primal).filter(|(_, &x)| x > 0.0).map(|(&k, &x)| (k, x)).collect();
        let mut cash_flow = vec![0.0; tree.n_paths()];
        for &(k, x) in &weights {
            for (c, g) in cash_flow.iter_mut().zip(&set.generators[k].value) {
                *c += x * g;
            }
        }
        let ps: Vec<f64> = paths.iter().map(|&i| p[i]).collect();
        let xs: Vec<f64> = paths.iter().map(|&i| cash_flow[i]).collect();
        let dglr = acceptability::gain_loss_ratio(&ps, &xs);
        if !(dglr > gamma) {
            return Ok(None);
        }
        Ok(Some(GoodDealCertificate { node, weights, cash_flow, dglr, label: "convex combination of generators".into() }))
    }

    /// Discounted good-deal bid and ask on every time-`t` node.
    pub fn good_deal_prices(&self, d: &CashFlow, t: usize, gamma: f64) -> Result<PriceQuote, PricingError> {
        self.check_time(t)?;
        let level = RiskLevel::new(gamma)?;
        let x = self.discounted_tail(d, t)?;
        let tree = self.model.tree();
        if let NgdOutcome::Violated { certificate } = self.ngd_check(t, gamma)? {
            let nodes = tree.nodes_at(t).map(|n| NodeQuote::sentinel(n, QuoteStatus::NgdViolated)).collect();
            return Ok(PriceQuote { t, gamma: Some(gamma), nodes, certificate });
        }
        let base = self.good_deal_polytope(t, level);
        let mut nodes = Vec::new();
        for node in tree.nodes_at(t) {
            let paths = tree.paths_of(node).to_vec();
            let mut poly = base.clone();
            poly.normalize_on(&self.model, &paths);
            nodes.push(self.extremes(&poly, node, &paths, &x)?);
        }
        Ok(PriceQuote { t, gamma: Some(gamma), nodes, certificate: None })
    }

    /// Good-deal forward prices `B_T·Π`.
    pub fn forward_prices(&self, d: &CashFlow, t: usize, gamma: f64) -> Result<PriceQuote, PricingError> {
        if !self.model.has_deterministic_rates() {
            return Err(PricingError::StochasticRates);
        }
        let mut quote = self.good_deal_prices(d, t, gamma)?;
        let b_t = self.model.b(0, self.model.horizon());
        for q in &mut quote.nodes {
            if q.status == QuoteStatus::Ok {
                q.bid *= b_t;
                q.ask *= b_t;
            }
        }
        Ok(quote)
    }
}

pub fn noarb_bounds(model: &MarketModel, d: &CashFlow, t: usize) -> Result<PriceQuote, PricingError> {
    Pricer::new(model.clone())?.noarb_bounds(d, t)
}

pub fn ngd_check(model: &MarketModel, t: usize, gamma: f64) -> Result<NgdOutcome, PricingError> {
    Pricer::new(model.clone())?.ngd_check(t, gamma)
}

pub fn good_deal_prices(model: &MarketModel, d: &CashFlow, t: usize, gamma: f64) -> Result<PriceQuote, PricingError> {
    Pricer::new(model.clone())?.good_deal_prices(d, t, gamma)
}

pub fn forward_prices(model: &MarketModel, d: &CashFlow, t: usize, gamma: f64) -> Result<PriceQuote, PricingError> {
    Pricer::new(model.clone())?.forward_prices(d, t, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub gamma: f64,
    pub lambda: f64,
    pub bid: f64,
    pub ask: f64,
    pub spread: f64,
    pub status: QuoteStatus,
}

/// Good-deal quotes on `node` over a `γ × λ` grid, rebuilding the model for each `λ`.
pub fn liquidity_surface<B, P>(
    build: B,
    payoff: P,
    gammas: &[f64],
    lambdas: &[f64],
    node: NodeRef,
) -> Result<Vec<SurfacePoint>, PricingError>
where
    B: Fn(f64) -> Result<MarketModel, PricingError>,
    P: Fn(&MarketModel) -> Result<CashFlow, PricingError>,
{
    if gammas.is_empty() {
        return Err(PricingError::EmptyGrid("gamma"));
    }
    if lambdas.is_empty() {
        return Err(PricingError::EmptyGrid("lambda"));
    }
    for &g in gammas {
        RiskLevel::new(g)?;
    }
    let mut rows = Vec::with_capacity(gammas.len() * lambdas.len());
    let mut per_lambda = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let model = build(lambda).map_err(|e| PricingError::Builder { lambda, source: Box::new(e) })?;
        let d = payoff(&model)?;
        per_lambda.push((Pricer::new(model)?, d));
    }
    for &gamma in gammas {
        for (&lambda, (pricer, d)) in lambdas.iter().zip(&per_lambda) {
            pricer.model().tree().check_node(node).map_err(|e| PricingError::Market(e.into()))?;
            let quote = pricer.good_deal_prices(d, node.time, gamma)?;
            let q = quote.node(node).copied().expect("node checked above");
            rows.push(SurfacePoint { gamma, lambda, bid: q.bid, ask: q.ask, spread: q.spread(), status: q.status });
        }
    }
    Ok(rows)
}

/// Resolution of [`primal_price_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeGrid {
    /// Points per hedge weight in each zoom round.
    pub points: usize,
    pub rounds: usize,
    /// Upper end of the initial weight range; `None` picks one from the data.
    pub max_weight: Option<f64>,
}

impl Default for HedgeGrid {
    fn default() -> Self {
        Self { points: 21, rounds: 10, max_weight: None }
    }
}

pub const ORACLE_MAX_GENERATORS: usize = 3;

/// Brute-force good-deal prices straight from their primal definition on a
/// one-period model: minimal capital `v` (maximal for the bid) such that some
/// hedge `Σ xG` makes `v + Σ xG − D*` (resp. `D* + Σ xG − v`) acceptable at level `γ`.
pub fn primal_price_oracle(model: &MarketModel, d: &CashFlow, t: usize, gamma: f64, grid: &HedgeGrid) -> Result<(f64, f64), PricingError> {
    RiskLevel::new(gamma)?;
    if model.horizon() != 1 || t != 0 {
        return Err(PricingError::Oracle("only one-period instances priced at t = 0".into()));
    }
    let set = cone::generators_for(model, 0)?;
    if set.len() > ORACLE_MAX_GENERATORS {
        return Err(PricingError::Oracle(format!("{} generators, at most {ORACLE_MAX_GENERATORS} supported", set.len())));
    }
    let tree = model.tree();
    let p = tree.probabilities().to_vec();
    let claim = model.discounted(d).tail_sum(1);
    let gs: Vec<&[f64]> = set.iter().map(|g| g.value.as_slice()).collect();
    let spread_of = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    };
    let max_weight = grid.max_weight.unwrap_or_else(|| {
        let g_spread = gs.iter().map(|g| spread_of(g)).fold(f64::INFINITY, f64::min);
        if g_spread > 0.0 {
            4.0 * (spread_of(&claim) / g_spread).max(1.0)
        } else {
            1.0
        }
    });
    let bound = claim.iter().fold(0.0f64, |a, b| a.max(b.abs())) + gs.iter().map(|g| max_weight * g.iter().fold(0.0f64, |a, b| a.max(b.abs()))).sum::<f64>() + 1.0;

    // smallest v with dGLR(v + z) ≥ γ, by bisection on the acceptability predicate
    let min_capital = |z: &[f64]| -> f64 {
        let ok = |v: f64| {
            let y: Vec<f64> = z.iter().map(|zi| v + zi).collect();
            acceptability::gain_loss_ratio(&p, &y) >= gamma
        };
        let (mut lo, mut hi) = (-bound, bound);
        if !ok(hi) {
            return f64::INFINITY;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let combine = |x: &[f64], sign: f64| -> Vec<f64> {
        (0..p.len()).map(|i| sign * claim[i] + gs.iter().zip(x).map(|(g, w)| w * g[i]).sum::<f64>()).collect()
    };
    // ask: min_x capital(Σ xG − D*); bid: max_x −capital(Σ xG + D*)
    let search = |sign: f64| -> f64 {
        let k = gs.len();
        let mut center = vec![0.5 * max_weight; k];
        let mut half = 0.5 * max_weight;
        let mut best = (f64::INFINITY, center.clone());
        for _ in 0..grid.rounds {
            let pts = grid.points.max(2);
            let mut idx = vec![0usize; k];
            loop {
                let x: Vec<f64> = (0..k)
                    .map(|j| (center[j] - half + 2.0 * half * idx[j] as f64 / (pts - 1) as f64).max(0.0))
                    .collect();
                let c = min_capital(&combine(&x, sign));
                if c < best.0 {
                    best = (c, x);
                }
                let mut j = 0;
                while j < k {
                    idx[j] += 1;
                    if idx[j] < pts {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == k || k == 0 {
                    break;
                }
            }
            center = best.1.clone();
            half *= 4.0 / (pts - 1) as f64;
        }
        best.0
    };
    let ask = search(-1.0);
    let bid = -search(1.0);
    Ok((bid, ask))
}
