//! Market data, wealth accounting and contract builders.

use std::ops::Deref;

use thiserror::Error;

use crate::lattice::{AdaptedProcess, EventTree, LatticeError, NodeRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("security {security}: ask below bid at path {path}, t={time} (ask {ask}, bid {bid})")]
    AskBelowBid { security: String, path: String, time: usize, ask: f64, bid: f64 },
    #[error("security {security}: ask dividend increment exceeds bid increment at path {path}, t={time}")]
    DividendOrder { security: String, path: String, time: usize },
    #[error("security {security}: cumulative {which} dividends must start at 0 (path {path})")]
    DividendStart { security: String, which: &'static str, path: String },
    #[error("security {security}: {field} is not adapted: {source}")]
    SecurityNotAdapted { security: String, field: &'static str, source: LatticeError },
    #[error("negative or non-finite rate {rate} at path {path}, t={time}")]
    Rate { rate: f64, path: String, time: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("transaction-cost coefficient must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("strategy is not predictable: {0}")]
    NotPredictable(LatticeError),
    #[error("strategy has {got} holding slots, expected {expected} (savings account plus securities)")]
    StrategySlots { got: usize, expected: usize },
    #[error("strategy is not self-financing: {0}")]
    NotSelfFinancing(Violation),
    #[error("unknown security index {0}")]
    UnknownSecurity(usize),
    #[error("default time is not a stopping time: {{τ ≤ {time}}} splits a cell at t={time}")]
    NotStoppingTime { time: usize },
    #[error("invalid contract: {0}")]
    Contract(String),
}

/// Normalization of the savings account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiscountConvention {
    /// `B₀ = 1`, `Bₜ = ∏_{s<t}(1 + rₛ)`.
    #[default]
    UnitAtZero,
    /// `Bₜ = ∏_{s≤t}(1 + rₛ)`; uses the rate column at `T` as well.
    InclusiveProduct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Security {
    pub name: String,
    pub bid: AdaptedProcess,
    pub ask: AdaptedProcess,
    /// Cumulative dividends `A^ask`.
    pub div_ask: AdaptedProcess,
    /// Cumulative dividends `A^bid`.
    pub div_bid: AdaptedProcess,
}

impl Security {
    /// A non-dividend-paying security.
    pub fn new(name: impl Into<String>, bid: AdaptedProcess, ask: AdaptedProcess) -> Self {
        let zeros = AdaptedProcess::zeros(bid.n_paths(), bid.horizon());
        Self { name: name.into(), bid, ask, div_ask: zeros.clone(), div_bid: zeros }
    }

    /// Ask prices from bids with a proportional cost.
    pub fn with_lambda(name: impl Into<String>, bid: AdaptedProcess, lambda: f64) -> Result<Self, MarketError> {
        let q = apply_transaction_costs(&bid, lambda)?;
        Ok(Self::new(name, q.bid, q.ask))
    }

    pub fn with_dividends(mut self, div_ask: AdaptedProcess, div_bid: AdaptedProcess) -> Self {
        self.div_ask = div_ask;
        self.div_bid = div_bid;
        self
    }

    pub fn mid(&self) -> AdaptedProcess {
        self.bid.zip_with(&self.ask, |b, a| 0.5 * (a + b))
    }

    pub fn d_ask(&self, path: usize, t: usize) -> f64 {
        self.div_ask.increment(path, t)
    }

    pub fn d_bid(&self, path: usize, t: usize) -> f64 {
        self.div_bid.increment(path, t)
    }

    fn validate(&self, tree: &EventTree, tol: f64) -> Result<(), MarketError> {
        let fields: [(&'static str, &AdaptedProcess); 4] =
            [("bid", &self.bid), ("ask", &self.ask), ("ask dividends", &self.div_ask), ("bid dividends", &self.div_bid)];
        for (field, p) in fields {
            if p.rows().iter().flatten().any(|v| !v.is_finite()) {
                return Err(MarketError::NonFinite(format!("security {} {field}", self.name)));
            }
            tree.check_adapted(p, tol).map_err(|source| match source {
                LatticeError::Shape(_) => MarketError::Lattice(source),
                _ => MarketError::SecurityNotAdapted { security: self.name.clone(), field, source },
            })?;
        }
        for i in 0..tree.n_paths() {
            for (which, p) in [("ask", &self.div_ask), ("bid", &self.div_bid)] {
                if p.get(i, 0) != 0.0 {
                    return Err(MarketError::DividendStart {
                        security: self.name.clone(),
                        which,
                        path: tree.path_name(i).to_string(),
                    });
                }
            }
            for t in 0..=tree.horizon() {
                let (ask, bid) = (self.ask.get(i, t), self.bid.get(i, t));
                if ask < bid {
                    return Err(MarketError::AskBelowBid {
                        security: self.name.clone(),
                        path: tree.path_name(i).to_string(),
                        time: t,
                        ask,
                        bid,
                    });
                }
                if self.d_ask(i, t) > self.d_bid(i, t) {
                    return Err(MarketError::DividendOrder {
                        security: self.name.clone(),
                        path: tree.path_name(i).to_string(),
                        time: t,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Bid, ask and mid prices under a proportional cost.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotedPrices {
    pub bid: AdaptedProcess,
    pub ask: AdaptedProcess,
    pub mid: AdaptedProcess,
}

/// `ask = bid·(1+λ)` and `mid = bid·(1+λ/2)`.
pub fn apply_transaction_costs(bid: &AdaptedProcess, lambda: f64) -> Result<QuotedPrices, MarketError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(MarketError::NegativeLambda(lambda));
    }
    Ok(QuotedPrices {
        bid: bid.clone(),
        ask: bid.scale(1.0 + lambda),
        mid: bid.scale(1.0 + 0.5 * lambda),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub convention: DiscountConvention,
    /// Allowed spread of values inside a cell when checking measurability.
    pub measurability_tolerance: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { convention: DiscountConvention::UnitAtZero, measurability_tolerance: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    tree: EventTree,
    rates: AdaptedProcess,
    securities: Vec<Security>,
    options: ModelOptions,
    discount: AdaptedProcess,
}

impl MarketModel {
    /// `rates` holds one column per date `0..=T`; the last column only matters
    /// under [`DiscountConvention::InclusiveProduct`].
    pub fn new(tree: EventTree, rates: AdaptedProcess, securities: Vec<Security>) -> Result<Self, MarketError> {
        Self::with_options(tree, rates, securities, ModelOptions::default())
    }

    pub fn with_options(
        tree: EventTree,
        rates: AdaptedProcess,
        securities: Vec<Security>,
        options: ModelOptions,
    ) -> Result<Self, MarketError> {
        tree.check_adapted(&rates, options.measurability_tolerance)?;
        for i in 0..tree.n_paths() {
            for t in 0..=tree.horizon() {
                let r = rates.get(i, t);
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(MarketError::Rate { rate: r, path: tree.path_name(i).to_string(), time: t });
                }
            }
        }
        for s in &securities {
            s.validate(&tree, options.measurability_tolerance)?;
        }
        let discount = discount_factors(&rates, options.convention);
        Ok(Self { tree, rates, securities, options, discount })
    }

    /// Same model under a different savings-account convention.
    pub fn with_convention(mut self, convention: DiscountConvention) -> Self {
        self.options.convention = convention;
        self.discount = discount_factors(&self.rates, convention);
        self
    }

    pub fn tree(&self) -> &EventTree {
        &self.tree
    }

    pub fn horizon(&self) -> usize {
        self.tree.horizon()
    }

    pub fn rates(&self) -> &AdaptedProcess {
        &self.rates
    }

    pub fn securities(&self) -> &[Security] {
        &self.securities
    }

    pub fn security(&self, j: usize) -> Result<&Security, MarketError> {
        self.securities.get(j).ok_or(MarketError::UnknownSecurity(j))
    }

    pub fn options(&self) -> &ModelOptions {
        &self.options
    }

    pub fn convention(&self) -> DiscountConvention {
        self.options.convention
    }

    /// The savings account `B`.
    pub fn discount(&self) -> &AdaptedProcess {
        &self.discount
    }

    /// `B⁻¹`.
    pub fn discount_inverse(&self) -> AdaptedProcess {
        self.discount.map(|b| 1.0 / b)
    }

    #[inline]
    pub fn b(&self, path: usize, t: usize) -> f64 {
        self.discount.get(path, t)
    }

    pub fn has_deterministic_rates(&self) -> bool {
        self.rates.is_deterministic()
    }

    /// `D* = B⁻¹D`.
    pub fn discounted(&self, d: &CashFlow) -> AdaptedProcess {
        d.values().zip_with(&self.discount, |v, b| v / b)
    }
}

/// Savings account for the given rate process.
pub fn discount_factors(rates: &AdaptedProcess, convention: DiscountConvention) -> AdaptedProcess {
    let (n, horizon) = (rates.n_paths(), rates.horizon());
    let mut b = AdaptedProcess::zeros(n, horizon);
    for i in 0..n {
        let mut acc = match convention {
            DiscountConvention::UnitAtZero => 1.0,
            DiscountConvention::InclusiveProduct => 1.0 + rates.get(i, 0),
        };
        b.set(i, 0, acc);
        for t in 1..=horizon {
            acc *= match convention {
                DiscountConvention::UnitAtZero => 1.0 + rates.get(i, t - 1),
                DiscountConvention::InclusiveProduct => 1.0 + rates.get(i, t),
            };
            b.set(i, t, acc);
        }
    }
    b
}

/// Per-date payments of a contract or a hedge.
#[derive(Debug, Clone, PartialEq)]
pub struct CashFlow(AdaptedProcess);

impl CashFlow {
    pub fn new(tree: &EventTree, values: AdaptedProcess) -> Result<Self, MarketError> {
        tree.check_adapted(&values, 0.0)?;
        if values.rows().iter().flatten().any(|v| !v.is_finite()) {
            return Err(MarketError::NonFinite("cash flow".into()));
        }
        Ok(Self(values))
    }

    /// Skips the measurability check; for flows derived from validated data.
    pub fn from_process(values: AdaptedProcess) -> Self {
        Self(values)
    }

    /// A single payment at `T`.
    pub fn terminal(tree: &EventTree, payoff: &[f64]) -> Result<Self, MarketError> {
        let horizon = tree.horizon();
        let values = AdaptedProcess::from_fn(tree.n_paths(), horizon, |i, t| if t == horizon { payoff[i] } else { 0.0 });
        Self::new(tree, values)
    }

    pub fn zero(tree: &EventTree) -> Self {
        Self(AdaptedProcess::zeros(tree.n_paths(), tree.horizon()))
    }

    pub fn values(&self) -> &AdaptedProcess {
        &self.0
    }

    pub fn into_inner(self) -> AdaptedProcess {
        self.0
    }

    pub fn negate(&self) -> Self {
        Self(self.0.scale(-1.0))
    }
}

impl Deref for CashFlow {
    type Target = AdaptedProcess;
    fn deref(&self) -> &AdaptedProcess {
        &self.0
    }
}

/// Holdings `φʲₜ` for `t = 1..=T`; slot 0 is the savings account.
///
/// Each slot is stored as a full `N×(T+1)` process whose column 0 is `φ₀ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingStrategy {
    holdings: Vec<AdaptedProcess>,
}

impl TradingStrategy {
    pub fn zeros(model: &MarketModel) -> Self {
        let (n, horizon) = (model.tree().n_paths(), model.horizon());
        Self { holdings: vec![AdaptedProcess::zeros(n, horizon); model.securities().len() + 1] }
    }

    pub fn new(model: &MarketModel, holdings: Vec<AdaptedProcess>) -> Result<Self, MarketError> {
        let expected = model.securities().len() + 1;
        if holdings.len() != expected {
            return Err(MarketError::StrategySlots { got: holdings.len(), expected });
        }
        let s = Self { holdings };
        s.validate(model)?;
        Ok(s)
    }

    pub fn validate(&self, model: &MarketModel) -> Result<(), MarketError> {
        let expected = model.securities().len() + 1;
        if self.holdings.len() != expected {
            return Err(MarketError::StrategySlots { got: self.holdings.len(), expected });
        }
        for h in &self.holdings {
            model.tree().check_predictable(h, 1e-12).map_err(MarketError::NotPredictable)?;
            if (0..h.n_paths()).any(|i| h.get(i, 0) != 0.0) {
                return Err(MarketError::NotPredictable(LatticeError::Shape("holdings at t=0 must be zero".into())));
            }
        }
        Ok(())
    }

    pub fn n_slots(&self) -> usize {
        self.holdings.len()
    }

    /// Units of slot `j` held over `(t−1, t]`; `j = 0` is the savings account.
    #[inline]
    pub fn get(&self, j: usize, path: usize, t: usize) -> f64 {
        self.holdings[j].get(path, t)
    }

    #[inline]
    pub fn set(&mut self, j: usize, path: usize, t: usize, v: f64) {
        self.holdings[j].set(path, t, v);
    }

    /// `Δφʲₜ = φʲₜ − φʲₜ₋₁`.
    #[inline]
    pub fn delta(&self, j: usize, path: usize, t: usize) -> f64 {
        self.holdings[j].increment(path, t)
    }

    pub fn slot(&self, j: usize) -> &AdaptedProcess {
        &self.holdings[j]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { holdings: self.holdings.iter().zip(&other.holdings).map(|(a, b)| a.zip_with(b, |x, y| x + y)).collect() }
    }
}

/// A failure of the self-financing equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub node: NodeRef,
    pub path: String,
    /// Left side minus right side.
    pub residual: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "at node {} (path {}), residual {:.3e}", self.node, self.path, self.residual)
    }
}

pub const SELF_FINANCING_TOLERANCE: f64 = 1e-9;

/// Liquidation-style wealth: set-up cost at `t = 0`, then pre-trade liquidation value plus dividends.
pub fn wealth_process(model: &MarketModel, phi: &TradingStrategy) -> Result<AdaptedProcess, MarketError> {
    phi.validate(model)?;
    let tree = model.tree();
    let (n, horizon) = (tree.n_paths(), model.horizon());
    let mut v = AdaptedProcess::zeros(n, horizon);
    for i in 0..n {
        let mut v0 = phi.get(0, i, 1);
        for (k, s) in model.securities().iter().enumerate() {
            let x = phi.get(k + 1, i, 1);
            v0 += if x >= 0.0 { x * s.ask.get(i, 0) } else { x * s.bid.get(i, 0) };
        }
        v.set(i, 0, v0);
        for t in 1..=horizon {
            let mut vt = phi.get(0, i, t) * model.b(i, t);
            for (k, s) in model.securities().iter().enumerate() {
                let x = phi.get(k + 1, i, t);
                vt += if x >= 0.0 {
                    x * (s.bid.get(i, t) + s.d_ask(i, t))
                } else {
                    x * (s.ask.get(i, t) + s.d_bid(i, t))
                };
            }
            v.set(i, t, vt);
        }
    }
    Ok(v)
}

/// Residual of the self-financing equation at `(path, t)`, `1 ≤ t ≤ T−1`.
fn self_financing_residual(model: &MarketModel, phi: &TradingStrategy, i: usize, t: usize) -> f64 {
    let mut lhs = model.b(i, t) * phi.delta(0, i, t + 1);
    let mut rhs = 0.0;
    for (k, s) in model.securities().iter().enumerate() {
        let d = phi.delta(k + 1, i, t + 1);
        lhs += if d >= 0.0 { s.ask.get(i, t) * d } else { s.bid.get(i, t) * d };
        let x = phi.get(k + 1, i, t);
        rhs += if x >= 0.0 { x * s.d_ask(i, t) } else { x * s.d_bid(i, t) };
    }
    lhs - rhs
}

/// First node where the self-financing equation fails by more than `tol`.
pub fn self_financing_violation(model: &MarketModel, phi: &TradingStrategy, tol: f64) -> Option<Violation> {
    let tree = model.tree();
    for t in 1..model.horizon() {
        for node in tree.nodes_at(t) {
            let i = tree.paths_of(node)[0];
            let residual = self_financing_residual(model, phi, i, t);
            if residual.abs() > tol || !residual.is_finite() {
                return Some(Violation { node, path: tree.path_name(i).to_string(), residual });
            }
        }
    }
    None
}

pub fn is_self_financing(model: &MarketModel, phi: &TradingStrategy) -> bool {
    self_financing_violation(model, phi, SELF_FINANCING_TOLERANCE).is_none()
}

/// Discounted wealth of a self-financing strategy, from set-up cost, trades and dividends.
pub fn wealth_closed_form(model: &MarketModel, phi: &TradingStrategy) -> Result<AdaptedProcess, MarketError> {
    wealth_closed_form_with(model, phi, SELF_FINANCING_TOLERANCE)
}

pub fn wealth_closed_form_with(model: &MarketModel, phi: &TradingStrategy, tol: f64) -> Result<AdaptedProcess, MarketError> {
    phi.validate(model)?;
    if let Some(v) = self_financing_violation(model, phi, tol) {
        return Err(MarketError::NotSelfFinancing(v));
    }
    Ok(wealth_closed_form_unchecked(model, phi))
}

/// The closed-form expression evaluated without checking the self-financing equation.
///
/// Column 0 holds `B₀⁻¹V₀`.
pub fn wealth_closed_form_unchecked(model: &MarketModel, phi: &TradingStrategy) -> AdaptedProcess {
    let tree = model.tree();
    let (n, horizon) = (tree.n_paths(), model.horizon());
    let mut out = AdaptedProcess::zeros(n, horizon);
    for i in 0..n {
        let mut v0 = phi.get(0, i, 1);
        for (k, s) in model.securities().iter().enumerate() {
            let x = phi.get(k + 1, i, 1);
            v0 += if x >= 0.0 { x * s.ask.get(i, 0) } else { x * s.bid.get(i, 0) };
        }
        out.set(i, 0, v0 / model.b(i, 0));
        // running sums of trades and dividends over u = 1..t
        let mut trades = 0.0;
        let mut dividends = 0.0;
        for t in 1..=horizon {
            let mut liquidation = 0.0;
            for (k, s) in model.securities().iter().enumerate() {
                let j = k + 1;
                let d = phi.delta(j, i, t);
                let b_prev = model.b(i, t - 1);
                trades += if d >= 0.0 { d * s.ask.get(i, t - 1) / b_prev } else { d * s.bid.get(i, t - 1) / b_prev };
                let x = phi.get(j, i, t);
                let b = model.b(i, t);
                dividends += if x >= 0.0 { x * s.d_ask(i, t) / b } else { x * s.d_bid(i, t) / b };
                liquidation += if x >= 0.0 { x * s.bid.get(i, t) / b } else { x * s.ask.get(i, t) / b };
            }
            out.set(i, t, v0 + liquidation - trades + dividends);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    Bid,
    Ask,
    Mid,
}

/// Arithmetic-average Asian call paying `(mean_{t=0..T} Pₜ − K)⁺` at `T`.
pub fn asian_call(model: &MarketModel, security: usize, strike: f64, averaging: Averaging) -> Result<CashFlow, MarketError> {
    let s = model.security(security)?;
    if !strike.is_finite() {
        return Err(MarketError::Contract(format!("strike must be finite, got {strike}")));
    }
    let prices = match averaging {
        Averaging::Bid => s.bid.clone(),
        Averaging::Ask => s.ask.clone(),
        Averaging::Mid => s.mid(),
    };
    let horizon = model.horizon();
    let payoff: Vec<f64> = (0..model.tree().n_paths())
        .map(|i| {
            let avg = prices.row(i).iter().sum::<f64>() / (horizon + 1) as f64;
            (avg - strike).max(0.0)
        })
        .collect();
    CashFlow::terminal(model.tree(), &payoff)
}

/// Cumulative dividends `(A^ask, A^bid)` of a CDS from the protection buyer's side.
///
/// `tau[i]` is the default date on path `i`, `None` for survival past `T`.
pub fn cds_dividends(
    tree: &EventTree,
    tau: &[Option<usize>],
    delta: f64,
    kappa_ask: f64,
    kappa_bid: f64,
) -> Result<(AdaptedProcess, AdaptedProcess), MarketError> {
    let (n, horizon) = (tree.n_paths(), tree.horizon());
    if tau.len() != n {
        return Err(MarketError::Contract(format!("{} default times for {n} paths", tau.len())));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(MarketError::Contract(format!("loss given default must be nonnegative, got {delta}")));
    }
    if !kappa_ask.is_finite() || !kappa_bid.is_finite() {
        return Err(MarketError::Contract("spreads must be finite".into()));
    }
    if let Some(&Some(bad)) = tau.iter().find(|t| matches!(t, Some(u) if *u < 1 || *u > horizon)) {
        return Err(MarketError::Contract(format!("default time {bad} outside 1..={horizon}")));
    }
    for t in 0..=horizon {
        let hit: Vec<f64> = tau.iter().map(|x| f64::from(matches!(x, Some(u) if *u <= t))).collect();
        if !tree.is_measurable(&hit, t) {
            return Err(MarketError::NotStoppingTime { time: t });
        }
    }
    let build = |kappa: f64| {
        AdaptedProcess::from_fn(n, horizon, |i, t| {
            let defaulted = matches!(tau[i], Some(u) if u <= t);
            let fees = (1..=t).filter(|&u| tau[i].map_or(true, |d| u < d)).count() as f64;
            f64::from(defaulted) * delta - kappa * fees
        })
    };
    Ok((build(kappa_ask), build(kappa_bid)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trinomial_bids() -> AdaptedProcess {
        AdaptedProcess::from_rows(&[
            vec![50.0, 80.0, 90.0],
            vec![50.0, 80.0, 70.0],
            vec![50.0, 80.0, 60.0],
            vec![50.0, 40.0, 60.0],
            vec![50.0, 40.0, 30.0],
        ])
        .unwrap()
    }

    fn model(lambda: f64) -> MarketModel {
        let bids = trinomial_bids();
        let tree = EventTree::from_observables(vec![0.1, 0.125, 0.25, 0.25, 0.275], &[bids.clone()]).unwrap();
        let sec = Security::with_lambda("stock", bids, lambda).unwrap();
        MarketModel::new(tree, AdaptedProcess::zeros(5, 2), vec![sec]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn discount_conventions() {
        let flat = AdaptedProcess::constant(2, 2, 0.1);
        let b = discount_factors(&flat, DiscountConvention::UnitAtZero);
        assert_eq!(b.row(0).len(), 3);
        for (got, want) in b.row(1).iter().zip([1.0, 1.1, 1.21]) {
            assert!(close(*got, want, 1e-15));
        }
        let lit = discount_factors(&flat, DiscountConvention::InclusiveProduct);
        assert!(close(lit.get(0, 0), 1.1, 1e-15) && close(lit.get(0, 2), 1.331, 1e-12));
        let zero = discount_factors(&AdaptedProcess::zeros(3, 2), DiscountConvention::UnitAtZero);
        assert!(zero.rows().iter().flatten().all(|&v| v == 1.0));
    }

    #[test]
    fn adapted_rates_give_path_dependent_account() {
        let rates = AdaptedProcess::from_rows(&[vec![0.0, 0.1, 0.0], vec![0.0, 0.2, 0.0]]).unwrap();
        let b = discount_factors(&rates, DiscountConvention::UnitAtZero);
        assert_eq!(b.get(0, 1), 1.0);
        assert!(close(b.get(0, 2), 1.1, 1e-15) && close(b.get(1, 2), 1.2, 1e-15));
    }

    #[test]
    fn transaction_costs() {
        let bid = AdaptedProcess::constant(1, 1, 50.0);
        let q = apply_transaction_costs(&bid, 0.01).unwrap();
        assert!(close(q.ask.get(0, 0), 50.5, 1e-12) && close(q.mid.get(0, 0), 50.25, 1e-12));
        let q0 = apply_transaction_costs(&bid, 0.0).unwrap();
        assert_eq!(q0.ask, bid);
        assert_eq!(q0.mid, bid);
        let t1 = apply_transaction_costs(&trinomial_bids(), 0.005).unwrap();
        assert!(close(t1.ask.get(3, 0), 50.25, 1e-12));
        assert!(apply_transaction_costs(&bid, -0.1).is_err());
    }

    fn buy_then_liquidate(m: &MarketModel) -> TradingStrategy {
        let mut phi = TradingStrategy::zeros(m);
        for i in 0..5 {
            phi.set(0, i, 1, -50.0);
            phi.set(1, i, 1, 1.0);
            let cash = if i < 3 { 80.0 } else { 40.0 };
            phi.set(0, i, 2, -50.0 + cash);
        }
        phi
    }

    #[test]
    fn wealth_of_buy_then_liquidate() {
        let m = model(0.0);
        let phi = buy_then_liquidate(&m);
        let v = wealth_process(&m, &phi).unwrap();
        for i in 0..5 {
            let want = if i < 3 { 30.0 } else { -10.0 };
            assert_eq!(v.get(i, 0), 0.0);
            assert!(close(v.get(i, 1), want, 1e-12) && close(v.get(i, 2), want, 1e-12));
        }
        assert!(is_self_financing(&m, &phi));
        let vc = wealth_closed_form(&m, &phi).unwrap();
        assert!(vc.rows().iter().flatten().zip(v.rows().iter().flatten()).all(|(a, b)| close(*a, *b, 1e-9)));
    }

    #[test]
    fn perturbed_strategy_fails_and_names_node() {
        let m = model(0.0);
        let mut phi = buy_then_liquidate(&m);
        phi.set(0, 3, 2, phi.get(0, 3, 2) + 1.0);
        phi.set(0, 4, 2, phi.get(0, 4, 2) + 1.0);
        let v = self_financing_violation(&m, &phi, SELF_FINANCING_TOLERANCE).unwrap();
        assert_eq!(v.node, NodeRef::new(1, 1));
        assert!(close(v.residual, 1.0, 1e-12));
        assert!(matches!(wealth_closed_form(&m, &phi), Err(MarketError::NotSelfFinancing(_))));
    }

    #[test]
    fn zero_strategy() {
        let m = model(0.01);
        let phi = TradingStrategy::zeros(&m);
        assert!(wealth_process(&m, &phi).unwrap().rows().iter().flatten().all(|&v| v == 0.0));
        assert!(is_self_financing(&m, &phi));
        assert!(wealth_closed_form(&m, &phi).unwrap().rows().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn short_sale_with_costs() {
        let m = model(0.01);
        let mut phi = TradingStrategy::zeros(&m);
        for i in 0..5 {
            phi.set(0, i, 1, 50.0);
            phi.set(1, i, 1, -1.0);
            phi.set(0, i, 2, 50.0);
            phi.set(1, i, 2, -1.0);
        }
        let v = wealth_process(&m, &phi).unwrap();
        assert!(close(v.get(0, 0), 0.0, 1e-12));
        assert!(close(v.get(0, 1), -30.8, 1e-9));
    }

    #[test]
    fn unpredictable_strategy_rejected() {
        let m = model(0.0);
        let mut phi = TradingStrategy::zeros(&m);
        phi.set(1, 0, 1, 1.0);
        assert!(matches!(wealth_process(&m, &phi), Err(MarketError::NotPredictable(_))));
    }

    #[test]
    fn assumption_checks() {
        let bids = trinomial_bids();
        let tree = EventTree::from_observables(vec![0.1, 0.125, 0.25, 0.25, 0.275], &[bids.clone()]).unwrap();
        let mut ask = bids.clone();
        ask.set(1, 2, 69.0);
        let bad = Security::new("s", bids.clone(), ask);
        let err = MarketModel::new(tree.clone(), AdaptedProcess::zeros(5, 2), vec![bad]).unwrap_err();
        assert!(matches!(err, MarketError::AskBelowBid { time: 2, ref path, .. } if path == "ω2"));

        let div_ask = AdaptedProcess::from_fn(5, 2, |_, t| t as f64);
        let div = Security::new("s", bids.clone(), bids.clone()).with_dividends(div_ask, AdaptedProcess::zeros(5, 2));
        let err = MarketModel::new(tree.clone(), AdaptedProcess::zeros(5, 2), vec![div]).unwrap_err();
        assert!(matches!(err, MarketError::DividendOrder { time: 1, .. }));

        let neg = AdaptedProcess::constant(5, 2, -0.01);
        assert!(matches!(
            MarketModel::new(tree, neg, vec![Security::new("s", bids.clone(), bids)]),
            Err(MarketError::Rate { .. })
        ));
    }

    #[test]
    fn asian_call_payoffs() {
        let m = model(0.0);
        let d = asian_call(&m, 0, 65.0, Averaging::Mid).unwrap();
        let want = [25.0 / 3.0, 5.0 / 3.0, 0.0, 0.0, 0.0];
        for (i, w) in want.iter().enumerate() {
            assert!(close(d.get(i, 2), *w, 1e-12));
            assert_eq!(d.get(i, 0) + d.get(i, 1), 0.0);
        }
        assert!(asian_call(&m, 0, 1e6, Averaging::Bid).unwrap().rows().iter().flatten().all(|&v| v == 0.0));
        let m1 = model(0.01);
        let d1 = asian_call(&m1, 0, 65.0, Averaging::Mid).unwrap();
        assert!(close(d1.get(0, 2), 73.7 - 65.0, 1e-9));
    }

    #[test]
    fn cds_cash_flows() {
        let tree = EventTree::new(vec![0.5, 0.5], vec![vec![vec![0, 1]], vec![vec![0, 1]], vec![vec![0], vec![1]]]).unwrap();
        let (a, b) = cds_dividends(&tree, &[Some(2), None], 0.6, 0.1, 0.1).unwrap();
        assert!(close(a.get(0, 1), -0.1, 1e-15) && close(a.get(0, 2), 0.5, 1e-15));
        assert!(close(a.get(1, 2), -0.2, 1e-15));
        assert_eq!(a, b);
        let (z, _) = cds_dividends(&tree, &[Some(2), None], 0.0, 0.0, 0.0).unwrap();
        assert!(z.rows().iter().flatten().all(|&v| v == 0.0));
        // default at 1 on one path is not observable at t=1 when both paths share a cell
        assert!(matches!(
            cds_dividends(&tree, &[Some(1), None], 0.6, 0.1, 0.1),
            Err(MarketError::NotStoppingTime { time: 1 })
        ));
    }
}
