//! The dynamic Gain-Loss Ratio, its density band and the associated risk measures.
//!
//! On a node with tail `X`, the band at level `γ` holds the densities
//! proportional to `1 + Λ` with `0 ≤ Λ ≤ γ`. The risk measure is
//! `ρ^γ = −min 𝔼[(1+Λ)X] / 𝔼[1+Λ]` and the index is the largest `γ` at which
//! `ρ^γ ≤ 0`; for this band that index is `𝔼[X] / 𝔼[X⁻]`.

use thiserror::Error;

use crate::lattice::{AdaptedProcess, EventTree, NodeRef};
use crate::lp::{self, Affine, LinearProgram, LpError, LpStatus, Sense, SolverOptions};

/// Largest node handled by vertex enumeration.
pub const VERTEX_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcceptabilityError {
    #[error("level must satisfy 0 < γ < ∞, got {0}")]
    Level(f64),
    #[error("invalid date {t} for horizon {horizon}")]
    Time { t: usize, horizon: usize },
    #[error("vertex enumeration and LP disagree on node {node}: {vertex} vs {lp}")]
    RouteMismatch { node: NodeRef, vertex: f64, lp: f64 },
    #[error("band program at node {node} ended with status {status:?}")]
    Status { node: NodeRef, status: LpStatus },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A validated level `γ ∈ (0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(gamma: f64) -> Result<Self, AcceptabilityError> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(Self(gamma))
        } else {
            Err(AcceptabilityError::Level(gamma))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Densities `η` with `m ≤ η ≤ (1+γ)m` for some `m > 0` and `𝔼[η] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBand {
    pub gamma: f64,
}

impl DensityBand {
    pub fn new(level: RiskLevel) -> Self {
        Self { gamma: level.value() }
    }

    /// Membership test for a density given per path.
    pub fn contains(&self, probabilities: &[f64], eta: &[f64], tol: f64) -> bool {
        let mean: f64 = probabilities.iter().zip(eta).map(|(p, e)| p * e).sum();
        let lo = eta.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mean - 1.0).abs() <= tol && lo > 0.0 && hi <= (1.0 + self.gamma) * lo + tol
    }

    /// Appends `m − u_i ≤ 0` and `u_i − (1+γ)m ≤ 0` for the given columns.
    pub fn add_rows(&self, program: &mut LinearProgram, u_cols: &[usize], m_col: usize) {
        let n = program.num_vars();
        for &c in u_cols {
            let mut lower = vec![0.0; n];
            lower[m_col] = 1.0;
            lower[c] = -1.0;
            program.leq(lower, 0.0);
            let mut upper = vec![0.0; n];
            upper[c] = 1.0;
            upper[m_col] = -(1.0 + self.gamma);
            program.leq(upper, 0.0);
        }
    }
}

fn check_time(tree: &EventTree, t: usize) -> Result<(), AcceptabilityError> {
    if t > tree.horizon() {
        return Err(AcceptabilityError::Time { t, horizon: tree.horizon() });
    }
    Ok(())
}

/// Gain-loss ratio of `x` under weights `p` (not necessarily normalized).
pub fn gain_loss_ratio(p: &[f64], x: &[f64]) -> f64 {
    let gain: f64 = p.iter().zip(x).map(|(p, x)| p * x).sum();
    let loss: f64 = p.iter().zip(x).map(|(p, x)| p * (-x).max(0.0)).sum();
    if x.iter().all(|&v| v == 0.0) {
        f64::INFINITY
    } else if gain > 0.0 {
        if loss == 0.0 {
            f64::INFINITY
        } else {
            gain / loss
        }
    } else {
        0.0
    }
}

fn node_data(tree: &EventTree, x: &[f64], node: NodeRef) -> (Vec<f64>, Vec<f64>) {
    let p = tree.probabilities();
    let paths = tree.paths_of(node);
    (paths.iter().map(|&i| p[i]).collect(), paths.iter().map(|&i| x[i]).collect())
}

/// Ratio on a node for a tail given per path.
pub fn dglr_on_node(tree: &EventTree, x: &[f64], node: NodeRef) -> f64 {
    let (p, xs) = node_data(tree, x, node);
    gain_loss_ratio(&p, &xs)
}

/// The dGLR at every time-`t` node of the tail `Σ_{s≥t} D_s`, indexed by cell.
pub fn dglr_eval(tree: &EventTree, d: &AdaptedProcess, t: usize) -> Vec<f64> {
    let x = d.tail_sum(t);
    tree.nodes_at(t).map(|node| dglr_on_node(tree, &x, node)).collect()
}

/// `min_{Λ ∈ {0,γ}^n} Σp(1+Λ)x / Σp(1+Λ)`, by Gray-code walk over the vertices.
pub fn min_band_ratio_vertices(p: &[f64], x: &[f64], gamma: f64) -> f64 {
    let n = p.len();
    assert!(n <= 30, "vertex enumeration over {n} paths");
    let mut num: f64 = p.iter().zip(x).map(|(p, x)| p * x).sum();
    let mut den: f64 = p.iter().sum();
    let mut best = num / den;
    let mut on = vec![false; n];
    for k in 1u64..(1u64 << n) {
        let bit = k.trailing_zeros() as usize;
        let sign = if on[bit] { -1.0 } else { 1.0 };
        on[bit] = !on[bit];
        num += sign * gamma * p[bit] * x[bit];
        den += sign * gamma * p[bit];
        best = best.min(num / den);
    }
    best
}

/// The same minimum through the Charnes–Cooper program.
pub fn min_band_ratio_lp(p: &[f64], x: &[f64], gamma: f64, opts: &SolverOptions) -> Result<f64, LpError> {
    let n = p.len();
    let mut constraints = LinearProgram::feasibility(n);
    for j in 0..n {
        constraints.bounds(j, 0.0, Some(gamma));
    }
    let numerator = Affine::new(p.iter().zip(x).map(|(p, x)| p * x).collect(), p.iter().zip(x).map(|(p, x)| p * x).sum());
    let denominator = Affine::new(p.to_vec(), p.iter().sum());
    let sol = lp::solve_ratio_with(&numerator, &denominator, &constraints, Sense::Minimize, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::Breakdown(format!("band ratio program ended {:?}", sol.status)));
    }
    Ok(sol.value)
}

/// `ρ^γ` on one node for a tail given per path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRisk {
    pub value: f64,
    /// Whether the vertex oracle was skipped because the node is too large.
    pub lp_only: bool,
}

pub fn rho_on_node(
    tree: &EventTree,
    x: &[f64],
    node: NodeRef,
    level: RiskLevel,
    opts: &SolverOptions,
) -> Result<NodeRisk, AcceptabilityError> {
    let (p, xs) = node_data(tree, x, node);
    let lp_min = min_band_ratio_lp(&p, &xs, level.value(), opts)?;
    if p.len() > VERTEX_CAP {
        return Ok(NodeRisk { value: -lp_min, lp_only: true });
    }
    let v_min = min_band_ratio_vertices(&p, &xs, level.value());
    let scale = 1.0 + xs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if (v_min - lp_min).abs() > 1e-9 * scale {
        return Err(AcceptabilityError::RouteMismatch { node, vertex: -v_min, lp: -lp_min });
    }
    Ok(NodeRisk { value: -v_min, lp_only: false })
}

/// `ρₜ^γ(D)` per time-`t` node, with the tail sum starting at `t`.
pub fn rho_gamma(tree: &EventTree, d: &AdaptedProcess, t: usize, gamma: f64) -> Result<Vec<NodeRisk>, AcceptabilityError> {
    rho_gamma_with(tree, d, t, gamma, &SolverOptions::from_env())
}

pub fn rho_gamma_with(
    tree: &EventTree,
    d: &AdaptedProcess,
    t: usize,
    gamma: f64,
    opts: &SolverOptions,
) -> Result<Vec<NodeRisk>, AcceptabilityError> {
    check_time(tree, t)?;
    let level = RiskLevel::new(gamma)?;
    let x = d.tail_sum(t);
    tree.nodes_at(t).map(|node| rho_on_node(tree, &x, node, level, opts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
}

impl Default for Bisection {
    fn default() -> Self {
        Self { lower: 1e-12, upper: 1e9, tolerance: 1e-6 }
    }
}

/// `ρ^γ` on a node by the fastest exact route.
fn rho_fast(p: &[f64], x: &[f64], gamma: f64) -> f64 {
    if p.len() <= VERTEX_CAP {
        -min_band_ratio_vertices(p, x, gamma)
    } else {
        -min_band_ratio_lp(p, x, gamma, &SolverOptions::default()).expect("box-constrained band program is always solvable")
    }
}

/// `sup{γ : ρ^γ ≤ 0}` on a node, by bisection on the sign of `ρ^γ`.
pub fn index_on_node(tree: &EventTree, x: &[f64], node: NodeRef, search: &Bisection) -> f64 {
    let (p, xs) = node_data(tree, x, node);
    index_of(&p, &xs, search)
}

/// The index for weights `p` and values `x`.
pub fn index_of(p: &[f64], x: &[f64], search: &Bisection) -> f64 {
    let acceptable = |g: f64| rho_fast(p, x, g) <= 0.0;
    if !acceptable(search.lower) {
        return 0.0;
    }
    if acceptable(search.upper) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (search.lower, search.upper);
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        if acceptable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The index per time-`t` node.
pub fn index_level(tree: &EventTree, d: &AdaptedProcess, t: usize) -> Vec<f64> {
    index_level_with(tree, d, t, &Bisection::default())
}

pub fn index_level_with(tree: &EventTree, d: &AdaptedProcess, t: usize, search: &Bisection) -> Vec<f64> {
    let x = d.tail_sum(t);
    tree.nodes_at(t).map(|node| index_on_node(tree, &x, node, search)).collect()
}

/// Closed-form minimum of `𝔼[(1+Λ)X | node]` over `Λ ∈ [0,γ]`: `𝔼[X] − γ𝔼[X⁻]`.
pub fn closed_form_band_minimum(p: &[f64], x: &[f64], gamma: f64) -> f64 {
    let mass: f64 = p.iter().sum();
    let gain: f64 = p.iter().zip(x).map(|(p, x)| p * x).sum::<f64>() / mass;
    let loss: f64 = p.iter().zip(x).map(|(p, x)| p * (-x).max(0.0)).sum::<f64>() / mass;
    gain - gamma * loss
}

/// LP minimum of `𝔼[(1+Λ)X | node]` over `Λ ∈ [0,γ]`.
pub fn lp_band_minimum(p: &[f64], x: &[f64], gamma: f64, opts: &SolverOptions) -> Result<f64, LpError> {
    let n = p.len();
    let mass: f64 = p.iter().sum();
    let w: Vec<f64> = p.iter().zip(x).map(|(p, x)| p * x / mass).collect();
    let mut program = LinearProgram::new(Sense::Minimize, w.clone());
    for j in 0..n {
        program.bounds(j, 0.0, Some(gamma));
    }
    let sol = lp::solve_with(&program, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::Breakdown(format!("band minimum ended {:?}", sol.status)));
    }
    Ok(sol.value + w.iter().sum::<f64>())
}

/// One `(D, t, γ)` instance for [`correspondence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub cash_flow: AdaptedProcess,
    pub t: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceReport {
    pub nodes: usize,
    pub agreements: usize,
    pub disagreements: Vec<(usize, NodeRef)>,
    /// Largest gap between the closed-form minimizer and the LP minimum.
    pub max_minimum_gap: f64,
    pub minimum_failures: usize,
}

impl CorrespondenceReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty() && self.minimum_failures == 0
    }
}

/// Checks `[dGLR ≥ γ] ⇔ [band minimum ≥ 0]` and the closed-form minimizer on every node.
pub fn correspondence_check(tree: &EventTree, samples: &[Sample]) -> Result<CorrespondenceReport, AcceptabilityError> {
    let opts = SolverOptions::from_env();
    let mut report = CorrespondenceReport::default();
    for (k, s) in samples.iter().enumerate() {
        check_time(tree, s.t)?;
        RiskLevel::new(s.gamma)?;
        let x = s.cash_flow.tail_sum(s.t);
        for node in tree.nodes_at(s.t) {
            let (p, xs) = node_data(tree, &x, node);
            let scale = 1.0 + xs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let ratio = gain_loss_ratio(&p, &xs);
            let closed = closed_form_band_minimum(&p, &xs, s.gamma);
            let lp_min = lp_band_minimum(&p, &xs, s.gamma, &opts)?;
            let gap = (closed - lp_min).abs();
            report.max_minimum_gap = report.max_minimum_gap.max(gap);
            if gap > 1e-9 * scale {
                report.minimum_failures += 1;
            }
            let lhs = ratio >= s.gamma * (1.0 - 1e-9);
            let rhs = lp_min >= -1e-9 * scale;
            report.nodes += 1;
            if lhs == rhs {
                report.agreements += 1;
            } else {
                report.disagreements.push((k, node));
            }
        }
    }
    Ok(report)
}

/// An index evaluated on nodes through its risk-measure family.
pub trait AcceptabilityIndex {
    /// Index value on `node` for a tail given per path.
    fn index(&self, tree: &EventTree, x: &[f64], node: NodeRef) -> f64;
    /// `ρ^γ` on `node`.
    fn risk(&self, tree: &EventTree, x: &[f64], node: NodeRef, level: RiskLevel) -> Result<f64, AcceptabilityError>;
    /// The density set behind `ρ^γ`, as linear rows.
    fn band(&self, level: RiskLevel) -> DensityBand;
}

/// The dynamic Gain-Loss Ratio.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dglr;

impl AcceptabilityIndex for Dglr {
    fn index(&self, tree: &EventTree, x: &[f64], node: NodeRef) -> f64 {
        dglr_on_node(tree, x, node)
    }

    fn risk(&self, tree: &EventTree, x: &[f64], node: NodeRef, level: RiskLevel) -> Result<f64, AcceptabilityError> {
        Ok(rho_on_node(tree, x, node, level, &SolverOptions::from_env())?.value)
    }

    fn band(&self, level: RiskLevel) -> DensityBand {
        DensityBand::new(level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trinomial_tree() -> EventTree {
        EventTree::new(
            vec![0.1, 0.125, 0.25, 0.25, 0.275],
            vec![
                vec![vec![0, 1, 2, 3, 4]],
                vec![vec![0, 1, 2], vec![3, 4]],
                (0..5).map(|i| vec![i]).collect(),
            ],
        )
        .unwrap()
    }

    fn two_state() -> EventTree {
        EventTree::new(vec![0.5, 0.5], vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]).unwrap()
    }

    fn terminal(rows: &[f64], horizon: usize) -> AdaptedProcess {
        AdaptedProcess::from_fn(rows.len(), horizon, |i, t| if t == horizon { rows[i] } else { 0.0 })
    }

    #[test]
    fn dglr_of_buy_and_hold() {
        let tree = trinomial_tree();
        let d = terminal(&[30.0, 30.0, 30.0, -10.0, -10.0], 2);
        let v = dglr_eval(&tree, &d, 0);
        assert!((v[0] - 9.0 / 5.25).abs() < 1e-12);
        assert!((v[0] - 1.714286).abs() < 1e-6);
    }

    #[test]
    fn dglr_edge_cases() {
        let tree = trinomial_tree();
        assert_eq!(dglr_eval(&tree, &terminal(&[1.0, 0.0, 2.0, 0.0, 0.0], 2), 0)[0], f64::INFINITY);
        assert_eq!(dglr_eval(&tree, &terminal(&[0.0; 5], 2), 0)[0], f64::INFINITY);
        assert_eq!(dglr_eval(&tree, &terminal(&[-1.0, 0.5, 0.0, 0.0, 0.0], 2), 0)[0], 0.0);
        let v1 = dglr_eval(&tree, &terminal(&[1.0, -1.0, 0.0, 0.0, 0.0], 2), 1);
        assert_eq!(v1[0], 0.0);
        assert_eq!(v1[1], f64::INFINITY);
    }

    #[test]
    fn rho_two_state() {
        let tree = two_state();
        let d = terminal(&[1.0, -1.0], 1);
        let r = rho_gamma(&tree, &d, 0, 1.0).unwrap();
        assert!((r[0].value - 1.0 / 3.0).abs() < 1e-12);
        assert!(!r[0].lp_only);
    }

    #[test]
    fn rho_of_constant() {
        let tree = trinomial_tree();
        let d = terminal(&[2.5; 5], 2);
        for g in [0.01, 1.0, 40.0] {
            let r = rho_gamma(&tree, &d, 0, g).unwrap();
            assert!((r[0].value + 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_small_gamma_is_minus_mean() {
        let tree = trinomial_tree();
        let d = terminal(&[3.0, -1.0, 2.0, -4.0, 0.5], 2);
        let mean: f64 = tree.probabilities().iter().zip(d.column(2)).map(|(p, x)| p * x).sum();
        let r = rho_gamma(&tree, &d, 0, 1e-10).unwrap();
        assert!((r[0].value + mean).abs() < 1e-8);
    }

    #[test]
    fn level_validation() {
        assert!(RiskLevel::new(0.0).is_err());
        assert!(RiskLevel::new(-1.0).is_err());
        assert!(RiskLevel::new(f64::INFINITY).is_err());
        assert!(RiskLevel::new(0.3).is_ok());
    }

    #[test]
    fn index_matches_ratio() {
        let tree = two_state();
        let v = index_level(&tree, &terminal(&[3.0, -1.0], 1), 0);
        assert!((v[0] - 2.0).abs() < 1e-6);
        assert_eq!(index_level(&tree, &terminal(&[1.0, 0.0], 1), 0)[0], f64::INFINITY);
        assert_eq!(index_level(&tree, &terminal(&[-1.0, 1.0], 1), 0)[0], 0.0);
        assert_eq!(index_level(&tree, &terminal(&[-1.0, 0.5], 1), 0)[0], 0.0);
    }

    #[test]
    fn correspondence_examples() {
        let tree = trinomial_tree();
        let d = terminal(&[30.0, 30.0, 30.0, -10.0, -10.0], 2);
        let p = tree.probabilities();
        let x = d.column(2);
        assert!(closed_form_band_minimum(p, &x, 12.0 / 7.0).abs() < 1e-12);
        assert!(closed_form_band_minimum(p, &x, 2.0) < 0.0);
        let samples = vec![
            Sample { cash_flow: d.clone(), t: 0, gamma: 12.0 / 7.0 },
            Sample { cash_flow: d.clone(), t: 0, gamma: 1.714286 },
            Sample { cash_flow: d, t: 0, gamma: 2.0 },
            Sample { cash_flow: terminal(&[1.0; 5], 2), t: 0, gamma: 7.0 },
        ];
        let report = correspondence_check(&tree, &samples).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.nodes, 4);
    }

    #[test]
    fn band_membership() {
        let band = DensityBand { gamma: 1.0 };
        assert!(band.contains(&[0.5, 0.5], &[2.0 / 3.0, 4.0 / 3.0], 1e-12));
        assert!(!band.contains(&[0.5, 0.5], &[0.5, 1.5], 1e-12));
    }
}
