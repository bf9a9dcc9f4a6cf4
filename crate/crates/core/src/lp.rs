//! Dense two-phase simplex kernel with Bland's rule and a Charnes–Cooper
//! wrapper for linear-fractional objectives.
//!
//! Problem sizes in this crate are tiny (at most a few hundred columns), so the
//! solver keeps a full tableau and certifies every optimal answer through the
//! dual it reads off the final basis. An exact rational path shares the same
//! pivoting code and is available for resolving numerical disputes in tests.

use std::fmt::Debug;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use thiserror::Error;

/// Environment variable overriding the default feasibility tolerance.
pub const TOLERANCE_ENV: &str = "CONIC_PRICER_TOLERANCE";

/// Default feasibility / optimality tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("certification failed: primal residual {primal:.3e}, dual residual {dual:.3e}, gap {gap:.3e}")]
    Certification { primal: f64, dual: f64, gap: f64 },
    #[error("denominator degenerate at the optimum (scale {0:.3e})")]
    DegenerateDenominator(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// One linear row `coeffs · x (≤|=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// `max|min c·x` subject to `A x ≤ b`, `E x = d`, `lower ≤ x ≤ upper`.
///
/// Lower bounds default to zero; `f64::NEG_INFINITY` marks a free variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub inequalities: Vec<Row>,
    pub equalities: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<Option<f64>>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![None; n],
        }
    }

    /// A program with `n` variables and a zero objective.
    pub fn feasibility(n: usize) -> Self {
        Self::new(Sense::Maximize, vec![0.0; n])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn leq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.inequalities.push(Row { coeffs, rhs });
        self
    }

    pub fn geq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        let coeffs = coeffs.into_iter().map(|c| -c).collect();
        self.inequalities.push(Row { coeffs, rhs: -rhs });
        self
    }

    pub fn equal(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.equalities.push(Row { coeffs, rhs });
        self
    }

    pub fn bounds(&mut self, var: usize, lower: f64, upper: Option<f64>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Invalid("bound vectors do not match variable count".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Invalid("non-finite objective coefficient".into()));
        }
        for (kind, rows) in [("inequality", &self.inequalities), ("equality", &self.equalities)] {
            for (i, row) in rows.iter().enumerate() {
                if row.coeffs.len() != n {
                    return Err(LpError::Invalid(format!(
                        "{kind} row {i} has {} coefficients, expected {n}",
                        row.coeffs.len()
                    )));
                }
                if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(LpError::Invalid(format!("{kind} row {i} has a non-finite entry")));
                }
            }
        }
        for j in 0..n {
            let lo = self.lower[j];
            if lo.is_nan() || lo == f64::INFINITY {
                return Err(LpError::Invalid(format!("variable {j} has invalid lower bound")));
            }
            if let Some(hi) = self.upper[j] {
                if !hi.is_finite() || hi < lo {
                    return Err(LpError::Invalid(format!("variable {j} has invalid upper bound")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Residuals of the optimality certificate, each relative to `1 + |value|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

impl Certificate {
    pub fn max_residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual).max(self.gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value in the posed sense; meaningful only when optimal.
    pub value: f64,
    pub primal: Vec<f64>,
    /// Multipliers of the inequality rows (nonnegative for a maximization).
    pub dual_inequalities: Vec<f64>,
    pub dual_equalities: Vec<f64>,
    pub certificate: Option<Certificate>,
}

impl LpSolution {
    fn without_point(status: LpStatus, n: usize) -> Self {
        Self {
            status,
            value: f64::NAN,
            primal: vec![f64::NAN; n],
            dual_inequalities: Vec::new(),
            dual_equalities: Vec::new(),
            certificate: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub pivot_tolerance: f64,
    pub max_iterations: usize,
    /// Exact rational arithmetic (slow path).
    pub exact: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            pivot_tolerance: 1e-11,
            max_iterations: 200_000,
            exact: false,
        }
    }
}

impl SolverOptions {
    /// Defaults with the tolerance taken from `CONIC_PRICER_TOLERANCE` when set.
    pub fn from_env() -> Self {
        let mut opts = Self::default();
        if let Some(tol) = std::env::var(TOLERANCE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|t| t.is_finite() && *t > 0.0)
        {
            opts.tolerance = tol;
        }
        opts
    }

    pub fn exact() -> Self {
        Self { exact: true, ..Self::default() }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let std_form = StandardForm::build(lp);
    let exact = |opts: &SolverOptions| {
        let zero = Ratio::<BigInt>::from_integer(0.into());
        let unit = Scaling::identity(&std_form);
        run::<Ratio<BigInt>>(lp, &std_form, &std_form, &unit, &SolverOptions { exact: true, ..*opts }, zero)
    };
    let result = if opts.exact {
        exact(opts)
    } else {
        let (work, scaling) = std_form.equilibrated();
        match run::<f64>(lp, &std_form, &work, &scaling, opts, opts.pivot_tolerance) {
            // badly scaled rows can leave the float tableau just outside tolerance
            Err(LpError::Certification { .. }) => {
                EXACT_FALLBACKS.fetch_add(1, Ordering::Relaxed);
                exact(opts)
            }
            other => other,
        }
    };
    if let Ok(LpSolution { certificate: Some(c), .. }) = &result {
        record(c.max_residual());
    }
    result
}

static CERTIFIED: AtomicU64 = AtomicU64::new(0);
static EXACT_FALLBACKS: AtomicU64 = AtomicU64::new(0);
static WORST_BITS: AtomicU64 = AtomicU64::new(0);

/// Process-wide tally of optimal solves and their certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub certified: u64,
    /// Float solves whose certificate missed the tolerance and were redone exactly.
    pub exact_fallbacks: u64,
    pub max_residual: f64,
}

fn record(residual: f64) {
    CERTIFIED.fetch_add(1, Ordering::Relaxed);
    // nonnegative floats order like their bit patterns
    let bits = if residual.is_finite() { residual.max(0.0).to_bits() } else { f64::INFINITY.to_bits() };
    WORST_BITS.fetch_max(bits, Ordering::Relaxed);
}

pub fn solve_stats() -> SolveStats {
    SolveStats {
        certified: CERTIFIED.load(Ordering::Relaxed),
        exact_fallbacks: EXACT_FALLBACKS.load(Ordering::Relaxed),
        max_residual: f64::from_bits(WORST_BITS.load(Ordering::Relaxed)),
    }
}

/// An affine function `coeffs · x + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl Affine {
    pub fn new(coeffs: Vec<f64>, constant: f64) -> Self {
        Self { coeffs, constant }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSolution {
    pub status: LpStatus,
    pub value: f64,
    pub point: Vec<f64>,
    pub certificate: Option<Certificate>,
}

/// Optimizes `numerator(x) / denominator(x)` over the feasible set of
/// `constraints` (whose objective and sense are ignored).
///
/// The caller guarantees the denominator is positive on the feasible set.
pub fn solve_ratio(
    numerator: &Affine,
    denominator: &Affine,
    constraints: &LinearProgram,
    sense: Sense,
) -> Result<RatioSolution, LpError> {
    solve_ratio_with(numerator, denominator, constraints, sense, &SolverOptions::default())
}

pub fn solve_ratio_with(
    numerator: &Affine,
    denominator: &Affine,
    constraints: &LinearProgram,
    sense: Sense,
    opts: &SolverOptions,
) -> Result<RatioSolution, LpError> {
    constraints.validate()?;
    let n = constraints.num_vars();
    if numerator.coeffs.len() != n || denominator.coeffs.len() != n {
        return Err(LpError::Invalid("ratio coefficients do not match variable count".into()));
    }
    // y = s·x, s ≥ 0, denominator(y, s) = 1
    let s = n;
    let widen = |coeffs: &[f64], last: f64| {
        let mut row = coeffs.to_vec();
        row.push(last);
        row
    };
    let mut obj = numerator.coeffs.clone();
    obj.push(numerator.constant);
    let mut cc = LinearProgram::new(sense, obj);
    for row in &constraints.inequalities {
        cc.leq(widen(&row.coeffs, -row.rhs), 0.0);
    }
    for row in &constraints.equalities {
        cc.equal(widen(&row.coeffs, -row.rhs), 0.0);
    }
    for j in 0..n {
        let lo = constraints.lower[j];
        let mut unit = vec![0.0; n + 1];
        if lo == 0.0 {
            cc.lower[j] = 0.0;
        } else {
            cc.lower[j] = if lo > 0.0 { 0.0 } else { f64::NEG_INFINITY };
            if lo.is_finite() {
                unit[j] = -1.0;
                unit[s] = lo;
                cc.leq(unit.clone(), 0.0);
                unit[j] = 0.0;
            }
        }
        if let Some(hi) = constraints.upper[j] {
            unit[j] = 1.0;
            unit[s] = -hi;
            cc.leq(unit, 0.0);
        }
    }
    cc.equal(widen(&denominator.coeffs, denominator.constant), 1.0);

    let sol = solve_with(&cc, opts)?;
    if sol.status != LpStatus::Optimal {
        return Ok(RatioSolution {
            status: sol.status,
            value: f64::NAN,
            point: vec![f64::NAN; n],
            certificate: None,
        });
    }
    let scale = sol.primal[s];
    if !(scale > opts.tolerance) {
        return Err(LpError::DegenerateDenominator(scale));
    }
    let point: Vec<f64> = sol.primal[..n].iter().map(|y| y / scale).collect();
    Ok(RatioSolution {
        status: LpStatus::Optimal,
        value: sol.value,
        point,
        certificate: sol.certificate,
    })
}

/// How an original variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    Shifted { col: usize, lower: f64 },
    Split { plus: usize, minus: usize },
}

/// `max c·x`, `A x = b`, `x ≥ 0`, `b ≥ 0` with one slack per inequality.
struct StandardForm {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    cost_offset: f64,
    columns: Vec<ColumnMap>,
    /// `-1` when the row was negated to make its right-hand side nonnegative.
    row_sign: Vec<f64>,
    n_ineq: usize,
    n_eq: usize,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let mut columns = Vec::with_capacity(n);
        let mut n_struct = 0;
        for j in 0..n {
            if lp.lower[j].is_finite() {
                columns.push(ColumnMap::Shifted { col: n_struct, lower: lp.lower[j] });
                n_struct += 1;
            } else {
                columns.push(ColumnMap::Split { plus: n_struct, minus: n_struct + 1 });
                n_struct += 2;
            }
        }
        let expand = |coeffs: &[f64]| -> (Vec<f64>, f64) {
            let mut row = vec![0.0; n_struct];
            let mut shift = 0.0;
            for (j, map) in columns.iter().enumerate() {
                match *map {
                    ColumnMap::Shifted { col, lower } => {
                        row[col] = coeffs[j];
                        shift += coeffs[j] * lower;
                    }
                    ColumnMap::Split { plus, minus } => {
                        row[plus] = coeffs[j];
                        row[minus] = -coeffs[j];
                    }
                }
            }
            (row, shift)
        };

        let mut ineq: Vec<(Vec<f64>, f64)> = lp
            .inequalities
            .iter()
            .map(|r| {
                let (row, shift) = expand(&r.coeffs);
                (row, r.rhs - shift)
            })
            .collect();
        for j in 0..n {
            if let Some(hi) = lp.upper[j] {
                let mut unit = vec![0.0; n];
                unit[j] = 1.0;
                let (row, shift) = expand(&unit);
                ineq.push((row, hi - shift));
            }
        }
        let eq: Vec<(Vec<f64>, f64)> = lp
            .equalities
            .iter()
            .map(|r| {
                let (row, shift) = expand(&r.coeffs);
                (row, r.rhs - shift)
            })
            .collect();

        let n_ineq = ineq.len();
        let n_eq = eq.len();
        let width = n_struct + n_ineq;
        let mut rows = Vec::with_capacity(n_ineq + n_eq);
        let mut rhs = Vec::with_capacity(n_ineq + n_eq);
        let mut row_sign = Vec::with_capacity(n_ineq + n_eq);
        for (i, (coeffs, b)) in ineq.into_iter().chain(eq).enumerate() {
            let mut row = coeffs;
            row.resize(width, 0.0);
            if i < n_ineq {
                row[n_struct + i] = 1.0;
            }
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            rows.push(row.into_iter().map(|v| sign * v).collect());
            rhs.push(sign * b);
            row_sign.push(sign);
        }

        let dir = match lp.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let (obj, offset) = expand(&lp.objective);
        let mut cost: Vec<f64> = obj.into_iter().map(|c| dir * c).collect();
        cost.resize(width, 0.0);

        Self {
            rows,
            rhs,
            cost,
            cost_offset: dir * offset,
            columns,
            row_sign,
            n_ineq,
            n_eq,
        }
    }

    fn width(&self) -> usize {
        self.cost.len()
    }

    /// A copy with columns, then rows, scaled by powers of two towards unit
    /// max-norm. Power-of-two factors keep the scaled data exact.
    fn equilibrated(&self) -> (StandardForm, Scaling) {
        let pow2 = |v: f64| if v > 0.0 && v.is_finite() { (-v.log2().round()).exp2() } else { 1.0 };
        let width = self.width();
        let col: Vec<f64> = (0..width).map(|j| pow2(self.rows.iter().fold(0.0f64, |a, r| a.max(r[j].abs())))).collect();
        let mut rows: Vec<Vec<f64>> = self.rows.iter().map(|r| r.iter().zip(&col).map(|(a, s)| a * s).collect()).collect();
        let row: Vec<f64> = rows.iter().map(|r| pow2(r.iter().fold(0.0f64, |a, v| a.max(v.abs())))).collect();
        for (r, s) in rows.iter_mut().zip(&row) {
            r.iter_mut().for_each(|v| *v *= s);
        }
        let work = StandardForm {
            rows,
            rhs: self.rhs.iter().zip(&row).map(|(b, s)| b * s).collect(),
            cost: self.cost.iter().zip(&col).map(|(c, s)| c * s).collect(),
            cost_offset: self.cost_offset,
            columns: self.columns.clone(),
            row_sign: self.row_sign.clone(),
            n_ineq: self.n_ineq,
            n_eq: self.n_eq,
        };
        (work, Scaling { col, row })
    }
}

/// `x = col ∘ x'` and `y = row ∘ y'` between a scaled form and the original.
struct Scaling {
    col: Vec<f64>,
    row: Vec<f64>,
}

impl Scaling {
    fn identity(sf: &StandardForm) -> Self {
        Self { col: vec![1.0; sf.width()], row: vec![1.0; sf.rows.len()] }
    }
}

trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive
{
    fn lift(x: f64) -> Self {
        Self::from_f64(x).expect("finite coefficient")
    }
    fn lower(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {}
impl Scalar for Ratio<BigInt> {}

struct Tableau<T> {
    /// Rows `[structural+slack | artificial | rhs]`.
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    width: usize,
    m: usize,
    pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> &T {
        &self.rows[i][self.width + self.m]
    }

    fn pivot(&mut self, r: usize, c: usize, reduced: &mut [T], value: &mut T) -> Result<(), LpError> {
        let p = self.rows[r][c].clone();
        if p.lower().is_nan() || !p.lower().is_finite() {
            return Err(LpError::Breakdown(format!("non-finite pivot at row {r}, column {c}")));
        }
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        let f = reduced[c].clone();
        if !f.is_zero() {
            let last = pivot_row.len() - 1;
            for (j, pv) in pivot_row[..last].iter().enumerate() {
                if !pv.is_zero() {
                    reduced[j] = reduced[j].clone() - f.clone() * pv.clone();
                }
            }
            *value = value.clone() + f * pivot_row[last].clone();
        }
        self.basis[r] = c;
        self.pivots += 1;
        Ok(())
    }

    /// Primal simplex with Bland's rule on the columns allowed to enter.
    fn optimize(
        &mut self,
        reduced: &mut [T],
        value: &mut T,
        can_enter: &dyn Fn(usize) -> bool,
        eps: &T,
        max_iter: usize,
    ) -> Result<bool, LpError> {
        loop {
            if self.pivots >= max_iter {
                return Err(LpError::IterationLimit(max_iter));
            }
            let entering = (0..reduced.len()).find(|&j| can_enter(j) && reduced[j] > *eps);
            let Some(c) = entering else { return Ok(true) };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.m {
                let a = &self.rows[i][c];
                if *a > *eps {
                    let ratio = self.rhs(i).clone() / a.clone();
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else { return Ok(false) };
            self.pivot(r, c, reduced, value)?;
        }
    }
}

/// Pivots on `work` (a rescaled copy of `sf`) and certifies against `sf`.
fn run<T: Scalar>(
    lp: &LinearProgram,
    sf: &StandardForm,
    work: &StandardForm,
    scaling: &Scaling,
    opts: &SolverOptions,
    eps: T,
) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    let m = sf.rows.len();
    let width = sf.width();
    if m == 0 {
        // Only sign constraints: optimal at the lower corner unless some cost improves forever.
        if sf.cost.iter().any(|&c| c > opts.tolerance) {
            return Ok(LpSolution::without_point(LpStatus::Unbounded, n));
        }
        let x_std = vec![0.0; width];
        return Ok(finish(lp, sf, &x_std, &[], opts));
    }

    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<T> = work.rows[i].iter().map(|&v| T::lift(v)).collect();
        row.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        row.push(T::lift(work.rhs[i]));
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis: (width..width + m).collect(), width, m, pivots: 0 };

    // phase 1: maximize −Σ artificials
    let mut reduced: Vec<T> = vec![T::zero(); width + m];
    let mut value = T::zero();
    for i in 0..m {
        for j in 0..width {
            reduced[j] = reduced[j].clone() + tab.rows[i][j].clone();
        }
        value = value - tab.rhs(i).clone();
    }
    tab.optimize(&mut reduced, &mut value, &|j| j < width, &eps, opts.max_iterations)?;
    let bscale = 1.0 + work.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if value.lower() < -opts.tolerance * bscale || (opts.exact && value < T::zero()) {
        if !opts.exact {
            // phase-1 duals form a Farkas ray: y·A ≥ 0 with y·b < 0
            let y: Vec<f64> = (0..m).map(|k| (-1.0 - reduced[width + k].lower()) * scaling.row[k]).collect();
            let violation = farkas_violation(sf, &y);
            if !(violation <= opts.tolerance) {
                return Err(LpError::Certification { primal: violation, dual: 0.0, gap: 0.0 });
            }
        }
        return Ok(LpSolution::without_point(LpStatus::Infeasible, n));
    }

    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= width {
            if let Some(c) = (0..width).find(|&j| tab.rows[r][j].abs() > eps) {
                let mut scratch = vec![T::zero(); width + m];
                let mut v = T::zero();
                tab.pivot(r, c, &mut scratch, &mut v)?;
            }
        }
    }

    // phase 2
    let cost: Vec<T> = work.cost.iter().map(|&c| T::lift(c)).collect();
    let mut reduced: Vec<T> = (0..width + m)
        .map(|j| if j < width { cost[j].clone() } else { T::zero() })
        .collect();
    let mut value = T::zero();
    for i in 0..m {
        let b = tab.basis[i];
        if b < width && !cost[b].is_zero() {
            let cb = cost[b].clone();
            for j in 0..width + m {
                reduced[j] = reduced[j].clone() - cb.clone() * tab.rows[i][j].clone();
            }
            value = value + cb * tab.rhs(i).clone();
        }
    }
    let bounded = tab.optimize(&mut reduced, &mut value, &|j| j < width, &eps, opts.max_iterations)?;
    if !bounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, n));
    }

    let mut x_std = vec![0.0; width];
    for i in 0..m {
        let b = tab.basis[i];
        if b < width {
            x_std[b] = tab.rhs(i).lower() * scaling.col[b];
        }
    }
    // y = c_B B⁻¹, with B⁻¹ sitting in the artificial block
    let mut y = vec![0.0; m];
    for (k, yk) in y.iter_mut().enumerate() {
        let mut acc = T::zero();
        for i in 0..m {
            let b = tab.basis[i];
            if b < width && !cost[b].is_zero() {
                acc = acc + cost[b].clone() * tab.rows[i][width + k].clone();
            }
        }
        *yk = acc.lower() * scaling.row[k];
    }
    if x_std.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(LpError::Breakdown("non-finite primal or dual value".into()));
    }
    let mut sol = finish(lp, sf, &x_std, &y, opts);
    let mut cert = sol.certificate.expect("optimal solutions carry a certificate");
    if !opts.exact && cert.max_residual() > opts.tolerance {
        // pivoting error accumulates in the tableau; re-solve on the final basis
        if let Some((xr, yr)) = refine(work, &tab.basis, scaling) {
            let refined = finish(lp, sf, &xr, &yr, opts);
            let rc = refined.certificate.expect("optimal solutions carry a certificate");
            if rc.max_residual() < cert.max_residual() {
                sol = refined;
                cert = rc;
            }
        }
    }
    if !opts.exact && cert.max_residual() > opts.tolerance {
        return Err(LpError::Certification {
            primal: cert.primal_residual,
            dual: cert.dual_residual,
            gap: cert.gap,
        });
    }
    Ok(sol)
}

/// Primal and dual values of `basis` solved afresh from the scaled data, with
/// one step of iterative refinement, mapped back to the original form.
fn refine(work: &StandardForm, basis: &[usize], scaling: &Scaling) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = work.rows.len();
    let width = work.width();
    // column k of B; artificials contribute unit columns
    let column = |b: usize| -> Vec<f64> {
        if b < width {
            work.rows.iter().map(|r| r[b]).collect()
        } else {
            (0..m).map(|i| f64::from(u8::from(i == b - width))).collect()
        }
    };
    let cols: Vec<Vec<f64>> = basis.iter().map(|&b| column(b)).collect();
    let bmat: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|k| cols[k][i]).collect()).collect();
    let btrans: Vec<Vec<f64>> = cols.clone();
    let cb: Vec<f64> = basis.iter().map(|&b| if b < width { work.cost[b] } else { 0.0 }).collect();
    let xb = solve_refined(&bmat, &work.rhs)?;
    let yb = solve_refined(&btrans, &cb)?;
    let mut x = vec![0.0; width];
    for (k, &b) in basis.iter().enumerate() {
        if b < width {
            x[b] = xb[k].max(0.0) * scaling.col[b];
        }
    }
    let y: Vec<f64> = yb.iter().zip(&scaling.row).map(|(v, s)| v * s).collect();
    Some((x, y))
}

fn solve_refined(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let mut x = gauss(a, b)?;
    let r: Vec<f64> = a.iter().zip(b).map(|(row, bi)| bi - row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>()).collect();
    let dx = gauss(a, &r)?;
    x.iter_mut().zip(dx).for_each(|(v, d)| *v += d);
    Some(x)
}

/// Largest shortfall of `y·A ≥ 0` once `y` is scaled to `y·b = −1`, so a
/// violation `δ` only rules out points with `Σx < 1/δ`. Infinite when `y·b`
/// is not negative.
fn farkas_violation(sf: &StandardForm, y: &[f64]) -> f64 {
    let yb: f64 = sf.rhs.iter().zip(y).map(|(b, v)| b * v).sum();
    let size = sf.rhs.iter().zip(y).fold(0.0f64, |a, (b, v)| a.max((b * v).abs()));
    if !(yb < -1e-12 * size) {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for j in 0..sf.width() {
        let ya: f64 = sf.rows.iter().zip(y).map(|(r, v)| r[j] * v).sum();
        worst = worst.max(ya / yb);
    }
    worst
}

/// Gaussian elimination with partial pivoting.
fn gauss(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, bi)| r.iter().cloned().chain([*bi]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c][k] * x[k]).sum();
        x[c] = (m[c][n] - s) / m[c][c];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn finish(lp: &LinearProgram, sf: &StandardForm, x_std: &[f64], y: &[f64], _opts: &SolverOptions) -> LpSolution {
    let n = lp.num_vars();
    let primal: Vec<f64> = sf
        .columns
        .iter()
        .map(|map| match *map {
            ColumnMap::Shifted { col, lower } => lower + x_std[col],
            ColumnMap::Split { plus, minus } => x_std[plus] - x_std[minus],
        })
        .collect();
    let value_max: f64 = sf.cost.iter().zip(x_std).map(|(c, x)| c * x).sum::<f64>() + sf.cost_offset;
    let value = match lp.sense {
        Sense::Maximize => value_max,
        Sense::Minimize => -value_max,
    };

    let scale = 1.0 + value.abs();
    let mut primal_res = x_std.iter().fold(0.0f64, |a, &x| a.max(-x));
    for (row, b) in sf.rows.iter().zip(&sf.rhs) {
        // relative to the largest term, so rows with large coefficients are not penalised
        let ax: f64 = row.iter().zip(x_std).map(|(a, x)| a * x).sum();
        let size = row.iter().zip(x_std).fold(b.abs(), |m, (a, x)| m.max((a * x).abs()));
        primal_res = primal_res.max((ax - b).abs() / (1.0 + size));
    }
    let y_full: Vec<f64> = if y.is_empty() { vec![0.0; sf.rows.len()] } else { y.to_vec() };
    let mut dual_res = 0.0f64;
    for j in 0..sf.width() {
        let ya: f64 = sf.rows.iter().zip(&y_full).map(|(row, yi)| row[j] * yi).sum();
        let size = sf.rows.iter().zip(&y_full).fold(sf.cost[j].abs(), |m, (row, yi)| m.max((row[j] * yi).abs()));
        dual_res = dual_res.max((sf.cost[j] - ya) / (1.0 + size));
    }
    let by: f64 = sf.rhs.iter().zip(&y_full).map(|(b, yi)| b * yi).sum::<f64>() + sf.cost_offset;
    let gap = (value_max - by).abs();

    let dir = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let posed: Vec<f64> = y_full.iter().zip(&sf.row_sign).map(|(yi, s)| dir * yi * s).collect();
    let dual_inequalities = posed[..lp.inequalities.len()].to_vec();
    let dual_equalities = posed[sf.n_ineq..sf.n_ineq + sf.n_eq].to_vec();

    debug_assert_eq!(primal.len(), n);
    LpSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        dual_inequalities,
        dual_equalities,
        certificate: Some(Certificate {
            primal_residual: primal_res,
            dual_residual: dual_res.max(0.0),
            gap: gap / scale,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * (1.0 + b.abs())
    }

    #[test]
    fn simple_max() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.leq(vec![1.0, 1.0], 1.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(close(sol.value, 1.0));
        assert!(sol.certificate.unwrap().max_residual() <= 1e-9);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::feasibility(1);
        lp.leq(vec![1.0], -1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_program() {
        let lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0]);
        lp.leq(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn minimize_with_equality_and_bounds() {
        // min x + 2y, x + y = 3, 1 ≤ x ≤ 2, y free
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.equal(vec![1.0, 1.0], 3.0).bounds(0, 1.0, Some(2.0)).bounds(1, f64::NEG_INFINITY, None);
        let sol = solve(&lp).unwrap();
        assert!(close(sol.value, 2.0 + 2.0));
        assert!(close(sol.primal[0], 2.0) && close(sol.primal[1], 1.0));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance
        let mut lp = LinearProgram::new(Sense::Maximize, vec![0.75, -20.0, 0.5, -6.0]);
        lp.leq(vec![0.25, -8.0, -1.0, 9.0], 0.0);
        lp.leq(vec![0.5, -12.0, -0.5, 3.0], 0.0);
        lp.leq(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let sol = solve(&lp).unwrap();
        assert!(close(sol.value, 1.25));
    }

    #[test]
    fn exact_mode_agrees() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
        lp.leq(vec![1.0, 1.0], 4.0).leq(vec![1.0, 3.0], 6.0).leq(vec![1.0, 0.0], 3.0);
        let a = solve(&lp).unwrap();
        let b = solve_with(&lp, &SolverOptions::exact()).unwrap();
        assert!(close(a.value, 11.0) && close(b.value, 11.0));
    }

    #[test]
    fn duals_price_the_rows() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
        lp.leq(vec![1.0, 1.0], 4.0).leq(vec![1.0, 3.0], 6.0).leq(vec![1.0, 0.0], 3.0);
        let sol = solve(&lp).unwrap();
        let by: f64 = [4.0, 6.0, 3.0].iter().zip(&sol.dual_inequalities).map(|(b, y)| b * y).sum();
        assert!(close(by, sol.value));
        assert!(sol.dual_inequalities.iter().all(|&y| y >= -1e-12));
    }

    #[test]
    fn ratio_monotone_example() {
        let mut c = LinearProgram::feasibility(1);
        c.bounds(0, 0.0, Some(1.0));
        let sol = solve_ratio(&Affine::new(vec![2.0], 1.0), &Affine::new(vec![1.0], 1.0), &c, Sense::Maximize)
            .unwrap();
        assert!(close(sol.value, 1.5));
        assert!(close(sol.point[0], 1.0));
    }

    #[test]
    fn ratio_with_unit_denominator_is_plain_lp() {
        let mut c = LinearProgram::feasibility(2);
        c.leq(vec![1.0, 2.0], 4.0).leq(vec![3.0, 1.0], 6.0);
        let r = solve_ratio(&Affine::new(vec![1.0, 1.0], 0.0), &Affine::new(vec![0.0, 0.0], 1.0), &c, Sense::Maximize)
            .unwrap();
        let mut lp = c.clone();
        lp.objective = vec![1.0, 1.0];
        let p = solve(&lp).unwrap();
        assert!(close(r.value, p.value));
    }

    #[test]
    fn ratio_two_state_band() {
        // min E[(1+Λ)X]/E[1+Λ], X = (1, −1), P = (.5, .5), 0 ≤ Λ ≤ 1
        let mut c = LinearProgram::feasibility(2);
        c.bounds(0, 0.0, Some(1.0)).bounds(1, 0.0, Some(1.0));
        let sol = solve_ratio(&Affine::new(vec![0.5, -0.5], 0.0), &Affine::new(vec![0.5, 0.5], 1.0), &c, Sense::Minimize)
            .unwrap();
        assert!(close(sol.value, -1.0 / 3.0));
    }

    #[test]
    fn rejects_malformed_rows() {
        let mut lp = LinearProgram::feasibility(2);
        lp.leq(vec![1.0], 1.0);
        assert!(matches!(solve(&lp), Err(LpError::Invalid(_))));
        let mut lp = LinearProgram::feasibility(1);
        lp.leq(vec![f64::NAN], 1.0);
        assert!(matches!(solve(&lp), Err(LpError::Invalid(_))));
    }
}
