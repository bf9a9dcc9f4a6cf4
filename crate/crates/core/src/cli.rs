//! Command-line front end: JSON model and payoff files in, CSV or JSON reports out.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptability;
use crate::cone::{self, ConeError};
use crate::lattice::{AdaptedProcess, EventTree, NodeRef};
use crate::market::{self, Averaging, CashFlow, DiscountConvention, MarketError, MarketModel, ModelOptions, Security};
use crate::pricing::{self, NgdOutcome, NodeQuote, PriceQuote, Pricer, PricingError, SurfacePoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { code: EXIT_INTERNAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        match e {
            PricingError::Market(m) => m.into(),
            PricingError::Builder { source, lambda } => {
                let inner: CliError = (*source).into();
                Self { code: inner.code, message: format!("λ = {lambda}: {}", inner.message) }
            }
            PricingError::Time { .. } | PricingError::EmptyGrid(_) | PricingError::Acceptability(_) => Self::usage(e.to_string()),
            PricingError::StochasticRates | PricingError::Shape => Self::validation(e.to_string()),
            PricingError::Cone(ConeError::Market(m)) => m.into(),
            PricingError::Cone(ConeError::StartTime { .. }) => Self::usage(e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}

impl From<ConeError> for CliError {
    fn from(e: ConeError) -> Self {
        PricingError::Cone(e).into()
    }
}

/// A probability written as a number or as an exact `"a/b"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probability {
    Number(f64),
    Text(String),
}

impl Probability {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Probability::Number(x) => Ok(*x),
            Probability::Text(s) => {
                let s = s.trim();
                if s.contains('/') {
                    Ratio::<i64>::from_str(s)
                        .map(|r| *r.numer() as f64 / *r.denom() as f64)
                        .map_err(|_| CliError::validation(format!("bad probability {s:?}")))
                } else {
                    s.parse().map_err(|_| CliError::validation(format!("bad probability {s:?}")))
                }
            }
        }
    }
}

/// Flat rate or a per-path matrix with `T` or `T+1` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Flat(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConventionSpec {
    #[default]
    UnitAtZero,
    InclusiveProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecuritySpec {
    pub name: String,
    pub bid: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ask: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div_ask: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div_bid: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub horizon: usize,
    pub probabilities: Vec<Probability>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<String>>,
    /// Explicit filtration; derived from the prices and rates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Rates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<ConventionSpec>,
    pub securities: Vec<SecuritySpec>,
}

fn matrix(rows: &[Vec<f64>], n: usize, horizon: usize, what: &str) -> Result<AdaptedProcess, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != horizon + 1) {
        return Err(CliError::validation(format!("{what}: expected {n} rows of {} values", horizon + 1)));
    }
    AdaptedProcess::from_rows(rows).map_err(|e| CliError::validation(format!("{what}: {e}")))
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("model file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read_file(path)?)
    }

    fn rates(&self, n: usize) -> Result<AdaptedProcess, CliError> {
        let t = self.horizon;
        match &self.rates {
            None => Ok(AdaptedProcess::zeros(n, t)),
            Some(Rates::Flat(r)) => Ok(AdaptedProcess::constant(n, t, *r)),
            Some(Rates::Matrix(rows)) => {
                if rows.len() == n && rows.iter().all(|r| r.len() == t && t > 0) {
                    // r_T never enters the default convention; repeat r_{T-1}
                    let padded: Vec<Vec<f64>> = rows.iter().map(|r| {
                        let mut r = r.clone();
                        r.push(*r.last().expect("nonempty"));
                        r
                    }).collect();
                    matrix(&padded, n, t, "rates")
                } else {
                    matrix(rows, n, t, "rates")
                }
            }
        }
    }

    /// The model with every security's ask overridden by `bid·(1+λ)` when `lambda` is given.
    pub fn build_with(&self, lambda: Option<f64>) -> Result<MarketModel, CliError> {
        let probs = self.probabilities.iter().map(Probability::value).collect::<Result<Vec<_>, _>>()?;
        let n = probs.len();
        let t = self.horizon;
        if self.securities.is_empty() {
            return Err(CliError::validation("model has no securities"));
        }
        let rates = self.rates(n)?;
        let mut securities = Vec::with_capacity(self.securities.len());
        for s in &self.securities {
            let bid = matrix(&s.bid, n, t, &format!("{} bid", s.name))?;
            let mut sec = match (lambda, &s.ask, s.lambda) {
                (Some(l), _, _) => Security::with_lambda(s.name.clone(), bid, l)?,
                (None, Some(_), Some(_)) => {
                    return Err(CliError::validation(format!("{}: give either ask or lambda, not both", s.name)))
                }
                (None, Some(ask), None) => {
                    let ask = matrix(ask, n, t, &format!("{} ask", s.name))?;
                    Security::new(s.name.clone(), bid, ask)
                }
                (None, None, l) => Security::with_lambda(s.name.clone(), bid, l.unwrap_or(0.0))?,
            };
            match (&s.div_ask, &s.div_bid) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    let a = matrix(a, n, t, &format!("{} div_ask", s.name))?;
                    let b = matrix(b, n, t, &format!("{} div_bid", s.name))?;
                    sec = sec.with_dividends(a, b);
                }
                _ => return Err(CliError::validation(format!("{}: div_ask and div_bid go together", s.name))),
            }
            securities.push(sec);
        }
        let tree = match &self.partitions {
            Some(parts) => EventTree::new(probs, parts.clone()).map_err(MarketError::from)?,
            None => {
                let mut obs: Vec<AdaptedProcess> = vec![rates.clone()];
                for s in &securities {
                    obs.extend([s.bid.clone(), s.ask.clone(), s.div_ask.clone(), s.div_bid.clone()]);
                }
                EventTree::from_observables(probs, &obs).map_err(MarketError::from)?
            }
        };
        let tree = match &self.paths {
            Some(names) => tree.with_path_names(names.clone()).map_err(MarketError::from)?,
            None => tree,
        };
        let convention = match self.convention.unwrap_or_default() {
            ConventionSpec::UnitAtZero => DiscountConvention::UnitAtZero,
            ConventionSpec::InclusiveProduct => DiscountConvention::InclusiveProduct,
        };
        let options = ModelOptions { convention, ..ModelOptions::default() };
        Ok(MarketModel::with_options(tree, rates, securities, options)?)
    }

    pub fn build(&self) -> Result<MarketModel, CliError> {
        self.build_with(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingSpec {
    Bid,
    Ask,
    Mid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Protection buyer: receives `ΔA^ask`.
    #[default]
    Buy,
    /// Protection seller: receives `−ΔA^bid`.
    Sell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffFile {
    /// Cash flow per path and date.
    CashFlow { values: Vec<Vec<f64>> },
    AsianCall {
        #[serde(default)]
        security: usize,
        strike: f64,
        averaging: AveragingSpec,
    },
    Cds {
        tau: Vec<Option<usize>>,
        delta: f64,
        kappa_ask: f64,
        kappa_bid: f64,
        #[serde(default)]
        side: Side,
    },
}

impl PayoffFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("payoff file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("payoff file serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read_file(path)?)
    }

    pub fn build(&self, model: &MarketModel) -> Result<CashFlow, CliError> {
        let tree = model.tree();
        match self {
            PayoffFile::CashFlow { values } => {
                let m = matrix(values, tree.n_paths(), tree.horizon(), "cash flow")?;
                Ok(CashFlow::new(tree, m)?)
            }
            PayoffFile::AsianCall { security, strike, averaging } => {
                let avg = match averaging {
                    AveragingSpec::Bid => Averaging::Bid,
                    AveragingSpec::Ask => Averaging::Ask,
                    AveragingSpec::Mid => Averaging::Mid,
                };
                Ok(market::asian_call(model, *security, *strike, avg)?)
            }
            PayoffFile::Cds { tau, delta, kappa_ask, kappa_bid, side } => {
                let (a_ask, a_bid) = market::cds_dividends(tree, tau, *delta, *kappa_ask, *kappa_bid)?;
                let flow = match side {
                    Side::Buy => AdaptedProcess::from_fn(tree.n_paths(), tree.horizon(), |i, t| a_ask.increment(i, t)),
                    Side::Sell => AdaptedProcess::from_fn(tree.n_paths(), tree.horizon(), |i, t| -a_bid.increment(i, t)),
                };
                Ok(CashFlow::new(tree, flow)?)
            }
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// `x` with `digits` significant digits, trailing zeros dropped; infinities as `±inf`.
pub fn format_number(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "+inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    let s = if exp < -5 || exp >= digits as i32 + 3 {
        format!("{:.*e}", digits - 1, x)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn json_number(x: f64, digits: usize) -> Value {
    if x.is_finite() {
        let rounded: f64 = format_number(x, digits).parse().unwrap_or(x);
        json!(rounded)
    } else {
        Value::String(format_number(x, digits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "conic-pricer", version, about = "Good-deal and no-arbitrage pricing on finite event trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Significant digits in reports.
    #[arg(long, default_value_t = 6)]
    pub precision: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file against every market invariant.
    Validate { model: PathBuf },
    /// Good-deal bid and ask at every node of date `t`.
    Price {
        model: PathBuf,
        payoff: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        time: usize,
        #[command(flatten)]
        out: Output,
    },
    /// No-arbitrage bounds at every node of date `t`.
    Bounds {
        model: PathBuf,
        payoff: PathBuf,
        #[arg(long, default_value_t = 0)]
        time: usize,
        #[command(flatten)]
        out: Output,
    },
    /// No-good-deal test at level `γ`, with a certificate when it fails.
    Ngd {
        model: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        time: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Arbitrage search over strategies started at `t`.
    Arbitrage {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        time: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Gain-loss ratio of a discounted cash flow's tail from `t`.
    Dglr {
        model: PathBuf,
        payoff: PathBuf,
        #[arg(long, default_value_t = 0)]
        time: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Good-deal forward prices (deterministic rates only).
    Forward {
        model: PathBuf,
        payoff: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        time: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Good-deal quotes over a γ × λ grid, as CSV.
    Surface {
        model: PathBuf,
        payoff: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        gammas: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        time: usize,
        /// Cell index of the node at date `t`.
        #[arg(long, default_value_t = 0)]
        node: usize,
        #[arg(long, default_value_t = 6)]
        precision: usize,
    },
}

fn check_gamma(gamma: f64) -> Result<(), CliError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(CliError::usage(format!("--gamma must be a positive finite number, got {gamma}")));
    }
    Ok(())
}

fn check_time(model: &MarketModel, t: usize) -> Result<(), CliError> {
    if t >= model.horizon() {
        return Err(CliError::usage(format!("--time must be in 0..{}, got {t}", model.horizon())));
    }
    Ok(())
}

fn load_pair(model: &Path, payoff: &Path) -> Result<(ModelFile, MarketModel, PayoffFile, CashFlow), CliError> {
    let mf = ModelFile::load(model)?;
    let m = mf.build()?;
    let pf = PayoffFile::load(payoff)?;
    let d = pf.build(&m)?;
    Ok((mf, m, pf, d))
}

fn quote_report(quote: &PriceQuote, out: &Output) -> String {
    let p = out.precision;
    match out.format {
        Format::Csv => {
            let mut s = String::from("node,bid,ask,status\n");
            for q in &quote.nodes {
                s += &format!("{},{},{},{}\n", q.node, format_number(q.bid, p), format_number(q.ask, p), q.status);
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = quote.nodes.iter().map(|q| node_json(q, p)).collect();
            let mut v = json!({ "t": quote.t, "nodes": rows });
            if let Some(g) = quote.gamma {
                v["gamma"] = json!(g);
            }
            if let Some(c) = &quote.certificate {
                v["certificate"] = certificate_json(c, p);
            }
            pretty(&v)
        }
    }
}

fn node_json(q: &NodeQuote, p: usize) -> Value {
    json!({
        "node": q.node.to_string(),
        "bid": json_number(q.bid, p),
        "ask": json_number(q.ask, p),
        "status": q.status.as_str(),
    })
}

fn certificate_json(c: &pricing::GoodDealCertificate, p: usize) -> Value {
    json!({
        "node": c.node.to_string(),
        "label": c.label,
        "dglr": json_number(c.dglr, p),
        "cash_flow": c.cash_flow.iter().map(|&x| json_number(x, p)).collect::<Vec<_>>(),
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn cmd_validate(model: &Path) -> Result<String, CliError> {
    let m = ModelFile::load(model)?.build()?;
    Ok(format!(
        "ok: {} paths, horizon {}, {} securit{}\n",
        m.tree().n_paths(),
        m.horizon(),
        m.securities().len(),
        if m.securities().len() == 1 { "y" } else { "ies" }
    ))
}

fn cmd_ngd(model: &Path, gamma: f64, t: usize, out: &Output) -> Result<String, CliError> {
    check_gamma(gamma)?;
    let m = ModelFile::load(model)?.build()?;
    check_time(&m, t)?;
    let outcome = Pricer::new(m.clone())?.ngd_check(t, gamma)?;
    let p = out.precision;
    Ok(match (out.format, &outcome) {
        (Format::Csv, NgdOutcome::Holds { .. }) => format!("t,gamma,status\n{t},{},holds\n", format_number(gamma, p)),
        (Format::Csv, NgdOutcome::Violated { certificate }) => {
            let mut s = String::from("t,gamma,status,node,dglr,certificate\n");
            match certificate {
                Some(c) => s += &format!("{t},{},violated,{},{},{}\n", format_number(gamma, p), c.node, format_number(c.dglr, p), c.label),
                None => s += &format!("{t},{},violated,,,\n", format_number(gamma, p)),
            }
            s
        }
        (Format::Json, NgdOutcome::Holds { density }) => pretty(&json!({
            "t": t, "gamma": gamma, "status": "holds",
            "density": density.iter().map(|&x| json_number(x, p)).collect::<Vec<_>>(),
        })),
        (Format::Json, NgdOutcome::Violated { certificate }) => pretty(&json!({
            "t": t, "gamma": gamma, "status": "violated",
            "certificate": certificate.as_ref().map(|c| certificate_json(c, p)),
        })),
    })
}

fn cmd_arbitrage(model: &Path, t: usize, out: &Output) -> Result<String, CliError> {
    let m = ModelFile::load(model)?.build()?;
    check_time(&m, t)?;
    let witness = cone::arbitrage_check(&m, t)?;
    let p = out.precision;
    Ok(match (out.format, witness) {
        (Format::Csv, None) => format!("t,status\n{t},none\n"),
        (Format::Csv, Some(w)) => {
            let flow: Vec<String> = w.cash_flow.iter().map(|&x| format_number(x, p)).collect();
            format!("t,status,node,cash_flow\n{t},arbitrage,{},{}\n", w.node, flow.join(" "))
        }
        (Format::Json, None) => pretty(&json!({ "t": t, "status": "none" })),
        (Format::Json, Some(w)) => pretty(&json!({
            "t": t, "status": "arbitrage", "node": w.node.to_string(),
            "weights": w.weights.iter().map(|&(k, x)| json!({ "generator": k, "weight": json_number(x, p) })).collect::<Vec<_>>(),
            "cash_flow": w.cash_flow.iter().map(|&x| json_number(x, p)).collect::<Vec<_>>(),
        })),
    })
}

fn cmd_dglr(model: &Path, payoff: &Path, t: usize, out: &Output) -> Result<String, CliError> {
    let (_, m, _, d) = load_pair(model, payoff)?;
    if t > m.horizon() {
        return Err(CliError::usage(format!("--time must be in 0..={}, got {t}", m.horizon())));
    }
    let values = acceptability::dglr_eval(m.tree(), &m.discounted(&d), t);
    let p = out.precision;
    let nodes: Vec<NodeRef> = m.tree().nodes_at(t).collect();
    Ok(match out.format {
        Format::Csv => {
            let mut s = String::from("node,dglr\n");
            for (n, v) in nodes.iter().zip(&values) {
                s += &format!("{n},{}\n", format_number(*v, p));
            }
            s
        }
        Format::Json => pretty(&json!({
            "t": t,
            "nodes": nodes.iter().zip(&values).map(|(n, &v)| json!({ "node": n.to_string(), "dglr": json_number(v, p) })).collect::<Vec<_>>(),
        })),
    })
}

fn cmd_surface(
    model: &Path,
    payoff: &Path,
    gammas: &[f64],
    lambdas: &[f64],
    t: usize,
    cell: usize,
    precision: usize,
) -> Result<String, CliError> {
    if gammas.is_empty() {
        return Err(CliError::usage("--gammas list is empty"));
    }
    if lambdas.is_empty() {
        return Err(CliError::usage("--lambdas list is empty"));
    }
    for &g in gammas {
        check_gamma(g)?;
    }
    if let Some(&l) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(CliError::usage(format!("--lambdas entries must be nonnegative, got {l}")));
    }
    let (mf, m, pf, _) = load_pair(model, payoff)?;
    check_time(&m, t)?;
    let node = NodeRef::new(t, cell);
    if m.tree().check_node(node).is_err() {
        return Err(CliError::usage(format!("--node {cell} does not exist at t={t}")));
    }
    let build = |lambda: f64| {
        mf.build_with(Some(lambda)).map_err(|e| PricingError::Oracle(e.message))
    };
    let pay = |model: &MarketModel| pf.build(model).map_err(|e| PricingError::Oracle(e.message));
    let rows = pricing::liquidity_surface(build, pay, gammas, lambdas, node)?;
    Ok(surface_csv(&rows, precision))
}

pub fn surface_csv(rows: &[SurfacePoint], precision: usize) -> String {
    let mut s = String::from("gamma,lambda,bid,ask,spread,status\n");
    for r in rows {
        s += &format!(
            "{},{},{},{},{},{}\n",
            format_number(r.gamma, precision),
            format_number(r.lambda, precision),
            format_number(r.bid, precision),
            format_number(r.ask, precision),
            format_number(r.spread, precision),
            r.status
        );
    }
    s
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Validate { model } => cmd_validate(model),
        Command::Price { model, payoff, gamma, time, out } => {
            check_gamma(*gamma)?;
            let (_, m, _, d) = load_pair(model, payoff)?;
            check_time(&m, *time)?;
            Ok(quote_report(&Pricer::new(m)?.good_deal_prices(&d, *time, *gamma)?, out))
        }
        Command::Bounds { model, payoff, time, out } => {
            let (_, m, _, d) = load_pair(model, payoff)?;
            check_time(&m, *time)?;
            Ok(quote_report(&Pricer::new(m)?.noarb_bounds(&d, *time)?, out))
        }
        Command::Ngd { model, gamma, time, out } => cmd_ngd(model, *gamma, *time, out),
        Command::Arbitrage { model, time, out } => cmd_arbitrage(model, *time, out),
        Command::Dglr { model, payoff, time, out } => cmd_dglr(model, payoff, *time, out),
        Command::Forward { model, payoff, gamma, time, out } => {
            check_gamma(*gamma)?;
            let (_, m, _, d) = load_pair(model, payoff)?;
            check_time(&m, *time)?;
            Ok(quote_report(&Pricer::new(m)?.forward_prices(&d, *time, *gamma)?, out))
        }
        Command::Surface { model, payoff, gammas, lambdas, time, node, precision } => {
            cmd_surface(model, payoff, gammas, lambdas, *time, *node, *precision)
        }
    }
}

/// Parses `args` (program name first), runs, writes the report or error, returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let _ = stdout.write_all(report.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
