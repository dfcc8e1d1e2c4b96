//! The four subcommands as library functions returning printable reports.

use std::path::Path;

use levy_cumulants::bell::{self, BellEvaluator};
use levy_cumulants::mc::{self, SimulationModel, SimulationPlan, MIN_SAMPLES};
use levy_cumulants::multiindex::{enumerate_partitions, MultiIndexPartition};
use levy_cumulants::providers::UnivariateCumulants;
use levy_cumulants::rho_alpha::{self, linear_grid, polynomial_fit_residual, RhoAlphaNigModel, ScanParameter};
use levy_cumulants::{MultiIndex, OrderCap};
use serde::Serialize;

use crate::config::{check_scan_range, OutputFormat, RunConfig};
use crate::format::{number, round_sig};
use crate::CliError;

/// Relative tolerance between independent exact routes.
pub const ORACLE_TOLERANCE: f64 = 1e-10;
/// Relative tolerance for identities that hold term by term.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Absolute tolerance on least-squares residuals of the ρ fits.
pub const FIT_TOLERANCE: f64 = 1e-10;
/// Monte Carlo acceptance band in batch standard errors.
pub const MC_BAND: f64 = 4.0;
/// Highest order compared against simulation.
pub const MC_MAX_ORDER: u32 = 4;
/// Points in the ρ grid used for the polynomial fits.
pub const RHO_FIT_POINTS: usize = 41;
/// Highest marginal order checked against the NIG law.
pub const MARGINAL_MAX_ORDER: u32 = 8;

fn rel_err(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulantReport {
    pub index: MultiIndex,
    pub t: f64,
    pub raw: f64,
    pub normalized: f64,
}

impl CumulantReport {
    pub fn render(&self) -> String {
        format!(
            "index {}\nt {}\nraw {}\nnormalized {}\n",
            self.index,
            number(self.t),
            number(self.raw),
            number(self.normalized)
        )
    }
}

pub fn cmd_cumulant(config: &RunConfig, index: &MultiIndex, t: f64) -> Result<CumulantReport, CliError> {
    let model = config.model()?;
    let raw = model.cumulant(index, t)?;
    let normalized = model.normalized_cumulant(index, t)?;
    Ok(CumulantReport {
        index: index.clone(),
        t,
        raw,
        normalized,
    })
}

/// A fully resolved scan: config scan block with command-line overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRequest {
    pub param: ScanParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub orders: u32,
    pub workers: usize,
}

impl ScanRequest {
    pub fn from_config(config: &RunConfig) -> Result<Self, CliError> {
        let scan = config
            .scan
            .as_ref()
            .ok_or_else(|| CliError::Input("no scan block in config and no --param/--from/--to/--steps".into()))?;
        Ok(ScanRequest {
            param: scan.param.parse()?,
            from: scan.from,
            to: scan.to,
            steps: scan.steps,
            orders: config.orders,
            workers: config.workers(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub param_name: &'static str,
    pub param_value: f64,
    pub t: f64,
    pub i: u32,
    pub j: u32,
    pub raw: f64,
    pub normalized: Option<f64>,
}

/// One row per (grid value, time, cross index), sorted by `(param_value, t, i, j)`.
/// The CSV layout has two index columns, so the model must have two assets.
pub fn cmd_scan(config: &RunConfig, request: &ScanRequest) -> Result<Vec<ScanRow>, CliError> {
    let model = config.model()?;
    if model.dim() != 2 {
        return Err(CliError::Input(format!(
            "scan output has columns i, j and needs a two-asset model, got {}",
            model.dim()
        )));
    }
    OrderCap::default().check(&MultiIndex::new(vec![request.orders]))?;
    check_scan_range(&model, request.param, request.from, request.to)?;
    let grid = linear_grid(request.from, request.to, request.steps)?;
    let points = rho_alpha::scan(&model, request.param, &grid, &config.times, request.orders, request.workers)?;

    let mut rows: Vec<ScanRow> = points
        .iter()
        .flat_map(|p| {
            p.table.entries().iter().map(move |e| ScanRow {
                param_name: request.param.name(),
                param_value: p.value,
                t: e.t,
                i: e.index.components()[0],
                j: e.index.components()[1],
                raw: e.raw,
                normalized: e.normalized,
            })
        })
        .collect();
    rows.sort_by(|x, y| {
        x.param_value
            .total_cmp(&y.param_value)
            .then(x.t.total_cmp(&y.t))
            .then(x.i.cmp(&y.i))
            .then(x.j.cmp(&y.j))
    });
    Ok(rows)
}

pub const CSV_HEADER: &str = "param_name,param_value,t,i,j,raw,normalized";

pub fn render_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.param_name,
            number(r.param_value),
            number(r.t),
            r.i,
            r.j,
            number(r.raw),
            r.normalized.map(number).unwrap_or_default()
        ));
    }
    out
}

/// Same rows as an array of objects, numbers rounded as in the CSV.
pub fn render_json(rows: &[ScanRow]) -> String {
    let rounded: Vec<ScanRow> = rows
        .iter()
        .map(|r| ScanRow {
            param_value: round_sig(r.param_value),
            t: round_sig(r.t),
            raw: round_sig(r.raw),
            normalized: r.normalized.map(round_sig),
            ..r.clone()
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rounded).expect("rows serialize");
    s.push('\n');
    s
}

pub fn render(rows: &[ScanRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub section: &'static str,
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn push(&mut self, section: &'static str, name: impl Into<String>, status: Status, detail: impl Into<String>) {
        self.checks.push(Check {
            section,
            name: name.into(),
            status,
            detail: detail.into(),
        });
    }

    fn compare(&mut self, section: &'static str, name: String, got: f64, want: f64, tol: f64) {
        let err = rel_err(got, want);
        let status = if err <= tol { Status::Pass } else { Status::Fail };
        self.push(
            section,
            name,
            status,
            format!("got {} expected {} rel err {:.2e} tol {tol:e}", number(got), number(want), err),
        );
    }

    /// No check failed; inconclusive checks do not count as failures.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("[{}] {}: {} ({})\n", c.status.label(), c.section, c.name, c.detail));
        }
        out.push_str(&format!(
            "{} passed, {} failed, {} inconclusive\n",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Inconclusive)
        ));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub num_paths: usize,
    pub seed: u64,
    pub workers: usize,
}

impl VerifyOptions {
    pub fn from_config(config: &RunConfig) -> Self {
        VerifyOptions {
            num_paths: config.num_paths,
            seed: config.seed,
            workers: config.workers(),
        }
    }
}

/// Closed forms against series composition and the embedded Bell engine,
/// against simulation, and against structural identities.
pub fn cmd_verify(config: &RunConfig, options: &VerifyOptions) -> Result<VerifyReport, CliError> {
    let model = config.model()?;
    let mut report = VerifyReport::default();
    verify_oracles(&model, config.orders, &mut report)?;
    verify_monte_carlo(&model, config.orders, options, &mut report)?;
    verify_structure(&model, config, &mut report)?;
    Ok(report)
}

fn verify_oracles(model: &RhoAlphaNigModel, orders: u32, report: &mut VerifyReport) -> Result<(), CliError> {
    const SECTION: &str = "oracle";
    let indices = MultiIndex::all_up_to(model.dim(), orders);
    let series = model.cgf_series(orders)?;
    for i in &indices {
        let closed = model.cumulant(i, 1.0)?;
        report.compare(SECTION, format!("closed form vs series {i}"), closed, series.coefficient(i), ORACLE_TOLERANCE);
    }
    match model.as_subordinated_model(orders) {
        Ok(embedded) => {
            let mut engine = BellEvaluator::brownian(&embedded)?;
            for i in &indices {
                let v = engine.cumulant(i)?;
                report.compare(SECTION, format!("Bell engine vs series {i}"), v, series.coefficient(i), ORACLE_TOLERANCE);
            }
        }
        Err(e) => report.push(SECTION, "Bell engine vs series", Status::Inconclusive, e.to_string()),
    }
    Ok(())
}

fn verify_monte_carlo(
    model: &RhoAlphaNigModel,
    orders: u32,
    options: &VerifyOptions,
    report: &mut VerifyReport,
) -> Result<(), CliError> {
    const SECTION: &str = "monte carlo";
    let max_order = orders.min(MC_MAX_ORDER);
    if options.num_paths < MIN_SAMPLES {
        report.push(
            SECTION,
            format!("cumulants up to order {max_order}"),
            Status::Inconclusive,
            format!(
                "{} paths give standard errors too wide to judge; need at least {MIN_SAMPLES}",
                options.num_paths
            ),
        );
        return Ok(());
    }
    let plan = SimulationPlan {
        model: SimulationModel::RhoAlpha(model.clone()),
        t: 1.0,
        num_paths: options.num_paths,
        seed: options.seed,
        num_workers: options.workers,
    };
    let est = mc::run(&plan, max_order)?;
    for i in MultiIndex::all_up_to(model.dim(), max_order) {
        let analytic = model.cumulant(&i, 1.0)?;
        let (e, se) = (est.estimate(&i).unwrap_or(f64::NAN), est.standard_error(&i).unwrap_or(f64::NAN));
        let z = (e - analytic).abs() / se;
        let status = if z <= MC_BAND { Status::Pass } else { Status::Fail };
        report.push(
            SECTION,
            format!("{i} at t = 1"),
            status,
            format!(
                "estimate {} analytic {} se {} ({z:.2} se, band {MC_BAND})",
                number(e),
                number(analytic),
                number(se)
            ),
        );
    }
    Ok(())
}

fn verify_structure(model: &RhoAlphaNigModel, config: &RunConfig, report: &mut VerifyReport) -> Result<(), CliError> {
    const SECTION: &str = "structure";
    let n = model.dim();
    let cross: Vec<MultiIndex> = MultiIndex::all_up_to(n, config.orders)
        .into_iter()
        .filter(|i| i.support_size() >= 2)
        .collect();

    // c̄_i(t) · t^{|i|/2 − 1} does not depend on t
    let t0 = config.times[0];
    for i in &cross {
        let power = i.order() as f64 / 2.0 - 1.0;
        let reference = model.normalized_cumulant(i, t0)? * t0.powf(power);
        let worst = config
            .times
            .iter()
            .map(|&t| model.normalized_cumulant(i, t).map(|v| (v * t.powf(power), rel_err(v * t.powf(power), reference))))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("times is non-empty");
        report.compare(SECTION, format!("time scaling {i}"), worst.0, reference, IDENTITY_TOLERANCE);
    }

    // polynomial in ρ_12 of degree min(i_1, i_2)
    if n == 2 {
        let grid = linear_grid(-1.0, 1.0, RHO_FIT_POINTS)?;
        for i in &cross {
            let ys = grid
                .iter()
                .map(|&r| model.with_rho12(r)?.normalized_cumulant(i, 1.0))
                .collect::<Result<Vec<_>, _>>()?;
            let degree = i.components()[0].min(i.components()[1]) as usize;
            let residual = polynomial_fit_residual(&grid, &ys, degree)?;
            let status = if residual <= FIT_TOLERANCE { Status::Pass } else { Status::Fail };
            report.push(
                SECTION,
                format!("degree-{degree} fit in rho {i}"),
                status,
                format!("max residual {residual:.2e} tol {FIT_TOLERANCE:e}"),
            );
        }
    } else {
        report.push(SECTION, "fit in rho", Status::Inconclusive, "defined for two assets");
    }

    // each marginal is NIG with clock IG(1, α_j^{-1/2})
    for j in 0..n {
        let clock = UnivariateCumulants::inverse_gaussian(1.0, model.clock_rate(j))?;
        let s2 = model.sigma(j).powi(2);
        for k in 1..=MARGINAL_MAX_ORDER {
            let i = MultiIndex::unit(n, j).scaled(k);
            let nig = bell::cumulant_univariate(model.mu(j), s2, &clock, k)?;
            report.compare(SECTION, format!("marginal NIG {i}"), model.cumulant(&i, 1.0)?, nig, IDENTITY_TOLERANCE);
        }
    }

    // mixed cumulants are proportional to a
    let half = model.with_a(model.a() / 2.0)?;
    for i in &cross {
        let ratio = model.cumulant(i, 1.0)? / half.cumulant(i, 1.0)?;
        report.compare(SECTION, format!("linear in a {i}"), ratio, 2.0, IDENTITY_TOLERANCE);
    }
    Ok(())
}

/// Every multi-index partition of `index` with its set-partition count.
pub fn cmd_partitions(index: &MultiIndex) -> Result<String, CliError> {
    let parts = enumerate_partitions(index, OrderCap::default())?;
    let p2 = parts.iter().filter(|p| p.max_column_order() <= 2).count();
    let mut out = format!("partitions of {index}: {} ({p2} with columns of order at most 2)\n", parts.len());
    for p in &parts {
        out.push_str(&describe(p));
    }
    Ok(out)
}

fn describe(p: &MultiIndexPartition) -> String {
    format!(
        "{p} length={} count={}{}\n",
        p.length(),
        p.set_partition_count(),
        if p.max_column_order() <= 2 { " P2" } else { "" }
    )
}
