//! Grid-sweep experiment driver and report emission.
//!
//! A [`RunConfig`] — parsed from a flat `key = value` file and/or CLI flags —
//! names the problem (builtin sine benchmark or inline expressions), the grid
//! sequence, solver controls and output format. [`run_experiment`] solves and
//! certifies each grid in order and [`emit`] renders the rows as CSV, JSON or
//! a text table, with every number rounded to six significant digits so the
//! emitted files round-trip exactly.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::active_set::{solve_constrained, ActiveSetError};
use crate::estimator::{evaluate_bounds, BoundsReport, EstimatorError};
use crate::expr;
use crate::flux::reconstruct_flux;
use crate::linalg::{SolveError, Stopping};
use crate::mesh::{build_uniform_mesh, MeshError};
use crate::problem::{ControlBounds, Diffusion, ProblemSpec};
use crate::saddle::solve_unconstrained;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("config expression `{key}`: {err}")]
    Expr { key: String, err: expr::ParseError },
    #[error("grid {grid}: {source}")]
    Mesh {
        grid: usize,
        #[source]
        source: MeshError,
    },
    #[error("grid {grid}: {source}")]
    Solve {
        grid: usize,
        #[source]
        source: SolveError,
    },
    #[error("grid {grid}: {source}")]
    ActiveSet {
        grid: usize,
        #[source]
        source: ActiveSetError,
    },
    #[error("grid {grid}: {source}")]
    Estimator {
        grid: usize,
        #[source]
        source: EstimatorError,
    },
    #[error("problem data: {0}")]
    Problem(#[from] crate::problem::ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

impl OutputFormat {
    pub fn from_id(id: &str) -> Result<Self, ExperimentError> {
        match id {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "table" | "text-table" | "text" => Ok(OutputFormat::Table),
            other => Err(ExperimentError::Config(format!(
                "unknown output format `{other}` (csv, json, table)"
            ))),
        }
    }
}

/// Inline analytic problem data, kept as expression strings so configs
/// round-trip textually.
#[derive(Debug, Clone, Default)]
pub struct CustomProblem {
    pub source: Option<String>,
    pub desired_state: Option<String>,
    pub desired_control: Option<String>,
    pub nu: Option<String>,
    pub nu_lower: Option<f64>,
    pub nu_upper: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grids: Vec<usize>,
    pub lambda: f64,
    /// `sine` (builtin benchmark) or `custom` (inline expressions).
    pub preset: String,
    pub custom: CustomProblem,
    pub constrained: bool,
    /// Bound expressions; required when `constrained` is set.
    pub ua: Option<String>,
    pub ub: Option<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub ref_factor: usize,
    /// Paper-comparison mode: stop MINRES after exactly this many steps.
    pub fixed_iters: Option<usize>,
    pub out: String,
    pub format: OutputFormat,
    /// When off, wall-clock columns are reported as zero so that repeated
    /// runs emit byte-identical files.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grids: vec![8, 16, 32, 64, 128, 256],
            lambda: 0.01,
            preset: "sine".to_string(),
            custom: CustomProblem::default(),
            constrained: false,
            ua: None,
            ub: None,
            tol: 1e-10,
            max_iter: 500,
            ref_factor: 4,
            fixed_iters: None,
            out: "-".to_string(),
            format: OutputFormat::Csv,
            timing: true,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` setting; config files and CLI flags share
    /// this path so they cannot drift apart.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let bad = |what: &str| ExperimentError::Config(format!("invalid {what}: `{value}`"));
        match key {
            "grids" => {
                let mut grids = Vec::new();
                for part in value.split(',') {
                    let g: usize = part.trim().parse().map_err(|_| bad("grid list"))?;
                    if g == 0 {
                        return Err(bad("grid list"));
                    }
                    grids.push(g);
                }
                let sorted = grids.windows(2).all(|w| w[0] < w[1]);
                if !sorted {
                    return Err(ExperimentError::Config(
                        "grids must be strictly increasing".to_string(),
                    ));
                }
                self.grids = grids;
            }
            "lambda" => {
                self.lambda = value.parse().map_err(|_| bad("lambda"))?;
                if self.lambda <= 0.0 {
                    return Err(bad("lambda"));
                }
            }
            "preset" => match value {
                "sine" | "custom" => self.preset = value.to_string(),
                _ => return Err(bad("preset")),
            },
            "constrained" => self.constrained = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "ua" => self.ua = Some(value.to_string()),
            "ub" => self.ub = Some(value.to_string()),
            "tol" => {
                self.tol = value.parse().map_err(|_| bad("tolerance"))?;
                if self.tol <= 0.0 {
                    return Err(bad("tolerance"));
                }
            }
            "max_iter" => self.max_iter = value.parse().map_err(|_| bad("max_iter"))?,
            "ref_factor" => {
                self.ref_factor = value.parse().map_err(|_| bad("ref_factor"))?;
                if self.ref_factor < 2 {
                    return Err(bad("ref_factor"));
                }
            }
            "fixed_iters" => self.fixed_iters = Some(value.parse().map_err(|_| bad("fixed_iters"))?),
            "out" => self.out = value.to_string(),
            "format" => self.format = OutputFormat::from_id(value)?,
            "timing" => self.timing = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "f" => self.custom.source = Some(value.to_string()),
            "y_d" => self.custom.desired_state = Some(value.to_string()),
            "u_d" => self.custom.desired_control = Some(value.to_string()),
            "nu" => self.custom.nu = Some(value.to_string()),
            "nu_lower" => self.custom.nu_lower = Some(value.parse().map_err(|_| bad("nu_lower"))?),
            "nu_upper" => self.custom.nu_upper = Some(value.parse().map_err(|_| bad("nu_upper"))?),
            other => {
                return Err(ExperimentError::Config(format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }

    /// Parses a flat config document: `key = value` lines, `#` comments.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ExperimentError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ExperimentError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn parse_expr(&self, key: &str, text: &str) -> Result<expr::Expr, ExperimentError> {
        expr::parse(text).map_err(|err| ExperimentError::Expr {
            key: key.to_string(),
            err,
        })
    }

    /// Materializes the problem data this config describes.
    pub fn build_spec(&self) -> Result<ProblemSpec, ExperimentError> {
        let mut spec = match self.preset.as_str() {
            "sine" => ProblemSpec::sine_preset(self.lambda),
            _ => {
                let f = self
                    .parse_expr("f", self.custom.source.as_deref().unwrap_or("0"))?
                    .into_fn();
                let y_d = self
                    .parse_expr("y_d", self.custom.desired_state.as_deref().unwrap_or("0"))?
                    .into_fn();
                let u_d = self
                    .parse_expr("u_d", self.custom.desired_control.as_deref().unwrap_or("0"))?
                    .into_fn();
                let nu = match self.custom.nu.as_deref() {
                    None => Diffusion::Constant(1.0),
                    Some(text) => {
                        let e = self.parse_expr("nu", text)?;
                        if let expr::Expr::Const(c) = e {
                            Diffusion::Constant(c)
                        } else {
                            let (lower, upper) =
                                match (self.custom.nu_lower, self.custom.nu_upper) {
                                    (Some(l), Some(u)) => (l, u),
                                    _ => {
                                        return Err(ExperimentError::Config(
                                            "varying nu needs nu_lower and nu_upper".to_string(),
                                        ))
                                    }
                                };
                            Diffusion::Varying {
                                value: e.into_fn(),
                                lower,
                                upper,
                            }
                        }
                    }
                };
                ProblemSpec {
                    nu,
                    lambda: self.lambda,
                    source: f,
                    desired_state: y_d,
                    desired_control: u_d,
                    bounds: None,
                    friedrichs: crate::problem::UNIT_SQUARE_FRIEDRICHS,
                    exact: None,
                }
            }
        };
        if self.constrained {
            let ua = self.parse_expr(
                "ua",
                self.ua.as_deref().ok_or_else(|| {
                    ExperimentError::Config("constrained run needs `ua`".to_string())
                })?,
            )?;
            let ub = self.parse_expr(
                "ub",
                self.ub.as_deref().ok_or_else(|| {
                    ExperimentError::Config("constrained run needs `ub`".to_string())
                })?,
            )?;
            spec.bounds = Some(ControlBounds {
                lower: ua.into_fn(),
                upper: ub.into_fn(),
            });
            spec.exact = None;
        }
        Ok(spec)
    }

    fn stopping(&self) -> Stopping {
        match self.fixed_iters {
            Some(k) => Stopping::FixedIters(k),
            None => Stopping::RelTol {
                tol: self.tol,
                max_iter: self.max_iter,
            },
        }
    }
}

fn parse_bool(value: &str) -> Option<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Some(true),
        "false" | "off" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// One certified grid of an experiment run.
#[derive(Debug, Clone)]
pub struct GridReport {
    pub grid: usize,
    pub bounds: BoundsReport,
    pub minres_iters: usize,
    pub wall_seconds: f64,
}

/// Solves and certifies every grid of the configuration, in order.
pub fn run_experiment(config: &RunConfig) -> Result<Vec<GridReport>, ExperimentError> {
    let spec = config.build_spec()?;
    if let Some(&first) = config.grids.first() {
        let probe = build_uniform_mesh(first).map_err(|source| ExperimentError::Mesh {
            grid: first,
            source,
        })?;
        spec.validate(&probe)?;
    }
    let mut reports = Vec::with_capacity(config.grids.len());
    for &grid in &config.grids {
        let start = Instant::now();
        let mesh = Arc::new(build_uniform_mesh(grid).map_err(|source| ExperimentError::Mesh {
            grid,
            source,
        })?);
        let (y, p, minres_iters) = if spec.bounds.is_some() {
            let sol = solve_constrained(&mesh, &spec, config.stopping(), 50)
                .map_err(|source| ExperimentError::ActiveSet { grid, source })?;
            (sol.y, sol.p, sol.minres_iterations)
        } else {
            let (y, p, sol) = solve_unconstrained(&mesh, &spec, config.stopping())
                .map_err(|source| ExperimentError::Solve { grid, source })?;
            (y, p, sol.iterations)
        };
        let tau = reconstruct_flux(&y, &spec);
        let rho = reconstruct_flux(&p, &spec);
        let ref_factor = spec.exact.as_ref().map(|_| config.ref_factor);
        let bounds = evaluate_bounds(&mesh, &spec, &y, &p, &tau, &rho, ref_factor)
            .map_err(|source| ExperimentError::Estimator { grid, source })?;
        let wall_seconds = if config.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        reports.push(GridReport {
            grid,
            bounds,
            minres_iters,
            wall_seconds,
        });
    }
    Ok(reports)
}

/// Guaranteed inequalities every run must satisfy; violations make the CLI
/// exit nonzero.
pub fn self_check(reports: &[GridReport]) -> Vec<String> {
    let mut violations = Vec::new();
    for r in reports {
        if !(r.bounds.j_minus <= r.bounds.j_plus) {
            violations.push(format!(
                "grid {}: J_minus = {} exceeds J_plus = {}",
                r.grid, r.bounds.j_minus, r.bounds.j_plus
            ));
        }
        if !(r.bounds.m_plus >= 0.0) {
            violations.push(format!(
                "grid {}: error majorant M_plus = {} is negative",
                r.grid, r.bounds.m_plus
            ));
        }
    }
    violations
}

/// Rounds to six significant decimal digits; such values round-trip exactly
/// through text.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap()
}

/// `%g`-style rendering of a six-significant-digit value.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let r = round_sig6(x);
    if r == 0.0 {
        return "0".to_string();
    }
    let mag = r.abs().log10().floor() as i32;
    if (-5..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let mut s = format!("{r:.decimals$}");
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        format!("{r:.5e}")
    }
}

/// Flat emission row mirroring the CSV columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub grid: usize,
    #[serde(rename = "J_minus")]
    pub j_minus: f64,
    #[serde(rename = "J_plus")]
    pub j_plus: f64,
    #[serde(rename = "I_plus")]
    pub i_plus: Option<f64>,
    #[serde(rename = "I_minus")]
    pub i_minus: Option<f64>,
    #[serde(rename = "I_two_sided")]
    pub i_two_sided: Option<f64>,
    #[serde(rename = "I_M1")]
    pub i_m1: Option<f64>,
    #[serde(rename = "R1_eta")]
    pub r1_eta: f64,
    #[serde(rename = "R1_zeta")]
    pub r1_zeta: f64,
    #[serde(rename = "R2_eta")]
    pub r2_eta: f64,
    #[serde(rename = "R2_zeta")]
    pub r2_zeta: f64,
    #[serde(rename = "R3_eta")]
    pub r3_eta: f64,
    #[serde(rename = "R3_zeta")]
    pub r3_zeta: f64,
    #[serde(rename = "R4")]
    pub r4: f64,
    #[serde(rename = "R5")]
    pub r5: f64,
    pub alpha: f64,
    pub beta: f64,
    pub minres_iters: usize,
    pub wall_seconds: f64,
}

pub const CSV_COLUMNS: &str = "grid,J_minus,J_plus,I_plus,I_minus,I_two_sided,I_M1,R1_eta,R1_zeta,R2_eta,R2_zeta,R3_eta,R3_zeta,R4,R5,alpha,beta,minres_iters,wall_seconds";

impl ReportRow {
    pub fn from_report(r: &GridReport) -> Self {
        let b = &r.bounds;
        ReportRow {
            grid: r.grid,
            j_minus: round_sig6(b.j_minus),
            j_plus: round_sig6(b.j_plus),
            i_plus: b.i_plus.map(round_sig6),
            i_minus: b.i_minus.map(round_sig6),
            i_two_sided: b.i_two_sided.map(round_sig6),
            i_m1: b.i_m1.map(round_sig6),
            r1_eta: round_sig6(b.r1_eta),
            r1_zeta: round_sig6(b.r1_zeta),
            r2_eta: round_sig6(b.r2_eta),
            r2_zeta: round_sig6(b.r2_zeta),
            r3_eta: round_sig6(b.r3_eta),
            r3_zeta: round_sig6(b.r3_zeta),
            r4: round_sig6(b.r4),
            r5: round_sig6(b.r5),
            alpha: round_sig6(b.alpha),
            beta: round_sig6(b.beta),
            minres_iters: r.minres_iters,
            wall_seconds: round_sig6(r.wall_seconds),
        }
    }

    fn cells(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_sig6).unwrap_or_else(|| "nan".to_string());
        vec![
            self.grid.to_string(),
            fmt_sig6(self.j_minus),
            fmt_sig6(self.j_plus),
            opt(self.i_plus),
            opt(self.i_minus),
            opt(self.i_two_sided),
            opt(self.i_m1),
            fmt_sig6(self.r1_eta),
            fmt_sig6(self.r1_zeta),
            fmt_sig6(self.r2_eta),
            fmt_sig6(self.r2_zeta),
            fmt_sig6(self.r3_eta),
            fmt_sig6(self.r3_zeta),
            fmt_sig6(self.r4),
            fmt_sig6(self.r5),
            fmt_sig6(self.alpha),
            fmt_sig6(self.beta),
            self.minres_iters.to_string(),
            fmt_sig6(self.wall_seconds),
        ]
    }
}

pub fn to_rows(reports: &[GridReport]) -> Vec<ReportRow> {
    reports.iter().map(ReportRow::from_report).collect()
}

pub fn to_csv(reports: &[GridReport]) -> String {
    let mut out = String::from(CSV_COLUMNS);
    out.push('\n');
    for row in to_rows(reports) {
        out.push_str(&row.cells().join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(reports: &[GridReport]) -> String {
    let rows = to_rows(reports);
    let mut s = serde_json::to_string_pretty(&rows).expect("report serialization");
    s.push('\n');
    s
}

/// Renders rows as an aligned, human-readable table.
pub fn rows_to_table(rows: &[ReportRow]) -> String {
    let headers: Vec<&str> = CSV_COLUMNS.split(',').collect();
    let mut cells: Vec<Vec<String>> = vec![headers.iter().map(|s| s.to_string()).collect()];
    for row in rows {
        cells.push(row.cells());
    }
    let cols = headers.len();
    let mut width = vec![0usize; cols];
    for row in &cells {
        for (c, cell) in row.iter().enumerate() {
            width[c] = width[c].max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{:>w$}", cell, w = width[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total: usize = width.iter().sum::<usize>() + 2 * (cols - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

pub fn to_table(reports: &[GridReport]) -> String {
    rows_to_table(&to_rows(reports))
}

/// Emits reports in the requested format.
pub fn emit(reports: &[GridReport], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(reports),
        OutputFormat::Json => to_json(reports),
        OutputFormat::Table => to_table(reports),
    }
}

/// Fast structural invariants on tiny meshes; backs the CLI `check`
/// subcommand. Returns human-readable failure descriptions.
pub fn quick_check() -> Vec<String> {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let mesh = match build_uniform_mesh(4) {
        Ok(m) => Arc::new(m),
        Err(e) => {
            failures.push(format!("mesh construction failed: {e}"));
            return failures;
        }
    };
    check("vertex count", mesh.num_vertices() == 25);
    check("triangle count", mesh.num_triangles() == 32);
    check(
        "edge count (Euler)",
        mesh.num_edges() == mesh.num_vertices() + mesh.num_triangles() - 1,
    );
    let total_area: f64 = (0..mesh.num_triangles())
        .map(|t| mesh.triangle_area(t))
        .sum();
    check("total area", (total_area - 1.0).abs() < 1e-13);

    let spec = ProblemSpec::sine_preset(0.01);
    let mass = crate::assembly::assemble_mass(&mesh);
    let total_mass: f64 = (0..mass.dim()).map(|r| mass.row_sum(r)).sum();
    check("mass matrix total", (total_mass - 1.0).abs() < 1e-13);
    let stiff = crate::assembly::assemble_stiffness(&mesh, &spec);
    let kernel_defect = (0..stiff.dim())
        .map(|r| stiff.row_sum(r).abs())
        .fold(0.0f64, f64::max);
    check("stiffness kernel", kernel_defect < 1e-12);

    let config = RunConfig {
        grids: vec![8],
        ..Default::default()
    };
    match run_experiment(&config) {
        Ok(reports) => {
            let cost = ProblemSpec::sine_preset(0.01).exact.unwrap().cost;
            let b = &reports[0].bounds;
            check("two-sided bound", b.j_minus <= b.j_plus);
            check("cost sandwich", b.j_minus <= cost && cost <= b.j_plus);
            check("error majorant sign", b.m_plus >= 0.0);
            check("error majorant ordering", b.m_plus_1 >= b.m_plus);
            if let (Some(n), Some(n1)) = (b.combined_norm_sq, b.combined_norm_h1_sq) {
                check("combined norm bound", b.m_plus >= n);
                check("combined H1 norm bound", b.m_plus_1 >= n1);
            } else {
                check("combined norms present", false);
            }
        }
        Err(e) => failures.push(format!("benchmark run failed: {e}")),
    }
    failures
}
