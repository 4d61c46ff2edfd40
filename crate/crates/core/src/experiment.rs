//! Configuration-driven solver experiments: problem setup, scaling
//! estimation, parameter sweeps and reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::chaos::build_basis;
use crate::error::{Error, Result};
use crate::fe::{build_spaces, lift_boundary};
use crate::kle::build_2d_kle_with_mean;
use crate::krylov::{bpcg_solve, estimate_lambda_min, minres_solve, EigEstimate, SolverConfig, DEFAULT_MAX_STEPS};
use crate::mesh::{build_mesh, COARSEST_H};
use crate::multigrid::{MgConfig, MgHierarchy};
use crate::precond::{AtildeInverse, BlockPrecon};
use crate::system::{build_operator, SgfeOperator, SolveReport, VelocityBlock};

pub const MAX_LEVEL: usize = 4;
pub const MAX_K: u32 = 4;
pub const MAX_M: usize = 20;

/// Parameters that determine the discrete system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub level: usize,
    pub m: usize,
    pub k: u32,
    pub sigma_mu: f64,
    pub b1: f64,
    pub b2: f64,
    pub mu0: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            level: 1,
            m: 10,
            k: 1,
            sigma_mu: 0.2,
            b1: 1.0,
            b2: 1.0,
            mu0: 0.0,
        }
    }
}

impl ProblemSpec {
    pub fn h(&self) -> f64 {
        COARSEST_H / (1u64 << self.level) as f64
    }
}

/// A discrete cavity problem with its right-hand side and multigrid.
pub struct Problem {
    pub spec: ProblemSpec,
    pub op: SgfeOperator,
    pub w0: Vec<f64>,
    pub rhs: Vec<f64>,
    pub mg: Arc<MgHierarchy>,
}

impl Problem {
    pub fn build(spec: ProblemSpec, mg: MgConfig) -> Result<Self> {
        let space = Arc::new(build_spaces(build_mesh(spec.level)?));
        let field = build_2d_kle_with_mean(spec.b1, spec.b2, spec.sigma_mu, spec.m, spec.mu0)?;
        let basis = Arc::new(build_basis(spec.m, spec.k)?);
        let op = build_operator(Arc::clone(&space), &field, basis)?;
        let w0 = lift_boundary(&space);
        let rhs = op.build_rhs(&w0);
        let mg = Arc::new(MgHierarchy::new(spec.level, mg)?);
        Ok(Self {
            spec,
            op,
            w0,
            rhs,
            mg,
        })
    }

    pub fn dofs(&self) -> usize {
        self.op.dim()
    }

    pub fn diag_precon(&self) -> Result<BlockPrecon> {
        BlockPrecon::diag(Arc::clone(&self.mg), self.op.dp.clone(), self.op.layout)
    }

    pub fn tri_precon(&self, a: f64) -> Result<BlockPrecon> {
        BlockPrecon::tri(Arc::clone(&self.mg), self.op.dp.clone(), self.op.layout, a)
    }

    /// `lambda_min(A_mg^{-1} A)` for this problem's operators.
    pub fn lambda_min(&self, tol: f64) -> Result<EigEstimate> {
        let prec = self.diag_precon()?;
        let mut est = estimate_lambda_min(&VelocityBlock(&self.op), &AtildeInverse(&prec), tol, DEFAULT_MAX_STEPS)?;
        est.level_used = self.spec.level;
        Ok(est)
    }

    pub fn solve(&self, solver: Solver, a: f64, cfg: &SolverConfig) -> Result<(Vec<f64>, SolveReport)> {
        match solver {
            Solver::Minres => {
                let p = self.diag_precon()?;
                minres_solve(&self.op, &p.inverse(&self.op), &self.rhs, cfg, &self.op)
            }
            Solver::Bpcg => {
                let p = self.tri_precon(a)?;
                bpcg_solve(&self.op, &p, &self.rhs, cfg)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Solver {
    Minres,
    Bpcg,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Minres => "minres",
            Solver::Bpcg => "bpcg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Minres,
    Bpcg,
    Both,
}

impl SolverChoice {
    pub fn solvers(self) -> Vec<Solver> {
        match self {
            SolverChoice::Minres => vec![Solver::Minres],
            SolverChoice::Bpcg => vec![Solver::Bpcg],
            SolverChoice::Both => vec![Solver::Minres, Solver::Bpcg],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    MeshLevel,
    M,
    K,
    SigmaMu,
    AOverAstar,
    Kappa,
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "mesh_level" | "level" | "h" => SweepParam::MeshLevel,
            "M" | "m" => SweepParam::M,
            "k" => SweepParam::K,
            "sigma_mu" | "sigma" => SweepParam::SigmaMu,
            "a_over_astar" => SweepParam::AOverAstar,
            "kappa" | "precon.kappa" => SweepParam::Kappa,
            _ => return Err(Error::Config(format!("unknown sweep parameter `{s}`"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::MeshLevel => "mesh_level",
            SweepParam::M => "M",
            SweepParam::K => "k",
            SweepParam::SigmaMu => "sigma_mu",
            SweepParam::AOverAstar => "a_over_astar",
            SweepParam::Kappa => "kappa",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solver: SolverChoice,
    pub kappa: f64,
    pub a_override: Option<f64>,
    pub a_over_astar: Option<f64>,
    /// Mesh level on which `a*` is estimated.
    pub astar_level: usize,
    pub lanczos_tol: f64,
    pub solver_cfg: SolverConfig,
    pub mg: MgConfig,
    pub sweep: Option<(SweepParam, Vec<f64>)>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            solver: SolverChoice::Both,
            kappa: 0.9,
            a_override: None,
            a_over_astar: None,
            astar_level: 0,
            lanczos_tol: 1e-4,
            solver_cfg: SolverConfig::default(),
            mg: MgConfig::default(),
            sweep: None,
            output: PathBuf::from("out"),
        }
    }
}

const KEYS: &[&str] = &[
    "mesh_level",
    "M",
    "k",
    "sigma_mu",
    "b1",
    "b2",
    "mu0",
    "solver",
    "precon.kind",
    "precon.kappa",
    "precon.a_override",
    "precon.astar_level",
    "a_over_astar",
    "lanczos_tol",
    "tol",
    "max_iter",
    "project_constants",
    "bpcg.allow_indefinite",
    "mg.levels",
    "mg.smooth_sweeps",
    "mg.coarse_cells",
    "sweep.param",
    "sweep.values",
    "output",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("`{key}` must be a number"))),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::Config(format!("`{key}` must be a non-negative integer"))),
    }
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::Config(format!("`{key}` must be a string")))
}

impl ExperimentConfig {
    /// Parses a TOML key-value file. Dotted keys (`precon.kappa = 0.9`) and
    /// tables (`[precon]`) are equivalent.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut cfg = Self::default();
        let mut precon_kind = None;
        let mut sweep_param = None;
        let mut sweep_values = None;
        for (key, v) in &flat {
            let p = &mut cfg.problem;
            match key.as_str() {
                "mesh_level" => p.level = as_usize(key, v)?,
                "M" => p.m = as_usize(key, v)?,
                "k" => p.k = as_usize(key, v)? as u32,
                "sigma_mu" => p.sigma_mu = as_f64(key, v)?,
                "b1" => p.b1 = as_f64(key, v)?,
                "b2" => p.b2 = as_f64(key, v)?,
                "mu0" => p.mu0 = as_f64(key, v)?,
                "solver" => {
                    cfg.solver = match as_str(key, v)? {
                        "minres" => SolverChoice::Minres,
                        "bpcg" => SolverChoice::Bpcg,
                        "both" => SolverChoice::Both,
                        s => return Err(Error::Config(format!("unknown solver `{s}`"))),
                    }
                }
                "precon.kind" => precon_kind = Some(as_str(key, v)?.to_string()),
                "precon.kappa" => cfg.kappa = as_f64(key, v)?,
                "precon.a_override" => cfg.a_override = Some(as_f64(key, v)?),
                "precon.astar_level" => cfg.astar_level = as_usize(key, v)?,
                "a_over_astar" => cfg.a_over_astar = Some(as_f64(key, v)?),
                "lanczos_tol" => cfg.lanczos_tol = as_f64(key, v)?,
                "tol" => cfg.solver_cfg.tol = as_f64(key, v)?,
                "max_iter" => cfg.solver_cfg.max_iter = as_usize(key, v)?,
                "project_constants" => {
                    cfg.solver_cfg.project_pressure_constants = v
                        .as_bool()
                        .ok_or_else(|| Error::Config("`project_constants` must be a boolean".into()))?
                }
                "bpcg.allow_indefinite" => {
                    cfg.solver_cfg.allow_indefinite = v
                        .as_bool()
                        .ok_or_else(|| Error::Config("`bpcg.allow_indefinite` must be a boolean".into()))?
                }
                "mg.levels" => cfg.mg.max_levels = Some(as_usize(key, v)?),
                "mg.smooth_sweeps" => cfg.mg.smooth_sweeps = as_usize(key, v)?,
                "mg.coarse_cells" => cfg.mg.coarse_cells = as_usize(key, v)?,
                "sweep.param" => sweep_param = Some(SweepParam::parse(as_str(key, v)?)?),
                "sweep.values" => {
                    let arr = v
                        .as_array()
                        .ok_or_else(|| Error::Config("`sweep.values` must be an array".into()))?;
                    sweep_values = Some(arr.iter().map(|x| as_f64(key, x)).collect::<Result<Vec<_>>>()?);
                }
                "output" => cfg.output = PathBuf::from(as_str(key, v)?),
                _ => {
                    return Err(Error::Config(format!(
                        "unknown key `{key}` (known: {})",
                        KEYS.join(", ")
                    )))
                }
            }
        }
        if let Some(kind) = precon_kind {
            let implied = match kind.as_str() {
                "diag" => SolverChoice::Minres,
                "tri" => SolverChoice::Bpcg,
                s => return Err(Error::Config(format!("unknown preconditioner `{s}`"))),
            };
            if cfg.solver != implied {
                return Err(Error::Config(format!(
                    "precon.kind = {kind} requires solver = {}",
                    if implied == SolverChoice::Minres { "minres" } else { "bpcg" }
                )));
            }
        }
        cfg.sweep = match (sweep_param, sweep_values) {
            (Some(p), Some(v)) => Some((p, v)),
            (None, None) => None,
            _ => return Err(Error::Config("`sweep.param` and `sweep.values` go together".into())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// The mesh level whose spacing is closest to `h`.
    pub fn level_for_h(h: f64) -> usize {
        (0..=MAX_LEVEL)
            .min_by(|&a, &b| {
                let da = (COARSEST_H / (1u64 << a) as f64 - h).abs();
                let db = (COARSEST_H / (1u64 << b) as f64 - h).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        let bad = |msg: String| Err(Error::Config(msg));
        if p.level > MAX_LEVEL {
            return bad(format!("mesh_level {} exceeds {MAX_LEVEL}", p.level));
        }
        if p.m == 0 || p.m > MAX_M {
            return bad(format!("M = {} outside 1..={MAX_M}", p.m));
        }
        if p.k == 0 || p.k > MAX_K {
            return bad(format!("k = {} outside 1..={MAX_K}", p.k));
        }
        if !(p.sigma_mu >= 0.0) || !(p.b1 > 0.0) || !(p.b2 > 0.0) || !p.mu0.is_finite() {
            return bad("sigma_mu must be >= 0, b1 and b2 > 0, mu0 finite".into());
        }
        if !(self.kappa > 0.0) {
            return bad(format!("kappa = {} must be positive", self.kappa));
        }
        if !(self.solver_cfg.tol > 0.0) || self.solver_cfg.max_iter == 0 {
            return bad("tol must be positive and max_iter at least 1".into());
        }
        if let Some((param, values)) = &self.sweep {
            if values.is_empty() {
                return bad("empty sweep".into());
            }
            for &v in values {
                let mut probe = self.clone();
                probe.sweep = None;
                probe.apply(*param, v)?;
                probe.validate()?;
            }
        }
        Ok(())
    }

    /// Sets the swept parameter to `value`.
    pub fn apply(&mut self, param: SweepParam, value: f64) -> Result<()> {
        let int = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{} needs integer values, got {v}", param.name())))
            }
        };
        match param {
            SweepParam::MeshLevel => self.problem.level = int(value)?,
            SweepParam::M => self.problem.m = int(value)?,
            SweepParam::K => self.problem.k = int(value)? as u32,
            SweepParam::SigmaMu => self.problem.sigma_mu = value,
            SweepParam::AOverAstar => self.a_over_astar = Some(value),
            SweepParam::Kappa => self.kappa = value,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub param: String,
    pub value: f64,
    pub solver: Solver,
    pub level: usize,
    pub h: f64,
    pub m: usize,
    pub k: u32,
    pub sigma_mu: f64,
    pub dofs: usize,
    pub iterations: usize,
    pub converged: bool,
    pub rel_residual: f64,
    pub a_star: Option<f64>,
    pub a: Option<f64>,
    pub wall_time: f64,
    pub error: Option<String>,
    pub history: Vec<f64>,
}

/// Memo of the last built problem and scaling estimate, so sweeps that do
/// not touch the discretization reuse it.
#[derive(Default)]
struct Cache {
    problem: Option<Arc<Problem>>,
    astar: Option<(ProblemSpec, usize, EigEstimate)>,
}

impl Cache {
    fn problem(&mut self, spec: ProblemSpec, mg: MgConfig) -> Result<Arc<Problem>> {
        if let Some(p) = &self.problem {
            if p.spec == spec {
                return Ok(Arc::clone(p));
            }
        }
        self.problem = None;
        let p = Arc::new(Problem::build(spec, mg)?);
        self.problem = Some(Arc::clone(&p));
        Ok(p)
    }

    fn astar(&mut self, spec: ProblemSpec, level: usize, mg: MgConfig, tol: f64) -> Result<EigEstimate> {
        if let Some((s, l, e)) = &self.astar {
            if *s == spec && *l == level {
                return Ok(*e);
            }
        }
        let est = if level == spec.level {
            self.problem(spec, mg)?.lambda_min(tol)?
        } else {
            Problem::build(ProblemSpec { level, ..spec }, mg)?.lambda_min(tol)?
        };
        self.astar = Some((spec, level, est));
        Ok(est)
    }
}

/// One configuration, every requested solver.
fn run_point(cfg: &ExperimentConfig, param: &str, value: f64, cache: &mut Cache) -> Vec<ExperimentRow> {
    let spec = cfg.problem;
    let mut rows = Vec::new();
    let base = |solver| ExperimentRow {
        param: param.to_string(),
        value,
        solver,
        level: spec.level,
        h: spec.h(),
        m: spec.m,
        k: spec.k,
        sigma_mu: spec.sigma_mu,
        dofs: 0,
        iterations: 0,
        converged: false,
        rel_residual: f64::NAN,
        a_star: None,
        a: None,
        wall_time: 0.0,
        error: None,
        history: Vec::new(),
    };
    let problem = match cache.problem(spec, cfg.mg) {
        Ok(p) => p,
        Err(e) => {
            return cfg
                .solver
                .solvers()
                .into_iter()
                .map(|s| ExperimentRow {
                    error: Some(e.to_string()),
                    ..base(s)
                })
                .collect()
        }
    };
    for solver in cfg.solver.solvers() {
        let mut row = ExperimentRow {
            dofs: problem.dofs(),
            ..base(solver)
        };
        let a = match solver {
            Solver::Minres => Ok(1.0),
            Solver::Bpcg => match cfg.a_override {
                Some(a) => Ok(a),
                None => cache
                    .astar(spec, cfg.astar_level.min(spec.level), cfg.mg, cfg.lanczos_tol)
                    .map(|e| {
                        row.a_star = Some(e.lambda_min);
                        cfg.a_over_astar.unwrap_or(cfg.kappa) * e.lambda_min
                    }),
            },
        };
        let result = a.and_then(|a| {
            if solver == Solver::Bpcg {
                row.a = Some(a);
            }
            problem.solve(solver, a, &cfg.solver_cfg)
        });
        match result {
            Ok((_, rep)) => {
                row.iterations = rep.iterations;
                row.converged = rep.converged;
                row.rel_residual = rep.final_residual();
                row.wall_time = rep.wall_time;
                row.history = rep.rel_residuals;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        log::info!(
            "{}={} {}: {} iterations, converged={}",
            param,
            value,
            solver.name(),
            row.iterations,
            row.converged
        );
        rows.push(row);
    }
    rows
}

/// Runs every sweep value (or the single configured point) with every
/// requested solver. Failures are recorded in the rows.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let mut cache = Cache::default();
    let mut rows = Vec::new();
    match &cfg.sweep {
        None => rows.extend(run_point(cfg, "none", 0.0, &mut cache)),
        Some((param, values)) => {
            for &v in values {
                let mut point = cfg.clone();
                point.apply(*param, v)?;
                rows.extend(run_point(&point, param.name(), v, &mut cache));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub param: String,
    pub value: f64,
    pub minres: Option<usize>,
    pub bpcg: Option<usize>,
}

impl ComparisonRow {
    /// `Some(true)` when both converged and BPCG needed no more iterations.
    pub fn bpcg_not_worse(&self) -> Option<bool> {
        Some(self.bpcg? <= self.minres?)
    }
}

/// Side-by-side iteration counts of both solvers on identical systems.
pub fn compare_solvers(cfg: &ExperimentConfig) -> Result<(Vec<ExperimentRow>, Vec<ComparisonRow>)> {
    let mut both = cfg.clone();
    both.solver = SolverChoice::Both;
    let rows = run_sweep(&both)?;
    Ok((rows.clone(), comparison(&rows)))
}

pub fn comparison(rows: &[ExperimentRow]) -> Vec<ComparisonRow> {
    let mut out: Vec<ComparisonRow> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|c| c.param == r.param && c.value == r.value) {
            Some(i) => i,
            None => {
                out.push(ComparisonRow {
                    param: r.param.clone(),
                    value: r.value,
                    minres: None,
                    bpcg: None,
                });
                out.len() - 1
            }
        };
        let count = r.converged.then_some(r.iterations);
        match r.solver {
            Solver::Minres => out[idx].minres = count,
            Solver::Bpcg => out[idx].bpcg = count,
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

const COLUMNS: [&str; 14] = [
    "param",
    "value",
    "solver",
    "level",
    "h",
    "M",
    "k",
    "sigma_mu",
    "dofs",
    "iterations",
    "converged",
    "rel_residual",
    "a_star",
    "a",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

fn cells(r: &ExperimentRow) -> Vec<String> {
    vec![
        r.param.clone(),
        format!("{}", r.value),
        r.solver.name().to_string(),
        r.level.to_string(),
        format!("{}", r.h),
        r.m.to_string(),
        r.k.to_string(),
        format!("{}", r.sigma_mu),
        r.dofs.to_string(),
        r.iterations.to_string(),
        r.converged.to_string(),
        format!("{:.3e}", r.rel_residual),
        opt(r.a_star),
        opt(r.a),
    ]
}

/// Report text. Wall times are left out so that reports are reproducible
/// byte for byte; see [`render_timings`].
pub fn render_report(rows: &[ExperimentRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Input("no rows to report".into()));
    }
    let mut cols: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.push("error".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = cells(r);
            c.push(r.error.clone().unwrap_or_default());
            c
        })
        .collect();
    Ok(match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&cols)?;
            for row in &body {
                w.write_record(row)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Input(e.to_string()))?)
                .expect("csv output is utf-8")
        }
        ReportFormat::Markdown => {
            let mut s = String::new();
            let _ = writeln!(s, "| {} |", cols.join(" | "));
            let _ = writeln!(s, "|{}", "---|".repeat(cols.len()));
            for row in &body {
                let esc: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
                let _ = writeln!(s, "| {} |", esc.join(" | "));
            }
            s
        }
    })
}

pub fn render_timings(rows: &[ExperimentRow]) -> String {
    let mut s = String::from("param,value,solver,wall_time\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:.3}", r.param, r.value, r.solver.name(), r.wall_time);
    }
    s
}

pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let n = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::from("param,value,minres,bpcg,bpcg_le_minres\n");
    for r in rows {
        let flag = r.bpcg_not_worse().map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.param, r.value, n(r.minres), n(r.bpcg), flag);
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the report in the given format to `path`.
pub fn emit_report(rows: &[ExperimentRow], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(rows, format)?;
    write(path, &text)
}

/// Writes `report.csv`, `report.md`, `timings.csv`, per-solve residual
/// histories and, when both solvers ran, `comparison.csv` into `dir`.
pub fn write_outputs(rows: &[ExperimentRow], dir: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir.join("history")).map_err(io)?;
    emit_report(rows, ReportFormat::Csv, &dir.join("report.csv"))?;
    emit_report(rows, ReportFormat::Markdown, &dir.join("report.md"))?;
    write(&dir.join("timings.csv"), &render_timings(rows))?;
    for r in rows {
        let mut s = String::from("iter,rel_resid\n");
        for (i, v) in r.history.iter().enumerate() {
            let _ = writeln!(s, "{i},{v:.12e}");
        }
        let name = format!("{}_{}_{}.csv", r.param, r.value, r.solver.name());
        write(&dir.join("history").join(name), &s)?;
    }
    let cmp = comparison(rows);
    if rows.iter().any(|r| r.solver == Solver::Minres) && rows.iter().any(|r| r.solver == Solver::Bpcg) {
        write(&dir.join("comparison.csv"), &render_comparison(&cmp))?;
    }
    Ok(())
}

/// Solves the configured single point with MINRES and writes the moment
/// fields to `dir/moments.csv`.
pub fn write_moments(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let problem = Problem::build(cfg.problem, cfg.mg)?;
    let (x, rep) = problem.solve(Solver::Minres, 1.0, &cfg.solver_cfg)?;
    if !rep.converged {
        log::warn!("moment solve stopped at residual {:.3e}", rep.final_residual());
    }
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    problem
        .op
        .postprocess_moments(&x, &problem.w0)
        .write_csv(&dir.join("moments.csv"))
}
