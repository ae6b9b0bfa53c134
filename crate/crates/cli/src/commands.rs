//! Subcommands. Each writes its report files into an output directory and
//! returns the process exit code: 0 on pass, 2 on a violated check.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use greenbound::domain::exhaustion_chain;
use greenbound::estimates::{verify_sandwich, verify_supersolution, EstimateRecord};
use greenbound::f64::{EstimateReport, EstimateSummary, Field, Grid, GreenSystem, PhiTransform};
use greenbound::green::{green_limit_check, restriction_identity_check};
use greenbound::nonlinearity::FamilyTag;
use greenbound::phi_transform::phi_closed_form;
use greenbound::semilinear::{pde_residual_field, solve_dirichlet};
use greenbound::{Error, FieldRole};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{float, node_header, node_prefix, write_json, Table};

pub const SOLUTION_CSV: &str = "solution.csv";
pub const SOLVE_SUMMARY_JSON: &str = "solve_summary.json";
pub const SANDWICH_CSV: &str = "sandwich.csv";
pub const SUPERSOLUTION_CSV: &str = "supersolution.csv";
pub const BOUNDS_SUMMARY_JSON: &str = "bounds_summary.json";
pub const PHI_TABLE_CSV: &str = "phi_table.csv";
pub const SELFTEST_JSON: &str = "green_selftest.json";
pub const SWEEP_SUMMARY_JSON: &str = "sweep_summary.json";

#[derive(Serialize)]
struct SolveSummary {
    family: FamilyTag,
    c: f64,
    nodes: usize,
    converged: bool,
    iterations: usize,
    fixed_point_residual: f64,
    pde_residual: f64,
    relaxation: f64,
}

pub fn run_solve(cfg: &ExperimentConfig, out: &Path) -> Result<u8> {
    let grid = cfg.grid()?;
    let sys = cfg.system(&grid)?;
    let psi = cfg.psi()?;
    let (xi, f, g) = cfg.data(&grid)?;
    let r = solve_dirichlet(&sys, &xi, &psi, &f, &g, &cfg.solve_config()?)?;
    let local = pde_residual_field(&sys, &r.u, &xi, &psi, &g)?;

    let mut table = Table::new(node_header(&grid, &["u", "s", "residual_local"]))?;
    for n in 0..grid.len() {
        let mut row = node_prefix(&grid, n);
        row.extend([float(r.u.get(n)), float(r.datum.get(n)), float(local.get(n))]);
        table.row(&row)?;
    }
    table.save(&out.join(SOLUTION_CSV))?;
    let pde_residual = local.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    write_json(
        &out.join(SOLVE_SUMMARY_JSON),
        &SolveSummary {
            family: psi.tag(),
            c: psi.c(),
            nodes: grid.len(),
            converged: r.converged,
            iterations: r.iterations,
            fixed_point_residual: r.residual,
            pde_residual,
            relaxation: r.relaxation,
        },
    )?;
    println!(
        "solve: converged={} iterations={} residual={:e} pde_residual={pde_residual:e}",
        r.converged, r.iterations, r.residual
    );
    Ok(if r.converged { 0 } else { 2 })
}

#[derive(Serialize)]
struct BoundsSummary {
    passed: bool,
    sandwich: EstimateSummary,
    supersolution: Option<EstimateSummary>,
    supersolution_skipped: Option<String>,
}

fn bounds_table(grid: &Grid, records: &[EstimateRecord<f64>], path: &Path) -> Result<()> {
    let mut table = Table::new(node_header(
        grid,
        &["u", "reference", "lower", "slack_lower", "slack_upper"],
    ))?;
    for r in records {
        let mut row = node_prefix(grid, r.node);
        row.extend([
            float(r.u),
            float(r.reference),
            float(r.lower_bound),
            float(r.slack_lower),
            float(r.slack_upper),
        ]);
        table.row(&row)?;
    }
    table.save(path)
}

fn supersolution_report(
    cfg: &ExperimentConfig,
    sys: &GreenSystem,
    tr: &PhiTransform,
    (xi, f, g): (&Field, &Field, &Field),
) -> Result<std::result::Result<EstimateReport, String>> {
    let grid = sys.grid();
    if grid.interior().iter().all(|&n| g.get(n) == 0.0) {
        return Ok(Err("g vanishes on the interior, so G_D g has no positive lower bound".into()));
    }
    let scale = cfg.bounds.supersolution_scale;
    if !(scale >= 1.0 && scale.is_finite()) {
        return Err(CliError::config(
            "bounds.supersolution_scale",
            format!("must be at least 1, got {scale}"),
        ));
    }
    let psi = tr.spec();
    let u = solve_dirichlet(sys, xi, psi, f, &g.scaled(scale), &cfg.solve_config()?)?.certified()?;
    Ok(Ok(verify_supersolution(sys, xi, psi, tr, g, &u.u)?))
}

pub fn run_verify_bounds(cfg: &ExperimentConfig, out: &Path) -> Result<u8> {
    let grid = cfg.grid()?;
    let sys = cfg.system(&grid)?;
    let psi = cfg.psi()?;
    let tr = PhiTransform::numeric(psi.clone())?;
    let (xi, f, g) = cfg.data(&grid)?;
    let sandwich = verify_sandwich(&sys, &xi, &psi, &tr, &f, &g, &cfg.solve_config()?)?;
    bounds_table(&grid, &sandwich.records, &out.join(SANDWICH_CSV))?;
    let superso = supersolution_report(cfg, &sys, &tr, (&xi, &f, &g))?;
    if let Ok(r) = &superso {
        bounds_table(&grid, &r.records, &out.join(SUPERSOLUTION_CSV))?;
    }
    let passed = sandwich.passed()
        && match &superso {
            Ok(r) => r.passed(),
            Err(_) => true,
        };
    let summary = BoundsSummary {
        passed,
        sandwich: sandwich.summary,
        supersolution: superso.as_ref().ok().map(|r| r.summary.clone()),
        supersolution_skipped: superso.err(),
    };
    write_json(&out.join(BOUNDS_SUMMARY_JSON), &summary)?;
    println!(
        "verify-bounds: sandwich violations={} min_slack_lower={:e}",
        summary.sandwich.violated_node_count, summary.sandwich.min_slack_lower
    );
    match &summary.supersolution {
        Some(s) => println!(
            "verify-bounds: supersolution violations={} min_slack_lower={:e}",
            s.violated_node_count, s.min_slack_lower
        ),
        None => println!("verify-bounds: supersolution check skipped"),
    }
    Ok(if passed { 0 } else { 2 })
}

/// `t` runs over `[0, t_max]`; `theta` is left empty outside `(0, 1]` and
/// `phi_closed_form` for families without a closed form.
pub fn run_phi_table(cfg: &ExperimentConfig, out: &Path) -> Result<u8> {
    let psi = cfg.psi()?;
    let tr = PhiTransform::numeric(psi.clone())?;
    let pt = cfg.phi_table;
    if !(pt.t_max >= 0.0 && pt.t_max.is_finite()) {
        return Err(CliError::config("phi_table.t_max", format!("must be finite and >= 0, got {}", pt.t_max)));
    }
    if pt.samples == 0 {
        return Err(CliError::config("phi_table.samples", "must be positive"));
    }
    let mut table = Table::new(["t", "theta", "phi", "phi_closed_form"])?;
    for k in 0..pt.samples {
        let t = if pt.samples == 1 {
            0.0
        } else {
            pt.t_max * k as f64 / (pt.samples - 1) as f64
        };
        let theta = if t > 0.0 && t <= 1.0 {
            float(tr.theta(t)?)
        } else {
            String::new()
        };
        let closed = match phi_closed_form(&psi, t) {
            Ok(v) => float(v),
            Err(Error::UnsupportedFamily(_)) => String::new(),
            Err(e) => return Err(e.into()),
        };
        table.row(&[float(t), theta, float(tr.phi(t)?), closed])?;
    }
    table.save(&out.join(PHI_TABLE_CSV))?;
    println!("phi-table: {} rows, ell={}", pt.samples, tr.ell());
    Ok(0)
}

#[derive(Serialize)]
struct Check {
    max_error: Option<f64>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

impl Check {
    fn measured(max_error: f64, tol: f64) -> Self {
        Self {
            max_error: Some(max_error),
            pass: max_error <= tol,
            note: None,
        }
    }
}

/// Interior node of `grid` closest to the centroid of its interior.
fn central_node(grid: &Grid) -> usize {
    let interior = grid.interior();
    let m = interior.len() as f64;
    let c = interior.iter().fold([0.0, 0.0], |acc, &n| {
        let x = grid.coords(n);
        [acc[0] + x[0] / m, acc[1] + x[1] / m]
    });
    let dist = |n: usize| {
        let x = grid.coords(n);
        (x[0] - c[0]).hypot(x[1] - c[1])
    };
    *interior
        .iter()
        .min_by(|&&a, &&b| dist(a).total_cmp(&dist(b)))
        .expect("grids have interior nodes")
}

/// Restriction identity, exhaustion monotonicity, symmetry, positivity and
/// harmonicity of Green columns on the configured grid and operator.
pub fn run_green_selftest(cfg: &ExperimentConfig, out: &Path) -> Result<u8> {
    let grid = cfg.grid()?;
    let op = cfg.operator()?;
    let sys = cfg.system(&grid)?;
    let st = cfg.selftest;
    if st.levels < 2 {
        return Err(CliError::config("selftest.levels", "need at least 2 levels"));
    }
    let chain = exhaustion_chain(&grid, st.levels)
        .map_err(|e| CliError::config("selftest.levels", e.to_string()))?;
    let coarsest = &chain.levels()[0];
    let y_site = coarsest.site(central_node(coarsest));
    let y = grid.node_at(y_site).expect("chain levels are nested");
    let mut checks = BTreeMap::new();

    let col_y = sys.green_matrix_column(y)?;
    let scale = col_y.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let small = GreenSystem::with_solver(coarsest, &op, cfg.solver.linear)?;
    let err = restriction_identity_check(&small, &sys, y_site)?;
    checks.insert("restriction", Check::measured(err, 1e-10 * scale));

    let limit = green_limit_check(&chain, &op, y_site, y_site)?;
    checks.insert(
        "exhaustion_limit",
        Check {
            max_error: Some(limit.max_decrease.max(0.0)),
            pass: limit.is_monotone(1e-12 * scale),
            note: None,
        },
    );

    let interior = grid.interior();
    let k = st.columns.clamp(1, interior.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picks = rand::seq::index::sample(&mut rng, interior.len(), k).into_vec();
    picks.sort_unstable();
    let ys: Vec<usize> = picks.into_iter().map(|i| interior[i]).collect();
    let cols = ys
        .iter()
        .map(|&y| sys.green_matrix_column(y))
        .collect::<greenbound::Result<Vec<_>>>()?;
    let gmax = cols
        .iter()
        .flat_map(|c| c.values())
        .fold(scale, |m, v| m.max(v.abs()));

    let negative = cols
        .iter()
        .flat_map(|c| c.values())
        .fold(0.0f64, |m, v| m.max(-v));
    checks.insert("positivity", Check::measured(negative, 1e-12 * gmax));

    if op.is_self_adjoint() {
        let mut asym = 0.0f64;
        for (i, ci) in cols.iter().enumerate() {
            for (j, cj) in cols.iter().enumerate() {
                asym = asym.max((ci.get(ys[j]) - cj.get(ys[i])).abs());
            }
        }
        checks.insert("symmetry", Check::measured(asym, 1e-10 * gmax));
    } else {
        checks.insert(
            "symmetry",
            Check {
                max_error: None,
                pass: true,
                note: Some("operator is not self-adjoint; symmetry is not expected".into()),
            },
        );
    }

    let mut delta = Field::zeros(&grid, FieldRole::Source);
    delta.values_mut()[y] = 1.0 / grid.weight();
    let diag = sys
        .interior_matrix()
        .diagonal()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let harm = sys.harmonicity_off_support_check(&delta)? / (diag * scale);
    checks.insert("harmonicity", Check::measured(harm, 1e-12));

    write_json(&out.join(SELFTEST_JSON), &checks)?;
    let passed = checks.values().all(|c| c.pass);
    for (name, c) in &checks {
        println!(
            "green-selftest: {name} pass={} max_error={}",
            c.pass,
            c.max_error.map_or("n/a".to_string(), |v| format!("{v:e}"))
        );
    }
    Ok(if passed { 0 } else { 2 })
}

/// Sets the dotted `path` (object keys or array indices) inside `doc`.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let usage = |msg: String| CliError::Usage(format!("--param {path}: {msg}"));
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(usage("empty path segment".into()));
    }
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| usage(format!("{part:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| usage(format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(usage(format!("{part:?} is inside a scalar"))),
        };
    }
    unreachable!("the loop returns at the last segment")
}

/// Sweep values are JSON literals where they parse as such, strings otherwise.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn run_dir_name(param: &str, raw: &str) -> String {
    format!("{param}={raw}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=-+".contains(c) { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct SweepRun {
    value: String,
    dir: String,
    exit_code: u8,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary {
    param: String,
    runs: Vec<SweepRun>,
}

/// One `verify-bounds` run per value, concurrently, each in its own
/// sub-directory `NAME=VALUE` of `out`.
pub fn run_sweep(doc: &Value, param: &str, values: &[String], out: &Path) -> Result<u8> {
    if values.is_empty() {
        return Err(CliError::Usage("--values is empty".into()));
    }
    let mut jobs = Vec::with_capacity(values.len());
    for raw in values {
        let mut d = doc.clone();
        set_path(&mut d, param, parse_value(raw))?;
        let cfg = ExperimentConfig::from_value(d)?;
        let dir: PathBuf = out.join(run_dir_name(param, raw));
        jobs.push((raw.clone(), dir, cfg));
    }
    let results: Vec<Result<u8>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(_, dir, cfg)| scope.spawn(move || run_verify_bounds(cfg, dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut code = 0;
    let mut runs = Vec::with_capacity(jobs.len());
    for ((raw, dir, _), r) in jobs.iter().zip(results) {
        let (exit_code, error) = match r {
            Ok(c) => (c, None),
            Err(e) => (e.exit_code(), Some(e.to_string())),
        };
        code = code.max(exit_code);
        runs.push(SweepRun {
            value: raw.clone(),
            dir: dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            exit_code,
            error,
        });
    }
    write_json(
        &out.join(SWEEP_SUMMARY_JSON),
        &SweepSummary {
            param: param.to_string(),
            runs,
        },
    )?;
    Ok(code)
}
