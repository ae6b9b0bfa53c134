//! Experiment configuration: a single JSON document.

use std::path::{Path, PathBuf};

use greenbound::domain::{Coefficients, Scheme};
use greenbound::f64::{Field, Grid, GreenSystem, OperatorSpec, PsiSpec, SolveConfig};
use greenbound::green::SolverChoice;
use greenbound::semilinear::InitialGuess;
use greenbound::FieldRole;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::expr::Expression;

/// Largest admissible number of interior nodes.
pub const MAX_INTERIOR_NODES: usize = 1_000_000;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    /// `{"family": ..., "params": {...}, "c": ...}`.
    pub psi: serde_json::Value,
    /// Constant for `psi` when the `psi` object carries none.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "FieldSpec::zero")]
    pub xi: FieldSpec,
    #[serde(default = "FieldSpec::zero")]
    pub f: FieldSpec,
    #[serde(default = "FieldSpec::one")]
    pub g: FieldSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub phi_table: PhiTableConfig,
    #[serde(default)]
    pub selftest: SelftestConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    /// Interior nodes per axis; a single entry for a disk.
    pub resolution: Vec<usize>,
    /// `[min, max]` per axis, default `[0, 1]`.
    #[serde(default)]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub disk: Option<DiskConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

/// `{"preset": "laplacian"}`, `{"preset": "laplacian_drift", "b": [1, 0]}` or
/// `{"coefficients": {"a11": "1 + x", "b1": 2}}`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub b: Option<[f64; 2]>,
    #[serde(default)]
    pub coefficients: Option<CoefficientConfig>,
    #[serde(default)]
    pub scheme: Scheme,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub a11: Option<FieldSpec>,
    pub a12: Option<FieldSpec>,
    pub a22: Option<FieldSpec>,
    pub b1: Option<FieldSpec>,
    pub b2: Option<FieldSpec>,
}

/// A constant or an expression in `x`, `y`.
#[derive(Clone, Debug)]
pub enum FieldSpec {
    Constant(f64),
    Expression(Expression),
}

impl FieldSpec {
    fn zero() -> Self {
        FieldSpec::Constant(0.0)
    }

    fn one() -> Self {
        FieldSpec::Constant(1.0)
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            FieldSpec::Constant(v) => *v,
            FieldSpec::Expression(e) => e.eval(x),
        }
    }

    pub fn sample(&self, grid: &Grid, role: FieldRole) -> Field {
        Field::from_fn(grid, role, |x| self.eval(x))
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct SpecVisitor;

        impl Visitor<'_> for SpecVisitor {
            type Value = FieldSpec;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a number or an expression string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<FieldSpec, E> {
                Ok(FieldSpec::Constant(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<FieldSpec, E> {
                Ok(FieldSpec::Constant(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<FieldSpec, E> {
                Ok(FieldSpec::Constant(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<FieldSpec, E> {
                Expression::parse(v).map(FieldSpec::Expression).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(SpecVisitor)
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub clamp: bool,
    pub initial: InitialGuess,
    pub linear: SolverChoice,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveConfig::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            relaxation: d.relaxation,
            clamp: d.clamp,
            initial: d.initial,
            linear: SolverChoice::Auto,
        }
    }
}

impl SolverConfig {
    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            relaxation: self.relaxation,
            clamp: self.clamp,
            initial: self.initial,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// The supersolution is the solution with source `supersolution_scale * g`.
    pub supersolution_scale: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            supersolution_scale: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiTableConfig {
    pub t_max: f64,
    pub samples: usize,
}

impl Default for PhiTableConfig {
    fn default() -> Self {
        Self {
            t_max: 5.0,
            samples: 101,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    /// Green columns sampled for the symmetry and positivity checks.
    pub columns: usize,
    /// Levels of the exhaustion chain.
    pub levels: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            columns: 8,
            levels: 4,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

fn parse_error(e: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let path = e.path().to_string();
    CliError::config(path, e.into_inner().to_string())
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(parse_error)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        serde_path_to_error::deserialize(value).map_err(parse_error)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        if !(g.dim == 1 || g.dim == 2) {
            return Err(CliError::config("grid.dim", format!("must be 1 or 2, got {}", g.dim)));
        }
        if let Some(disk) = &g.disk {
            if g.dim != 2 {
                return Err(CliError::config("grid.disk", "disks need dim = 2"));
            }
            if g.bounds.is_some() {
                return Err(CliError::config("grid.bounds", "not used with a disk"));
            }
            let [n] = g.resolution[..] else {
                return Err(CliError::config("grid.resolution", "a disk takes one resolution"));
            };
            check_nodes(n * n)?;
            return Grid::disk(disk.center, disk.radius, n).map_err(|e| CliError::config("grid", e.to_string()));
        }
        if g.resolution.len() != g.dim {
            return Err(CliError::config(
                "grid.resolution",
                format!("expected {} entries, got {}", g.dim, g.resolution.len()),
            ));
        }
        let bounds = match &g.bounds {
            Some(b) if b.len() != g.dim => {
                return Err(CliError::config(
                    "grid.bounds",
                    format!("expected {} entries, got {}", g.dim, b.len()),
                ))
            }
            Some(b) => b.clone(),
            None => vec![[0.0, 1.0]; g.dim],
        };
        check_nodes(g.resolution.iter().product())?;
        let grid = if g.dim == 1 {
            Grid::interval(bounds[0][0], bounds[0][1], g.resolution[0])
        } else {
            Grid::rectangle(
                [(bounds[0][0], bounds[0][1]), (bounds[1][0], bounds[1][1])],
                g.resolution[0],
                g.resolution[1],
            )
        };
        grid.map_err(|e| CliError::config("grid", e.to_string()))
    }

    pub fn operator(&self) -> Result<OperatorSpec> {
        let dim = self.grid.dim;
        let op = &self.operator;
        let spec = match (op.preset.as_deref(), &op.coefficients) {
            (Some(_), Some(_)) => {
                return Err(CliError::config("operator", "give either a preset or coefficients"))
            }
            (None | Some("laplacian"), None) => {
                if op.b.is_some() {
                    return Err(CliError::config("operator.b", "only used by the laplacian_drift preset"));
                }
                OperatorSpec::laplacian(dim)
            }
            (Some("laplacian_drift"), None) => {
                let b = op
                    .b
                    .ok_or_else(|| CliError::config("operator.b", "laplacian_drift needs a drift vector"))?;
                OperatorSpec::laplacian_with_drift(dim, b)
            }
            (Some(other), None) => {
                return Err(CliError::config(
                    "operator.preset",
                    format!("unknown preset {other:?}, expected \"laplacian\" or \"laplacian_drift\""),
                ))
            }
            (None, Some(c)) => {
                if op.b.is_some() {
                    return Err(CliError::config("operator.b", "use b1, b2 inside coefficients"));
                }
                coefficient_operator(dim, c)?
            }
        };
        Ok(spec.with_scheme(op.scheme))
    }

    pub fn psi(&self) -> Result<PsiSpec> {
        let mut repr = self.psi.clone();
        match (repr.as_object_mut(), self.c) {
            (None, _) => return Err(CliError::config("psi", "expected an object")),
            (Some(obj), Some(c)) => {
                if obj.contains_key("c") {
                    return Err(CliError::config("c", "psi already carries a constant"));
                }
                obj.insert("c".into(), c.into());
            }
            (Some(_), None) => {}
        }
        serde_json::from_value(repr).map_err(|e| CliError::config("psi", e.to_string()))
    }

    pub fn system(&self, grid: &Grid) -> Result<GreenSystem> {
        let op = self.operator()?;
        GreenSystem::with_solver(grid, &op, self.solver.linear)
            .map_err(|e| CliError::config("operator", e.to_string()))
    }

    pub fn solve_config(&self) -> Result<SolveConfig> {
        let cfg = self.solver.solve_config();
        cfg.validate().map_err(|e| CliError::config("solver", e.to_string()))?;
        Ok(cfg)
    }

    /// `xi`, `f` and `g` sampled on `grid`; `xi` and `g` must be nonnegative.
    pub fn data(&self, grid: &Grid) -> Result<(Field, Field, Field)> {
        let xi = self.xi.sample(grid, FieldRole::Source);
        let f = self.f.sample(grid, FieldRole::BoundaryData);
        let g = self.g.sample(grid, FieldRole::Source);
        for (name, field, nodes) in [
            ("xi", &xi, grid.interior()),
            ("f", &f, grid.boundary()),
            ("g", &g, grid.interior()),
        ] {
            field.check_finite(name).map_err(|e| CliError::config(name, e.to_string()))?;
            field
                .check_nonnegative(nodes, name)
                .map_err(|e| CliError::config(name, e.to_string()))?;
        }
        Ok((xi, f, g))
    }

    /// Output directory: the command-line override, then the config entry,
    /// then the working directory.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn check_nodes(n: usize) -> Result<()> {
    if n > MAX_INTERIOR_NODES {
        return Err(CliError::config(
            "grid.resolution",
            format!("{n} interior nodes exceed the limit of {MAX_INTERIOR_NODES}"),
        ));
    }
    Ok(())
}

fn coefficient_operator(dim: usize, c: &CoefficientConfig) -> Result<OperatorSpec> {
    if dim == 1 {
        for (name, v) in [("a12", &c.a12), ("a22", &c.a22), ("b2", &c.b2)] {
            if v.is_some() {
                return Err(CliError::config(
                    format!("operator.coefficients.{name}"),
                    "not used in one dimension",
                ));
            }
        }
    }
    let get = |v: &Option<FieldSpec>, default: f64| v.clone().unwrap_or(FieldSpec::Constant(default));
    let (a11, a12, a22) = (get(&c.a11, 1.0), get(&c.a12, 0.0), get(&c.a22, 1.0));
    let (b1, b2) = (get(&c.b1, 0.0), get(&c.b2, 0.0));
    let all_constant = [&a11, &a12, &a22, &b1, &b2]
        .iter()
        .all(|s| matches!(s, FieldSpec::Constant(_)));
    let at = move |x: &[f64; 2]| Coefficients {
        a: [[a11.eval(*x), a12.eval(*x)], [a12.eval(*x), a22.eval(*x)]],
        b: [b1.eval(*x), b2.eval(*x)],
    };
    Ok(if all_constant {
        OperatorSpec::constant(dim, at(&[0.0, 0.0]))
    } else {
        OperatorSpec::from_fn(dim, at)
    })
}
