//! Model loading: builtin names or TOML model files.
//!
//! ```toml
//! copies = 1                 # optional: N independent repetitions
//!
//! [grid]
//! lower = 0.0
//! upper = 3.141592653589793
//! points = 2001
//!
//! [prior]
//! kind = "rectangle"         # rectangle | gaussian | raised-cosine | plateau | tabulated
//! center = 1.5707963267948966
//! width = 3.141592653589793
//!
//! [model]
//! kind = "cos2"              # cos2 | noon | channel | constant | tabulated
//! scale = 1.0
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use mibound::mi_oracle::{repeat_model, DEFAULT_OUTCOME_BUDGET};
use mibound::quantum_metrology::{povm_outcome_model, ChannelFamily, NoiseKind, PhaseFamily, Povm};
use mibound::{ConditionalModel, JointModel, ParameterGrid, PriorDensity};
use serde::Deserialize;
use toml::Spanned;

pub const BUILTINS: &[&str] = &[
    "cos2",
    "gaussian-phase",
    "noon",
    "dephasing-qubit",
    "ampdamp-qubit",
    "erasure-qutrit",
];

/// Efficiency used by the channel builtins.
pub const BUILTIN_ETA: f64 = 0.9;
/// Photon number of the `noon` builtin; `noon-<N>` picks another.
pub const BUILTIN_NOON_N: usize = 4;

pub struct LoadedModel {
    pub name: String,
    pub joint: JointModel,
}

impl fmt::Debug for LoadedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadedModel")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Resolves `spec` as a builtin name first, then as a file path.
pub fn load(spec: &str, grid_points: Option<usize>) -> Result<LoadedModel> {
    if let Some(joint) = builtin(spec, grid_points)? {
        return Ok(LoadedModel {
            name: spec.to_string(),
            joint,
        });
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "'{spec}' is neither a builtin model ({}, noon-<N>) nor an existing file",
            BUILTINS.join(", ")
        );
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read model file {}", path.display()))?;
    let joint = parse_model(&text, grid_points).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(LoadedModel {
        name: path.display().to_string(),
        joint,
    })
}

fn grid_or(lower: f64, upper: f64, default_points: usize, points: Option<usize>) -> Result<ParameterGrid> {
    Ok(ParameterGrid::new(lower, upper, points.unwrap_or(default_points))?)
}

fn uniform(grid: ParameterGrid) -> Result<PriorDensity> {
    let (lo, hi) = (grid.lower(), grid.upper());
    Ok(PriorDensity::rectangle(grid, 0.5 * (lo + hi), hi - lo)?)
}

fn channel_builtin(kind: NoiseKind, points: Option<usize>) -> Result<JointModel> {
    let grid = grid_or(0.0, 2.0 * PI, 2001, points)?;
    let family = ChannelFamily::with_plus_input(kind, BUILTIN_ETA, 1)?;
    let model = povm_outcome_model(&family, &Povm::sigma_x(kind.dim())?, grid)?;
    Ok(JointModel::new(uniform(grid)?, model)?)
}

fn noon_builtin(n: usize, points: Option<usize>) -> Result<JointModel> {
    let grid = grid_or(0.0, 2.0 * PI, 4001, points)?;
    let model = povm_outcome_model(&PhaseFamily::noon(n)?, &Povm::sigma_x(2)?, grid)?;
    Ok(JointModel::new(uniform(grid)?, model)?)
}

/// Builtin models. `None` if `name` is not a builtin.
pub fn builtin(name: &str, points: Option<usize>) -> Result<Option<JointModel>> {
    let joint = match name {
        // cos² interferometer, uniform prior on [0, π]
        "cos2" => {
            let grid = grid_or(0.0, PI, 2001, points)?;
            JointModel::new(uniform(grid)?, ConditionalModel::cos2(grid)?)?
        }
        // F = 100 everywhere, Gaussian prior σ = 0.5, so Fσ² = 25
        "gaussian-phase" | "cos2-gaussian" => {
            let grid = grid_or(-4.0, 4.0, 4001, points)?;
            JointModel::new(
                PriorDensity::gaussian(grid, 0.0, 0.5)?,
                ConditionalModel::cos2_scaled(grid, 10.0)?,
            )?
        }
        "noon" => noon_builtin(BUILTIN_NOON_N, points)?,
        "dephasing-qubit" => channel_builtin(NoiseKind::Dephasing, points)?,
        "ampdamp-qubit" => channel_builtin(NoiseKind::AmplitudeDamping, points)?,
        "erasure-qutrit" => channel_builtin(NoiseKind::Erasure, points)?,
        other => match other.strip_prefix("noon-").map(str::parse::<usize>) {
            Some(Ok(n)) => noon_builtin(n, points)?,
            Some(Err(_)) => bail!("'{other}': expected noon-<N> with integer N"),
            None => return Ok(None),
        },
    };
    Ok(Some(joint))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    copies: Option<Spanned<usize>>,
    grid: Spanned<GridSection>,
    prior: Spanned<PriorSection>,
    model: Spanned<ModelSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    lower: f64,
    upper: f64,
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum PriorSection {
    Rectangle { center: Option<f64>, width: Option<f64> },
    Gaussian { mean: f64, sigma: f64 },
    RaisedCosine { center: f64, width: f64 },
    Plateau { center: f64, width: f64, ramp: f64 },
    Tabulated { values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ModelSection {
    Cos2 {
        scale: Option<f64>,
    },
    Noon {
        n: usize,
        measurement: Option<String>,
    },
    Channel {
        noise: String,
        eta: f64,
        uses: Option<usize>,
        measurement: Option<String>,
    },
    Constant {
        probabilities: Vec<f64>,
    },
    Tabulated {
        probabilities: Vec<Vec<f64>>,
    },
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn at<T>(text: &str, spanned: &Spanned<T>, what: &str, err: impl fmt::Display) -> anyhow::Error {
    anyhow!("line {}: invalid {what}: {err}", line_of(text, spanned.span().start))
}

fn measurement(name: Option<&str>, dim: usize) -> std::result::Result<Povm, String> {
    match name.unwrap_or("sigma-x") {
        "sigma-x" => Povm::sigma_x(dim).map_err(|e| e.to_string()),
        "computational" => Povm::computational(dim).map_err(|e| e.to_string()),
        other => Err(format!("unknown measurement '{other}' (sigma-x | computational)")),
    }
}

/// Parses and validates a TOML model file. Errors carry the line of the
/// offending table or key.
pub fn parse_model(text: &str, grid_points: Option<usize>) -> Result<JointModel> {
    let file: ModelFile = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
    let g = file.grid.get_ref();
    let grid = ParameterGrid::new(g.lower, g.upper, grid_points.unwrap_or(g.points))
        .map_err(|e| at(text, &file.grid, "[grid]", e))?;

    let prior = match file.prior.get_ref() {
        PriorSection::Rectangle { center, width } => PriorDensity::rectangle(
            grid,
            center.unwrap_or(0.5 * (grid.lower() + grid.upper())),
            width.unwrap_or(grid.upper() - grid.lower()),
        ),
        PriorSection::Gaussian { mean, sigma } => PriorDensity::gaussian(grid, *mean, *sigma),
        PriorSection::RaisedCosine { center, width } => PriorDensity::raised_cosine(grid, *center, *width),
        PriorSection::Plateau { center, width, ramp } => PriorDensity::plateau(grid, *center, *width, *ramp),
        PriorSection::Tabulated { values } => PriorDensity::tabulated(grid, values.clone()),
    }
    .map_err(|e| at(text, &file.prior, "[prior]", e))?;

    let bad_model = |e: &dyn fmt::Display| at(text, &file.model, "[model]", e);
    let conditional = match file.model.get_ref() {
        ModelSection::Cos2 { scale } => ConditionalModel::cos2_scaled(grid, scale.unwrap_or(1.0)),
        ModelSection::Noon { n, measurement: m } => {
            let povm = measurement(m.as_deref(), 2).map_err(|e| bad_model(&e))?;
            PhaseFamily::noon(*n).and_then(|f| povm_outcome_model(&f, &povm, grid))
        }
        ModelSection::Channel {
            noise,
            eta,
            uses,
            measurement: m,
        } => {
            let kind: NoiseKind = noise.parse().map_err(|e| bad_model(&e))?;
            let povm = measurement(m.as_deref(), kind.dim()).map_err(|e| bad_model(&e))?;
            ChannelFamily::with_plus_input(kind, *eta, uses.unwrap_or(1))
                .and_then(|f| povm_outcome_model(&f, &povm, grid))
        }
        ModelSection::Constant { probabilities } => ConditionalModel::constant(grid, probabilities),
        ModelSection::Tabulated { probabilities } => ConditionalModel::tabulated(grid, probabilities.clone()),
    }
    .map_err(|e| bad_model(&e))?;

    let joint = JointModel::new(prior, conditional).map_err(|e| bad_model(&e))?;
    match &file.copies {
        None => Ok(joint),
        Some(c) => {
            if *c.get_ref() == 0 {
                return Err(at(text, c, "copies", "must be at least 1"));
            }
            repeat_model(&joint, *c.get_ref()).map_err(|e| {
                at(
                    text,
                    c,
                    "copies",
                    format!("{e} (exact budget {DEFAULT_OUTCOME_BUDGET} outcomes)"),
                )
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COS2: &str = r#"
[grid]
lower = 0.0
upper = 3.141592653589793
points = 201

[prior]
kind = "rectangle"

[model]
kind = "cos2"
"#;

    #[test]
    fn every_builtin_loads() {
        for name in BUILTINS.iter().chain(&["noon-2", "cos2-gaussian"]) {
            let m = builtin(name, Some(401)).unwrap();
            assert!(m.is_some(), "{name}");
        }
        assert!(builtin("nope", None).unwrap().is_none());
        assert!(builtin("noon-x", None).is_err());
    }

    #[test]
    fn parses_minimal_file() {
        let j = parse_model(COS2, None).unwrap();
        assert_eq!(j.grid().len(), 201);
        assert_eq!(parse_model(COS2, Some(101)).unwrap().grid().len(), 101);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let bad = COS2.replace("points = 201", "points = ");
        let msg = parse_model(&bad, None).unwrap_err().to_string();
        assert!(msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn semantic_errors_point_at_table() {
        let bad = COS2.replace("points = 201", "points = 200");
        let msg = parse_model(&bad, None).unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("[grid]"), "{msg}");
        let bad = COS2.replace(
            "kind = \"cos2\"",
            "kind = \"channel\"\nnoise = \"dephasing\"\neta = 1.5",
        );
        let msg = parse_model(&bad, None).unwrap_err().to_string();
        assert!(msg.contains("line 10") && msg.contains("[model]"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = COS2.replace("[model]", "[model]\ncolour = 3");
        assert!(parse_model(&bad, None).is_err());
    }

    #[test]
    fn copies_repeat_the_model() {
        let text = format!("copies = 3\n{COS2}");
        let j = parse_model(&text, None).unwrap();
        assert_eq!(j.conditional().num_outcomes(), 8);
    }
}
