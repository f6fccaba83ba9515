//! TOML run configuration.

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gapscan::DEFAULT_GRID;
use crate::model::{
    validate_config, CoefficientFields, FieldSpec, LatticeParams, OperatorConfig, WallProfile, WallShape,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    lattice: RawLattice,
    wall: RawWall,
    #[serde(default)]
    coeffs: RawCoeffs,
    alpha: f64,
    epsilons: Vec<f64>,
    #[serde(default)]
    cutoffs: RawCutoffs,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    window: RawWindow,
    crossing: Option<RawCrossing>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    a1: f64,
    a2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWall {
    a3: f64,
    c0: f64,
    shape: String,
    #[serde(default = "one")]
    height: f64,
    values: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeffs {
    #[serde(default = "default_margin")]
    margin: f64,
    quad_nodes: Option<usize>,
    resolution_tol: Option<f64>,
    #[serde(default)]
    a11: RawField,
    #[serde(default)]
    a1: RawField,
    #[serde(default)]
    a0: RawField,
}

fn default_margin() -> f64 {
    0.1
}

impl Default for RawCoeffs {
    fn default() -> Self {
        RawCoeffs {
            margin: default_margin(),
            quad_nodes: None,
            resolution_tol: None,
            a11: RawField::Zero,
            a1: RawField::Zero,
            a0: RawField::Zero,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawField {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    BumpHarmonic {
        amplitude: f64,
        delta: f64,
        wx: f64,
        wy: f64,
        #[serde(default)]
        phase_x: f64,
        #[serde(default)]
        phase_y: f64,
    },
    Grid {
        n1: usize,
        n2: usize,
        values: Vec<f64>,
    },
}

impl RawField {
    fn into_spec(self) -> Result<FieldSpec> {
        Ok(match self {
            RawField::Zero => FieldSpec::Zero,
            RawField::Constant { value } => FieldSpec::Constant(value),
            RawField::BumpHarmonic {
                amplitude,
                delta,
                wx,
                wy,
                phase_x,
                phase_y,
            } => FieldSpec::BumpHarmonic {
                amplitude,
                delta,
                wx,
                wy,
                phase_x,
                phase_y,
            },
            RawField::Grid { n1, n2, values } => {
                if n1 == 0 || n2 == 0 || values.len() != n1 * n2 {
                    return Err(Error::InvalidArgument(format!(
                        "grid field needs n1*n2 = {} values, got {}",
                        n1 * n2,
                        values.len()
                    )));
                }
                FieldSpec::Grid { n1, n2, values }
            }
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCutoffs {
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "Q")]
    q: Option<usize>,
    #[serde(rename = "P")]
    p: Option<usize>,
    n_max: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "G1")]
    g1: usize,
    #[serde(rename = "G2")]
    g2: usize,
}

impl Default for RawGrid {
    fn default() -> Self {
        RawGrid {
            g1: DEFAULT_GRID.0,
            g2: DEFAULT_GRID.1,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    #[serde(rename = "C2")]
    c2: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawCrossing {
    pub n: i64,
    pub m: i64,
    pub tau0: f64,
}

/// Everything one config file describes.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub operator: OperatorConfig,
    pub n_cut: Option<usize>,
    pub q: Option<usize>,
    pub p_modes: Option<usize>,
    pub n_max: i64,
    pub grid: (usize, usize),
    pub c2: Option<f64>,
    pub crossing: Option<RawCrossing>,
    /// SHA-256 of the config bytes, hex.
    pub hash: String,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn parse_config(text: &str) -> Result<RunSettings> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let shape = match raw.wall.shape.as_str() {
        "trapezoid" => WallShape::Trapezoid { height: raw.wall.height },
        "raised_cosine" => WallShape::RaisedCosine { height: raw.wall.height },
        "table" => WallShape::Table {
            values: raw
                .wall
                .values
                .ok_or_else(|| Error::InvalidArgument("wall.shape = \"table\" needs wall.values".into()))?,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown wall.shape {other:?} (trapezoid, raised_cosine, table)"
            )))
        }
    };
    let mut coeffs = CoefficientFields::new(
        raw.coeffs.a11.into_spec()?,
        raw.coeffs.a1.into_spec()?,
        raw.coeffs.a0.into_spec()?,
        raw.coeffs.margin,
    );
    if raw.coeffs.quad_nodes.is_some() || raw.coeffs.resolution_tol.is_some() {
        let nodes = raw.coeffs.quad_nodes.unwrap_or(coeffs.quad_nodes);
        let tol = raw.coeffs.resolution_tol.unwrap_or(coeffs.resolution_tol);
        coeffs = coeffs.with_quadrature(nodes, tol);
    }
    let operator = validate_config(OperatorConfig {
        lattice: LatticeParams::new(raw.lattice.a1, raw.lattice.a2)?,
        wall: WallProfile {
            a3: raw.wall.a3,
            c0: raw.wall.c0,
            shape,
        },
        coeffs,
        alpha: raw.alpha,
        epsilons: raw.epsilons,
        validation: None,
    })?;
    Ok(RunSettings {
        operator,
        n_cut: raw.cutoffs.n,
        q: raw.cutoffs.q,
        p_modes: raw.cutoffs.p,
        n_max: raw.cutoffs.n_max.unwrap_or(3),
        grid: (raw.grid.g1, raw.grid.g2),
        c2: raw.window.c2,
        crossing: raw.crossing,
        hash: hex_digest(text.as_bytes()),
    })
}

pub fn load_config(path: &Path) -> Result<RunSettings> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    parse_config(&text)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
alpha = 0.4
epsilons = [0.1, 0.07, 0.05, 0.035]

[lattice]
a1 = 1.0
a2 = 1.0

[wall]
a3 = 0.25
c0 = 1.0
shape = "trapezoid"
"#;

    #[test]
    fn minimal_config_defaults() {
        let s = parse_config(MINIMAL).unwrap();
        assert_eq!(s.grid, DEFAULT_GRID);
        assert_eq!(s.n_max, 3);
        assert!(s.operator.coeffs.is_zero());
        assert_eq!(s.hash.len(), 64);
        assert!((s.operator.mass() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn parse_error_location() {
        let bad = MINIMAL.replace("a2 = 1.0", "a2 = ");
        match parse_config(&bad) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = format!("{MINIMAL}\n[grid]\nG1 = 16\nG2 = 16\nG3 = 1\n");
        assert!(matches!(parse_config(&bad), Err(Error::ConfigParse { .. })));
    }

    #[test]
    fn fields_and_cutoffs() {
        let text = format!(
            "{MINIMAL}\n[cutoffs]\nN = 3\nQ = 50\n\n[window]\nC2 = 2.5\n\n[coeffs.a0]\nkind = \"bump_harmonic\"\namplitude = 2.0\ndelta = 0.1\nwx = 6.283185307179586\nwy = 3.141592653589793\n"
        );
        let s = parse_config(&text).unwrap();
        assert_eq!((s.n_cut, s.q, s.c2), (Some(3), Some(50), Some(2.5)));
        assert!(matches!(s.operator.coeffs.a0, FieldSpec::BumpHarmonic { amplitude, .. } if amplitude == 2.0));
    }

    #[test]
    fn validation_errors_surface() {
        let bad = MINIMAL.replace("alpha = 0.4", "alpha = 0.6");
        assert!(matches!(parse_config(&bad), Err(Error::AlphaOutOfRange(_))));
        let bad = MINIMAL.replace("\"trapezoid\"", "\"square\"");
        assert!(matches!(parse_config(&bad), Err(Error::InvalidArgument(_))));
    }
}
