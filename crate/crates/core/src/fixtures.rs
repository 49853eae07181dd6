//! Test solutions used by the examples, the CLI and the acceptance suite.
//!
//! `neg_abs_1d` and `two_source_eikonal` are viscosity solutions of
//! `|Du|^2/2 - 1/2 = 0`, which pairs them with the `eikonal` model.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HjError, Result};
use crate::field::{GridData, ScalarField};
use crate::linalg::Vector;

pub const FIXTURE_IDS: &[&str] = &[
    "neg_abs_1d",
    "two_source_eikonal(a, b)",
    "linear(a)",
    "grid(path)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum FixtureSpec {
    NegAbs1d,
    TwoSourceEikonal {
        #[serde(default = "default_a")]
        a: Vec<f64>,
        #[serde(default = "default_b")]
        b: Vec<f64>,
    },
    Linear {
        a: Vec<f64>,
    },
    Grid {
        path: PathBuf,
    },
}

fn default_a() -> Vec<f64> {
    vec![-1.0, 0.0]
}
fn default_b() -> Vec<f64> {
    vec![1.0, 0.0]
}

impl FixtureSpec {
    /// The model whose Hamilton-Jacobi equation the fixture solves, if any.
    pub fn natural_model(&self) -> &'static str {
        match self {
            FixtureSpec::NegAbs1d | FixtureSpec::TwoSourceEikonal { .. } => "eikonal",
            FixtureSpec::Linear { .. } | FixtureSpec::Grid { .. } => "free",
        }
    }
}

/// `u(x) = -|x|` on the line; Lipschitz 1 and concave.
pub fn neg_abs_1d() -> ScalarField {
    ScalarField::analytic("neg_abs_1d", 1, |x| -x[0].abs(), 1.0, 0.0)
}

/// `u(x) = min(|x - a|, |x - b|)`, Lipschitz 1. The semiconcavity constant
/// `1 / d` uses the distance `d` from the sources to the box around the
/// bisector on which the field is used: the midpoint plus or minus a quarter
/// of `|b_i - a_i|` along axes where the sources differ, and plus or minus 5
/// along the others.
pub fn two_source_eikonal(a: &[f64], b: &[f64]) -> Result<ScalarField> {
    if a.len() != b.len() || a.is_empty() {
        return Err(HjError::InvalidInput(
            "sources must have equal positive dimension".into(),
        ));
    }
    let n = a.len();
    let sep: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    if sep == 0.0 {
        return Err(HjError::InvalidInput("sources must differ".into()));
    }
    let mid: Vec<f64> = a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
    let half: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(p, q)| if p != q { 0.25 * (q - p).abs() } else { 5.0 })
        .collect();
    let lower = Vector::from_iterator(n, mid.iter().zip(&half).map(|(m, h)| m - h));
    let upper = Vector::from_iterator(n, mid.iter().zip(&half).map(|(m, h)| m + h));
    let dist_to_box = |s: &[f64]| -> f64 {
        s.iter()
            .enumerate()
            .map(|(i, v)| {
                let c = v.clamp(lower[i], upper[i]);
                (v - c) * (v - c)
            })
            .sum::<f64>()
            .sqrt()
    };
    let d = dist_to_box(a).min(dist_to_box(b));
    let (a, b) = (a.to_vec(), b.to_vec());
    let dist = |x: &[f64], s: &[f64]| {
        x.iter()
            .zip(s)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    let u = ScalarField::analytic(
        "two_source_eikonal",
        n,
        move |x| dist(x, &a).min(dist(x, &b)),
        1.0,
        1.0 / d,
    );
    Ok(u.with_domain(lower, upper))
}

/// `u(x) = <a, x>`.
pub fn linear(a: &[f64]) -> ScalarField {
    let a = a.to_vec();
    let lip = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n = a.len();
    ScalarField::analytic(
        "linear",
        n,
        move |x| x.iter().zip(&a).map(|(p, q)| p * q).sum(),
        lip,
        0.0,
    )
}

/// Loads a JSON-encoded [`GridData`].
pub fn grid_from_path(path: &Path) -> Result<ScalarField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HjError::GridLoad(format!("{}: {e}", path.display())))?;
    let grid: GridData = serde_json::from_str(&text)
        .map_err(|e| HjError::GridLoad(format!("{}: {e}", path.display())))?;
    ScalarField::from_grid(format!("grid({})", path.display()), grid)
}

pub fn fixture_field(spec: &FixtureSpec) -> Result<ScalarField> {
    match spec {
        FixtureSpec::NegAbs1d => Ok(neg_abs_1d()),
        FixtureSpec::TwoSourceEikonal { a, b } => two_source_eikonal(a, b),
        FixtureSpec::Linear { a } => {
            if a.is_empty() {
                return Err(HjError::InvalidInput(
                    "linear fixture needs a nonempty coefficient vector".into(),
                ));
            }
            Ok(linear(a))
        }
        FixtureSpec::Grid { path } => grid_from_path(path),
    }
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().ok()).collect()
}

/// Parses compact ids: `neg_abs_1d`, `two_source_eikonal`,
/// `two_source_eikonal(-1,0;1,0)`, `linear(1,0)`, `grid(path/to/file.json)`.
pub fn parse_fixture_id(id: &str) -> Result<FixtureSpec> {
    let id = id.trim();
    let unknown = || HjError::UnknownFixture(id.to_string());
    let (name, arg) = match id.find('(') {
        Some(i) => {
            let inner = id[i + 1..].strip_suffix(')').ok_or_else(unknown)?;
            (&id[..i], Some(inner))
        }
        None => (id, None),
    };
    match (name, arg) {
        ("neg_abs_1d", None) => Ok(FixtureSpec::NegAbs1d),
        ("two_source_eikonal", None) => Ok(FixtureSpec::TwoSourceEikonal {
            a: default_a(),
            b: default_b(),
        }),
        ("two_source_eikonal", Some(arg)) => {
            let (a, b) = arg.split_once(';').ok_or_else(unknown)?;
            Ok(FixtureSpec::TwoSourceEikonal {
                a: parse_list(a).ok_or_else(unknown)?,
                b: parse_list(b).ok_or_else(unknown)?,
            })
        }
        ("linear", Some(arg)) => Ok(FixtureSpec::Linear {
            a: parse_list(arg).ok_or_else(unknown)?,
        }),
        ("grid", Some(arg)) => Ok(FixtureSpec::Grid {
            path: PathBuf::from(arg.trim()),
        }),
        _ => Err(unknown()),
    }
}

pub fn fixture_by_id(id: &str) -> Result<ScalarField> {
    fixture_field(&parse_fixture_id(id)?)
}
