//! Least-squares fits of the finite-size scaling forms
//!
//! * `sqrt-inverse`: y ≈ C1 + C2/√d
//! * `mps-surface`: y ≈ (C1/√d + C2/√q + C3/√(dq) + C4/d + C5/q + C6/(dq))²
//!
//! The surface is fitted through √y, where it is linear in the constants.
//! Both problems are solved by Householder QR of the (optionally weighted)
//! design matrix.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative size of the smallest accepted R diagonal in the QR solve.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    SqrtInverse,
    MpsSurface,
}

impl FitModel {
    pub fn as_str(self) -> &'static str {
        match self {
            FitModel::SqrtInverse => "sqrt-inverse",
            FitModel::MpsSurface => "mps-surface",
        }
    }

    /// Number of fitted constants.
    pub fn n_constants(self) -> usize {
        match self {
            FitModel::SqrtInverse => 2,
            FitModel::MpsSurface => 6,
        }
    }

    /// Basis functions evaluated at (d, q).
    pub fn basis(self, d: f64, q: f64) -> Vec<f64> {
        match self {
            FitModel::SqrtInverse => vec![1.0, 1.0 / d.sqrt()],
            FitModel::MpsSurface => vec![
                1.0 / d.sqrt(),
                1.0 / q.sqrt(),
                1.0 / (d * q).sqrt(),
                1.0 / d,
                1.0 / q,
                1.0 / (d * q),
            ],
        }
    }

    /// Model value for the given constants.
    pub fn evaluate(self, constants: &[f64], d: f64, q: f64) -> f64 {
        let lin: f64 = self
            .basis(d, q)
            .iter()
            .zip(constants)
            .map(|(b, c)| b * c)
            .sum();
        match self {
            FitModel::SqrtInverse => lin,
            FitModel::MpsSurface => lin * lin,
        }
    }

    /// CSV column fitted by default when reading experiment results.
    pub fn default_value_column(self) -> &'static str {
        match self {
            FitModel::SqrtInverse => "injective_estimate",
            FitModel::MpsSurface => "normalized_estimate",
        }
    }
}

impl std::fmt::Display for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt-inverse" => Ok(FitModel::SqrtInverse),
            "mps-surface" => Ok(FitModel::MpsSurface),
            other => Err(Error::Spec(format!("unknown fit model `{other}`"))),
        }
    }
}

/// One observation; `q` is ignored by the sqrt-inverse model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub d: f64,
    pub q: f64,
    pub y: f64,
    pub weight: f64,
}

impl FitPoint {
    pub fn new(d: f64, y: f64) -> Self {
        Self {
            d,
            q: f64::NAN,
            y,
            weight: 1.0,
        }
    }

    pub fn with_q(d: f64, q: f64, y: f64) -> Self {
        Self {
            d,
            q,
            y,
            weight: 1.0,
        }
    }
}

/// Fitted constants with residual statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub constants: Vec<f64>,
    /// y − prediction, in input order.
    pub residuals: Vec<f64>,
    /// Mean absolute percentage error over the points with y ≠ 0, in percent.
    pub mape: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, d: f64, q: f64) -> f64 {
        self.model.evaluate(&self.constants, d, q)
    }
}

/// Unweighted fit of y ≈ C1 + C2/√d.
pub fn fit_sqrt_inverse(points: &[(f64, f64)]) -> Result<FitResult> {
    let pts: Vec<FitPoint> = points.iter().map(|&(d, y)| FitPoint::new(d, y)).collect();
    fit(FitModel::SqrtInverse, &pts)
}

/// Unweighted fit of the six-constant MPS surface.
pub fn fit_mps_surface(points: &[(f64, f64, f64)]) -> Result<FitResult> {
    let pts: Vec<FitPoint> = points
        .iter()
        .map(|&(d, q, y)| FitPoint::with_q(d, q, y))
        .collect();
    fit(FitModel::MpsSurface, &pts)
}

/// Weighted least squares for either model.
pub fn fit(model: FitModel, points: &[FitPoint]) -> Result<FitResult> {
    let p = model.n_constants();
    for pt in points {
        let q_ok = model == FitModel::SqrtInverse || (pt.q > 0.0 && pt.q.is_finite());
        if !(pt.d > 0.0 && pt.d.is_finite()) || !q_ok || !pt.y.is_finite() {
            return Err(Error::Spec(format!("invalid fit point {pt:?}")));
        }
        if !(pt.weight > 0.0 && pt.weight.is_finite()) {
            return Err(Error::Spec(format!(
                "weights must be positive, got {}",
                pt.weight
            )));
        }
        if model == FitModel::MpsSurface && pt.y < 0.0 {
            return Err(Error::Spec(format!(
                "surface values must be non-negative, got {}",
                pt.y
            )));
        }
    }
    if points.len() < p {
        return Err(Error::Rank(format!(
            "{} points for {p} constants",
            points.len()
        )));
    }
    let m = points.len();
    let mut a = DMatrix::<f64>::zeros(m, p);
    let mut b = DVector::<f64>::zeros(m);
    for (i, pt) in points.iter().enumerate() {
        let w = pt.weight.sqrt();
        for (j, f) in model.basis(pt.d, pt.q).into_iter().enumerate() {
            a[(i, j)] = w * f;
        }
        b[i] = w * match model {
            FitModel::SqrtInverse => pt.y,
            FitModel::MpsSurface => pt.y.sqrt(),
        };
    }
    let mut constants = solve_least_squares(a, b)?;
    if model == FitModel::MpsSurface {
        // pick the branch whose linear combination is positive on the data
        let total: f64 = points
            .iter()
            .map(|pt| {
                model
                    .basis(pt.d, pt.q)
                    .iter()
                    .zip(&constants)
                    .map(|(f, c)| f * c)
                    .sum::<f64>()
            })
            .sum();
        if total < 0.0 {
            constants.iter_mut().for_each(|c| *c = -*c);
        }
    }
    let residuals: Vec<f64> = points
        .iter()
        .map(|pt| pt.y - model.evaluate(&constants, pt.d, pt.q))
        .collect();
    let pct: Vec<f64> = points
        .iter()
        .zip(&residuals)
        .filter(|(pt, _)| pt.y != 0.0)
        .map(|(pt, r)| (r / pt.y).abs())
        .collect();
    let mape = if pct.is_empty() {
        0.0
    } else {
        100.0 * pct.iter().sum::<f64>() / pct.len() as f64
    };
    Ok(FitResult {
        model,
        constants,
        residuals,
        mape,
        n_points: m,
    })
}

fn solve_least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<Vec<f64>> {
    let p = a.ncols();
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= RANK_TOL * max_diag) {
        return Err(Error::Rank(
            "design matrix does not have full column rank".into(),
        ));
    }
    let qtb = qr.q().transpose() * b;
    let x = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Rank("singular triangular factor".into()))?;
    Ok(x.iter().copied().collect())
}

/// Reads fit points from a CSV file.
///
/// Experiment-result files (with a `normalized_estimate` column) are reduced
/// to one point per (d, q) grid value: the mean of `value_column` over rows
/// where it is present, weighted by the row count when `count_weights` is
/// set. Other files must have columns `d` and `y`, plus `q` for the surface
/// model and optionally `weight`.
pub fn load_points(
    path: &Path,
    model: FitModel,
    value_column: Option<&str>,
    count_weights: bool,
) -> Result<Vec<FitPoint>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need =
        |name: &str| col(name).ok_or_else(|| Error::Format(format!("CSV has no `{name}` column")));
    let parse = |s: &str, name: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Format(format!("column `{name}`: cannot parse `{s}`")))
    };
    let uses_q = model == FitModel::MpsSurface;

    if col("normalized_estimate").is_some() {
        let value_name = value_column.unwrap_or(model.default_value_column());
        let (di, vi) = (need("d")?, need(value_name)?);
        let qi = if uses_q { Some(need("q")?) } else { None };
        // keyed by bit patterns so grouping is exact and ordered
        let mut groups: BTreeMap<(u64, u64), (f64, f64, f64, usize)> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let v = rec.get(vi).unwrap_or("");
            if v.trim().is_empty() {
                continue;
            }
            let d = parse(&rec[di], "d")?;
            let q = match qi {
                Some(i) => parse(&rec[i], "q")?,
                None => f64::NAN,
            };
            let e = groups
                .entry((d.to_bits(), q.to_bits()))
                .or_insert((d, q, 0.0, 0));
            e.2 += parse(v, value_name)?;
            e.3 += 1;
        }
        let mut pts: Vec<FitPoint> = groups
            .into_values()
            .map(|(d, q, sum, count)| FitPoint {
                d,
                q,
                y: sum / count as f64,
                weight: if count_weights { count as f64 } else { 1.0 },
            })
            .collect();
        pts.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.q.total_cmp(&b.q)));
        return Ok(pts);
    }

    let (di, yi) = (need("d")?, need(value_column.unwrap_or("y"))?);
    let qi = if uses_q { Some(need("q")?) } else { None };
    let wi = col("weight");
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let d = parse(&rec[di], "d")?;
        let q = match qi {
            Some(i) => parse(&rec[i], "q")?,
            None => f64::NAN,
        };
        let y = parse(&rec[yi], "y")?;
        let weight = match wi.map(|i| rec[i].trim()) {
            Some(w) if !w.is_empty() => parse(w, "weight")?,
            _ => 1.0,
        };
        pts.push(FitPoint { d, q, y, weight });
    }
    Ok(pts)
}

/// Copies of the points with unit weights.
pub fn unweighted(points: &[FitPoint]) -> Vec<FitPoint> {
    points
        .iter()
        .map(|p| FitPoint { weight: 1.0, ..*p })
        .collect()
}

/// JSON report `{model, constants, mape, n_points}`.
pub fn report_json(r: &FitResult) -> Result<String> {
    #[derive(Serialize)]
    struct Report<'a> {
        model: FitModel,
        constants: &'a [f64],
        mape: f64,
        n_points: usize,
    }
    Ok(serde_json::to_string_pretty(&Report {
        model: r.model,
        constants: &r.constants,
        mape: r.mape,
        n_points: r.n_points,
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_sqrt_inverse() {
        let pts: Vec<(f64, f64)> = [4.0, 9.0, 16.0, 25.0]
            .iter()
            .map(|&d: &f64| (d, 2.3 - 1.3 / d.sqrt()))
            .collect();
        let r = fit_sqrt_inverse(&pts).unwrap();
        assert!((r.constants[0] - 2.3).abs() < 1e-10);
        assert!((r.constants[1] + 1.3).abs() < 1e-10);
        assert!(r.residuals.iter().all(|x| x.abs() < 1e-10));
        assert!(r.mape < 1e-8);
        assert_eq!(r.n_points, 4);
    }

    #[test]
    fn constant_data() {
        let r = fit_sqrt_inverse(&[(4.0, 5.0), (16.0, 5.0), (64.0, 5.0)]).unwrap();
        assert!((r.constants[0] - 5.0).abs() < 1e-12);
        assert!(r.constants[1].abs() < 1e-12);
    }

    #[test]
    fn single_abscissa_is_rank_deficient() {
        assert!(matches!(
            fit_sqrt_inverse(&[(4.0, 1.0), (4.0, 2.0)]),
            Err(Error::Rank(_))
        ));
        assert!(matches!(
            fit_sqrt_inverse(&[(4.0, 1.0)]),
            Err(Error::Rank(_))
        ));
        let line: Vec<(f64, f64, f64)> = (1..10).map(|i| (i as f64, i as f64, 1.0)).collect();
        assert!(matches!(fit_mps_surface(&line), Err(Error::Rank(_))));
    }

    #[test]
    fn zero_surface() {
        let mut pts = Vec::new();
        for d in [4.0, 8.0, 16.0] {
            for q in [2.0, 4.0, 8.0] {
                pts.push((d, q, 0.0));
            }
        }
        let r = fit_mps_surface(&pts).unwrap();
        assert!(r.constants.iter().all(|c| c.abs() < 1e-15));
        assert_eq!(r.mape, 0.0);
    }

    #[test]
    fn weights_change_the_fit() {
        let pts = [
            FitPoint::new(4.0, 1.0),
            FitPoint::new(16.0, 2.0),
            FitPoint {
                weight: 100.0,
                ..FitPoint::new(64.0, 2.0)
            },
        ];
        let w = fit(FitModel::SqrtInverse, &pts).unwrap();
        let u = fit(FitModel::SqrtInverse, &unweighted(&pts)).unwrap();
        assert!(w.residuals[2].abs() < u.residuals[2].abs());
        assert!(fit(
            FitModel::SqrtInverse,
            &[
                FitPoint {
                    weight: 0.0,
                    ..pts[0]
                },
                pts[1]
            ]
        )
        .is_err());
    }
}
