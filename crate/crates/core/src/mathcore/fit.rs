use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MathError;

/// Relative singular-value cutoff below which the design matrix is treated
/// as rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

/// Least-squares polynomial, coefficients ordered constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl PolyFit {
    /// Evaluates the polynomial at `x` (Horner).
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }

    /// Slope of a degree-1 fit; `None` for other degrees.
    pub fn slope(&self) -> Option<f64> {
        (self.degree == 1).then(|| self.coefficients[1])
    }
}

/// Sum of squared residuals of `coefficients` (constant first) over `points`.
pub fn residual_sum_of_squares(points: &[(f64, f64)], coefficients: &[f64]) -> f64 {
    points
        .iter()
        .map(|&(x, y)| {
            let p = coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
            (y - p).powi(2)
        })
        .sum()
}

/// Ordinary least-squares polynomial fit of the given degree.
///
/// Columns of the Vandermonde matrix are equilibrated before an SVD solve,
/// then the coefficients are rescaled.
pub fn polyfit(points: &[(f64, f64)], degree: usize) -> Result<PolyFit, MathError> {
    let n = points.len();
    let cols = degree + 1;
    if n < cols {
        return Err(MathError::InsufficientData {
            needed: cols,
            got: n,
        });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(MathError::InvalidArgument(
            "fit points must be finite".to_string(),
        ));
    }

    let mut design = DMatrix::<f64>::from_fn(n, cols, |r, c| points[r].0.powi(c as i32));
    let mut scales = vec![1.0; cols];
    for (c, scale) in scales.iter_mut().enumerate() {
        let norm = design.column(c).norm();
        if norm > 0.0 {
            *scale = norm;
            design.column_mut(c).scale_mut(1.0 / norm);
        }
    }
    let rhs = DVector::from_iterator(n, points.iter().map(|p| p.1));

    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if max_sv == 0.0 || min_sv / max_sv < RANK_TOLERANCE {
        return Err(MathError::DegenerateInput(format!(
            "design matrix for degree {degree} is rank deficient"
        )));
    }
    let solution = svd
        .solve(&rhs, 0.0)
        .map_err(|e| MathError::DegenerateInput(e.to_string()))?;
    let coefficients: Vec<f64> = solution.iter().zip(&scales).map(|(c, s)| c / s).collect();

    let ss_res = residual_sum_of_squares(points, &coefficients);
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };

    Ok(PolyFit {
        degree,
        coefficients,
        r_squared,
    })
}
