//! Least-squares fit of the motor no-load power line.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("all samples share one control input; the line is undetermined")]
    RankDeficient,
    #[error("sample {0} is not finite")]
    NonFinite(usize),
}

/// Fitted `η_M · P_Me ≈ slope · Ỹ + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoloadFit {
    /// β₁, W per control-input step
    pub slope: f64,
    /// β₂, W
    pub intercept: f64,
    /// RMS residual expressed in electrical watts (before efficiency scaling).
    pub residual_rms: f64,
}

/// Ordinary least squares over `(Ỹ, no-load electrical power)` samples.
///
/// Uses centred sums, which stay well conditioned when Ỹ values sit far from
/// zero relative to their spread.
pub fn fit_noload_params(
    samples: &[(f64, f64)],
    motor_efficiency: f64,
) -> Result<NoloadFit, FitError> {
    if samples.len() < 2 {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    if let Some(i) = samples
        .iter()
        .position(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(FitError::NonFinite(i));
    }
    let n = samples.len() as f64;
    let mean_x = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.1 * motor_efficiency).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, pe) in samples {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (pe * motor_efficiency - mean_y);
    }
    if sxx == 0.0 {
        return Err(FitError::RankDeficient);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sq: f64 = samples
        .iter()
        .map(|&(x, pe)| {
            let r = (pe * motor_efficiency - (slope * x + intercept)) / motor_efficiency;
            r * r
        })
        .sum();
    Ok(NoloadFit {
        slope,
        intercept,
        residual_rms: (sq / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook normal equations [Σx² Σx; Σx n]·[b1 b2]ᵀ = [Σxy Σy]ᵀ by Cramer's rule.
    fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let det = sxx * n - sx * sx;
        ((sxy * n - sx * sy) / det, (sxx * sy - sx * sxy) / det)
    }

    #[test]
    fn recovers_noiseless_line() {
        let samples: Vec<_> = (1..=16)
            .map(|y| (f64::from(y), (3.0 * f64::from(y) + 5.0) / 0.8))
            .collect();
        let fit = fit_noload_params(&samples, 0.8).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-9);
        assert!((fit.intercept - 5.0).abs() < 1e-9);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn two_points() {
        let fit = fit_noload_params(&[(1.0, 8.0), (16.0, 53.0)], 1.0).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient() {
        let samples = vec![(10.0, 40.0), (10.0, 41.0), (10.0, 39.5)];
        assert_eq!(
            fit_noload_params(&samples, 0.8),
            Err(FitError::RankDeficient)
        );
        assert_eq!(
            fit_noload_params(&[(1.0, 2.0)], 0.8),
            Err(FitError::TooFewSamples(1))
        );
        assert_eq!(
            fit_noload_params(&[(1.0, 2.0), (f64::NAN, 1.0)], 0.8),
            Err(FitError::NonFinite(1))
        );
    }

    proptest! {
        #[test]
        fn matches_normal_equations(
            pts in proptest::collection::vec((1.0f64..16.0, 0.0f64..200.0), 3..40),
            eta in 0.5f64..1.0,
        ) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1.0);
            let scaled: Vec<_> = pts.iter().map(|&(x, pe)| (x, pe * eta)).collect();
            let (b1, b2) = normal_equations(&scaled);
            let fit = fit_noload_params(&pts, eta).unwrap();
            prop_assert!((fit.slope - b1).abs() <= 1e-9 * b1.abs().max(1.0));
            prop_assert!((fit.intercept - b2).abs() <= 1e-9 * b2.abs().max(1.0));
        }
    }
}
