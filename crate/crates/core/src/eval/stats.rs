use crate::error::{Error, Result};

/// Normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.96;

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("mean of an empty sequence".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// `(mean, 1.96 · s / sqrt(n))` with `s` the unbiased sample standard deviation.
pub fn confidence_interval(values: &[f64]) -> Result<(f64, f64)> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Err(Error::Domain(format!(
            "a confidence half-width needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    Ok((m, Z_95 * var.sqrt() / n.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_has_zero_width() {
        assert_eq!(confidence_interval(&[1.0; 10]).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn two_point_sample() {
        let (m, h) = confidence_interval(&[0.0, 1.0]).unwrap();
        assert_eq!(m, 0.5);
        // s = sqrt(0.5)
        assert!((h - 1.96 * 0.5f64.sqrt() / 2f64.sqrt()).abs() < 1e-15);
        assert!((h - 0.98).abs() < 1e-12);
    }

    #[test]
    fn single_value_has_mean_but_no_width() {
        assert_eq!(mean(&[0.7]).unwrap(), 0.7);
        assert!(confidence_interval(&[0.7]).is_err());
        assert!(mean(&[]).is_err());
    }
}
