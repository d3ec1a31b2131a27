use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided Student-t p-value of `t` with `df` degrees of freedom.
pub(crate) fn student_t_p_value(t: f64, df: f64) -> Option<f64> {
    if t.is_infinite() {
        return Some(0.0);
    }
    if t.is_nan() {
        return Some(1.0);
    }
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetry() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for x in [0.1, 0.7, 1.5, 3.2, 6.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tails() {
        assert_eq!(normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(normal_cdf(f64::NEG_INFINITY), 0.0);
        assert!(normal_cdf(-40.0) >= 0.0);
    }

    #[test]
    fn t_p_value_approaches_normal_for_large_df() {
        let p = student_t_p_value(1.959964, 1e7).unwrap();
        assert!((p - 0.05).abs() < 1e-5);
        assert!(student_t_p_value(1.959964, 5.0).unwrap() > 0.05);
    }
}
