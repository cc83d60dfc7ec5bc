use crate::error::{Error, Result};

pub const MAX_EXACT_PAIRS: usize = 20;

/// Exact two-sided sign-flip permutation test on the mean of paired
/// differences: the fraction of all `2^n` sign assignments whose mean is at
/// least as extreme as the observed one.
pub fn paired_sign_flip_test(diffs: &[f64]) -> Result<f64> {
    let n = diffs.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > MAX_EXACT_PAIRS {
        return Err(Error::TooManySubjects(n));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("paired differences"));
    }
    let observed = diffs.iter().sum::<f64>().abs();
    // sums are compared, not means; tolerance absorbs reassociation error
    let tol = 1e-12 * diffs.iter().map(|d| d.abs()).sum::<f64>();
    let total = 1u64 << n;
    let mut extreme = 0u64;
    for signs in 0..total {
        let s: f64 = diffs
            .iter()
            .enumerate()
            .map(|(i, &d)| if signs >> i & 1 == 1 { -d } else { d })
            .sum();
        if s.abs() >= observed - tol {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / total as f64)
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05, otherwise empty.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_flip_examples() {
        assert_eq!(paired_sign_flip_test(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(paired_sign_flip_test(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.125);
        assert_eq!(paired_sign_flip_test(&[0.3]).unwrap(), 1.0);
        assert!(matches!(
            paired_sign_flip_test(&[0.1; 21]),
            Err(Error::TooManySubjects(21))
        ));
        assert!(matches!(paired_sign_flip_test(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn star_thresholds_are_strict() {
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.001), "**");
        assert_eq!(significance_stars(0.004), "**");
        assert_eq!(significance_stars(0.01), "*");
        assert_eq!(significance_stars(0.049), "*");
        assert_eq!(significance_stars(0.05), "");
        assert_eq!(significance_stars(1.0), "");
    }
}
