use crate::error::{Error, Result};
use crate::grid::{norm_lq_weighted, Field};
use crate::nonlinearity::SourceSpec;
use crate::scalar::Real;

/// `|f_n(u) - f(u)|_{L^m̃}` at truncation level `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow<T> {
    pub level: T,
    pub value: T,
}

/// Distance between the truncated and the full source for each level, in
/// the order given. The levels' own truncation in `src` is ignored.
pub fn fn_convergence_check<T: Real>(u: &Field<T>, src: &SourceSpec<T>, mtilde: T, levels: &[T]) -> Result<Vec<DecayRow<T>>> {
    if !u.is_finite() {
        return Err(Error::Precondition("field is not finite".into()));
    }
    let full = src.untruncated();
    let w = u.grid.weights();
    let exact: Vec<T> = u.values.iter().map(|&x| full.eval(x)).collect();
    levels
        .iter()
        .map(|&n| {
            let fnn = full.truncated(n)?;
            let diff: Vec<T> = u.values.iter().zip(&exact).map(|(&x, &e)| fnn.eval(x) - e).collect();
            Ok(DecayRow { level: n, value: norm_lq_weighted(&diff, &w, mtilde)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::nonlinearity::{build_cutoff_eta, Sign};

    fn field_with_max(peak: f64) -> Field<f64> {
        let g = GridSpec::line(0.0, 1.0, 1.0 / 256.0, 1.0 / 256.0).unwrap();
        Field::from_fn(g, |x| peak * (1.0 - x[0] * x[0]) * (1.0 + 0.3 * (7.0 * x[0]).sin()) / 1.3).with_dirichlet()
    }

    #[test]
    fn exact_zero_once_level_covers_range() {
        let u = field_with_max(5.0);
        let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
        let rows = fn_convergence_check(&u, &src, 4.0 / 3.0, &[5.0, 8.0, 16.0]).unwrap();
        assert!(rows.iter().all(|r| r.value == 0.0));
    }

    #[test]
    fn monotone_in_level() {
        let u = field_with_max(5.0);
        let src = SourceSpec::new(4.5, 1.0, Sign::Minus).unwrap();
        let levels = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0];
        let rows = fn_convergence_check(&u, &src, 1.5, &levels).unwrap();
        assert!(rows.windows(2).all(|w| w[1].value <= w[0].value));
        assert!(rows[0].value > 0.0);
    }

    #[test]
    fn level_one_matches_direct_quadrature() {
        let u = field_with_max(5.0);
        let src = SourceSpec::new(3.0, 2.0, Sign::Plus).unwrap();
        let q = 2.0;
        let rows = fn_convergence_check(&u, &src, q, &[1.0]).unwrap();
        // oracle: |f (1 - η)| over the exceedance set, plain dual-cell sum
        let eta = build_cutoff_eta(1.0).unwrap();
        let h = u.grid.h;
        let mut acc = 0.0;
        for (i, &x) in u.values.iter().enumerate() {
            if x.abs() > 1.0 {
                let w = if i == 0 || i + 1 == u.values.len() { h / 2.0 } else { h };
                let f = 2.0 * x.abs().powi(2) * x;
                acc += w * (f * (1.0 - eta.eval(x))).abs().powf(q);
            }
        }
        assert!((rows[0].value - acc.powf(1.0 / q)).abs() <= 1e-10 * acc.sqrt());
    }
}
