use crate::error::{Error, Result};
use crate::grid::{interpolation_norm, norm_lq_weighted, Field};
use crate::scalar::Real;

use super::source::SourceSpec;

/// Empirical Lipschitz ratios of `f_n` for one pair of fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzSample<T> {
    /// `|f_n(u) - f_n(v)|_{(m+1)/m} / ‖u - v‖_{H^{1-ε}}`.
    pub fractional_ratio: T,
    /// `|f_n(u) - f_n(v)|_2 / ‖u - v‖_{H¹}`.
    pub energy_ratio: T,
}

/// Measures both difference quotients of the source for the pair `(u, v)`.
///
/// Returns `Ok(None)` when the pair is degenerate (`u = v`). The exponent `m`
/// enters only through the target space `L^{(m+1)/m}`.
pub fn lipschitz_probe<T: Real>(
    src: &SourceSpec<T>,
    m: T,
    u: &Field<T>,
    v: &Field<T>,
    eps: T,
) -> Result<Option<LipschitzSample<T>>> {
    if u.grid != v.grid {
        return Err(Error::Precondition("probe fields must share a grid".into()));
    }
    if !(m > T::zero()) {
        return Err(Error::Domain(format!("target space needs m > 0, got {m}")));
    }
    let diff = u.zip_map(v, |a, b| a - b);
    if diff.values.iter().all(|&d| d == T::zero()) {
        return Ok(None);
    }
    let w = u.grid.weights();
    let df: Vec<T> = u.values.iter().zip(&v.values).map(|(&a, &b)| src.eval(a) - src.eval(b)).collect();
    let q = (m + T::one()) / m;
    let num_frac = norm_lq_weighted(&df, &w, q)?;
    let num_l2 = norm_lq_weighted(&df, &w, T::lit(2.0))?;
    let h1 = diff.norm_h1();
    let frac = interpolation_norm(diff.norm_l2(), h1, eps);
    Ok(Some(LipschitzSample { fractional_ratio: num_frac / frac, energy_ratio: num_l2 / h1 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::nonlinearity::Sign;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec<f64> {
        GridSpec::line(0.0, 1.0, 1.0 / 64.0, 1.0 / 128.0).unwrap()
    }

    fn random_field(rng: &mut ChaCha8Rng, amp: f64) -> Field<f64> {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        Field::from_fn(grid(), |x| {
            let s = std::f64::consts::PI * (x[0] + 1.0) / 2.0;
            amp * (c[0] * s.sin() + c[1] * (2.0 * s).sin() + c[2] * (3.0 * s).sin() + c[3] * (5.0 * s).sin())
        })
    }

    #[test]
    fn degenerate_pair_skipped() {
        let f = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap().truncated(2.0).unwrap();
        let u = Field::from_fn(grid(), |x| 1.0 - x[0] * x[0]);
        assert_eq!(lipschitz_probe(&f, 2.0, &u, &u.clone(), 0.2).unwrap(), None);
    }

    #[test]
    fn plateau_pairs_match_untruncated() {
        let f = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
        let fnn = f.truncated(5.0).unwrap();
        let u = Field::from_fn(grid(), |x| 2.0 * (1.0 - x[0] * x[0]));
        let v = Field::from_fn(grid(), |x| 1.5 * (1.0 - x[0] * x[0]).powi(2));
        let a = lipschitz_probe(&fnn, 2.0, &u, &v, 0.2).unwrap().unwrap();
        let b = lipschitz_probe(&f, 2.0, &u, &v, 0.2).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ratios_bounded_and_stable_in_n() {
        // Monte-Carlo pairs inside an H¹ ball; max ratio must stay finite and not
        // grow once the level covers the sampled amplitudes.
        let f = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
        let mut maxima = Vec::new();
        for n in [1.0, 2.0, 4.0, 8.0] {
            let fnn = f.truncated(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut max = 0.0f64;
            for _ in 0..100 {
                let u = random_field(&mut rng, 1.0);
                let v = random_field(&mut rng, 1.0);
                if let Some(s) = lipschitz_probe(&fnn, 2.0, &u, &v, 0.25).unwrap() {
                    assert!(s.fractional_ratio.is_finite() && s.energy_ratio.is_finite());
                    max = max.max(s.fractional_ratio).max(s.energy_ratio);
                }
            }
            maxima.push(max);
        }
        assert!(maxima.iter().all(|m| *m < 1e3), "{maxima:?}");
        assert_eq!(maxima[2], maxima[3], "levels above the sampled range agree");
    }
}
