use crate::scalar::Real;

use super::damping::DampingSpec;
use super::source::SourceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfBranch {
    /// `1 < p ≤ 3`, any `m ≥ 0`.
    A,
    /// `p + p/m < 6/(1 + 2ε)` for the recorded `ε`.
    B,
    Neither,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport<T> {
    pub ag_ok: bool,
    pub af_branch: AfBranch,
    /// Witness for branch B.
    pub epsilon: Option<T>,
    pub details: Vec<String>,
}

/// Number of halvings tried when searching an `ε` witness.
pub const EPSILON_SEARCH_DEPTH: i32 = 40;

/// Validates the damping and source assumptions for a parameter pair.
///
/// The damping is sampled for oddness, monotonicity and the two-sided growth
/// bound on `1 < |s| ≤ 10⁶`. For the source, branch A is reported when
/// `1 < p ≤ 3`; otherwise the `ε` grid `2^{-k}`, `k = 1..40`, is scanned and
/// the largest passing value is kept as the branch-B witness.
pub fn check_assumptions<T: Real>(src: &SourceSpec<T>, dmp: &DampingSpec<T>) -> AssumptionReport<T> {
    let mut details = Vec::new();
    let ag_ok = check_damping(dmp, &mut details);

    let p = src.p;
    let m = dmp.m;
    let (af_branch, epsilon) = if p > T::one() && p <= T::lit(3.0) {
        details.push(format!("(A_f)(a): 1 < p = {p} <= 3"));
        (AfBranch::A, None)
    } else if m > T::zero() {
        let lhs = p + p / m;
        let witness = (1..=EPSILON_SEARCH_DEPTH)
            .map(|k| T::lit(2f64.powi(-k)))
            .find(|&eps| lhs < T::lit(6.0) / (T::one() + eps + eps));
        match witness {
            Some(eps) => {
                details.push(format!("(A_f)(b): p + p/m = {lhs} < 6/(1+2ε) with ε = {eps}"));
                (AfBranch::B, Some(eps))
            }
            None => {
                details.push(format!("(A_f) fails: p + p/m = {lhs} is not below 6/(1+2ε) for any searched ε"));
                (AfBranch::Neither, None)
            }
        }
    } else {
        details.push(format!("(A_f) fails: p = {p} outside (1, 3] and m = 0"));
        (AfBranch::Neither, None)
    };

    AssumptionReport { ag_ok, af_branch, epsilon, details }
}

fn check_damping<T: Real>(dmp: &DampingSpec<T>, details: &mut Vec<String>) -> bool {
    let mut ok = true;
    if dmp.eval(T::zero()) != T::zero() {
        details.push("(A_g): g(0) != 0".into());
        ok = false;
    }
    if dmp.l_m > dmp.upper_l_m || !(dmp.l_m > T::zero()) {
        details.push("(A_g): need 0 < l_m <= L_m".into());
        ok = false;
    }
    let samples: Vec<T> = (0..=200)
        .map(|i| T::lit(10f64.powf(6.0 * i as f64 / 200.0)))
        .map(|s| if s <= T::one() { s + T::lit(1e-9) } else { s })
        .collect();
    let tol = T::lit(1e-12);
    let mut prev = T::zero();
    for &s in &samples {
        let g = dmp.eval(s);
        if dmp.eval(-s) != -g {
            details.push(format!("(A_g): g not odd at {s}"));
            ok = false;
            break;
        }
        if g < prev {
            details.push(format!("(A_g): g decreasing near {s}"));
            ok = false;
            break;
        }
        prev = g;
        let gs = g * s;
        let pow = s.powf(dmp.m + T::one());
        if gs < dmp.l_m * pow * (T::one() - tol) || gs > dmp.upper_l_m * pow * (T::one() + tol) {
            details.push(format!("(A_g): growth bound violated at {s}"));
            ok = false;
            break;
        }
    }
    if ok {
        details.push(format!("(A_g) holds: m = {}, l_m = {}, L_m = {}", dmp.m, dmp.l_m, dmp.upper_l_m));
    }
    ok
}
