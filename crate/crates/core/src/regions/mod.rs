//! Sufficient conditions for ergodicity of the spin system on the integer
//! lattice, where site `i` flips at rate `p_m` from 0 and `q_m` from 1.
//!
//! * (a) the basic high-noise estimate;
//! * (b) attractiveness or repulsiveness with positive rates;
//! * (c) coalescing duality;
//! * (d) annihilating duality.
//!
//! Because `mu(p) = -mu(lambda(p))`, the spin system for `p` is ergodic
//! whenever the one for `lambda(p)` is, which adds the image of (c).

mod duality;
mod volume;

pub use duality::{
    annihilating_minimizer, coalescing_minimizer, solve_annihilating, solve_coalescing,
    DualityBranch, DualityCoefficients, DualityKind, BRANCH_EPS, CERTIFICATE_MARGIN,
};
pub use volume::{estimate_volumes, Region, VolumeDim, VolumeEstimate, VolumeTable, MIN_SAMPLES};

use serde::{Deserialize, Serialize};

use crate::model::Params;

pub fn cond_a(p: &Params) -> bool {
    a(p.as_array())
}

pub fn cond_b(p: &Params) -> bool {
    b(p.as_array())
}

pub fn cond_c(p: &Params) -> bool {
    c(p.as_array())
}

pub fn cond_d(p: &Params) -> bool {
    d(p.as_array())
}

pub(crate) fn a([p0, p1, p2, p3]: [f64; 4]) -> bool {
    (p0 - p1).abs().max((p2 - p3).abs()) + (p0 - p2).abs().max((p1 - p3).abs()) < 1.0
}

pub(crate) fn b([p0, p1, p2, p3]: [f64; 4]) -> bool {
    let (lo, hi) = (p0.min(p3), p0.max(p3));
    0.0 < lo && lo <= p1.min(p2) && p1.max(p2) <= hi && hi < 1.0
}

pub(crate) fn c([p0, p1, p2, p3]: [f64; 4]) -> bool {
    let s = p1 + p2 - p3;
    let hi = p1.max(p2).max(p3).max(s);
    let lo = p1.min(p2).min(p3).min(s);
    hi - p3 < p0 / 2.0 && p0 / 2.0 < lo
}

pub(crate) fn d(p: [f64; 4]) -> bool {
    let mean = p.iter().sum::<f64>() / 4.0;
    p.iter()
        .all(|&x| x > 2.0 * mean - 1.0 && x < 2.0 * mean && x > 0.0 && x < 1.0)
}

pub(crate) fn lambda([p0, p1, p2, p3]: [f64; 4]) -> [f64; 4] {
    [1.0 - p3, 1.0 - p2, 1.0 - p1, 1.0 - p0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub params: Params,
    pub cond_a: bool,
    pub cond_b: bool,
    pub cond_c: bool,
    pub cond_d: bool,
    /// Condition (c) holds for `lambda(p)`.
    pub cond_c_lambda: bool,
    pub ergodic_certified: bool,
    pub coalescing: Option<DualityCoefficients>,
    pub annihilating: Option<DualityCoefficients>,
    /// Coalescing certificate for `lambda(p)`.
    pub coalescing_lambda: Option<DualityCoefficients>,
    /// The best annihilating solution when none certifies, for diagnosis.
    pub annihilating_best: DualityCoefficients,
}

pub fn region_report(p: &Params) -> RegionReport {
    let lp = p.involution_lambda();
    let flags = [cond_a(p), cond_b(p), cond_c(p), cond_d(p), cond_c(&lp)];
    RegionReport {
        params: *p,
        cond_a: flags[0],
        cond_b: flags[1],
        cond_c: flags[2],
        cond_d: flags[3],
        cond_c_lambda: flags[4],
        ergodic_certified: flags.iter().any(|&f| f),
        coalescing: solve_coalescing(p),
        annihilating: solve_annihilating(p),
        coalescing_lambda: solve_coalescing(&lp),
        annihilating_best: annihilating_minimizer(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: [f64; 4]) -> Params {
        Params::from_array(p).unwrap()
    }

    fn flags(p: [f64; 4]) -> [bool; 4] {
        let p = params(p);
        [cond_a(&p), cond_b(&p), cond_c(&p), cond_d(&p)]
    }

    #[test]
    fn each_condition_alone() {
        assert_eq!(flags([0.25, 0.25, 0.25, 0.0]), [true, false, false, false]);
        assert_eq!(flags([0.25, 0.25, 0.25, 0.75]), [false, true, false, false]);
        assert_eq!(flags([0.25, 0.75, 0.75, 1.0]), [false, false, true, false]);
        assert_eq!(flags([0.25, 0.75, 0.75, 0.25]), [false, false, false, true]);
    }

    #[test]
    fn attractive_example_meets_three() {
        assert_eq!(flags([0.1, 0.6, 0.6, 0.75]), [false, true, true, true]);
        assert!(!cond_d(&params([1.0, 4.0 / 25.0, 4.0 / 25.0, 0.7])));
    }

    #[test]
    fn constant_vectors() {
        for x in [0.1, 0.5, 0.9] {
            let f = flags([x; 4]);
            assert!(f[0] && f[1] && f[3]);
        }
    }

    #[test]
    fn two_absorbing_states_certify_nothing() {
        let r = region_report(&params([0.0, 0.0, 0.0, 1.0]));
        assert!(!r.ergodic_certified);
        assert!(r.coalescing.is_none() && r.annihilating.is_none());
    }

    #[test]
    fn lambda_image_of_c() {
        // lambda(1/4, 1/4, 1/4, 3/4) = (1/4, 3/4, 3/4, 3/4) lies in (c).
        let r = region_report(&params([0.25, 0.25, 0.25, 0.75]));
        assert!(r.cond_c_lambda && !r.cond_c);
        // lambda(0, 1/4, 1/4, 3/4) = (1/4, 3/4, 3/4, 1) lies in (c).
        let r = region_report(&params([0.0, 0.25, 0.25, 0.75]));
        assert!(r.cond_c_lambda && !r.cond_c);
        assert!(r.ergodic_certified);
    }
}
