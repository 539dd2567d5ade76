//! Coefficients `z_A` for the coalescing and annihilating dual processes.
//!
//! Both linear systems have one free parameter. Along it every `z_A` is affine,
//! so `sum |z_A|` is convex and piecewise linear and its minimum sits at a
//! point where some coefficient vanishes. A certificate of ergodicity is a
//! solution with `sum |z_A| < 1`.

use serde::{Deserialize, Serialize};

use crate::model::Params;

/// Below this distance a parameter sits on a degenerate branch.
pub const BRANCH_EPS: f64 = 1e-12;

/// Certificates must beat 1 by this margin, so exact boundary points fail.
pub const CERTIFICATE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualityKind {
    Coalescing,
    Annihilating,
}

/// Which parametrization of the solution set was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualityBranch {
    /// Free `z_empty` (coalescing with `p3 < 1`, annihilating with `sum p != 2`).
    Generic,
    /// Coalescing with `p3 = 1`: `z_empty = 0`, free `z_0`.
    TopCertain,
    /// Annihilating with `sum p = 2`, `p0 + p1 != 1`: `z_empty = 0`, free `z_minus1`.
    BalancedSum,
    /// Annihilating with `p0 + p1 = 1` and `p2 + p3 = 1`: free `z_0`.
    ComplementaryPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityCoefficients {
    pub kind: DualityKind,
    pub branch: DualityBranch,
    pub z_empty: f64,
    pub z_minus1: f64,
    pub z_0: f64,
    pub z_1: f64,
    pub z_minus1_1: f64,
    pub l1_sum: f64,
}

impl DualityCoefficients {
    fn from_array(kind: DualityKind, branch: DualityBranch, z: [f64; 5]) -> Self {
        DualityCoefficients {
            kind,
            branch,
            z_empty: z[0],
            z_minus1: z[1],
            z_0: z[2],
            z_1: z[3],
            z_minus1_1: z[4],
            l1_sum: l1(&z),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.z_empty,
            self.z_minus1,
            self.z_0,
            self.z_1,
            self.z_minus1_1,
        ]
    }

    /// The parameter vector these coefficients encode, read off the defining
    /// linear system.
    pub fn reproduce(&self) -> [f64; 4] {
        let [ze, zm, z0, z1, zb] = self.as_array();
        let d = 1.0 - z0;
        match self.kind {
            DualityKind::Coalescing => [
                (1.0 - (ze + zm + z0 + z1 + zb)) / d,
                (1.0 - (ze + zm + z0)) / d,
                (1.0 - (ze + z0 + z1)) / d,
                (1.0 - (ze + z0)) / d,
            ],
            DualityKind::Annihilating => [
                (1.0 + ze - zm - z0 - z1 + zb) / (2.0 * d),
                (1.0 + ze - zm - z0 + z1 - zb) / (2.0 * d),
                (1.0 + ze + zm - z0 - z1 - zb) / (2.0 * d),
                (1.0 + ze + zm - z0 + z1 + zb) / (2.0 * d),
            ],
        }
    }

    /// Max-norm distance between [`reproduce`](Self::reproduce) and `p`.
    pub fn reproduction_error(&self, p: &Params) -> f64 {
        self.reproduce()
            .iter()
            .zip(p.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whether the L1 sum meets the strict certificate bound.
    pub fn certifies(&self) -> bool {
        self.l1_sum < 1.0 - CERTIFICATE_MARGIN
    }

    /// `z_minus1_1 / z_empty`, when `z_empty` is nonzero.
    pub fn pair_to_empty_ratio(&self) -> Option<f64> {
        (self.z_empty != 0.0).then(|| self.z_minus1_1 / self.z_empty)
    }

    /// On the boundary `l1_sum = 1`, ergodicity still follows when
    /// `|z_empty| > |z_minus1_1|`. Reported as a diagnostic only.
    pub fn boundary_refinement_holds(&self) -> bool {
        (self.l1_sum - 1.0).abs() <= 1e-9 && self.z_empty.abs() > self.z_minus1_1.abs()
    }
}

fn l1(z: &[f64; 5]) -> f64 {
    z.iter().map(|x| x.abs()).sum()
}

/// `z(t) = base + t * slope` for `t` in the open interval `(lo, hi)`.
struct Line {
    base: [f64; 5],
    slope: [f64; 5],
    lo: f64,
    hi: f64,
}

impl Line {
    fn at(&self, t: f64) -> [f64; 5] {
        std::array::from_fn(|k| self.base[k] + t * self.slope[k])
    }

    /// Minimizer of the L1 sum among the kinks inside the interval and its
    /// midpoint. At either open endpoint `|z_0| = 1`, so nothing there could
    /// certify anyway.
    fn minimize(&self) -> [f64; 5] {
        let mut best_t = 0.5 * (self.lo + self.hi);
        let mut best = l1(&self.at(best_t));
        for k in 0..5 {
            if self.slope[k] == 0.0 {
                continue;
            }
            let t = -self.base[k] / self.slope[k];
            if t > self.lo && t < self.hi {
                let v = l1(&self.at(t));
                if v < best {
                    best = v;
                    best_t = t;
                }
            }
        }
        let mut z = self.at(best_t);
        // The kink that was hit is an exact zero, not rounding noise.
        for k in 0..5 {
            if self.slope[k] != 0.0 && (best_t + self.base[k] / self.slope[k]).abs() == 0.0 {
                z[k] = 0.0;
            }
        }
        z
    }
}

/// Best coalescing solution, whether or not it certifies.
pub fn coalescing_minimizer(p: &Params) -> DualityCoefficients {
    let [p0, p1, p2, p3] = p.as_array();
    let kind = DualityKind::Coalescing;
    if 1.0 - p3 <= BRANCH_EPS {
        // Free z_0 in (-1, 1); every other coefficient scales with 1 - z_0.
        let line = Line {
            base: [0.0, 1.0 - p1, 0.0, 1.0 - p2, -(1.0 + p0 - p1 - p2)],
            slope: [0.0, -(1.0 - p1), 1.0, -(1.0 - p2), 1.0 + p0 - p1 - p2],
            lo: -1.0,
            hi: 1.0,
        };
        return DualityCoefficients::from_array(kind, DualityBranch::TopCertain, line.minimize());
    }
    let r = 1.0 - p3;
    // Free z_empty in (0, 2(1 - p3)), where |z_0| < 1.
    let line = Line {
        base: [0.0, 0.0, 1.0, 0.0, 0.0],
        slope: [
            1.0,
            (p3 - p1) / r,
            -1.0 / r,
            (p3 - p2) / r,
            (p1 + p2 - p0 - p3) / r,
        ],
        lo: 0.0,
        hi: 2.0 * r,
    };
    DualityCoefficients::from_array(kind, DualityBranch::Generic, line.minimize())
}

/// Best annihilating solution, whether or not it certifies.
pub fn annihilating_minimizer(p: &Params) -> DualityCoefficients {
    let [p0, p1, p2, p3] = p.as_array();
    let kind = DualityKind::Annihilating;
    let sigma = p0 + p1 + p2 + p3 - 2.0;
    if sigma.abs() > BRANCH_EPS {
        // z_empty = sigma * s with s in (0, 1).
        let line = Line {
            base: [0.0, 0.0, 1.0, 0.0, 0.0],
            slope: [
                sigma,
                p2 + p3 - p0 - p1,
                -2.0,
                p1 + p3 - p0 - p2,
                p0 + p3 - p1 - p2,
            ],
            lo: 0.0,
            hi: 1.0,
        };
        return DualityCoefficients::from_array(kind, DualityBranch::Generic, line.minimize());
    }
    let d = 1.0 - p0 - p1;
    if d.abs() > BRANCH_EPS {
        // z_minus1 = d * s with s in (0, 2).
        let line = Line {
            base: [0.0, 0.0, 1.0, 0.0, 0.0],
            slope: [0.0, d, -1.0, 1.0 - p0 - p2, 1.0 - p1 - p2],
            lo: 0.0,
            hi: 2.0,
        };
        return DualityCoefficients::from_array(kind, DualityBranch::BalancedSum, line.minimize());
    }
    // Free z_0 in (-1, 1).
    let line = Line {
        base: [0.0, 0.0, 0.0, p3 - p0, p0 + p3 - 1.0],
        slope: [0.0, 0.0, 1.0, -(p3 - p0), -(p0 + p3 - 1.0)],
        lo: -1.0,
        hi: 1.0,
    };
    DualityCoefficients::from_array(kind, DualityBranch::ComplementaryPairs, line.minimize())
}

/// A coalescing-duality certificate, if one exists.
pub fn solve_coalescing(p: &Params) -> Option<DualityCoefficients> {
    Some(coalescing_minimizer(p)).filter(DualityCoefficients::certifies)
}

/// An annihilating-duality certificate, if one exists.
pub fn solve_annihilating(p: &Params) -> Option<DualityCoefficients> {
    Some(annihilating_minimizer(p)).filter(DualityCoefficients::certifies)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: [f64; 4]) -> Params {
        Params::from_array(p).unwrap()
    }

    #[test]
    fn unit_l1_vector_is_inconclusive() {
        let p = params([1.0, 4.0 / 25.0, 4.0 / 25.0, 7.0 / 10.0]);
        assert!(solve_annihilating(&p).is_none());
        let z = annihilating_minimizer(&p);
        assert!((z.pair_to_empty_ratio().unwrap() - 69.0).abs() < 1e-9);
        assert!((z.l1_sum - 1.0).abs() < 1e-12);
        assert!(!z.boundary_refinement_holds());
        assert!(z.reproduction_error(&p) < 1e-10);
    }

    #[test]
    fn top_certain_branch() {
        let p = params([0.25, 0.75, 0.75, 1.0]);
        let z = solve_coalescing(&p).expect("certificate");
        assert_eq!(z.branch, DualityBranch::TopCertain);
        assert_eq!(z.z_empty, 0.0);
        // |1 - p1| + |1 - p2| + |1 + p0 - p1 - p2| = 0.25 + 0.25 + 0.25.
        assert!((z.l1_sum - 0.75).abs() < 1e-12);
        assert!(z.reproduction_error(&p) < 1e-10);
    }

    #[test]
    fn complementary_pairs_branch() {
        let p = params([0.3, 0.7, 0.6, 0.4]);
        let z = solve_annihilating(&p).expect("certificate");
        assert_eq!(z.branch, DualityBranch::ComplementaryPairs);
        assert!(z.reproduction_error(&p) < 1e-10);
    }

    #[test]
    fn balanced_sum_branch() {
        let p = params([0.2, 0.5, 0.6, 0.7]);
        let z = solve_annihilating(&p).expect("certificate");
        assert_eq!(z.branch, DualityBranch::BalancedSum);
        assert!(z.reproduction_error(&p) < 1e-10);
    }

    #[test]
    fn generic_minimum_matches_closed_form_sums() {
        // Coalescing: 1 + |p3-p1| + |p3-p2| + |p1+p2-p0-p3| - p3 at z_0 = 0.
        let p = params([0.3, 0.55, 0.6, 0.65]);
        let z = coalescing_minimizer(&p);
        let expect = 1.0 + 0.1 + 0.05 + (0.55f64 + 0.6 - 0.3 - 0.65).abs() - 0.65;
        assert!((z.l1_sum - expect).abs() < 1e-12);
        assert_eq!(z.z_0, 0.0);
        // Annihilating: half the sum of the four coefficient magnitudes.
        let z = annihilating_minimizer(&p);
        let [a, b, c, d] = [0.3, 0.55, 0.6, 0.65];
        let k: f64 = (a + b + c + d - 2.0f64).abs()
            + (c + d - a - b).abs()
            + (b + d - a - c).abs()
            + (a + d - b - c).abs();
        assert!((z.l1_sum - k / 2.0).abs() < 1e-12);
    }
}
