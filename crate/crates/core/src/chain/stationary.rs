//! Stationary distribution of an ergodic chain and the mean profit per turn.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{apply_transition_into, classify_ergodicity, ChainSpec, ClosedClass};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{flip_prob_at, Params};

/// Closed classes up to this size are iterated as an explicit sparse matrix
/// instead of over the full `2^n` space.
pub const RESTRICT_LIMIT: usize = 1 << 17;

/// Largest class the dense solver accepts.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Power iteration on the smallest operator that covers the recurrent class.
    #[default]
    Auto,
    /// Power iteration with the matrix-free operator over all `2^n` states.
    Power,
    /// LU factorization of the restricted linear system.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptions {
    pub solver: Solver,
    /// Max-norm bound on `pi P - pi`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub exec: Exec,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            solver: Solver::Auto,
            tolerance: 1e-13,
            max_iterations: 1_000_000,
            exec: Exec::default(),
        }
    }
}

/// The mean profit per turn computed from three different functionals of `pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuFormulas {
    /// `n^{-1} sum_x pi(x) sum_i (p_m - q_m)`.
    pub site_sum: f64,
    /// `2 sum_{u,v} pi_{1,3}(u,v) p_{2u+v} - 1`.
    pub pair_marginal: f64,
    /// `2 pi_1(1) - 1`.
    pub one_site: f64,
}

impl MuFormulas {
    /// Largest pairwise disagreement.
    pub fn discrepancy(&self) -> f64 {
        let v = [self.site_sum, self.pair_marginal, self.one_site];
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryResult {
    pub n: u32,
    pub params: Params,
    /// Dense over all `2^n` states; zero off the recurrent class.
    pub pi: Vec<f64>,
    /// `[pi_1(0), pi_1(1)]`.
    pub marginal_1: [f64; 2],
    /// `marginal_13[u][v] = pi_{1,3}(u, v)`.
    pub marginal_13: [[f64; 2]; 2],
    /// The one-site value, `2 pi_1(1) - 1`.
    pub mu: f64,
    pub mu_formulas: MuFormulas,
    pub formula_discrepancy: f64,
    /// Max-norm of `pi P - pi`, measured with the full operator.
    pub residual: f64,
    pub iterations: usize,
    pub solver: Solver,
}

pub fn stationary(spec: &ChainSpec) -> Result<StationaryResult> {
    stationary_with(spec, &StationaryOptions::default())
}

pub fn stationary_with(spec: &ChainSpec, opts: &StationaryOptions) -> Result<StationaryResult> {
    let verdict = classify_ergodicity(spec);
    let class = match verdict.recurrent_class() {
        Some(c) => c.clone(),
        None => return Err(Error::NotErgodic(Box::new(verdict))),
    };
    let n = spec.n;
    let class_size = class.size(n);

    let (pi, iterations, solver) = match opts.solver {
        Solver::Dense => {
            if class_size > DENSE_LIMIT {
                return Err(Error::InvalidConfig(format!(
                    "dense solver limited to {DENSE_LIMIT} recurrent states, class has {class_size}"
                )));
            }
            let restricted = Restricted::new(spec, &class);
            (
                restricted.scatter(&restricted.dense_solve()?, spec),
                0,
                Solver::Dense,
            )
        }
        Solver::Auto if class_size <= RESTRICT_LIMIT => {
            let restricted = Restricted::new(spec, &class);
            let start = vec![1.0 / class_size as f64; class_size];
            let (v, it) = power_iterate(start, |v, out| restricted.apply(v, out, opts.exec), opts)?;
            (restricted.scatter(&v, spec), it, Solver::Auto)
        }
        _ => {
            let dim = spec.states();
            let mask: Vec<bool> = (0..dim as u64).map(|x| class.contains(n, x)).collect();
            let w = 1.0 / class_size as f64;
            let start = mask.iter().map(|&m| if m { w } else { 0.0 }).collect();
            let (v, it) = power_iterate(
                start,
                |v, out| apply_transition_into(spec, v, out, opts.exec).expect("dimensions match"),
                opts,
            )?;
            (v, it, opts.solver)
        }
    };

    let residual = transition_residual(spec, &pi, opts.exec);
    Ok(summarize(spec, pi, residual, iterations, solver, opts.exec))
}

fn summarize(
    spec: &ChainSpec,
    pi: Vec<f64>,
    residual: f64,
    iterations: usize,
    solver: Solver,
    exec: Exec,
) -> StationaryResult {
    let p = spec.params;
    let sums = exec.sum_array::<6, _>(pi.len(), |x| {
        let w = pi[x];
        let b = x as u64;
        let (u, v) = ((b & 1) as usize, ((b >> 2) & 1) as usize);
        let mut pair = [0.0; 4];
        pair[2 * u + v] = w;
        [
            w * spec.payoff(b),
            pair[0],
            pair[1],
            pair[2],
            pair[3],
            w * u as f64,
        ]
    });
    let marginal_13 = [[sums[1], sums[2]], [sums[3], sums[4]]];
    let pair_marginal =
        2.0 * (sums[1] * p.p(0) + sums[2] * p.p(1) + sums[3] * p.p(2) + sums[4] * p.p(3)) - 1.0;
    let one = sums[5];
    let total: f64 = sums[1] + sums[2] + sums[3] + sums[4];
    let mu_formulas = MuFormulas {
        site_sum: sums[0],
        pair_marginal,
        one_site: 2.0 * one - 1.0,
    };
    StationaryResult {
        n: spec.n,
        params: p,
        pi,
        marginal_1: [total - one, one],
        marginal_13,
        mu: mu_formulas.one_site,
        formula_discrepancy: mu_formulas.discrepancy(),
        mu_formulas,
        residual,
        iterations,
        solver,
    }
}

/// Max-norm of `pi P - pi` using the matrix-free operator.
pub(crate) fn transition_residual(spec: &ChainSpec, pi: &[f64], exec: Exec) -> f64 {
    let mut out = vec![0.0; pi.len()];
    apply_transition_into(spec, pi, &mut out, exec).expect("dimensions match");
    exec.max(pi.len(), |x| (out[x] - pi[x]).abs())
}

/// Iterates `v -> vP` until the residual is below tolerance and so is the
/// estimated L1 error `len * residual / (1 - rate)`, with `rate` the observed
/// contraction per step. Stops early once the residual reaches rounding level.
fn power_iterate<F>(
    mut v: Vec<f64>,
    apply: F,
    opts: &StationaryOptions,
) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let exec = opts.exec;
    let tol = opts.tolerance;
    let mut out = vec![0.0; v.len()];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        apply(&v, &mut out);
        let previous = residual;
        residual = exec.max(v.len(), |x| (out[x] - v[x]).abs());
        std::mem::swap(&mut v, &mut out);
        let rate = (residual / previous).min(1.0);
        let len = v.len() as f64;
        let done = residual <= tol
            && (len * residual <= tol * (1.0 - rate)
                || residual <= 64.0 * f64::EPSILON * exec.max(v.len(), |x| v[x]));
        if it % 64 == 0 || done {
            let total = exec.sum(v.len(), |x| v[x]);
            v.iter_mut().for_each(|x| *x /= total);
        }
        if done {
            return Ok((v, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual,
        tolerance: tol,
    })
}

/// The transition matrix restricted to one closed class, stored by columns so
/// that `v -> vP` is a gather.
struct Restricted {
    states: Vec<u64>,
    diag: Vec<f64>,
    /// Column `k` has entries `in_from[in_ptr[k]..in_ptr[k+1]]`.
    in_ptr: Vec<usize>,
    in_from: Vec<u32>,
    in_weight: Vec<f64>,
}

impl Restricted {
    fn new(spec: &ChainSpec, class: &ClosedClass) -> Self {
        let n = spec.n;
        let inv_n = 1.0 / n as f64;
        let states = class.states(n);
        let index = |x: u64| states.binary_search(&x).ok();
        let mut diag = Vec::with_capacity(states.len());
        let mut in_ptr = vec![0];
        let mut in_from = Vec::new();
        let mut in_weight = Vec::new();
        for &y in &states {
            let mut stay = 0.0;
            for i in 0..n as usize {
                let c = flip_prob_at(&spec.params, y, n, i);
                stay += c;
                if let Some(k) = index(y ^ (1 << i)) {
                    let w = (1.0 - c) * inv_n;
                    if w > 0.0 {
                        in_from.push(k as u32);
                        in_weight.push(w);
                    }
                }
            }
            diag.push(1.0 - stay * inv_n);
            in_ptr.push(in_from.len());
        }
        Restricted {
            states,
            diag,
            in_ptr,
            in_from,
            in_weight,
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64], exec: Exec) {
        exec.fill(out, |k| {
            let mut acc = v[k] * self.diag[k];
            for e in self.in_ptr[k]..self.in_ptr[k + 1] {
                acc += v[self.in_from[e] as usize] * self.in_weight[e];
            }
            acc
        });
    }

    /// Solves `pi (P - I) = 0`, `sum pi = 1` with the last balance equation
    /// replaced by the normalization.
    fn dense_solve(&self) -> Result<Vec<f64>> {
        let m = self.states.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            a[(k, k)] += self.diag[k] - 1.0;
            for e in self.in_ptr[k]..self.in_ptr[k + 1] {
                a[(k, self.in_from[e] as usize)] += self.in_weight[e];
            }
        }
        for j in 0..m {
            a[(m - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(m);
        b[m - 1] = 1.0;
        let x = a.lu().solve(&b).ok_or(Error::Singular)?;
        Ok(x.iter().map(|&p| p.max(0.0)).collect())
    }

    fn scatter(&self, v: &[f64], spec: &ChainSpec) -> Vec<f64> {
        let mut pi = vec![0.0; spec.states()];
        for (&x, &w) in self.states.iter().zip(v) {
            pi[x as usize] = w;
        }
        pi
    }
}

/// Max-norm residual of `pi*(x, i) = pi(x) / n` under the augmented chain
/// that also records which player moves next.
///
/// The augmented kernel is assembled by pushing mass forward from every
/// `(x, i)`, independently of the gather used by the solver.
pub fn augmented_chain_residual(spec: &ChainSpec, pi: &[f64]) -> Result<f64> {
    let dim = spec.states();
    if pi.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: pi.len(),
        });
    }
    let n = spec.n;
    let inv_n = 1.0 / n as f64;
    // Transitions out of (x, i) do not depend on the target's next player j,
    // so one accumulator per x serves every j.
    let mut inflow = vec![0.0; dim];
    for x in 0..dim {
        for i in 0..n as usize {
            let mass = pi[x] * inv_n;
            let c = flip_prob_at(&spec.params, x as u64, n, i);
            inflow[x ^ (1 << i)] += mass * c * inv_n;
            inflow[x] += mass * (1.0 - c) * inv_n;
        }
    }
    Ok((0..dim)
        .map(|y| (inflow[y] - pi[y] * inv_n).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u32, p: [f64; 4]) -> ChainSpec {
        ChainSpec::new(n, Params::from_array(p).unwrap()).unwrap()
    }

    #[test]
    fn constant_bias_gives_linear_mean() {
        for &p in &[0.2, 0.5, 0.9] {
            for n in [3, 6, 9] {
                let r = stationary(&spec(n, [p; 4])).unwrap();
                assert!((r.mu - (2.0 * p - 1.0)).abs() < 1e-11, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn odd_ring_special_case() {
        let r = stationary(&spec(13, [1.0, 0.75, 0.75, 0.0])).unwrap();
        assert!((r.mu - 1.0 / 26.0).abs() < 1e-10, "{}", r.mu);
        assert!(r.formula_discrepancy < 1e-11);
    }

    #[test]
    fn non_ergodic_is_refused() {
        match stationary(&spec(12, [1.0, 0.75, 0.75, 0.0])) {
            Err(Error::NotErgodic(v)) => assert!(!v.ergodic),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solvers_agree() {
        let s = spec(8, [0.15, 0.7, 0.45, 0.8]);
        let auto = stationary(&s).unwrap();
        let dense = stationary_with(
            &s,
            &StationaryOptions {
                solver: Solver::Dense,
                ..Default::default()
            },
        )
        .unwrap();
        let full = stationary_with(
            &s,
            &StationaryOptions {
                solver: Solver::Power,
                exec: Exec::Sequential,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in auto.pi.iter().zip(&dense.pi) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in auto.pi.iter().zip(&full.pi) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(dense.residual < 1e-14);
    }

    #[test]
    fn transient_states_carry_no_mass() {
        // p3 = 0 makes all-ones transient.
        let r = stationary(&spec(5, [0.4, 0.6, 0.3, 0.0])).unwrap();
        assert_eq!(r.pi[31], 0.0);
        let total: f64 = r.pi.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn augmented_chain_stationary() {
        let s = spec(6, [0.2, 0.9, 0.35, 0.6]);
        let r = stationary(&s).unwrap();
        assert!(augmented_chain_residual(&s, &r.pi).unwrap() < 1e-12);
        let mut wrong = r.pi.clone();
        wrong.swap(3, 17);
        assert!(augmented_chain_residual(&s, &wrong).unwrap() > 1e-6);
    }
}
