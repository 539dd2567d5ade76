//! Cumulative expected profit, the closed form for `p0 = 1, p3 = 0`, and the
//! Parrondo comparison between game B and the fair mixture C.

use serde::{Deserialize, Serialize};

use super::{classify_ergodicity, stationary, ChainSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitPoint {
    /// Number of rounds of `n` turns.
    pub n: usize,
    pub mean_profit_per_player: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitCurve {
    pub players: u32,
    pub n_turns_per_point: usize,
    /// Starts at `(0, 0)`, followed by one point per round.
    pub points: Vec<ProfitPoint>,
}

impl ProfitCurve {
    /// Least-squares slope over the last `k` points.
    pub fn terminal_slope(&self, k: usize) -> Option<f64> {
        let tail = &self.points[self.points.len().saturating_sub(k)..];
        let xs: Vec<f64> = tail.iter().map(|p| p.n as f64).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.mean_profit_per_player).collect();
        crate::numeric::fit_line(&xs, &ys).map(|f| f.slope)
    }
}

pub fn profit_curve(spec: &ChainSpec, n_points: usize) -> Result<ProfitCurve> {
    profit_curve_with(spec, n_points, Exec::default())
}

/// `n^{-1} E[S_{kn}]` for `k = 0..=n_points`, starting from the uniform
/// distribution and iterating `v -> vP` one turn at a time.
pub fn profit_curve_with(spec: &ChainSpec, n_points: usize, exec: Exec) -> Result<ProfitCurve> {
    let dim = spec.states();
    let n = spec.n as usize;
    let payoff: Vec<f64> = exec.map(dim, |x| spec.payoff(x as u64));
    let mut v = vec![1.0 / dim as f64; dim];
    let mut next = vec![0.0; dim];
    let mut points = Vec::with_capacity(n_points + 1);
    points.push(ProfitPoint {
        n: 0,
        mean_profit_per_player: 0.0,
    });
    let mut total = 0.0;
    for k in 1..=n_points {
        for _ in 0..n {
            total += exec.sum(dim, |x| v[x] * payoff[x]);
            super::apply_transition_into(spec, &v, &mut next, exec)?;
            std::mem::swap(&mut v, &mut next);
        }
        points.push(ProfitPoint {
            n: k,
            mean_profit_per_player: total / n as f64,
        });
    }
    Ok(ProfitCurve {
        players: spec.n,
        n_turns_per_point: n,
        points,
    })
}

/// Mean profit per turn for parameters `(1, p1, p2, 0)`.
///
/// Even rings freeze in an alternating state where every turn is a fair coin;
/// odd rings keep one defect pair that wanders around the ring.
pub fn closed_form_special(n: u32, p1: f64, p2: f64) -> Result<f64> {
    let sum = p1 + p2;
    let valid = (0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2);
    if !valid || sum <= 0.0 || sum >= 2.0 {
        return Err(Error::NotSpecialCase {
            p0: 1.0,
            p1,
            p2,
            p3: 0.0,
        });
    }
    crate::model::check_ring_size(n)?;
    Ok(if n % 2 == 0 {
        0.0
    } else {
        (sum - 1.0) / n as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    /// B losing or fair, C winning.
    Present,
    Absent,
    /// B winning or fair, C losing.
    Anti,
    /// Game B has no well-defined mean.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuSource {
    Stationary,
    ClosedForm,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParrondoReport {
    pub n: u32,
    pub params: Params,
    pub mu_b: Option<f64>,
    pub mu_b_source: MuSource,
    pub mu_c: f64,
    pub effect: Effect,
}

/// Values within this distance of zero count as zero when comparing signs.
pub const ZERO_TOLERANCE: f64 = 1e-12;

pub fn classify_effect(mu_b: Option<f64>, mu_c: f64) -> Effect {
    let Some(b) = mu_b else {
        return Effect::Undefined;
    };
    if b <= ZERO_TOLERANCE && mu_c > ZERO_TOLERANCE {
        Effect::Present
    } else if b >= -ZERO_TOLERANCE && mu_c < -ZERO_TOLERANCE {
        Effect::Anti
    } else {
        Effect::Absent
    }
}

pub fn parrondo_check(n: u32, params: Params) -> Result<ParrondoReport> {
    let spec_c = ChainSpec::new(n, params.mix_with_fair())?;
    let verdict_c = classify_ergodicity(&spec_c);
    if !verdict_c.ergodic {
        return Err(Error::GameCNotErgodic(Box::new(verdict_c)));
    }
    let mu_c = stationary(&spec_c)?.mu;

    let spec_b = ChainSpec::new(n, params)?;
    let [p0, p1, p2, p3] = params.as_array();
    let (mu_b, mu_b_source) = if classify_ergodicity(&spec_b).ergodic {
        (Some(stationary(&spec_b)?.mu), MuSource::Stationary)
    } else {
        match (p0 == 1.0 && p3 == 0.0)
            .then(|| closed_form_special(n, p1, p2).ok())
            .flatten()
        {
            Some(mu) => (Some(mu), MuSource::ClosedForm),
            None => (None, MuSource::Unavailable),
        }
    };
    Ok(ParrondoReport {
        n,
        params,
        mu_b,
        mu_b_source,
        mu_c,
        effect: classify_effect(mu_b, mu_c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: [f64; 4]) -> Params {
        Params::from_array(p).unwrap()
    }

    #[test]
    fn closed_form_values() {
        assert!((closed_form_special(13, 0.75, 0.75).unwrap() - 1.0 / 26.0).abs() < 1e-15);
        assert_eq!(closed_form_special(12, 0.2, 0.9).unwrap(), 0.0);
        assert!((closed_form_special(5, 0.9, 0.3).unwrap() - 0.04).abs() < 1e-15);
        assert!(closed_form_special(5, 0.0, 0.0).is_err());
        assert!(closed_form_special(5, 1.0, 1.0).is_err());
    }

    #[test]
    fn fair_curve_is_flat() {
        let spec = ChainSpec::new(3, Params::fair()).unwrap();
        let curve = profit_curve(&spec, 10).unwrap();
        assert_eq!(curve.points.len(), 11);
        assert_eq!(curve.points[0].mean_profit_per_player, 0.0);
        assert!(curve
            .points
            .iter()
            .all(|p| p.mean_profit_per_player.abs() < 1e-15));
    }

    #[test]
    fn one_point_is_first_round() {
        let spec = ChainSpec::new(4, params([0.1, 0.7, 0.4, 0.9])).unwrap();
        let curve = profit_curve(&spec, 1).unwrap();
        let mut v = vec![1.0 / 16.0; 16];
        let mut total = 0.0;
        for _ in 0..4 {
            total += (0..16).map(|x| v[x] * spec.payoff(x as u64)).sum::<f64>();
            v = super::super::apply_transition(&spec, &v).unwrap();
        }
        assert_eq!(curve.points.len(), 2);
        assert!((curve.points[1].mean_profit_per_player - total / 4.0).abs() < 1e-15);
    }

    #[test]
    fn even_ring_shows_effect() {
        let r = parrondo_check(12, params([1.0, 0.75, 0.75, 0.0])).unwrap();
        assert_eq!(r.mu_b, Some(0.0));
        assert_eq!(r.mu_b_source, MuSource::ClosedForm);
        assert!((r.mu_c - 0.0766019).abs() < 5e-7);
        assert_eq!(r.effect, Effect::Present);
    }

    #[test]
    fn odd_ring_has_no_effect() {
        let r = parrondo_check(13, params([1.0, 0.75, 0.75, 0.0])).unwrap();
        assert_eq!(r.mu_b_source, MuSource::Stationary);
        assert!((r.mu_b.unwrap() - 1.0 / 26.0).abs() < 1e-10);
        assert_eq!(r.effect, Effect::Absent);
    }

    #[test]
    fn reflected_vector_shows_anti_effect() {
        let lambda = params([1.0, 0.75, 0.75, 0.0]).involution_lambda();
        let r = parrondo_check(12, lambda).unwrap();
        assert_eq!(r.effect, Effect::Anti);
    }

    #[test]
    fn undefined_without_mean() {
        let r = parrondo_check(6, params([0.0, 0.5, 0.5, 1.0])).unwrap();
        assert_eq!(r.mu_b, None);
        assert_eq!(r.effect, Effect::Undefined);
    }
}
