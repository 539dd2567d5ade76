use parrondo::chain::{profit_curve, stationary, ChainSpec};
use parrondo::{apply_transition, flip_prob, neighbor_code, Params, RingState};
use proptest::prelude::*;

fn interior() -> impl Strategy<Value = Params> {
    prop::array::uniform4(0.05f64..0.95).prop_map(|p| Params::from_array(p).unwrap())
}

/// Dense transition matrix assembled one entry at a time from the public
/// flip probabilities.
fn dense_matrix(spec: &ChainSpec) -> Vec<Vec<f64>> {
    let n = spec.n as usize;
    let dim = 1usize << n;
    let mut m = vec![vec![0.0; dim]; dim];
    for x in 0..dim {
        let s = RingState::new(spec.n, x as u64).unwrap();
        let mut stay = 1.0;
        for i in 1..=n {
            let c = flip_prob(&spec.params, s, i).unwrap() / n as f64;
            m[x][x ^ (1 << (i - 1))] += c;
            stay -= c;
        }
        m[x][x] += stay;
    }
    m
}

fn step(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (x, row) in m.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            out[y] += v[x] * p;
        }
    }
    out
}

fn payoff(spec: &ChainSpec, x: u64) -> f64 {
    let s = RingState::new(spec.n, x).unwrap();
    let n = spec.n as usize;
    (1..=n)
        .map(|i| 2.0 * spec.params.p(neighbor_code(s, i).unwrap().value()) - 1.0)
        .sum::<f64>()
        / n as f64
}

fn rotate(x: usize, n: u32) -> usize {
    ((x << 1) | (x >> (n - 1))) & ((1 << n) - 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transition_matches_dense_matrix(p in interior(), n in 3u32..=6, seed in any::<u64>()) {
        let spec = ChainSpec::new(n, p).unwrap();
        let dim = spec.states();
        let v: Vec<f64> = (0..dim).map(|k| ((seed >> (k % 60)) & 7) as f64 + 0.5).collect();
        let got = apply_transition(&spec, &v).unwrap();
        let want = step(&dense_matrix(&spec), &v);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn transition_preserves_mass(p in prop::array::uniform4(0.0f64..=1.0), n in 3u32..=12, seed in any::<u64>()) {
        let spec = ChainSpec::new(n, Params::from_array(p).unwrap()).unwrap();
        let v: Vec<f64> = (0..spec.states()).map(|k| (seed.rotate_left(k as u32) & 0xff) as f64).collect();
        let before: f64 = v.iter().sum();
        let after: f64 = apply_transition(&spec, &v).unwrap().iter().sum();
        prop_assert!(((after - before) / before.max(1.0)).abs() < 1e-14);
    }

    #[test]
    fn stationary_invariants(p in interior(), n in 3u32..=10) {
        let spec = ChainSpec::new(n, p).unwrap();
        let r = stationary(&spec).unwrap();
        prop_assert!(r.mu_formulas.discrepancy() < 1e-11);
        for x in 0..spec.states() {
            prop_assert!((r.pi[rotate(x, n)] - r.pi[x]).abs() < 1e-11);
        }
        prop_assert!(r.mu >= 2.0 * p.min() - 1.0 - 1e-12);
        prop_assert!(r.mu <= 2.0 * p.max() - 1.0 + 1e-12);
        let lam = stationary(&ChainSpec::new(n, p.involution_lambda()).unwrap()).unwrap();
        prop_assert!((r.mu + lam.mu).abs() < 1e-10);
        // The stationary vector is fixed by the independently built matrix.
        if n <= 6 {
            let next = step(&dense_matrix(&spec), &r.pi);
            for (a, b) in next.iter().zip(&r.pi) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reflection_symmetry_of_gap_two_marginal(p0 in 0.05f64..0.95, p1 in 0.05f64..0.95, p3 in 0.05f64..0.95, n in 3u32..=10) {
        let spec = ChainSpec::new(n, Params::new(p0, p1, p1, p3).unwrap()).unwrap();
        let m = stationary(&spec).unwrap().marginal_13;
        prop_assert!((m[0][1] - m[1][0]).abs() < 1e-11);
    }

    #[test]
    fn fair_mixtures_have_zero_mean(p0 in 0.05f64..0.95, p1 in 0.05f64..0.95, n in 3u32..=10) {
        let spec = ChainSpec::new(n, Params::new(p0, p1, 1.0 - p1, 1.0 - p0).unwrap()).unwrap();
        prop_assert!(stationary(&spec).unwrap().mu.abs() < 1e-11);
    }

    #[test]
    fn profit_curve_matches_direct_recursion(p in prop::array::uniform4(0.0f64..=1.0), n in 3u32..=6) {
        let spec = ChainSpec::new(n, Params::from_array(p).unwrap()).unwrap();
        let curve = profit_curve(&spec, 2).unwrap();
        let m = dense_matrix(&spec);
        let dim = spec.states();
        let mut v = vec![1.0 / dim as f64; dim];
        let mut total = 0.0;
        for k in 1..=2 {
            for _ in 0..n {
                total += (0..dim).map(|x| v[x] * payoff(&spec, x as u64)).sum::<f64>();
                v = step(&m, &v);
            }
            let got = curve.points[k].mean_profit_per_player;
            prop_assert!((got - total / n as f64).abs() < 1e-13);
        }
    }
}

#[test]
fn neighbor_codes_match_bit_extraction() {
    for n in 3u32..=10 {
        for x in 0..1u64 << n {
            let s = RingState::new(n, x).unwrap();
            for i in 1..=n as usize {
                let bit = |j: usize| (x >> ((j + n as usize - 1) % n as usize)) & 1;
                let want = 2 * bit(i - 1) + bit(i + 1);
                assert_eq!(neighbor_code(s, i).unwrap().value() as u64, want);
            }
        }
    }
}

#[test]
fn attractive_example_trends_upward() {
    let p = Params::new(0.1, 0.6, 0.6, 0.75).unwrap();
    let c = p.mix_with_fair();
    let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in 3..=12 {
        let b = stationary(&ChainSpec::new(n, p).unwrap()).unwrap().mu;
        let cm = stationary(&ChainSpec::new(n, c).unwrap()).unwrap().mu;
        assert!(b < -1.0 / 500.0, "n = {n}: {b}");
        if n >= 4 {
            assert!(cm > 1.0 / 100.0, "n = {n}: {cm}");
        }
        assert!(b >= last.0 - 1e-12 && cm >= last.1 - 1e-12);
        last = (b, cm);
    }
}
