use parrondo::regions::{
    cond_a, cond_b, cond_c, cond_d, region_report, solve_annihilating, solve_coalescing,
};
use parrondo::Params;
use proptest::prelude::*;

fn params(p: [f64; 4]) -> Params {
    Params::from_array(p).unwrap()
}

/// True when nudging any coordinate by `eps` changes `f`.
fn near_boundary(p: [f64; 4], eps: f64, f: fn(&Params) -> bool) -> bool {
    let here = f(&params(p));
    (0..4).any(|k| {
        [-eps, eps].iter().any(|&d| {
            let mut q = p;
            q[k] = (q[k] + d).clamp(0.0, 1.0);
            f(&params(q)) != here
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn lambda_preserves_a_b_d(p in prop::array::uniform4(0.0f64..=1.0)) {
        let p = params(p);
        let l = p.involution_lambda();
        prop_assert_eq!(cond_a(&p), cond_a(&l));
        prop_assert_eq!(cond_b(&p), cond_b(&l));
        prop_assert_eq!(cond_d(&p), cond_d(&l));
        let back = l.involution_lambda().as_array();
        for (a, b) in back.iter().zip(p.as_array()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn duality_solvers_agree_with_closed_forms(p in prop::array::uniform4(0.0f64..=1.0)) {
        let q = params(p);
        if !near_boundary(p, 1e-9, cond_c) {
            prop_assert_eq!(solve_coalescing(&q).is_some(), cond_c(&q));
        }
        if !near_boundary(p, 1e-9, cond_d) {
            prop_assert_eq!(solve_annihilating(&q).is_some(), cond_d(&q));
        }
        let r = region_report(&q);
        for z in [r.coalescing, r.annihilating].into_iter().flatten() {
            prop_assert!(z.reproduction_error(&q) < 1e-10);
            prop_assert!(z.certifies());
        }
        prop_assert!(r.annihilating_best.reproduction_error(&q) < 1e-10);
    }

    #[test]
    fn mixture_range(p in prop::array::uniform4(0.0f64..=1.0)) {
        let m = params(p).mix_with_fair();
        for x in m.as_array() {
            prop_assert!((0.25..=0.75).contains(&x));
        }
    }
}

/// `max(|p0-p1|, |p2-p3|) + max(|p0-p2|, |p1-p3|) < 2`, condition (a) for the
/// mixture written in terms of `p`.
fn mixture_high_noise(p: [f64; 4]) -> bool {
    let [p0, p1, p2, p3] = p;
    (p0 - p1).abs().max((p2 - p3).abs()) + (p0 - p2).abs().max((p1 - p3).abs()) < 2.0
}

fn fails_high_noise(p: [f64; 4]) -> bool {
    let [p0, p1, p2, p3] = p;
    let t = |a: f64, b: f64, c: f64, x: [f64; 3]| [a, b, c] == x;
    t(p0, p1, p2, [0.0, 1.0, 1.0])
        || t(p0, p1, p2, [1.0, 0.0, 0.0])
        || t(p0, p1, p3, [0.0, 1.0, 0.0])
        || t(p0, p1, p3, [1.0, 0.0, 1.0])
        || t(p0, p2, p3, [0.0, 1.0, 0.0])
        || t(p0, p2, p3, [1.0, 0.0, 1.0])
        || t(p1, p2, p3, [0.0, 0.0, 1.0])
        || t(p1, p2, p3, [1.0, 1.0, 0.0])
}

#[test]
fn game_c_is_certified_ergodic_off_four_vectors() {
    let excluded = [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 1.0],
        [1.0, 1.0, 0.0, 1.0],
    ];
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                for &d in &grid {
                    let p = [a, b, c, d];
                    let mixed = params(p).mix_with_fair();
                    assert_eq!(cond_a(&mixed), mixture_high_noise(p), "{p:?}");
                    assert_eq!(cond_a(&mixed), !fails_high_noise(p), "{p:?}");
                    if !excluded.contains(&p) {
                        assert!(region_report(&mixed).ergodic_certified, "{p:?}");
                    }
                }
            }
        }
    }
}
