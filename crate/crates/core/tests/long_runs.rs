//! Slow checks. Run with `cargo test --release -- --ignored`.

use parrondo::chain::{parrondo_check, Effect};
use parrondo::sim::{excursion_tail_check, sample_excursions};
use parrondo::{Exec, Params};

#[test]
#[ignore = "2^19 states, minutes on one core"]
fn nineteen_players_keep_the_effect() {
    let p = Params::new(0.1, 0.6, 0.6, 0.75).unwrap();
    let r = parrondo_check(19, p).unwrap();
    assert!(r.mu_b.unwrap() < -1.0 / 500.0);
    assert!(r.mu_c > 1.0 / 100.0);
    assert_eq!(r.effect, Effect::Present);
}

#[test]
#[ignore = "10^5 excursions, about a minute"]
fn tail_slopes_tighten_with_more_excursions() {
    let stats = sample_excursions(0.5, 0.5, 100_000, 1_000_000, 5, Exec::default()).unwrap();
    let r = excursion_tail_check(&stats).unwrap();
    assert!(
        (r.return_time.slope + 0.5).abs() < 0.05,
        "{:?}",
        r.return_time
    );
    assert!((r.profit.slope + 0.5).abs() < 0.05, "{:?}", r.profit);
}
