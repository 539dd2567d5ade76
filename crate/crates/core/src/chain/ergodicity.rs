//! Case analysis of the closed classes of the `n`-player chain.
//!
//! The analysis branches on `(p0, p3)`:
//!
//! | branch | `p0`      | `p3`     | generic recurrent set               |
//! |--------|-----------|----------|-------------------------------------|
//! | a      | (0,1)     | (0,1)    | everything                          |
//! | b      | 1         | (0,1)    | everything but all-zeros            |
//! | c      | 0         | [0,1)    | all-zeros (absorbing)               |
//! | d      | (0,1)     | 0        | everything but all-ones             |
//! | e      | (0,1]     | 1        | all-ones (absorbing)                |
//! | f      | 1         | 0        | alternating states                  |
//! | g      | 0         | 1        | all-zeros and all-ones (absorbing)  |
//!
//! with exceptions when `p1 = p2 ∈ {0, 1}`, when `3 | n`, and when `n = 3`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ChainSpec;
use crate::model::RingState;

/// A closed set of states of the chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClosedClass {
    /// The whole state space.
    Everything,
    /// Every state but one.
    AllExcept {
        state: RingState,
    },
    /// States in which no two neighbors both hold `status`.
    NoAdjacent {
        status: u8,
    },
    /// Alternating 0s and 1s except for one adjacent equal pair (odd `n`).
    AlternatingWithDefect,
    States {
        states: Vec<RingState>,
    },
}

/// Outcome of the ergodicity analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityVerdict {
    pub n: u32,
    pub ergodic: bool,
    pub case_label: String,
    pub absorbing_states: Vec<RingState>,
    /// Every closed irreducible class, absorbing singletons included.
    pub closed_classes: Vec<ClosedClass>,
}

impl ErgodicityVerdict {
    /// The unique closed class, when the chain is ergodic.
    pub fn recurrent_class(&self) -> Option<&ClosedClass> {
        if self.ergodic {
            self.closed_classes.first()
        } else {
            None
        }
    }

    /// Closed classes as sorted sets of raw state words, for comparisons.
    pub fn class_sets(&self) -> BTreeSet<Vec<u64>> {
        self.closed_classes
            .iter()
            .map(|c| c.states(self.n))
            .collect()
    }
}

/// `bits` rotated so that bit `k` of the result holds bit `k + 1` (cyclically).
#[inline]
pub(crate) fn rotate_down(bits: u64, n: u32) -> u64 {
    (bits >> 1) | ((bits & 1) << (n - 1))
}

#[inline]
fn full_mask(n: u32) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn has_adjacent(bits: u64, n: u32, status: u8) -> bool {
    let w = if status == 1 {
        bits
    } else {
        !bits & full_mask(n)
    };
    w & rotate_down(w, n) != 0
}

fn has_triple(bits: u64, n: u32, status: u8) -> bool {
    let w = if status == 1 {
        bits
    } else {
        !bits & full_mask(n)
    };
    let r1 = rotate_down(w, n);
    let r2 = rotate_down(r1, n);
    w & r1 & r2 != 0
}

impl ClosedClass {
    pub fn contains(&self, n: u32, bits: u64) -> bool {
        match self {
            ClosedClass::Everything => true,
            ClosedClass::AllExcept { state } => bits != state.bits(),
            ClosedClass::NoAdjacent { status } => !has_adjacent(bits, n, *status),
            ClosedClass::AlternatingWithDefect => {
                let equal_pairs = !(bits ^ rotate_down(bits, n)) & full_mask(n);
                n % 2 == 1 && equal_pairs.count_ones() == 1
            }
            ClosedClass::States { states } => states.iter().any(|s| s.bits() == bits),
        }
    }

    /// Sorted member states. Enumerates the whole space for symbolic classes.
    pub fn states(&self, n: u32) -> Vec<u64> {
        match self {
            ClosedClass::States { states } => {
                let mut v: Vec<u64> = states.iter().map(|s| s.bits()).collect();
                v.sort_unstable();
                v
            }
            _ => (0..1u64 << n).filter(|&x| self.contains(n, x)).collect(),
        }
    }

    pub fn size(&self, n: u32) -> usize {
        match self {
            ClosedClass::Everything => 1 << n,
            ClosedClass::AllExcept { .. } => (1 << n) - 1,
            ClosedClass::AlternatingWithDefect => 2 * n as usize,
            ClosedClass::States { states } => states.len(),
            ClosedClass::NoAdjacent { .. } => self.states(n).len(),
        }
    }
}

fn state(n: u32, bits: u64) -> RingState {
    RingState::new(n, bits).expect("bits within ring")
}

/// The three rotations of the period-3 pattern whose first entries are `head`.
fn period_three(n: u32, head: [u8; 3]) -> Vec<RingState> {
    (0..3)
        .map(|shift| {
            let mut bits = 0u64;
            for k in 0..n as usize {
                if head[(k + shift) % 3] == 1 {
                    bits |= 1 << k;
                }
            }
            state(n, bits)
        })
        .collect()
}

fn alternating(n: u32) -> Vec<RingState> {
    let odd_sites: u64 = (0..n).step_by(2).fold(0, |acc, k| acc | (1 << k));
    vec![state(n, odd_sites << 1 & full_mask(n)), state(n, odd_sites)]
}

/// States with no adjacent `status` entries and no run of three of the other value.
fn frozen_states(n: u32, status: u8) -> Vec<RingState> {
    (0..1u64 << n)
        .filter(|&x| !has_adjacent(x, n, status) && !has_triple(x, n, 1 - status))
        .map(|x| state(n, x))
        .collect()
}

fn from_strings(items: &[&str]) -> Vec<RingState> {
    items
        .iter()
        .map(|s| RingState::parse(s).expect("literal state"))
        .collect()
}

struct Builder {
    n: u32,
    label: String,
    absorbing: Vec<RingState>,
    classes: Vec<ClosedClass>,
}

impl Builder {
    fn new(n: u32, label: &str) -> Self {
        Builder {
            n,
            label: label.to_string(),
            absorbing: Vec::new(),
            classes: Vec::new(),
        }
    }

    fn absorbing(mut self, states: Vec<RingState>) -> Self {
        for s in states {
            self.classes.push(ClosedClass::States { states: vec![s] });
            self.absorbing.push(s);
        }
        self
    }

    fn class(mut self, class: ClosedClass) -> Self {
        self.classes.push(class);
        self
    }

    fn finish(mut self) -> ErgodicityVerdict {
        self.absorbing.sort();
        // Every closed class here has a self-loop, so uniqueness decides.
        ErgodicityVerdict {
            n: self.n,
            ergodic: self.classes.len() == 1,
            case_label: self.label,
            absorbing_states: self.absorbing,
            closed_classes: self.classes,
        }
    }
}

/// Classifies the chain's closed classes from the parameter values alone.
pub fn classify_ergodicity(spec: &ChainSpec) -> ErgodicityVerdict {
    let n = spec.n;
    let [p0, p1, p2, p3] = spec.params.as_array();
    let open = |x: f64| x > 0.0 && x < 1.0;
    let div3 = n % 3 == 0;
    let zeros = state(n, 0);
    let ones = state(n, full_mask(n));
    let low_four = || from_strings(&["000", "001", "010", "100"]);
    let high_four = || from_strings(&["011", "101", "110", "111"]);
    let b = |label: &str| Builder::new(n, label);

    if p0 == 0.0 && p3 == 1.0 {
        return b("g").absorbing(vec![zeros, ones]).finish();
    }
    if p0 == 1.0 && p3 == 0.0 {
        return if p1 == 0.0 && p2 == 0.0 {
            b("f: p1 = p2 = 0").absorbing(frozen_states(n, 1)).finish()
        } else if p1 == 1.0 && p2 == 1.0 {
            b("f: p1 = p2 = 1").absorbing(frozen_states(n, 0)).finish()
        } else if n % 2 == 0 {
            b("f: n even").absorbing(alternating(n)).finish()
        } else {
            b("f: n odd")
                .class(ClosedClass::AlternatingWithDefect)
                .finish()
        };
    }
    if open(p0) && open(p3) {
        return if n == 3 && p1 == 0.0 && p2 == 0.0 {
            b("a: n = 3, p1 = p2 = 0")
                .class(ClosedClass::States { states: low_four() })
                .finish()
        } else if n == 3 && p1 == 1.0 && p2 == 1.0 {
            b("a: n = 3, p1 = p2 = 1")
                .class(ClosedClass::States {
                    states: high_four(),
                })
                .finish()
        } else {
            b("a").class(ClosedClass::Everything).finish()
        };
    }
    if p0 == 1.0 && open(p3) {
        return if p1 == 1.0 && p2 == 1.0 {
            b("b: p1 = p2 = 1")
                .class(ClosedClass::NoAdjacent { status: 0 })
                .finish()
        } else if div3 && p1 == 0.0 && p2 == 0.0 {
            b("b: 3 | n, p1 = p2 = 0")
                .absorbing(period_three(n, [0, 0, 1]))
                .finish()
        } else {
            b("b")
                .class(ClosedClass::AllExcept { state: zeros })
                .finish()
        };
    }
    if p0 == 0.0 {
        return if div3 && p3 == 0.0 && p1 == 1.0 && p2 == 1.0 {
            let mut states = vec![zeros];
            states.extend(period_three(n, [0, 1, 1]));
            b("c: 3 | n, p3 = 0, p1 = p2 = 1")
                .absorbing(states)
                .finish()
        } else if n == 3 && p3 > 0.0 && p1 == 1.0 && p2 == 1.0 {
            b("c: n = 3, p3 > 0, p1 = p2 = 1")
                .absorbing(vec![zeros])
                .class(ClosedClass::States {
                    states: high_four(),
                })
                .finish()
        } else {
            b("c").absorbing(vec![zeros]).finish()
        };
    }
    if open(p0) && p3 == 0.0 {
        return if p1 == 0.0 && p2 == 0.0 {
            b("d: p1 = p2 = 0")
                .class(ClosedClass::NoAdjacent { status: 1 })
                .finish()
        } else if div3 && p1 == 1.0 && p2 == 1.0 {
            b("d: 3 | n, p1 = p2 = 1")
                .absorbing(period_three(n, [0, 1, 1]))
                .finish()
        } else {
            b("d")
                .class(ClosedClass::AllExcept { state: ones })
                .finish()
        };
    }
    // Remaining: p0 in (0, 1] and p3 = 1.
    if div3 && p0 == 1.0 && p1 == 0.0 && p2 == 0.0 {
        let mut states = vec![ones];
        states.extend(period_three(n, [0, 0, 1]));
        b("e: 3 | n, p0 = 1, p1 = p2 = 0")
            .absorbing(states)
            .finish()
    } else if n == 3 && p0 < 1.0 && p1 == 0.0 && p2 == 0.0 {
        b("e: n = 3, p0 < 1, p1 = p2 = 0")
            .absorbing(vec![ones])
            .class(ClosedClass::States { states: low_four() })
            .finish()
    } else {
        b("e").absorbing(vec![ones]).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;

    fn verdict(n: u32, p: [f64; 4]) -> ErgodicityVerdict {
        classify_ergodicity(&ChainSpec::new(n, Params::from_array(p).unwrap()).unwrap())
    }

    fn strs(states: &[RingState]) -> Vec<String> {
        states.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn even_ring_alternating_absorbing() {
        let v = verdict(4, [1.0, 0.7, 0.7, 0.0]);
        assert!(!v.ergodic);
        let mut got = strs(&v.absorbing_states);
        got.sort();
        assert_eq!(got, ["0101", "1010"]);
    }

    #[test]
    fn generic_interior_is_ergodic() {
        let v = verdict(5, [0.3, 0.4, 0.5, 0.6]);
        assert!(v.ergodic);
        assert_eq!(v.recurrent_class(), Some(&ClosedClass::Everything));
    }

    #[test]
    fn period_three_absorbing() {
        let v = verdict(6, [1.0, 0.0, 0.0, 0.4]);
        assert!(!v.ergodic);
        let mut got = strs(&v.absorbing_states);
        got.sort();
        assert_eq!(got, ["001001", "010010", "100100"]);
    }

    #[test]
    fn odd_ring_defect_class() {
        let v = verdict(7, [1.0, 0.75, 0.75, 0.0]);
        assert!(v.ergodic);
        let class = v.recurrent_class().unwrap();
        assert_eq!(class.size(7), 14);
        assert_eq!(class.states(7).len(), 14);
        assert!(class.contains(7, RingState::parse("0010101").unwrap().bits()));
        assert!(!class.contains(7, RingState::parse("0001011").unwrap().bits()));
    }

    #[test]
    fn summary_list_of_exceptions() {
        // Not ergodic exactly in the listed cases.
        let cases: &[(u32, [f64; 4], bool)] = &[
            (5, [0.0, 0.3, 0.3, 1.0], false),
            (6, [1.0, 0.3, 0.6, 0.0], false),
            (7, [1.0, 0.3, 0.6, 0.0], true),
            (7, [1.0, 0.0, 0.0, 0.0], false),
            (7, [1.0, 1.0, 1.0, 0.0], false),
            (9, [1.0, 0.0, 0.0, 0.5], false),
            (8, [1.0, 0.0, 0.0, 0.5], true),
            (9, [0.5, 1.0, 1.0, 0.0], false),
            (10, [0.5, 1.0, 1.0, 0.0], true),
            (3, [0.0, 1.0, 1.0, 0.5], false),
            (4, [0.0, 1.0, 1.0, 0.5], true),
            (3, [0.5, 0.0, 0.0, 1.0], false),
            (4, [0.5, 0.0, 0.0, 1.0], true),
        ];
        for &(n, p, want) in cases {
            assert_eq!(verdict(n, p).ergodic, want, "n = {n}, p = {p:?}");
        }
    }

    #[test]
    fn labels_name_the_branch() {
        assert_eq!(verdict(5, [0.0, 0.3, 0.3, 0.2]).case_label, "c");
        assert_eq!(verdict(5, [0.4, 0.3, 0.3, 1.0]).case_label, "e");
        assert_eq!(
            verdict(4, [0.4, 0.0, 0.0, 0.0]).case_label,
            "d: p1 = p2 = 0"
        );
    }

    #[test]
    fn class_serializes_with_kind_tag() {
        let json = serde_json::to_string(&ClosedClass::NoAdjacent { status: 1 }).unwrap();
        assert_eq!(json, r#"{"kind":"no-adjacent","status":1}"#);
    }
}
