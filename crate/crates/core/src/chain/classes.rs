//! Graph-theoretic classification of the chain, used to cross-check the case
//! analysis in [`classify_ergodicity`](super::classify_ergodicity).

use super::{ChainSpec, ClosedClass, ErgodicityVerdict};
use crate::error::{Error, Result};
use crate::model::{flip_prob_at, RingState};

/// Largest `n` accepted by [`brute_force_classes`].
pub const MAX_BRUTE_FORCE_N: u32 = 14;

struct Digraph {
    adj: Vec<Vec<u32>>,
}

impl Digraph {
    fn from_spec(spec: &ChainSpec) -> Self {
        let n = spec.n;
        let adj = (0..spec.states() as u64)
            .map(|x| {
                let mut out = Vec::with_capacity(n as usize + 1);
                let mut stay = 0.0;
                for i in 0..n as usize {
                    let c = flip_prob_at(&spec.params, x, n, i);
                    if c > 0.0 {
                        out.push((x ^ (1 << i)) as u32);
                    }
                    stay += 1.0 - c;
                }
                if stay > 0.0 {
                    out.push(x as u32);
                }
                out
            })
            .collect();
        Digraph { adj }
    }

    /// Strongly connected components by iterative Tarjan; `comp[v]` is the
    /// component index.
    fn scc(&self) -> (Vec<u32>, usize) {
        const UNSEEN: u32 = u32::MAX;
        let len = self.adj.len();
        let mut index = vec![UNSEEN; len];
        let mut low = vec![0u32; len];
        let mut on_stack = vec![false; len];
        let mut comp = vec![UNSEEN; len];
        let mut stack: Vec<u32> = Vec::new();
        let mut call: Vec<(u32, usize)> = Vec::new();
        let mut next = 0u32;
        let mut ncomp = 0usize;

        for root in 0..len as u32 {
            if index[root as usize] != UNSEEN {
                continue;
            }
            call.push((root, 0));
            index[root as usize] = next;
            low[root as usize] = next;
            next += 1;
            stack.push(root);
            on_stack[root as usize] = true;

            while let Some(&mut (v, ref mut edge)) = call.last_mut() {
                let vu = v as usize;
                if let Some(&w) = self.adj[vu].get(*edge) {
                    *edge += 1;
                    let wu = w as usize;
                    if index[wu] == UNSEEN {
                        index[wu] = next;
                        low[wu] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[wu] = true;
                        call.push((w, 0));
                    } else if on_stack[wu] {
                        low[vu] = low[vu].min(index[wu]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    let pu = parent as usize;
                    low[pu] = low[pu].min(low[vu]);
                }
                if low[vu] == index[vu] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w as usize] = false;
                        comp[w as usize] = ncomp as u32;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
        (comp, ncomp)
    }

    /// Period of the strongly connected set `members` via BFS levels.
    fn period(&self, members: &[u32], comp: &[u32]) -> u64 {
        let c = comp[members[0] as usize];
        let mut level = std::collections::HashMap::new();
        level.insert(members[0], 0i64);
        let mut queue = std::collections::VecDeque::from([members[0]]);
        let mut g: u64 = 0;
        while let Some(v) = queue.pop_front() {
            let lv = level[&v];
            for &w in &self.adj[v as usize] {
                if comp[w as usize] != c {
                    continue;
                }
                match level.get(&w) {
                    Some(&lw) => g = gcd(g, (lv + 1 - lw).unsigned_abs()),
                    None => {
                        level.insert(w, lv + 1);
                        queue.push_back(w);
                    }
                }
            }
        }
        g
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies the chain by building its transition digraph explicitly and
/// finding the closed strongly connected components. Costs `O(n 2^n)`.
pub fn brute_force_classes(spec: &ChainSpec) -> Result<ErgodicityVerdict> {
    if spec.n > MAX_BRUTE_FORCE_N {
        return Err(Error::PlayerCount {
            n: spec.n,
            min: crate::model::MIN_RING,
            max: MAX_BRUTE_FORCE_N,
        });
    }
    let n = spec.n;
    let graph = Digraph::from_spec(spec);
    let (comp, ncomp) = graph.scc();

    let mut members: Vec<Vec<u32>> = vec![Vec::new(); ncomp];
    let mut closed = vec![true; ncomp];
    for (v, out) in graph.adj.iter().enumerate() {
        let c = comp[v] as usize;
        members[c].push(v as u32);
        if out.iter().any(|&w| comp[w as usize] as usize != c) {
            closed[c] = false;
        }
    }

    let mut classes = Vec::new();
    let mut absorbing = Vec::new();
    let mut periods = Vec::new();
    for c in (0..ncomp).filter(|&c| closed[c]) {
        let states: Vec<RingState> = members[c]
            .iter()
            .map(|&x| RingState::new(n, x as u64).expect("state in range"))
            .collect();
        if states.len() == 1 {
            absorbing.push(states[0]);
        }
        periods.push(graph.period(&members[c], &comp));
        classes.push(ClosedClass::States { states });
    }
    absorbing.sort();
    classes.sort_by_key(|c| c.states(n));

    Ok(ErgodicityVerdict {
        n,
        ergodic: classes.len() == 1 && periods[0] == 1,
        case_label: "graph search".to_string(),
        absorbing_states: absorbing,
        closed_classes: classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::classify_ergodicity;
    use crate::model::Params;

    fn spec(n: u32, p: [f64; 4]) -> ChainSpec {
        ChainSpec::new(n, Params::from_array(p).unwrap()).unwrap()
    }

    #[test]
    fn closed_class_for_three_players() {
        let v = brute_force_classes(&spec(3, [0.0, 1.0, 1.0, 0.5])).unwrap();
        assert!(!v.ergodic);
        assert_eq!(v.absorbing_states, vec![RingState::parse("000").unwrap()]);
        let big: Vec<String> = match &v.closed_classes[1] {
            ClosedClass::States { states } => states.iter().map(|s| s.to_string()).collect(),
            other => panic!("unexpected {other:?}"),
        };
        let mut big = big;
        big.sort();
        assert_eq!(big, ["011", "101", "110", "111"]);
    }

    #[test]
    fn frozen_states_for_five_players() {
        let v = brute_force_classes(&spec(5, [1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(!v.ergodic);
        assert_eq!(v.closed_classes.len(), v.absorbing_states.len());
        for s in &v.absorbing_states {
            let text = s.to_string();
            let ring = format!("{text}{text}");
            assert!(!ring.contains("11") && !ring.contains("000"), "{text}");
        }
        let expected = (0..32u64)
            .filter(|&x| {
                let t: String = (0..5)
                    .map(|k| if x >> k & 1 == 1 { '1' } else { '0' })
                    .collect();
                let ring = format!("{t}{t}");
                !ring.contains("11") && !ring.contains("000")
            })
            .count();
        assert_eq!(v.absorbing_states.len(), expected);
    }

    #[test]
    fn generic_is_ergodic() {
        let v = brute_force_classes(&spec(5, [0.3, 0.4, 0.5, 0.6])).unwrap();
        assert!(v.ergodic);
        assert_eq!(v.closed_classes[0].size(5), 32);
    }

    #[test]
    fn periodic_class_is_not_ergodic() {
        // With no self-loops anywhere the single class has period 2.
        let v = brute_force_classes(&spec(3, [1.0, 1.0, 0.0, 0.0]));
        let v = v.unwrap();
        let rule = classify_ergodicity(&spec(3, [1.0, 1.0, 0.0, 0.0]));
        assert_eq!(v.ergodic, rule.ergodic);
    }

    #[test]
    fn agrees_with_case_analysis_on_grid() {
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mut disagreements = Vec::new();
        for n in 3..=8 {
            for &a in &grid {
                for &b in &grid {
                    for &c in &grid {
                        for &d in &grid {
                            let s = spec(n, [a, b, c, d]);
                            let rule = classify_ergodicity(&s);
                            let graph = brute_force_classes(&s).unwrap();
                            if rule.ergodic != graph.ergodic
                                || rule.absorbing_states != graph.absorbing_states
                                || rule.class_sets() != graph.class_sets()
                            {
                                disagreements.push((n, [a, b, c, d], rule.case_label));
                            }
                        }
                    }
                }
            }
        }
        assert!(disagreements.is_empty(), "{disagreements:?}");
    }

    #[test]
    fn rejects_large_n() {
        assert!(brute_force_classes(&spec(15, [0.5; 4])).is_err());
    }
}
