use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::params::InstanceParams;
use crate::state::SystemState;

use super::simplified::SimplifiedState;

/// An indexed, duplicate-free list of states.
#[derive(Debug, Clone)]
pub struct StateSpace<S> {
    states: Vec<S>,
    index: HashMap<S, usize>,
}

impl<S: Clone + Eq + Hash> StateSpace<S> {
    pub fn from_states(states: Vec<S>) -> Result<Self> {
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidArgument("duplicate state in state space".into()));
            }
        }
        Ok(StateSpace { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &S {
        &self.states[i]
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }
}

/// All pipelines of `len` slots whose weighted content stays within `cap`
/// items, in lexicographic order.
fn pipelines(len: usize, unit: u32, cap: u32) -> Vec<(Vec<u32>, u32)> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; len];
    fn rec(slot: usize, used: u32, cur: &mut Vec<u32>, unit: u32, cap: u32, out: &mut Vec<(Vec<u32>, u32)>) {
        if slot == cur.len() {
            out.push((cur.clone(), used));
            return;
        }
        let mut x = 0;
        while used + x * unit <= cap {
            cur[slot] = x;
            rec(slot + 1, used + x * unit, cur, unit, cap, out);
            x += 1;
        }
        cur[slot] = 0;
    }
    rec(0, 0, &mut cur, unit, cap, &mut out);
    out
}

/// Every state with `n_C + n_A <= N`, `IP <= S` and no stock while
/// backorders are open, in lexicographic order.
pub fn enumerate_full(params: &InstanceParams, cap: usize) -> Result<Vec<SystemState>> {
    let n = params.installed_base;
    let s_max = params.max_circulating;
    // Pipeline content never exceeds S + N items.
    let cm = pipelines(params.cm.lead_time, params.batch_size, s_max + n);
    let am = pipelines(params.am.lead_time, 1, s_max + n);
    let mut out = Vec::new();
    for cm_installed in 0..=n {
        for am_installed in 0..=n - cm_installed {
            let backorders = n - cm_installed - am_installed;
            for (cm_stock, am_stock) in stock_pairs(backorders, s_max) {
                for (up_c, used_c) in &cm {
                    for (up_a, used_a) in &am {
                        let ip = (cm_stock + am_stock + used_c + used_a) as i64 - backorders as i64;
                        if ip > s_max as i64 {
                            continue;
                        }
                        out.push(SystemState {
                            cm_installed,
                            am_installed,
                            cm_stock,
                            am_stock,
                            cm_pipeline: up_c.clone(),
                            am_pipeline: up_a.clone(),
                        });
                        if out.len() > cap {
                            return Err(Error::StateSpaceTooLarge { count: out.len(), cap });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn stock_pairs(backorders: u32, s_max: u32) -> Vec<(u32, u32)> {
    if backorders > 0 {
        return vec![(0, 0)];
    }
    (0..=s_max)
        .flat_map(|c| (0..=s_max - c).map(move |a| (c, a)))
        .collect()
}

/// Simplified-model analogue of [`enumerate_full`].
pub fn enumerate_simplified(params: &InstanceParams, cap: usize) -> Result<Vec<SimplifiedState>> {
    let n = params.installed_base;
    let s_max = params.max_circulating;
    let cm = pipelines(params.cm.lead_time, params.batch_size, s_max + n);
    let am = pipelines(params.am.lead_time, 1, s_max + n);
    let mut out = Vec::new();
    for installed in 0..=n {
        let backorders = n - installed;
        let stocks = if backorders > 0 { 0..=0 } else { 0..=s_max };
        for stock in stocks {
            for (up_c, used_c) in &cm {
                for (up_a, used_a) in &am {
                    let ip = (stock + used_c + used_a) as i64 - backorders as i64;
                    if ip > s_max as i64 {
                        continue;
                    }
                    out.push(SimplifiedState {
                        installed,
                        stock,
                        cm_pipeline: up_c.clone(),
                        am_pipeline: up_a.clone(),
                    });
                    if out.len() > cap {
                        return Err(Error::StateSpaceTooLarge { count: out.len(), cap });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;

    /// Loops over every field range and keeps what `check` accepts.
    fn brute_force_count(params: &InstanceParams) -> usize {
        let n = params.installed_base;
        let s = params.max_circulating;
        let lc = params.cm.lead_time;
        let la = params.am.lead_time;
        let slot_c = (s + n) / params.batch_size;
        let slot_a = s + n;
        let mut count = 0;
        let all_vectors = |len: usize, max: u32| -> Vec<Vec<u32>> {
            let mut v: Vec<Vec<u32>> = vec![vec![]];
            for _ in 0..len {
                v = v
                    .into_iter()
                    .flat_map(|p| (0..=max).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    }))
                    .collect();
            }
            v
        };
        let cms = all_vectors(lc, slot_c);
        let ams = all_vectors(la, slot_a);
        for nc in 0..=n {
            for na in 0..=n {
                for sc in 0..=s {
                    for sa in 0..=s {
                        for uc in &cms {
                            for ua in &ams {
                                let st = SystemState {
                                    cm_installed: nc,
                                    am_installed: na,
                                    cm_stock: sc,
                                    am_stock: sa,
                                    cm_pipeline: uc.clone(),
                                    am_pipeline: ua.clone(),
                                };
                                if st.check(params).is_ok() {
                                    count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn full_count_matches_nested_loops() {
        let p = fixtures::micro();
        let states = enumerate_full(&p, usize::MAX).unwrap();
        assert_eq!(states.len(), brute_force_count(&p));
        let mut sorted = states.clone();
        sorted.sort();
        assert_eq!(sorted, states);
        assert!(states.iter().all(|s| s.check(&p).is_ok()));
    }

    #[test]
    fn simplified_hand_count() {
        let mut p = fixtures::micro();
        p.installed_base = 1;
        p.max_circulating = 0;
        p.cm.lead_time = 1;
        p.am.lead_time = 1;
        let states = enumerate_simplified(&p, usize::MAX).unwrap();
        // With the part failed (IP = -1 + pipeline) one item may be on order
        // from either source; with it operating nothing may be.
        let st = |installed, c, a| SimplifiedState {
            installed,
            stock: 0,
            cm_pipeline: vec![c],
            am_pipeline: vec![a],
        };
        assert_eq!(states, vec![st(0, 0, 0), st(0, 0, 1), st(0, 1, 0), st(1, 0, 0)]);
        let empty: Vec<_> = states.iter().filter(|s| s.cm_pipeline == [0] && s.am_pipeline == [0]).collect();
        assert_eq!(empty.len(), 2);
    }

    #[test]
    fn index_round_trips() {
        let p = fixtures::micro();
        let space = StateSpace::from_states(enumerate_full(&p, usize::MAX).unwrap()).unwrap();
        for i in 0..space.len() {
            assert_eq!(space.index_of(space.state(i)), Some(i));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let p = fixtures::instance1();
        match enumerate_full(&p, 1000) {
            Err(Error::StateSpaceTooLarge { cap, .. }) => assert_eq!(cap, 1000),
            other => panic!("expected cap error, got {other:?}"),
        }
    }
}
