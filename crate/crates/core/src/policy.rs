//! The decision-rule interface shared by every solver and the simulator.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::state::{Decision, SystemState};

/// Maps an observed state to an order. Implementations must return a
/// decision that is feasible in `state` for the instance they were built for.
pub trait Policy: Send + Sync {
    fn decide(&self, state: &SystemState) -> Decision;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn decide(&self, state: &SystemState) -> Decision {
        (**self).decide(state)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn decide(&self, state: &SystemState) -> Decision {
        (**self).decide(state)
    }
}

impl<P: Policy + ?Sized> Policy for Arc<P> {
    fn decide(&self, state: &SystemState) -> Decision {
        (**self).decide(state)
    }
}

/// Orders nothing, ever.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverOrder;

impl Policy for NeverOrder {
    fn decide(&self, _: &SystemState) -> Decision {
        Decision::NONE
    }
}

/// A policy from a closure.
pub struct FnPolicy<F>(pub F);

impl<F: Fn(&SystemState) -> Decision + Send + Sync> Policy for FnPolicy<F> {
    fn decide(&self, state: &SystemState) -> Decision {
        (self.0)(state)
    }
}

/// Memoizes an expensive deterministic policy. Simulated trajectories revisit
/// a small set of states, so this pays off for network policies.
pub struct Cached<P> {
    inner: P,
    memo: RwLock<HashMap<SystemState, Decision>>,
}

impl<P: Policy> Cached<P> {
    pub fn new(inner: P) -> Self {
        Cached {
            inner,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Policy> Policy for Cached<P> {
    fn decide(&self, state: &SystemState) -> Decision {
        if let Some(&d) = self.memo.read().unwrap().get(state) {
            return d;
        }
        let d = self.inner.decide(state);
        self.memo.write().unwrap().insert(state.clone(), d);
        d
    }
}
