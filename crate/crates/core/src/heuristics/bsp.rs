//! Single-source base-stock policies.

use crate::dynamics::Model;
use crate::error::Result;
use crate::params::{InstanceParams, Source};
use crate::policy::Policy;
use crate::state::{inventory_position, order_budget, Decision, SystemState};

use super::Evaluator;

/// Orders from one source up to `level` on the inventory position. CM
/// orders are rounded up to whole batches, but never beyond what the
/// circulation cap allows.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStockPolicy {
    pub source: Source,
    pub level: u32,
    params: InstanceParams,
}

impl BaseStockPolicy {
    pub fn new(source: Source, level: u32, params: &InstanceParams) -> Self {
        BaseStockPolicy {
            source,
            level: level.min(params.max_circulating),
            params: params.clone(),
        }
    }
}

impl Policy for BaseStockPolicy {
    fn decide(&self, state: &SystemState) -> Decision {
        let p = &self.params;
        let short = self.level as i64 - inventory_position(state, p);
        if short <= 0 {
            return Decision::NONE;
        }
        let budget = order_budget(state, p);
        match self.source {
            Source::Am => Decision::new(0, (short as u32).min(budget)),
            Source::Cm => {
                let q = p.batch_size;
                let batches = (short as u32).div_ceil(q).min(budget / q);
                Decision::new(batches, 0)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BspResult {
    pub policy: BaseStockPolicy,
    pub cost: f64,
    /// Every evaluated `(source, level, cost)`, CM levels first.
    pub table: Vec<(Source, u32, f64)>,
}

/// Exhaustive search over both sources and levels `0..=S`. Ties go to CM,
/// then to the lower level.
pub fn bsp_solve(params: &InstanceParams, evaluator: &Evaluator) -> Result<BspResult> {
    let model = Model::new(params.clone())?;
    let mut table = Vec::new();
    for source in [Source::Cm, Source::Am] {
        for level in 0..=params.max_circulating {
            let policy = BaseStockPolicy::new(source, level, params);
            table.push((source, level, evaluator.cost(&model, &policy)?));
        }
    }
    let &(source, level, cost) = table
        .iter()
        .fold(None::<&(Source, u32, f64)>, |best, row| match best {
            Some(b) if b.2 <= row.2 => Some(b),
            _ => Some(row),
        })
        .unwrap();
    Ok(BspResult {
        policy: BaseStockPolicy::new(source, level, params),
        cost,
        table,
    })
}
