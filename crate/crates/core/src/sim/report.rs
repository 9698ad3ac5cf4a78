//! CSV reports. Each file starts with a `# dualsource <kind> v1` comment
//! line naming its schema.

use std::io::Write;

use crate::error::Result;

use super::{EpisodeStats, Estimate};

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub instance: String,
    pub policy: String,
    pub mean_cost: f64,
    pub half_width: f64,
    /// Empty when no optimum is known.
    pub gap_pct: Option<f64>,
}

/// Per-category average costs of one (instance, policy) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownRow {
    pub instance: String,
    pub policy: String,
    pub purchase: Estimate,
    pub holding: Estimate,
    pub backorder: Estimate,
    pub maintenance: Estimate,
    pub am_fraction: Estimate,
}

impl BreakdownRow {
    pub fn total(&self) -> f64 {
        self.purchase.mean + self.holding.mean + self.backorder.mean + self.maintenance.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub instance: String,
    pub policy: String,
    pub source: &'static str,
    /// Order size in items.
    pub order_size: u32,
    /// Orders of this size per measured period.
    pub frequency: f64,
}

/// Summarizes replications of one policy. Panics on an empty slice.
pub fn breakdown_rows(instance: &str, policy: &str, stats: &[EpisodeStats]) -> (BreakdownRow, Vec<OrderRow>) {
    assert!(!stats.is_empty(), "breakdown of zero episodes");
    let per = |f: &dyn Fn(&EpisodeStats) -> f64| {
        let xs: Vec<f64> = stats
            .iter()
            .map(|s| if s.periods == 0 { 0.0 } else { f(s) / s.periods as f64 })
            .collect();
        Estimate::from_samples(&xs)
    };
    let row = BreakdownRow {
        instance: instance.into(),
        policy: policy.into(),
        purchase: per(&|s| s.cost.purchase),
        holding: per(&|s| s.cost.holding),
        backorder: per(&|s| s.cost.backorder),
        maintenance: per(&|s| s.cost.maintenance),
        am_fraction: Estimate::from_samples(&stats.iter().map(|s| s.am_installed_fraction).collect::<Vec<_>>()),
    };
    let periods: u64 = stats.iter().map(|s| s.periods).sum();
    let mut orders = Vec::new();
    for (source, pick) in [
        ("cm", (|s: &EpisodeStats| &s.cm_order_sizes) as fn(&EpisodeStats) -> &std::collections::BTreeMap<u32, u64>),
        ("am", |s: &EpisodeStats| &s.am_order_sizes),
    ] {
        let mut merged = std::collections::BTreeMap::<u32, u64>::new();
        for s in stats {
            for (&size, &n) in pick(s) {
                *merged.entry(size).or_default() += n;
            }
        }
        for (size, n) in merged {
            orders.push(OrderRow {
                instance: instance.into(),
                policy: policy.into(),
                source,
                order_size: size,
                frequency: n as f64 / periods.max(1) as f64,
            });
        }
    }
    (row, orders)
}

fn writer<'a>(out: &'a mut dyn Write, kind: &str) -> Result<csv::Writer<&'a mut dyn Write>> {
    writeln!(out, "# dualsource {kind} v1")?;
    Ok(csv::Writer::from_writer(out))
}

pub fn write_gaps_csv(out: &mut dyn Write, rows: &[GapRow]) -> Result<()> {
    let mut w = writer(out, "gaps")?;
    w.write_record(["instance", "policy", "mean_cost", "half_width", "gap_pct"])?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.policy.clone(),
            format!("{:.6}", r.mean_cost),
            format!("{:.6}", r.half_width),
            r.gap_pct.map(|g| format!("{g:.4}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_breakdown_csv(out: &mut dyn Write, rows: &[BreakdownRow]) -> Result<()> {
    let mut w = writer(out, "breakdown")?;
    w.write_record(["instance", "policy", "purchase", "holding", "backorder", "maintenance", "am_fraction"])?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.policy.clone(),
            format!("{:.6}", r.purchase.mean),
            format!("{:.6}", r.holding.mean),
            format!("{:.6}", r.backorder.mean),
            format!("{:.6}", r.maintenance.mean),
            format!("{:.6}", r.am_fraction.mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_orders_csv(out: &mut dyn Write, rows: &[OrderRow]) -> Result<()> {
    let mut w = writer(out, "orders")?;
    w.write_record(["instance", "policy", "source", "order_size", "frequency"])?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.policy.clone(),
            r.source.to_string(),
            r.order_size.to_string(),
            format!("{:.8}", r.frequency),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are `(iteration, gamma, rho, cost)`.
pub fn write_iwa_trace_csv(out: &mut dyn Write, instance: &str, rows: &[(usize, f64, f64, f64)]) -> Result<()> {
    let mut w = writer(out, "iwa_trace")?;
    w.write_record(["instance", "iteration", "gamma", "rho", "cost"])?;
    for &(it, gamma, rho, cost) in rows {
        w.write_record([
            instance.to_string(),
            it.to_string(),
            format!("{gamma:.8}"),
            format!("{rho:.8}"),
            format!("{cost:.6}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
