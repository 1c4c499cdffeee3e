//! Non-dominated filtering over (energy, accuracy loss), both minimized.

use alloc::vec::Vec;

use crate::error::{invalid_arg, Result};

/// Losses at or below this count as no loss when anchoring energy savings.
pub const NO_LOSS_EPSILON: f64 = 0.0005;

/// `a` dominates `b` when it is no worse in both coordinates and strictly
/// better in one.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Indices (ascending) of the points no other point dominates. Points with
/// identical coordinates are all kept.
pub fn pareto_front(points: &[(f64, f64)]) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(invalid_arg!("pareto front of an empty point set"));
    }
    if let Some(i) = points.iter().position(|p| p.0.is_nan() || p.1.is_nan()) {
        return Err(invalid_arg!("point {i} has a NaN coordinate"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a].0.total_cmp(&points[b].0).then(points[a].1.total_cmp(&points[b].1))
    });

    let mut front = Vec::new();
    // best loss among strictly cheaper points
    let mut best = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let e = points[order[i]].0;
        let group_min = points[order[i]].1;
        let mut j = i;
        while j < order.len() && points[order[j]].0 == e {
            let l = points[order[j]].1;
            if l == group_min && l < best {
                front.push(order[j]);
            }
            j += 1;
        }
        best = best.min(group_min);
        i = j;
    }
    front.sort_unstable();
    Ok(front)
}

/// Energy of the cheapest loss-free point divided by the energy of the
/// cheapest point within `acceptable_loss`. `None` when no point is within
/// the budget.
pub fn energy_savings(front: &[(f64, f64)], acceptable_loss: f64) -> Result<Option<f64>> {
    if front.is_empty() {
        return Err(invalid_arg!("energy savings of an empty front"));
    }
    let cheapest = |limit: f64| {
        front.iter().filter(|p| p.1 <= limit).map(|p| p.0).min_by(f64::total_cmp)
    };
    let Some(budget) = cheapest(acceptable_loss) else {
        return Ok(None);
    };
    let Some(anchor) = cheapest(NO_LOSS_EPSILON.min(acceptable_loss)) else {
        return Ok(None);
    };
    Ok(Some(anchor / budget))
}
