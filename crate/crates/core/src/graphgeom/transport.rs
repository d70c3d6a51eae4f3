//! Exact discrete optimal transport by successive shortest paths.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Mass below this is treated as exhausted.
const MASS_EPS: f64 = 1e-15;

struct Arc {
    to: usize,
    cost: f64,
    /// Residual capacity; forward arcs are uncapacitated.
    cap: f64,
}

/// Minimum cost of moving `supply` onto `demand` with ground costs
/// `cost[i][j]`. Both marginals must carry the same total mass.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<f64> {
    let (ns, nt) = (supply.len(), demand.len());
    let (s_total, t_total): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (s_total - t_total).abs() > 1e-9 * s_total.max(1.0) {
        return Err(Error::invalid(format!(
            "unbalanced transport: {s_total} vs {t_total}"
        )));
    }
    if cost.len() != ns || cost.iter().any(|r| r.len() != nt) {
        return Err(Error::invalid("cost matrix shape does not match the marginals"));
    }
    // nodes: source 0, supplies 1..=ns, demands ns+1..=ns+nt, sink ns+nt+1
    let n = ns + nt + 2;
    let sink = n - 1;
    let mut arcs: Vec<Arc> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut link = |arcs: &mut Vec<Arc>, a: usize, b: usize, cost: f64, cap: f64| {
        out[a].push(arcs.len());
        arcs.push(Arc { to: b, cost, cap });
        out[b].push(arcs.len());
        arcs.push(Arc {
            to: a,
            cost: -cost,
            cap: 0.0,
        });
    };
    for (i, &s) in supply.iter().enumerate() {
        link(&mut arcs, 0, 1 + i, 0.0, s);
    }
    for (j, &t) in demand.iter().enumerate() {
        link(&mut arcs, 1 + ns + j, sink, 0.0, t);
    }
    for i in 0..ns {
        for j in 0..nt {
            link(&mut arcs, 1 + i, 1 + ns + j, cost[i][j], f64::INFINITY);
        }
    }

    let mut remaining = s_total;
    let mut total = 0.0;
    let mut dist = vec![0.0; n];
    let mut prev = vec![usize::MAX; n];
    let mut queued = vec![false; n];
    for _ in 0..(4 * n * n + 16) {
        if remaining <= MASS_EPS * s_total.max(1.0) {
            return Ok(total);
        }
        // Bellman-Ford with a queue: reverse arcs carry negative costs.
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        dist[0] = 0.0;
        let mut q = VecDeque::from([0usize]);
        queued[0] = true;
        while let Some(a) = q.pop_front() {
            queued[a] = false;
            for &e in &out[a] {
                let arc = &arcs[e];
                if arc.cap <= MASS_EPS {
                    continue;
                }
                let nd = dist[a] + arc.cost;
                if nd < dist[arc.to] - 1e-12 {
                    dist[arc.to] = nd;
                    prev[arc.to] = e;
                    if !queued[arc.to] {
                        queued[arc.to] = true;
                        q.push_back(arc.to);
                    }
                }
            }
        }
        if prev[sink] == usize::MAX {
            break;
        }
        let mut push = remaining;
        let mut v = sink;
        while v != 0 {
            let e = prev[v];
            push = push.min(arcs[e].cap);
            v = arcs[e ^ 1].to;
        }
        let mut v = sink;
        while v != 0 {
            let e = prev[v];
            arcs[e].cap -= push;
            arcs[e ^ 1].cap += push;
            v = arcs[e ^ 1].to;
        }
        total += push * dist[sink];
        remaining -= push;
    }
    if remaining <= 1e-12 * s_total.max(1.0) {
        return Ok(total);
    }
    Err(Error::Internal(format!(
        "transport did not converge, {remaining} mass left"
    )))
}
