//! Minimum-weight vertex cover on small bipartite graphs via max flow.

use std::collections::VecDeque;

/// Residual capacities at or below this count as saturated.
const FLOW_EPS: f64 = 1e-14;

/// Minimum-weight vertex cover of the bipartite graph with left weights `wa`,
/// right weights `wb` and edges `(i, j)`.
///
/// Returns `(in_cover_left, in_cover_right, weight)`.
pub fn min_weight_cover(
    wa: &[f64],
    wb: &[f64],
    edges: &[(usize, usize)],
) -> (Vec<bool>, Vec<bool>, f64) {
    let (na, nb) = (wa.len(), wb.len());
    let n = na + nb + 2;
    let (src, snk) = (na + nb, na + nb + 1);
    let mut cap = vec![vec![0.0f64; n]; n];
    for i in 0..na {
        cap[src][i] = wa[i];
    }
    for j in 0..nb {
        cap[na + j][snk] = wb[j];
    }
    for &(i, j) in edges {
        cap[i][na + j] = f64::INFINITY;
    }

    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[src] = src;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            if u == snk {
                break;
            }
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > FLOW_EPS {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[snk] == usize::MAX {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = snk;
        while v != src {
            let u = prev[v];
            push = push.min(cap[u][v]);
            v = u;
        }
        let mut v = snk;
        while v != src {
            let u = prev[v];
            cap[u][v] -= push;
            cap[v][u] += push;
            v = u;
        }
        flow += push;
    }

    // source side of the min cut
    let mut seen = vec![false; n];
    seen[src] = true;
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for v in 0..n {
            if !seen[v] && cap[u][v] > FLOW_EPS {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    let ca: Vec<bool> = (0..na).map(|i| !seen[i]).collect();
    let cb: Vec<bool> = (0..nb).map(|j| seen[na + j]).collect();
    let w = ca
        .iter()
        .zip(wa)
        .filter(|p| *p.0)
        .map(|p| p.1)
        .sum::<f64>()
        + cb.iter().zip(wb).filter(|p| *p.0).map(|p| p.1).sum::<f64>();
    debug_assert!((w - flow).abs() <= 1e-9 * (1.0 + flow));
    (ca, cb, w)
}
