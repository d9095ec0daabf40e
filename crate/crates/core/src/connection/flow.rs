//! Min-cost flow by successive shortest paths with Bellman–Ford.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub cap: i64,
    pub cost: f64,
    pub flow: i64,
}

#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    // forward edge 2k, reverse edge 2k + 1
    arcs: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Network {
            n,
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Edge {
            from,
            to,
            cap,
            cost,
            flow: 0,
        });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Edge {
            from: to,
            to: from,
            cap: 0,
            cost: -cost,
            flow: 0,
        });
    }

    /// Forward edges with their flows.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.arcs.iter().step_by(2)
    }

    fn residual(&self, a: usize) -> i64 {
        self.arcs[a].cap - self.arcs[a].flow
    }

    /// Sends up to `limit` units from `s` to `t` at minimum cost. Ties between
    /// equally short paths are broken by edge insertion order.
    pub fn min_cost_flow(&mut self, s: usize, t: usize, limit: i64) -> Result<(i64, f64)> {
        let (mut value, mut cost) = (0i64, 0.0);
        while value < limit {
            let mut dist = vec![f64::INFINITY; self.n];
            let mut prev = vec![usize::MAX; self.n];
            dist[s] = 0.0;
            let mut rounds = 0;
            loop {
                let mut changed = false;
                for a in 0..self.arcs.len() {
                    let e = &self.arcs[a];
                    if self.residual(a) > 0 && dist[e.from] < f64::INFINITY {
                        let nd = dist[e.from] + e.cost;
                        if nd < dist[e.to] - 1e-12 {
                            dist[e.to] = nd;
                            prev[e.to] = a;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
                rounds += 1;
                if rounds > self.n {
                    return Err(Error::Solver {
                        residual: f64::NAN,
                        iterations: rounds,
                    });
                }
            }
            if dist[t] == f64::INFINITY {
                break;
            }
            let mut push = limit - value;
            let mut v = t;
            while v != s {
                let a = prev[v];
                push = push.min(self.residual(a));
                v = self.arcs[a].from;
            }
            let mut v = t;
            while v != s {
                let a = prev[v];
                self.arcs[a].flow += push;
                self.arcs[a ^ 1].flow -= push;
                v = self.arcs[a].from;
            }
            value += push;
            cost += push as f64 * dist[t];
        }
        Ok((value, cost))
    }
}
