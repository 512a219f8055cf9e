//! Successive-shortest-path min-cost flow over lexicographically ordered
//! cost vectors.
//!
//! Costs are compared component by component, so a unit of the first
//! component outweighs any amount of the later ones without a numeric base
//! and without overflow concerns.

use std::collections::VecDeque;
use std::ops::{Add, Neg, Sub};

pub(crate) const COST_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Cost(pub [i64; COST_DIM]);

impl Cost {
    pub const ZERO: Cost = Cost([0; COST_DIM]);

    /// Unit cost in component `k`.
    pub fn unit(k: usize) -> Cost {
        let mut c = [0; COST_DIM];
        c[k] = 1;
        Cost(c)
    }

    fn scale(self, by: i64) -> Cost {
        Cost(self.0.map(|x| x * by))
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Cost(out)
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        self + (-rhs)
    }
}

impl Neg for Cost {
    type Output = Cost;
    fn neg(self) -> Cost {
        Cost(self.0.map(|x| -x))
    }
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    cost: Cost,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); nodes],
            arcs: Vec::new(),
        }
    }

    /// Adds `from -> to` and its residual twin; returns the forward arc id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: Cost) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently pushed through forward arc `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.arcs[id ^ 1].cap
    }

    /// Pushes flow from `source` to `sink` along cheapest residual paths for
    /// as long as the path cost is negative. The result is a minimum-cost flow
    /// among flows of every value. Returns (flow value, total cost).
    ///
    /// The network must start without negative cycles.
    pub fn min_cost_flow(&mut self, source: usize, sink: usize) -> (i64, Cost) {
        let n = self.adj.len();
        let mut total = 0;
        let mut total_cost = Cost::ZERO;
        let mut dist: Vec<Option<Cost>> = vec![None; n];
        let mut via: Vec<usize> = vec![usize::MAX; n];
        let mut queued = vec![false; n];
        loop {
            dist.iter_mut().for_each(|d| *d = None);
            via.iter_mut().for_each(|v| *v = usize::MAX);
            dist[source] = Some(Cost::ZERO);
            let mut queue = VecDeque::from([source]);
            queued[source] = true;
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                let du = dist[u].expect("queued node has a distance");
                for &a in &self.adj[u] {
                    let arc = &self.arcs[a];
                    if arc.cap <= 0 {
                        continue;
                    }
                    let nd = du + arc.cost;
                    if dist[arc.to].is_none_or(|d| nd < d) {
                        dist[arc.to] = Some(nd);
                        via[arc.to] = a;
                        if !queued[arc.to] {
                            queued[arc.to] = true;
                            queue.push_back(arc.to);
                        }
                    }
                }
            }
            let path_cost = match dist[sink] {
                Some(c) if c < Cost::ZERO => c,
                _ => break,
            };
            let mut push = i64::MAX;
            let mut v = sink;
            while v != source {
                let a = via[v];
                push = push.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let a = via[v];
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                v = self.arcs[a ^ 1].to;
            }
            total += push;
            total_cost = total_cost + path_cost.scale(push);
        }
        (total, total_cost)
    }
}
