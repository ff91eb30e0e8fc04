//! Maximum flow over exact rational capacities (Edmonds–Karp).
//!
//! Unbounded edges are given a finite sentinel capacity exceeding the sum
//! of all finite capacities, so no minimum cut ever crosses one.

use std::collections::VecDeque;

use crate::prob::Rat;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: Rat,
    rev: usize,
    /// Original capacity; `None` for unbounded edges and residual twins.
    orig: Option<Option<Rat>>,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<Edge>>,
    source: usize,
    sink: usize,
    unbounded: Vec<(usize, usize)>,
    solved: bool,
}

impl FlowNetwork {
    /// A network on `n` nodes; `source` and `sink` must be distinct.
    pub fn new(n: usize, source: usize, sink: usize) -> Self {
        assert!(source < n && sink < n && source != sink);
        FlowNetwork { adj: vec![Vec::new(); n], source, sink, unbounded: Vec::new(), solved: false }
    }

    fn push_edge(&mut self, u: usize, v: usize, cap: Rat, orig: Option<Rat>) {
        let (ru, rv) = (self.adj[v].len(), self.adj[u].len());
        self.adj[u].push(Edge { to: v, cap, rev: ru + usize::from(u == v), orig: Some(orig) });
        self.adj[v].push(Edge { to: u, cap: Rat::zero(), rev: rv, orig: None });
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cap: Rat) {
        assert!(cap >= Rat::zero(), "capacities are nonnegative");
        self.push_edge(u, v, cap.clone(), Some(cap));
    }

    /// An edge of effectively infinite capacity.
    pub fn add_unbounded_edge(&mut self, u: usize, v: usize) {
        self.unbounded.push((u, v));
    }

    /// Sum of all finite capacities plus one.
    fn sentinel(&self) -> Rat {
        let finite: Rat = self.adj.iter().flatten().filter_map(|e| e.orig.as_ref().and_then(|o| o.as_ref())).sum();
        finite + Rat::one()
    }

    /// Computes a maximum flow and returns its value. Call once.
    pub fn max_flow(&mut self) -> Rat {
        assert!(!self.solved, "max_flow is called once per network");
        self.solved = true;
        let sentinel = self.sentinel();
        for (u, v) in std::mem::take(&mut self.unbounded) {
            self.push_edge(u, v, sentinel.clone(), None);
        }
        let mut total = Rat::zero();
        loop {
            let n = self.adj.len();
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[self.source] = true;
            let mut queue = VecDeque::from([self.source]);
            while let Some(u) = queue.pop_front() {
                for (i, e) in self.adj[u].iter().enumerate() {
                    if !seen[e.to] && e.cap.is_positive() {
                        seen[e.to] = true;
                        prev[e.to] = Some((u, i));
                        queue.push_back(e.to);
                    }
                }
            }
            if !seen[self.sink] {
                return total;
            }
            let mut bottleneck: Option<Rat> = None;
            let mut v = self.sink;
            while let Some((u, i)) = prev[v] {
                let c = &self.adj[u][i].cap;
                if bottleneck.as_ref().is_none_or(|b| c < b) {
                    bottleneck = Some(c.clone());
                }
                v = u;
            }
            let b = bottleneck.expect("path has at least one edge");
            let mut v = self.sink;
            while let Some((u, i)) = prev[v] {
                let rev = self.adj[u][i].rev;
                self.adj[u][i].cap = &self.adj[u][i].cap - &b;
                self.adj[v][rev].cap = &self.adj[v][rev].cap + &b;
                v = u;
            }
            total = total + b;
        }
    }

    /// After `max_flow`: nodes reachable from the source in the residual
    /// graph, i.e. the source side of a minimum cut.
    pub fn source_side(&self) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[self.source] = true;
        let mut queue = VecDeque::from([self.source]);
        while let Some(u) = queue.pop_front() {
            for e in &self.adj[u] {
                if !seen[e.to] && e.cap.is_positive() {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }

    /// Total original capacity of edges leaving `side`.
    pub fn cut_capacity(&self, side: &[bool]) -> Rat {
        let sentinel = self.sentinel();
        self.adj
            .iter()
            .enumerate()
            .filter(|(u, _)| side[*u])
            .flat_map(|(_, es)| es.iter())
            .filter(|e| !side[e.to])
            .filter_map(|e| e.orig.as_ref().map(|o| o.clone().unwrap_or_else(|| sentinel.clone())))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_network() {
        // 0 -> 1 (1/2), 0 -> 2 (1/2), 1 -> 3 (1/3), 2 -> 3 (1), 1 -> 2 (1)
        let mut n = FlowNetwork::new(4, 0, 3);
        n.add_edge(0, 1, Rat::half());
        n.add_edge(0, 2, Rat::half());
        n.add_edge(1, 3, Rat::new(1, 3));
        n.add_edge(2, 3, Rat::one());
        n.add_edge(1, 2, Rat::one());
        assert_eq!(n.max_flow(), Rat::one());
        let side = n.source_side();
        assert_eq!(n.cut_capacity(&side), Rat::one());
    }

    #[test]
    fn unbounded_edges_never_bind() {
        let mut n = FlowNetwork::new(4, 0, 3);
        n.add_edge(0, 1, Rat::new(2, 3));
        n.add_unbounded_edge(1, 2);
        n.add_edge(2, 3, Rat::new(1, 3));
        assert_eq!(n.max_flow(), Rat::new(1, 3));
        let side = n.source_side();
        assert!(side[1] && side[2] && !side[3]);
    }

    #[test]
    fn disconnected_has_zero_flow() {
        let mut n = FlowNetwork::new(3, 0, 2);
        n.add_edge(0, 1, Rat::one());
        assert_eq!(n.max_flow(), Rat::zero());
    }
}
