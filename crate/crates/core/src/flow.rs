//! Dinic's max-flow on integer capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

const NIL: usize = usize::MAX;

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            head: vec![NIL; nodes],
            ..Default::default()
        }
    }

    pub fn nodes(&self) -> usize {
        self.head.len()
    }

    /// Directed edge `u -> v`; returns the edge id (its reverse is `id ^ 1`).
    pub fn add_edge(&mut self, u: usize, v: usize, cap: i64) -> usize {
        assert!(cap >= 0, "negative capacity");
        let id = self.to.len();
        for (from, dest, c) in [(u, v, cap), (v, u, 0)] {
            self.to.push(dest);
            self.cap.push(c);
            self.next.push(self.head[from]);
            self.head[from] = self.to.len() - 1;
        }
        id
    }

    /// Flow currently carried by edge `id`.
    pub fn flow_on(&self, id: usize) -> i64 {
        self.cap[id ^ 1]
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        if source == sink {
            return 0;
        }
        let n = self.nodes();
        let mut level = vec![0u32; n];
        let mut iter = vec![NIL; n];
        let mut total = 0i64;
        while self.bfs(source, sink, &mut level) {
            iter.copy_from_slice(&self.head);
            loop {
                let pushed = self.dfs(source, sink, i64::MAX, &level, &mut iter);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    fn bfs(&self, source: usize, sink: usize, level: &mut [u32]) -> bool {
        level.iter_mut().for_each(|l| *l = u32::MAX);
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
                e = self.next[e];
            }
        }
        level[sink] != u32::MAX
    }

    // Iterative DFS along the level graph; returns the bottleneck pushed.
    fn dfs(&mut self, source: usize, sink: usize, limit: i64, level: &[u32], iter: &mut [usize]) -> i64 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = source;
        loop {
            if u == sink {
                let pushed = path.iter().map(|&e| self.cap[e]).fold(limit, i64::min);
                for &e in &path {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                }
                return pushed;
            }
            let mut advanced = false;
            while iter[u] != NIL {
                let e = iter[u];
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                iter[u] = self.next[e];
            }
            if !advanced {
                // Dead end: retreat and skip the edge that led here.
                match path.pop() {
                    Some(e) => {
                        u = self.to[e ^ 1];
                        iter[u] = self.next[iter[u]];
                    }
                    None => return 0,
                }
            }
        }
    }
}
