//! Fill-reducing ordering by recursive level-set bisection.

const LEAF_SIZE: usize = 48;
const NONE: usize = usize::MAX;

/// Nested-dissection permutation of a graph given by adjacency lists.
///
/// Returns `perm` with `perm[new] = old`. Each subgraph is split by the
/// middle breadth-first level from a pseudo-peripheral node; the separator is
/// numbered after both halves.
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut ctx = Ctx {
        adj,
        label: vec![0; n],
        dist: vec![NONE; n],
        next_label: 1,
        order: Vec::with_capacity(n),
        touched: Vec::new(),
    };
    let all: Vec<usize> = (0..n).collect();
    ctx.dissect(all, 0);
    debug_assert_eq!(ctx.order.len(), n);
    ctx.order
}

struct Ctx<'a> {
    adj: &'a [Vec<usize>],
    label: Vec<u32>,
    dist: Vec<usize>,
    next_label: u32,
    order: Vec<usize>,
    touched: Vec<usize>,
}

impl Ctx<'_> {
    fn fresh_label(&mut self, nodes: &[usize]) -> u32 {
        let l = self.next_label;
        self.next_label += 1;
        for &v in nodes {
            self.label[v] = l;
        }
        l
    }

    fn dissect(&mut self, nodes: Vec<usize>, label: u32) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend_from_slice(&nodes);
            return;
        }
        let levels = self.bfs_levels(nodes[0], label);
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            // Disconnected: handle the reached component and the rest separately.
            let comp: Vec<usize> = levels.into_iter().flatten().collect();
            let lc = self.fresh_label(&comp);
            let rest: Vec<usize> = nodes.into_iter().filter(|&v| self.label[v] == label).collect();
            let lr = self.fresh_label(&rest);
            self.dissect(comp, lc);
            self.dissect(rest, lr);
            return;
        }

        let start = self.pseudo_peripheral(nodes[0], label, levels.len());
        let levels = self.bfs_levels(start, label);
        if levels.len() < 3 {
            self.order.extend_from_slice(&nodes);
            return;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (k, lvl) in levels.iter().enumerate() {
            acc += lvl.len();
            if acc >= half {
                mid = k;
                break;
            }
        }
        let mid = mid.clamp(1, levels.len() - 2);

        // Separator nodes without a neighbour beyond the middle level join the near half.
        let mut near: Vec<usize> = levels[..mid].iter().flatten().copied().collect();
        let far: Vec<usize> = levels[mid + 1..].iter().flatten().copied().collect();
        let mut separator = Vec::new();
        for &v in &levels[mid] {
            let touches_far = self.adj[v]
                .iter()
                .any(|&w| self.label[w] == label && self.dist[w] == mid + 1);
            if touches_far {
                separator.push(v);
            } else {
                near.push(v);
            }
        }
        let ln = self.fresh_label(&near);
        let lf = self.fresh_label(&far);
        self.fresh_label(&separator);
        self.dissect(near, ln);
        self.dissect(far, lf);
        self.order.extend_from_slice(&separator);
    }

    /// Breadth-first levels within `label`. Distances stay valid in `dist`
    /// until the next search.
    fn bfs_levels(&mut self, start: usize, label: u32) -> Vec<Vec<usize>> {
        for v in self.touched.drain(..) {
            self.dist[v] = NONE;
        }
        let mut levels: Vec<Vec<usize>> = vec![vec![start]];
        self.dist[start] = 0;
        self.touched.push(start);
        loop {
            let depth = levels.len();
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &self.adj[v] {
                    if self.label[w] == label && self.dist[w] == NONE {
                        self.dist[w] = depth;
                        next.push(w);
                        self.touched.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    }

    fn pseudo_peripheral(&mut self, mut start: usize, label: u32, mut ecc: usize) -> usize {
        for _ in 0..4 {
            let levels = self.bfs_levels(start, label);
            let last = levels.last().unwrap();
            let candidate = *last
                .iter()
                .min_by_key(|&&v| (self.adj[v].iter().filter(|&&w| self.label[w] == label).count(), v))
                .unwrap();
            let cand_levels = self.bfs_levels(candidate, label);
            if cand_levels.len() > ecc.max(levels.len()) {
                ecc = cand_levels.len();
                start = candidate;
            } else {
                break;
            }
        }
        start
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); k * k];
        for j in 0..k {
            for i in 0..k {
                let v = j * k + i;
                if i + 1 < k {
                    adj[v].push(v + 1);
                    adj[v + 1].push(v);
                }
                if j + 1 < k {
                    adj[v].push(v + k);
                    adj[v + k].push(v);
                }
            }
        }
        adj
    }

    #[test]
    fn ordering_is_a_permutation() {
        for adj in [grid(1), grid(7), grid(40)] {
            let perm = nested_dissection(&adj);
            let mut seen = vec![false; adj.len()];
            for &v in &perm {
                assert!(!seen[v]);
                seen[v] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn disconnected_graphs_are_ordered() {
        let mut adj = grid(10);
        let offset = adj.len();
        for list in grid(9) {
            adj.push(list.into_iter().map(|v| v + offset).collect());
        }
        let perm = nested_dissection(&adj);
        assert_eq!(perm.len(), 181);
    }
}
