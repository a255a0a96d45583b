//! Fill-reducing orderings by nested dissection with level-structure
//! separators.

use crate::operator::SymmetricOperator;

/// Adjacency structure of the off-diagonal pattern, CSR, no self loops.
#[derive(Debug, Clone)]
pub struct Graph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    pub fn from_operator(op: &SymmetricOperator) -> Self {
        let n = op.dim();
        let mut deg = vec![0usize; n];
        for e in op.entries().iter().filter(|e| e.row != e.col) {
            deg[e.row] += 1;
            deg[e.col] += 1;
        }
        let mut xadj = vec![0usize; n + 1];
        for i in 0..n {
            xadj[i + 1] = xadj[i] + deg[i];
        }
        let mut fill = xadj[..n].to_vec();
        let mut adj = vec![0usize; xadj[n]];
        for e in op.entries().iter().filter(|e| e.row != e.col) {
            adj[fill[e.row]] = e.col;
            fill[e.row] += 1;
            adj[fill[e.col]] = e.row;
            fill[e.col] += 1;
        }
        Self { xadj, adj }
    }

    pub fn len(&self) -> usize {
        self.xadj.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.xadj[v]..self.xadj[v + 1]]
    }
}

const LEAF: usize = 64;
const UNSEEN: usize = usize::MAX;

struct Dissector<'a> {
    g: &'a Graph,
    /// Region tag of each vertex; only vertices tagged with the current
    /// region take part in a search.
    region: Vec<usize>,
    level: Vec<usize>,
    next_region: usize,
    order: Vec<usize>,
}

impl Dissector<'_> {
    fn fresh_region(&mut self, nodes: &[usize]) -> usize {
        let id = self.next_region;
        self.next_region += 1;
        for &v in nodes {
            self.region[v] = id;
        }
        id
    }

    /// Breadth-first level structure from `root` within region `id`.
    fn levels(&mut self, root: usize, id: usize, visited: &mut Vec<usize>) -> Vec<usize> {
        visited.clear();
        visited.push(root);
        self.level[root] = 0;
        let mut bounds = vec![0];
        let mut head = 0;
        while head < visited.len() {
            let v = visited[head];
            head += 1;
            let lv = self.level[v];
            for &w in self.g.neighbors(v) {
                if self.region[w] == id && self.level[w] == UNSEEN {
                    self.level[w] = lv + 1;
                    if lv + 1 == bounds.len() {
                        bounds.push(visited.len());
                    }
                    visited.push(w);
                }
            }
        }
        bounds.push(visited.len());
        bounds
    }

    fn clear_levels(&mut self, visited: &[usize]) {
        for &v in visited {
            self.level[v] = UNSEEN;
        }
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= LEAF {
            self.order.extend(nodes);
            return;
        }
        let id = self.fresh_region(&nodes);
        let mut visited = Vec::with_capacity(nodes.len());
        let mut bounds = self.levels(nodes[0], id, &mut visited);

        if visited.len() < nodes.len() {
            let mut components = vec![visited];
            for &v in &nodes {
                if self.level[v] == UNSEEN {
                    let mut comp = Vec::new();
                    self.levels(v, id, &mut comp);
                    components.push(comp);
                }
            }
            for comp in &components {
                self.clear_levels(comp);
            }
            // small pieces are batched so that isolated vertices do not
            // each cost a recursion
            let mut batch = Vec::new();
            for comp in components {
                if comp.len() <= LEAF {
                    batch.extend(comp);
                } else {
                    self.dissect(comp);
                }
            }
            self.order.extend(batch);
            return;
        }

        // pseudo-peripheral root: restart from a low-degree vertex of the
        // last level while the eccentricity keeps growing
        for _ in 0..4 {
            let depth = bounds.len() - 2;
            let last = &visited[bounds[depth]..bounds[depth + 1]];
            let candidate = *last
                .iter()
                .min_by_key(|&&v| self.g.neighbors(v).len())
                .expect("non-empty level");
            self.clear_levels(&visited);
            let mut trial = Vec::with_capacity(nodes.len());
            let trial_bounds = self.levels(candidate, id, &mut trial);
            if trial_bounds.len() > bounds.len() {
                visited = trial;
                bounds = trial_bounds;
            } else {
                self.clear_levels(&trial);
                bounds = self.levels(visited[0], id, &mut visited);
                break;
            }
        }

        let n_levels = bounds.len() - 1;
        if n_levels < 3 {
            self.clear_levels(&visited);
            self.order.extend(visited);
            return;
        }
        let half = visited.len() / 2;
        let mut s = (1..n_levels - 1)
            .find(|&l| bounds[l + 1] > half)
            .unwrap_or(n_levels - 2);
        s = s.clamp(1, n_levels - 2);

        let mut left = visited[..bounds[s]].to_vec();
        let right = visited[bounds[s + 1]..].to_vec();
        let mut sep = Vec::new();
        for &v in &visited[bounds[s]..bounds[s + 1]] {
            let touches_right = self
                .g
                .neighbors(v)
                .iter()
                .any(|&w| self.region[w] == id && self.level[w] == s + 1);
            if touches_right {
                sep.push(v);
            } else {
                left.push(v);
            }
        }
        self.clear_levels(&visited);
        self.dissect(left);
        self.dissect(right);
        self.order.extend(sep);
    }
}

/// Elimination order: `order[k]` is the original index eliminated `k`-th.
pub fn nested_dissection(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut d = Dissector {
        g,
        region: vec![UNSEEN; n],
        level: vec![UNSEEN; n],
        next_region: 0,
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect());
    d.order
}

/// Inverse of an elimination order: `perm[old] = new`.
pub fn inverse(order: &[usize]) -> Vec<usize> {
    let mut perm = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        perm[v] = k;
    }
    perm
}
