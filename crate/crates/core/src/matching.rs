//! Cardinality matching in general graphs (Edmonds' blossom shrinking) and
//! a simple augmenting-path matcher for bipartite graphs.

use std::collections::VecDeque;

const NONE: usize = usize::MAX;

/// Undirected simple graph on vertices `0..n`.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Adds edge `{u, v}` and returns its index.
    pub fn add_edge(&mut self, u: usize, v: usize) -> usize {
        assert!(u != v, "self-loop at {u}");
        assert!(u < self.adj.len() && v < self.adj.len(), "vertex out of range");
        self.adj[u].push(v);
        self.adj[v].push(u);
        self.edges.push((u, v));
        self.edges.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }
}

/// `mate[v]` for every vertex, `None` when exposed.
pub type Mates = Vec<Option<usize>>;

struct Blossom<'g> {
    g: &'g Graph,
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    on_path: Vec<bool>,
    queue: VecDeque<usize>,
}

impl<'g> Blossom<'g> {
    fn new(g: &'g Graph) -> Self {
        let n = g.vertex_count();
        Blossom {
            g,
            mate: vec![NONE; n],
            parent: vec![NONE; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
            on_path: vec![false; n],
            queue: VecDeque::new(),
        }
    }

    fn seed(&mut self, seed: &[(usize, usize)]) {
        for &(u, v) in seed {
            if self.mate[u] == NONE && self.mate[v] == NONE && u != v {
                self.mate[u] = v;
                self.mate[v] = u;
            }
        }
    }

    fn lca(&mut self, mut a: usize, mut b: usize) -> usize {
        self.on_path.iter_mut().for_each(|x| *x = false);
        loop {
            a = self.base[a];
            self.on_path[a] = true;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if self.on_path[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    /// Searches an augmenting path from the exposed vertex `root`; returns
    /// its other end.
    fn find_path(&mut self, root: usize) -> Option<usize> {
        let n = self.g.vertex_count();
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        self.queue.clear();
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for idx in 0..self.g.adj[v].len() {
                let to = self.g.adj[v][idx];
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NONE && self.parent[self.mate[to]] != NONE) {
                    let cur = self.lca(v, to);
                    self.in_blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if self.mate[to] == NONE {
                        return Some(to);
                    }
                    let next = self.mate[to];
                    self.used[next] = true;
                    self.queue.push_back(next);
                }
            }
        }
        None
    }

    fn augment(&mut self, mut v: usize) {
        while v != NONE {
            let pv = self.parent[v];
            let ppv = self.mate[pv];
            self.mate[v] = pv;
            self.mate[pv] = v;
            v = ppv;
        }
    }

    fn mates(&self) -> Mates {
        self.mate.iter().map(|&m| (m != NONE).then_some(m)).collect()
    }
}

/// Maximum cardinality matching.
pub fn maximum_matching(g: &Graph) -> Mates {
    let mut b = Blossom::new(g);
    for v in 0..g.vertex_count() {
        if b.mate[v] == NONE {
            if let Some(end) = b.find_path(v) {
                b.augment(end);
            }
        }
    }
    b.mates()
}

/// Perfect matching if one exists. `seed` edges are taken greedily (when
/// both ends are still free) before any augmenting search, which lets
/// callers start from a nearly perfect matching.
pub fn perfect_matching_seeded(g: &Graph, seed: &[(usize, usize)]) -> Option<Mates> {
    let n = g.vertex_count();
    if n % 2 == 1 {
        return None;
    }
    let mut b = Blossom::new(g);
    b.seed(seed);
    for v in 0..n {
        if b.mate[v] != NONE {
            continue;
        }
        // greedy: take a free neighbor outright
        if let Some(&w) = g.adj[v].iter().find(|&&w| b.mate[w] == NONE) {
            b.mate[v] = w;
            b.mate[w] = v;
            continue;
        }
        // a vertex left exposed by a failed search stays exposed in every
        // maximum matching, so one failure settles the question
        let end = b.find_path(v)?;
        b.augment(end);
    }
    Some(b.mates())
}

pub fn perfect_matching(g: &Graph) -> Option<Mates> {
    perfect_matching_seeded(g, &[])
}

/// Checks that `mates` is a symmetric matching using only edges of `g`.
pub fn is_valid_matching(g: &Graph, mates: &Mates) -> bool {
    mates.iter().enumerate().all(|(v, m)| match *m {
        None => true,
        Some(w) => mates.get(w) == Some(&Some(v)) && g.neighbors(v).contains(&w),
    })
}

/// Maximum bipartite matching by repeated augmenting paths. `adj[l]` lists
/// right vertices adjacent to left vertex `l`; neighbors are tried in the
/// given order. Returns the right partner of every left vertex.
pub fn bipartite_matching(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    fn try_kuhn(l: usize, adj: &[Vec<usize>], seen: &mut [bool], match_r: &mut [Option<usize>]) -> bool {
        for &r in &adj[l] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if match_r[r].is_none_or(|l2| try_kuhn(l2, adj, seen, match_r)) {
                match_r[r] = Some(l);
                return true;
            }
        }
        false
    }
    let mut match_r = vec![None; right];
    for l in 0..adj.len() {
        let mut seen = vec![false; right];
        try_kuhn(l, adj, &mut seen, &mut match_r);
    }
    let mut match_l = vec![None; adj.len()];
    for (r, l) in match_r.iter().enumerate() {
        if let Some(l) = *l {
            match_l[l] = Some(r);
        }
    }
    match_l
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::from_edges(10, &edges)
    }

    /// Exhaustive: does some subset of edges form a perfect matching?
    fn brute_has_perfect(g: &Graph) -> bool {
        fn rec(v: usize, g: &Graph, used: &mut Vec<bool>) -> bool {
            let n = g.vertex_count();
            let Some(v) = (v..n).find(|&u| !used[u]) else { return true };
            used[v] = true;
            for &w in g.neighbors(v) {
                if !used[w] {
                    used[w] = true;
                    if rec(v + 1, g, used) {
                        used[w] = false;
                        used[v] = false;
                        return true;
                    }
                    used[w] = false;
                }
            }
            used[v] = false;
            false
        }
        rec(0, g, &mut vec![false; g.vertex_count()])
    }

    #[test]
    fn even_path_and_triangle() {
        let path = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let m = perfect_matching(&path).unwrap();
        assert!(is_valid_matching(&path, &m));
        assert_eq!(m.iter().filter(|x| x.is_some()).count(), 4);
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert!(perfect_matching(&tri).is_none());
    }

    #[test]
    fn petersen_has_perfect_matching() {
        let g = petersen();
        assert_eq!(g.edge_count(), 15);
        assert!(brute_has_perfect(&g));
        let m = perfect_matching(&g).unwrap();
        assert!(is_valid_matching(&g, &m));
        assert!(m.iter().all(|x| x.is_some()));
    }

    #[test]
    fn blossom_needed() {
        // 5-cycle with a pendant vertex on 3
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (3, 5)]);
        assert!(brute_has_perfect(&g));
        let m = perfect_matching_seeded(&g, &[(0, 1), (2, 3)]).unwrap();
        assert!(is_valid_matching(&g, &m));
    }

    #[test]
    fn random_graphs_match_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(1..=10);
            let density = rng.gen_range(0.1..0.7);
            let mut g = Graph::new(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(density) {
                        g.add_edge(u, v);
                    }
                }
            }
            let got = perfect_matching(&g);
            assert_eq!(got.is_some(), brute_has_perfect(&g), "{:?}", g.edges());
            if let Some(m) = got {
                assert!(is_valid_matching(&g, &m));
            }
            let max = maximum_matching(&g);
            assert!(is_valid_matching(&g, &max));
        }
    }

    #[test]
    fn bipartite_agrees_with_blossom() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let l = rng.gen_range(1..6);
            let r = rng.gen_range(1..6);
            let adj: Vec<Vec<usize>> = (0..l).map(|_| (0..r).filter(|_| rng.gen_bool(0.4)).collect()).collect();
            let kuhn = bipartite_matching(&adj, r).iter().filter(|x| x.is_some()).count();
            let mut g = Graph::new(l + r);
            for (u, row) in adj.iter().enumerate() {
                for &v in row {
                    g.add_edge(u, l + v);
                }
            }
            let blossom = maximum_matching(&g).iter().filter(|x| x.is_some()).count() / 2;
            assert_eq!(kuhn, blossom);
        }
    }
}
