//! Plant–observer graph and its observer-only reduction.
//!
//! Node `0` is always the plant; nodes `1..=N` are the observer oscillators.
//! Edges are unordered and keyed as `(min, max)`, so `μ_ij = μ_ji` holds by
//! construction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

fn key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGraph {
    n: usize,
    weights: BTreeMap<(usize, usize), f64>,
}

impl ObserverGraph {
    /// Graph with `n` observer nodes (plus the plant node 0) and no edges.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            weights: BTreeMap::new(),
        }
    }

    /// Declares edge `{i, j}` with weight `mu`. Only index range and
    /// duplicates are checked here; [`ObserverGraph::validate`] does the rest.
    pub fn insert_edge(&mut self, i: usize, j: usize, mu: f64) -> Result<()> {
        if i > self.n || j > self.n {
            return Err(Error::NodeOutOfRange { i, j, max: self.n });
        }
        let k = key(i, j);
        if self.weights.insert(k, mu).is_some() {
            return Err(Error::DuplicateEdge { i: k.0, j: k.1 });
        }
        Ok(())
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = Self::new(n);
        for (i, j, mu) in edges {
            g.insert_edge(i, j, mu)?;
        }
        Ok(g)
    }

    /// Complete graph on nodes `0..=n`, every weight `mu`.
    pub fn complete(n: usize, mu: f64) -> Self {
        let mut g = Self::new(n);
        for i in 0..=n {
            for j in i + 1..=n {
                g.weights.insert((i, j), mu);
            }
        }
        g
    }

    /// Path `0 – 1 – … – n`.
    pub fn path(n: usize, mu: f64) -> Self {
        let mut g = Self::new(n);
        for j in 1..=n {
            g.weights.insert((j - 1, j), mu);
        }
        g
    }

    /// Star centred on the plant node.
    pub fn star(n: usize, mu: f64) -> Self {
        let mut g = Self::new(n);
        for j in 1..=n {
            g.weights.insert((0, j), mu);
        }
        g
    }

    /// Uniformly random labelled spanning tree on `0..=n` (via a Prüfer
    /// sequence), then every remaining pair with probability `extra_prob`.
    /// Weights are uniform on `[lo, hi]`.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        (lo, hi): (f64, f64),
        extra_prob: f64,
        rng: &mut R,
    ) -> Self {
        let nodes = n + 1;
        let mut g = Self::new(n);
        let weight = |rng: &mut R| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        };
        for (i, j) in prufer_tree(nodes, rng) {
            let w = weight(rng);
            g.weights.insert(key(i, j), w);
        }
        for i in 0..nodes {
            for j in i + 1..nodes {
                if !g.weights.contains_key(&(i, j)) && rng.random_bool(extra_prob) {
                    let w = weight(rng);
                    g.weights.insert((i, j), w);
                }
            }
        }
        g
    }

    /// Observer node count `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.weights.get(&key(i, j)).copied()
    }

    /// Edges as `(i, j, μ_ij)` with `i <= j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    /// Copy with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            weights: self.weights.iter().map(|(&k, &w)| (k, w * c)).collect(),
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(i, j) in self.weights.keys() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj
    }

    /// Ok iff there are no self-loops, all weights are strictly positive and
    /// finite, and the `N + 1` node graph is connected.
    pub fn validate(&self) -> Result<()> {
        for (&(i, j), &w) in &self.weights {
            if i == j {
                return Err(Error::SelfLoop { node: i });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonpositiveWeight { i, j, weight: w });
            }
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n + 1];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let unreachable: Vec<usize> = (0..=self.n).filter(|&v| !seen[v]).collect();
        if unreachable.is_empty() {
            Ok(())
        } else {
            Err(Error::DisconnectedGraph { unreachable })
        }
    }

    /// Removes the plant node and rescales weights by `‖α1‖²`.
    pub fn reduce(&self, alpha1_norm_sq: f64) -> Result<ReducedGraph> {
        self.validate()?;
        if !(alpha1_norm_sq > 0.0) || !alpha1_norm_sq.is_finite() {
            return Err(Error::ZeroAlpha);
        }
        let mut rg = ReducedGraph::new(self.n);
        for (i, j, w) in self.edges() {
            let scaled = w * alpha1_norm_sq;
            if i == 0 {
                rg.plant_attached.insert(j, scaled);
            } else {
                rg.weights.insert((i, j), scaled);
            }
        }
        Ok(rg)
    }
}

fn prufer_tree<R: Rng + ?Sized>(nodes: usize, rng: &mut R) -> Vec<(usize, usize)> {
    match nodes {
        0 | 1 => return Vec::new(),
        2 => return vec![(0, 1)],
        _ => {}
    }
    let seq: Vec<usize> = (0..nodes - 2).map(|_| rng.random_range(0..nodes)).collect();
    let mut degree = vec![1usize; nodes];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(nodes - 1);
    for &s in &seq {
        let leaf = leaves
            .pop_first()
            .expect("prufer decoding always has a leaf");
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Random graph over `0..=n` that is guaranteed not to be connected: nodes are
/// split into two nonempty groups (node 0 in the first) and random edges are
/// only drawn within each group.
pub fn random_disconnected<R: Rng + ?Sized>(
    n: usize,
    (lo, hi): (f64, f64),
    edge_prob: f64,
    rng: &mut R,
) -> ObserverGraph {
    assert!(
        n >= 1,
        "a disconnected graph needs at least one observer node"
    );
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let cut = rng.random_range(0..n);
    let mut group = vec![0usize; n + 1];
    for &v in &order[cut..] {
        group[v] = 1;
    }
    let mut g = ObserverGraph::new(n);
    for i in 0..=n {
        for j in i + 1..=n {
            if group[i] == group[j] && rng.random_bool(edge_prob) {
                g.weights.insert((i, j), rng.random_range(lo..=hi));
            }
        }
    }
    g
}

/// Observer-only graph with weights `μ̃_ij = μ_ij ‖α1‖²` and the set of
/// nodes attached to the plant with weights `μ̃_0j`. Nodes are labelled `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGraph {
    n: usize,
    weights: BTreeMap<(usize, usize), f64>,
    plant_attached: BTreeMap<usize, f64>,
}

impl ReducedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            weights: BTreeMap::new(),
            plant_attached: BTreeMap::new(),
        }
    }

    /// Adds observer edge `{i, j}` (both in `1..=N`).
    pub fn insert_edge(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::NodeOutOfRange { i, j, max: self.n });
        }
        if i == j {
            return Err(Error::SelfLoop { node: i });
        }
        self.weights.insert(key(i, j), w);
        Ok(())
    }

    pub fn attach_to_plant(&mut self, j: usize, w: f64) -> Result<()> {
        if j == 0 || j > self.n {
            return Err(Error::NodeOutOfRange {
                i: 0,
                j,
                max: self.n,
            });
        }
        self.plant_attached.insert(j, w);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.weights.get(&key(i, j)).copied()
    }

    /// Plant-attached observer nodes with weights `μ̃_0j`.
    pub fn plant_attached(&self) -> &BTreeMap<usize, f64> {
        &self.plant_attached
    }

    /// Weighted Laplacian `R̃_o1` of the observer-only graph.
    pub fn weighted_laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (i, j, w) in self.edges() {
            let (a, b) = (i - 1, j - 1);
            l[(a, b)] -= w;
            l[(b, a)] -= w;
            l[(a, a)] += w;
            l[(b, b)] += w;
        }
        l
    }

    /// Diagonal `R̃_o2` with `μ̃_0j` at plant-attached nodes.
    pub fn plant_attachment_diag(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (&j, &w) in &self.plant_attached {
            d[(j - 1, j - 1)] = w;
        }
        d
    }

    /// Connected components of the observer-only graph, in order of their
    /// smallest node.
    pub fn connected_components(&self) -> Components {
        let mut adj = vec![Vec::new(); self.n + 1];
        for (i, j, _) in self.edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut label = vec![usize::MAX; self.n + 1];
        let mut sets = Vec::new();
        for start in 1..=self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = sets.len();
            let mut members = vec![start];
            label[start] = id;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        members.push(v);
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            sets.push(members);
        }
        Components { n: self.n, sets }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    n: usize,
    pub sets: Vec<Vec<usize>>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sets.len()
    }

    /// 0/1 indicator vectors `f_k` of each component.
    pub fn indicators(&self) -> Vec<DVector<f64>> {
        self.sets
            .iter()
            .map(|set| {
                let mut f = DVector::zeros(self.n);
                for &v in set {
                    f[v - 1] = 1.0;
                }
                f
            })
            .collect()
    }
}

/// Number of eigenvalues of the symmetric matrix `l` below
/// `1e-9 · max(diag)`. An all-zero matrix has full nullity.
pub fn laplacian_nullity(l: &DMatrix<f64>) -> usize {
    if l.nrows() == 0 {
        return 0;
    }
    let scale = l.diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return l.nrows();
    }
    let eig = SymmetricEigen::new(l.clone());
    eig.eigenvalues
        .iter()
        .filter(|&&x| x.abs() < 1e-9 * scale)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validate_examples() {
        assert!(ObserverGraph::complete(5, 1.0).validate().is_ok());
        assert!(ObserverGraph::from_edges(1, [(0, 1, 1.0)])
            .unwrap()
            .validate()
            .is_ok());
        let g = ObserverGraph::from_edges(2, [(1, 2, 1.0)]).unwrap();
        assert!(matches!(
            g.validate(),
            Err(Error::DisconnectedGraph { unreachable }) if unreachable == vec![1, 2]
        ));
    }

    #[test]
    fn validate_rejects_bad_edges() {
        let g = ObserverGraph::from_edges(2, [(0, 1, 1.0), (1, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(matches!(g.validate(), Err(Error::SelfLoop { node: 1 })));
        let g = ObserverGraph::from_edges(2, [(0, 1, 1.0), (2, 1, 0.0)]).unwrap();
        assert!(matches!(
            g.validate(),
            Err(Error::NonpositiveWeight { i: 1, j: 2, .. })
        ));
        let g = ObserverGraph::from_edges(1, [(0, 1, -1.0)]).unwrap();
        assert!(matches!(g.validate(), Err(Error::NonpositiveWeight { .. })));
        assert!(matches!(
            ObserverGraph::from_edges(2, [(0, 3, 1.0)]),
            Err(Error::NodeOutOfRange { .. })
        ));
        assert!(matches!(
            ObserverGraph::from_edges(2, [(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::DuplicateEdge { i: 0, j: 1 })
        ));
    }

    #[test]
    fn reduce_examples() {
        let rg = ObserverGraph::complete(5, 1.0).reduce(1.0).unwrap();
        assert!(rg.edges().all(|(_, _, w)| w == 1.0));
        assert_eq!(rg.edges().count(), 10);
        assert_eq!(
            rg.plant_attached().keys().copied().collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5]
        );

        let rg = ObserverGraph::from_edges(1, [(0, 1, 2.0)])
            .unwrap()
            .reduce(0.5)
            .unwrap();
        assert_eq!(rg.edges().count(), 0);
        assert_eq!(rg.plant_attached().get(&1), Some(&1.0));

        let rg = ObserverGraph::path(2, 1.0).reduce(1.0).unwrap();
        assert_eq!(rg.edges().collect::<Vec<_>>(), vec![(1, 2, 1.0)]);
        assert_eq!(
            rg.plant_attached().keys().copied().collect::<Vec<_>>(),
            vec![1]
        );
    }

    #[test]
    fn laplacian_examples() {
        let rg = ObserverGraph::complete(5, 1.0).reduce(1.0).unwrap();
        let expected = DMatrix::identity(5, 5) * 5.0 - DMatrix::from_element(5, 5, 1.0);
        assert_eq!(rg.weighted_laplacian(), expected);
        assert_eq!(rg.plant_attachment_diag(), DMatrix::identity(5, 5));

        assert_eq!(
            ReducedGraph::new(1).weighted_laplacian(),
            DMatrix::zeros(1, 1)
        );

        let mut path = ReducedGraph::new(2);
        path.insert_edge(1, 2, 1.0).unwrap();
        assert_eq!(
            path.weighted_laplacian(),
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
    }

    #[test]
    fn attachment_examples() {
        let mut rg = ReducedGraph::new(3);
        rg.attach_to_plant(1, 3.0).unwrap();
        assert_eq!(
            rg.plant_attachment_diag(),
            DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.0, 0.0]))
        );
        let rg = ObserverGraph::star(4, 0.7).reduce(1.0).unwrap();
        assert_eq!(rg.plant_attachment_diag(), DMatrix::identity(4, 4) * 0.7);
    }

    #[test]
    fn component_examples() {
        let rg = ObserverGraph::complete(5, 1.0).reduce(1.0).unwrap();
        let c = rg.connected_components();
        assert_eq!(c.count(), 1);
        assert_eq!(c.indicators()[0], DVector::from_element(5, 1.0));

        let mut rg = ReducedGraph::new(4);
        rg.insert_edge(1, 2, 1.0).unwrap();
        let c = rg.connected_components();
        assert_eq!(c.sets, vec![vec![1, 2], vec![3], vec![4]]);

        assert_eq!(ReducedGraph::new(3).connected_components().count(), 3);
    }

    #[test]
    fn nullity_matches_components() {
        let mut rg = ReducedGraph::new(4);
        rg.insert_edge(1, 2, 1.0).unwrap();
        assert_eq!(laplacian_nullity(&rg.weighted_laplacian()), 3);
        let rg = ObserverGraph::complete(5, 1.0).reduce(1.0).unwrap();
        assert_eq!(laplacian_nullity(&rg.weighted_laplacian()), 1);
    }

    #[test]
    fn random_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=8 {
            for _ in 0..20 {
                let g = ObserverGraph::random_connected(n, (0.1, 2.0), 0.3, &mut rng);
                assert!(g.validate().is_ok());
                assert!(g.edges().all(|(_, _, w)| (0.1..=2.0).contains(&w)));
                let d = random_disconnected(n, (0.1, 2.0), 0.5, &mut rng);
                assert!(matches!(d.validate(), Err(Error::DisconnectedGraph { .. })));
            }
        }
        let a =
            ObserverGraph::random_connected(6, (0.1, 2.0), 0.3, &mut ChaCha8Rng::seed_from_u64(3));
        let b =
            ObserverGraph::random_connected(6, (0.1, 2.0), 0.3, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
