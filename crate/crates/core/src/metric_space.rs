//! ε-nets of slices `(F, g_T)`, graph distances, diameter estimates and the
//! cover-diameter inequality on finite metric spaces.

use petgraph::algo::{connected_components, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;
use std::io::Write;

use crate::comparison::SliceDistance;
use crate::error::{GeometryError, Result};
use crate::metric_family::{quad, FiberPoint, HypothesisCertificate, MetricFamily};

/// Nets above this size use the two-sweep diameter bounds instead of all pairs.
pub const EXACT_DIAMETER_LIMIT: usize = 5000;
/// Cap on the background point count used to seed a net.
const BACKGROUND_CAP: usize = 60_000;

/// Weighted undirected graph with `usize` node ids.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    graph: UnGraph<(), f64, u32>,
}

impl WeightedGraph {
    pub fn new(nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut graph = UnGraph::with_capacity(nodes, edges.len());
        for _ in 0..nodes {
            graph.add_node(());
        }
        for &(a, b, w) in edges {
            if a >= nodes || b >= nodes {
                return Err(GeometryError::Graph(format!("edge ({a}, {b}) out of range")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(GeometryError::Graph(format!("edge ({a}, {b}) has weight {w}")));
            }
            graph.add_edge(NodeIndex::new(a), NodeIndex::new(b), w);
        }
        Ok(Self { graph })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.graph
            .edge_indices()
            .map(|e| {
                let (a, b) = self.graph.edge_endpoints(e).expect("edge exists");
                (a.index(), b.index(), self.graph[e])
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() > 0 && connected_components(&self.graph) == 1
    }

    /// Shortest-path distances from `source` (infinite when unreachable).
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let map = dijkstra(&self.graph, NodeIndex::new(source), None, |e| *e.weight());
        let mut out = vec![f64::INFINITY; self.node_count()];
        for (k, d) in map {
            out[k.index()] = d;
        }
        out
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let map = dijkstra(&self.graph, NodeIndex::new(a), Some(NodeIndex::new(b)), |e| *e.weight());
        map.get(&NodeIndex::new(b)).copied().unwrap_or(f64::INFINITY)
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.graph.neighbors(NodeIndex::new(a)).map(|k| k.index())
    }

    /// All-pairs shortest paths, parallel over sources.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.node_count()).into_par_iter().map(|s| self.distances_from(s)).collect()
    }

    /// Whether `subset` induces a connected subgraph.
    pub fn induces_connected(&self, subset: &[usize]) -> bool {
        if subset.is_empty() {
            return false;
        }
        let mut member = vec![false; self.node_count()];
        for &v in subset {
            member[v] = true;
        }
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([subset[0]]);
        seen[subset[0]] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if member[w] && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        let distinct = member.iter().filter(|m| **m).count();
        count == distinct
    }
}

/// An ε-net of `(F, g_T)` with edges between nodes closer than `3ε`.
#[derive(Clone, Debug)]
pub struct NetGraph {
    pub nodes: Vec<FiberPoint>,
    pub epsilon: f64,
    pub t: f64,
    graph: WeightedGraph,
}

impl NetGraph {
    /// Assembles a net from explicit nodes and edges.
    pub fn from_parts(nodes: Vec<FiberPoint>, edges: &[(usize, usize, f64)], epsilon: f64, t: f64) -> Result<Self> {
        let graph = WeightedGraph::new(nodes.len(), edges)?;
        Ok(Self { nodes, epsilon, t, graph })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.graph.edges()
    }

    /// Node ids within graph distance `r` of `center`.
    pub fn ball(&self, center: usize, r: f64) -> Vec<usize> {
        self.graph
            .distances_from(center)
            .iter()
            .enumerate()
            .filter(|(_, d)| **d <= r)
            .map(|(i, _)| i)
            .collect()
    }

    /// Nearest node to `x` in the slice distance.
    pub fn nearest(&self, family: &MetricFamily, x: &FiberPoint) -> Result<(usize, f64)> {
        let dist = SliceMetric::new(family, self.t);
        let mut best = (0, f64::INFINITY);
        for (i, node) in self.nodes.iter().enumerate() {
            let d = dist.distance(node, x)?;
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }

    /// Writes the edge list `i,j,weight`.
    pub fn write_edges_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,weight")?;
        for (a, b, wt) in self.edges() {
            writeln!(w, "{a},{b},{wt:.16e}")?;
        }
        Ok(())
    }

    /// Writes the node table `id,chart,x1..`.
    pub fn write_nodes_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.nodes.first().map(|p| p.dim()).unwrap_or(0);
        let cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(w, "id,chart,{}", cols.join(","))?;
        for (i, p) in self.nodes.iter().enumerate() {
            let c: Vec<String> = p.coords.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{i},{},{}", p.chart, c.join(","))?;
        }
        Ok(())
    }
}

/// Short-range `g_T` distance with a fast path for chart-constant metrics.
pub struct SliceMetric<'a> {
    family: &'a MetricFamily,
    t: f64,
    constant: Option<nalgebra::DMatrix<f64>>,
}

impl<'a> SliceMetric<'a> {
    pub fn new(family: &'a MetricFamily, t: f64) -> Self {
        let constant = family
            .is_fiber_homogeneous()
            .then(|| family.metric_at(t, &family.fiber().origin()).expect("origin is in the chart"));
        Self { family, t, constant }
    }

    pub fn distance(&self, a: &FiberPoint, b: &FiberPoint) -> Result<f64> {
        match &self.constant {
            Some(g) => {
                let d = self.family.fiber().displacement(a, b)?;
                Ok(quad(g, &d).max(0.0).sqrt())
            }
            None => self.family.local_distance(self.t, a, b),
        }
    }
}

fn background(family: &MetricFamily, t: f64, spacing: f64) -> Vec<FiberPoint> {
    let fiber = family.fiber();
    let n = fiber.dim() as i32;
    let scale = family.max_scale(t);
    let per_axis = if fiber.is_periodic() {
        (std::f64::consts::TAU * scale / spacing).ceil()
    } else {
        // quasi-uniform sphere points: count ≈ area / spacing^n
        let area = match n {
            1 => std::f64::consts::TAU,
            2 => 4.0 * std::f64::consts::PI,
            _ => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
        } * scale.powi(n);
        (area / spacing.powi(n)).powf(1.0 / n as f64).ceil()
    };
    let cap = (BACKGROUND_CAP as f64).powf(1.0 / n as f64).floor();
    fiber.background_points(per_axis.clamp(2.0, cap) as usize)
}

/// Greedy farthest-point ε-net of `(F, g_T)` seeded at the chart origin, on a
/// background set of spacing about `ε/3`. Edges join nodes closer than `3ε`
/// with the midpoint-metric segment length as weight.
pub fn build_net(family: &MetricFamily, t: f64, epsilon: f64) -> Result<NetGraph> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let bg = background(family, t, epsilon / 3.0);
    let metric = SliceMetric::new(family, t);
    let mut mind = vec![f64::INFINITY; bg.len()];
    let mut chosen: Vec<usize> = Vec::new();
    let mut next = 0usize; // background point 0 is the chart origin
    loop {
        chosen.push(next);
        let center = bg[next].clone();
        mind.par_iter_mut().zip(bg.par_iter()).try_for_each(|(m, p)| -> Result<()> {
            let d = metric.distance(&center, p)?;
            if d < *m {
                *m = d;
            }
            Ok(())
        })?;
        let (arg, far) = mind
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if far <= epsilon {
            break;
        }
        next = arg;
    }
    let nodes: Vec<FiberPoint> = chosen
        .iter()
        .map(|&i| family.fiber().canonical(&bg[i]))
        .collect::<Result<_>>()?;
    if nodes.len() < 2 {
        return Err(GeometryError::Graph(format!(
            "epsilon {epsilon} is too large: the net has a single node"
        )));
    }
    let edges: Vec<(usize, usize, f64)> = (0..nodes.len())
        .into_par_iter()
        .map(|i| -> Result<Vec<(usize, usize, f64)>> {
            let mut out = Vec::new();
            for j in i + 1..nodes.len() {
                let d = metric.distance(&nodes[i], &nodes[j])?;
                if d < 3.0 * epsilon && d > 0.0 {
                    out.push((i, j, d));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let net = NetGraph::from_parts(nodes, &edges, epsilon, t)?;
    if !net.graph.is_connected() {
        return Err(GeometryError::Graph(format!("net at T={t}, ε={epsilon} is disconnected")));
    }
    Ok(net)
}

/// Shortest-path distance between net nodes.
pub fn graph_distance(net: &NetGraph, a: usize, b: usize) -> Result<f64> {
    if a >= net.len() || b >= net.len() {
        return Err(GeometryError::Graph(format!("node ({a}, {b}) out of range")));
    }
    let d = net.graph.distance(a, b);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(GeometryError::Graph(format!("nodes {a} and {b} are disconnected")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiameterEstimate {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

impl DiameterEstimate {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Diameter of a connected weighted graph: exact for at most
/// [`EXACT_DIAMETER_LIMIT`] nodes, two-sweep bounds above that.
pub fn graph_diameter(graph: &WeightedGraph) -> DiameterEstimate {
    let n = graph.node_count();
    if n <= 1 {
        return DiameterEstimate { lower: 0.0, upper: 0.0, exact: true };
    }
    if n <= EXACT_DIAMETER_LIMIT {
        let d = (0..n)
            .into_par_iter()
            .map(|s| graph.distances_from(s).into_iter().fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
        return DiameterEstimate { lower: d, upper: d, exact: true };
    }
    let ecc = |s: usize| {
        graph
            .distances_from(s)
            .into_iter()
            .enumerate()
            .fold((s, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc })
    };
    let (a, e0) = ecc(0);
    let (_, ea) = ecc(a);
    DiameterEstimate { lower: ea, upper: (2.0 * e0).min(2.0 * ea), exact: false }
}

pub fn estimate_diameter(net: &NetGraph) -> DiameterEstimate {
    graph_diameter(&net.graph)
}

/// Slice distance through a net: snap both points to their nearest nodes and
/// take the graph distance. The tolerance covers the two snaps (`2ε`) plus a
/// 2% discretization allowance on the net diameter.
pub struct NetDistance<'a> {
    pub family: &'a MetricFamily,
    pub net: &'a NetGraph,
    pub tolerance: f64,
}

impl<'a> NetDistance<'a> {
    pub fn new(family: &'a MetricFamily, net: &'a NetGraph) -> Self {
        let dia = estimate_diameter(net).upper;
        Self { family, net, tolerance: 2.0 * net.epsilon + 0.02 * dia }
    }
}

impl SliceDistance for NetDistance<'_> {
    fn distance(&self, a: &FiberPoint, b: &FiberPoint) -> Result<f64> {
        let (na, _) = self.net.nearest(self.family, a)?;
        let (nb, _) = self.net.nearest(self.family, b)?;
        graph_distance(self.net, na, nb)
    }

    fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// A finite metric space given by a connected weighted graph, covered by parts.
#[derive(Clone, Debug)]
pub struct CoverInstance {
    pub graph: WeightedGraph,
    pub parts: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub diameter: f64,
    pub part_diameters: Vec<f64>,
    pub sum: f64,
    pub passed: bool,
}

/// Components of the nerve: parts are adjacent when they share a node.
fn nerve_components(parts: &[Vec<usize>], nodes: usize) -> Vec<usize> {
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (i, p) in parts.iter().enumerate() {
        for &v in p {
            owners[v].push(i);
        }
    }
    let mut comp = vec![usize::MAX; parts.len()];
    let mut next = 0;
    for s in 0..parts.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            for &v in &parts[i] {
                for &j in &owners[v] {
                    if comp[j] == usize::MAX {
                        comp[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    comp
}

impl CoverInstance {
    /// Checks the instance hypotheses: connected space, parts covering every
    /// node, each part connected, and parts chained by shared nodes (connected nerve).
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.node_count();
        if !self.graph.is_connected() {
            return Err(GeometryError::InvalidCover("space is not connected".into()));
        }
        let mut covered = vec![false; n];
        for (i, p) in self.parts.iter().enumerate() {
            if p.iter().any(|&v| v >= n) {
                return Err(GeometryError::InvalidCover(format!("part {i} has out-of-range nodes")));
            }
            if !self.graph.induces_connected(p) {
                return Err(GeometryError::InvalidCover(format!("part {i} is not connected")));
            }
            for &v in p {
                covered[v] = true;
            }
        }
        if let Some(v) = covered.iter().position(|c| !c) {
            return Err(GeometryError::InvalidCover(format!("node {v} is not covered")));
        }
        if nerve_components(&self.parts, n).iter().any(|&c| c != 0) {
            return Err(GeometryError::InvalidCover("parts are not chained by shared nodes".into()));
        }
        Ok(())
    }
}

/// Verifies `dia(X) ≤ Σ dia(A_i)` with exact shortest-path distances (part
/// diameters are measured in the metric of `X`).
pub fn check_cover_subadditivity(instance: &CoverInstance) -> Result<CoverReport> {
    instance.validate()?;
    let dist = instance.graph.distance_matrix();
    let diameter = dist.iter().flatten().copied().fold(0.0, f64::max);
    let part_diameters: Vec<f64> = instance
        .parts
        .iter()
        .map(|p| {
            let mut d: f64 = 0.0;
            for &a in p {
                for &b in p {
                    d = d.max(dist[a][b]);
                }
            }
            d
        })
        .collect();
    let sum: f64 = part_diameters.iter().sum();
    Ok(CoverReport { diameter, passed: diameter <= sum * (1.0 + 1e-12), part_diameters, sum })
}

/// Random connected weighted graph (random spanning tree plus extra edges)
/// with a random valid cover grown from BFS balls.
pub fn random_cover_instance(rng: &mut impl Rng, max_nodes: usize) -> Result<CoverInstance> {
    let n = rng.gen_range(2..=max_nodes.max(2));
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((i, j, rng.gen_range(0.1..10.0)));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a, b, rng.gen_range(0.1..10.0)));
        }
    }
    let graph = WeightedGraph::new(n, &edges)?;
    let k = rng.gen_range(1..=n.min(8));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut parts: Vec<Vec<usize>> = Vec::with_capacity(k);
    for (pi, &seed) in order.iter().take(k).enumerate() {
        let target = rng.gen_range(1..=n.div_ceil(k) + 2);
        let mut part = vec![seed];
        let mut queue = VecDeque::from([seed]);
        let mut inpart = vec![false; n];
        inpart[seed] = true;
        while let Some(v) = queue.pop_front() {
            if part.len() >= target {
                break;
            }
            for w in graph.neighbors(v).collect::<Vec<_>>() {
                if !inpart[w] && part.len() < target {
                    inpart[w] = true;
                    part.push(w);
                    queue.push_back(w);
                }
            }
        }
        for &v in &part {
            owner[v].get_or_insert(pi);
        }
        parts.push(part);
    }
    // attach uncovered nodes to a part owning a neighbor
    while owner.iter().any(Option::is_none) {
        for v in 0..n {
            if owner[v].is_some() {
                continue;
            }
            if let Some(p) = graph.neighbors(v).find_map(|w| owner[w]) {
                parts[p].push(v);
                owner[v] = Some(p);
            }
        }
    }
    // chain the parts: extend a part across a graph edge into another nerve component
    loop {
        let comp = nerve_components(&parts, n);
        if comp.iter().all(|&c| c == 0) {
            break;
        }
        let mut member: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, p) in parts.iter().enumerate() {
            for &v in p {
                member[v].push(i);
            }
        }
        let bridge = graph.edges().into_iter().find_map(|(a, b, _)| {
            let pa = member[a][0];
            let pb = member[b][0];
            (comp[pa] != comp[pb]).then_some((pa, b))
        });
        let (p, v) = bridge.expect("connected graph has a bridging edge");
        parts[p].push(v);
    }
    for p in &mut parts {
        p.sort_unstable();
        p.dedup();
    }
    Ok(CoverInstance { graph, parts })
}

/// Path graph on `[0, 1]` with `nodes` equally spaced vertices.
pub fn interval_graph(nodes: usize) -> Result<WeightedGraph> {
    let h = 1.0 / (nodes - 1) as f64;
    let edges: Vec<_> = (0..nodes - 1).map(|i| (i, i + 1, h)).collect();
    WeightedGraph::new(nodes, &edges)
}

/// Cycle graph with `nodes` vertices and unit total length.
pub fn ring_graph(nodes: usize) -> Result<WeightedGraph> {
    let h = 1.0 / nodes as f64;
    let edges: Vec<_> = (0..nodes).map(|i| (i, (i + 1) % nodes, h)).collect();
    WeightedGraph::new(nodes, &edges)
}

/// Hand-built near-tight instances: the interval `[0,1]` covered by
/// `[0,0.6] ∪ [0.4,1]`, the tight split `[0,0.5] ∪ [0.5,1]`, and a ring covered
/// by two overlapping arcs.
pub fn hand_cover_instances() -> Result<Vec<(String, CoverInstance)>> {
    let path = interval_graph(101)?;
    let ring = ring_graph(100)?;
    Ok(vec![
        ("interval_overlap".into(), CoverInstance { graph: path.clone(), parts: vec![(0..=60).collect(), (40..=100).collect()] }),
        ("interval_tight".into(), CoverInstance { graph: path, parts: vec![(0..=50).collect(), (50..=100).collect()] }),
        ("ring_two_arcs".into(), CoverInstance { graph: ring, parts: vec![(0..=55).collect(), (50..=105).map(|i| i % 100).collect()] }),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthPoint {
    #[serde(rename = "T")]
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthCurve {
    pub epsilon: f64,
    pub points: Vec<GrowthPoint>,
    /// `dia(F_{T₂}) / dia(F_{T₁})` for consecutive pairs.
    pub ratios: Vec<f64>,
    /// `e^{c ΔT}` for the same pairs (empty without a certificate).
    pub targets: Vec<f64>,
    /// `None` when no certificate was given.
    pub growth_passed: Option<bool>,
}

/// Diameter estimates of `F_T` for each `T`; with a certificate also checks
/// `dia(F_{T₂}) / dia(F_{T₁}) ≥ e^{c(T₂−T₁)} − tol` for consecutive values.
pub fn diameter_growth_curve(
    family: &MetricFamily,
    certificate: Option<&HypothesisCertificate>,
    t_values: &[f64],
    epsilon: f64,
    tol: f64,
) -> Result<GrowthCurve> {
    if let Some(cert) = certificate {
        if t_values.iter().any(|&t| t < cert.t0()) {
            return Err(GeometryError::Precondition("growth curve needs T ≥ t0".into()));
        }
    }
    let mut points = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let net = build_net(family, t, epsilon)?;
        let d = estimate_diameter(&net);
        points.push(GrowthPoint { t, lower: d.lower, upper: d.upper, nodes: net.len() });
    }
    let mut ratios = Vec::new();
    let mut targets = Vec::new();
    let mut ok = true;
    for w in points.windows(2) {
        let r = 0.5 * (w[1].lower + w[1].upper) / (0.5 * (w[0].lower + w[0].upper));
        ratios.push(r);
        if let Some(cert) = certificate {
            let target = (cert.c() * (w[1].t - w[0].t)).exp();
            targets.push(target);
            ok &= r >= target - tol;
        }
    }
    Ok(GrowthCurve { epsilon, points, ratios, targets, growth_passed: certificate.map(|_| ok) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_family::{Fiber, Warp};
    use rand::SeedableRng;

    #[test]
    fn hand_instances_pass() {
        let inst = hand_cover_instances().unwrap();
        let r = check_cover_subadditivity(&inst[0].1).unwrap();
        assert!((r.diameter - 1.0).abs() < 1e-12);
        assert!((r.sum - 1.2).abs() < 1e-12);
        assert!(r.passed);
        let tight = check_cover_subadditivity(&inst[1].1).unwrap();
        assert!(tight.passed && (tight.sum - tight.diameter).abs() < 1e-12);
        assert!(check_cover_subadditivity(&inst[2].1).unwrap().passed);
    }

    #[test]
    fn disjoint_parts_rejected() {
        let g = interval_graph(11).unwrap();
        let inst = CoverInstance { graph: g, parts: vec![(0..=4).collect(), (5..=10).collect()] };
        assert!(matches!(check_cover_subadditivity(&inst), Err(GeometryError::InvalidCover(_))));
    }

    #[test]
    fn random_instances_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let inst = random_cover_instance(&mut rng, 60).unwrap();
            assert!(check_cover_subadditivity(&inst).unwrap().passed);
        }
    }

    #[test]
    fn ring_net_circumference() {
        let f = MetricFamily::de_sitter(1);
        let net = build_net(&f, 2.0, 0.05).unwrap();
        let d = estimate_diameter(&net);
        let target = std::f64::consts::PI * 2f64.cosh();
        assert!((d.upper - target).abs() < 0.02 * target, "{d:?}");
    }

    #[test]
    fn single_node_net_is_an_error() {
        let f = MetricFamily::warped(Warp::Constant, Fiber::Sphere { dim: 1 }).unwrap();
        assert!(matches!(build_net(&f, 0.0, 10.0), Err(GeometryError::Graph(_))));
    }
}
