//! Finite nets on spaces of directions.
//!
//! Nets are built by greedy farthest-point selection on a candidate set of
//! directions. On the one-dimensional direction spaces (circles and the
//! open-book spine graph) the candidates form a metric graph whose edge
//! lengths are exact angular distances, so nearest-net distances are
//! maintained by a Dijkstra relaxation that stops where it no longer
//! improves anything.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use crate::error::{domain, Result};
use crate::geometry::{angular_distance_same_base, chart_dim, Coords, Direction, DirectionKind, Point, SpaceSpec};

/// A finite set of directions at a base point.
#[derive(Debug)]
pub struct DirectionNet {
    base: Point,
    directions: Vec<Direction>,
    resolution: f64,
    weights: Option<Vec<f64>>,
    /// The net contains every direction at the base.
    exhaustive: bool,
    pairs: RwLock<Option<(f64, Arc<Vec<Pair>>)>>,
}

/// Two net indices and their angular distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub distance: f64,
    pub i: u32,
    pub j: u32,
}

impl Clone for DirectionNet {
    fn clone(&self) -> Self {
        DirectionNet {
            base: self.base.clone(),
            directions: self.directions.clone(),
            resolution: self.resolution,
            weights: self.weights.clone(),
            exhaustive: self.exhaustive,
            pairs: RwLock::new(None),
        }
    }
}

impl PartialEq for DirectionNet {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
            && self.directions == other.directions
            && self.resolution == other.resolution
            && self.weights == other.weights
    }
}

impl DirectionNet {
    /// A user-supplied net. The resolution is taken on trust.
    pub fn explicit(
        base: Point,
        directions: Vec<Direction>,
        resolution: f64,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if directions.is_empty() {
            return domain("a direction net needs at least one direction");
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return domain(format!("net resolution must be positive, got {resolution}"));
        }
        if let Some(d) = directions.iter().find(|d| *d.base() != base) {
            return domain(format!("direction {d} is not based at {base}"));
        }
        if let Some(w) = &weights {
            if w.len() != directions.len() || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return domain("quadrature weights must be one nonnegative number per direction");
            }
        }
        let exhaustive = match layout(&base) {
            Layout::Finite(all) => all.iter().all(|d| directions.contains(d)),
            _ => false,
        };
        Ok(DirectionNet { base, directions, resolution, weights, exhaustive, pairs: RwLock::new(None) })
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn labels(&self) -> Vec<String> {
        self.directions.iter().map(Direction::label).collect()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        angular_distance_same_base(self.directions[i].kind(), self.directions[j].kind(), self.base.space())
    }

    /// Net pairs `i < j` with `d_s ≤ r`, sorted by distance. Cached for the
    /// largest radius requested so far.
    pub fn pairs_within(&self, r: f64) -> Arc<Vec<Pair>> {
        if let Some((cached, pairs)) = &*self.pairs.read().expect("pair cache lock") {
            if *cached >= r {
                let end = pairs.partition_point(|p| p.distance <= r);
                return if end == pairs.len() { pairs.clone() } else { Arc::new(pairs[..end].to_vec()) };
            }
        }
        let n = self.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(i, j);
                if d <= r {
                    pairs.push(Pair { distance: d, i: i as u32, j: j as u32 });
                }
            }
        }
        pairs.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));
        let pairs = Arc::new(pairs);
        *self.pairs.write().expect("pair cache lock") = Some((r, pairs.clone()));
        pairs
    }
}

/// The shape of the space of directions at a point.
pub(crate) enum Layout {
    /// Finitely many directions, pairwise at distance π.
    Finite(Vec<Direction>),
    /// A circle of the given length, parametrized by arclength.
    Circle { length: f64, apex: bool },
    /// `pages` semicircles of length π joined at two poles.
    Book { pages: usize },
    /// The unit sphere of a chart of dimension at least 3.
    Sphere { dim: usize },
}

pub(crate) fn layout(base: &Point) -> Layout {
    match (base.space(), chart_dim(base)) {
        (_, Some(1)) => Layout::Finite(vec![
            Direction::chart(base.clone(), vec![1.0]).expect("1-d chart"),
            Direction::chart(base.clone(), vec![-1.0]).expect("1-d chart"),
        ]),
        (_, Some(2)) => Layout::Circle { length: 2.0 * PI, apex: false },
        (_, Some(dim)) => Layout::Sphere { dim },
        (SpaceSpec::Spider { legs }, None) => {
            Layout::Finite((0..legs).map(|l| Direction::leg(base.clone(), l).expect("leg in range")).collect())
        }
        (SpaceSpec::OpenBook { pages }, None) => Layout::Book { pages },
        (SpaceSpec::FlatCone { circumference }, None) => Layout::Circle { length: circumference, apex: true },
        (SpaceSpec::Euclidean { .. }, None) => unreachable!("euclidean points are smooth"),
    }
}

/// Total measure of the space of directions under the quadrature used for
/// net weights: counting measure on finite layouts, arclength on graphs.
pub fn sphere_measure(base: &Point) -> Option<f64> {
    match layout(base) {
        Layout::Finite(all) => Some(all.len() as f64),
        Layout::Circle { length, .. } => Some(length),
        Layout::Book { pages } => Some(pages as f64 * PI),
        Layout::Sphere { .. } => None,
    }
}

/// Dyadic candidate graph on a one-dimensional direction space.
struct Graph {
    nodes: Vec<Direction>,
    adjacency: Vec<Vec<usize>>,
    /// Uniform edge length.
    spacing: f64,
    /// Arclength attributed to each node (half of each incident edge).
    mass: Vec<f64>,
    cells: usize,
    shape: GraphShape,
}

#[derive(Clone, Copy)]
enum GraphShape {
    Circle { length: f64, apex: bool },
    Book,
}

fn cells_for(length: f64, eps: f64) -> usize {
    let want = (4.0 * length / eps).ceil().max(4.0);
    let cells = 1usize << (want.log2().ceil() as u32);
    cells.max(4)
}

impl Graph {
    fn circle(base: &Point, length: f64, apex: bool, eps: f64) -> Self {
        let cells = cells_for(length, eps);
        let spacing = length / cells as f64;
        let nodes = (0..cells)
            .map(|j| {
                let a = length * (j as f64 / cells as f64);
                if apex {
                    Direction::circle(base.clone(), a).expect("finite angle")
                } else {
                    Direction::chart(base.clone(), vec![a.cos(), a.sin()]).expect("unit vector")
                }
            })
            .collect();
        let adjacency = (0..cells).map(|j| vec![(j + cells - 1) % cells, (j + 1) % cells]).collect();
        Graph {
            nodes,
            adjacency,
            spacing,
            mass: vec![spacing; cells],
            cells,
            shape: GraphShape::Circle { length, apex },
        }
    }

    /// Node 0 is the pole `theta = 0`, node 1 the pole `theta = π`, then the
    /// interior of each page in order of increasing angle.
    fn book(base: &Point, pages: usize, eps: f64) -> Self {
        let cells = cells_for(PI, eps);
        let spacing = PI / cells as f64;
        let interior = cells - 1;
        let mut nodes = vec![
            Direction::page(base.clone(), 0, 0.0).expect("pole"),
            Direction::page(base.clone(), 0, PI).expect("pole"),
        ];
        let mut adjacency = vec![Vec::with_capacity(pages), Vec::with_capacity(pages)];
        for p in 0..pages {
            let first = nodes.len();
            for j in 1..cells {
                nodes.push(Direction::page(base.clone(), p, PI * (j as f64 / cells as f64)).expect("page angle"));
                let k = first + j - 1;
                let prev = if j == 1 { 0 } else { k - 1 };
                let next = if j == interior { 1 } else { k + 1 };
                adjacency.push(vec![prev, next]);
            }
            adjacency[0].push(first);
            adjacency[1].push(first + interior - 1);
        }
        let mut mass = vec![spacing; nodes.len()];
        mass[0] = 0.5 * spacing * pages as f64;
        mass[1] = 0.5 * spacing * pages as f64;
        Graph { nodes, adjacency, spacing, mass, cells, shape: GraphShape::Book }
    }

    /// Node index of a direction lying on this candidate grid.
    fn locate(&self, d: &Direction) -> Option<usize> {
        let snap = |x: f64| {
            let j = x.round();
            ((x - j).abs() < 1e-6).then_some(j as usize)
        };
        match (self.shape, d.kind()) {
            (GraphShape::Circle { length, apex: true }, DirectionKind::Circle(a)) => {
                snap(a / length * self.cells as f64).map(|j| j % self.cells)
            }
            (GraphShape::Circle { apex: false, .. }, DirectionKind::Chart { unit, .. }) => {
                let a = unit[1].atan2(unit[0]).rem_euclid(2.0 * PI);
                snap(a / (2.0 * PI) * self.cells as f64).map(|j| j % self.cells)
            }
            (GraphShape::Book, &DirectionKind::Page { page, theta }) => {
                let j = snap(theta / PI * self.cells as f64)?;
                Some(match j {
                    0 => 0,
                    j if j == self.cells => 1,
                    j => 2 + page * (self.cells - 1) + (j - 1),
                })
            }
            _ => None,
        }
    }
}

#[derive(PartialEq)]
struct Far(f64, usize);

impl Eq for Far {}

impl PartialOrd for Far {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Far {
    // ties go to the lower node index so selection is deterministic
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

struct Greedy {
    chosen: Vec<usize>,
    owner: Vec<usize>,
    covering_radius: f64,
}

/// Grow `seeds` by farthest-point insertion until every node is within `eps`.
fn greedy_on_graph(g: &Graph, seeds: &[usize], eps: f64) -> Greedy {
    let n = g.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut owner = vec![usize::MAX; n];
    let mut chosen = Vec::new();
    let relax = |start: usize,
                 dist: &mut Vec<f64>,
                 owner: &mut Vec<usize>,
                 chosen: &mut Vec<usize>,
                 far: &mut BinaryHeap<Far>| {
        let id = chosen.len();
        chosen.push(start);
        dist[start] = 0.0;
        owner[start] = id;
        let mut queue = BinaryHeap::new();
        queue.push(std::cmp::Reverse(Far(0.0, start)));
        while let Some(std::cmp::Reverse(Far(d, u))) = queue.pop() {
            if d > dist[u] {
                continue;
            }
            for &v in &g.adjacency[u] {
                let nd = d + g.spacing;
                if nd < dist[v] {
                    dist[v] = nd;
                    owner[v] = id;
                    queue.push(std::cmp::Reverse(Far(nd, v)));
                    far.push(Far(nd, v));
                }
            }
        }
    };
    let mut far = BinaryHeap::new();
    for &s in seeds {
        if dist[s] > 0.0 {
            relax(s, &mut dist, &mut owner, &mut chosen, &mut far);
        }
    }
    if chosen.is_empty() {
        relax(0, &mut dist, &mut owner, &mut chosen, &mut far);
    }
    let tol = eps * (1.0 + 1e-12);
    let covering_radius = loop {
        while far.peek().is_some_and(|f| f.0 != dist[f.1]) {
            far.pop();
        }
        match far.peek() {
            Some(&Far(d, u)) if d > tol => relax(u, &mut dist, &mut owner, &mut chosen, &mut far),
            Some(&Far(d, _)) => break d,
            None => break 0.0,
        }
    };
    Greedy { chosen, owner, covering_radius }
}

/// Greedy farthest-point net at resolution `eps`.
pub fn build_net(base: &Point, eps: f64) -> Result<DirectionNet> {
    build_seeded(base, eps, None)
}

/// Nets at decreasing resolutions with `D_k ⊆ D_{k+1}`; each net lists the
/// directions of the previous one first, in the same order.
pub fn build_nested(base: &Point, resolutions: &[f64]) -> Result<Vec<DirectionNet>> {
    if resolutions.windows(2).any(|w| w[1] > w[0]) {
        return domain("nested nets need nonincreasing resolutions");
    }
    let mut out: Vec<DirectionNet> = Vec::with_capacity(resolutions.len());
    for &eps in resolutions {
        let net = build_seeded(base, eps, out.last())?;
        out.push(net);
    }
    Ok(out)
}

/// Size of the greedy farthest-point net together with its covering radius.
pub(crate) fn greedy_net_stats(base: &Point, eps: f64, single_seed: bool) -> Result<(usize, f64)> {
    check_eps(eps)?;
    match layout(base) {
        Layout::Finite(all) => Ok(if eps >= PI { (1, PI) } else { (all.len(), 0.0) }),
        Layout::Circle { length, apex } => {
            let g = Graph::circle(base, length, apex, eps);
            let r = greedy_on_graph(&g, &[0], eps);
            Ok((r.chosen.len(), r.covering_radius))
        }
        Layout::Book { pages } => {
            let g = Graph::book(base, pages, eps);
            let seeds: &[usize] = if single_seed || eps >= PI { &[0] } else { &[0, 1] };
            let r = greedy_on_graph(&g, seeds, eps);
            Ok((r.chosen.len(), r.covering_radius))
        }
        Layout::Sphere { dim } => {
            let cands = sphere_candidates(dim, eps);
            let (chosen, radius) = greedy_brute(&cands, &[0], eps);
            Ok((chosen.len(), radius))
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        domain(format!("net resolution must be positive, got {eps}"))
    }
}

fn build_seeded(base: &Point, eps: f64, previous: Option<&DirectionNet>) -> Result<DirectionNet> {
    check_eps(eps)?;
    if let Some(p) = previous {
        if p.base != *base {
            return domain("seed net is based elsewhere");
        }
    }
    let net = match layout(base) {
        Layout::Finite(all) => {
            let n = all.len();
            DirectionNet {
                base: base.clone(),
                directions: all,
                resolution: eps,
                weights: Some(vec![1.0; n]),
                exhaustive: true,
                pairs: RwLock::new(None),
            }
        }
        Layout::Circle { length, apex } => {
            graph_net(base, Graph::circle(base, length, apex, eps), eps, previous, &[0])?
        }
        Layout::Book { pages } => {
            let poles: &[usize] = if eps >= PI { &[0] } else { &[0, 1] };
            graph_net(base, Graph::book(base, pages, eps), eps, previous, poles)?
        }
        Layout::Sphere { dim } => {
            let cands = sphere_candidates(dim, eps);
            let seeds = match previous {
                Some(p) => p
                    .directions
                    .iter()
                    .map(|d| match d.kind() {
                        DirectionKind::Chart { unit, .. } => Ok(unit.clone()),
                        _ => domain("sphere net seeded with a non-chart direction"),
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => vec![cands[0].clone()],
            };
            let mut all = seeds.clone();
            all.extend(cands);
            let seed_idx: Vec<usize> = (0..seeds.len()).collect();
            let (chosen, _) = greedy_brute(&all, &seed_idx, eps);
            let directions = chosen
                .into_iter()
                .map(|i| Direction::chart(base.clone(), all[i].clone()))
                .collect::<Result<Vec<_>>>()?;
            DirectionNet {
                base: base.clone(),
                directions,
                resolution: eps,
                weights: None,
                exhaustive: false,
                pairs: RwLock::new(None),
            }
        }
    };
    Ok(net)
}

fn graph_net(
    base: &Point,
    g: Graph,
    eps: f64,
    previous: Option<&DirectionNet>,
    default_seeds: &[usize],
) -> Result<DirectionNet> {
    let seeds = match previous {
        Some(p) => p
            .directions
            .iter()
            .map(|d| {
                g.locate(d).ok_or_else(|| crate::Error::Domain(format!("seed direction {d} is off the candidate grid")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => default_seeds.to_vec(),
    };
    let result = greedy_on_graph(&g, &seeds, eps);
    let mut weights = vec![0.0; result.chosen.len()];
    for (node, &o) in result.owner.iter().enumerate() {
        weights[o] += g.mass[node];
    }
    let directions = result.chosen.iter().map(|&i| g.nodes[i].clone()).collect();
    Ok(DirectionNet {
        base: base.clone(),
        directions,
        resolution: eps,
        weights: Some(weights),
        exhaustive: false,
        pairs: RwLock::new(None),
    })
}

fn unit_angle(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum)
}

const SPHERE_CANDIDATE_CAP: usize = 200_000;

/// Normalized grid points on the surface of the cube `[-1, 1]^dim`.
fn sphere_candidates(dim: usize, eps: f64) -> Vec<Vec<f64>> {
    let faces = 2 * dim;
    let mut per_axis = ((4.0 * (dim as f64).sqrt()) / eps).ceil() as usize;
    while per_axis > 2 && faces * per_axis.pow(dim as u32 - 1) > SPHERE_CANDIDATE_CAP {
        per_axis -= 1;
    }
    let per_axis = per_axis.max(2);
    let coord = |k: usize| -1.0 + 2.0 * (k as f64 + 0.5) / per_axis as f64;
    let mut out = Vec::new();
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut idx = vec![0usize; dim - 1];
            loop {
                let mut v = Vec::with_capacity(dim);
                let mut k = 0;
                for a in 0..dim {
                    if a == axis {
                        v.push(sign);
                    } else {
                        v.push(coord(idx[k]));
                        k += 1;
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.push(v.into_iter().map(|x| x / norm).collect());
                let mut c = 0;
                loop {
                    if c == dim - 1 {
                        break;
                    }
                    idx[c] += 1;
                    if idx[c] < per_axis {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
                if c == dim - 1 {
                    break;
                }
            }
        }
    }
    out
}

fn greedy_brute(cands: &[Vec<f64>], seeds: &[usize], eps: f64) -> (Vec<usize>, f64) {
    let mut dist = vec![f64::INFINITY; cands.len()];
    let mut chosen = Vec::new();
    let add = |c: usize, dist: &mut Vec<f64>, chosen: &mut Vec<usize>| {
        chosen.push(c);
        for (k, d) in dist.iter_mut().enumerate() {
            *d = d.min(unit_angle(&cands[c], &cands[k]));
        }
    };
    for &s in seeds {
        add(s, &mut dist, &mut chosen);
    }
    loop {
        let (k, d) =
            dist.iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, d)| if d > acc.1 { (k, d) } else { acc });
        if d <= eps * (1.0 + 1e-12) {
            return (chosen, d.max(0.0));
        }
        add(k, &mut dist, &mut chosen);
    }
}

/// Fine reference sample of a space of directions, used to audit nets.
pub fn reference_directions(base: &Point, eps: f64) -> Result<Vec<Direction>> {
    check_eps(eps)?;
    Ok(match layout(base) {
        Layout::Finite(all) => all,
        Layout::Circle { length, apex } => Graph::circle(base, length, apex, eps).nodes,
        Layout::Book { pages } => Graph::book(base, pages, eps).nodes,
        Layout::Sphere { dim } => sphere_candidates(dim, eps)
            .into_iter()
            .map(|u| Direction::chart(base.clone(), u))
            .collect::<Result<Vec<_>>>()?,
    })
}

/// Dimension bound from the strata around a point: the sum of the
/// dimensions of all strata whose closure contains it.
pub fn stratum_dimension_sum(base: &Point) -> usize {
    match base.coords() {
        Coords::Euclidean(x) => x.len(),
        _ => base.incident_strata().iter().map(|s| s.dim).sum(),
    }
}
