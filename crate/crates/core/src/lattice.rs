//! The triangular lattice `εT` restricted to a convex polygon.
//!
//! Everything topological lives in integer index space: a node is a pair
//! `(a, b)` sitting at `ε(a e₁ + b ν)`, a triangle is an index pair plus an
//! orientation. Floating point only shows up when asking for positions.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Integer combination `p e₁ + q ν` of the lattice generators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct LatticeVector {
    pub p: i64,
    pub q: i64,
}

impl LatticeVector {
    pub const ZERO: Self = Self::new(0, 0);
    pub const E1: Self = Self::new(1, 0);
    pub const NU: Self = Self::new(0, 1);
    /// `η = ν − e₁`.
    pub const ETA: Self = Self::new(-1, 1);

    /// The six nearest-neighbour offsets, counterclockwise from `e₁`.
    pub const UNITS: [Self; 6] = [
        Self::E1,
        Self::NU,
        Self::ETA,
        Self::new(-1, 0),
        Self::new(0, -1),
        Self::new(1, -1),
    ];

    pub const fn new(p: i64, q: i64) -> Self {
        Self { p, q }
    }

    /// Position in the plane for unit spacing.
    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.p as f64 + 0.5 * self.q as f64, 0.5 * SQRT3 * self.q as f64)
    }

    /// `|p e₁ + q ν|²`, exact.
    pub const fn norm_squared(self) -> i64 {
        self.p * self.p + self.p * self.q + self.q * self.q
    }

    pub fn norm(self) -> f64 {
        (self.norm_squared() as f64).sqrt()
    }

    /// Wedge product in units of `√3/2`, so that
    /// `self.to_vector() ∧ other.to_vector() = (√3/2) · self.wedge(other)`.
    pub const fn wedge(self, other: Self) -> i64 {
        self.p * other.q - self.q * other.p
    }

    /// Twice the Euclidean dot product, which is always an integer.
    pub const fn dot2(self, other: Self) -> i64 {
        2 * self.p * other.p + self.p * other.q + self.q * other.p + 2 * self.q * other.q
    }

    pub const fn is_zero(self) -> bool {
        self.p == 0 && self.q == 0
    }

    pub const fn is_unit(self) -> bool {
        self.norm_squared() == 1
    }

    /// Index into [`Self::UNITS`] for a nearest-neighbour offset.
    pub fn unit_index(self) -> Option<usize> {
        Self::UNITS.iter().position(|&u| u == self)
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

impl From<[i64; 2]> for LatticeVector {
    fn from([p, q]: [i64; 2]) -> Self {
        Self::new(p, q)
    }
}

impl From<LatticeVector> for [i64; 2] {
    fn from(v: LatticeVector) -> Self {
        [v.p, v.q]
    }
}

impl Add for LatticeVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.p + rhs.p, self.q + rhs.q)
    }
}

impl AddAssign for LatticeVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for LatticeVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.p - rhs.p, self.q - rhs.q)
    }
}

impl SubAssign for LatticeVector {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Neg for LatticeVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.p, -self.q)
    }
}

impl Mul<LatticeVector> for i64 {
    type Output = LatticeVector;
    fn mul(self, rhs: LatticeVector) -> LatticeVector {
        LatticeVector::new(self * rhs.p, self * rhs.q)
    }
}

impl Sum for LatticeVector {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// A lattice site, located at `ε(a e₁ + b ν)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub a: i64,
    pub b: i64,
}

impl NodeId {
    pub const fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }

    pub fn position(self, epsilon: f64) -> Point2<f64> {
        Point2::from(epsilon * LatticeVector::new(self.a, self.b).to_vector())
    }

    pub fn offset(self, v: LatticeVector) -> Self {
        Self::new(self.a + v.p, self.b + v.q)
    }
}

impl Sub for NodeId {
    type Output = LatticeVector;
    fn sub(self, rhs: Self) -> LatticeVector {
        LatticeVector::new(self.a - rhs.a, self.b - rhs.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    Up,
    Down,
}

/// `Up(a,b)` is the translate of `conv{0, e₁, ν}`, `Down(a,b)` that of
/// `conv{0, e₁ − ν, e₁}`; both anchored at node `(a,b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriangleId {
    pub a: i64,
    pub b: i64,
    pub orientation: Orientation,
}

impl TriangleId {
    pub const fn up(a: i64, b: i64) -> Self {
        Self { a, b, orientation: Orientation::Up }
    }

    pub const fn down(a: i64, b: i64) -> Self {
        Self { a, b, orientation: Orientation::Down }
    }

    /// Vertices in counterclockwise order.
    pub fn vertices(self) -> [NodeId; 3] {
        let (a, b) = (self.a, self.b);
        match self.orientation {
            Orientation::Up => [NodeId::new(a, b), NodeId::new(a + 1, b), NodeId::new(a, b + 1)],
            Orientation::Down => [NodeId::new(a, b), NodeId::new(a + 1, b - 1), NodeId::new(a + 1, b)],
        }
    }

    /// Oriented edges `(v₀,v₁), (v₁,v₂), (v₂,v₀)` following the
    /// counterclockwise vertex order.
    pub fn edges(self) -> [(NodeId, NodeId); 3] {
        let [i, j, k] = self.vertices();
        [(i, j), (j, k), (k, i)]
    }

    /// Barycenter in index coordinates, times 3. Exact.
    pub fn barycenter_index3(self) -> (i64, i64) {
        match self.orientation {
            Orientation::Up => (3 * self.a + 1, 3 * self.b + 1),
            Orientation::Down => (3 * self.a + 2, 3 * self.b - 1),
        }
    }

    pub fn barycenter(self, epsilon: f64) -> Point2<f64> {
        let (x, y) = self.barycenter_index3();
        let v = LatticeVector::new(x, y).to_vector();
        Point2::from(v * (epsilon / 3.0))
    }

    pub fn area(epsilon: f64) -> f64 {
        0.25 * SQRT3 * epsilon * epsilon
    }

    pub fn contains_vertex(self, node: NodeId) -> bool {
        self.vertices().contains(&node)
    }

    /// True when the closed triangles share at least one vertex.
    pub fn touches(self, other: TriangleId) -> bool {
        let v = other.vertices();
        self.vertices().iter().any(|x| v.contains(x))
    }
}

impl fmt::Display for TriangleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.orientation {
            Orientation::Up => "Up",
            Orientation::Down => "Down",
        };
        write!(f, "{tag}({}, {})", self.a, self.b)
    }
}

/// The six triangles having `node` as a vertex.
pub fn triangles_at_node(node: NodeId) -> [TriangleId; 6] {
    let (a, b) = (node.a, node.b);
    [
        TriangleId::up(a, b),
        TriangleId::up(a - 1, b),
        TriangleId::up(a, b - 1),
        TriangleId::down(a, b),
        TriangleId::down(a - 1, b + 1),
        TriangleId::down(a - 1, b),
    ]
}

/// Convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2<f64>>,
}

impl ConvexPolygon {
    /// Accepts either orientation; rejects degenerate or non-convex input.
    pub fn new(mut vertices: Vec<Point2<f64>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain("a polygon needs at least three vertices".into()));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvalidDomain("non-finite vertex".into()));
        }
        let signed = signed_area(&vertices);
        if signed.abs() <= f64::EPSILON * diameter_of(&vertices).powi(2) {
            return Err(Error::InvalidDomain("polygon has empty interior".into()));
        }
        if signed < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let scale = diameter_of(&vertices).powi(2);
        for k in 0..n {
            let (p, q, r) = (vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
            if cross(q - p, r - q) < -1e-12 * scale {
                return Err(Error::InvalidDomain("polygon is not convex".into()));
            }
        }
        Ok(Self { vertices })
    }

    /// `[−h, h]²`.
    pub fn square(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidDomain(format!("half width must be positive, got {half_width}")));
        }
        let h = half_width;
        Self::new(vec![Point2::new(-h, -h), Point2::new(h, -h), Point2::new(h, h), Point2::new(-h, h)])
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        diameter_of(&self.vertices)
    }

    /// Signed distance to each edge line, minimised: positive inside.
    fn inner_margin(&self, x: Point2<f64>) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|k| {
                let (p, q) = (self.vertices[k], self.vertices[(k + 1) % n]);
                let e = q - p;
                cross(e, x - p) / e.norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed-set membership, with a tolerance relative to the diameter so
    /// that lattice points landing on the boundary are not lost to rounding.
    pub fn contains(&self, x: Point2<f64>) -> bool {
        self.inner_margin(x) >= -1e-12 * self.diameter()
    }

    /// Open-set membership with the same tolerance, used where points on the
    /// boundary must be rejected.
    pub fn contains_strictly(&self, x: Point2<f64>) -> bool {
        self.inner_margin(x) > 1e-12 * self.diameter()
    }

    /// Euclidean distance to the boundary for a point inside.
    pub fn distance_to_boundary(&self, x: Point2<f64>) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|k| segment_distance(x, self.vertices[k], self.vertices[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> (Point2<f64>, Point2<f64>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo = Point2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    pub fn centroid(&self) -> Point2<f64> {
        let n = self.vertices.len();
        let mut c = Vector2::zeros();
        let mut a = 0.0;
        for k in 0..n {
            let (p, q) = (self.vertices[k].coords, self.vertices[(k + 1) % n].coords);
            let w = cross(p, q);
            a += w;
            c += (p + q) * w;
        }
        Point2::from(c / (3.0 * a))
    }

    pub fn translated(&self, shift: Vector2<f64>) -> Self {
        Self { vertices: self.vertices.iter().map(|v| v + shift).collect() }
    }
}

fn cross(u: Vector2<f64>, v: Vector2<f64>) -> f64 {
    u.x * v.y - u.y * v.x
}

fn signed_area(v: &[Point2<f64>]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|k| cross(v[k].coords, v[(k + 1) % n].coords)).sum::<f64>()
}

fn diameter_of(v: &[Point2<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (k, p) in v.iter().enumerate() {
        for q in &v[k + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

fn segment_distance(x: Point2<f64>, p: Point2<f64>, q: Point2<f64>) -> f64 {
    let e = q - p;
    let t = ((x - p).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
    (x - (p + e * t)).norm()
}

/// Domain as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DomainSpec {
    Polygon { vertices: Vec<[f64; 2]> },
    Square { half_width: f64 },
}

impl DomainSpec {
    pub fn to_polygon(&self) -> Result<ConvexPolygon> {
        match self {
            DomainSpec::Polygon { vertices } => {
                ConvexPolygon::new(vertices.iter().map(|&[x, y]| Point2::new(x, y)).collect())
            }
            DomainSpec::Square { half_width } => ConvexPolygon::square(*half_width),
        }
    }
}

/// An unordered nearest-neighbour pair stored with its canonical
/// orientation `tail → head`, where `head − tail ∈ {e₁, ν, η}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub tail: u32,
    pub head: u32,
    /// 0, 1, 2 for `e₁`, `ν`, `η`.
    pub direction: u8,
}

impl Bond {
    pub fn vector(&self) -> LatticeVector {
        LatticeVector::UNITS[self.direction as usize]
    }
}

/// A bond traversed in a given sense: `forward` means `tail → head`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedBond {
    pub bond: usize,
    pub forward: bool,
}

impl OrientedBond {
    pub fn sign(&self) -> i64 {
        if self.forward {
            1
        } else {
            -1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Topology {
    /// Triangles connected through shared edges.
    pub edge_connected: bool,
    /// Union of triangles is connected with no holes (Euler characteristic 1).
    pub simply_connected: bool,
    /// Bonds that are an edge of no included triangle.
    pub dangling_bonds: usize,
}

impl Topology {
    pub fn is_valid(&self) -> bool {
        self.edge_connected && self.simply_connected
    }
}

const NONE: u32 = u32::MAX;

/// Nodes, bonds and triangles of `εT` inside a convex polygon.
///
/// A triangle is included when its three vertices lie in the closed domain,
/// which for a convex domain is the same as the closed triangle lying inside.
/// Nodes are the vertices of included triangles; bonds are all node pairs at
/// distance `ε`.
#[derive(Clone, Debug)]
pub struct LatticeComplex {
    epsilon: f64,
    domain: ConvexPolygon,
    nodes: Vec<NodeId>,
    node_lookup: HashMap<NodeId, u32>,
    bonds: Vec<Bond>,
    /// Bond index for each of the six directions in `UNITS` order.
    node_bonds: Vec<[u32; 6]>,
    triangles: Vec<TriangleId>,
    triangle_lookup: HashMap<TriangleId, u32>,
    bond_triangles: Vec<[u32; 2]>,
    topology: Topology,
}

impl LatticeComplex {
    pub fn build(domain: ConvexPolygon, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        let diameter = domain.diameter();
        if epsilon >= diameter {
            return Err(Error::EmptyComplex { epsilon, diameter });
        }

        let inside = |a: i64, b: i64| domain.contains(NodeId::new(a, b).position(epsilon));
        let (lo, hi) = domain.bounding_box();
        let row_height = 0.5 * SQRT3 * epsilon;
        let b_min = (lo.y / row_height).floor() as i64 - 1;
        let b_max = (hi.y / row_height).ceil() as i64 + 1;

        let mut triangles = Vec::new();
        let mut row_flags: Vec<(i64, Vec<bool>)> = Vec::new();
        let a_range = |b: i64| {
            let a0 = (lo.x / epsilon - 0.5 * b as f64).floor() as i64 - 2;
            let a1 = (hi.x / epsilon - 0.5 * b as f64).ceil() as i64 + 2;
            (a0, a1)
        };
        // Cache membership row by row; each row extends one step past every
        // column any triangle of the neighbouring rows can reach.
        let row = |b: i64| {
            let (a0, a1) = a_range(b);
            let a0 = a0 - 2;
            let a1 = a1 + 2;
            (a0, (a0..=a1).map(|a| inside(a, b)).collect::<Vec<_>>())
        };
        for b in b_min - 1..=b_max + 1 {
            row_flags.push(row(b));
        }
        let flag = |a: i64, b: i64| -> bool {
            let idx = b - (b_min - 1);
            if idx < 0 || idx as usize >= row_flags.len() {
                return false;
            }
            let (a0, ref flags) = row_flags[idx as usize];
            let k = a - a0;
            k >= 0 && (k as usize) < flags.len() && flags[k as usize]
        };
        for b in b_min..=b_max {
            let (a0, a1) = a_range(b);
            for a in a0..=a1 {
                for t in [TriangleId::up(a, b), TriangleId::down(a, b)] {
                    if t.vertices().iter().all(|v| flag(v.a, v.b)) {
                        triangles.push(t);
                    }
                }
            }
        }
        if triangles.is_empty() {
            return Err(Error::EmptyComplex { epsilon, diameter });
        }
        triangles.sort_unstable();

        let mut nodes: Vec<NodeId> = triangles.iter().flat_map(|t| t.vertices()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let node_lookup: HashMap<NodeId, u32> =
            nodes.iter().enumerate().map(|(k, &n)| (n, k as u32)).collect();

        let mut bonds = Vec::with_capacity(3 * nodes.len());
        let mut node_bonds = vec![[NONE; 6]; nodes.len()];
        for (k, &n) in nodes.iter().enumerate() {
            for dir in 0..3 {
                if let Some(&m) = node_lookup.get(&n.offset(LatticeVector::UNITS[dir])) {
                    let id = bonds.len() as u32;
                    bonds.push(Bond { tail: k as u32, head: m, direction: dir as u8 });
                    node_bonds[k][dir] = id;
                    node_bonds[m as usize][dir + 3] = id;
                }
            }
        }

        let triangle_lookup: HashMap<TriangleId, u32> =
            triangles.iter().enumerate().map(|(k, &t)| (t, k as u32)).collect();

        let mut complex = Self {
            epsilon,
            domain,
            nodes,
            node_lookup,
            bonds,
            node_bonds,
            triangles,
            triangle_lookup,
            bond_triangles: Vec::new(),
            topology: Topology { edge_connected: false, simply_connected: false, dangling_bonds: 0 },
        };

        let mut bond_triangles = vec![[NONE; 2]; complex.bonds.len()];
        for (k, t) in complex.triangles.iter().enumerate() {
            for (i, j) in t.edges() {
                let ob = complex
                    .bond_between_nodes(i, j)
                    .expect("triangle edges are bonds by construction");
                let slot = &mut bond_triangles[ob.bond];
                if slot[0] == NONE {
                    slot[0] = k as u32;
                } else {
                    slot[1] = k as u32;
                }
            }
        }
        complex.bond_triangles = bond_triangles;
        complex.topology = complex.compute_topology();
        Ok(complex)
    }

    fn compute_topology(&self) -> Topology {
        let dangling = self.bond_triangles.iter().filter(|s| s[0] == NONE).count();
        let edges_used = self.bonds.len() - dangling;

        let mut seen = vec![false; self.triangles.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(k) = queue.pop_front() {
            for (i, j) in self.triangles[k].edges() {
                let ob = self.bond_between_nodes(i, j).expect("edge is a bond");
                for &t in &self.bond_triangles[ob.bond] {
                    if t != NONE && !seen[t as usize] {
                        seen[t as usize] = true;
                        reached += 1;
                        queue.push_back(t as usize);
                    }
                }
            }
        }
        let edge_connected = reached == self.triangles.len();
        let euler = self.nodes.len() as i64 - edges_used as i64 + self.triangles.len() as i64;
        Topology { edge_connected, simply_connected: edge_connected && euler == 1, dangling_bonds: dangling }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn domain(&self) -> &ConvexPolygon {
        &self.domain
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Nodes in lexicographic `(a, b)` order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, index: usize) -> NodeId {
        self.nodes[index]
    }

    pub fn node_index(&self, node: NodeId) -> Option<usize> {
        self.node_lookup.get(&node).map(|&k| k as usize)
    }

    pub fn position(&self, index: usize) -> Point2<f64> {
        self.nodes[index].position(self.epsilon)
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Bond index leaving `node` along `UNITS[direction]`.
    pub fn bond_from(&self, node: usize, direction: usize) -> Option<usize> {
        let b = self.node_bonds[node][direction];
        (b != NONE).then_some(b as usize)
    }

    /// Number of bonds at a node.
    pub fn degree(&self, node: usize) -> usize {
        self.node_bonds[node].iter().filter(|&&b| b != NONE).count()
    }

    pub fn bond_between_nodes(&self, i: NodeId, j: NodeId) -> Option<OrientedBond> {
        let dir = (j - i).unit_index()?;
        let k = self.node_index(i)?;
        let bond = self.bond_from(k, dir)?;
        Some(OrientedBond { bond, forward: dir < 3 })
    }

    pub fn bond_between(&self, i: usize, j: usize) -> Option<OrientedBond> {
        self.bond_between_nodes(self.nodes[i], self.nodes[j])
    }

    /// Triangles in lexicographic `(a, b, orientation)` order.
    pub fn triangles(&self) -> &[TriangleId] {
        &self.triangles
    }

    pub fn contains_triangle(&self, t: TriangleId) -> bool {
        self.triangle_lookup.contains_key(&t)
    }

    pub fn triangle_index(&self, t: TriangleId) -> Option<usize> {
        self.triangle_lookup.get(&t).map(|&k| k as usize)
    }

    /// Included triangles having the bond as an edge (0, 1 or 2 of them).
    pub fn incident_triangles(&self, bond: usize) -> Vec<TriangleId> {
        self.bond_triangles[bond]
            .iter()
            .filter(|&&t| t != NONE)
            .map(|&t| self.triangles[t as usize])
            .collect()
    }

    pub fn is_dangling(&self, bond: usize) -> bool {
        self.bond_triangles[bond][0] == NONE
    }

    /// A node is interior when all six surrounding triangles are included.
    pub fn is_interior_node(&self, node: NodeId) -> bool {
        triangles_at_node(node).iter().all(|&t| self.contains_triangle(t))
    }

    /// True when the triangle has a vertex on the boundary of the union of
    /// triangles (that is, some triangle around that vertex is missing).
    pub fn touches_boundary(&self, t: TriangleId) -> bool {
        t.vertices().iter().any(|&v| !self.is_interior_node(v))
    }

    /// The Up triangles, in lexicographic order.
    pub fn up_triangles(&self) -> impl Iterator<Item = TriangleId> + '_ {
        self.triangles.iter().copied().filter(|t| t.orientation == Orientation::Up)
    }
}
