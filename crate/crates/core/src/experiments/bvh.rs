//! Bounding-volume hierarchy over mesh faces for ray casting and
//! self-intersection queries.

use alloc::vec::Vec;


use crate::math::Vec3;
use crate::mesh::TriangleMesh;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn grow(&mut self, p: Vec3) {
        self.min = Vec3::new(self.min.x.min(p.x), self.min.y.min(p.y), self.min.z.min(p.z));
        self.max = Vec3::new(self.max.x.max(p.x), self.max.y.max(p.y), self.max.z.max(p.z));
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        let mut b = *self;
        b.grow(o.min);
        b.grow(o.max);
        b
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.max[k] && o.min[k] <= self.max[k])
    }

    /// Slab test; entry distance if the ray meets the box before `t_max`.
    fn ray_entry(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf means the ray lies in the slab plane
            if lo.is_nan() || hi.is_nan() {
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        (t0 <= t1).then_some(t0)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    tris: Vec<[Vec3; 3]>,
    faces: Vec<[usize; 3]>,
}

/// Closest ray hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub face: usize,
    pub t: f64,
    /// Barycentric weights of the face corners at the hit point.
    pub bary: [f64; 3],
}

fn face_box(t: &[Vec3; 3]) -> Aabb {
    let mut b = Aabb::EMPTY;
    for p in t {
        b.grow(*p);
    }
    b
}

impl Bvh {
    pub fn new(mesh: &TriangleMesh) -> Bvh {
        let tris: Vec<[Vec3; 3]> = (0..mesh.face_count()).map(|f| mesh.face(f).map(|i| mesh.position(i))).collect();
        let faces = (0..mesh.face_count()).map(|f| mesh.face(f)).collect();
        let boxes: Vec<Aabb> = tris.iter().map(face_box).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::new();
        build(&mut nodes, &mut order, 0, tris.len(), &boxes, &centroids);
        Bvh { nodes, order, tris, faces }
    }

    /// First hit with `t > t_min`, ignoring faces that contain `skip_vertex`.
    pub fn cast(&self, origin: Vec3, dir: Vec3, t_min: f64, skip_vertex: Option<usize>) -> Option<RayHit> {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<RayHit> = None;
        let mut stack = alloc::vec![0usize];
        while let Some(n) = stack.pop() {
            let t_max = best.map_or(f64::INFINITY, |h| h.t);
            if self.nodes[n].bounds().ray_entry(origin, inv, t_max).is_none() {
                continue;
            }
            match self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[start..end] {
                        if skip_vertex.is_some_and(|v| self.faces[f].contains(&v)) {
                            continue;
                        }
                        if let Some((t, bary)) = ray_triangle(origin, dir, &self.tris[f]) {
                            if t > t_min && best.is_none_or(|b| t < b.t) {
                                best = Some(RayHit { face: f, t, bary });
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        best
    }

    /// Pairs of faces without a shared vertex whose triangles intersect.
    /// Returns the first offending pair in face order, if any.
    pub fn first_self_intersection(&self) -> Option<(usize, usize)> {
        for f in 0..self.tris.len() {
            let bf = face_box(&self.tris[f]);
            let mut stack = alloc::vec![0usize];
            let mut hits: Vec<usize> = Vec::new();
            while let Some(n) = stack.pop() {
                if !self.nodes[n].bounds().overlaps(&bf) {
                    continue;
                }
                match self.nodes[n] {
                    Node::Leaf { start, end, .. } => {
                        for &g in &self.order[start..end] {
                            if g > f
                                && !self.faces[g].iter().any(|v| self.faces[f].contains(v))
                                && face_box(&self.tris[g]).overlaps(&bf)
                                && triangles_intersect(&self.tris[f], &self.tris[g])
                            {
                                hits.push(g);
                            }
                        }
                    }
                    Node::Inner { left, right, .. } => {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
            if let Some(g) = hits.into_iter().min() {
                return Some((f, g));
            }
        }
        None
    }
}

fn build(nodes: &mut Vec<Node>, order: &mut [usize], start: usize, end: usize, boxes: &[Aabb], centroids: &[Vec3]) -> usize {
    let bounds = order[start..end].iter().fold(Aabb::EMPTY, |b, &f| b.union(&boxes[f]));
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return id;
    }
    let mut cb = Aabb::EMPTY;
    for &f in &order[start..end] {
        cb.grow(centroids[f]);
    }
    let ext = cb.max - cb.min;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    order[start..end].sort_by(|&a, &b| centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b)));
    let mid = (start + end) / 2;
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build(nodes, order, start, mid, boxes, centroids);
    let right = build(nodes, order, mid, end, boxes, centroids);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}

/// Möller–Trumbore with a small inclusive tolerance on the barycentrics, so
/// rays through shared edges and vertices are not lost.
pub fn ray_triangle(origin: Vec3, dir: Vec3, t: &[Vec3; 3]) -> Option<(f64, [f64; 3])> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - t[0];
    let u = s.dot(p) * inv;
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    let eps = 1e-12;
    if u < -eps || v < -eps || u + v > 1.0 + eps {
        return None;
    }
    let dist = e2.dot(q) * inv;
    Some((dist, [1.0 - u - v, u, v]))
}

/// Strict segment-triangle crossing (endpoints and edges excluded up to `eps`).
fn segment_crosses(a: Vec3, b: Vec3, t: &[Vec3; 3]) -> bool {
    let dir = b - a;
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-12 * scale {
        return false;
    }
    let inv = 1.0 / det;
    let s = a - t[0];
    let u = s.dot(p) * inv;
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    let w = e2.dot(q) * inv;
    let eps = 1e-12;
    u > eps && v > eps && u + v < 1.0 - eps && w > eps && w < 1.0 - eps
}

/// Transversal intersection test for two triangles (coplanar overlap is not detected).
pub fn triangles_intersect(a: &[Vec3; 3], b: &[Vec3; 3]) -> bool {
    (0..3).any(|k| segment_crosses(a[k], a[(k + 1) % 3], b)) || (0..3).any(|k| segment_crosses(b[k], b[(k + 1) % 3], a))
}
