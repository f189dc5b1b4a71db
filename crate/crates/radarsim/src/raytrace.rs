//! Single-bounce scatter-path computation: BVH-accelerated visibility from
//! each antenna pair to sampled body surface, with analytic path-length
//! rates from per-vertex velocity.

use rand::Rng;
use rayon::prelude::*;

use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::vec3::{self, Aabb, Vec3};

/// TX/RX element positions in the world frame (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    pub tx_positions: Vec<Vec3>,
    pub rx_positions: Vec<Vec3>,
}

impl AntennaArray {
    /// Uniform linear RX array along +x centered on the origin, spaced by
    /// `rx_spacing_m`. TX elements sit one wavelength apart starting at the
    /// origin; only `tx_positions[0]` transmits (single effective TX), the
    /// rest are carried for configuration fidelity.
    pub fn from_config(cfg: &RadarConfig) -> Self {
        let d = cfg.derive();
        let n = cfg.rx_count;
        let rx_positions = (0..n)
            .map(|i| {
                let x = (i as f64 - (n as f64 - 1.0) / 2.0) * cfg.rx_spacing_m;
                [x, 0.0, 0.0]
            })
            .collect();
        let tx_positions = (0..cfg.tx_count)
            .map(|i| [i as f64 * d.wavelength_m, 0.0, 0.0])
            .collect();
        AntennaArray {
            tx_positions,
            rx_positions,
        }
    }

    pub fn validate_for(&self, cfg: &RadarConfig) -> Result<()> {
        if self.tx_positions.len() != cfg.tx_count || self.rx_positions.len() != cfg.rx_count {
            return Err(Error::invalid(format!(
                "antenna array {}x{} does not match config {}x{}",
                self.tx_positions.len(),
                self.rx_positions.len(),
                cfg.tx_count,
                cfg.rx_count
            )));
        }
        for p in self.tx_positions.iter().chain(self.rx_positions.iter()) {
            if !vec3::is_finite(*p) {
                return Err(Error::invalid("antenna position is not finite"));
            }
        }
        Ok(())
    }
}

/// One point on the body surface contributing a radar return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub position: Vec3,
    pub normal: Vec3,
    pub area: f64,
    pub velocity: Vec3,
}

/// One TX -> surface -> RX propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPath {
    pub rx_index: usize,
    /// Full tx->surface->rx length in meters.
    pub path_length_m: f64,
    /// Time derivative of the path length, m/s.
    pub path_rate_mps: f64,
    pub amplitude: f64,
}

/// Antenna gain applied per path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainPattern {
    Isotropic,
    /// cos^p falloff from the +y boresight, evaluated at the TX.
    CosinePower(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub gain: GainPattern,
    /// Restrict surface sampling to this box (world frame).
    pub focus: Option<Aabb>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            gain: GainPattern::Isotropic,
            focus: None,
        }
    }
}

// ---------------------------------------------------------------------
// BVH
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Hit {
    pub t: f64,
    pub triangle: usize,
}

#[derive(Debug)]
struct BvhNode {
    aabb: Aabb,
    /// Leaf: index of the first triangle in `order`; internal: index of the
    /// left child (right child is `index + 1` positions later via `skip`).
    index: u32,
    /// Leaf: number of triangles (> 0). Internal: 0.
    len: u32,
    /// Internal nodes: offset from this node to its right child.
    right_offset: u32,
}

/// Bounding volume hierarchy over a triangle mesh. First-hit queries return
/// exactly the same result as brute-force iteration (ties on `t` resolved
/// toward the lower triangle index).
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<u32>,
    tris: Vec<[Vec3; 3]>,
}

const LEAF_SIZE: usize = 4;
const TRI_EPS: f64 = 1e-12;

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Result<Bvh> {
        if mesh.triangles.is_empty() {
            return Err(Error::invalid("cannot build a BVH over an empty mesh"));
        }
        let tris: Vec<[Vec3; 3]> = (0..mesh.triangles.len()).map(|i| mesh.corners(i)).collect();
        let centroids: Vec<Vec3> = tris
            .iter()
            .map(|t| vec3::scale(vec3::add(vec3::add(t[0], t[1]), t[2]), 1.0 / 3.0))
            .collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len());
        build_node(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
        Ok(Bvh { nodes, order, tris })
    }

    /// Closest intersection along `origin + t*dir` with `t` in
    /// `(t_min, t_max)`. `dir` need not be normalized.
    pub fn first_hit(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<Hit> {
        let inv_dir = [1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]];
        let mut best: Option<Hit> = None;
        let mut limit = t_max;
        let mut stack = [0usize; 64];
        let mut sp = 0;
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp]];
            if !node.aabb.hit_by(origin, inv_dir, t_min, limit) {
                continue;
            }
            if node.len > 0 {
                for k in 0..node.len as usize {
                    let tri_idx = self.order[node.index as usize + k] as usize;
                    if let Some(t) = intersect_triangle(&self.tris[tri_idx], origin, dir, t_min, limit)
                    {
                        let better = match &best {
                            None => true,
                            Some(h) => t < h.t || (t == h.t && tri_idx < h.triangle),
                        };
                        if better {
                            best = Some(Hit {
                                t,
                                triangle: tri_idx,
                            });
                            // Keep limit slightly loose so equal-t ties can
                            // still be compared by index.
                            limit = t;
                        }
                    }
                }
            } else {
                let left = stack[sp].checked_add(1).unwrap();
                let right = stack[sp] + node.right_offset as usize;
                stack[sp] = right;
                sp += 1;
                stack[sp] = left;
                sp += 1;
            }
        }
        best
    }

    /// True if anything intersects the segment with `t` in `(t_min, t_max)`.
    pub fn occluded(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> bool {
        self.first_hit(origin, dir, t_min, t_max).is_some()
    }
}

fn build_node(
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<BvhNode>,
) -> usize {
    let mut aabb = Aabb::empty();
    for &t in &order[start..end] {
        for corner in &tris[t as usize] {
            aabb.grow(*corner);
        }
    }
    let my_index = nodes.len();
    nodes.push(BvhNode {
        aabb,
        index: start as u32,
        len: 0,
        right_offset: 0,
    });
    let count = end - start;
    if count <= LEAF_SIZE {
        nodes[my_index].len = count as u32;
        return my_index;
    }
    // Median split along the longest centroid axis.
    let mut cbox = Aabb::empty();
    for &t in &order[start..end] {
        cbox.grow(centroids[t as usize]);
    }
    let axis = cbox.longest_axis();
    let mid = start + count / 2;
    order[start..end].select_nth_unstable_by(count / 2, |&a, &b| {
        centroids[a as usize][axis]
            .partial_cmp(&centroids[b as usize][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    build_node(tris, centroids, order, start, mid, nodes);
    let right = build_node(tris, centroids, order, mid, end, nodes);
    nodes[my_index].right_offset = (right - my_index) as u32;
    my_index
}

/// Moller-Trumbore with inclusive edges; returns the ray parameter.
#[inline]
fn intersect_triangle(
    tri: &[Vec3; 3],
    origin: Vec3,
    dir: Vec3,
    t_min: f64,
    t_max: f64,
) -> Option<f64> {
    let e1 = vec3::sub(tri[1], tri[0]);
    let e2 = vec3::sub(tri[2], tri[0]);
    let p = vec3::cross(dir, e2);
    let det = vec3::dot(e1, p);
    if det.abs() < TRI_EPS {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = vec3::sub(origin, tri[0]);
    let u = vec3::dot(s, p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = vec3::cross(s, e1);
    let v = vec3::dot(dir, q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = vec3::dot(e2, q) * inv_det;
    if t > t_min && t <= t_max {
        Some(t)
    } else {
        None
    }
}

/// Brute-force first hit; the oracle the BVH must agree with.
pub fn brute_force_first_hit(
    mesh: &TriMesh,
    origin: Vec3,
    dir: Vec3,
    t_min: f64,
    t_max: f64,
) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for i in 0..mesh.triangles.len() {
        let corners = mesh.corners(i);
        if let Some(t) = intersect_triangle(&corners, origin, dir, t_min, t_max) {
            let better = match &best {
                None => true,
                Some(h) => t < h.t || (t == h.t && i < h.triangle),
            };
            if better {
                best = Some(Hit { t, triangle: i });
            }
        }
    }
    best
}

// ---------------------------------------------------------------------
// Surface sampling
// ---------------------------------------------------------------------

/// Area-weighted surface sampling. With a focus box, only triangles whose
/// three corners lie inside the box are candidates; the draw count is
/// `round(candidate_area * density)`, each sample representing an equal
/// area share. Deterministic for a fixed seed.
pub fn sample_surface(
    mesh: &TriMesh,
    density: f64,
    focus: Option<&Aabb>,
    seed: u64,
) -> Result<Vec<SurfaceSample>> {
    if !(density > 0.0) {
        return Err(Error::invalid("sampling density must be positive"));
    }
    if !(mesh.total_area() > 0.0) {
        return Err(Error::invalid("cannot sample a zero-area mesh"));
    }
    let candidate = |tri: usize| -> bool {
        match focus {
            None => true,
            Some(bb) => mesh.corners(tri).iter().all(|&c| bb.contains(c)),
        }
    };
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        if candidate(i) {
            total += mesh.triangle_area(i);
        }
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let count = (total * density).round() as usize;
    if count == 0 {
        return Ok(Vec::new());
    }
    let share = total / count as f64;

    let mut rng = crate::rng::rng_for(&[seed, 0x5a4d]);
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let x: f64 = rng.random::<f64>() * total;
        let tri = cumulative.partition_point(|&c| c <= x).min(mesh.triangles.len() - 1);
        let [a, b, c] = mesh.corners(tri);
        // Uniform barycentric point via the square-root trick.
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let sq = r1.sqrt();
        let (wa, wb, wc) = (1.0 - sq, sq * (1.0 - r2), sq * r2);
        let position = vec3::add(
            vec3::add(vec3::scale(a, wa), vec3::scale(b, wb)),
            vec3::scale(c, wc),
        );
        let [ia, ib, ic] = mesh.triangles[tri];
        let velocity = vec3::add(
            vec3::add(
                vec3::scale(mesh.velocities[ia as usize], wa),
                vec3::scale(mesh.velocities[ib as usize], wb),
            ),
            vec3::scale(mesh.velocities[ic as usize], wc),
        );
        samples.push(SurfaceSample {
            position,
            normal: mesh.triangle_normal(tri),
            area: share,
            velocity,
        });
    }
    Ok(samples)
}

// ---------------------------------------------------------------------
// Path computation
// ---------------------------------------------------------------------

/// Geometry of one sample seen from one antenna pair: path length
/// `d = |tx->p| + |p->rx|` and its analytic rate
/// `d_dot = v . (u_tx->p + u_rx->p)`.
pub fn path_geometry(sample: &SurfaceSample, tx: Vec3, rx: Vec3) -> (f64, f64) {
    let to_p_from_tx = vec3::sub(sample.position, tx);
    let to_p_from_rx = vec3::sub(sample.position, rx);
    let d = vec3::norm(to_p_from_tx) + vec3::norm(to_p_from_rx);
    let u_tx = vec3::normalize(to_p_from_tx);
    let u_rx = vec3::normalize(to_p_from_rx);
    let d_dot = vec3::dot(sample.velocity, vec3::add(u_tx, u_rx));
    (d, d_dot)
}

fn gain_factor(pattern: GainPattern, tx: Vec3, p: Vec3) -> f64 {
    match pattern {
        GainPattern::Isotropic => 1.0,
        GainPattern::CosinePower(pw) => {
            let dir = vec3::normalize(vec3::sub(p, tx));
            dir[1].max(0.0).powf(pw)
        }
    }
}

/// Trace scatter paths for one frame. For every surface sample that is
/// front-facing and unoccluded from both the TX and a given RX, emits one
/// path with amplitude `gain * area * cos(theta_inc) / d^2`. Output order
/// is (sample, rx), independent of internal parallelism.
pub fn trace_frame(
    mesh: &TriMesh,
    array: &AntennaArray,
    config: &RadarConfig,
    density: f64,
    seed: u64,
    opts: &TraceOptions,
) -> Result<Vec<ScatterPath>> {
    array.validate_for(config)?;
    let bvh = Bvh::build(mesh)?;
    let samples = sample_surface(mesh, density, opts.focus.as_ref(), seed)?;
    let tx = array.tx_positions[0];

    let per_sample: Vec<Vec<ScatterPath>> = samples
        .par_iter()
        .map(|sample| {
            let mut out = Vec::new();
            let p = sample.position;
            let to_p = vec3::sub(p, tx);
            let dist_tx = vec3::norm(to_p);
            if dist_tx <= 0.0 {
                return out;
            }
            let u_tx = vec3::scale(to_p, 1.0 / dist_tx);
            let cos_inc = -vec3::dot(u_tx, sample.normal);
            if cos_inc <= 0.0 {
                return out; // back-facing toward the transmitter
            }
            // Segment visibility tx -> p, excluding the sample's own surface.
            if bvh.occluded(tx, u_tx, dist_tx * 1e-6, dist_tx * (1.0 - 1e-6)) {
                return out;
            }
            let gain = gain_factor(opts.gain, tx, p);
            for (rx_index, &rx) in array.rx_positions.iter().enumerate() {
                let to_p_rx = vec3::sub(p, rx);
                let dist_rx = vec3::norm(to_p_rx);
                if dist_rx <= 0.0 {
                    continue;
                }
                let u_rx = vec3::scale(to_p_rx, 1.0 / dist_rx);
                if -vec3::dot(u_rx, sample.normal) <= 0.0 {
                    continue; // back-facing toward this receiver
                }
                if bvh.occluded(rx, u_rx, dist_rx * 1e-6, dist_rx * (1.0 - 1e-6)) {
                    continue;
                }
                let d = dist_tx + dist_rx;
                let d_dot = vec3::dot(sample.velocity, vec3::add(u_tx, u_rx));
                let amplitude = gain * sample.area * cos_inc / (d * d);
                out.push(ScatterPath {
                    rx_index,
                    path_length_m: d,
                    path_rate_mps: d_dot,
                    amplitude,
                });
            }
            out
        })
        .collect();

    Ok(per_sample.into_iter().flatten().collect())
}

/// Dump paths as CSV (`rx,path_length_m,path_rate_mps,amplitude`).
pub fn paths_to_csv(paths: &[ScatterPath]) -> String {
    let mut s = String::from("rx,path_length_m,path_rate_mps,amplitude\n");
    for p in paths {
        s.push_str(&format!(
            "{},{},{},{}\n",
            p.rx_index, p.path_length_m, p.path_rate_mps, p.amplitude
        ));
    }
    s
}
