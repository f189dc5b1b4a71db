//! Human motion ingestion: skeleton keyframes, capsule-skinned body meshes,
//! and resampling onto the radar frame grid.
//!
//! World frame: radar at the origin, +y boresight, z up. Subjects are
//! expected roughly 3 m down the +y axis, matching the capture protocol the
//! default configuration models.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::vec3::{self, Vec3};

/// One keyframe of joint positions (meters, world frame).
#[derive(Debug, Clone, PartialEq)]
pub struct JointFrame {
    pub timestamp: f64,
    pub joints: Vec<Vec3>,
}

/// An animated skeleton clip.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub frames: Vec<JointFrame>,
    pub native_fps: f64,
    pub joint_names: Vec<String>,
}

impl MotionSequence {
    pub fn new(frames: Vec<JointFrame>, native_fps: f64, joint_names: Vec<String>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::invalid("motion sequence needs at least 2 frames"));
        }
        if !(native_fps > 0.0) {
            return Err(Error::invalid("native_fps must be positive"));
        }
        let joint_count = joint_names.len();
        for (i, f) in frames.iter().enumerate() {
            if f.joints.len() != joint_count {
                return Err(Error::invalid(format!(
                    "frame {i} has {} joints, expected {joint_count}",
                    f.joints.len()
                )));
            }
            for (j, p) in f.joints.iter().enumerate() {
                if !vec3::is_finite(*p) {
                    return Err(Error::invalid(format!(
                        "frame {i}, joint {j}: coordinate is not finite"
                    )));
                }
            }
            if i > 0 && !(f.timestamp > frames[i - 1].timestamp) {
                return Err(Error::invalid(format!(
                    "timestamps not strictly increasing at frame {i}"
                )));
            }
        }
        Ok(MotionSequence {
            frames,
            native_fps,
            joint_names,
        })
    }

    pub fn duration(&self) -> f64 {
        self.frames.last().unwrap().timestamp - self.frames[0].timestamp
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }
}

// ---------------------------------------------------------------------
// Skeleton file format
// ---------------------------------------------------------------------

#[derive(Deserialize)]
struct SkeletonFile {
    fps: f64,
    joints: Vec<String>,
    frames: Vec<Vec<[f64; 3]>>,
}

/// Parse the skeleton JSON document:
/// `{"fps": N, "joints": [names], "frames": [[[x,y,z], ...], ...]}`.
/// Timestamps are assigned as `frame_index / fps`.
pub fn parse_skeleton_json(data: &[u8], origin: &Path) -> Result<MotionSequence> {
    let file: SkeletonFile = serde_json::from_slice(data).map_err(|e| {
        Error::parse(origin, e.line(), format!("{e}"))
    })?;
    let frames = file
        .frames
        .into_iter()
        .enumerate()
        .map(|(i, joints)| JointFrame {
            timestamp: i as f64 / file.fps,
            joints,
        })
        .collect();
    MotionSequence::new(frames, file.fps, file.joints)
}

pub fn load_skeleton(path: &Path) -> Result<MotionSequence> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_skeleton_json(&data, path)
}

pub fn write_skeleton_json(seq: &MotionSequence, path: &Path) -> Result<()> {
    let doc = serde_json::json!({
        "fps": seq.native_fps,
        "joints": seq.joint_names,
        "frames": seq.frames.iter().map(|f| &f.joints).collect::<Vec<_>>(),
    });
    std::fs::write(path, serde_json::to_string(&doc).unwrap()).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------
// Mesh-sequence input
// ---------------------------------------------------------------------

/// Load a directory of per-frame PLY meshes (`*_000000.ply`, zero-padded
/// frame index before the extension). All frames must share one vertex
/// count so velocities can be differenced across frames.
pub fn load_mesh_sequence(dir: &Path, fps: f64) -> Result<Vec<(Vec<Vec3>, Vec<[u32; 3]>)>> {
    if !(fps > 0.0) {
        return Err(Error::invalid("mesh sequence fps must be positive"));
    }
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "ply").unwrap_or(false))
        .collect();
    entries.sort();
    if entries.len() < 2 {
        return Err(Error::invalid(format!(
            "mesh sequence in {} needs at least 2 PLY frames",
            dir.display()
        )));
    }
    let mut frames = Vec::with_capacity(entries.len());
    let mut vertex_count = None;
    for path in &entries {
        let geo = crate::mesh::read_ply(path)?;
        match vertex_count {
            None => vertex_count = Some(geo.vertices.len()),
            Some(n) if n != geo.vertices.len() => {
                return Err(Error::invalid(format!(
                    "{}: vertex count {} differs from the first frame's {n}",
                    path.display(),
                    geo.vertices.len()
                )))
            }
            _ => {}
        }
        frames.push((geo.vertices, geo.triangles));
    }
    Ok(frames)
}

/// Attach finite-difference velocities to a mesh-frame sequence (central
/// differences, one-sided at the ends) and validate each frame as a TriMesh.
pub fn meshes_with_velocities(
    frames: &[(Vec<Vec3>, Vec<[u32; 3]>)],
    fps: f64,
) -> Result<Vec<TriMesh>> {
    let dt = 1.0 / fps;
    let n = frames.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (prev, prev_dt) = if i > 0 {
            (&frames[i - 1].0, dt)
        } else {
            (&frames[i].0, 0.0)
        };
        let (next, next_dt) = if i + 1 < n {
            (&frames[i + 1].0, dt)
        } else {
            (&frames[i].0, 0.0)
        };
        let span = prev_dt + next_dt;
        let velocities = frames[i]
            .0
            .iter()
            .enumerate()
            .map(|(v, _)| {
                if span == 0.0 {
                    [0.0; 3]
                } else {
                    vec3::scale(vec3::sub(next[v], prev[v]), 1.0 / span)
                }
            })
            .collect();
        out.push(TriMesh::new(
            frames[i].0.clone(),
            frames[i].1.clone(),
            velocities,
        )?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------

/// Linearly resample joint positions onto a uniform grid at `target_fps`.
/// Output timestamps are `first + k / target_fps`; the grid covers the
/// input duration to within one output frame period. Resampling an already
/// uniform sequence at its own rate copies frames bitwise, which makes the
/// operation idempotent.
pub fn resample(seq: &MotionSequence, target_fps: f64) -> Result<MotionSequence> {
    if !(target_fps > 0.0) {
        return Err(Error::invalid("target_fps must be positive"));
    }
    let t0 = seq.frames[0].timestamp;
    let duration = seq.duration();
    let n_out = (duration * target_fps).floor() as usize + 1;
    if n_out < 2 {
        return Err(Error::invalid(format!(
            "sequence duration {duration:.4} s is shorter than one output frame at {target_fps} Hz"
        )));
    }
    let ts: Vec<f64> = seq.frames.iter().map(|f| f.timestamp).collect();
    let mut frames = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let t = t0 + k as f64 / target_fps;
        // Segment index: last knot with ts <= t, clamped to a valid segment.
        let seg = match ts.partition_point(|&x| x <= t) {
            0 => 0,
            p => (p - 1).min(ts.len() - 2),
        };
        let (ta, tb) = (ts[seg], ts[seg + 1]);
        let u = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let a = &seq.frames[seg];
        let b = &seq.frames[seg + 1];
        let joints = a
            .joints
            .iter()
            .zip(b.joints.iter())
            .map(|(&pa, &pb)| vec3::lerp(pa, pb, u))
            .collect();
        frames.push(JointFrame {
            timestamp: t,
            joints,
        });
    }
    MotionSequence::new(frames, target_fps, seq.joint_names.clone())
}

// ---------------------------------------------------------------------
// Body template and capsule skinning
// ---------------------------------------------------------------------

/// One capsule between two joints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodySegment {
    pub joint_a: usize,
    pub joint_b: usize,
    pub radius_m: f64,
}

/// Capsule decomposition of the body plus the bounding-box extents used as
/// the anchor-grid template downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyTemplate {
    pub segments: Vec<BodySegment>,
    pub bounding_box: Vec3,
}

impl BodyTemplate {
    pub fn validate_for(&self, joint_count: usize) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if s.joint_a >= joint_count || s.joint_b >= joint_count {
                return Err(Error::invalid(format!(
                    "segment {i} references joints beyond count {joint_count}"
                )));
            }
            if !(s.radius_m > 0.0) {
                return Err(Error::invalid(format!("segment {i} radius must be > 0")));
            }
        }
        if !self.bounding_box.iter().all(|&e| e > 0.0) {
            return Err(Error::invalid("bounding box extents must be positive"));
        }
        Ok(())
    }
}

/// Canonical 17-joint naming used by the built-in template and the
/// procedural generators.
pub const CANONICAL_JOINTS: [&str; 17] = [
    "pelvis", "spine", "chest", "neck", "head", "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist", "l_hip", "l_knee", "l_ankle", "r_hip", "r_knee",
    "r_ankle",
];

/// Build the humanoid capsule template for a skeleton carrying the
/// canonical joint names (order free). Errors name the first missing joint.
pub fn humanoid_template(joint_names: &[String]) -> Result<BodyTemplate> {
    let idx = |name: &str| -> Result<usize> {
        joint_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("skeleton lacks canonical joint {name:?}")))
    };
    let pairs: [(&str, &str, f64); 16] = [
        ("pelvis", "spine", 0.11),
        ("spine", "chest", 0.11),
        ("chest", "neck", 0.07),
        ("neck", "head", 0.08),
        ("chest", "l_shoulder", 0.055),
        ("l_shoulder", "l_elbow", 0.045),
        ("l_elbow", "l_wrist", 0.04),
        ("chest", "r_shoulder", 0.055),
        ("r_shoulder", "r_elbow", 0.045),
        ("r_elbow", "r_wrist", 0.04),
        ("pelvis", "l_hip", 0.08),
        ("l_hip", "l_knee", 0.07),
        ("l_knee", "l_ankle", 0.05),
        ("pelvis", "r_hip", 0.08),
        ("r_hip", "r_knee", 0.07),
        ("r_knee", "r_ankle", 0.05),
    ];
    let mut segments = Vec::with_capacity(pairs.len());
    for (a, b, r) in pairs {
        segments.push(BodySegment {
            joint_a: idx(a)?,
            joint_b: idx(b)?,
            radius_m: r,
        });
    }
    Ok(BodyTemplate {
        segments,
        bounding_box: [1.2, 1.2, 2.0],
    })
}

/// Vertices per capsule for a given tessellation.
pub fn capsule_vertex_count(rings: usize, sectors: usize) -> usize {
    2 + 2 * rings * sectors
}

/// Triangles per capsule for a given tessellation.
pub fn capsule_triangle_count(rings: usize, sectors: usize) -> usize {
    4 * rings * sectors
}

fn orthonormal_basis(axis: Vec3) -> (Vec3, Vec3) {
    let reference = if axis[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = vec3::normalize(vec3::cross(axis, reference));
    let v = vec3::cross(axis, u);
    (u, v)
}

/// Vertex positions of one tessellated capsule (deterministic layout:
/// a-pole, a-side rings pole -> equator, b-side rings equator -> pole,
/// b-pole).
fn capsule_vertices(a: Vec3, b: Vec3, radius: f64, rings: usize, sectors: usize) -> Vec<Vec3> {
    let axis = vec3::normalize(vec3::sub(b, a));
    let (u, v) = orthonormal_basis(axis);
    let mut verts = Vec::with_capacity(capsule_vertex_count(rings, sectors));
    verts.push(vec3::sub(a, vec3::scale(axis, radius))); // a pole
    let half_pi = std::f64::consts::FRAC_PI_2;
    let two_pi = std::f64::consts::TAU;
    for i in 1..=rings {
        let alpha = half_pi * i as f64 / rings as f64;
        let (sa, ca) = (alpha.sin(), alpha.cos());
        for s in 0..sectors {
            let phi = two_pi * s as f64 / sectors as f64;
            let radial = vec3::add(
                vec3::scale(u, phi.cos() * sa * radius),
                vec3::scale(v, phi.sin() * sa * radius),
            );
            verts.push(vec3::add(a, vec3::sub(radial, vec3::scale(axis, ca * radius))));
        }
    }
    for i in (1..=rings).rev() {
        let alpha = half_pi * i as f64 / rings as f64;
        let (sa, ca) = (alpha.sin(), alpha.cos());
        for s in 0..sectors {
            let phi = two_pi * s as f64 / sectors as f64;
            let radial = vec3::add(
                vec3::scale(u, phi.cos() * sa * radius),
                vec3::scale(v, phi.sin() * sa * radius),
            );
            verts.push(vec3::add(b, vec3::add(radial, vec3::scale(axis, ca * radius))));
        }
    }
    verts.push(vec3::add(b, vec3::scale(axis, radius))); // b pole
    verts
}

/// Triangle indices for the capsule layout above, oriented so every normal
/// points away from the capsule axis.
fn capsule_triangles(
    verts: &[Vec3],
    a: Vec3,
    b: Vec3,
    rings: usize,
    sectors: usize,
    base: u32,
) -> Vec<[u32; 3]> {
    let ring_start = |r: usize| 1 + r * sectors; // r in 0..2*rings
    let mut tris = Vec::with_capacity(capsule_triangle_count(rings, sectors));
    let axis = vec3::normalize(vec3::sub(b, a));

    let mut push_oriented = |i: u32, j: u32, k: u32| {
        let (pi, pj, pk) = (
            verts[i as usize],
            verts[j as usize],
            verts[k as usize],
        );
        let centroid = vec3::scale(vec3::add(vec3::add(pi, pj), pk), 1.0 / 3.0);
        // Outward direction: away from the nearest point on segment ab.
        let t = vec3::dot(vec3::sub(centroid, a), axis)
            .clamp(-f64::INFINITY, vec3::dist(a, b));
        let on_axis = vec3::add(a, vec3::scale(axis, t));
        let outward = vec3::sub(centroid, on_axis);
        let normal = vec3::cross(
            vec3::sub(pj, pi),
            vec3::sub(pk, pi),
        );
        if vec3::dot(normal, outward) >= 0.0 {
            tris.push([base + i, base + j, base + k]);
        } else {
            tris.push([base + i, base + k, base + j]);
        }
    };

    let total_rings = 2 * rings;
    // Pole fans.
    for s in 0..sectors {
        let s1 = (s + 1) % sectors;
        push_oriented(
            0,
            ring_start(0) as u32 + s as u32,
            ring_start(0) as u32 + s1 as u32,
        );
        let last = ring_start(total_rings - 1);
        let apex = (1 + total_rings * sectors) as u32;
        push_oriented(apex, last as u32 + s as u32, last as u32 + s1 as u32);
    }
    // Strips between consecutive rings (covers both hemispheres and the
    // cylinder joint between the two equators).
    for r in 0..total_rings - 1 {
        let r0 = ring_start(r);
        let r1 = ring_start(r + 1);
        for s in 0..sectors {
            let s1 = (s + 1) % sectors;
            push_oriented(
                (r0 + s) as u32,
                (r0 + s1) as u32,
                (r1 + s1) as u32,
            );
            push_oriented((r0 + s) as u32, (r1 + s1) as u32, (r1 + s) as u32);
        }
    }
    tris
}

fn skinned_vertices(
    frame: &JointFrame,
    template: &BodyTemplate,
    rings: usize,
    sectors: usize,
) -> Result<Vec<Vec3>> {
    let mut verts = Vec::new();
    for (i, seg) in template.segments.iter().enumerate() {
        let a = frame.joints[seg.joint_a];
        let b = frame.joints[seg.joint_b];
        if vec3::dist(a, b) < 1e-9 {
            return Err(Error::invalid(format!(
                "segment {i} is degenerate: joints {} and {} coincide",
                seg.joint_a, seg.joint_b
            )));
        }
        verts.extend(capsule_vertices(a, b, seg.radius_m, rings, sectors));
    }
    Ok(verts)
}

/// Skin one keyframe into a watertight capsule mesh. Per-vertex velocity is
/// the finite difference of the corresponding vertex against the neighbor
/// keyframes (central where both exist, one-sided at clip ends, zero when
/// no neighbor is given).
pub fn skin_capsules(
    frame: &JointFrame,
    prev: Option<&JointFrame>,
    next: Option<&JointFrame>,
    template: &BodyTemplate,
    rings: usize,
    sectors: usize,
) -> Result<TriMesh> {
    if rings < 2 {
        return Err(Error::invalid("rings must be >= 2"));
    }
    if sectors < 3 {
        return Err(Error::invalid("sectors must be >= 3"));
    }
    template.validate_for(frame.joints.len())?;

    let verts = skinned_vertices(frame, template, rings, sectors)?;

    let lo = prev.unwrap_or(frame);
    let hi = next.unwrap_or(frame);
    let span = hi.timestamp - lo.timestamp;
    let velocities = if span > 0.0 {
        let verts_lo = skinned_vertices(lo, template, rings, sectors)?;
        let verts_hi = skinned_vertices(hi, template, rings, sectors)?;
        verts_lo
            .iter()
            .zip(verts_hi.iter())
            .map(|(&pl, &ph)| vec3::scale(vec3::sub(ph, pl), 1.0 / span))
            .collect()
    } else {
        vec![[0.0; 3]; verts.len()]
    };

    let mut triangles = Vec::new();
    let per_capsule = capsule_vertex_count(rings, sectors) as u32;
    for (i, seg) in template.segments.iter().enumerate() {
        let a = frame.joints[seg.joint_a];
        let b = frame.joints[seg.joint_b];
        let base = i as u32 * per_capsule;
        let local = &verts[(base as usize)..(base as usize + per_capsule as usize)];
        triangles.extend(capsule_triangles(local, a, b, rings, sectors, base));
    }

    TriMesh::new(verts, triangles, velocities)
}

/// Skin every frame of a sequence with neighbor-aware velocities.
pub fn skin_sequence(
    seq: &MotionSequence,
    template: &BodyTemplate,
    rings: usize,
    sectors: usize,
) -> Result<Vec<TriMesh>> {
    (0..seq.frames.len())
        .map(|i| {
            skin_capsules(
                &seq.frames[i],
                i.checked_sub(1).map(|p| &seq.frames[p]),
                seq.frames.get(i + 1),
                template,
                rings,
                sectors,
            )
        })
        .collect()
}

// ---------------------------------------------------------------------
// Procedural test motions
// ---------------------------------------------------------------------

/// Procedurally generated skeleton clips on the canonical joint set. These
/// drive tests and demos without external motion data.
pub mod procedural {
    use super::*;

    fn names() -> Vec<String> {
        CANONICAL_JOINTS.iter().map(|s| s.to_string()).collect()
    }

    /// Joint positions for a neutral standing pose with the pelvis at
    /// `(x, y, 0.95)`.
    fn pose(pelvis_x: f64, pelvis_y: f64, leg_swing: f64, arm_swing: f64) -> Vec<Vec3> {
        let px = pelvis_x;
        let py = pelvis_y;
        let pz = 0.95;
        let thigh = 0.45;
        let shin = 0.45;
        let upper_arm = 0.30;
        let forearm = 0.28;

        // Swing rotates limbs in the y-z plane (about the x axis), the
        // natural walking plane for a subject facing the radar along -y.
        let limb = |top: Vec3, len: f64, angle: f64| -> Vec3 {
            [
                top[0],
                top[1] + len * angle.sin(),
                top[2] - len * angle.cos(),
            ]
        };

        let pelvis = [px, py, pz];
        let spine = [px, py, pz + 0.15];
        let chest = [px, py, pz + 0.35];
        let neck = [px, py, pz + 0.50];
        let head = [px, py, pz + 0.65];
        let l_shoulder = [px - 0.20, py, pz + 0.45];
        let r_shoulder = [px + 0.20, py, pz + 0.45];
        let l_hip = [px - 0.10, py, pz - 0.05];
        let r_hip = [px + 0.10, py, pz - 0.05];

        let l_knee = limb(l_hip, thigh, leg_swing);
        let l_ankle = limb(l_knee, shin, leg_swing * 0.8);
        let r_knee = limb(r_hip, thigh, -leg_swing);
        let r_ankle = limb(r_knee, shin, -leg_swing * 0.8);
        let l_elbow = limb(l_shoulder, upper_arm, -arm_swing);
        let l_wrist = limb(l_elbow, forearm, -arm_swing);
        let r_elbow = limb(r_shoulder, upper_arm, arm_swing);
        let r_wrist = limb(r_elbow, forearm, arm_swing);

        vec![
            pelvis, spine, chest, neck, head, l_shoulder, l_elbow, l_wrist, r_shoulder,
            r_elbow, r_wrist, l_hip, l_knee, l_ankle, r_hip, r_knee, r_ankle,
        ]
    }

    /// A motionless standing subject 3 m in front of the radar.
    pub fn standing(frame_count: usize, fps: f64) -> MotionSequence {
        let joints = pose(0.0, 3.0, 0.0, 0.0);
        let frames = (0..frame_count)
            .map(|i| JointFrame {
                timestamp: i as f64 / fps,
                joints: joints.clone(),
            })
            .collect();
        MotionSequence::new(frames, fps, names()).unwrap()
    }

    /// Marching in place 3 m in front of the radar: legs and arms swing in
    /// counter-phase at `swing_hz`, producing symmetric approaching and
    /// receding limb velocities.
    pub fn marching(frame_count: usize, fps: f64, swing_hz: f64) -> MotionSequence {
        let frames = (0..frame_count)
            .map(|i| {
                let t = i as f64 / fps;
                let phase = std::f64::consts::TAU * swing_hz * t;
                let leg = 0.55 * phase.sin();
                let arm = 0.40 * phase.sin();
                JointFrame {
                    timestamp: t,
                    joints: pose(0.0, 3.0, leg, arm),
                }
            })
            .collect();
        MotionSequence::new(frames, fps, names()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_frame_seq(p0: Vec3, p1: Vec3, dt: f64) -> MotionSequence {
        MotionSequence::new(
            vec![
                JointFrame {
                    timestamp: 0.0,
                    joints: vec![p0, vec3::add(p0, [0.0, 0.3, 0.0])],
                },
                JointFrame {
                    timestamp: dt,
                    joints: vec![p1, vec3::add(p1, [0.0, 0.3, 0.0])],
                },
            ],
            1.0 / dt,
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    fn one_segment_template() -> BodyTemplate {
        BodyTemplate {
            segments: vec![BodySegment {
                joint_a: 0,
                joint_b: 1,
                radius_m: 0.05,
            }],
            bounding_box: [1.0, 1.0, 1.0],
        }
    }

    #[test]
    fn skeleton_json_roundtrip() {
        let text = br#"{"fps": 20, "joints": ["a", "b"],
            "frames": [[[0,3,1],[0,3,1.5]], [[0.1,3,1],[0.1,3,1.5]]]}"#;
        let seq = parse_skeleton_json(text, Path::new("mem")).unwrap();
        assert_eq!(seq.frames.len(), 2);
        assert_eq!(seq.native_fps, 20.0);
        assert_eq!(seq.frames[1].joints[0][0], 0.1);
        assert!((seq.frames[1].timestamp - 0.05).abs() < 1e-12);
    }

    #[test]
    fn skeleton_fixture_120_frames_at_20fps() {
        let mut frames = Vec::new();
        for i in 0..120 {
            frames.push(vec![[i as f64 * 0.01, 3.0, 1.0], [0.0, 3.0, 1.5]]);
        }
        let doc = serde_json::json!({"fps": 20.0, "joints": ["a","b"], "frames": frames});
        let seq =
            parse_skeleton_json(doc.to_string().as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(seq.frames.len(), 120);
        assert_eq!(seq.native_fps, 20.0);
        assert_eq!(seq.joint_names, vec!["a".to_string(), "b".to_string()]);
        for (i, f) in seq.frames.iter().enumerate() {
            assert_eq!(f.joints[0][0], i as f64 * 0.01);
        }
    }

    #[test]
    fn nonfinite_coordinate_names_frame() {
        let frames = vec![
            JointFrame {
                timestamp: 0.0,
                joints: vec![[0.0; 3]],
            },
            JointFrame {
                timestamp: 0.1,
                joints: vec![[f64::NAN, 0.0, 0.0]],
            },
        ];
        let err = MotionSequence::new(frames, 10.0, vec!["j".into()]).unwrap_err();
        assert!(err.to_string().contains("frame 1"), "{err}");
    }

    #[test]
    fn huge_number_in_json_is_a_parse_error() {
        let text = br#"{"fps": 10, "joints": ["a"], "frames": [[[0,0,1e999]], [[0,0,0]]]}"#;
        assert!(parse_skeleton_json(text, Path::new("mem")).is_err());
    }

    #[test]
    fn inconsistent_joint_count_rejected() {
        let text = br#"{"fps": 10, "joints": ["a","b"], "frames": [[[0,0,0],[1,1,1]], [[0,0,0]]]}"#;
        let err = parse_skeleton_json(text, Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("frame 1"), "{err}");
    }

    #[test]
    fn smallest_tessellation_has_positive_areas() {
        let seq = two_frame_seq([0.0, 3.0, 0.0], [0.0, 3.0, 0.0001], 0.1);
        let mesh = skin_capsules(
            &seq.frames[0],
            None,
            Some(&seq.frames[1]),
            &one_segment_template(),
            2,
            3,
        )
        .unwrap();
        assert_eq!(mesh.vertices.len(), capsule_vertex_count(2, 3));
        assert_eq!(mesh.triangles.len(), capsule_triangle_count(2, 3));
        assert!(mesh.triangles.len() > 0);
        for i in 0..mesh.triangles.len() {
            assert!(mesh.triangle_area(i) > 0.0);
        }
    }

    #[test]
    fn static_frames_zero_velocity() {
        let seq = MotionSequence::new(
            vec![
                JointFrame {
                    timestamp: 0.0,
                    joints: vec![[0.0, 3.0, 0.0], [0.0, 3.0, 0.5]],
                },
                JointFrame {
                    timestamp: 0.1,
                    joints: vec![[0.0, 3.0, 0.0], [0.0, 3.0, 0.5]],
                },
            ],
            10.0,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let mesh = skin_capsules(
            &seq.frames[0],
            None,
            Some(&seq.frames[1]),
            &one_segment_template(),
            3,
            6,
        )
        .unwrap();
        for v in &mesh.velocities {
            assert_eq!(*v, [0.0; 3]);
        }
    }

    #[test]
    fn translated_segment_unit_velocity() {
        // 0.1 m translation over 0.1 s => every vertex moves at 1 m/s.
        let seq = two_frame_seq([0.0, 3.0, 0.0], [0.1, 3.0, 0.0], 0.1);
        for i in 0..2 {
            let mesh = skin_capsules(
                &seq.frames[i],
                i.checked_sub(1).map(|p| &seq.frames[p]),
                seq.frames.get(i + 1),
                &one_segment_template(),
                4,
                8,
            )
            .unwrap();
            for v in &mesh.velocities {
                assert!((vec3::norm(*v) - 1.0).abs() < 1e-9, "{v:?}");
            }
        }
    }

    #[test]
    fn degenerate_segment_names_index() {
        let seq = MotionSequence::new(
            vec![
                JointFrame {
                    timestamp: 0.0,
                    joints: vec![[0.0, 3.0, 0.0], [0.0, 3.0, 0.0]],
                },
                JointFrame {
                    timestamp: 0.1,
                    joints: vec![[0.0, 3.0, 0.0], [0.0, 3.0, 0.0]],
                },
            ],
            10.0,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let err = skin_capsules(
            &seq.frames[0],
            None,
            None,
            &one_segment_template(),
            2,
            3,
        )
        .unwrap_err();
        assert!(err.to_string().contains("segment 0"), "{err}");
    }

    #[test]
    fn resample_identity_at_native_rate() {
        let seq = procedural::marching(20, 10.0, 1.0);
        let out = resample(&seq, 10.0).unwrap();
        assert_eq!(out.frames.len(), seq.frames.len());
        for (a, b) in out.frames.iter().zip(seq.frames.iter()) {
            assert_eq!(a.joints, b.joints);
        }
    }

    #[test]
    fn resample_decimates_20_to_10() {
        let seq = procedural::marching(40, 20.0, 1.0);
        let out = resample(&seq, 10.0).unwrap();
        assert_eq!(out.frames.len(), 20);
        for (k, f) in out.frames.iter().enumerate() {
            assert_eq!(f.joints, seq.frames[2 * k].joints, "frame {k}");
        }
    }

    #[test]
    fn resample_linear_midpoint() {
        let seq = MotionSequence::new(
            vec![
                JointFrame {
                    timestamp: 0.0,
                    joints: vec![[0.0, 0.0, 0.0]],
                },
                JointFrame {
                    timestamp: 1.0,
                    joints: vec![[1.0, 0.0, 0.0]],
                },
            ],
            1.0,
            vec!["j".into()],
        )
        .unwrap();
        let out = resample(&seq, 10.0).unwrap();
        assert_eq!(out.frames.len(), 11);
        let mid = &out.frames[5];
        assert!((mid.timestamp - 0.5).abs() < 1e-12);
        assert!((mid.joints[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn resample_idempotent_bitwise() {
        let seq = procedural::marching(37, 24.0, 1.3);
        let once = resample(&seq, 10.0).unwrap();
        let twice = resample(&once, 10.0).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn resample_too_short_errors() {
        let seq = two_frame_seq([0.0; 3], [0.1, 0.0, 0.0], 0.05);
        assert!(resample(&seq, 10.0).is_err());
    }

    #[test]
    fn rigid_translation_velocity_matches() {
        // Whole-skeleton translation at a constant 0.7 m/s along +x.
        let base = procedural::standing(2, 10.0);
        let frames: Vec<JointFrame> = (0..5)
            .map(|i| {
                let t = i as f64 / 10.0;
                JointFrame {
                    timestamp: t,
                    joints: base.frames[0]
                        .joints
                        .iter()
                        .map(|&p| vec3::add(p, [0.7 * t, 0.0, 0.0]))
                        .collect(),
                }
            })
            .collect();
        let seq = MotionSequence::new(frames, 10.0, base.joint_names.clone()).unwrap();
        let template = humanoid_template(&seq.joint_names).unwrap();
        let meshes = skin_sequence(&seq, &template, 3, 6).unwrap();
        for mesh in &meshes {
            for v in &mesh.velocities {
                assert!((v[0] - 0.7).abs() < 1e-9);
                assert!(v[1].abs() < 1e-9 && v[2].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn skinned_vertex_count_deterministic() {
        let seq = procedural::standing(3, 10.0);
        let template = humanoid_template(&seq.joint_names).unwrap();
        let m1 = skin_capsules(&seq.frames[0], None, None, &template, 4, 8).unwrap();
        let m2 = skin_capsules(&seq.frames[0], None, None, &template, 4, 8).unwrap();
        assert_eq!(
            m1.vertices.len(),
            template.segments.len() * capsule_vertex_count(4, 8)
        );
        assert_eq!(m1, m2);
    }
}
