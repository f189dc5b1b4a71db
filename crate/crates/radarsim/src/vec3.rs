//! Small 3-vector helpers used across the geometry and signal modules.

pub type Vec3 = [f64; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm_sq(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// a + (b - a) * t; returns `a` bitwise at t = 0 and `b` bitwise at t = 1.
#[inline]
pub fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    if t == 0.0 {
        return a;
    }
    if t == 1.0 {
        return b;
    }
    add(a, scale(sub(b, a), t))
}

#[inline]
pub fn is_finite(a: Vec3) -> bool {
    a.iter().all(|c| c.is_finite())
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }

    pub fn from_center_extents(center: Vec3, extents: Vec3) -> Self {
        let half = scale(extents, 0.5);
        Aabb {
            min: sub(center, half),
            max: add(center, half),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut bb = Aabb::empty();
        for p in points {
            bb.grow(*p);
        }
        bb
    }

    pub fn grow(&mut self, p: Vec3) {
        for i in 0..3 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut bb = *self;
        bb.grow(other.min);
        bb.grow(other.max);
        bb
    }

    pub fn pad(&self, margin: f64) -> Aabb {
        Aabb {
            min: sub(self.min, [margin; 3]),
            max: add(self.max, [margin; 3]),
        }
    }

    pub fn center(&self) -> Vec3 {
        scale(add(self.min, self.max), 0.5)
    }

    pub fn extents(&self) -> Vec3 {
        sub(self.max, self.min)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|i| self.min[i] <= self.max[i])
            && is_finite(self.min)
            && is_finite(self.max)
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extents();
        let mut axis = 0;
        if e[1] > e[axis] {
            axis = 1;
        }
        if e[2] > e[axis] {
            axis = 2;
        }
        axis
    }

    /// Slab test; returns true if the ray segment [t_min, t_max] intersects.
    #[inline]
    pub fn hit_by(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> bool {
        let mut lo = t_min;
        let mut hi = t_max;
        for i in 0..3 {
            let t0 = (self.min[i] - origin[i]) * inv_dir[i];
            let t1 = (self.max[i] - origin[i]) * inv_dir[i];
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            // NaN (ray parallel, origin outside slab handled by comparison)
            if near.is_nan() || far.is_nan() {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return false;
                }
                continue;
            }
            lo = lo.max(near);
            hi = hi.min(far);
            if lo > hi {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lerp_endpoints_are_bitwise() {
        let a = [0.1, 0.2, 0.3];
        let b = [1.7, -2.9, 4.1];
        assert_eq!(lerp(a, b, 0.0), a);
        assert_eq!(lerp(a, b, 1.0), b);
        let mid = lerp(a, b, 0.5);
        assert!((mid[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn aabb_contains_and_union() {
        let bb = Aabb::from_center_extents([0.0, 0.0, 0.0], [2.0, 2.0, 2.0]);
        assert!(bb.contains([0.9, -0.9, 0.0]));
        assert!(!bb.contains([1.1, 0.0, 0.0]));
        let other = Aabb::from_center_extents([3.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        let u = bb.union(&other);
        assert!(u.contains([3.4, 0.0, 0.0]));
    }

    #[test]
    fn aabb_ray_hit() {
        let bb = Aabb::from_center_extents([0.0, 3.0, 0.0], [1.0, 1.0, 1.0]);
        let dir = [0.0, 1.0, 0.0];
        let inv = [1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]];
        assert!(bb.hit_by([0.0, 0.0, 0.0], inv, 0.0, f64::INFINITY));
        assert!(!bb.hit_by([2.0, 0.0, 0.0], inv, 0.0, f64::INFINITY));
    }
}
