//! Distance queries between capsules, points and oriented boxes.

// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::kinematics::Pose;
use crate::{Quat, Vec3};

/// Segment swept by a sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vec3, b: Vec3, radius: f64) -> Self {
        Self { a, b, radius }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn distance(&self, other: &Capsule) -> f64 {
        segment_segment_distance(&self.a, &self.b, &other.a, &other.b) - self.radius - other.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub orientation: Quat,
    pub half_extents: Vec3,
}

impl OrientedBox {
    pub fn new(pose: Pose, half_extents: Vec3) -> Self {
        Self {
            center: pose.position,
            orientation: pose.orientation,
            half_extents,
        }
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(&(p - self.center))
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let l = self.to_local(p);
        (0..3).all(|i| l[i].abs() <= self.half_extents[i])
    }

    pub fn point_distance(&self, p: &Vec3) -> f64 {
        let l = self.to_local(p);
        let h = &self.half_extents;
        let mut sq = 0.0;
        for i in 0..3 {
            let excess = l[i].abs() - h[i];
            if excess > 0.0 {
                sq += excess * excess;
            }
        }
        sq.sqrt()
    }

    /// Exact distance from a segment to the box; zero when they intersect.
    pub fn segment_distance(&self, a: &Vec3, b: &Vec3) -> f64 {
        let (la, lb) = (self.to_local(a), self.to_local(b));
        let h = self.half_extents;
        if segment_hits_aabb(&la, &lb, &h) {
            return 0.0;
        }
        // Without intersection the closest box feature is a face (an
        // endpoint then attains the minimum) or an edge.
        let mut best = aabb_point_distance(&la, &h).min(aabb_point_distance(&lb, &h));
        for axis in 0..3 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for su in [-1.0, 1.0] {
                for sv in [-1.0, 1.0] {
                    let mut p = Vec3::zeros();
                    p[u] = su * h[u];
                    p[v] = sv * h[v];
                    let mut q = p;
                    p[axis] = -h[axis];
                    q[axis] = h[axis];
                    best = best.min(segment_segment_distance(&la, &lb, &p, &q));
                }
            }
        }
        best
    }

    /// Distance between a capsule's surface and the box; negative values are
    /// penetration depths bounded below by `-radius`.
    pub fn capsule_distance(&self, c: &Capsule) -> f64 {
        self.segment_distance(&c.a, &c.b) - c.radius
    }
}

fn aabb_point_distance(p: &Vec3, h: &Vec3) -> f64 {
    let mut sq = 0.0;
    for i in 0..3 {
        let excess = p[i].abs() - h[i];
        if excess > 0.0 {
            sq += excess * excess;
        }
    }
    sq.sqrt()
}

/// Slab test for a segment against the origin-centered box `[-h, h]`.
fn segment_hits_aabb(a: &Vec3, b: &Vec3, h: &Vec3) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for i in 0..3 {
        if d[i].abs() < 1e-300 {
            if a[i].abs() > h[i] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d[i];
        let (mut lo, mut hi) = ((-h[i] - a[i]) * inv, (h[i] - a[i]) * inv);
        if lo > hi {
            core::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Closest-point parameter on segment `a..b` for point `p`, in `[0, 1]`.
pub fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 <= f64::EPSILON * f64::EPSILON {
        return 0.0;
    }
    ((p - a).dot(&d) / len2).clamp(0.0, 1.0)
}

/// Minimum distance between segments `p1..q1` and `p2..q2`.
pub fn segment_segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let eps = 1e-24;

    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > eps * a.max(e) {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box() -> OrientedBox {
        OrientedBox {
            center: Vec3::new(0.2, -0.1, 0.3),
            orientation: Quat::from_euler_angles(0.3, -0.5, 1.1),
            half_extents: Vec3::new(0.1, 0.2, 0.05),
        }
    }

    fn dense_segment_box(bx: &OrientedBox, a: &Vec3, b: &Vec3) -> f64 {
        let n = 20_000;
        (0..=n)
            .map(|i| bx.point_distance(&(a + (b - a) * (i as f64 / n as f64))))
            .fold(f64::INFINITY, f64::min)
    }

    fn dense_segment_segment(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
        // distance to a segment is convex along the other, so the brute force
        // only needs one dense axis
        let n = 4000;
        (0..=n)
            .map(|i| {
                let p = p1 + (q1 - p1) * (i as f64 / n as f64);
                let t = closest_on_segment(&p, p2, q2);
                (p - (p2 + (q2 - p2) * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn parallel_and_degenerate_segments() {
        let z = Vec3::zeros();
        let x = Vec3::x();
        let d = segment_segment_distance(&z, &x, &Vec3::new(0.5, 1.0, 0.0), &Vec3::new(2.0, 1.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
        let d = segment_segment_distance(&z, &z, &Vec3::new(3.0, 4.0, 0.0), &Vec3::new(3.0, 4.0, 0.0));
        assert!((d - 5.0).abs() < 1e-15);
    }

    #[test]
    fn box_containment_and_distance() {
        let bx = unit_box();
        assert!(bx.contains(&bx.center));
        assert_eq!(bx.segment_distance(&bx.center, &(bx.center + Vec3::x())), 0.0);
        let outward = bx.orientation * Vec3::z();
        let p = bx.center + outward * 0.15;
        assert!((bx.point_distance(&p) - 0.1).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn segment_box_matches_dense_sampling(
            a in prop::array::uniform3(-0.5f64..0.8),
            b in prop::array::uniform3(-0.5f64..0.8),
        ) {
            let bx = unit_box();
            let (a, b) = (Vec3::from(a), Vec3::from(b));
            let exact = bx.segment_distance(&a, &b);
            let dense = dense_segment_box(&bx, &a, &b);
            // dense sampling can only overestimate, by at most half a step
            prop_assert!(exact <= dense + 1e-12);
            prop_assert!(dense - exact <= 0.5 * (b - a).norm() / 20_000.0 + 1e-9);
        }

        #[test]
        fn segment_segment_matches_dense(
            p in prop::array::uniform3(-1.0f64..1.0),
            q in prop::array::uniform3(-1.0f64..1.0),
            r in prop::array::uniform3(-1.0f64..1.0),
            s in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let (p, q, r, s) = (Vec3::from(p), Vec3::from(q), Vec3::from(r), Vec3::from(s));
            let exact = segment_segment_distance(&p, &q, &r, &s);
            let dense = dense_segment_segment(&p, &q, &r, &s);
            prop_assert!(exact <= dense + 1e-12);
            prop_assert!(dense - exact <= (q - p).norm() / 4000.0 + 1e-9);
        }
    }
}
