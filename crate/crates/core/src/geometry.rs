//! Collision primitives: oriented boxes, capsules and the table half-space.

use crate::core_types::{Segment3, Vec3, P3};
use nalgebra::{Matrix3, UnitQuaternion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: P3,
    /// Columns are the box axes in world coordinates.
    pub axes: Matrix3<f64>,
    pub half: Vec3,
}

impl Obb {
    pub fn new(center: P3, rotation: UnitQuaternion<f64>, half: Vec3) -> Self {
        Obb {
            center,
            axes: *rotation.to_rotation_matrix().matrix(),
            half,
        }
    }

    pub fn axis_aligned(center: P3, half: Vec3) -> Self {
        Obb {
            center,
            axes: Matrix3::identity(),
            half,
        }
    }

    pub fn to_local(&self, p: &P3) -> Vec3 {
        self.axes.transpose() * (p - self.center)
    }

    pub fn corners(&self) -> [P3; 8] {
        let mut out = [self.center; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let s = |b: usize| if i & (1 << b) != 0 { 1.0 } else { -1.0 };
            *c = self.center
                + self.axes.column(0) * (s(0) * self.half.x)
                + self.axes.column(1) * (s(1) * self.half.y)
                + self.axes.column(2) * (s(2) * self.half.z);
        }
        out
    }

    pub fn distance_to_point(&self, p: &P3) -> f64 {
        let q = self.to_local(p);
        let d = Vec3::new(
            (q.x.abs() - self.half.x).max(0.0),
            (q.y.abs() - self.half.y).max(0.0),
            (q.z.abs() - self.half.z).max(0.0),
        );
        d.norm()
    }

    pub fn lowest_z(&self) -> f64 {
        self.center.z
            - (0..3)
                .map(|i| self.axes[(2, i)].abs() * self.half[i])
                .sum::<f64>()
    }

    /// Separating-axis test over the 15 candidate axes.
    pub fn intersects(&self, other: &Obb) -> bool {
        let a = &self.axes;
        let b = &other.axes;
        let r = a.transpose() * b;
        let abs_r = r.map(|v| v.abs() + 1e-12);
        let t_w = other.center - self.center;
        let t = a.transpose() * t_w;
        let ea = self.half;
        let eb = other.half;
        for i in 0..3 {
            let ra = ea[i];
            let rb = eb[0] * abs_r[(i, 0)] + eb[1] * abs_r[(i, 1)] + eb[2] * abs_r[(i, 2)];
            if t[i].abs() > ra + rb {
                return false;
            }
        }
        for j in 0..3 {
            let ra = ea[0] * abs_r[(0, j)] + ea[1] * abs_r[(1, j)] + ea[2] * abs_r[(2, j)];
            let rb = eb[j];
            let tj = t[0] * r[(0, j)] + t[1] * r[(1, j)] + t[2] * r[(2, j)];
            if tj.abs() > ra + rb {
                return false;
            }
        }
        for i in 0..3 {
            let i1 = (i + 1) % 3;
            let i2 = (i + 2) % 3;
            for j in 0..3 {
                let j1 = (j + 1) % 3;
                let j2 = (j + 2) % 3;
                let ra = ea[i1] * abs_r[(i2, j)] + ea[i2] * abs_r[(i1, j)];
                let rb = eb[j1] * abs_r[(i, j2)] + eb[j2] * abs_r[(i, j1)];
                let tv = t[i2] * r[(i1, j)] - t[i1] * r[(i2, j)];
                if tv.abs() > ra + rb {
                    return false;
                }
            }
        }
        true
    }

    /// Minimum distance from a segment to the box. The point-to-box distance is
    /// convex along the segment, so a golden-section search is exact up to tolerance.
    pub fn distance_to_segment(&self, seg: &Segment3) -> f64 {
        let f = |t: f64| self.distance_to_point(&(seg.a + (seg.b - seg.a) * t));
        let (t, v) = golden_min(f, 0.0, 1.0, 1e-10);
        v.min(f(0.0)).min(f(1.0)).min(f(t))
    }
}

/// Golden-section minimisation of a unimodal function on [lo, hi].
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub seg: Segment3,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: P3, b: P3, radius: f64) -> Self {
        Capsule {
            seg: Segment3::new(a, b),
            radius,
        }
    }

    pub fn hits_box(&self, b: &Obb) -> bool {
        // bounding-sphere reject before the exact search
        let far = point_segment_distance(&b.center, &self.seg) - b.half.norm();
        if far >= self.radius {
            return false;
        }
        b.distance_to_segment(&self.seg) < self.radius
    }

    pub fn hits_capsule(&self, other: &Capsule) -> bool {
        segment_distance(&self.seg, &other.seg) < self.radius + other.radius
    }

    pub fn below(&self, z: f64) -> bool {
        self.seg.a.z.min(self.seg.b.z) - self.radius < z
    }
}

pub fn point_segment_distance(p: &P3, seg: &Segment3) -> f64 {
    let d = seg.b - seg.a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 { ((p - seg.a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (seg.a + d * t)).norm()
}

/// Closest distance between two segments.
pub fn segment_distance(s1: &Segment3, s2: &Segment3) -> f64 {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-12;
    let (s, t);
    if a <= eps && e <= eps {
        return r.norm();
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > eps {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let p1 = s1.a + d1 * s;
    let p2 = s2.a + d2 * t;
    (p1 - p2).norm()
}
