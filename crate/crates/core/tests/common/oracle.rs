//! Brute-force reference for one pushing instant: a 200-point grid over the
//! push position and a 180-point grid over the push-cone angle. In S states
//! the rope tension is the free variable left by the three balance equations;
//! the remaining forces follow from them and the convex objective is minimized
//! over the tension interval by golden-section search.

use tumblelift::tumble_planner::{InstantGeometry, StateKind, EPS};
use tumblelift::{PlateSpec, TumbleParams, Vec2};

pub const ORACLE_S: usize = 200;
pub const ORACLE_BETA: usize = 180;

fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

struct Affine {
    f0: (Vec2, Vec2),
    lambda: (f64, f64),
}

fn at(a: &(Vec2, Vec2), t: f64) -> Vec2 {
    a.0 + a.1 * t
}

/// Best objective over the oracle grid, restricted to positions where `allowed(s)`.
pub fn grid_oracle(
    g: &InstantGeometry,
    plate: &PlateSpec,
    params: &TumbleParams,
    kind: StateKind,
    allowed: &dyn Fn(f64) -> bool,
) -> Option<f64> {
    let rot = g.rotation;
    let tangent = Vec2::new(rot.cos(), rot.sin());
    let normal = Vec2::new(-rot.sin(), rot.cos());
    let cone = (1.0 / plate.mu1).atan();
    let (b_lo, b_hi) = (cone + EPS, std::f64::consts::PI - cone - EPS);
    let weight = Vec2::new(0.0, -plate.m * 9.8);
    let m_g = cross(&g.r_g, &weight);
    let m_t = cross(&g.r_t, &g.t_hat);
    let l_lo = EPS.sqrt();
    let l_hi = (params.f1_sq_max - EPS).sqrt();
    let mut best: Option<f64> = None;
    for i in 0..ORACLE_S {
        let s = EPS + (plate.h - EPS) * i as f64 / (ORACLE_S - 1) as f64;
        if !allowed(s) {
            continue;
        }
        let r1 = g.face_origin + tangent * s - g.p0;
        for j in 0..ORACLE_BETA {
            let beta = b_lo + (b_hi - b_lo) * j as f64 / (ORACLE_BETA - 1) as f64;
            let dir = tangent * beta.cos() + normal * beta.sin();
            let m_d = cross(&r1, &dir);
            if m_d.abs() < 1e-12 {
                continue;
            }
            // λ(T) and F0(T) from the moment and force balances
            let lam = (-m_g / m_d, -m_t / m_d);
            let t_dir = if kind == StateKind::S { g.t_hat } else { Vec2::zeros() };
            let lam = if kind == StateKind::S { lam } else { (lam.0, 0.0) };
            let af = Affine {
                f0: (-(weight + dir * lam.0), -(dir * lam.1 + t_dir)),
                lambda: lam,
            };
            // each constraint as a·T + b ≥ 0
            let lin: Vec<Box<dyn Fn(f64) -> f64>> = vec![
                Box::new(|t| af.lambda.0 + af.lambda.1 * t - l_lo),
                Box::new(|t| l_hi - af.lambda.0 - af.lambda.1 * t),
                Box::new(|t| at(&af.f0, t).y - EPS),
                Box::new(|t| at(&af.f0, t).x - EPS * at(&af.f0, t).y),
                Box::new(|t| (plate.mu0 - EPS) * at(&af.f0, t).y - at(&af.f0, t).x),
            ];
            let (mut lo, mut hi) = if kind == StateKind::S { (0.0, f64::INFINITY) } else { (0.0, 0.0) };
            let mut ok = true;
            for c in &lin {
                let b = c(0.0);
                let a = c(1.0) - b;
                if a.abs() < 1e-14 {
                    ok &= b >= -1e-12;
                } else if a > 0.0 {
                    lo = f64::max(lo, -b / a);
                } else {
                    hi = f64::min(hi, -b / a);
                }
            }
            if !ok || lo > hi + 1e-12 {
                continue;
            }
            let hi = hi.max(lo).min(lo + 1e6);
            let obj = |t: f64| {
                let f0 = at(&af.f0, t);
                let l = af.lambda.0 + af.lambda.1 * t;
                let tt = if kind == StateKind::S { t } else { 0.0 };
                params.k1 * f0.norm_squared() + params.k2 * l * l + params.k3 * tt * tt
            };
            let (mut a, mut b) = (lo, hi);
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..120 {
                let x1 = b - phi * (b - a);
                let x2 = a + phi * (b - a);
                if obj(x1) <= obj(x2) {
                    b = x2;
                } else {
                    a = x1;
                }
            }
            let v = obj(0.5 * (a + b)).min(obj(lo)).min(obj(hi));
            if best.is_none_or(|x| v < x) {
                best = Some(v);
            }
        }
    }
    best
}
