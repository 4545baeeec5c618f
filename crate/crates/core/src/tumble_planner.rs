//! Sliding-push tumbling: per-instant force-balance minimisation, the hold/loosen
//! state sequence, contact-edge switching and rope return.

use crate::core_types::{ArmSide, ArmSpec, Layout, PlateSpec, Pose2, TumbleParams, Vec2};
use crate::geometry::golden_min;
use crate::pull_planner::PullCommand;
use crate::sim::{Phase, Sim, SimState};
use crate::workspace::{annotate_grasps, world_grasp};
use crate::PlanError;
use nalgebra::Rotation2;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Margin for the strict inequalities of the push problem.
pub const EPS: f64 = 1e-6;

const GRID_S: usize = 161;
const GRID_BETA: usize = 91;
const REFINE_ROUNDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    S,
    SPrime,
}

impl StateKind {
    pub fn label(self) -> &'static str {
        match self {
            StateKind::S => "S",
            StateKind::SPrime => "SPrime",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeContactModel {
    pub first_edge: Vec2,
    pub second_edge: Vec2,
    pub switch_angle: f64,
}

impl EdgeContactModel {
    /// Rectangle resting flat with its first edge at the planar origin; the second
    /// edge is where the far corner of the thickness face lands after a quarter turn.
    pub fn for_plate(plate: &PlateSpec) -> Self {
        EdgeContactModel {
            first_edge: Vec2::zeros(),
            second_edge: Vec2::new(-plate.w, 0.0),
            switch_angle: FRAC_PI_2,
        }
    }

    pub fn active_edge(&self, rotation: f64) -> usize {
        if rotation >= self.switch_angle - 1e-12 {
            1
        } else {
            0
        }
    }
}

fn rot(a: f64) -> Rotation2<f64> {
    Rotation2::new(a)
}

/// Plate-local anchor of the active edge.
fn edge_local(plate: &PlateSpec, edge: usize) -> Vec2 {
    if edge == 0 {
        Vec2::zeros()
    } else {
        Vec2::new(0.0, plate.w)
    }
}

pub fn pivot(rotation: f64, edges: &EdgeContactModel) -> Vec2 {
    if edges.active_edge(rotation) == 0 {
        edges.first_edge
    } else {
        edges.second_edge
    }
}

/// Planar position of a plate-local point at the given rotation.
pub fn plate_point(rotation: f64, plate: &PlateSpec, edges: &EdgeContactModel, local: &Vec2) -> Vec2 {
    let e = edges.active_edge(rotation);
    pivot(rotation, edges) + rot(rotation) * (local - edge_local(plate, e))
}

/// Pose of the plate frame (its local origin) and the active edge index.
pub fn plate_pose_at(rotation: f64, plate: &PlateSpec, edges: &EdgeContactModel) -> (Pose2, usize) {
    let origin = plate_point(rotation, plate, edges, &Vec2::zeros());
    (Pose2::new(origin, rotation), edges.active_edge(rotation))
}

/// Rotation at which the center of mass passes over the first edge.
pub fn tip_angle(plate: &PlateSpec, _edges: &EdgeContactModel) -> f64 {
    plate.r_g.x.atan2(plate.r_g.y)
}

/// Rotation at which the center of mass passes over the second edge.
pub fn tip_through_angle(plate: &PlateSpec) -> f64 {
    PI - plate.r_g.x.atan2(plate.w - plate.r_g.y)
}

/// Everything about one instant that does not depend on the decision variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantGeometry {
    pub rotation: f64,
    pub active_edge: usize,
    pub p0: Vec2,
    /// Unit tangent of the pushing face (local u axis).
    pub e_u: Vec2,
    /// Unit normal pointing into the plate from the pushing face.
    pub n_in: Vec2,
    /// Planar position of the pushing face's s = 0 end.
    pub face_origin: Vec2,
    pub face_len: f64,
    pub r_g: Vec2,
    pub r_t: Vec2,
    /// Unit vector from the hook toward the pulley pin.
    pub t_hat: Vec2,
    pub gravity: Vec2,
}

impl InstantGeometry {
    pub fn new(rotation: f64, plate: &PlateSpec, edges: &EdgeContactModel, pin: &Vec2) -> Self {
        let p0 = pivot(rotation, edges);
        let r = rot(rotation);
        let hook = plate_point(rotation, plate, edges, &plate.r_h);
        let to_pin = pin - hook;
        let t_hat = if to_pin.norm() > 1e-12 { to_pin.normalize() } else { Vec2::y() };
        InstantGeometry {
            rotation,
            active_edge: edges.active_edge(rotation),
            p0,
            e_u: r * Vec2::x(),
            n_in: r * Vec2::y(),
            face_origin: plate_point(rotation, plate, edges, &Vec2::zeros()),
            face_len: plate.h,
            r_g: plate_point(rotation, plate, edges, &plate.r_g) - p0,
            r_t: hook - p0,
            t_hat,
            gravity: Vec2::new(0.0, -plate.weight()),
        }
    }

    pub fn push_point(&self, s: f64) -> Vec2 {
        self.face_origin + self.e_u * s
    }

    /// Gravity moment about the pivot (N·mm, counter-clockwise positive).
    pub fn gravity_moment(&self) -> f64 {
        cross(&self.r_g, &self.gravity)
    }

    /// Push direction at cone angle β, measured from the face tangent toward the inward normal.
    pub fn push_dir(&self, beta: f64) -> Vec2 {
        self.e_u * beta.cos() + self.n_in * beta.sin()
    }
}

pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Admissible band for the push cone angle with the strict-inequality margin applied.
pub fn beta_band(mu1: f64) -> (f64, f64) {
    let lo = (1.0 / mu1).atan();
    (lo + EPS, PI - lo - EPS)
}

/// Forces for fixed (s, β); None when the inner problem is infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub s: f64,
    pub beta: f64,
    pub f0: Vec2,
    pub f1: Vec2,
    pub t: Vec2,
    pub lambda: f64,
    pub tension: f64,
    pub objective: f64,
}

/// Exact inner solve. The moment balance leaves a line in (|F1|, |T|); every
/// constraint is linear along it and the objective is a convex quadratic, so
/// the optimum is the clamped stationary point.
pub fn solve_inner(g: &InstantGeometry, plate: &PlateSpec, params: &TumbleParams, kind: StateKind, s: f64, beta: f64) -> Option<Candidate> {
    let d = g.push_dir(beta);
    let r1 = g.push_point(s) - g.p0;
    let md = cross(&r1, &d);
    let mg = g.gravity_moment();
    let lam_lo = EPS.sqrt();
    let lam_hi = (params.f1_sq_max - EPS).max(0.0).sqrt();
    let (lambda, tension) = match kind {
        StateKind::SPrime => {
            if md.abs() < 1e-12 {
                return None;
            }
            (-mg / md, 0.0)
        }
        StateKind::S => {
            let mt = cross(&g.r_t, &g.t_hat);
            let nn = md * md + mt * mt;
            if nn < 1e-24 {
                return None;
            }
            // (λ, T) = base + τ·dir along the moment line
            let base = (-mg * md / nn, -mg * mt / nn);
            let norm = nn.sqrt();
            let dir = (mt / norm, -md / norm);
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            let mut lin = |a: f64, b: f64| -> bool {
                // a·τ + b ≥ 0
                if a.abs() < 1e-15 {
                    return b >= 0.0;
                }
                let x = -b / a;
                if a > 0.0 {
                    lo = lo.max(x);
                } else {
                    hi = hi.min(x);
                }
                true
            };
            // F0 = c + τ·v
            let c = -(g.gravity + d * base.0 + g.t_hat * base.1);
            let v = -(d * dir.0 + g.t_hat * dir.1);
            let mu = plate.mu0;
            let ok = lin(dir.0, base.0 - lam_lo)
                && lin(-dir.0, lam_hi - base.0)
                && lin(dir.1, base.1)
                && lin(v.y, c.y - EPS)
                && lin(v.x - EPS * v.y, c.x - EPS * c.y)
                && lin((mu - EPS) * v.y - v.x, (mu - EPS) * c.y - c.x);
            if !ok || lo > hi {
                return None;
            }
            let a2 = params.k1 * v.dot(&v) + params.k2 * dir.0 * dir.0 + params.k3 * dir.1 * dir.1;
            let a1 = 2.0 * (params.k1 * c.dot(&v) + params.k2 * base.0 * dir.0 + params.k3 * base.1 * dir.1);
            let tau = if a2 > 1e-15 {
                (-a1 / (2.0 * a2)).clamp(lo, hi)
            } else if a1 >= 0.0 {
                lo
            } else {
                hi
            };
            if !tau.is_finite() {
                return None;
            }
            (base.0 + tau * dir.0, (base.1 + tau * dir.1).max(0.0))
        }
    };
    if !(lambda >= lam_lo - 1e-12 && lambda <= lam_hi + 1e-12) || tension < 0.0 {
        return None;
    }
    let f1 = d * lambda;
    let t = g.t_hat * tension;
    let f0 = -(g.gravity + f1 + t);
    if f0.y < EPS - 1e-12 || f0.x < EPS * f0.y - 1e-12 || f0.x > (plate.mu0 - EPS) * f0.y + 1e-12 {
        return None;
    }
    let objective = params.k1 * f0.norm_squared() + params.k2 * f1.norm_squared() + params.k3 * t.norm_squared();
    Some(Candidate {
        s,
        beta,
        f0,
        f1,
        t,
        lambda,
        tension,
        objective,
    })
}

/// Push points of up to two predecessors within the current contact segment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Chain {
    pub prev: Option<Vec2>,
    pub prev2: Option<Vec2>,
}

impl Chain {
    pub fn admits(&self, p: &Vec2, params: &TumbleParams) -> bool {
        let Some(prev) = self.prev else { return true };
        let step = p - prev;
        if step.norm() > params.v_max * params.dt {
            return false;
        }
        let Some(prev2) = self.prev2 else { return true };
        direction_change(&(prev - prev2), &step).map_or(true, |a| a <= params.gamma)
    }

    pub fn push(&self, p: Vec2) -> Chain {
        Chain {
            prev: Some(p),
            prev2: self.prev,
        }
    }
}

/// Angle between consecutive displacements; None if either is degenerate.
pub fn direction_change(a: &Vec2, b: &Vec2) -> Option<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na < 1e-9 || nb < 1e-9 {
        return None;
    }
    Some((a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushStep {
    pub t_i: f64,
    pub plate_rotation: f64,
    pub rotation_center: Vec2,
    pub push_point: Vec2,
    pub r_1: Vec2,
    pub r_t: Vec2,
    pub r_g: Vec2,
    pub f0: Vec2,
    pub f1: Vec2,
    pub t: Vec2,
    pub gravity: Vec2,
    pub state_kind: StateKind,
    pub objective_value: f64,
    /// Distance of the push point along the pushing face.
    pub s: f64,
    pub beta: f64,
    pub active_edge: usize,
    /// Gravity no longer resists: the pusher lets go and F1 = 0.
    pub release: bool,
}

impl PushStep {
    pub fn force_residual(&self) -> f64 {
        (self.f0 + self.f1 + self.t + self.gravity).norm()
    }

    pub fn moment_residual(&self) -> f64 {
        (cross(&self.r_1, &self.f1) + cross(&self.r_t, &self.t) + cross(&self.r_g, &self.gravity)).abs()
    }
}

fn step_from(g: &InstantGeometry, kind: StateKind, c: &Candidate, t_i: f64) -> PushStep {
    let p1 = g.push_point(c.s);
    PushStep {
        t_i,
        plate_rotation: g.rotation,
        rotation_center: g.p0,
        push_point: p1,
        r_1: p1 - g.p0,
        r_t: g.r_t,
        r_g: g.r_g,
        f0: c.f0,
        f1: c.f1,
        t: c.t,
        gravity: g.gravity,
        state_kind: kind,
        objective_value: c.objective,
        s: c.s,
        beta: c.beta,
        active_edge: g.active_edge,
        release: false,
    }
}

fn release_step(g: &InstantGeometry, params: &TumbleParams, kind: StateKind, chain: &Chain, t_i: f64) -> PushStep {
    let p1 = chain.prev.unwrap_or_else(|| g.push_point(g.face_len));
    let s = (p1 - g.face_origin).dot(&g.e_u);
    PushStep {
        t_i,
        plate_rotation: g.rotation,
        rotation_center: g.p0,
        push_point: p1,
        r_1: p1 - g.p0,
        r_t: g.r_t,
        r_g: g.r_g,
        f0: -g.gravity,
        f1: Vec2::zeros(),
        t: Vec2::zeros(),
        gravity: g.gravity,
        state_kind: kind,
        objective_value: params.k1 * g.gravity.norm_squared(),
        s,
        beta: FRAC_PI_2,
        active_edge: g.active_edge,
        release: true,
    }
}

/// Below this gravity moment (N·mm) the plate balances on its edge without a push.
const RELEASE_MOMENT: f64 = 1e-7;

/// Whether gravity still turns the plate back onto the table at this instant.
pub fn needs_push(g: &InstantGeometry) -> bool {
    g.gravity_moment() < -RELEASE_MOMENT
}

pub fn solve_push_instant(
    g: &InstantGeometry,
    plate: &PlateSpec,
    params: &TumbleParams,
    kind: StateKind,
    chain: &Chain,
) -> Result<PushStep, PlanError> {
    solve_push_instant_excluding(g, plate, params, kind, chain, &[], 0.0)
}

/// As `solve_push_instant`, with push positions inside any `exclude` interval of s forbidden.
pub fn solve_push_instant_excluding(
    g: &InstantGeometry,
    plate: &PlateSpec,
    params: &TumbleParams,
    kind: StateKind,
    chain: &Chain,
    exclude: &[(f64, f64)],
    t_i: f64,
) -> Result<PushStep, PlanError> {
    let outside = |s: f64, _: &Vec2| exclude.iter().all(|(a, b)| s < *a || s > *b);
    solve_filtered(g, plate, params, kind, chain, &outside, t_i)
}

fn beta_grid(mu1: f64) -> impl Iterator<Item = f64> {
    let (lo, hi) = beta_band(mu1);
    (0..GRID_BETA).map(move |j| lo + (hi - lo) * j as f64 / (GRID_BETA - 1) as f64)
}

fn better(best: &mut Option<Candidate>, c: Option<Candidate>) {
    if let Some(c) = c {
        if best.map_or(true, |b| c.objective < b.objective) {
            *best = Some(c);
        }
    }
}

/// Golden refinement of the cone angle at fixed s, starting from a grid optimum.
fn refine_beta(g: &InstantGeometry, plate: &PlateSpec, params: &TumbleParams, kind: StateKind, start: Candidate) -> Candidate {
    let (b_lo, b_hi) = beta_band(plate.mu1);
    let mut db = (b_hi - b_lo) / (GRID_BETA - 1) as f64;
    let mut best = Some(start);
    let penal = |b: f64| solve_inner(g, plate, params, kind, start.s, b).map_or(f64::INFINITY, |c| c.objective);
    for _ in 0..REFINE_ROUNDS {
        let cur = best.unwrap();
        let (b, _) = golden_min(penal, (cur.beta - db).max(b_lo), (cur.beta + db).min(b_hi), 1e-10);
        better(&mut best, solve_inner(g, plate, params, kind, start.s, b));
        db *= 0.5;
    }
    best.unwrap()
}

/// Grid search over (s, β) and golden refinement of each. Positions rejected by
/// `filter` or by the chain are infeasible.
fn solve_filtered(
    g: &InstantGeometry,
    plate: &PlateSpec,
    params: &TumbleParams,
    kind: StateKind,
    chain: &Chain,
    filter: &dyn Fn(f64, &Vec2) -> bool,
    t_i: f64,
) -> Result<PushStep, PlanError> {
    if !needs_push(g) {
        return Ok(release_step(g, params, kind, chain, t_i));
    }
    let eval = |s: f64, beta: f64| -> Option<Candidate> {
        if !(s >= EPS && s <= g.face_len) {
            return None;
        }
        let p = g.push_point(s);
        if !filter(s, &p) || !chain.admits(&p, params) {
            return None;
        }
        solve_inner(g, plate, params, kind, s, beta)
    };
    let (b_lo, b_hi) = beta_band(plate.mu1);
    let s_lo = EPS;
    let s_hi = g.face_len;
    let mut best: Option<Candidate> = None;
    let mut s_grid: Vec<f64> = (0..GRID_S)
        .map(|i| s_lo + (s_hi - s_lo) * i as f64 / (GRID_S - 1) as f64)
        .collect();
    // the speed bound can leave a window narrower than the grid pitch
    if let Some(prev) = chain.prev {
        let centre = (prev - g.face_origin).dot(&g.e_u);
        let reach = params.v_max * params.dt;
        if reach.is_finite() {
            for i in 0..=40 {
                s_grid.push(centre - reach + 2.0 * reach * i as f64 / 40.0);
            }
        }
    }
    for &s in &s_grid {
        for beta in beta_grid(plate.mu1) {
            better(&mut best, eval(s, beta));
        }
    }
    let Some(mut cur) = best else {
        return Err(PlanError::InfeasibleInstant { rotation: g.rotation });
    };
    let mut ds = (s_hi - s_lo) / (GRID_S - 1) as f64;
    let mut db = (b_hi - b_lo) / (GRID_BETA - 1) as f64;
    let penal = |c: Option<Candidate>| c.map_or(f64::INFINITY, |c| c.objective);
    for _ in 0..REFINE_ROUNDS {
        let beta = cur.beta;
        let (s_new, _) = golden_min(|s| penal(eval(s, beta)), (cur.s - ds).max(s_lo), (cur.s + ds).min(s_hi), 1e-9);
        better(&mut best, eval(s_new, beta));
        cur = best.unwrap();
        let s = cur.s;
        let (b_new, _) = golden_min(|b| penal(eval(s, b)), (cur.beta - db).max(b_lo), (cur.beta + db).min(b_hi), 1e-10);
        better(&mut best, eval(s, b_new));
        cur = best.unwrap();
        ds *= 0.5;
        db *= 0.5;
    }
    Ok(step_from(g, kind, &cur, t_i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TumbleTrajectory {
    pub steps: Vec<PushStep>,
    pub edge_switch_index: Option<usize>,
    pub tip_index: usize,
    /// Per step, the s intervals the planner was allowed to choose from: grid
    /// positions that are feasible, chain-admissible and keep a feasible
    /// continuation to the end of the segment. Empty for release steps.
    pub admissible_s: Vec<Vec<(f64, f64)>>,
}

impl TumbleTrajectory {
    /// Index ranges of consecutive steps sharing a contact edge.
    pub fn segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.steps.len() {
            if i == self.steps.len() || self.steps[i].active_edge != self.steps[start].active_edge {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// Position of the edge switch as a fraction of the planned rotation span.
    pub fn normalized_switch(&self) -> Option<f64> {
        let i = self.edge_switch_index?;
        let first = self.steps.first()?.plate_rotation;
        let last = self.steps.last()?.plate_rotation;
        if last <= first {
            return None;
        }
        Some((self.steps[i].plate_rotation - first) / (last - first))
    }

    pub fn max_f1(&self) -> f64 {
        self.steps.iter().map(|s| s.f1.norm()).fold(0.0, f64::max)
    }
}

/// Number of rotation intervals for one contact segment: proportional share of
/// the step budget, refined until a point at distance `r_max` from the pivot
/// moves at most v_max·dt, and odd so the segment ends on a loosened state.
fn intervals(span: f64, total: f64, params: &TumbleParams, r_max: f64) -> usize {
    let mut m = ((params.n_steps as f64) * span / total).round().max(1.0) as usize;
    let reach = params.v_max * params.dt;
    if reach.is_finite() && reach > 0.0 {
        m = m.max((span * r_max / reach).ceil() as usize);
    }
    if m % 2 == 0 {
        m += 1;
    }
    m
}

pub fn plan_tumble(
    plate: &PlateSpec,
    edges: &EdgeContactModel,
    params: &TumbleParams,
    pin: &Vec2,
    start_rotation: f64,
) -> Result<TumbleTrajectory, PlanError> {
    plan_tumble_masked(plate, edges, params, pin, start_rotation, &|_| true)
}

/// Plate rotations of every planned instant, one list per contact segment.
/// Both segments are discretized against the face length h.
pub fn rotation_schedule(plate: &PlateSpec, edges: &EdgeContactModel, params: &TumbleParams, start_rotation: f64) -> Vec<Vec<f64>> {
    let tip1 = tip_angle(plate, edges);
    let tip2 = tip_through_angle(plate);
    let mut spans: Vec<(f64, f64)> = Vec::new();
    if start_rotation < tip1 {
        spans.push((start_rotation, tip1));
    }
    let s2 = start_rotation.max(edges.switch_angle);
    if s2 < tip2 {
        spans.push((s2, tip2));
    }
    let total: f64 = spans.iter().map(|(a, b)| b - a).sum();
    spans
        .iter()
        .map(|&(a0, a1)| {
            let m = intervals(a1 - a0, total, params, plate.h);
            (0..=m).map(|j| if j == m { a1 } else { a0 + (a1 - a0) * j as f64 / m as f64 }).collect()
        })
        .collect()
}

/// `plan_tumble` with push points rejected by `point_ok` treated as infeasible.
pub fn plan_tumble_masked(
    plate: &PlateSpec,
    edges: &EdgeContactModel,
    params: &TumbleParams,
    pin: &Vec2,
    start_rotation: f64,
    point_ok: &dyn Fn(&Vec2) -> bool,
) -> Result<TumbleTrajectory, PlanError> {
    let schedule = rotation_schedule(plate, edges, params, start_rotation);
    plan_tumble_scheduled(plate, edges, params, pin, start_rotation, &schedule, point_ok)
}

/// Plan over a given rotation schedule, e.g. one computed with other parameters.
pub fn plan_tumble_scheduled(
    plate: &PlateSpec,
    edges: &EdgeContactModel,
    params: &TumbleParams,
    pin: &Vec2,
    start_rotation: f64,
    schedule: &[Vec<f64>],
    point_ok: &dyn Fn(&Vec2) -> bool,
) -> Result<TumbleTrajectory, PlanError> {
    let mut t_i = 0.0;
    let mut steps = Vec::new();
    let mut admissible_s = Vec::new();
    for rotations in schedule {
        let (seg, adm) = plan_segment(plate, edges, params, pin, rotations, &mut t_i, point_ok)?;
        steps.extend(seg);
        admissible_s.extend(adm);
    }
    if steps.is_empty() {
        let g = InstantGeometry::new(start_rotation, plate, edges, pin);
        steps.push(release_step(&g, params, StateKind::SPrime, &Chain::default(), 0.0));
        admissible_s.push(Vec::new());
    }
    let edge_switch_index = if start_rotation < edges.switch_angle {
        steps.iter().position(|s| s.active_edge == 1)
    } else {
        None
    };
    let tip_index = steps.len() - 1;
    Ok(TumbleTrajectory {
        steps,
        edge_switch_index,
        tip_index,
        admissible_s,
    })
}

/// Push positions live on a fixed s grid; a backward pass marks (previous,
/// current) grid pairs from which the chain constraints can be met until the
/// last pushing instant, and the forward pass picks the cheapest such position
/// at every instant.
fn plan_segment(
    plate: &PlateSpec,
    edges: &EdgeContactModel,
    params: &TumbleParams,
    pin: &Vec2,
    rotations: &[f64],
    t_i: &mut f64,
    point_ok: &dyn Fn(&Vec2) -> bool,
) -> Result<(Vec<PushStep>, Vec<Vec<(f64, f64)>>), PlanError> {
    let n = GRID_S;
    let geo: Vec<InstantGeometry> = rotations.iter().map(|a| InstantGeometry::new(*a, plate, edges, pin)).collect();
    let mut kinds = Vec::with_capacity(geo.len());
    for (j, g) in geo.iter().enumerate() {
        let restart = j == 0 || g.active_edge != geo[j - 1].active_edge;
        kinds.push(if restart || kinds[j - 1] == StateKind::SPrime { StateKind::S } else { StateKind::SPrime });
    }
    let kind = |j: usize| kinds[j];
    let pushing: Vec<usize> = (0..geo.len()).filter(|&j| needs_push(&geo[j])).collect();
    let s_grid: Vec<f64> = (0..n).map(|k| EPS + (plate.h - EPS) * k as f64 / (n - 1) as f64).collect();
    let pts: Vec<Vec<Vec2>> = pushing
        .iter()
        .map(|&j| s_grid.iter().map(|&s| geo[j].push_point(s)).collect())
        .collect();
    // best (objective, β) per grid position
    let costs: Vec<Vec<Option<Candidate>>> = pushing
        .iter()
        .zip(&pts)
        .map(|(&j, p)| {
            s_grid
                .iter()
                .zip(p)
                .map(|(&s, pt)| {
                    if !point_ok(pt) {
                        return None;
                    }
                    let mut best = None;
                    for beta in beta_grid(plate.mu1) {
                        better(&mut best, solve_inner(&geo[j], plate, params, kind(j), s, beta));
                    }
                    best
                })
                .collect()
        })
        .collect();
    let cn = pushing.len();
    let reach = params.v_max * params.dt;
    // grid successors within the speed bound
    let nbr: Vec<Vec<Vec<usize>>> = (0..cn.saturating_sub(1))
        .map(|c| {
            (0..n)
                .map(|b| {
                    if costs[c][b].is_none() {
                        return Vec::new();
                    }
                    (0..n)
                        .filter(|&k| costs[c + 1][k].is_some() && !((pts[c + 1][k] - pts[c][b]).norm() > reach))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut viable: Vec<Vec<bool>> = vec![Vec::new(); cn];
    if cn >= 2 {
        for c in (1..cn).rev() {
            let mut w = vec![false; n * n];
            for a in 0..n {
                for &b in &nbr[c - 1][a] {
                    w[a * n + b] = c == cn - 1
                        || nbr[c][b].iter().any(|&k| {
                            viable[c + 1][b * n + k]
                                && Chain {
                                    prev: Some(pts[c][b]),
                                    prev2: Some(pts[c - 1][a]),
                                }
                                .admits(&pts[c + 1][k], params)
                        });
                }
            }
            viable[c] = w;
        }
    }
    let first: Vec<bool> = (0..n)
        .map(|b| costs.first().is_some_and(|c| c[b].is_some()) && (cn < 2 || nbr[0][b].iter().any(|&k| viable[1][b * n + k])))
        .collect();
    if cn > 0 && !first.iter().any(|v| *v) {
        let dead = (0..cn).find(|&c| costs[c].iter().all(|x| x.is_none())).unwrap_or(0);
        return Err(PlanError::InfeasibleInstant {
            rotation: geo[pushing[dead]].rotation,
        });
    }

    let pitch = (plate.h - EPS) / (n - 1) as f64;
    let mut steps = Vec::with_capacity(geo.len());
    let mut admissible = Vec::with_capacity(geo.len());
    let mut chain = Chain::default();
    let mut prev: Option<usize> = None;
    let mut c = 0;
    for (j, g) in geo.iter().enumerate() {
        if c < cn && pushing[c] == j {
            let allowed: Vec<usize> = (0..n)
                .filter(|&b| {
                    costs[c][b].is_some()
                        && match prev {
                            None => first[b],
                            Some(a) => viable[c][a * n + b],
                        }
                        && chain.admits(&pts[c][b], params)
                })
                .collect();
            let Some(&b) = allowed
                .iter()
                .min_by(|x, y| costs[c][**x].unwrap().objective.total_cmp(&costs[c][**y].unwrap().objective))
            else {
                return Err(PlanError::InfeasibleInstant { rotation: g.rotation });
            };
            let cand = refine_beta(g, plate, params, kind(j), costs[c][b].unwrap());
            steps.push(step_from(g, kind(j), &cand, *t_i));
            admissible.push(index_intervals(&allowed, &s_grid, pitch, plate.h));
            chain = chain.push(pts[c][b]);
            prev = Some(b);
            c += 1;
        } else {
            steps.push(release_step(g, params, kind(j), &chain, *t_i));
            admissible.push(Vec::new());
        }
        *t_i += params.dt;
    }
    Ok((steps, admissible))
}

/// Runs of consecutive grid indices as s intervals, each widened by half a pitch.
fn index_intervals(idx: &[usize], s_grid: &[f64], pitch: f64, s_max: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && idx[j + 1] == idx[j] + 1 {
            j += 1;
        }
        out.push(((s_grid[idx[i]] - pitch / 2.0).max(EPS), (s_grid[idx[j]] + pitch / 2.0).min(s_max)));
        i = j + 1;
    }
    out
}

/// Consecutive push displacements within each contact segment, release steps excluded.
fn displacements(traj: &TumbleTrajectory) -> Vec<Vec<Vec2>> {
    traj.segments()
        .into_iter()
        .map(|r| {
            let pts: Vec<Vec2> = traj.steps[r].iter().filter(|s| !s.release).map(|s| s.push_point).collect();
            pts.windows(2).map(|w| w[1] - w[0]).collect()
        })
        .collect()
}

/// Sum of absolute changes between consecutive push-direction angles.
pub fn oscillation_metric(traj: &TumbleTrajectory) -> f64 {
    let mut total = 0.0;
    for seg in displacements(traj) {
        let angles: Vec<f64> = seg.iter().filter(|d| d.norm() > 1e-9).map(|d| d.y.atan2(d.x)).collect();
        for w in angles.windows(2) {
            total += crate::core_types::normalize_angle(w[1] - w[0]).abs();
        }
    }
    total
}

/// Largest distance between adjacent push points.
pub fn max_spacing(traj: &TumbleTrajectory) -> f64 {
    displacements(traj)
        .iter()
        .flatten()
        .map(|d| d.norm())
        .fold(0.0, f64::max)
}

/// Largest angle between consecutive push displacements.
pub fn max_direction_change(traj: &TumbleTrajectory) -> f64 {
    let mut m: f64 = 0.0;
    for seg in displacements(traj) {
        for w in seg.windows(2) {
            if let Some(a) = direction_change(&w[0], &w[1]) {
                m = m.max(a);
            }
        }
    }
    m
}

/// Mean height of the push point over the later half of the pushing instants.
pub fn second_half_mean_height(traj: &TumbleTrajectory) -> f64 {
    let ys: Vec<f64> = traj.steps.iter().filter(|s| !s.release).map(|s| s.push_point.y).collect();
    let tail = &ys[ys.len() / 2..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Re-solve instants whose push point the arm cannot reach. Each is first
/// repaired in place, excluding a band of face positions around the failed
/// point and keeping the chain with both neighbours intact; if that fails the
/// whole trajectory is re-planned with unreachable points masked out.
#[allow(clippy::too_many_arguments)]
pub fn check_kinematics_and_repair(
    traj: &TumbleTrajectory,
    plate: &PlateSpec,
    edges: &EdgeContactModel,
    params: &TumbleParams,
    pin: &Vec2,
    arm: &ArmSpec,
    layout: &Layout,
    table_height: f64,
    band: f64,
) -> Result<TumbleTrajectory, PlanError> {
    let reachable = |p: &Vec2| {
        let w = layout.to_world(p, table_height);
        let d = (w - arm.shoulder).norm();
        d >= arm.reach_min && d <= arm.reach_max
    };
    let bad: Vec<usize> = (0..traj.steps.len())
        .filter(|&i| !traj.steps[i].release && !reachable(&traj.steps[i].push_point))
        .collect();
    let Some(&first_bad) = bad.first() else {
        return Ok(traj.clone());
    };
    let mut out = traj.clone();
    let segments = traj.segments();
    let mut local_ok = true;
    for &i in &bad {
        let seg = segments.iter().find(|r| r.contains(&i)).cloned().unwrap_or(i..i + 1);
        let pushes = |r: std::ops::Range<usize>| -> Vec<Vec2> {
            out.steps[r].iter().filter(|s| !s.release).map(|s| s.push_point).collect()
        };
        let prior = pushes(seg.start..i);
        let next = pushes(i + 1..seg.end);
        let chain = Chain {
            prev: prior.last().copied(),
            prev2: prior.len().checked_sub(2).map(|k| prior[k]),
        };
        let failed_s = out.steps[i].s;
        let filter = |s: f64, p: &Vec2| {
            if (s - failed_s).abs() <= band || !reachable(p) {
                return false;
            }
            let here = chain.push(*p);
            next.first().map_or(true, |n1| {
                here.admits(n1, params) && next.get(1).map_or(true, |n2| here.push(*n1).admits(n2, params))
            })
        };
        let g = InstantGeometry::new(out.steps[i].plate_rotation, plate, edges, pin);
        match solve_filtered(&g, plate, params, out.steps[i].state_kind, &chain, &filter, out.steps[i].t_i) {
            Ok(s) => {
                out.steps[i] = s;
                out.admissible_s[i] = Vec::new();
                // released instants that follow keep the pusher where it let go
                for j in i + 1..seg.end {
                    if !out.steps[j].release {
                        break;
                    }
                    let r = &mut out.steps[j];
                    r.push_point = s.push_point;
                    r.r_1 = s.push_point - r.rotation_center;
                    r.s = s.s;
                }
            }
            Err(_) => {
                local_ok = false;
                break;
            }
        }
    }
    if local_ok {
        return Ok(out);
    }
    let start = traj.steps.first().map_or(0.0, |s| s.plate_rotation);
    plan_tumble_masked(plate, edges, params, pin, start, &reachable)
        .map_err(|_| PlanError::TumbleKinematicsFailed { index: first_bad })
}

/// Straight-line feeds toward the pulley, alternating arms, until the plate lies flat.
pub fn plan_rope_return(sim: &Sim, state: &SimState, arms: &[ArmSpec; 2], chunk: f64) -> Vec<PullCommand> {
    let mut cmds = Vec::new();
    let mut st = state.clone();
    if st.plate_tilt() <= 1f64.to_radians() {
        return cmds;
    }
    if st.phase == Phase::Tumbling {
        st = sim.begin_return(&st);
    }
    let first = &st.rope.elements[0];
    let u = first.axis();
    let grasp = annotate_grasps(first, 2)[0];
    let pin = st.rope.pin_point;
    let standoff = 2.0 * st.rope.element_length;
    let mut side = ArmSide::Right;
    let mut guard = 0;
    while st.phase != Phase::Done && guard < 10_000 {
        guard += 1;
        let need = sim.feed_to_flat(&st);
        if need <= 1e-9 {
            break;
        }
        let feed = need.min(chunk);
        let at = |dist: f64| crate::core_types::element_frame(pin + u * dist, u);
        let start = world_grasp(&at(standoff + feed), &grasp);
        let end = world_grasp(&at(standoff), &grasp);
        cmds.push(PullCommand {
            arm: arms[side.index()].name,
            grasp,
            start,
            end,
            d: feed,
        });
        st = match sim.apply_return(&st, feed) {
            Ok(s) => s,
            Err(_) => break,
        };
        side = side.other();
    }
    cmds
}
