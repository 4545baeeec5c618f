//! Shared domain model: plates, rope, arms, poses and scenario configuration.

use nalgebra::{Isometry3, Point3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type P3 = Point3<f64>;
pub type Pose3 = Isometry3<f64>;

/// m/s², applied to masses in kg to give newtons.
pub const GRAVITY: f64 = 9.8;

/// Wrap an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateSpec {
    /// Height along the cross-section's long side (mm).
    pub h: f64,
    /// Length along the contact edge (mm).
    pub l: f64,
    /// Thickness (mm).
    pub w: f64,
    /// Mass (kg).
    pub m: f64,
    /// Center of mass in the cross-section frame (u along h, v along w), mm.
    pub r_g: Vec2,
    /// Hook point in the cross-section frame, mm.
    pub r_h: Vec2,
    pub mu0: f64,
    pub mu1: f64,
}

impl PlateSpec {
    /// Cross-section center of mass at the geometric center, hook at the far top corner.
    pub fn centered(h: f64, l: f64, w: f64, m: f64, mu0: f64, mu1: f64) -> Self {
        PlateSpec {
            h,
            l,
            w,
            m,
            r_g: Vec2::new(h / 2.0, w / 2.0),
            r_h: Vec2::new(h, w),
            mu0,
            mu1,
        }
    }

    pub fn acrylic() -> Self {
        Self::centered(300.0, 300.0, 40.0, 4.0, 0.5, 0.4)
    }

    pub fn stainless() -> Self {
        Self::centered(300.0, 400.0, 150.0, 6.0, 0.4, 0.1)
    }

    pub fn plywood() -> Self {
        Self::centered(500.0, 400.0, 44.0, 6.4, 0.6, 0.3)
    }

    pub fn weight(&self) -> f64 {
        self.m * GRAVITY
    }

    fn contains(&self, p: &Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.h && p.y >= 0.0 && p.y <= self.w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Vec2,
    pub rotation: f64,
}

impl Pose2 {
    pub fn new(position: Vec2, rotation: f64) -> Self {
        Pose2 {
            position,
            rotation: normalize_angle(rotation),
        }
    }

    pub fn normalized(self) -> Self {
        Pose2::new(self.position, self.rotation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderElement {
    pub start: P3,
    pub end: P3,
    pub radius: f64,
    pub valid: bool,
}

impl CylinderElement {
    pub fn center(&self) -> P3 {
        nalgebra::center(&self.start, &self.end)
    }

    pub fn axis(&self) -> Vec3 {
        (self.end - self.start).normalize()
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    /// Element frame: origin at the center, local z along the axis, zero twist.
    pub fn frame(&self) -> Pose3 {
        element_frame(self.center(), self.axis())
    }
}

/// Frame whose local z maps to `axis`: the shortest-arc rotation from world −z
/// applied after a base frame that already sends local z to world −z.
pub fn element_frame(origin: P3, axis: Vec3) -> Pose3 {
    let base = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), PI);
    let down = -Vec3::z();
    let arc = UnitQuaternion::rotation_between(&down, &axis).unwrap_or_else(|| {
        // antiparallel: any half-turn about a horizontal axis
        UnitQuaternion::from_axis_angle(&Vec3::x_axis(), PI)
    });
    Isometry3::from_parts(origin.coords.into(), arc * base)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RopeState {
    pub pin_point: P3,
    pub elements: Vec<CylinderElement>,
    pub hook_point: P3,
    pub pulley_ratio: f64,
    pub total_pulled: f64,
    pub element_length: f64,
    pub element_radius: f64,
}

impl RopeState {
    /// A free strand of `n` elements hanging straight down from the pin.
    pub fn hanging(pin: P3, hook: P3, n: usize, element_length: f64, radius: f64, ratio: f64) -> Self {
        let mut rope = RopeState {
            pin_point: pin,
            elements: Vec::new(),
            hook_point: hook,
            pulley_ratio: ratio,
            total_pulled: 0.0,
            element_length,
            element_radius: radius,
        };
        rope.elements = rope.chain(None, n);
        rope
    }

    /// Re-drape the strand: taut from the pin toward `hand` (rounded up to whole
    /// elements), then hanging vertically. Validity flags are reset.
    pub fn draped(&self, hand: Option<P3>) -> RopeState {
        let mut out = self.clone();
        out.elements = self.chain(hand, self.elements.len());
        out
    }

    fn chain(&self, hand: Option<P3>, n: usize) -> Vec<CylinderElement> {
        let len = self.element_length;
        let mut taut = 0usize;
        let mut dir = -Vec3::z();
        if let Some(h) = hand {
            let v = h - self.pin_point;
            let dist = v.norm();
            if dist > 1e-9 {
                dir = v / dist;
                taut = ((dist / len) - 1e-9).ceil().max(0.0) as usize;
            }
        }
        let mut out = Vec::with_capacity(n);
        let mut cur = self.pin_point;
        for i in 0..n {
            let d = if i < taut { dir } else { -Vec3::z() };
            let next = cur + d * len;
            out.push(CylinderElement {
                start: cur,
                end: next,
                radius: self.element_radius,
                valid: true,
            });
            cur = next;
        }
        out
    }

    pub fn is_contiguous(&self, tol: f64) -> bool {
        self.elements
            .windows(2)
            .all(|w| (w[0].end - w[1].start).norm() <= tol)
            && self
                .elements
                .iter()
                .all(|e| (e.length() - self.element_length).abs() <= tol && e.radius == self.element_radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArmSide {
    Left,
    Right,
}

impl ArmSide {
    pub fn other(self) -> ArmSide {
        match self {
            ArmSide::Left => ArmSide::Right,
            ArmSide::Right => ArmSide::Left,
        }
    }

    pub fn index(self) -> usize {
        match self {
            ArmSide::Left => 0,
            ArmSide::Right => 1,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            ArmSide::Left => "L",
            ArmSide::Right => "R",
        }
    }
}

impl fmt::Display for ArmSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmSide::Left => write!(f, "Left"),
            ArmSide::Right => write!(f, "Right"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment3 {
    pub a: P3,
    pub b: P3,
}

impl Segment3 {
    pub fn new(a: P3, b: P3) -> Self {
        Segment3 { a, b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub name: ArmSide,
    pub shoulder: P3,
    pub reach_min: f64,
    pub reach_max: f64,
    /// Half-angle of the cone around grasp→shoulder that the wrist must lie in.
    pub cone_half_angle: f64,
    /// Torso and mount segments belonging to this arm (self-collision bodies).
    pub body_segments: Vec<Segment3>,
    /// Capsule radius used for the upper arm and body segments.
    pub link_radius: f64,
    /// Gripper extents: x along the grasped axis, y across the fingers, z along the approach.
    pub gripper_box: Vec3,
    /// Wrist position used when the arm is moved out of the way.
    pub parked_wrist: P3,
}

/// Axis-aligned static obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBox {
    pub center: P3,
    pub half_extents: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TumbleParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Upper bound on |F1|², N².
    pub f1_sq_max: f64,
    /// Push-point speed bound, mm/s. Infinite disables the speed constraint.
    pub v_max: f64,
    /// Bound on the angle between consecutive push displacements, rad. π disables it.
    pub gamma: f64,
    /// Seconds between consecutive instants.
    pub dt: f64,
    pub n_steps: usize,
}

impl Default for TumbleParams {
    fn default() -> Self {
        TumbleParams {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            f1_sq_max: 30.0,
            v_max: 30.0,
            gamma: 20f64.to_radians(),
            dt: 0.5,
            n_steps: 60,
        }
    }
}

/// Placement of the cross-section plane in the world.
///
/// The plane is world x–z at `y = plate_y`; planar X maps to world −x with the
/// first contact edge at `x = edge_x`, planar Z is height above the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub edge_x: f64,
    pub plate_y: f64,
}

impl Layout {
    pub fn to_world(&self, p: &Vec2, table_height: f64) -> P3 {
        P3::new(self.edge_x - p.x, self.plate_y, table_height + p.y)
    }

    pub fn to_plane(&self, p: &P3, table_height: f64) -> Vec2 {
        Vec2::new(self.edge_x - p.x, p.z - table_height)
    }

    /// World direction of a planar vector.
    pub fn dir_to_world(&self, v: &Vec2) -> Vec3 {
        Vec3::new(-v.x, 0.0, v.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub plate: PlateSpec,
    pub layout: Layout,
    /// Left arm first, right arm second.
    pub arms: [ArmSpec; 2],
    pub rope: RopeState,
    pub table_height: f64,
    pub alpha_thld: f64,
    pub quality_weights: Vec3,
    pub goal_sample_count: usize,
    /// Grasps annotated per element (12 axial angles × 2 flips at the default).
    pub grasps_per_element: usize,
    /// Interpolation steps for straight-line sweep checks.
    pub sweep_steps: usize,
    /// Cap on the hand-tension proxy, N.
    pub force_cap: f64,
    pub max_loops: usize,
    pub obstacles: Vec<ObstacleBox>,
    pub tumble_params: TumbleParams,
    pub noise_sigma_angle: f64,
    pub rng_seed: u64,
}

impl Scenario {
    pub fn arm(&self, side: ArmSide) -> &ArmSpec {
        &self.arms[side.index()]
    }

    pub fn pin_plane(&self) -> Vec2 {
        self.layout.to_plane(&self.rope.pin_point, self.table_height)
    }

    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    pub fn from_toml(text: &str) -> Result<Scenario, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut r = ValidationReport::default();
    let p = &s.plate;
    for (name, v) in [("plate.h", p.h), ("plate.l", p.l), ("plate.w", p.w), ("plate.m", p.m)] {
        if !(v > 0.0) {
            r.push(name, "must be positive");
        }
    }
    for (name, v) in [("plate.mu0", p.mu0), ("plate.mu1", p.mu1)] {
        if !(v > 0.0 && v <= 2.0) {
            r.push(name, "must lie in (0, 2]");
        }
    }
    if p.h > 0.0 && p.w > 0.0 {
        if !p.contains(&p.r_g) {
            r.push("plate.r_g", "outside the cross-section rectangle");
        }
        if !p.contains(&p.r_h) {
            r.push("plate.r_h", "outside the cross-section rectangle");
        }
    }
    for (i, arm) in s.arms.iter().enumerate() {
        let want = if i == 0 { ArmSide::Left } else { ArmSide::Right };
        if arm.name != want {
            r.push("arms", format!("slot {i} must hold the {want} arm"));
        }
        if !(arm.reach_min > 0.0 && arm.reach_min < arm.reach_max) {
            r.push("arms.reach", format!("{} arm needs 0 < reach_min < reach_max", arm.name));
        }
        if !(arm.cone_half_angle > 0.0 && arm.cone_half_angle <= PI) {
            r.push("arms.cone_half_angle", "must lie in (0, π]");
        }
        if arm.gripper_box.iter().any(|v| !(*v > 0.0)) {
            r.push("arms.gripper_box", "extents must be positive");
        }
    }
    let rope = &s.rope;
    if rope.elements.is_empty() {
        r.push("rope.elements", "rope has no elements");
    }
    if !(rope.element_length > 0.0 && rope.element_radius > 0.0) {
        r.push("rope.element_length", "element size must be positive");
    } else if !rope.is_contiguous(1e-6) {
        r.push("rope.elements", "elements are not contiguous with identical size");
    }
    if !(rope.pulley_ratio >= 1.0) {
        r.push("rope.pulley_ratio", "must be at least 1");
    }
    if (rope.pin_point.y - s.layout.plate_y).abs() > 1e-9 {
        r.push("rope.pin_point", "pin must lie in the cross-section plane");
    }
    if !(rope.pin_point.z > s.table_height) {
        r.push("rope.pin_point", "pin must be above the table");
    }
    if !(s.alpha_thld > 0.0 && s.alpha_thld < PI / 2.0) {
        r.push("alpha_thld", "must lie in (0, π/2)");
    }
    let w = &s.quality_weights;
    if w.iter().any(|v| !(*v >= 0.0)) {
        r.push("quality_weights", "components must be non-negative");
    } else if w.iter().all(|v| *v == 0.0) {
        r.push("quality_weights", "all-zero weight vector");
    }
    if s.goal_sample_count < 1 {
        r.push("goal_sample_count", "must be at least 1");
    }
    if s.grasps_per_element < 2 || s.grasps_per_element % 2 != 0 {
        r.push("grasps_per_element", "must be a positive even number");
    }
    if s.sweep_steps < 1 {
        r.push("sweep_steps", "must be at least 1");
    }
    if !(s.force_cap > 0.0) {
        r.push("force_cap", "must be positive");
    }
    if !(s.noise_sigma_angle >= 0.0) {
        r.push("noise_sigma_angle", "must be non-negative");
    }
    let t = &s.tumble_params;
    if [t.k1, t.k2, t.k3].iter().any(|k| !(*k >= 0.0)) || t.k1 + t.k2 + t.k3 <= 0.0 {
        r.push("tumble_params.k", "weights must be non-negative with a positive sum");
    }
    if !(t.f1_sq_max > 0.0) {
        r.push("tumble_params.f1_sq_max", "must be positive");
    }
    if !(t.v_max > 0.0) {
        r.push("tumble_params.v_max", "must be positive");
    }
    if !(t.gamma > 0.0 && t.gamma <= PI) {
        r.push("tumble_params.gamma", "must lie in (0, π]");
    }
    if !(t.dt > 0.0 && t.dt.is_finite()) {
        r.push("tumble_params.dt", "must be positive");
    }
    if t.n_steps < 1 {
        r.push("tumble_params.n_steps", "must be at least 1");
    }
    r
}
