//! Spatial computation: bistatic distances and their far-field expansion,
//! look directions, beam-cone ground footprints and the rotated per-patch
//! frame.
//!
//! Every slicing quantity is computed from positions relative to the center
//! of the illuminated region. Callers holding absolute positions re-base them
//! with [`GroundPoint::relative_to`] first.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result};

/// A point in the ground frame, meters. `z` is zero for points on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GroundPoint {
    pub const ORIGIN: GroundPoint = GroundPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn norm_xy(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(&self, other: &GroundPoint) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn distance(&self, other: &GroundPoint) -> f64 {
        (*self - *other).norm()
    }

    pub fn relative_to(&self, origin: &GroundPoint) -> GroundPoint {
        *self - *origin
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Unit vector along `self`; `None` for the zero vector.
    pub fn unit(&self) -> Option<GroundPoint> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }
}

impl Add for GroundPoint {
    type Output = GroundPoint;
    fn add(self, o: GroundPoint) -> GroundPoint {
        GroundPoint::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for GroundPoint {
    type Output = GroundPoint;
    fn sub(self, o: GroundPoint) -> GroundPoint {
        GroundPoint::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for GroundPoint {
    type Output = GroundPoint;
    fn mul(self, s: f64) -> GroundPoint {
        GroundPoint::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for GroundPoint {
    type Output = GroundPoint;
    fn neg(self) -> GroundPoint {
        GroundPoint::new(-self.x, -self.y, -self.z)
    }
}

/// Unit vector in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
}

impl Direction {
    pub const X: Direction = Direction { x: 1.0, y: 0.0 };
    pub const Y: Direction = Direction { x: 0.0, y: 1.0 };

    /// Normalizes `(x, y)`; `None` when the vector has zero length.
    pub fn new(x: f64, y: f64) -> Option<Self> {
        let n = x.hypot(y);
        (n > 0.0 && n.is_finite()).then(|| Self { x: x / n, y: y / n })
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn angle(&self) -> f64 {
        self.y.atan2(self.x)
    }

    /// The direction rotated +90° counterclockwise.
    pub fn perp(&self) -> Direction {
        Direction {
            x: -self.y,
            y: self.x,
        }
    }

    pub fn dot(&self, v: [f64; 2]) -> f64 {
        self.x * v[0] + self.y * v[1]
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// The bistatic look geometry of a transmitter/receiver pair, relative to the
/// region center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticLook {
    /// Unit look direction in the ground plane (toward the stations).
    pub direction: Direction,
    /// Sum of the two unit line-of-sight vectors, 3-D, unnormalized.
    pub sum: GroundPoint,
    /// Length of the ground projection of `sum`; in `(0, 2]`.
    pub ground_norm: f64,
}

impl BistaticLook {
    /// Effective bistatic angle `β` with `cos(β/2) = ground_norm / 2`.
    ///
    /// Equals the angle between the two lines of sight for stations on the
    /// ground; elevated stations add their elevation to it.
    pub fn effective_angle(&self) -> f64 {
        2.0 * (self.ground_norm / 2.0).clamp(-1.0, 1.0).acos()
    }
}

const DEGENERATE_NORM: f64 = 1e-9;

/// Look geometry of a bistatic pair; `tx` and `rx` relative to the region
/// center.
pub fn bistatic_look(tx: GroundPoint, rx: GroundPoint) -> Result<BistaticLook> {
    let ut = tx
        .unit()
        .ok_or_else(|| Error::DegenerateGeometry("transmitter at the region center".into()))?;
    let ur = rx
        .unit()
        .ok_or_else(|| Error::DegenerateGeometry("receiver at the region center".into()))?;
    let sum = ut + ur;
    let ground_norm = sum.norm_xy();
    if ground_norm < DEGENERATE_NORM {
        return Err(Error::DegenerateGeometry(
            "line-of-sight unit vectors cancel in the ground plane".into(),
        ));
    }
    Ok(BistaticLook {
        direction: Direction::new(sum.x, sum.y).expect("nonzero ground norm"),
        sum,
        ground_norm,
    })
}

/// Unit direction perpendicular to the equal-travel-time lines.
pub fn bistatic_direction(tx: GroundPoint, rx: GroundPoint) -> Result<Direction> {
    bistatic_look(tx, rx).map(|look| look.direction)
}

/// Exact and far-field bistatic path lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticRange {
    pub exact: f64,
    pub approx: f64,
}

/// Path length tx → p → rx, exactly and to first order in `‖p‖`.
///
/// `tx`, `rx` and `p` are relative to the region center. Moving `p` toward
/// the stations shortens the path, so the first-order term is
/// `-p·(tx/‖tx‖ + rx/‖rx‖)`.
pub fn bistatic_range(tx: GroundPoint, rx: GroundPoint, p: GroundPoint) -> BistaticRange {
    let exact = p.distance(&tx) + p.distance(&rx);
    let dt = tx.norm();
    let dr = rx.norm();
    let mut approx = dt + dr;
    if dt > 0.0 {
        approx -= p.dot(&tx) / dt;
    }
    if dr > 0.0 {
        approx -= p.dot(&rx) / dr;
    }
    BistaticRange { exact, approx }
}

/// Ratio of the region radius to the nearest station distance.
///
/// The far-field expansion behind the straight equal-range lines degrades
/// as this grows; [`FAR_FIELD_WARN_RATIO`] is the default warning level.
pub fn far_field_ratio(region_radius: f64, station_distances: &[f64]) -> f64 {
    let nearest = station_distances
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    region_radius / nearest
}

pub const FAR_FIELD_WARN_RATIO: f64 = 0.1;

/// Logs a warning and returns `false` when the far-field ratio exceeds `threshold`.
pub fn check_far_field(region_radius: f64, station_distances: &[f64], threshold: f64) -> bool {
    let ratio = far_field_ratio(region_radius, station_distances);
    if ratio > threshold {
        log::warn!(
            "region radius {region_radius:.1} m is {ratio:.3} of the nearest station distance (threshold {threshold})"
        );
        false
    } else {
        true
    }
}

/// One horizontal layer of a station's antenna array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaLayer {
    /// Height of the layer above the station reference height, meters.
    pub height_offset: f64,
    /// Angle between the layer's data collection surface and the ground, radians.
    pub tilt: f64,
}

impl AntennaLayer {
    pub const GROUND: AntennaLayer = AntennaLayer {
        height_offset: 0.0,
        tilt: 0.0,
    };
}

/// A base station with a uniform linear array per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub id: usize,
    /// Array center of layer 0; `z` is the station height.
    pub position: GroundPoint,
    pub antenna_count: usize,
    pub antenna_spacing: f64,
    /// Azimuth of the array axis in the ground plane, radians.
    pub array_orientation: f64,
    pub layers: Vec<AntennaLayer>,
}

impl BaseStation {
    /// Single-layer station.
    pub fn new(
        id: usize,
        position: GroundPoint,
        antenna_count: usize,
        antenna_spacing: f64,
        array_orientation: f64,
    ) -> Result<Self> {
        let bs = Self {
            id,
            position,
            antenna_count,
            antenna_spacing,
            array_orientation,
            layers: vec![AntennaLayer::GROUND],
        };
        bs.validate()?;
        Ok(bs)
    }

    pub fn with_layers(mut self, layers: Vec<AntennaLayer>) -> Result<Self> {
        self.layers = layers;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::param("position", "coordinates must be finite"));
        }
        if !(self.position.z > 0.0) {
            return Err(Error::param("position.z", "station height must be positive"));
        }
        if self.antenna_count == 0 {
            return Err(Error::param("antenna_count", "must be at least 1"));
        }
        if !(self.antenna_spacing > 0.0) {
            return Err(Error::param("antenna_spacing", "must be positive"));
        }
        if self.layers.is_empty() {
            return Err(Error::param("layers", "at least one layer required"));
        }
        for layer in &self.layers {
            if !(0.0..FRAC_PI_2).contains(&layer.tilt) {
                return Err(Error::param("layers.tilt", "tilt must lie in [0, π/2)"));
            }
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.position.z
    }

    pub fn array_axis(&self) -> GroundPoint {
        let (s, c) = self.array_orientation.sin_cos();
        GroundPoint::new(c, s, 0.0)
    }

    /// Array center of `layer`.
    pub fn layer_center(&self, layer: usize) -> GroundPoint {
        self.position + GroundPoint::new(0.0, 0.0, self.layers[layer].height_offset)
    }

    /// Signed offset of antenna `l` from the array center, meters.
    pub fn antenna_offset(&self, l: usize) -> f64 {
        (l as f64 - (self.antenna_count as f64 - 1.0) / 2.0) * self.antenna_spacing
    }

    /// Phase centers of the antennas of `layer`, centered on the layer center.
    pub fn antenna_positions(&self, layer: usize) -> Vec<GroundPoint> {
        let center = self.layer_center(layer);
        let axis = self.array_axis();
        (0..self.antenna_count)
            .map(|l| center + axis * self.antenna_offset(l))
            .collect()
    }
}

/// A hard-edged beam cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Full cone angle, radians.
    pub open_angle: f64,
    /// Angle of the cone axis from vertical, radians.
    pub tilt: f64,
    /// Azimuth of the cone axis, radians.
    pub azimuth: f64,
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.open_angle > 0.0 && self.open_angle < std::f64::consts::PI) {
            return Err(Error::InvalidBeam(format!(
                "open angle {} outside (0, π)",
                self.open_angle
            )));
        }
        if !(0.0..FRAC_PI_2).contains(&self.tilt) {
            return Err(Error::InvalidBeam(format!(
                "tilt {} outside [0, π/2)",
                self.tilt
            )));
        }
        if self.tilt + self.open_angle / 2.0 >= FRAC_PI_2 {
            return Err(Error::InvalidBeam(
                "cone edge reaches the horizon; footprint is unbounded".into(),
            ));
        }
        Ok(())
    }

    /// Beam from `station` whose axis meets the ground at `target`.
    pub fn aimed_at(station: &BaseStation, target: GroundPoint, open_angle: f64) -> BeamSpec {
        let d = target - GroundPoint::ground(station.position.x, station.position.y);
        BeamSpec {
            open_angle,
            tilt: d.norm_xy().atan2(station.height()),
            azimuth: d.y.atan2(d.x),
        }
    }
}

/// Elliptical ground footprint of a beam cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseFootprint {
    pub center: GroundPoint,
    pub eccentricity: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub major_axis_azimuth: f64,
}

impl EllipseFootprint {
    /// True iff `p` lies inside or on the ellipse (height ignored).
    pub fn contains(&self, p: GroundPoint) -> bool {
        let [u, v] = self.local(p);
        let (a, b) = (self.semi_major, self.semi_minor);
        (u / a).powi(2) + (v / b).powi(2) <= 1.0 + 1e-12
    }

    /// Coordinates of `p` in the ellipse frame (major axis first).
    pub fn local(&self, p: GroundPoint) -> [f64; 2] {
        let (s, c) = self.major_axis_azimuth.sin_cos();
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        [c * dx + s * dy, -s * dx + c * dy]
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.semi_major * self.semi_minor
    }

    /// Axis-aligned bounding box `[xmin, xmax, ymin, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        let (s, c) = self.major_axis_azimuth.sin_cos();
        let (a, b) = (self.semi_major, self.semi_minor);
        let hx = ((a * c).powi(2) + (b * s).powi(2)).sqrt();
        let hy = ((a * s).powi(2) + (b * c).powi(2)).sqrt();
        [
            self.center.x - hx,
            self.center.x + hx,
            self.center.y - hy,
            self.center.y + hy,
        ]
    }

    /// Largest distance from the center to the boundary.
    pub fn radius(&self) -> f64 {
        self.semi_major
    }

    /// Distance from `p` to the nearest footprint point (zero inside), in the
    /// ground plane. Approximated by the distance to the center minus the
    /// semi-minor axis, clamped to zero; exact for circles.
    pub fn distance_lower_bound(&self, p: GroundPoint) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let d = (p.x - self.center.x).hypot(p.y - self.center.y);
        (d - self.semi_major).max(0.0)
    }
}

/// Ground footprint of `beam` transmitted from `bs`.
///
/// The cone axis meets the ground at `p + h·tan(φ)(cos ψ, sin ψ)`, taken as
/// the ellipse center; the eccentricity is `sin φ / cos(θ/2)` and the
/// semi-major axis `(h/2)(tan(φ+θ/2) − tan(φ−θ/2))`.
pub fn beam_footprint(bs: &BaseStation, beam: &BeamSpec) -> Result<EllipseFootprint> {
    beam.validate()?;
    let h = bs.height();
    if !(h > 0.0) {
        return Err(Error::param("height", "station height must be positive"));
    }
    let half = beam.open_angle / 2.0;
    let reach = h * beam.tilt.tan();
    let (s, c) = beam.azimuth.sin_cos();
    let center = GroundPoint::ground(bs.position.x + reach * c, bs.position.y + reach * s);
    let eccentricity = beam.tilt.sin() / half.cos();
    let semi_major = h / 2.0 * ((beam.tilt + half).tan() - (beam.tilt - half).tan());
    let semi_minor = semi_major * (1.0 - eccentricity * eccentricity).sqrt();
    Ok(EllipseFootprint {
        center,
        eccentricity,
        semi_major,
        semi_minor,
        major_axis_azimuth: beam.azimuth,
    })
}

pub fn point_in_footprint(p: GroundPoint, f: &EllipseFootprint) -> bool {
    f.contains(p)
}

/// Rotation between the ground frame and a patch frame whose first (range)
/// axis is `direction` and whose second (cross) axis is `direction` rotated
/// +90° counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedFrame {
    pub range_axis: Direction,
    pub cross_axis: Direction,
}

impl RotatedFrame {
    pub fn to_frame(&self, p: [f64; 2]) -> [f64; 2] {
        [self.range_axis.dot(p), self.cross_axis.dot(p)]
    }

    pub fn to_ground(&self, q: [f64; 2]) -> [f64; 2] {
        let r = self.range_axis;
        let c = self.cross_axis;
        [
            q[0] * r.x() + q[1] * c.x(),
            q[0] * r.y() + q[1] * c.y(),
        ]
    }
}

pub fn rotated_frame(direction: Direction) -> RotatedFrame {
    RotatedFrame {
        range_axis: direction,
        cross_axis: direction.perp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn station(h: f64) -> BaseStation {
        BaseStation::new(0, GroundPoint::new(0.0, 0.0, h), 1, 0.03, 0.0).unwrap()
    }

    #[test]
    fn monostatic_direction_points_at_station() {
        let d = bistatic_direction(GroundPoint::ground(100.0, 0.0), GroundPoint::ground(100.0, 0.0))
            .unwrap();
        assert_abs_diff_eq!(d.x(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.y(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn orthogonal_pair_bisects() {
        let d = bistatic_direction(GroundPoint::ground(100.0, 0.0), GroundPoint::ground(0.0, 100.0))
            .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(d.x(), h, epsilon = 1e-15);
        assert_abs_diff_eq!(d.y(), h, epsilon = 1e-15);
    }

    #[test]
    fn antipodal_pair_is_degenerate() {
        let r = bistatic_direction(GroundPoint::ground(100.0, 0.0), GroundPoint::ground(-100.0, 0.0));
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn range_at_origin_is_exact() {
        let tx = GroundPoint::new(120.0, -30.0, 25.0);
        let rx = GroundPoint::new(-40.0, 90.0, 25.0);
        let r = bistatic_range(tx, rx, GroundPoint::ORIGIN);
        assert_eq!(r.exact, tx.norm() + rx.norm());
        assert_eq!(r.exact, r.approx);
    }

    #[test]
    fn far_field_error_small_when_far() {
        let r = bistatic_range(
            GroundPoint::ground(1000.0, 0.0),
            GroundPoint::ground(0.0, 1000.0),
            GroundPoint::ground(1.0, 1.0),
        );
        // exact = 2·sqrt(999² + 1) = 1998.001001..., approx = 1998
        assert!((r.exact - r.approx).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn far_field_error_large_when_near() {
        let r = bistatic_range(
            GroundPoint::ground(10.0, 0.0),
            GroundPoint::ground(0.0, 10.0),
            GroundPoint::ground(5.0, 5.0),
        );
        // exact = 2·sqrt(50) = 14.142, approx = 20 − 10 = 10
        assert!((r.exact - r.approx).abs() > 0.1, "{r:?}");
    }

    #[test]
    fn vertical_cone_is_circle() {
        let beam = BeamSpec {
            open_angle: 10f64.to_radians(),
            tilt: 0.0,
            azimuth: 0.3,
        };
        let f = beam_footprint(&station(10.0), &beam).unwrap();
        assert_eq!(f.eccentricity, 0.0);
        assert_abs_diff_eq!(f.semi_major, 0.874_886_635_259_240, epsilon = 1e-12);
        assert_eq!(f.semi_major, f.semi_minor);
        assert_abs_diff_eq!(f.center.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.center.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_station_eccentricity() {
        let beam = BeamSpec {
            open_angle: 5f64.to_radians(),
            tilt: 45f64.to_radians(),
            azimuth: 1.0,
        };
        let f = beam_footprint(&station(25.0), &beam).unwrap();
        let expected = 45f64.to_radians().sin() / 2.5f64.to_radians().cos();
        assert_abs_diff_eq!(f.eccentricity, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eccentricity, 0.7078, epsilon = 1e-4);
        assert_abs_diff_eq!(
            f.semi_minor,
            f.semi_major * (1.0 - expected * expected).sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(f.major_axis_azimuth, 1.0);
    }

    #[test]
    fn grazing_beam_rejected() {
        let beam = BeamSpec {
            open_angle: 5f64.to_radians(),
            tilt: 88f64.to_radians(),
            azimuth: 0.0,
        };
        assert!(matches!(
            beam_footprint(&station(25.0), &beam),
            Err(Error::InvalidBeam(_))
        ));
    }

    #[test]
    fn footprint_membership() {
        let f = EllipseFootprint {
            center: GroundPoint::ground(10.0, -5.0),
            eccentricity: 0.8,
            semi_major: 5.0,
            semi_minor: 3.0,
            major_axis_azimuth: 0.4,
        };
        assert!(f.contains(f.center));
        let (s, c) = 0.4f64.sin_cos();
        let along = |u: f64, v: f64| {
            GroundPoint::ground(10.0 + u * c - v * s, -5.0 + u * s + v * c)
        };
        assert!(!f.contains(along(5.0 * 1.01, 0.0)));
        // (1/√2)² + (1/√2)² = 1: on the boundary
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(f.contains(along(5.0 * h, 3.0 * h)));
        assert!(!f.contains(along(5.0 * h * 1.001, 3.0 * h * 1.001)));
    }

    #[test]
    fn footprint_area_grows_with_tilt() {
        let bs = station(25.0);
        let mut last = 0.0;
        for deg in 0..=85 {
            let beam = BeamSpec {
                open_angle: 5f64.to_radians(),
                tilt: (deg as f64).to_radians(),
                azimuth: 0.0,
            };
            let area = beam_footprint(&bs, &beam).unwrap().area();
            assert!(area > last, "tilt {deg}: {area} <= {last}");
            last = area;
        }
    }

    #[test]
    fn identity_and_quarter_frames() {
        let f = rotated_frame(Direction::X);
        assert_eq!(f.to_frame([3.0, -2.0]), [3.0, -2.0]);
        let f = rotated_frame(Direction::Y);
        let q = f.to_frame([1.0, 0.0]);
        assert_abs_diff_eq!(q[0], 0.0);
        assert_abs_diff_eq!(q[1], -1.0);
        assert_eq!(f.to_ground(q), [1.0, 0.0]);
    }

    #[test]
    fn antenna_positions_centered() {
        let bs = BaseStation::new(1, GroundPoint::new(5.0, 5.0, 30.0), 4, 0.5, FRAC_PI_2).unwrap();
        let pos = bs.antenna_positions(0);
        assert_abs_diff_eq!(pos[0].y, 4.25, epsilon = 1e-12);
        assert_abs_diff_eq!(pos[3].y, 5.75, epsilon = 1e-12);
        let mean_y: f64 = pos.iter().map(|p| p.y).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(mean_y, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn station_validation() {
        assert!(BaseStation::new(0, GroundPoint::ground(0.0, 0.0), 1, 0.1, 0.0).is_err());
        assert!(BaseStation::new(0, GroundPoint::new(0.0, 0.0, 5.0), 0, 0.1, 0.0).is_err());
        assert!(BaseStation::new(0, GroundPoint::new(0.0, 0.0, 5.0), 1, 0.0, 0.0).is_err());
        let bs = BaseStation::new(0, GroundPoint::new(0.0, 0.0, 5.0), 1, 0.1, 0.0).unwrap();
        assert!(bs
            .with_layers(vec![AntennaLayer {
                height_offset: 0.0,
                tilt: FRAC_PI_2
            }])
            .is_err());
    }

    fn point() -> impl Strategy<Value = GroundPoint> {
        (-5.0..5.0f64, -5.0..5.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| GroundPoint::new(x, y, z))
    }

    proptest! {
        #[test]
        fn second_order_bound(p in point(), theta_t in 0.0..6.283f64, theta_r in 0.0..6.283f64,
                              dt in 1.0..50.0f64, dr in 1.0..50.0f64) {
            let scale = 100.0 * p.norm().max(1e-3);
            let tx = GroundPoint::new(theta_t.cos(), theta_t.sin(), 0.2) * (dt * scale);
            let rx = GroundPoint::new(theta_r.cos(), theta_r.sin(), 0.3) * (dr * scale);
            let r = bistatic_range(tx, rx, p);
            let bound = p.norm().powi(2) * (1.0 / tx.norm() + 1.0 / rx.norm());
            prop_assert!((r.exact - r.approx).abs() <= bound, "{} > {}", (r.exact - r.approx).abs(), bound);
        }

        #[test]
        fn vertical_beam_circular(open in 0.01..3.0f64, h in 1.0..100.0f64) {
            let beam = BeamSpec { open_angle: open, tilt: 0.0, azimuth: 0.0 };
            let f = beam_footprint(&station(h), &beam).unwrap();
            prop_assert_eq!(f.eccentricity, 0.0);
            prop_assert!((f.semi_major - f.semi_minor).abs() <= 1e-12 * f.semi_major);
        }

        #[test]
        fn frame_round_trip(angle in -10.0..10.0f64, x in -1e3..1e3f64, y in -1e3..1e3f64,
                            x2 in -1e3..1e3f64, y2 in -1e3..1e3f64) {
            let f = rotated_frame(Direction::from_angle(angle));
            let q = f.to_ground(f.to_frame([x, y]));
            prop_assert!((q[0] - x).abs() <= 1e-12 * (1.0 + x.abs()));
            prop_assert!((q[1] - y).abs() <= 1e-12 * (1.0 + y.abs()));
            let a = f.to_frame([x, y]);
            let b = f.to_frame([x2, y2]);
            let d0 = (x - x2).hypot(y - y2);
            let d1 = (a[0] - b[0]).hypot(a[1] - b[1]);
            prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0));
        }
    }
}
