//! Fixtures shared by unit tests.

use crate::forward::{synthesize_points, MeasurementPatch, WaveformSpec};
use crate::geometry::{BaseStation, EllipseFootprint, GroundPoint};
use crate::patches::{align, AlignedPatch};
use crate::Complex64;

/// 5 GHz carrier, 256 subcarriers at 2 MHz.
pub(crate) fn default_waveform() -> WaveformSpec {
    WaveformSpec::new(5.0e9, 256, 2.0e6).unwrap()
}

/// Station whose array axis is perpendicular to the line to the origin.
pub(crate) fn broadside_station(id: usize, position: GroundPoint, antennas: usize) -> BaseStation {
    let orientation = position.y.atan2(position.x) + std::f64::consts::FRAC_PI_2;
    BaseStation::new(id, position, antennas, 0.03, orientation).unwrap()
}

pub(crate) fn circle(center: GroundPoint, radius: f64) -> EllipseFootprint {
    EllipseFootprint {
        center,
        eccentricity: 0.0,
        semi_major: radius,
        semi_minor: radius,
        major_axis_azimuth: 0.0,
    }
}

/// Noise-free patch of point scatterers about `center`, fully aligned.
pub(crate) fn aligned_point_patch(
    tx: &BaseStation,
    rx: &BaseStation,
    center: GroundPoint,
    points: &[(GroundPoint, Complex64)],
) -> AlignedPatch {
    let mut patch =
        MeasurementPatch::empty(tx.id, tx.position, rx, 0, circle(center, 30.0), default_waveform()).unwrap();
    synthesize_points(&mut patch, points);
    align(&patch).unwrap()
}
