//! Synthesis of the per-antenna, per-subcarrier channel transfer function a
//! receiving station measures while another station illuminates the ground.
//!
//! The model uses exact geometry: for each illuminated pixel `p`,
//! `H[l, m] += g(p) / (d_tx · d_rx,l) · exp(-j k_m (d_tx + d_rx,l))` with
//! `k_m = 2π (f_c + m δf) / c` and `m` counted from zero.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::geometry::{
    bistatic_look, BaseStation, BeamSpec, BistaticLook, Direction, EllipseFootprint, GroundPoint,
};
use crate::scene::Scene;
use crate::{Complex64, Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSpec {
    /// Frequency of subcarrier 0, Hz.
    pub carrier_frequency: f64,
    pub subcarrier_count: usize,
    pub subcarrier_spacing: f64,
}

impl WaveformSpec {
    pub fn new(carrier_frequency: f64, subcarrier_count: usize, subcarrier_spacing: f64) -> Result<Self> {
        let wf = Self {
            carrier_frequency,
            subcarrier_count,
            subcarrier_spacing,
        };
        wf.validate()?;
        Ok(wf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::param("carrier_frequency", "must be positive"));
        }
        if self.subcarrier_count == 0 {
            return Err(Error::param("subcarrier_count", "must be positive"));
        }
        if !(self.subcarrier_spacing > 0.0 && self.subcarrier_spacing.is_finite()) {
            return Err(Error::param("subcarrier_spacing", "must be positive"));
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> f64 {
        self.subcarrier_count as f64 * self.subcarrier_spacing
    }

    pub fn frequency(&self, m: usize) -> f64 {
        self.carrier_frequency + m as f64 * self.subcarrier_spacing
    }

    /// Angular wavenumber `2π f_m / c`, radians per meter.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency(m) / SPEED_OF_LIGHT
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.subcarrier_count).map(|m| self.wavenumber(m)).collect()
    }

    /// Wavenumber spacing between adjacent subcarriers, `2π δf / c`.
    pub fn wavenumber_step(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.subcarrier_spacing / SPEED_OF_LIGHT
    }

    pub fn center_wavelength(&self) -> f64 {
        let mid = self.carrier_frequency + self.bandwidth() / 2.0;
        SPEED_OF_LIGHT / mid
    }
}

/// The receive array as it was when a patch was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct ArraySnapshot {
    pub antenna_positions: Vec<GroundPoint>,
    pub antenna_spacing: f64,
    pub orientation: f64,
    pub layer: usize,
    pub tilt: f64,
}

impl ArraySnapshot {
    pub fn of(bs: &BaseStation, layer: usize) -> Self {
        Self {
            antenna_positions: bs.antenna_positions(layer),
            antenna_spacing: bs.antenna_spacing,
            orientation: bs.array_orientation,
            layer,
            tilt: bs.layers[layer].tilt,
        }
    }

    pub fn len(&self) -> usize {
        self.antenna_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antenna_positions.is_empty()
    }

    pub fn center(&self) -> GroundPoint {
        let n = self.len() as f64;
        self.antenna_positions
            .iter()
            .fold(GroundPoint::ORIGIN, |a, p| a + *p)
            * (1.0 / n)
    }

    /// Signed offset of antenna `l` from the array center along the axis.
    pub fn offset(&self, l: usize) -> f64 {
        (l as f64 - (self.len() as f64 - 1.0) / 2.0) * self.antenna_spacing
    }
}

/// One (transmitter, receiver, layer) measurement block.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPatch {
    pub tx_id: usize,
    pub rx_id: usize,
    pub tx_position: GroundPoint,
    /// Center of the receive array.
    pub rx_position: GroundPoint,
    pub rx_array: ArraySnapshot,
    pub region_center: GroundPoint,
    pub look: BistaticLook,
    pub tx_distance: f64,
    pub rx_distance: f64,
    /// `tx_distance + rx_distance`, both measured to the region center.
    pub composite_distance: f64,
    pub waveform: WaveformSpec,
    /// Indexed `[antenna, subcarrier]`.
    pub samples: Array2<Complex64>,
    pub footprint: EllipseFootprint,
    pub distance_aligned: bool,
    pub orientation_aligned: bool,
}

impl MeasurementPatch {
    /// A patch with the geometry filled in and zero samples.
    pub fn empty(
        tx_id: usize,
        tx_position: GroundPoint,
        rx: &BaseStation,
        layer: usize,
        footprint: EllipseFootprint,
        waveform: WaveformSpec,
    ) -> Result<Self> {
        if layer >= rx.layers.len() {
            return Err(Error::param("layer", format!("station {} has no layer {layer}", rx.id)));
        }
        Self::from_array(tx_id, tx_position, rx.id, ArraySnapshot::of(rx, layer), footprint, waveform)
    }

    /// A zero patch for an explicitly given receive array.
    pub fn from_array(
        tx_id: usize,
        tx_position: GroundPoint,
        rx_id: usize,
        rx_array: ArraySnapshot,
        footprint: EllipseFootprint,
        waveform: WaveformSpec,
    ) -> Result<Self> {
        waveform.validate()?;
        if rx_array.is_empty() {
            return Err(Error::param("rx_array", "no antennas"));
        }
        let rx_position = rx_array.center();
        let region_center = footprint.center;
        let look = bistatic_look(
            tx_position.relative_to(&region_center),
            rx_position.relative_to(&region_center),
        )?;
        let tx_distance = tx_position.distance(&region_center);
        let rx_distance = rx_position.distance(&region_center);
        Ok(Self {
            tx_id,
            rx_id,
            tx_position,
            rx_position,
            samples: Array2::zeros((rx_array.len(), waveform.subcarrier_count)),
            rx_array,
            region_center,
            look,
            tx_distance,
            rx_distance,
            composite_distance: tx_distance + rx_distance,
            waveform,
            footprint,
            distance_aligned: false,
            orientation_aligned: false,
        })
    }

    pub fn direction(&self) -> Direction {
        self.look.direction
    }

    pub fn antenna_count(&self) -> usize {
        self.samples.nrows()
    }

    pub fn subcarrier_count(&self) -> usize {
        self.samples.ncols()
    }

    /// Sum of the unit vectors from the region center toward the transmitter
    /// and toward antenna `l`.
    pub fn look_sum(&self, l: usize) -> GroundPoint {
        let c = self.region_center;
        let ut = self.tx_position.relative_to(&c).unit().unwrap_or_default();
        let ur = self.rx_array.antenna_positions[l]
            .relative_to(&c)
            .unit()
            .unwrap_or_default();
        ut + ur
    }

    /// Coordinates `(X_l, Y_m)` of sample `(l, m)` on this layer's data
    /// collection surface: `Y` is the wavenumber along the look sum and `X`
    /// its cross component in the ground plane, both radians per meter.
    pub fn surface_coordinates(&self, l: usize, m: usize) -> (f64, f64) {
        let s = self.look_sum(l);
        let k = self.waveform.wavenumber(m);
        let cross = self.direction().perp();
        (k * cross.dot(s.xy()), k * s.norm())
    }

    /// Adds all samples of `other`, which must share this patch's geometry.
    pub fn accumulate(&mut self, other: &MeasurementPatch) -> Result<()> {
        if self.samples.dim() != other.samples.dim() {
            return Err(Error::DimensionMismatch("patch sample grids differ".into()));
        }
        self.samples += &other.samples;
        Ok(())
    }
}

/// Channel response of a set of point scatterers `(position, reflectivity)`
/// seen through `patch`'s geometry, written into `patch.samples`.
///
/// Scatterers are summed in the given order for every sample, so the result
/// does not depend on how antennas are distributed across threads.
pub fn synthesize_points(patch: &mut MeasurementPatch, points: &[(GroundPoint, Complex64)]) {
    let ks = patch.waveform.wavenumbers();
    let tx = patch.tx_position;
    let antennas = &patch.rx_array.antenna_positions;
    let rows: Vec<Vec<Complex64>> = antennas
        .par_iter()
        .map(|rx| {
            let paths: Vec<(f64, f64)> = points
                .iter()
                .map(|(p, _)| {
                    let dt = p.distance(&tx);
                    let dr = p.distance(rx);
                    (dt + dr, 1.0 / (dt * dr))
                })
                .collect();
            ks.iter()
                .map(|k| {
                    let mut acc = Complex64::default();
                    for ((path, amp), (_, g)) in paths.iter().zip(points) {
                        let (s, c) = (k * path).sin_cos();
                        acc += g * Complex64::new(amp * c, -amp * s);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    for (l, row) in rows.into_iter().enumerate() {
        for (m, v) in row.into_iter().enumerate() {
            patch.samples[(l, m)] = v;
        }
    }
}

/// Nonzero scene pixels inside `footprint`, as positions (with surface height
/// as `z`) and reflectivities. Fails when the footprint misses every pixel.
pub fn illuminated_pixels(
    scene: &Scene,
    footprint: &EllipseFootprint,
) -> Result<Vec<(GroundPoint, Complex64)>> {
    let [x0, x1, y0, y1] = footprint.bounding_box();
    let (nx, ny) = scene.dim();
    let res = scene.resolution;
    let lower = |v: f64, half: f64, n: usize| (((v + half) / res).floor().max(0.0) as usize).min(n);
    let upper = |v: f64, half: f64, n: usize| (((v + half) / res).ceil().max(0.0) as usize + 1).min(n);
    let (hx, hy) = (scene.extent.0 / 2.0, scene.extent.1 / 2.0);
    let (i0, i1) = (lower(x0, hx, nx), upper(x1, hx, nx));
    let (j0, j1) = (lower(y0, hy, ny), upper(y1, hy, ny));
    let mut any = false;
    let mut out = Vec::new();
    for i in i0..i1 {
        for j in j0..j1 {
            let c = scene.pixel_center(i, j);
            if !footprint.contains(c) {
                continue;
            }
            any = true;
            let g = scene.reflectivity[(i, j)];
            if g.re != 0.0 || g.im != 0.0 {
                out.push((GroundPoint::new(c.x, c.y, scene.height_at(i, j)), g));
            }
        }
    }
    if any { Ok(out) } else { Err(Error::EmptyFootprint) }
}

/// Adds circular complex Gaussian noise of total power `noise_power` per
/// sample.
pub fn add_noise(samples: &mut Array2<Complex64>, noise_power: f64, seed: u64) -> Result<()> {
    if !(noise_power >= 0.0) {
        return Err(Error::param("noise_power", "must be nonnegative"));
    }
    if noise_power == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, (noise_power / 2.0).sqrt())
        .map_err(|e| Error::param("noise_power", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in samples.iter_mut() {
        *v += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(())
}

/// Measurement recorded by layer 0 of `rx` while `tx` illuminates `beam`'s
/// footprint.
pub fn synthesize_measurement(
    scene: &Scene,
    tx: &BaseStation,
    beam: &BeamSpec,
    rx: &BaseStation,
    wf: &WaveformSpec,
    noise_power: f64,
    seed: u64,
) -> Result<MeasurementPatch> {
    synthesize_layer(scene, tx, beam, rx, 0, wf, noise_power, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn synthesize_layer(
    scene: &Scene,
    tx: &BaseStation,
    beam: &BeamSpec,
    rx: &BaseStation,
    layer: usize,
    wf: &WaveformSpec,
    noise_power: f64,
    seed: u64,
) -> Result<MeasurementPatch> {
    let footprint = crate::geometry::beam_footprint(tx, beam)?;
    let points = illuminated_pixels(scene, &footprint)?;
    let mut patch = MeasurementPatch::empty(tx.id, tx.position, rx, layer, footprint, *wf)?;
    synthesize_points(&mut patch, &points);
    add_noise(&mut patch.samples, noise_power, seed)?;
    Ok(patch)
}

/// Element-wise `Y_m / X_m`.
pub fn transfer_function_estimate(
    tx_symbols: &[Complex64],
    rx_symbols: &[Complex64],
) -> Result<Vec<Complex64>> {
    if tx_symbols.len() != rx_symbols.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} transmitted symbols, {} received",
            tx_symbols.len(),
            rx_symbols.len()
        )));
    }
    tx_symbols
        .iter()
        .zip(rx_symbols)
        .enumerate()
        .map(|(m, (x, y))| {
            if x.re == 0.0 && x.im == 0.0 {
                Err(Error::DivisionByZero { index: m })
            } else {
                Ok(y / x)
            }
        })
        .collect()
}

/// A sample placed on the ground data collection surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub layer: usize,
    pub antenna: usize,
    pub subcarrier: usize,
    /// Cross coordinate `X_l`, radians per meter.
    pub cross: f64,
    /// Range coordinate `Y_m cos θ_p`, radians per meter.
    pub range: f64,
    pub value: Complex64,
}

/// Samples of several layers of one receiver merged onto the ground surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSurface {
    pub tx_id: usize,
    pub rx_id: usize,
    pub waveform: WaveformSpec,
    pub samples: Vec<SurfaceSample>,
}

/// Maps each layer's `(X_l, Y_m)` to `(X_l, Y_m cos θ_p)` and merges.
pub fn project_layers(patches: &[MeasurementPatch], tilts: &[f64]) -> Result<ProjectedSurface> {
    let first = patches
        .first()
        .ok_or(Error::EmptyInput("project_layers needs at least one layer"))?;
    if patches.len() != tilts.len() {
        return Err(Error::MismatchedLayers(format!(
            "{} patches but {} tilt angles",
            patches.len(),
            tilts.len()
        )));
    }
    let mut samples = Vec::new();
    for (p, (patch, tilt)) in patches.iter().zip(tilts).enumerate() {
        if patch.tx_id != first.tx_id || patch.rx_id != first.rx_id {
            return Err(Error::MismatchedLayers(format!(
                "layer {p} pairs stations {}→{}, layer 0 pairs {}→{}",
                patch.tx_id, patch.rx_id, first.tx_id, first.rx_id
            )));
        }
        if patch.waveform != first.waveform {
            return Err(Error::MismatchedLayers(format!("layer {p} uses a different waveform")));
        }
        let scale = tilt.cos();
        for ((l, m), v) in patch.samples.indexed_iter() {
            let (x, y) = patch.surface_coordinates(l, m);
            samples.push(SurfaceSample {
                layer: p,
                antenna: l,
                subcarrier: m,
                cross: x,
                range: y * scale,
                value: *v,
            });
        }
    }
    Ok(ProjectedSurface {
        tx_id: first.tx_id,
        rx_id: first.rx_id,
        waveform: first.waveform,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AntennaLayer;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn wf() -> WaveformSpec {
        WaveformSpec::new(5.0e9, 32, 2.0e6).unwrap()
    }

    fn station(id: usize, x: f64, y: f64, n: usize) -> BaseStation {
        BaseStation::new(id, GroundPoint::new(x, y, 25.0), n, 0.03, 0.4).unwrap()
    }

    fn circle(center: GroundPoint, r: f64) -> EllipseFootprint {
        EllipseFootprint {
            center,
            eccentricity: 0.0,
            semi_major: r,
            semi_minor: r,
            major_axis_azimuth: 0.0,
        }
    }

    fn scene_with(points: &[(f64, f64, Complex64)]) -> Scene {
        let mut s = Scene::zeros((40.0, 40.0), 0.5).unwrap();
        for (x, y, g) in points {
            s.set_point(*x, *y, *g).unwrap();
        }
        s
    }

    fn patch_for(scene: &Scene, tx: &BaseStation, rx: &BaseStation) -> MeasurementPatch {
        let fp = circle(GroundPoint::ORIGIN, 15.0);
        let pts = illuminated_pixels(scene, &fp).unwrap();
        let mut p = MeasurementPatch::empty(tx.id, tx.position, rx, 0, fp, wf()).unwrap();
        synthesize_points(&mut p, &pts);
        p
    }

    #[test]
    fn dark_scene_gives_zero_samples() {
        let s = Scene::zeros((40.0, 40.0), 1.0).unwrap();
        let tx = station(0, 80.0, 0.0, 1);
        let p = patch_for(&s, &tx, &station(1, 0.0, 90.0, 4));
        assert!(p.samples.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn monostatic_point_phase_slope() {
        let s = scene_with(&[(0.25, 0.25, Complex64::new(1.0, 0.0))]);
        let tx = station(0, 80.0, 20.0, 1);
        let p = patch_for(&s, &tx, &tx);
        let c = GroundPoint::ground(0.25, 0.25);
        let d = c.distance(&tx.position);
        for m in 0..p.subcarrier_count() {
            assert_relative_eq!(p.samples[(0, m)].norm(), 1.0 / (d * d), max_relative = 1e-12);
        }
        let slope = -2.0 * std::f64::consts::PI * 2.0e6 * 2.0 * d / SPEED_OF_LIGHT;
        for m in 1..p.subcarrier_count() {
            let dphi = (p.samples[(0, m)] / p.samples[(0, m - 1)]).arg();
            let expected = (slope + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU)
                - std::f64::consts::PI;
            assert!((dphi - expected).abs() < 1e-9, "{dphi} vs {expected}");
        }
    }

    #[test]
    fn symmetric_pair_doubles() {
        // Monostatic station on the x axis: points mirrored in y have equal paths.
        let tx = BaseStation::new(0, GroundPoint::new(100.0, 0.0, 25.0), 1, 0.03, 0.0).unwrap();
        let g = Complex64::new(0.3, -0.7);
        let one = patch_for(&scene_with(&[(2.25, 3.25, g)]), &tx, &tx);
        let two = patch_for(&scene_with(&[(2.25, 3.25, g), (2.25, -3.25, g)]), &tx, &tx);
        for (a, b) in one.samples.iter().zip(two.samples.iter()) {
            assert_relative_eq!(b.re, 2.0 * a.re, max_relative = 1e-12, epsilon = 1e-18);
            assert_relative_eq!(b.im, 2.0 * a.im, max_relative = 1e-12, epsilon = 1e-18);
        }
    }

    #[test]
    fn reciprocity() {
        let s = scene_with(&[(1.25, -3.75, Complex64::new(1.0, 0.5)), (-4.0, 2.0, Complex64::i())]);
        let a = station(0, 80.0, 10.0, 1);
        let b = station(1, -20.0, 90.0, 1);
        let ab = patch_for(&s, &a, &b);
        let ba = patch_for(&s, &b, &a);
        for (u, v) in ab.samples.iter().zip(ba.samples.iter()) {
            assert!((u - v).norm() <= 1e-12 * u.norm());
        }
    }

    #[test]
    fn empty_footprint_rejected() {
        let s = Scene::zeros((40.0, 40.0), 1.0).unwrap();
        let fp = circle(GroundPoint::ground(500.0, 0.0), 5.0);
        assert!(matches!(illuminated_pixels(&s, &fp), Err(Error::EmptyFootprint)));
    }

    #[test]
    fn footprint_restricts_illumination() {
        let s = scene_with(&[(0.25, 0.25, Complex64::new(1.0, 0.0)), (12.0, 12.0, Complex64::new(1.0, 0.0))]);
        let pts = illuminated_pixels(&s, &circle(GroundPoint::ORIGIN, 5.0)).unwrap();
        assert_eq!(pts.len(), 1);
    }

    #[test]
    fn noise_is_deterministic_and_scaled() {
        let mut a = Array2::<Complex64>::zeros((40, 250));
        let mut b = a.clone();
        add_noise(&mut a, 2.0, 9).unwrap();
        add_noise(&mut b, 2.0, 9).unwrap();
        assert_eq!(a, b);
        let power = a.iter().map(|v| v.norm_sqr()).sum::<f64>() / a.len() as f64;
        assert!((power - 2.0).abs() < 0.1, "{power}");
        assert!(add_noise(&mut b, -1.0, 0).is_err());
    }

    #[test]
    fn transfer_function_ratio() {
        let x = vec![Complex64::new(2.0, 0.0); 3];
        let h = [Complex64::new(0.5, 1.0), Complex64::new(-1.0, 0.0), Complex64::i()];
        let y: Vec<_> = h.iter().map(|v| v * 2.0).collect();
        assert_eq!(transfer_function_estimate(&x, &y).unwrap(), h.to_vec());
        assert!(transfer_function_estimate(&x, &x).unwrap().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let mut z = x.clone();
        z[1] = Complex64::default();
        assert!(matches!(
            transfer_function_estimate(&z, &y),
            Err(Error::DivisionByZero { index: 1 })
        ));
    }

    fn layered_patches(tilts: &[f64]) -> Vec<MeasurementPatch> {
        let layers: Vec<_> = tilts
            .iter()
            .enumerate()
            .map(|(i, t)| AntennaLayer { height_offset: i as f64 * 0.5, tilt: *t })
            .collect();
        let rx = station(1, 0.0, 90.0, 4).with_layers(layers).unwrap();
        let tx = station(0, 80.0, 0.0, 1);
        (0..tilts.len())
            .map(|p| {
                MeasurementPatch::empty(tx.id, tx.position, &rx, p, circle(GroundPoint::ORIGIN, 5.0), wf())
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn layer_projection() {
        let flat = layered_patches(&[0.0]);
        let surf = project_layers(&flat, &[0.0]).unwrap();
        for s in &surf.samples {
            let (x, y) = flat[0].surface_coordinates(s.antenna, s.subcarrier);
            assert_eq!((s.cross, s.range), (x, y));
        }
        let tilted = project_layers(&flat, &[60f64.to_radians()]).unwrap();
        for (a, b) in surf.samples.iter().zip(&tilted.samples) {
            assert_relative_eq!(b.range, a.range / 2.0, max_relative = 1e-12);
            assert_eq!(a.cross, b.cross);
        }
        let two = layered_patches(&[0.0, 60f64.to_radians()]);
        let merged = project_layers(&two, &[0.0, 60f64.to_radians()]).unwrap();
        assert_eq!(merged.samples.len(), two[0].samples.len() + two[1].samples.len());
        assert!(matches!(project_layers(&two, &[0.0]), Err(Error::MismatchedLayers(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn linear_and_scalable(ax in -10.0..10.0f64, ay in -10.0..10.0f64,
                               bx in -10.0..10.0f64, by in -10.0..10.0f64,
                               cre in -2.0..2.0f64, cim in -2.0..2.0f64) {
            let tx = station(0, 70.0, -30.0, 1);
            let rx = station(1, -10.0, 95.0, 3);
            let sa = scene_with(&[(ax, ay, Complex64::new(1.0, 0.2))]);
            let sb = scene_with(&[(bx, by, Complex64::new(-0.4, 0.9))]);
            let pa = patch_for(&sa, &tx, &rx);
            let pb = patch_for(&sb, &tx, &rx);
            let pab = patch_for(&sa.sum(&sb).unwrap(), &tx, &rx);
            let norm = pab.samples.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
            for ((a, b), ab) in pa.samples.iter().zip(pb.samples.iter()).zip(pab.samples.iter()) {
                prop_assert!((a + b - ab).norm() <= 1e-9 * norm);
            }
            let c = Complex64::new(cre, cim);
            let pc = patch_for(&sa.scaled(c), &tx, &rx);
            for (a, ac) in pa.samples.iter().zip(pc.samples.iter()) {
                prop_assert!((a * c - ac).norm() <= 1e-12 * (a * c).norm().max(1e-300));
            }
        }
    }
}
