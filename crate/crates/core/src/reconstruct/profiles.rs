//! Range-only localization: per-patch range profiles, the equal-range loci
//! they imply, and clustering of pairwise locus intersections.
//!
//! Profile offsets are half-path offsets: a peak at `q` says the reflection
//! traveled `2q` meters more than the path through the region center. In the
//! far field the locus of such points is the line `(p − C)·r̂₀ = −2q/|Σû|_xy`;
//! the exact locus is the ellipse `|p − tx| + |p − rx| = d_n + 2q`.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;

use crate::fft::{fftshift, ifft};
use crate::geometry::{Direction, EllipseFootprint, GroundPoint};
use crate::patches::AlignedPatch;
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    /// Peaks must exceed the profile median by this many dB (amplitude).
    pub threshold_db: f64,
    /// Peaks must also reach this fraction of the profile maximum.
    pub min_relative: f64,
    pub taper: Taper,
    /// Keep at most this many peaks; 0 keeps all.
    pub max_peaks: usize,
    /// Refine peak offsets by a parabola through the peak and its neighbors.
    pub interpolate: bool,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            threshold_db: 6.0,
            min_relative: 0.0,
            taper: Taper::Rectangular,
            max_peaks: 0,
            interpolate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangePeak {
    /// Half-path offset, meters.
    pub offset: f64,
    pub magnitude: f64,
    /// Index into the profile arrays.
    pub bin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub tx_id: usize,
    pub rx_id: usize,
    /// Half-path offset of every bin, ascending, spaced `c/(2W)`.
    pub offsets: Vec<f64>,
    /// Incoherent mean over antennas of the inverse DFT magnitude.
    pub magnitude: Vec<f64>,
    /// Sorted by decreasing magnitude.
    pub peaks: Vec<RangePeak>,
    pub bin_width: f64,
}

/// Inverse DFT across subcarriers for every antenna, averaged in magnitude.
pub fn range_profiles(patch: &AlignedPatch, cfg: &ProfileConfig) -> RangeProfile {
    let wf = patch.patch.waveform;
    let (na, m) = patch.samples().dim();
    let taper: Vec<f64> = match cfg.taper {
        Taper::Rectangular => vec![1.0; m],
        Taper::Hann => (0..m)
            .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * (i as f64 + 0.5) / m as f64).cos())
            .collect(),
    };
    let mut acc = vec![0.0; m];
    for row in patch.samples().rows() {
        let windowed: Vec<_> = row.iter().zip(&taper).map(|(v, w)| v * *w).collect();
        for (a, v) in acc.iter_mut().zip(ifft(&windowed)) {
            *a += v.norm();
        }
    }
    acc.iter_mut().for_each(|a| *a /= na.max(1) as f64);
    let magnitude = fftshift(&acc);
    let bin_width = SPEED_OF_LIGHT / (2.0 * wf.bandwidth());
    let offsets: Vec<f64> = (0..m)
        .map(|b| (b as f64 - (m / 2) as f64) * bin_width)
        .collect();
    let peaks = detect_peaks(&magnitude, &offsets, bin_width, cfg);
    RangeProfile {
        tx_id: patch.tx_id(),
        rx_id: patch.rx_id(),
        offsets,
        magnitude,
        peaks,
        bin_width,
    }
}

fn detect_peaks(mag: &[f64], offsets: &[f64], bin: f64, cfg: &ProfileConfig) -> Vec<RangePeak> {
    let n = mag.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sorted = mag.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let max = sorted[n - 1];
    let threshold = (median * 10f64.powf(cfg.threshold_db / 20.0)).max(cfg.min_relative * max);
    let mut peaks: Vec<RangePeak> = (0..n)
        .filter(|&b| {
            let v = mag[b];
            let left = if b > 0 { mag[b - 1] } else { f64::NEG_INFINITY };
            let right = if b + 1 < n { mag[b + 1] } else { f64::NEG_INFINITY };
            v > threshold && v > left && v >= right
        })
        .map(|b| {
            let mut offset = offsets[b];
            if cfg.interpolate && b > 0 && b + 1 < n {
                let (a, c, e) = (mag[b - 1], mag[b], mag[b + 1]);
                let denom = a - 2.0 * c + e;
                if denom < 0.0 {
                    offset += (0.5 * (a - e) / denom).clamp(-0.5, 0.5) * bin;
                }
            }
            RangePeak {
                offset,
                magnitude: mag[b],
                bin: b,
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude).then(a.bin.cmp(&b.bin)));
    if cfg.max_peaks > 0 {
        peaks.truncate(cfg.max_peaks);
    }
    peaks
}

/// One patch's peaks together with the geometry that turns them into loci.
#[derive(Debug, Clone, PartialEq)]
pub struct StationProfile {
    pub tx_id: usize,
    pub rx_id: usize,
    pub tx_position: GroundPoint,
    pub rx_position: GroundPoint,
    pub region_center: GroundPoint,
    pub composite_distance: f64,
    pub direction: Direction,
    pub ground_norm: f64,
    pub footprint: EllipseFootprint,
    pub peaks: Vec<RangePeak>,
    /// Half-path span after which profile offsets wrap, `c/(2δf)`.
    pub alias_period: f64,
    /// `c/(2W)`.
    pub range_resolution: f64,
}

impl StationProfile {
    pub fn new(patch: &AlignedPatch, profile: &RangeProfile) -> Self {
        let p = &patch.patch;
        Self {
            tx_id: p.tx_id,
            rx_id: p.rx_id,
            tx_position: p.tx_position,
            rx_position: p.rx_position,
            region_center: p.region_center,
            composite_distance: p.composite_distance,
            direction: p.direction(),
            ground_norm: p.look.ground_norm,
            footprint: p.footprint,
            peaks: profile.peaks.clone(),
            alias_period: SPEED_OF_LIGHT / (2.0 * p.waveform.subcarrier_spacing),
            range_resolution: profile.bin_width,
        }
    }

    /// Signed distance of the far-field locus of offset `q` from the region
    /// center, along `direction`.
    pub fn line_offset(&self, q: f64) -> f64 {
        -2.0 * q / self.ground_norm
    }

    fn footprint_halfwidth(&self) -> f64 {
        let f = &self.footprint;
        let phi = self.direction.angle() - f.major_axis_azimuth;
        ((f.semi_major * phi.cos()).powi(2) + (f.semi_minor * phi.sin()).powi(2)).sqrt()
    }

    /// Offsets congruent to `q` modulo the alias period whose loci cross the
    /// footprint.
    fn candidate_offsets(&self, q: f64, unwrap: bool) -> Vec<f64> {
        if !unwrap {
            return vec![q];
        }
        let h = self.footprint_halfwidth();
        let shift = (self.footprint.center - self.region_center).xy();
        let c = self.direction.dot(shift);
        let period = self.alias_period;
        let limit = ((h + c.abs()) * self.ground_norm / (2.0 * period)).ceil() as i64 + 1;
        (-limit..=limit)
            .map(|n| q + n as f64 * period)
            .filter(|q| (self.line_offset(*q) - c).abs() <= h)
            .collect()
    }

    fn exact_residual(&self, p: [f64; 2], q: f64) -> (f64, [f64; 2]) {
        let pt = GroundPoint::ground(p[0], p[1]);
        let dt = pt - self.tx_position;
        let dr = pt - self.rx_position;
        let (nt, nr) = (dt.norm(), dr.norm());
        let f = nt + nr - (self.composite_distance + 2.0 * q);
        (f, [dt.x / nt + dr.x / nr, dt.y / nt + dr.y / nr])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LocusModel {
    /// Far-field straight lines.
    Line,
    /// Straight-line intersection refined onto the exact equal-path ellipses.
    #[default]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectConfig {
    /// Clustering radius; `None` uses twice the range resolution `c/(2W)`.
    pub cluster_radius: Option<f64>,
    /// Minimum number of distinct (tx, rx) station pairs behind a cluster.
    pub min_support: usize,
    /// Pairs with `|sin|` of the angle between look directions below this are skipped.
    pub parallel_threshold: f64,
    pub locus: LocusModel,
    /// Consider every alias of a peak offset whose locus crosses the footprint.
    pub unwrap_aliases: bool,
}

impl Default for IntersectConfig {
    fn default() -> Self {
        Self {
            cluster_radius: None,
            min_support: 2,
            parallel_threshold: 1e-3,
            locus: LocusModel::Exact,
            unwrap_aliases: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectorEstimate {
    pub position: GroundPoint,
    /// Sum of the peak magnitudes of the supporting lines.
    pub score: f64,
    pub supporting_lines: usize,
    /// Distinct (tx, rx) station pairs among the supporting lines.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntersectOutput {
    /// Sorted by decreasing score.
    pub estimates: Vec<ReflectorEstimate>,
    pub profile_pairs: usize,
    pub parallel_skipped: usize,
    pub outside_footprint: usize,
    pub unconverged: usize,
    pub intersections: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    point: [f64; 2],
    score: f64,
    lines: [(usize, usize); 2],
}

fn bbox_overlap(a: &EllipseFootprint, b: &EllipseFootprint) -> bool {
    let [ax0, ax1, ay0, ay1] = a.bounding_box();
    let [bx0, bx1, by0, by1] = b.bounding_box();
    ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1
}

fn intersect_pair(
    a: &StationProfile,
    b: &StationProfile,
    ia: usize,
    ib: usize,
    cfg: &IntersectConfig,
    counts: &mut [usize; 4],
) -> Vec<Candidate> {
    let (ra, rb) = (a.direction, b.direction);
    let det = ra.x() * rb.y() - ra.y() * rb.x();
    if det.abs() < cfg.parallel_threshold {
        counts[0] += 1;
        return Vec::new();
    }
    let mut out = Vec::new();
    for (pa, peak_a) in a.peaks.iter().enumerate() {
        for qa in a.candidate_offsets(peak_a.offset, cfg.unwrap_aliases) {
            let ca = a.line_offset(qa) + ra.dot(a.region_center.xy());
            for (pb, peak_b) in b.peaks.iter().enumerate() {
                for qb in b.candidate_offsets(peak_b.offset, cfg.unwrap_aliases) {
                    let cb = b.line_offset(qb) + rb.dot(b.region_center.xy());
                    let mut p = [
                        (ca * rb.y() - cb * ra.y()) / det,
                        (ra.x() * cb - rb.x() * ca) / det,
                    ];
                    if cfg.locus == LocusModel::Exact {
                        match refine(a, b, qa, qb, p) {
                            Some(r) => p = r,
                            None => {
                                counts[2] += 1;
                                continue;
                            }
                        }
                    }
                    let g = GroundPoint::ground(p[0], p[1]);
                    if !a.footprint.contains(g) || !b.footprint.contains(g) {
                        counts[1] += 1;
                        continue;
                    }
                    counts[3] += 1;
                    out.push(Candidate {
                        point: p,
                        score: peak_a.magnitude + peak_b.magnitude,
                        lines: [(ia, pa), (ib, pb)],
                    });
                }
            }
        }
    }
    out
}

/// Newton iteration for the intersection of two exact equal-path loci.
fn refine(a: &StationProfile, b: &StationProfile, qa: f64, qb: f64, start: [f64; 2]) -> Option<[f64; 2]> {
    let mut p = start;
    for _ in 0..30 {
        let (fa, ga) = a.exact_residual(p, qa);
        let (fb, gb) = b.exact_residual(p, qb);
        let det = ga[0] * gb[1] - ga[1] * gb[0];
        if det.abs() < 1e-12 {
            return None;
        }
        let dx = (fa * gb[1] - fb * ga[1]) / det;
        let dy = (ga[0] * fb - gb[0] * fa) / det;
        p = [p[0] - dx, p[1] - dy];
        if (p[0] - start[0]).hypot(p[1] - start[1]) > 100.0 {
            return None;
        }
        if dx.hypot(dy) < 1e-9 {
            return Some(p);
        }
    }
    None
}

/// Pairwise locus intersections of all peaks, clustered greedily from the
/// strongest candidate outward.
pub fn intersect_lines(profiles: &[StationProfile], cfg: &IntersectConfig) -> Result<IntersectOutput> {
    if profiles.len() < 2 {
        return Err(Error::EmptyInput("line intersection needs at least two profiles"));
    }
    let radius = match cfg.cluster_radius {
        Some(r) if r > 0.0 => r,
        Some(_) => return Err(Error::param("cluster_radius", "must be positive")),
        None => 2.0 * profiles.iter().map(|s| s.range_resolution).fold(0.0, f64::max),
    };
    let pairs: Vec<(usize, usize)> = (0..profiles.len())
        .flat_map(|i| (i + 1..profiles.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| bbox_overlap(&profiles[i].footprint, &profiles[j].footprint))
        .collect();
    let results: Vec<(Vec<Candidate>, [usize; 4])> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut counts = [0usize; 4];
            let c = intersect_pair(&profiles[i], &profiles[j], i, j, cfg, &mut counts);
            (c, counts)
        })
        .collect();
    let mut out = IntersectOutput {
        profile_pairs: pairs.len(),
        ..Default::default()
    };
    let mut candidates = Vec::new();
    for (c, counts) in results {
        out.parallel_skipped += counts[0];
        out.outside_footprint += counts[1];
        out.unconverged += counts[2];
        out.intersections += counts[3];
        candidates.extend(c);
    }
    out.estimates = cluster(&candidates, profiles, radius, cfg.min_support);
    Ok(out)
}

fn cluster(
    candidates: &[Candidate],
    profiles: &[StationProfile],
    radius: f64,
    min_support: usize,
) -> Vec<ReflectorEstimate> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .score
            .total_cmp(&candidates[a].score)
            .then(a.cmp(&b))
    });
    let cell = |p: [f64; 2]| -> (i64, i64) {
        ((p[0] / radius).floor() as i64, (p[1] / radius).floor() as i64)
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, c) in candidates.iter().enumerate() {
        grid.entry(cell(c.point)).or_default().push(k);
    }
    let mut assigned = vec![false; candidates.len()];
    let mut estimates = Vec::new();
    for &seed in &order {
        if assigned[seed] {
            continue;
        }
        let s = candidates[seed].point;
        let (cx, cy) = cell(s);
        let mut members = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = grid.get(&(cx + dx, cy + dy)) {
                    for &k in list {
                        let p = candidates[k].point;
                        if !assigned[k] && (p[0] - s[0]).hypot(p[1] - s[1]) <= radius {
                            members.push(k);
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        for &k in &members {
            assigned[k] = true;
        }
        let lines: BTreeSet<(usize, usize)> = members
            .iter()
            .flat_map(|&k| candidates[k].lines)
            .collect();
        let pairs: BTreeSet<(usize, usize)> = lines
            .iter()
            .map(|&(p, _)| (profiles[p].tx_id, profiles[p].rx_id))
            .collect();
        if pairs.len() < min_support || lines.len() < 2 {
            continue;
        }
        let wsum: f64 = members.iter().map(|&k| candidates[k].score).sum();
        let (mut x, mut y) = (0.0, 0.0);
        for &k in &members {
            let w = candidates[k].score / wsum;
            x += w * candidates[k].point[0];
            y += w * candidates[k].point[1];
        }
        let score = lines
            .iter()
            .map(|&(p, i)| profiles[p].peaks[i].magnitude)
            .sum();
        estimates.push(ReflectorEstimate {
            position: GroundPoint::ground(x, y),
            score,
            supporting_lines: lines.len(),
            support: pairs.len(),
        });
    }
    estimates.sort_by(|a, b| b.score.total_cmp(&a.score));
    estimates
}

/// CSV with columns `x, y, score, support`.
pub fn write_estimates_csv(path: &Path, estimates: &[ReflectorEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "score", "support"])?;
    for e in estimates {
        w.write_record(&[
            e.position.x.to_string(),
            e.position.y.to_string(),
            e.score.to_string(),
            e.support.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{aligned_point_patch, broadside_station, default_waveform};
    use crate::Complex64;
    use proptest::prelude::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn station_profile(tx: GroundPoint, rx: GroundPoint, ids: (usize, usize), pts: &[(GroundPoint, Complex64)]) -> StationProfile {
        let t = broadside_station(ids.0, tx, 1);
        let r = broadside_station(ids.1, rx, 16);
        let p = aligned_point_patch(&t, &r, GroundPoint::ORIGIN, pts);
        let prof = range_profiles(&p, &ProfileConfig { max_peaks: 3, ..Default::default() });
        StationProfile::new(&p, &prof)
    }

    #[test]
    fn peaks_detected_above_median() {
        let mag = [1.0, 1.0, 5.0, 1.0, 1.0, 1.9, 1.0, 3.0, 2.9, 1.0];
        let offs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let peaks = detect_peaks(&mag, &offs, 1.0, &ProfileConfig::default());
        let bins: Vec<usize> = peaks.iter().map(|p| p.bin).collect();
        // Threshold is 2x the median of 1.0; 1.9 misses it.
        assert_eq!(bins, vec![2, 7]);
        let cfg = ProfileConfig { min_relative: 0.7, ..Default::default() };
        assert_eq!(detect_peaks(&mag, &offs, 1.0, &cfg).len(), 1);
    }

    #[test]
    fn bin_spacing_is_range_resolution() {
        let st = broadside_station(0, GroundPoint::new(100.0, 0.0, 25.0), 4);
        let p = aligned_point_patch(&st, &st, GroundPoint::ORIGIN, &[(GroundPoint::ORIGIN, one())]);
        let prof = range_profiles(&p, &ProfileConfig::default());
        let wf = default_waveform();
        let rho = SPEED_OF_LIGHT / (2.0 * wf.bandwidth());
        assert!((prof.offsets[1] - prof.offsets[0] - rho).abs() < 1e-12);
        assert_eq!(prof.peaks[0].bin, wf.subcarrier_count / 2);
    }

    #[test]
    fn perpendicular_stations_locate_point() {
        let target = GroundPoint::ground(2.0, -1.0);
        let pts = [(target, one())];
        let a = station_profile(GroundPoint::new(100.0, 0.0, 25.0), GroundPoint::new(100.0, 0.0, 25.0), (0, 0), &pts);
        let b = station_profile(GroundPoint::new(0.0, 100.0, 25.0), GroundPoint::new(0.0, 100.0, 25.0), (1, 1), &pts);
        for locus in [LocusModel::Exact, LocusModel::Line] {
            let cfg = IntersectConfig { locus, ..Default::default() };
            let out = intersect_lines(&[a.clone(), b.clone()], &cfg).unwrap();
            let best = out.estimates[0];
            let rho = a.range_resolution;
            let err = (best.position.x - target.x).hypot(best.position.y - target.y);
            assert!(err <= 2.0 * rho, "{locus:?}: {err}");
            assert_eq!(best.support, 2);
        }
    }

    #[test]
    fn identical_directions_give_nothing() {
        let pts = [(GroundPoint::ground(2.0, -1.0), one())];
        let s = GroundPoint::new(100.0, 0.0, 25.0);
        let a = station_profile(s, s, (0, 0), &pts);
        let mut b = a.clone();
        b.tx_id = 1;
        b.rx_id = 1;
        let out = intersect_lines(&[a.clone(), b], &IntersectConfig::default()).unwrap();
        assert!(out.estimates.is_empty());
        assert_eq!(out.parallel_skipped, 1);
        assert!(intersect_lines(&[a], &IntersectConfig::default()).is_err());
    }

    #[test]
    fn aliases_cover_footprint() {
        let pts = [(GroundPoint::ground(0.0, 0.0), one())];
        let s = GroundPoint::new(100.0, 0.0, 25.0);
        let mut a = station_profile(s, s, (0, 0), &pts);
        a.footprint.semi_major = 200.0;
        a.footprint.semi_minor = 200.0;
        let c = a.candidate_offsets(10.0, true);
        // Period 75 m of half path is ~77 m of ground; a 400 m footprint fits
        // several aliases.
        assert!(c.len() >= 5 && c.contains(&10.0), "{c:?}");
        assert_eq!(a.candidate_offsets(10.0, false), vec![10.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn single_scatterer_range_offset(
            at in 0.0f64..std::f64::consts::TAU,
            ar in 0.0f64..std::f64::consts::TAU,
            dt in 80.0f64..200.0,
            dr in 80.0f64..200.0,
            x in -10.0f64..10.0,
            y in -10.0f64..10.0,
        ) {
            let tx = GroundPoint::new(dt * at.cos(), dt * at.sin(), 25.0);
            let rx = GroundPoint::new(dr * ar.cos(), dr * ar.sin(), 25.0);
            prop_assume!((tx - rx).xy()[0].hypot((tx - rx).xy()[1]) < 1.8 * dt.min(dr));
            let target = GroundPoint::ground(x, y);
            let t = broadside_station(0, tx, 1);
            let r = broadside_station(1, rx, 4);
            let p = aligned_point_patch(&t, &r, GroundPoint::ORIGIN, &[(target, one())]);
            let prof = range_profiles(&p, &ProfileConfig::default());
            let truth = (target.distance(&tx) + target.distance(&p.patch.rx_position) - p.patch.composite_distance) / 2.0;
            prop_assert!((prof.peaks[0].offset - truth).abs() <= prof.bin_width);
        }
    }
}
