//! Reconstruction dispatch over a set of recorded patches.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;

use super::config::{Algorithm, RunConfig};
use super::dataset::read_patch;
use super::simulate::RecordedPatch;
use crate::analysis::{resolutions, Resolutions};
use crate::geometry::GroundPoint;
use crate::isar::{invert_sensing_tensor, samples_from_patch, SensingTensor};
use crate::patches::{align_with, AlignedPatch, OrientationReference};
use crate::reconstruct::{
    estimate_height, fuse_images, intersect_lines, procedure1_invert, procedure1_invert_masked,
    procedure2_per_patch, range_profiles, write_estimates_csv, HeightConfig, HeightPlane,
    IntersectConfig, IntersectOutput, Procedure1Config, Procedure2Config, ProfileConfig,
    ReflectorEstimate, StationProfile, TargetGrid,
};
use crate::scene::ReflectorSpec;
use crate::{Complex64, Error, Result};

/// Simulated networks are bistatic, so the antenna ramp follows each
/// receiver's own line of sight.
const ORIENTATION: OrientationReference = OrientationReference::ReceiverLine;

/// Where patches come from: already in memory, or files read on demand.
pub enum PatchSource<'a> {
    Memory(&'a [RecordedPatch]),
    Files(&'a [PathBuf]),
}

impl PatchSource<'_> {
    pub fn len(&self) -> usize {
        match self {
            PatchSource::Memory(p) => p.len(),
            PatchSource::Files(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies `f` to every patch in parallel and keeps the `Some` results in
    /// source order.
    pub fn filter_map<T: Send>(&self, f: impl Fn(&RecordedPatch) -> Result<Option<T>> + Sync) -> Result<Vec<T>> {
        let out: Vec<Option<T>> = match self {
            PatchSource::Memory(p) => p.par_iter().map(&f).collect::<Result<_>>()?,
            PatchSource::Files(files) => files
                .par_iter()
                .map(|path| f(&read_patch(path)?))
                .collect::<Result<_>>()?,
        };
        Ok(out.into_iter().flatten().collect())
    }
}

/// Reflectors with an estimate within the match radius, and estimates with
/// no reflector within it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchStats {
    pub reflectors: usize,
    pub matched: usize,
    pub estimates: usize,
    pub false_detections: usize,
    pub radius: f64,
}

impl MatchStats {
    pub fn matched_fraction(&self) -> f64 {
        if self.reflectors == 0 { 1.0 } else { self.matched as f64 / self.reflectors as f64 }
    }
}

pub fn match_estimates(estimates: &[[f64; 2]], reflectors: &[ReflectorSpec], radius: f64) -> MatchStats {
    let near = |e: &[f64; 2], r: &ReflectorSpec| (e[0] - r.center.x).hypot(e[1] - r.center.y) <= radius;
    MatchStats {
        reflectors: reflectors.len(),
        matched: reflectors.iter().filter(|r| estimates.iter().any(|e| near(e, r))).count(),
        estimates: estimates.len(),
        false_detections: estimates.iter().filter(|e| !reflectors.iter().any(|r| near(e, r))).count(),
        radius,
    }
}

pub fn profile_config(cfg: &RunConfig) -> ProfileConfig {
    let r = &cfg.reconstruct;
    ProfileConfig {
        threshold_db: r.threshold_db,
        min_relative: r.min_relative,
        taper: r.taper,
        max_peaks: r.max_peaks,
        interpolate: r.interpolate_peaks,
    }
}

pub fn intersect_config(cfg: &RunConfig) -> IntersectConfig {
    let r = &cfg.reconstruct;
    IntersectConfig {
        cluster_radius: (r.cluster_radius_m > 0.0).then_some(r.cluster_radius_m),
        min_support: r.min_support,
        ..IntersectConfig::default()
    }
}

/// Range-peak summary of one patch; `None` for silent patches and patches
/// without peaks.
pub fn station_profile(cfg: &RunConfig, rec: &RecordedPatch) -> Result<Option<StationProfile>> {
    if rec.is_silent() {
        return Ok(None);
    }
    let aligned = align_with(&rec.patch, ORIENTATION)?;
    let profile = range_profiles(&aligned, &profile_config(cfg));
    if profile.peaks.is_empty() {
        return Ok(None);
    }
    Ok(Some(StationProfile::new(&aligned, &profile)))
}

/// Ordered `key: value` lines of a run report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub lines: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }
}

/// Result of one reconstruction. `artifacts` are paths relative to the
/// output directory, in the order written.
#[derive(Debug, Clone, Default)]
pub struct Reconstruction {
    pub report: Report,
    pub estimates: Vec<ReflectorEstimate>,
    pub matching: Option<MatchStats>,
    pub artifacts: Vec<String>,
}

fn nominal_resolutions(cfg: &RunConfig, rx_distance: f64) -> Result<Resolutions> {
    let n = &cfg.network;
    resolutions(
        &cfg.waveform()?,
        n.antenna_count as f64 * n.antenna_spacing_m,
        rx_distance,
        n.antenna_count,
    )
}

fn aligned_nonsilent(source: &PatchSource) -> Result<Vec<AlignedPatch>> {
    source.filter_map(|rec| if rec.is_silent() { Ok(None) } else { align_with(&rec.patch, ORIENTATION).map(Some) })
}

/// Runs the configured algorithm and writes its artifacts into `out`.
/// `reflectors`, when known, are used to score intersect estimates.
pub fn reconstruct_source(
    cfg: &RunConfig,
    source: &PatchSource,
    reflectors: Option<&[ReflectorSpec]>,
    out: &Path,
) -> Result<Reconstruction> {
    if source.is_empty() {
        return Err(Error::EmptyInput("the dataset holds no patches"));
    }
    fs::create_dir_all(out)?;
    let mut rec = Reconstruction::default();
    rec.report.push("algorithm", cfg.reconstruct.algorithm.name());
    rec.report.push("patches", source.len());
    match cfg.reconstruct.algorithm {
        Algorithm::Intersect => run_intersect(cfg, source, reflectors, out, &mut rec)?,
        Algorithm::Procedure1 => run_procedure1(cfg, source, out, &mut rec)?,
        Algorithm::Procedure2 => run_procedure2(cfg, source, out, &mut rec)?,
        Algorithm::ThreeD => run_height(cfg, source, out, &mut rec)?,
        Algorithm::Isar => run_isar(cfg, source, out, &mut rec)?,
    }
    fs::write(out.join("report.txt"), rec.report.to_text())?;
    rec.artifacts.push("report.txt".into());
    Ok(rec)
}

fn push_resolutions(cfg: &RunConfig, rec: &mut Reconstruction, distance: f64) -> Result<()> {
    if distance > 0.0 {
        let r = nominal_resolutions(cfg, distance)?;
        rec.report.push("mean_rx_distance_m", format!("{distance:.3}"));
        rec.report.push("range_resolution_m", format!("{:.6}", r.range));
        rec.report.push("cross_resolution_m", format!("{:.6}", r.cross));
        rec.report.push("cross_sampling_m", format!("{:.6}", r.cross_sampling));
    }
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 { 0.0 } else { s / n as f64 }
}

pub fn intersect_source(cfg: &RunConfig, source: &PatchSource) -> Result<(Vec<StationProfile>, IntersectOutput)> {
    let profiles = source.filter_map(|p| station_profile(cfg, p))?;
    if profiles.len() < 2 {
        log::warn!("only {} patches produced range peaks", profiles.len());
        return Ok((profiles, IntersectOutput::default()));
    }
    let out = intersect_lines(&profiles, &intersect_config(cfg))?;
    Ok((profiles, out))
}

fn run_intersect(
    cfg: &RunConfig,
    source: &PatchSource,
    reflectors: Option<&[ReflectorSpec]>,
    out: &Path,
    rec: &mut Reconstruction,
) -> Result<()> {
    let (profiles, result) = intersect_source(cfg, source)?;
    rec.report.push("profiles_with_peaks", profiles.len());
    rec.report.push("range_peaks", profiles.iter().map(|p| p.peaks.len()).sum::<usize>());
    rec.report.push("profile_pairs", result.profile_pairs);
    rec.report.push("parallel_skipped", result.parallel_skipped);
    rec.report.push("outside_footprint", result.outside_footprint);
    rec.report.push("unconverged", result.unconverged);
    rec.report.push("intersections", result.intersections);
    rec.report.push("estimates", result.estimates.len());
    push_resolutions(cfg, rec, mean(profiles.iter().map(|p| p.rx_position.distance(&p.region_center))))?;

    write_estimates_csv(&out.join("estimates.csv"), &result.estimates)?;
    rec.artifacts.push("estimates.csv".into());
    let grid = TargetGrid::centered(GroundPoint::ORIGIN, cfg.scene.extent_m, cfg.scene.extent_m, 1.0);
    let mut map = Array2::<f64>::zeros(grid.dims);
    for e in &result.estimates {
        let i = ((e.position.x - grid.origin.x) / grid.spacing).round();
        let j = ((e.position.y - grid.origin.y) / grid.spacing).round();
        if i >= 0.0 && j >= 0.0 && (i as usize) < grid.dims.0 && (j as usize) < grid.dims.1 {
            map[(i as usize, j as usize)] += e.score;
        }
    }
    crate::io::write_pgm(&out.join("estimates.pgm"), &map)?;
    rec.artifacts.push("estimates.pgm".into());

    if let Some(rs) = reflectors {
        let pos: Vec<[f64; 2]> = result.estimates.iter().map(|e| e.position.xy()).collect();
        let m = match_estimates(&pos, rs, cfg.reconstruct.match_radius_m);
        rec.report.push("reflectors", m.reflectors);
        rec.report.push("matched", m.matched);
        rec.report.push("matched_fraction", format!("{:.4}", m.matched_fraction()));
        rec.report.push("false_detections", m.false_detections);
        rec.matching = Some(m);
    }
    rec.estimates = result.estimates;
    Ok(())
}

fn procedure1_config(cfg: &RunConfig) -> Procedure1Config {
    Procedure1Config {
        anchor: Some([0.0, 0.0]),
        image_center: Some(GroundPoint::ORIGIN),
        drop_outside: true,
        ..Procedure1Config::new(cfg.reconstruct.half_size, cfg.reconstruct.pixel_spacing_m)
    }
}

fn nonempty(patches: &[AlignedPatch]) -> Result<()> {
    if patches.is_empty() {
        Err(Error::EmptyInput("every patch is silent"))
    } else {
        Ok(())
    }
}

// Samples are recentered on their own spectrum centers before gridding; the
// raw wavenumbers of a whole network span far more than any practical grid.
fn run_procedure1(cfg: &RunConfig, source: &PatchSource, out: &Path, rec: &mut Reconstruction) -> Result<()> {
    let patches: Vec<AlignedPatch> = aligned_nonsilent(source)?.iter().map(|p| p.recentered()).collect();
    nonempty(&patches)?;
    rec.report.push("nonsilent_patches", patches.len());
    push_resolutions(cfg, rec, mean(patches.iter().map(|p| p.patch.rx_distance)))?;
    let result = procedure1_invert(&patches, &procedure1_config(cfg))?;
    rec.report.push("samples_dropped", result.dropped);
    result.image.write_pgm(&out.join("image.pgm"))?;
    result.image.write_csv(&out.join("image.csv"))?;
    rec.artifacts.extend(["image.pgm".into(), "image.csv".into()]);
    Ok(())
}

fn run_procedure2(cfg: &RunConfig, source: &PatchSource, out: &Path, rec: &mut Reconstruction) -> Result<()> {
    let patches = aligned_nonsilent(source)?;
    nonempty(&patches)?;
    rec.report.push("nonsilent_patches", patches.len());
    push_resolutions(cfg, rec, mean(patches.iter().map(|p| p.patch.rx_distance)))?;
    let images: Vec<_> = patches
        .par_iter()
        .map(|p| match procedure2_per_patch(p, &Procedure2Config::default()) {
            Ok(o) => Some(o.image),
            Err(e) => {
                log::warn!("patch {}→{} skipped: {e}", p.tx_id(), p.rx_id());
                None
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if images.is_empty() {
        return Err(Error::EmptyInput("no patch could be imaged"));
    }
    rec.report.push("imaged_patches", images.len());
    let e = cfg.scene.extent_m;
    let grid = TargetGrid::centered(GroundPoint::ORIGIN, e, e, cfg.reconstruct.pixel_spacing_m);
    let fused = fuse_images(&images, &grid)?;
    rec.report.push("disjoint_images", fused.disjoint.len());
    let [px, py] = fused.image.peak_position();
    rec.report.push("peak_position_m", format!("{px:.3}, {py:.3}"));
    fused.image.write_pgm(&out.join("fused.pgm"))?;
    fused.image.write_csv(&out.join("fused.csv"))?;
    rec.artifacts.extend(["fused.pgm".into(), "fused.csv".into()]);
    Ok(())
}

fn run_height(cfg: &RunConfig, source: &PatchSource, out: &Path, rec: &mut Reconstruction) -> Result<()> {
    let patches: Vec<AlignedPatch> = aligned_nonsilent(source)?.iter().map(|p| p.recentered()).collect();
    nonempty(&patches)?;
    rec.report.push("nonsilent_patches", patches.len());
    push_resolutions(cfg, rec, mean(patches.iter().map(|p| p.patch.rx_distance)))?;
    let pcfg = procedure1_config(cfg);
    let ground = procedure1_invert(&patches, &pcfg)?;

    // Plane i holds the samples whose κ_z falls in the i-th of n equal bins
    // spanning the measured κ_z range; its height coordinate is the bin center.
    let n = cfg.reconstruct.height_planes;
    let (lo, hi) = patches
        .iter()
        .flat_map(|p| p.kz.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateStep("all samples share one κ_z; no height diversity".into()));
    }
    let dz = (hi - lo) / n as f64;
    let bin = |v: f64| (((v - lo) / dz).floor() as usize).min(n - 1);
    let bins: Vec<Vec<usize>> = patches.iter().map(|p| p.kz.iter().map(|&v| bin(v)).collect()).collect();
    let planes = (0..n)
        .map(|i| {
            let img = procedure1_invert_masked(&patches, &pcfg, |pi, si| bins[pi][si] == i)?;
            Ok(HeightPlane {
                z: lo + (i as f64 + 0.5) * dz,
                image: img.complex,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let map = estimate_height(&ground.complex, &planes, &HeightConfig { mask_fraction: cfg.reconstruct.mask_fraction })?;
    let valid = map.valid.iter().filter(|v| **v).count();
    rec.report.push("kz_range_rad_per_m", format!("{lo:.6}, {hi:.6}"));
    rec.report.push("height_bin_m", format!("{:.6}", map.bin_width));
    rec.report.push("unambiguous_height_m", format!("{:.6}", map.unambiguous_range));
    rec.report.push("valid_pixels", valid);

    let mut w = csv::Writer::from_path(out.join("height.csv"))?;
    w.write_record(["x", "y", "height", "magnitude"])?;
    for ((i, j), h) in map.height.indexed_iter() {
        if map.valid[(i, j)] {
            let [x, y] = ground.image.frame.world(i as f64, j as f64);
            w.write_record(&[x.to_string(), y.to_string(), h.to_string(), ground.image.magnitude[(i, j)].to_string()])?;
        }
    }
    w.flush()?;
    crate::io::write_pgm(&out.join("height.pgm"), &map.height.mapv(|h| if h.is_nan() { 0.0 } else { h }))?;
    ground.image.write_pgm(&out.join("image.pgm"))?;
    rec.artifacts.extend(["height.csv".into(), "height.pgm".into(), "image.pgm".into()]);
    Ok(())
}

fn run_isar(cfg: &RunConfig, source: &PatchSource, out: &Path, rec: &mut Reconstruction) -> Result<()> {
    let r = &cfg.reconstruct;
    let center = GroundPoint::ground(r.isar_center_x_m, r.isar_center_y_m);
    let patches = source.filter_map(|p| {
        if p.is_silent() || !p.patch.footprint.contains(center) {
            Ok(None)
        } else {
            align_with(&p.patch, ORIENTATION).map(Some)
        }
    })?;
    if patches.is_empty() {
        return Err(Error::EmptyInput("no nonsilent patch illuminates the voxel grid center"));
    }
    let all: Vec<_> = patches.iter().flat_map(|p| samples_from_patch(p, center)).collect();
    let stride = all.len().div_ceil(r.isar_max_samples).max(1);
    let kept: Vec<_> = all.iter().step_by(stride).collect();
    let k: Vec<[f64; 3]> = kept.iter().map(|s| s.k).collect();
    let x: Vec<Complex64> = kept.iter().map(|s| s.value).collect();
    let tensor = SensingTensor::build(&k, r.isar_side, r.isar_spacing_m, Complex64::new(1.0, 0.0))?;
    let result = invert_sensing_tensor(&tensor, &x, r.svd_tolerance)?;
    rec.report.push("illuminating_patches", patches.len());
    rec.report.push("samples", kept.len());
    rec.report.push("voxels", r.isar_side.pow(3));
    rec.report.push("rank", result.rank);
    rec.report.push("full_rank", result.full_rank);
    push_resolutions(cfg, rec, mean(patches.iter().map(|p| p.patch.rx_distance)))?;
    result.grid.write_csv(&out.join("voxels.csv"))?;
    rec.artifacts.push("voxels.csv".into());
    for path in result.grid.write_slices(out, "voxels_z")? {
        if let Some(name) = path.file_name() {
            rec.artifacts.push(name.to_string_lossy().into_owned());
        }
    }
    Ok(())
}
