//! End-to-end runs: configuration, simulation to disk, reconstruction from a
//! dataset, and the analysis subcommands. Every run writes a manifest with the
//! config hash, the seed and a checksum of every artifact.

pub mod config;
pub mod dataset;
pub mod pipeline;
pub mod simulate;

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;

pub use config::{Algorithm, RunConfig};
pub use dataset::Manifest;
pub use pipeline::{MatchStats, PatchSource, Reconstruction, Report};
pub use simulate::{RecordedPatch, Simulation};

use crate::analysis::{mse_sweep, projection_slice_check, sidelobe_statistics, CenterDistribution};
use crate::rng::{derive_seed, stream_rng};
use crate::tradeoff::{gaussian_sum_bound, information_terms, JointChannel};
use crate::{Complex64, Error, Result};

/// The bundled example channel for `analyze tradeoff`.
pub const EXAMPLE_CHANNEL: &str = include_str!("../../data/example_channel.csv");

const ANALYSIS_STREAM: u64 = 3;

/// Patches synthesized per batch when writing a dataset.
const BATCH: usize = 256;

fn base_manifest(cfg: &RunConfig, kind: &str) -> Manifest {
    let mut m = Manifest::default();
    m.push("kind", kind);
    m.push("config_hash", cfg.hash());
    m.push("seed", cfg.run.seed);
    m
}

fn write_config(cfg: &RunConfig, out: &Path, m: &mut Manifest) -> Result<()> {
    fs::write(out.join("config.txt"), cfg.to_text())?;
    m.artifact(out, "config.txt")
}

/// Writes `scene.csv`, `scene.pgm` and `reflectors.csv`.
pub fn export_scene(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let (scene, reflectors) = simulate::build_scene(cfg)?;
    let mut m = base_manifest(cfg, "scene");
    write_config(cfg, out, &mut m)?;
    scene.write_csv(&out.join("scene.csv"))?;
    scene.write_pgm(&out.join("scene.pgm"))?;
    dataset::write_reflectors(&out.join("reflectors.csv"), &reflectors)?;
    for a in ["scene.csv", "scene.pgm", "reflectors.csv"] {
        m.artifact(out, a)?;
    }
    m.write(out)?;
    Ok(m)
}

/// Simulates every slot and writes the dataset into `out`.
pub fn simulate_to_dir(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let sim = Simulation::new(cfg)?;
    fs::create_dir_all(out.join(dataset::PATCH_DIR))?;
    let mut m = base_manifest(cfg, "dataset");
    write_config(cfg, out, &mut m)?;
    dataset::write_reflectors(&out.join("reflectors.csv"), &sim.reflectors)?;
    sim.scene.write_pgm(&out.join("scene.pgm"))?;
    m.artifact(out, "reflectors.csv")?;
    m.artifact(out, "scene.pgm")?;

    let total = sim.schedule.receptions.len();
    m.push("stations", sim.stations.len());
    m.push("slots", cfg.schedule.slots);
    m.push("transmissions", sim.schedule.transmissions.len());
    m.push("patch_count", total);
    let mut summaries = Vec::with_capacity(total);
    let mut start = 0;
    while start < total {
        let end = (start + BATCH).min(total);
        let batch = sim.record_range(cfg, start..end)?;
        for (k, rec) in batch.iter().enumerate() {
            let name = dataset::patch_file_name(start + k);
            dataset::write_patch(&out.join(&name), rec)?;
            summaries.push((name.clone(), dataset::patch_summary(&name, rec)));
        }
        start = end;
    }
    for (i, (_, s)) in summaries.iter().enumerate() {
        m.push(format!("patch.{i:05}"), s);
    }
    for (name, _) in &summaries {
        m.artifact(out, name)?;
    }
    m.write(out)?;
    log::info!("wrote {total} patches to {}", out.display());
    Ok(m)
}

/// Reconstructs the dataset in `dataset_dir` into `out`.
pub fn reconstruct_dataset(cfg: &RunConfig, dataset_dir: &Path, out: &Path) -> Result<(Reconstruction, Manifest)> {
    cfg.validate()?;
    let files = dataset::listed_patches(dataset_dir)?;
    if files.is_empty() {
        return Err(Error::MissingDataset(dataset_dir.to_path_buf()));
    }
    let refl_path = dataset_dir.join("reflectors.csv");
    let reflectors = if refl_path.is_file() {
        Some(dataset::read_reflectors(&refl_path)?)
    } else {
        None
    };
    let rec = pipeline::reconstruct_source(cfg, &PatchSource::Files(&files), reflectors.as_deref(), out)?;
    let mut m = base_manifest(cfg, "reconstruction");
    m.push("algorithm", cfg.reconstruct.algorithm.name());
    m.push(
        "dataset_manifest",
        crate::io::sha256_file(&dataset_dir.join(dataset::MANIFEST))?,
    );
    write_config(cfg, out, &mut m)?;
    for a in &rec.artifacts {
        m.artifact(out, a)?;
    }
    m.write(out)?;
    Ok((rec, m))
}

/// Analysis subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    SliceCheck,
    OneDimMse,
    Tradeoff,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::SliceCheck => "slice-check",
            Analysis::OneDimMse => "onedim-mse",
            Analysis::Tradeoff => "tradeoff",
        }
    }
}

/// Runs `which` and writes its tables, `report.txt` and a manifest.
pub fn analyze(cfg: &RunConfig, which: Analysis, out: &Path) -> Result<(Report, Manifest)> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut report = Report::default();
    report.push("analysis", which.name());
    let mut artifacts: Vec<&str> = Vec::new();
    let seed = derive_seed(cfg.run.seed, ANALYSIS_STREAM);
    let a = &cfg.analyze;
    match which {
        Analysis::SliceCheck => {
            let n = a.slice_size;
            let mut rng = stream_rng(seed, 0);
            let image = Array2::from_shape_fn((n, n), |_| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let check = projection_slice_check(&image, a.slice_angle_deg.to_radians())?;
            report.push("size", n);
            report.push("angle_deg", a.slice_angle_deg);
            report.push("max_abs_error", format!("{:e}", check.max_abs_error));
            report.push("relative_error", format!("{:e}", check.relative_error));
            let mut w = csv::Writer::from_path(out.join("slice_check.csv"))?;
            w.write_record(["frequency", "slice_re", "slice_im", "projection_re", "projection_im"])?;
            for ((f, s), p) in check.frequencies.iter().zip(&check.slice).zip(&check.projection_transform) {
                w.write_record(&[f.to_string(), s.re.to_string(), s.im.to_string(), p.re.to_string(), p.im.to_string()])?;
            }
            w.flush()?;
            artifacts.push("slice_check.csv");
        }
        Analysis::OneDimMse => {
            let mut rng = stream_rng(seed, 1);
            let image: Vec<Complex64> = (0..a.image_length)
                .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect();
            let sweep = mse_sweep(
                &image,
                a.window_width,
                &a.window_counts,
                a.trials,
                CenterDistribution::FullCircle,
                derive_seed(seed, 2),
            )?;
            report.push("image_length", a.image_length);
            report.push("window_width", a.window_width);
            report.push("trials", a.trials);
            report.push("slope", format!("{:.6}", sweep.slope));
            sweep.write_csv(&out.join("onedim_mse.csv"))?;
            sweep.write_trials_csv(&out.join("onedim_mse_trials.csv"))?;
            artifacts.extend(["onedim_mse.csv", "onedim_mse_trials.csv"]);

            let n = a.window_counts.iter().copied().max().unwrap_or(1);
            let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
            let stats = sidelobe_statistics((0.0, std::f64::consts::TAU), n, &x, a.trials.max(2), derive_seed(seed, 3))?;
            let worst = stats.variance_ratio[1..]
                .iter()
                .map(|v| (v - 1.0).abs())
                .fold(0.0, f64::max);
            report.push("sidelobe_n", n);
            report.push("sidelobe_max_variance_deviation", format!("{worst:.6}"));
            stats.write_csv(&out.join("sidelobes.csv"))?;
            artifacts.push("sidelobes.csv");
        }
        Analysis::Tradeoff => {
            let path = out.join("channel.csv");
            if a.channel_file.is_empty() {
                fs::write(&path, EXAMPLE_CHANNEL)?;
            } else {
                fs::copy(&a.channel_file, &path)?;
            }
            let ch = JointChannel::read_csv(&path)?;
            let terms = information_terms(&ch);
            report.push("identity_residual_bits", format!("{:e}", terms.identity_residual()));
            report.push("gaussian_sum_bound_snr3_bits", format!("{:?}", gaussian_sum_bound(3.0)?));
            for (k, v) in [
                ("i_xy_bits", terms.i_xy),
                ("i_ys_given_x_bits", terms.i_ys_given_x),
                ("i_ys_bits", terms.i_ys),
                ("h_y_bits", terms.h_y),
                ("h_y_given_xs_bits", terms.h_y_given_xs),
            ] {
                report.push(k, format!("{v:.12}"));
            }
            terms.write_csv(&out.join("tradeoff.csv"))?;
            artifacts.extend(["channel.csv", "tradeoff.csv"]);
        }
    }
    fs::write(out.join("report.txt"), report.to_text())?;
    artifacts.push("report.txt");
    let mut m = base_manifest(cfg, "analysis");
    m.push("analysis", which.name());
    write_config(cfg, out, &mut m)?;
    for a in artifacts {
        m.artifact(out, a)?;
    }
    m.write(out)?;
    Ok((report, m))
}

/// Outcome of [`locate_in_memory`].
#[derive(Debug, Clone)]
pub struct LocateRun {
    pub reflectors: Vec<crate::scene::ReflectorSpec>,
    pub patches: usize,
    pub profiles: usize,
    pub output: crate::reconstruct::IntersectOutput,
    pub matching: MatchStats,
}

/// Simulates and runs range-line intersection without touching the disk.
/// Patches are synthesized in batches and reduced to their range peaks at
/// once, so memory stays bounded for long schedules.
pub fn locate_in_memory(cfg: &RunConfig) -> Result<LocateRun> {
    let sim = Simulation::new(cfg)?;
    let total = sim.schedule.receptions.len();
    let mut profiles = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + BATCH).min(total);
        let batch = sim.record_range(cfg, start..end)?;
        profiles.extend(PatchSource::Memory(&batch).filter_map(|r| pipeline::station_profile(cfg, r))?);
        start = end;
    }
    let output = if profiles.len() >= 2 {
        crate::reconstruct::intersect_lines(&profiles, &pipeline::intersect_config(cfg))?
    } else {
        crate::reconstruct::IntersectOutput::default()
    };
    let pos: Vec<[f64; 2]> = output.estimates.iter().map(|e| e.position.xy()).collect();
    let matching = pipeline::match_estimates(&pos, &sim.reflectors, cfg.reconstruct.match_radius_m);
    Ok(LocateRun {
        reflectors: sim.reflectors,
        patches: total,
        profiles: profiles.len(),
        output,
        matching,
    })
}
