//! Network layout, slot scheduling and patch synthesis.
//!
//! Random streams, all keyed by the root seed:
//!
//! * scene placement and phases: stream [`SCENE_STREAM`];
//! * reflector heights: stream [`HEIGHT_STREAM`];
//! * slot `t`: stream `SLOT_STREAM + t` drives transmit decisions, channels
//!   and aim points for that slot only;
//! * noise of the patch recorded by `rx`, layer `p`, from `tx` in slot `t`:
//!   stream `NOISE_STREAM + ((t·S + tx)·S + rx)·L + p` for `S` stations and
//!   `L` layers.
//!
//! Each slot therefore depends only on its own stream, and patches can be
//! synthesized in any order.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;

use super::config::RunConfig;
use crate::forward::{add_noise, illuminated_pixels, synthesize_points, ArraySnapshot, MeasurementPatch};
use crate::geometry::{beam_footprint, AntennaLayer, BaseStation, BeamSpec, EllipseFootprint, GroundPoint};
use crate::rng::{derive_seed, stream_rng};
use crate::scene::{random_reflector_scene, set_height_profile, ReflectorSpec, Scene};
use crate::{Error, Result};

pub const SCENE_STREAM: u64 = 1;
pub const HEIGHT_STREAM: u64 = 2;
pub const SLOT_STREAM: u64 = 1 << 32;
pub const NOISE_STREAM: u64 = 1 << 48;

/// Square grid of stations centered on the origin; station ids are row-major
/// grid indices.
pub fn build_network(cfg: &RunConfig) -> Result<Vec<BaseStation>> {
    let n = &cfg.network;
    let half = (n.grid_size as f64 - 1.0) / 2.0;
    let layers: Vec<AntennaLayer> = n
        .layer_tilts_deg
        .iter()
        .enumerate()
        .map(|(p, t)| AntennaLayer {
            height_offset: p as f64 * n.layer_spacing_m,
            tilt: t.to_radians(),
        })
        .collect();
    let mut out = Vec::with_capacity(n.grid_size * n.grid_size);
    for row in 0..n.grid_size {
        for col in 0..n.grid_size {
            let position = GroundPoint::new(
                (col as f64 - half) * n.grid_spacing_m,
                (row as f64 - half) * n.grid_spacing_m,
                n.station_height_m,
            );
            let bs = BaseStation::new(
                out.len(),
                position,
                n.antenna_count,
                n.antenna_spacing_m,
                n.array_orientation_deg.to_radians(),
            )?
            .with_layers(layers.clone())?;
            out.push(bs);
        }
    }
    Ok(out)
}

/// Ground truth: reflector squares with optional random heights.
pub fn build_scene(cfg: &RunConfig) -> Result<(Scene, Vec<ReflectorSpec>)> {
    let s = &cfg.scene;
    let (scene, mut reflectors) = random_reflector_scene(
        (s.extent_m, s.extent_m),
        s.resolution_m,
        s.reflector_count,
        s.reflector_side_m,
        derive_seed(cfg.run.seed, SCENE_STREAM),
    )?;
    if s.max_height_m > 0.0 {
        let mut rng = stream_rng(cfg.run.seed, HEIGHT_STREAM);
        for r in &mut reflectors {
            r.height = rng.random_range(0.0..=s.max_height_m);
        }
        return Ok((set_height_profile(&scene, &reflectors), reflectors));
    }
    Ok((scene, reflectors))
}

/// One beam transmitted in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub slot: usize,
    pub tx: usize,
    pub channel: usize,
    pub aim: GroundPoint,
    pub beam: BeamSpec,
    pub footprint: EllipseFootprint,
}

/// A patch to be recorded: receiver `rx`, layer `layer`, listening to
/// transmission `transmission`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reception {
    pub transmission: usize,
    pub rx: usize,
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub transmissions: Vec<Transmission>,
    pub receptions: Vec<Reception>,
}

/// Draws the transmissions of one slot.
///
/// Every station transmits with probability `tx_probability` on a uniformly
/// chosen channel, aiming at a uniform point of the scene whose ground
/// distance from the station lies in the configured aim range.
pub fn slot_transmissions(cfg: &RunConfig, stations: &[BaseStation], slot: usize) -> Result<Vec<Transmission>> {
    let mut rng = stream_rng(cfg.run.seed, SLOT_STREAM + slot as u64);
    let half = cfg.scene.extent_m / 2.0;
    let (dmin, dmax) = (cfg.beam.min_aim_distance_m, cfg.beam.max_aim_distance_m);
    let open = cfg.beam.open_angle_deg.to_radians();
    let mut out = Vec::new();
    for bs in stations {
        let fire = rng.random_bool(cfg.schedule.tx_probability);
        let channel = rng.random_range(0..cfg.schedule.channels);
        if !fire {
            continue;
        }
        // Polar sampling within the annulus, rejecting points outside the
        // scene; keeps the draw count bounded when the annulus barely
        // overlaps the scene.
        let mut aim = None;
        for _ in 0..1000 {
            let r = (rng.random_range(dmin * dmin..=dmax * dmax)).sqrt();
            let a = rng.random_range(0.0..TAU);
            let p = GroundPoint::ground(bs.position.x + r * a.cos(), bs.position.y + r * a.sin());
            if p.x.abs() <= half && p.y.abs() <= half {
                aim = Some(p);
                break;
            }
        }
        let Some(aim) = aim else {
            log::warn!("station {} found no aim point inside the scene in slot {slot}", bs.id);
            continue;
        };
        let beam = BeamSpec::aimed_at(bs, aim, open);
        let footprint = beam_footprint(bs, &beam)?;
        out.push(Transmission {
            slot,
            tx: bs.id,
            channel,
            aim,
            beam,
            footprint,
        });
    }
    Ok(out)
}

/// Ground distance from a station to the footprint center.
pub fn receive_distance(rx: &BaseStation, footprint: &EllipseFootprint) -> f64 {
    (rx.position.x - footprint.center.x).hypot(rx.position.y - footprint.center.y)
}

/// All slots. A station records a transmission when it is not itself
/// transmitting on that channel and lies within the receive distance of the
/// footprint; each of its layers yields one patch. Co-channel transmitters in
/// the same slot are assumed separable at the receiver.
pub fn schedule(cfg: &RunConfig, stations: &[BaseStation]) -> Result<Schedule> {
    let per_slot: Vec<Vec<Transmission>> = (0..cfg.schedule.slots)
        .into_par_iter()
        .map(|t| slot_transmissions(cfg, stations, t))
        .collect::<Result<_>>()?;
    let mut out = Schedule::default();
    for slot in per_slot {
        let base = out.transmissions.len();
        for (k, tr) in slot.iter().enumerate() {
            let index = base + k;
            for rx in stations {
                let busy = slot.iter().any(|o| o.tx == rx.id && o.channel == tr.channel);
                if busy || receive_distance(rx, &tr.footprint) > cfg.schedule.max_receive_distance_m {
                    continue;
                }
                for layer in 0..rx.layers.len() {
                    out.receptions.push(Reception {
                        transmission: index,
                        rx: rx.id,
                        layer,
                    });
                }
            }
        }
        out.transmissions.extend(slot);
    }
    Ok(out)
}

/// A synthesized patch with its scheduling context.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedPatch {
    pub slot: usize,
    pub channel: usize,
    pub layer: usize,
    pub tilt: f64,
    pub patch: MeasurementPatch,
}

impl RecordedPatch {
    /// True when every sample is exactly zero: the footprint held no
    /// reflector.
    pub fn is_silent(&self) -> bool {
        self.patch.samples.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }
}

pub fn noise_seed(cfg: &RunConfig, stations: usize, layers: usize, slot: usize, tx: usize, rx: usize, layer: usize) -> u64 {
    let s = stations as u64;
    let key = ((slot as u64 * s + tx as u64) * s + rx as u64) * layers as u64 + layer as u64;
    derive_seed(cfg.run.seed, NOISE_STREAM + key)
}

/// Synthesizes the patch of one reception.
pub fn record(
    cfg: &RunConfig,
    scene: &Scene,
    stations: &[BaseStation],
    schedule: &Schedule,
    reception: &Reception,
) -> Result<RecordedPatch> {
    let tr = &schedule.transmissions[reception.transmission];
    let tx = &stations[tr.tx];
    let rx = &stations[reception.rx];
    let wf = cfg.waveform()?;
    let mut patch = MeasurementPatch::from_array(
        tx.id,
        tx.position,
        rx.id,
        ArraySnapshot::of(rx, reception.layer),
        tr.footprint,
        wf,
    )?;
    let points = match illuminated_pixels(scene, &tr.footprint) {
        Ok(p) => p,
        Err(Error::EmptyFootprint) => Vec::new(),
        Err(e) => return Err(e),
    };
    if !points.is_empty() {
        synthesize_points(&mut patch, &points);
    }
    let seed = noise_seed(cfg, stations.len(), rx.layers.len(), tr.slot, tx.id, rx.id, reception.layer);
    add_noise(&mut patch.samples, cfg.schedule.noise_power, seed)?;
    Ok(RecordedPatch {
        slot: tr.slot,
        channel: tr.channel,
        layer: reception.layer,
        tilt: rx.layers[reception.layer].tilt,
        patch,
    })
}

/// Everything a simulation produces, in memory.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scene: Scene,
    pub reflectors: Vec<ReflectorSpec>,
    pub stations: Vec<BaseStation>,
    pub schedule: Schedule,
}

impl Simulation {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let (scene, reflectors) = build_scene(cfg)?;
        let stations = build_network(cfg)?;
        let schedule = schedule(cfg, &stations)?;
        Ok(Self {
            scene,
            reflectors,
            stations,
            schedule,
        })
    }

    /// Synthesizes receptions `range` in parallel, in schedule order.
    pub fn record_range(&self, cfg: &RunConfig, range: std::ops::Range<usize>) -> Result<Vec<RecordedPatch>> {
        self.schedule.receptions[range]
            .par_iter()
            .map(|r| record(cfg, &self.scene, &self.stations, &self.schedule, r))
            .collect()
    }

    pub fn record_all(&self, cfg: &RunConfig) -> Result<Vec<RecordedPatch>> {
        self.record_range(cfg, 0..self.schedule.receptions.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.schedule.slots = 60;
        cfg.schedule.tx_probability = 0.3;
        cfg.network.antenna_count = 8;
        cfg.waveform.subcarriers = 32;
        cfg
    }

    #[test]
    fn grid_is_centered() {
        let st = build_network(&RunConfig::default()).unwrap();
        assert_eq!(st.len(), 9);
        assert_eq!(st[0].position.xy(), [-200.0, -200.0]);
        assert_eq!(st[4].position.xy(), [0.0, 0.0]);
        assert_eq!(st[8].position.xy(), [200.0, 200.0]);
    }

    #[test]
    fn receptions_respect_rules() {
        let cfg = small();
        let sim = Simulation::new(&cfg).unwrap();
        assert!(!sim.schedule.receptions.is_empty());
        for r in &sim.schedule.receptions {
            let tr = &sim.schedule.transmissions[r.transmission];
            assert_ne!(tr.tx, r.rx);
            assert!(receive_distance(&sim.stations[r.rx], &tr.footprint) <= 400.0);
            assert!(tr.aim.x.abs() <= 200.0 && tr.aim.y.abs() <= 200.0);
            let d = (tr.aim - GroundPoint::ground(sim.stations[tr.tx].position.x, sim.stations[tr.tx].position.y)).norm_xy();
            assert!((10.0..=150.0 + 1e-9).contains(&d));
            let busy = sim
                .schedule
                .transmissions
                .iter()
                .any(|o| o.slot == tr.slot && o.tx == r.rx && o.channel == tr.channel);
            assert!(!busy);
        }
    }

    #[test]
    fn slots_are_independent_of_slot_count() {
        let cfg = small();
        let st = build_network(&cfg).unwrap();
        let mut longer = cfg.clone();
        longer.schedule.slots = 120;
        let a = schedule(&cfg, &st).unwrap();
        let b = schedule(&longer, &st).unwrap();
        assert_eq!(a.transmissions[..], b.transmissions[..a.transmissions.len()]);
    }

    #[test]
    fn silent_probability_gives_empty_schedule() {
        let mut cfg = small();
        cfg.schedule.tx_probability = 0.0;
        let sim = Simulation::new(&cfg).unwrap();
        assert!(sim.schedule.transmissions.is_empty());
        assert!(sim.schedule.receptions.is_empty());
    }

    #[test]
    fn recording_is_deterministic() {
        let mut cfg = small();
        cfg.schedule.noise_power = 1e-12;
        let sim = Simulation::new(&cfg).unwrap();
        let n = sim.schedule.receptions.len().min(6);
        let a = sim.record_range(&cfg, 0..n).unwrap();
        let b = sim.record_range(&cfg, 0..n).unwrap();
        assert_eq!(a, b);
    }
}
