//! Flat `section.key = value` run configuration.

use std::path::Path;

use crate::forward::WaveformSpec;
use crate::io::sha256_hex;
use crate::reconstruct::Taper;
use crate::{Error, Result};

/// Reconstruction algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Procedure1,
    Procedure2,
    Intersect,
    ThreeD,
    Isar,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Procedure1 => "procedure1",
            Algorithm::Procedure2 => "procedure2",
            Algorithm::Intersect => "intersect",
            Algorithm::ThreeD => "3d",
            Algorithm::Isar => "isar",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "procedure1" => Algorithm::Procedure1,
            "procedure2" => Algorithm::Procedure2,
            "intersect" => Algorithm::Intersect,
            "3d" => Algorithm::ThreeD,
            "isar" => Algorithm::Isar,
            other => return Err(Error::UnknownAlgorithm(other.to_string())),
        })
    }
}

/// A value that can appear on the right of `=`.
trait ConfigValue: Sized {
    fn parse(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
        if v.is_finite() { Ok(v) } else { Err(format!("`{s}` is not finite")) }
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl ConfigValue for usize {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u64 {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for bool {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("`{s}` is not true or false")),
        }
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for String {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        Ok(s.to_string())
    }
    fn render(&self) -> String {
        self.clone()
    }
}

impl<T: ConfigValue> ConfigValue for Vec<T> {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| T::parse(p.trim())).collect()
    }
    fn render(&self) -> String {
        self.iter().map(|v| v.render()).collect::<Vec<_>>().join(", ")
    }
}

impl ConfigValue for Algorithm {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|e: Error| e.to_string())
    }
    fn render(&self) -> String {
        self.name().to_string()
    }
}

impl ConfigValue for Taper {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rectangular" => Ok(Taper::Rectangular),
            "hann" => Ok(Taper::Hann),
            _ => Err(format!("`{s}` is not rectangular or hann")),
        }
    }
    fn render(&self) -> String {
        match self {
            Taper::Rectangular => "rectangular".into(),
            Taper::Hann => "hann".into(),
        }
    }
}

macro_rules! sections {
    ($( $sec:ident : $Sec:ident { $( $(#[$m:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)? } )*) => {
        $(
            #[derive(Debug, Clone, PartialEq)]
            pub struct $Sec { $( $(#[$m])* pub $field: $ty, )* }

            impl Default for $Sec {
                fn default() -> Self {
                    Self { $( $field: $default, )* }
                }
            }
        )*

        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct RunConfig { $( pub $sec: $Sec, )* }

        impl RunConfig {
            fn set(&mut self, key: &str, value: &str) -> Result<()> {
                let err = |reason: String| Error::Config { key: key.to_string(), reason };
                $( $(
                    if key == concat!(stringify!($sec), ".", stringify!($field)) {
                        self.$sec.$field = ConfigValue::parse(value).map_err(err)?;
                        return Ok(());
                    }
                )* )*
                Err(err("unknown key".into()))
            }

            /// Every key with its rendered value, in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![ $( $( (concat!(stringify!($sec), ".", stringify!($field)), self.$sec.$field.render()), )* )* ]
            }
        }
    };
}

sections! {
    run: RunSection {
        /// Root seed; every random stream derives from it.
        seed: u64 = 1,
    }
    scene: SceneSection {
        extent_m: f64 = 400.0,
        resolution_m: f64 = 0.5,
        reflector_count: usize = 12,
        reflector_side_m: f64 = 3.0,
        /// Reflector heights are drawn from `[0, max_height_m]`.
        max_height_m: f64 = 0.0,
    }
    network: NetworkSection {
        /// Stations per grid side.
        grid_size: usize = 3,
        grid_spacing_m: f64 = 200.0,
        station_height_m: f64 = 25.0,
        antenna_count: usize = 64,
        antenna_spacing_m: f64 = 0.03,
        array_orientation_deg: f64 = 0.0,
        /// One tilt per antenna layer.
        layer_tilts_deg: Vec<f64> = vec![0.0],
        /// Vertical distance between consecutive layers.
        layer_spacing_m: f64 = 0.5,
    }
    waveform: WaveformSection {
        carrier_hz: f64 = 5.0e9,
        subcarriers: usize = 256,
        subcarrier_spacing_hz: f64 = 2.0e6,
    }
    schedule: ScheduleSection {
        slots: usize = 200,
        tx_probability: f64 = 0.05,
        channels: usize = 5,
        max_receive_distance_m: f64 = 400.0,
        noise_power: f64 = 0.0,
    }
    beam: BeamSection {
        open_angle_deg: f64 = 5.0,
        /// Aim points are drawn uniformly in the scene at ground distances
        /// from the transmitter within `[min_aim_distance_m, max_aim_distance_m]`.
        min_aim_distance_m: f64 = 10.0,
        max_aim_distance_m: f64 = 150.0,
    }
    reconstruct: ReconstructSection {
        algorithm: Algorithm = Algorithm::Intersect,
        half_size: usize = 400,
        pixel_spacing_m: f64 = 0.5,
        threshold_db: f64 = 6.0,
        min_relative: f64 = 0.0,
        max_peaks: usize = 0,
        taper: Taper = Taper::Rectangular,
        interpolate_peaks: bool = false,
        /// Zero selects twice the range resolution.
        cluster_radius_m: f64 = 0.0,
        min_support: usize = 2,
        match_radius_m: f64 = 5.0,
        height_planes: usize = 8,
        mask_fraction: f64 = 0.1,
        isar_side: usize = 8,
        isar_spacing_m: f64 = 0.5,
        /// Ground point the voxel grid is centered on.
        isar_center_x_m: f64 = 0.0,
        isar_center_y_m: f64 = 0.0,
        svd_tolerance: f64 = 1e-10,
        isar_max_samples: usize = 2000,
    }
    analyze: AnalyzeSection {
        slice_size: usize = 32,
        slice_angle_deg: f64 = 30.0,
        image_length: usize = 256,
        window_width: usize = 128,
        window_counts: Vec<usize> = vec![4, 8, 16, 32, 64],
        trials: usize = 200,
        /// Empty selects the bundled example channel.
        channel_file: String = String::new(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                key: format!("line {}", n + 1),
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config {
                    key: key.to_string(),
                    reason: "given twice".into(),
                });
            }
            cfg.assign(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn assign(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "reconstruct.algorithm" {
            self.reconstruct.algorithm = value.parse()?;
            return Ok(());
        }
        self.set(key, value)
    }

    /// Applies `key=value` assignments on top of the current values and
    /// revalidates.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, assignments: &[S]) -> Result<()> {
        for a in assignments {
            let a = a.as_ref();
            let (k, v) = a.split_once('=').ok_or_else(|| Error::Config {
                key: a.to_string(),
                reason: "expected `key=value`".into(),
            })?;
            self.assign(k.trim(), v.trim())?;
        }
        self.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text: every key, one per line, in declaration order.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_text().as_bytes())
    }

    pub fn waveform(&self) -> Result<WaveformSpec> {
        WaveformSpec::new(
            self.waveform.carrier_hz,
            self.waveform.subcarriers,
            self.waveform.subcarrier_spacing_hz,
        )
        .map_err(|e| Error::Config {
            key: "waveform".into(),
            reason: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config {
                    key: key.to_string(),
                    reason: reason.to_string(),
                })
            }
        }
        let s = &self.scene;
        check(s.extent_m > 0.0, "scene.extent_m", "must be positive")?;
        check(s.resolution_m > 0.0 && s.resolution_m <= s.extent_m, "scene.resolution_m", "must lie in (0, extent]")?;
        check(s.reflector_side_m > 0.0, "scene.reflector_side_m", "must be positive")?;
        check(s.max_height_m >= 0.0, "scene.max_height_m", "must be nonnegative")?;
        let n = &self.network;
        check(n.grid_size >= 1, "network.grid_size", "must be at least 1")?;
        check(n.grid_spacing_m > 0.0, "network.grid_spacing_m", "must be positive")?;
        check(n.station_height_m > 0.0, "network.station_height_m", "must be positive")?;
        check(n.antenna_count >= 1, "network.antenna_count", "must be at least 1")?;
        check(n.antenna_spacing_m > 0.0, "network.antenna_spacing_m", "must be positive")?;
        check(!n.layer_tilts_deg.is_empty(), "network.layer_tilts_deg", "needs at least one layer")?;
        check(
            n.layer_tilts_deg.iter().all(|t| (0.0..90.0).contains(t)),
            "network.layer_tilts_deg",
            "tilts must lie in [0, 90)",
        )?;
        check(n.layer_spacing_m >= 0.0, "network.layer_spacing_m", "must be nonnegative")?;
        self.waveform()?;
        let sc = &self.schedule;
        check((0.0..=1.0).contains(&sc.tx_probability), "schedule.tx_probability", "must lie in [0, 1]")?;
        check(sc.channels >= 1, "schedule.channels", "must be at least 1")?;
        check(sc.max_receive_distance_m > 0.0, "schedule.max_receive_distance_m", "must be positive")?;
        check(sc.noise_power >= 0.0, "schedule.noise_power", "must be nonnegative")?;
        let b = &self.beam;
        check(b.open_angle_deg > 0.0 && b.open_angle_deg < 180.0, "beam.open_angle_deg", "must lie in (0, 180)")?;
        check(b.min_aim_distance_m >= 0.0, "beam.min_aim_distance_m", "must be nonnegative")?;
        check(b.max_aim_distance_m > b.min_aim_distance_m, "beam.max_aim_distance_m", "must exceed the minimum")?;
        let tilt = (b.max_aim_distance_m / n.station_height_m).atan().to_degrees();
        check(
            tilt + b.open_angle_deg / 2.0 < 90.0,
            "beam.max_aim_distance_m",
            "beam edge would reach the horizon at this distance",
        )?;
        let r = &self.reconstruct;
        check(r.half_size >= 1, "reconstruct.half_size", "must be at least 1")?;
        check(r.pixel_spacing_m > 0.0, "reconstruct.pixel_spacing_m", "must be positive")?;
        check((0.0..=1.0).contains(&r.min_relative), "reconstruct.min_relative", "must lie in [0, 1]")?;
        check(r.cluster_radius_m >= 0.0, "reconstruct.cluster_radius_m", "must be nonnegative")?;
        check(r.min_support >= 1, "reconstruct.min_support", "must be at least 1")?;
        check(r.match_radius_m > 0.0, "reconstruct.match_radius_m", "must be positive")?;
        check(r.height_planes >= 4, "reconstruct.height_planes", "must be at least 4")?;
        check((0.0..=1.0).contains(&r.mask_fraction), "reconstruct.mask_fraction", "must lie in [0, 1]")?;
        check(
            (1..=crate::isar::MAX_SIDE).contains(&r.isar_side),
            "reconstruct.isar_side",
            "must lie in [1, 16]",
        )?;
        check(r.isar_spacing_m > 0.0, "reconstruct.isar_spacing_m", "must be positive")?;
        check(r.svd_tolerance >= 0.0, "reconstruct.svd_tolerance", "must be nonnegative")?;
        check(r.isar_max_samples >= 1, "reconstruct.isar_max_samples", "must be at least 1")?;
        let a = &self.analyze;
        check(a.slice_size >= 2, "analyze.slice_size", "must be at least 2")?;
        check(a.window_width >= 1, "analyze.window_width", "must be at least 1")?;
        check(a.image_length >= 2 * a.window_width, "analyze.image_length", "must be at least twice the window width")?;
        check(
            a.window_counts.len() >= 2 && a.window_counts.iter().all(|&n| n >= 1),
            "analyze.window_counts",
            "needs at least two positive counts",
        )?;
        check(a.trials >= 1, "analyze.trials", "must be at least 1")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_text(), text);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = RunConfig::parse(
            "# headline run\nscene.extent_m = 800 # meters\nreconstruct.algorithm = 3d\nnetwork.layer_tilts_deg = 0, 10\n",
        )
        .unwrap();
        assert_eq!(cfg.scene.extent_m, 800.0);
        assert_eq!(cfg.reconstruct.algorithm, Algorithm::ThreeD);
        assert_eq!(cfg.network.layer_tilts_deg, vec![0.0, 10.0]);
        assert_ne!(cfg.hash(), RunConfig::default().hash());
    }

    #[test]
    fn errors_name_the_key() {
        let e = RunConfig::parse("scene.extent_m = -1").unwrap_err();
        assert!(e.to_string().contains("scene.extent_m"), "{e}");
        let e = RunConfig::parse("scene.bogus = 1").unwrap_err();
        assert!(e.to_string().contains("scene.bogus"), "{e}");
        assert!(matches!(
            RunConfig::parse("reconstruct.algorithm = magic"),
            Err(Error::UnknownAlgorithm(_))
        ));
        assert!(RunConfig::parse("run.seed = 1\nrun.seed = 2").is_err());
        assert!(RunConfig::parse("beam.max_aim_distance_m = 1000").is_err());
    }

    #[test]
    fn overrides_revalidate() {
        let mut cfg = RunConfig::default();
        cfg.apply_overrides(&["run.seed=9", "reconstruct.algorithm = isar"]).unwrap();
        assert_eq!((cfg.run.seed, cfg.reconstruct.algorithm), (9, Algorithm::Isar));
        assert!(cfg.apply_overrides(&["schedule.channels=0"]).is_err());
        assert!(cfg.apply_overrides(&["noequals"]).is_err());
    }
}
