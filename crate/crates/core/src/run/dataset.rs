//! On-disk dataset layout.
//!
//! ```text
//! <dir>/config.txt            canonical config
//! <dir>/reflectors.csv        x,y,side,magnitude,height
//! <dir>/scene.pgm             ground-truth magnitude
//! <dir>/patches/patch_NNNNN.csv
//! <dir>/manifest.txt
//! ```
//!
//! A patch file starts with `# key = value` metadata lines followed by a CSV
//! table `antenna,subcarrier,re,im`; samples that are exactly zero are
//! omitted. Floats are written in shortest round-trip form so reading a
//! patch back reproduces it bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::simulate::RecordedPatch;
use crate::forward::{ArraySnapshot, MeasurementPatch, WaveformSpec};
use crate::geometry::{EllipseFootprint, GroundPoint};
use crate::io::{parse_f64, sha256_file};
use crate::scene::ReflectorSpec;
use crate::{Complex64, Error, Result};

pub const MANIFEST: &str = "manifest.txt";
pub const PATCH_DIR: &str = "patches";

pub fn patch_file_name(index: usize) -> String {
    format!("{PATCH_DIR}/patch_{index:05}.csv")
}

fn point(p: &GroundPoint) -> String {
    format!("{:?}, {:?}, {:?}", p.x, p.y, p.z)
}

pub fn write_patch(path: &Path, rec: &RecordedPatch) -> Result<()> {
    let p = &rec.patch;
    let a = &p.rx_array;
    let f = &p.footprint;
    let w = &p.waveform;
    let mut out = String::new();
    let mut meta = |k: &str, v: String| out.push_str(&format!("# {k} = {v}\n"));
    meta("tx_id", p.tx_id.to_string());
    meta("rx_id", p.rx_id.to_string());
    meta("slot", rec.slot.to_string());
    meta("channel", rec.channel.to_string());
    meta("layer", rec.layer.to_string());
    meta("tilt", format!("{:?}", rec.tilt));
    meta("tx_position", point(&p.tx_position));
    meta("antenna_spacing", format!("{:?}", a.antenna_spacing));
    meta("orientation", format!("{:?}", a.orientation));
    meta("antenna_count", a.len().to_string());
    for (i, q) in a.antenna_positions.iter().enumerate() {
        meta(&format!("antenna.{i}"), point(q));
    }
    meta(
        "footprint",
        format!(
            "{}, {:?}, {:?}, {:?}, {:?}",
            point(&f.center),
            f.eccentricity,
            f.semi_major,
            f.semi_minor,
            f.major_axis_azimuth
        ),
    );
    meta(
        "waveform",
        format!("{:?}, {}, {:?}", w.carrier_frequency, w.subcarrier_count, w.subcarrier_spacing),
    );
    out.push_str("antenna,subcarrier,re,im\n");
    for ((l, m), v) in p.samples.indexed_iter() {
        if v.re != 0.0 || v.im != 0.0 {
            out.push_str(&format!("{l},{m},{:?},{:?}\n", v.re, v.im));
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_patch(path: &Path) -> Result<RecordedPatch> {
    let text = fs::read_to_string(path)?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut meta = BTreeMap::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else { break };
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| malformed(format!("bad metadata line {line:?}")))?;
        meta.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| meta.get(k).ok_or_else(|| malformed(format!("missing `{k}`")));
    let int = |k: &str| -> Result<usize> {
        get(k)?.parse().map_err(|_| malformed(format!("`{k}` is not an integer")))
    };
    let num = |k: &str| -> Result<f64> { parse_f64(path, k, get(k)?) };
    let list = |k: &str| -> Result<Vec<f64>> { get(k)?.split(',').map(|s| parse_f64(path, k, s)).collect() };
    let pt = |k: &str| -> Result<GroundPoint> {
        match list(k)?[..] {
            [x, y, z] => Ok(GroundPoint::new(x, y, z)),
            _ => Err(malformed(format!("`{k}` needs three coordinates"))),
        }
    };

    let count = int("antenna_count")?;
    let antenna_positions = (0..count).map(|i| pt(&format!("antenna.{i}"))).collect::<Result<Vec<_>>>()?;
    let layer = int("layer")?;
    let tilt = num("tilt")?;
    let rx_array = ArraySnapshot {
        antenna_positions,
        antenna_spacing: num("antenna_spacing")?,
        orientation: num("orientation")?,
        layer,
        tilt,
    };
    let footprint = match list("footprint")?[..] {
        [x, y, z, e, a, b, az] => EllipseFootprint {
            center: GroundPoint::new(x, y, z),
            eccentricity: e,
            semi_major: a,
            semi_minor: b,
            major_axis_azimuth: az,
        },
        _ => return Err(malformed("`footprint` needs seven values".into())),
    };
    let waveform = match list("waveform")?[..] {
        [fc, m, df] if m >= 1.0 && m.fract() == 0.0 => WaveformSpec::new(fc, m as usize, df)?,
        _ => return Err(malformed("`waveform` needs carrier, count, spacing".into())),
    };
    let mut patch = MeasurementPatch::from_array(
        int("tx_id")?,
        pt("tx_position")?,
        int("rx_id")?,
        rx_array,
        footprint,
        waveform,
    )?;

    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let (na, m) = patch.samples.dim();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(malformed(format!("sample row has {} fields", rec.len())));
        }
        let l: usize = rec[0].parse().map_err(|_| malformed(format!("bad antenna index {:?}", &rec[0])))?;
        let k: usize = rec[1].parse().map_err(|_| malformed(format!("bad subcarrier index {:?}", &rec[1])))?;
        if l >= na || k >= m {
            return Err(malformed(format!("sample ({l}, {k}) outside {na}x{m}")));
        }
        patch.samples[(l, k)] = Complex64::new(parse_f64(path, "re", &rec[2])?, parse_f64(path, "im", &rec[3])?);
    }
    Ok(RecordedPatch {
        slot: int("slot")?,
        channel: int("channel")?,
        layer,
        tilt,
        patch,
    })
}

pub fn write_reflectors(path: &Path, reflectors: &[ReflectorSpec]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "side", "magnitude", "height"])?;
    for r in reflectors {
        w.write_record(&[
            format!("{:?}", r.center.x),
            format!("{:?}", r.center.y),
            format!("{:?}", r.side),
            format!("{:?}", r.magnitude),
            format!("{:?}", r.height),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reflectors(path: &Path) -> Result<Vec<ReflectorSpec>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                reason: format!("reflector row has {} fields", rec.len()),
            });
        }
        let v = |i: usize, name: &str| parse_f64(path, name, &rec[i]);
        out.push(ReflectorSpec {
            center: GroundPoint::ground(v(0, "x")?, v(1, "y")?),
            side: v(2, "side")?,
            magnitude: v(3, "magnitude")?,
            height: v(4, "height")?,
        });
    }
    Ok(out)
}

/// Ordered `key = value` record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Records the checksum of `dir/rel`.
    pub fn artifact(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let sum = sha256_file(&dir.join(rel))?;
        self.push(format!("artifact.{rel}"), sum);
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST);
        fs::write(&path, self.to_text())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut m = Manifest::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Malformed {
                path: path.to_path_buf(),
                reason: format!("bad manifest line {line:?}"),
            })?;
            m.push(k.trim(), v.trim());
        }
        Ok(m)
    }
}

/// One-line geometry summary of a patch for the manifest.
pub fn patch_summary(file: &str, rec: &RecordedPatch) -> String {
    let p = &rec.patch;
    let c = p.footprint.center;
    let d = (p.rx_position.x - c.x).hypot(p.rx_position.y - c.y);
    format!(
        "file={file} slot={} channel={} tx={} rx={} layer={} footprint_center={:?},{:?} rx_distance={:?} silent={}",
        rec.slot,
        rec.channel,
        p.tx_id,
        p.rx_id,
        rec.layer,
        c.x,
        c.y,
        d,
        rec.is_silent()
    )
}

/// Parses `key=value` fields of a [`patch_summary`] line.
pub fn summary_field<'a>(summary: &'a str, key: &str) -> Option<&'a str> {
    summary
        .split_whitespace()
        .filter_map(|f| f.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

/// Patch files listed by the manifest in `dir`, in order.
pub fn listed_patches(dir: &Path) -> Result<Vec<PathBuf>> {
    let path = dir.join(MANIFEST);
    if !path.is_file() {
        return Err(Error::MissingDataset(dir.to_path_buf()));
    }
    let manifest = Manifest::read(&path)?;
    let mut out = Vec::new();
    for (k, v) in &manifest.entries {
        if k.starts_with("patch.") {
            let file = summary_field(v, "file").ok_or_else(|| Error::Malformed {
                path: path.clone(),
                reason: format!("{k} has no file"),
            })?;
            out.push(dir.join(file));
        }
    }
    Ok(out)
}
