//! Prediction interchange file.
//!
//! ```text
//! # nocs9d-predictions v1
//! scene_id,image_id,inst_id,obj_id,r11,r12,r13,r21,r22,r23,r31,r32,r33,tx_mm,ty_mm,tz_mm,sx_mm,sy_mm,sz_mm,rms_mm,inliers,status
//! ```
//!
//! `r..` is the model-to-camera rotation, row-major; `t` the camera-frame
//! position of the box centre and `s` the box extents. `status` is `OK` or
//! `FAILED`; a failed row leaves every field between `obj_id` and `status`
//! empty. `rms_mm` may be empty for methods without a residual. Rows are
//! sorted by `(scene_id, image_id, inst_id)`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{Matrix3, Vector3};
use nocs9d_bop::json::{m_to_mm, mm_to_m};
use nocs9d_core::{Pose9D, Rotation};

pub const VERSION_LINE: &str = "# nocs9d-predictions v1";

pub const COLUMNS: [&str; 22] = [
    "scene_id", "image_id", "inst_id", "obj_id", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33",
    "tx_mm", "ty_mm", "tz_mm", "sx_mm", "sy_mm", "sz_mm", "rms_mm", "inliers", "status",
];

/// `(scene_id, image_id, inst_id)`
pub type InstanceKey = (u32, u32, u32);

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub pose: Pose9D<f64>,
    /// Meters.
    pub rms: Option<f64>,
    pub inliers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub key: InstanceKey,
    pub obj_id: u64,
    pub estimate: Option<Estimate>,
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn record(row: &PredictionRow) -> Vec<String> {
    let (s, i, n) = row.key;
    let mut out = vec![s.to_string(), i.to_string(), n.to_string(), row.obj_id.to_string()];
    match &row.estimate {
        Some(e) => {
            let r = e.pose.rotation().matrix();
            for a in 0..3 {
                for b in 0..3 {
                    out.push(fmt(r[(a, b)]));
                }
            }
            out.extend(e.pose.translation().iter().map(|&v| fmt(m_to_mm(v))));
            out.extend(e.pose.scale().iter().map(|&v| fmt(m_to_mm(v))));
            out.push(e.rms.map(|v| fmt(m_to_mm(v))).unwrap_or_default());
            out.push(e.inliers.to_string());
            out.push("OK".into());
        }
        None => {
            out.extend(std::iter::repeat_n(String::new(), 17));
            out.push("FAILED".into());
        }
    }
    out
}

/// Serializes rows in canonical order.
pub fn to_string(rows: &[PredictionRow]) -> Result<String> {
    let mut sorted: Vec<&PredictionRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.key);
    if let Some(w) = sorted.windows(2).find(|w| w[0].key == w[1].key) {
        bail!("duplicate prediction for instance {:?}", w[0].key);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in sorted {
        w.write_record(record(r))?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok(format!("{VERSION_LINE}\n{body}"))
}

pub fn write(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, to_string(rows)?).with_context(|| format!("writing {}", path.display()))
}

fn parse_row(rec: &csv::StringRecord) -> Result<PredictionRow> {
    let field = |i: usize| rec.get(i).unwrap_or("");
    let int = |i: usize| -> Result<u64> {
        field(i).parse().with_context(|| format!("column {}: expected an integer, got {:?}", COLUMNS[i], field(i)))
    };
    let num = |i: usize| -> Result<f64> {
        let v: f64 = field(i)
            .parse()
            .with_context(|| format!("column {}: expected a number, got {:?}", COLUMNS[i], field(i)))?;
        if !v.is_finite() {
            bail!("column {}: non-finite value", COLUMNS[i]);
        }
        Ok(v)
    };
    let id32 = |i: usize| -> Result<u32> { u32::try_from(int(i)?).with_context(|| format!("{} out of range", COLUMNS[i])) };
    let key = (id32(0)?, id32(1)?, id32(2)?);
    let obj_id = int(3)?;
    let estimate = match field(21) {
        "FAILED" => {
            if let Some(i) = (4..21).find(|&i| !field(i).is_empty()) {
                bail!("FAILED row has a value in column {}", COLUMNS[i]);
            }
            None
        }
        "OK" => {
            let mut r = Matrix3::zeros();
            for a in 0..3 {
                for b in 0..3 {
                    r[(a, b)] = num(4 + 3 * a + b)?;
                }
            }
            let rotation = Rotation::new(r).context("rotation")?;
            let v3 = |i: usize| -> Result<Vector3<f64>> { Ok(Vector3::new(num(i)?, num(i + 1)?, num(i + 2)?).map(mm_to_m)) };
            let pose = Pose9D::new(v3(16)?, rotation, v3(13)?).context("pose")?;
            let rms = match field(19) {
                "" => None,
                _ => Some(mm_to_m(num(19)?)),
            };
            Some(Estimate {
                pose,
                rms,
                inliers: int(20)? as usize,
            })
        }
        other => bail!("status must be OK or FAILED, got {other:?}"),
    };
    Ok(PredictionRow { key, obj_id, estimate })
}

pub fn parse(text: &str, source: &str) -> Result<Vec<PredictionRow>> {
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or("").trim_end_matches('\r');
    if first != VERSION_LINE {
        bail!("{source}: first line must be {VERSION_LINE:?}, got {first:?}");
    }
    let mut rdr = csv::ReaderBuilder::new().from_reader(lines.next().unwrap_or("").as_bytes());
    let header = rdr.headers().with_context(|| format!("{source}: header"))?.clone();
    if header.iter().ne(COLUMNS) {
        bail!("{source}: unexpected columns {:?}", header.iter().collect::<Vec<_>>());
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 3;
        let rec = rec.with_context(|| format!("{source}:{line}"))?;
        rows.push(parse_row(&rec).with_context(|| format!("{source}:{line}"))?);
    }
    Ok(rows)
}

pub fn read(path: &Path) -> Result<Vec<PredictionRow>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, &path.display().to_string())
}
