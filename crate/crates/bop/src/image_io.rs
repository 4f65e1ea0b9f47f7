//! PNG codecs for depth (16-bit gray), masks (8-bit 0/255), NOCS maps
//! (16-bit RGB) and preview images (8-bit RGB).

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::Vector3;
use nocs9d_core::{DepthMap, Grid, Mask, NocsMap};
use png::{BitDepth, ColorType, Transformations};

use crate::error::{io_err, BopError, Result};

fn png_err(path: &Path, msg: impl ToString) -> BopError {
    BopError::Png {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

struct Decoded {
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    data: Vec<u8>,
}

fn decode(path: &Path, transform: Transformations) -> Result<Decoded> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut dec = png::Decoder::new(BufReader::new(file));
    dec.set_transformations(transform);
    let mut reader = dec.read_info().map_err(|e| png_err(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| png_err(path, "image too large"))?;
    let mut data = vec![0; size];
    let info = reader.next_frame(&mut data).map_err(|e| png_err(path, e))?;
    data.truncate(info.buffer_size());
    Ok(Decoded {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

fn encode(path: &Path, width: usize, height: usize, color: ColorType, depth: BitDepth, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut w = enc.write_header().map_err(|e| png_err(path, e))?;
    w.write_image_data(data).map_err(|e| png_err(path, e))?;
    w.finish().map_err(|e| png_err(path, e))
}

/// Image size from the PNG header alone.
pub fn png_dims(path: &Path) -> Result<(usize, usize)> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = png::Decoder::new(BufReader::new(file))
        .read_info()
        .map_err(|e| png_err(path, e))?;
    let info = reader.info();
    Ok((info.width as usize, info.height as usize))
}

fn u16s(data: &[u8]) -> impl Iterator<Item = u16> + '_ {
    data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]))
}

/// Depth in meters: `value · depth_scale` millimeters.
pub fn read_depth(path: &Path, depth_scale: f64) -> Result<DepthMap<f64>> {
    let d = decode(path, Transformations::IDENTITY)?;
    if d.color != ColorType::Grayscale || d.depth != BitDepth::Sixteen {
        return Err(png_err(path, format!("depth must be 16-bit grayscale, found {:?} {:?}", d.color, d.depth)));
    }
    let data = u16s(&d.data).map(|v| f64::from(v) * depth_scale / 1000.0).collect();
    DepthMap::new(d.width, d.height, data).map_err(|e| png_err(path, e))
}

/// Stores `round(meters · 1000 / depth_scale)`; values beyond the 16-bit
/// range are an error.
pub fn write_depth(path: &Path, depth: &DepthMap<f64>, depth_scale: f64) -> Result<()> {
    let mut bytes = Vec::with_capacity(depth.data().len() * 2);
    for &m in depth.data() {
        let q = (m * 1000.0 / depth_scale).round();
        if q > f64::from(u16::MAX) {
            return Err(png_err(path, format!("depth {m} m exceeds the 16-bit range at scale {depth_scale}")));
        }
        bytes.extend_from_slice(&(q as u16).to_be_bytes());
    }
    encode(path, depth.width(), depth.height(), ColorType::Grayscale, BitDepth::Sixteen, &bytes)
}

/// Any non-zero gray level is inside the mask.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let d = decode(path, Transformations::EXPAND | Transformations::STRIP_16)?;
    let channels = match d.color {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        other => return Err(png_err(path, format!("unsupported mask color type {other:?}"))),
    };
    let data = d.data.chunks_exact(channels).map(|px| px[0] != 0).collect();
    Grid::from_vec(d.width, d.height, data).map_err(|e| png_err(path, e))
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    let bytes: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode(path, mask.width(), mask.height(), ColorType::Grayscale, BitDepth::Eight, &bytes)
}

/// Quantizes one NOCS channel to 16 bits.
pub fn quantize(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// NOCS pixels are `value / 65535` per channel; all-zero pixels are invalid.
pub fn read_nocs(path: &Path) -> Result<NocsMap<f64>> {
    let d = decode(path, Transformations::IDENTITY)?;
    if d.color != ColorType::Rgb || d.depth != BitDepth::Sixteen {
        return Err(png_err(path, format!("NOCS map must be 16-bit RGB, found {:?} {:?}", d.color, d.depth)));
    }
    let raw: Vec<u16> = u16s(&d.data).collect();
    let mut values = Vec::with_capacity(d.width * d.height);
    let mut valid = Vec::with_capacity(d.width * d.height);
    for px in raw.chunks_exact(3) {
        valid.push(px.iter().any(|&c| c != 0));
        values.push(Vector3::from_fn(|i, _| f64::from(px[i]) / 65535.0));
    }
    let values = Grid::from_vec(d.width, d.height, values).map_err(|e| png_err(path, e))?;
    let valid = Grid::from_vec(d.width, d.height, valid).map_err(|e| png_err(path, e))?;
    NocsMap::new(values, valid).map_err(|e| png_err(path, e))
}

/// Writes `round(v · 65535)` per channel. Invalid pixels are `(0, 0, 0)`;
/// a valid pixel that would quantize to all zeros is stored as `(0, 0, 1)`
/// so it stays valid.
pub fn write_nocs(path: &Path, nocs: &NocsMap<f64>) -> Result<()> {
    let (w, h) = nocs.dims();
    let mut bytes = Vec::with_capacity(w * h * 6);
    for v in 0..h {
        for u in 0..w {
            let mut q = [0u16; 3];
            if let Some(p) = nocs.get(u, v) {
                q = [quantize(p.x), quantize(p.y), quantize(p.z)];
                if q == [0, 0, 0] {
                    q[2] = 1;
                }
            }
            for c in q {
                bytes.extend_from_slice(&c.to_be_bytes());
            }
        }
    }
    encode(path, w, h, ColorType::Rgb, BitDepth::Sixteen, &bytes)
}

/// 8-bit RGB, row-major, 3 bytes per pixel.
pub fn write_rgb(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    if rgb.len() != width * height * 3 {
        return Err(png_err(path, format!("expected {} RGB bytes, got {}", width * height * 3, rgb.len())));
    }
    encode(path, width, height, ColorType::Rgb, BitDepth::Eight, rgb)
}

pub fn read_rgb(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let d = decode(path, Transformations::EXPAND | Transformations::STRIP_16)?;
    let rgb = match d.color {
        ColorType::Rgb => d.data,
        ColorType::Rgba => d.data.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        ColorType::Grayscale => d.data.iter().flat_map(|&g| [g, g, g]).collect(),
        ColorType::GrayscaleAlpha => d.data.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        other => return Err(png_err(path, format!("unsupported color type {other:?}"))),
    };
    Ok((d.width, d.height, rgb))
}
