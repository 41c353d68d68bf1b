//! PNG heatmaps with a fixed diverging colormap. The value range is stored
//! in `tEXt` chunks (`vmin`, `vmax`) so images can be interpreted later.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Result, SqgError};
use crate::spectral::Field;

/// Blue (low) through white to red (high).
const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [0.020, 0.188, 0.380]),
    (0.25, [0.263, 0.576, 0.765]),
    (0.5, [0.969, 0.969, 0.969]),
    (0.75, [0.839, 0.376, 0.302]),
    (1.0, [0.404, 0.000, 0.122]),
];

/// RGB for `t ∈ [0, 1]` (clamped).
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.5 } else { t.clamp(0.0, 1.0) };
    let k = STOPS
        .windows(2)
        .position(|w| t <= w[1].0)
        .unwrap_or(STOPS.len() - 2);
    let (t0, c0) = STOPS[k];
    let (t1, c1) = STOPS[k + 1];
    let u = (t - t0) / (t1 - t0);
    let mut out = [0u8; 3];
    for i in 0..3 {
        out[i] = ((c0[i] + u * (c1[i] - c0[i])) * 255.0).round() as u8;
    }
    out
}

/// Symmetric range `[-m, m]`, `m = max|f|` (or `[-1, 1]` for a zero field).
pub fn symmetric_range(f: &Field) -> (f64, f64) {
    let m = f.linf();
    if m > 0.0 {
        (-m, m)
    } else {
        (-1.0, 1.0)
    }
}

/// Writes `f` as an `n × n` RGB image, row 0 at the bottom (`x₂` upward).
pub fn write_png(f: &Field, path: &Path, range: Option<(f64, f64)>) -> Result<()> {
    let (lo, hi) = range.unwrap_or_else(|| symmetric_range(f));
    if !(hi > lo) {
        return Err(SqgError::InvalidParameter(format!(
            "empty colour range [{lo}, {hi}]"
        )));
    }
    let n = f.grid().n();
    let mut data = Vec::with_capacity(n * n * 3);
    for row in (0..n).rev() {
        for col in 0..n {
            data.extend_from_slice(&colormap((f.at(col, row) - lo) / (hi - lo)));
        }
    }
    let png_err = |e: png::EncodingError| SqgError::Png(e.to_string());
    let file = BufWriter::new(File::create(path)?);
    let mut enc = png::Encoder::new(file, n as u32, n as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.add_text_chunk("vmin".into(), format!("{lo:e}"))
        .map_err(png_err)?;
    enc.add_text_chunk("vmax".into(), format!("{hi:e}"))
        .map_err(png_err)?;
    enc.add_text_chunk("colormap".into(), "diverging-bwr".into())
        .map_err(png_err)?;
    let mut w = enc.write_header().map_err(png_err)?;
    w.write_image_data(&data).map_err(png_err)?;
    w.finish().map_err(png_err)?;
    Ok(())
}

/// `(width, height, vmin, vmax)` of an image written by [`write_png`].
pub fn read_png_metadata(path: &Path) -> Result<(u32, u32, f64, f64)> {
    let decoder = png::Decoder::new(std::io::BufReader::new(File::open(path)?));
    let reader = decoder
        .read_info()
        .map_err(|e| SqgError::Png(e.to_string()))?;
    let info = reader.info();
    let get = |key: &str| -> Result<f64> {
        info.uncompressed_latin1_text
            .iter()
            .find(|c| c.keyword == key)
            .and_then(|c| c.text.parse().ok())
            .ok_or_else(|| SqgError::Png(format!("missing '{key}' text chunk")))
    };
    Ok((info.width, info.height, get("vmin")?, get("vmax")?))
}
