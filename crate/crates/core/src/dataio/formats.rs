//! On-disk formats.
//!
//! Raw depth (`.sfd`): magic `SFD1`, height and width as u32 LE, then
//! height·width f32 LE values in row-major order.
//!
//! Raw features (`.sff`): magic `SFF1`, height, width and channels as u32 LE,
//! then height·width·channels f32 LE values, channels interleaved per pixel.
//!
//! 16-bit depth (`.png`): single-channel 16-bit grayscale, value =
//! round(depth·1000), 0 marks a missing measurement.
//!
//! Sparse sets: text, header `sparse v1 <H> <W> <n>`, then one
//! `row col depth` line per entry.

use std::fs;
use std::path::Path;

use image::{ImageBuffer, Luma};

use super::FormatError;
use crate::basis::FeatureMap;
use crate::completion::{DepthMap, SparseDepth, SparseEntry};
use crate::error::{Error, Result};
use crate::grid::DenseGrid;

pub const DEPTH_MAGIC: &[u8; 4] = b"SFD1";
pub const FEATURE_MAGIC: &[u8; 4] = b"SFF1";
/// Meters per unit in 16-bit depth images.
pub const DEPTH_PNG_SCALE: f64 = 1.0 / 1000.0;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads before decoding so a missing file is an I/O error, not a codec one.
fn decode_image(path: &Path) -> Result<image::DynamicImage> {
    let bytes = read(path)?;
    image::load_from_memory(&bytes)
        .map_err(|e| FormatError::Image(format!("{}: {e}", path.display())).into())
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn encode_raw(magic: &[u8; 4], dims: &[usize], values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * dims.len() + 4 * values.len());
    out.extend_from_slice(magic);
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Parses header dims and the f32 payload.
fn decode_raw(
    bytes: &[u8],
    magic: &[u8; 4],
    ndims: usize,
) -> Result<(Vec<usize>, Vec<f64>), FormatError> {
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(FormatError::MalformedHeader(format!(
            "need {header} header bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != magic {
        return Err(FormatError::MalformedHeader(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    if dims.contains(&0) {
        return Err(FormatError::MalformedHeader(format!(
            "zero dimension in {dims:?}"
        )));
    }
    let expected = dims.iter().product::<usize>() * 4;
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(FormatError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(FormatError::TrailingBytes(payload.len() - expected));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((dims, values))
}

/// Writes a depth map; `.png` selects the 16-bit millimeter format,
/// anything else the raw f32 layout.
pub fn save_depth(map: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_png(path) {
        return save_depth_png(map, path);
    }
    write(
        path,
        &encode_raw(DEPTH_MAGIC, &[map.height(), map.width()], map.values()),
    )
}

pub fn encode_depth(map: &DepthMap) -> Vec<u8> {
    encode_raw(DEPTH_MAGIC, &[map.height(), map.width()], map.values())
}

pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    if is_png(path) {
        return load_depth_png(path);
    }
    let (dims, values) = decode_raw(&read(path)?, DEPTH_MAGIC, 2)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite.into());
    }
    DepthMap::new(dims[0], dims[1], values)
}

fn save_depth_png(map: &DepthMap, path: &Path) -> Result<()> {
    let (w, h) = (map.width() as u32, map.height() as u32);
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w, h, |x, y| {
        let d = map.get(y as usize, x as usize);
        let q = (d / DEPTH_PNG_SCALE).round();
        Luma([q.clamp(0.0, u16::MAX as f64) as u16])
    });
    buf.save(path)
        .map_err(|e| FormatError::Image(format!("{}: {e}", path.display())).into())
}

fn load_depth_png(path: &Path) -> Result<DepthMap> {
    let img = decode_image(path)?;
    let luma = img.to_luma16();
    let (w, h) = luma.dimensions();
    let values = luma
        .pixels()
        .map(|p| p.0[0] as f64 * DEPTH_PNG_SCALE)
        .collect();
    DepthMap::new(h as usize, w as usize, values)
}

pub fn save_features(features: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    let g = features.grid();
    write(
        path.as_ref(),
        &encode_raw(
            FEATURE_MAGIC,
            &[g.height(), g.width(), g.channels()],
            g.as_slice(),
        ),
    )
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let (dims, values) = decode_raw(&read(path.as_ref())?, FEATURE_MAGIC, 3)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite.into());
    }
    FeatureMap::new(DenseGrid::new(dims[0], dims[1], dims[2], values)?)
}

/// Loads features and checks they match the expected resolution.
pub fn load_features_for(
    path: impl AsRef<Path>,
    height: usize,
    width: usize,
) -> Result<FeatureMap> {
    let f = load_features(path)?;
    if (f.height(), f.width()) != (height, width) {
        return Err(Error::DimensionMismatch(format!(
            "feature map is {}x{} but the image is {height}x{width}",
            f.height(),
            f.width()
        )));
    }
    Ok(f)
}

pub fn format_sparse(sparse: &SparseDepth) -> String {
    let mut s = format!(
        "sparse v1 {} {} {}\n",
        sparse.height(),
        sparse.width(),
        sparse.len()
    );
    for e in sparse.entries() {
        s.push_str(&format!("{} {} {}\n", e.row, e.col, e.depth));
    }
    s
}

pub fn parse_sparse(text: &str) -> Result<SparseDepth> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| FormatError::MalformedHeader("empty sparse file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "sparse" || fields[1] != "v1" {
        return Err(FormatError::MalformedHeader(format!("bad sparse header {header:?}")).into());
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| FormatError::MalformedHeader(format!("bad number {s:?} in header")))
    };
    let (h, w, n) = (num(fields[2])?, num(fields[3])?, num(fields[4])?);

    let mut entries = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || FormatError::MalformedRecord {
            line: i + 2,
            text: line.to_string(),
        };
        if parts.len() != 3 {
            return Err(bad().into());
        }
        let row = parts[0].parse().map_err(|_| bad())?;
        let col = parts[1].parse().map_err(|_| bad())?;
        let depth = parts[2].parse().map_err(|_| bad())?;
        entries.push(SparseEntry { row, col, depth });
    }
    if entries.len() != n {
        return Err(FormatError::TruncatedPayload {
            expected: n,
            found: entries.len(),
        }
        .into());
    }
    SparseDepth::new(h, w, entries)
}

pub fn save_sparse(sparse: &SparseDepth, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), format_sparse(sparse).as_bytes())
}

pub fn load_sparse(path: impl AsRef<Path>) -> Result<SparseDepth> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| FormatError::MalformedHeader("sparse file is not UTF-8".into()))?;
    parse_sparse(&text)
}

/// Guide image in [0, 1]; color files give three channels, grayscale one.
/// Files with the `.sff` feature layout are read directly as a grid.
pub fn load_image(path: impl AsRef<Path>) -> Result<DenseGrid> {
    let path = path.as_ref();
    if path.extension().and_then(|e| e.to_str()) == Some("sff") {
        return Ok(load_features(path)?.into_grid());
    }
    let img = decode_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb32f();
        DenseGrid::new(h, w, 3, rgb.into_raw().into_iter().map(f64::from).collect())
    } else {
        let l = img.to_luma32f();
        DenseGrid::new(h, w, 1, l.into_raw().into_iter().map(f64::from).collect())
    }
}

/// Writes an 8-bit image; channels 1 or 3, values clamped to [0, 1].
pub fn save_image(grid: &DenseGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (grid.width() as u32, grid.height() as u32);
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let res = match grid.channels() {
        1 => ImageBuffer::<Luma<u8>, _>::from_fn(w, h, |x, y| {
            Luma([q(grid.get(y as usize, x as usize, 0))])
        })
        .save(path),
        3 => ImageBuffer::<image::Rgb<u8>, _>::from_fn(w, h, |x, y| {
            let p = grid.pixel(y as usize, x as usize);
            image::Rgb([q(p[0]), q(p[1]), q(p[2])])
        })
        .save(path),
        c => {
            return Err(Error::InvalidArgument(format!(
                "cannot save a {c}-channel image"
            )))
        }
    };
    res.map_err(|e| FormatError::Image(format!("{}: {e}", path.display())).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_header_errors_are_distinct() {
        let map = DepthMap::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let bytes = encode_depth(&map);
        assert_eq!(bytes.len(), 12 + 24);
        assert_eq!(&bytes[..4], b"SFD1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());

        assert!(matches!(
            decode_raw(&bytes[..6], DEPTH_MAGIC, 2),
            Err(FormatError::MalformedHeader(_))
        ));
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(
            decode_raw(&wrong, DEPTH_MAGIC, 2),
            Err(FormatError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_raw(&bytes[..bytes.len() - 1], DEPTH_MAGIC, 2),
            Err(FormatError::TruncatedPayload {
                expected: 24,
                found: 23
            })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            decode_raw(&long, DEPTH_MAGIC, 2),
            Err(FormatError::TrailingBytes(1))
        ));
        let (dims, values) = decode_raw(&bytes, DEPTH_MAGIC, 2).unwrap();
        assert_eq!(dims, vec![2, 3]);
        assert_eq!(values, map.values());
    }

    #[test]
    fn sparse_text() {
        let s = SparseDepth::new(
            4,
            5,
            vec![
                SparseEntry {
                    row: 3,
                    col: 0,
                    depth: 1.25,
                },
                SparseEntry {
                    row: 0,
                    col: 4,
                    depth: 0.1 + 0.2,
                },
            ],
        )
        .unwrap();
        let text = format_sparse(&s);
        assert!(text.starts_with("sparse v1 4 5 2\n3 0 1.25\n"));
        assert_eq!(parse_sparse(&text).unwrap(), s);
        assert!(parse_sparse("sparse v2 4 5 0\n").is_err());
        assert!(parse_sparse("sparse v1 4 5 2\n1 1 1.0\n").is_err());
        assert!(matches!(
            parse_sparse("sparse v1 4 5 1\n1 x 1.0\n"),
            Err(Error::Format(FormatError::MalformedRecord { line: 2, .. }))
        ));
        assert!(matches!(
            parse_sparse("sparse v1 4 5 1\n9 1 1.0\n"),
            Err(Error::OutOfBounds(_))
        ));
    }
}
