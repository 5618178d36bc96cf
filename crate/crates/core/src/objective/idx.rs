//! IDX (MNIST-style) image and label files.
//!
//! Images: magic `0x00000803`, then big-endian `u32` count, rows, cols and
//! `count * rows * cols` unsigned bytes. Labels: magic `0x00000801`, count,
//! then one byte per label.

use std::path::Path;

use crate::error::{Error, Result};
use crate::objective::data::Dataset;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn u32(&mut self) -> Result<u32> {
        let raw = self.take(4)?;
        Ok(u32::from_be_bytes([raw[0], raw[1], raw[2], raw[3]]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Idx(format!(
                    "{} truncated: wanted {n} bytes at offset {}, file has {}",
                    self.what,
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

/// Pixels scaled to `[0, 1]`, row-major per image; returns `(pixels, rows * cols)`.
pub fn parse_images(bytes: &[u8]) -> Result<(Vec<f32>, usize, usize)> {
    let mut r = Reader {
        bytes,
        pos: 0,
        what: "image file",
    };
    let magic = r.u32()?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Idx(format!(
            "image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let count = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let pixels = r.take(count * rows * cols)?;
    Ok((
        pixels.iter().map(|&b| b as f32 / 255.0).collect(),
        count,
        rows * cols,
    ))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u32>> {
    let mut r = Reader {
        bytes,
        pos: 0,
        what: "label file",
    };
    let magic = r.u32()?;
    if magic != LABEL_MAGIC {
        return Err(Error::Idx(format!(
            "label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let count = r.u32()? as usize;
    Ok(r.take(count)?.iter().map(|&b| b as u32).collect())
}

pub fn parse_idx(images: &[u8], labels: &[u8], classes: usize) -> Result<Dataset> {
    let (pixels, count, features) = parse_images(images)?;
    let labels = parse_labels(labels)?;
    if labels.len() != count {
        return Err(Error::Idx(format!(
            "{count} images but {} labels",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y as usize >= classes) {
        return Err(Error::Idx(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    if features == 0 {
        return Err(Error::Idx("images have zero pixels".into()));
    }
    Dataset::new(pixels, labels, features, classes)
}

pub fn load_idx(
    image_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
    classes: usize,
) -> Result<Dataset> {
    let images =
        std::fs::read(image_path.as_ref()).map_err(|e| Error::io_at(image_path.as_ref(), e))?;
    let labels =
        std::fs::read(label_path.as_ref()).map_err(|e| Error::io_at(label_path.as_ref(), e))?;
    parse_idx(&images, &labels, classes)
}

/// Serializes images (bytes) and labels into IDX files' contents.
pub fn encode_idx(
    pixels: &[u8],
    count: usize,
    rows: usize,
    cols: usize,
    labels: &[u8],
) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGE_MAGIC, count as u32, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend_from_slice(pixels);
    let mut lbl = Vec::with_capacity(8 + labels.len());
    for v in [LABEL_MAGIC, labels.len() as u32] {
        lbl.extend_from_slice(&v.to_be_bytes());
    }
    lbl.extend_from_slice(labels);
    (img, lbl)
}
