//! IDX image and label files (big-endian headers, row-major pixels).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale images stored back to back, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Images {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl Images {
    pub fn len(&self) -> usize {
        if self.rows * self.cols == 0 {
            0
        } else {
            self.pixels.len() / (self.rows * self.cols)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

/// Images with their digit labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledImages {
    pub images: Images,
    pub labels: Vec<u8>,
}

fn be_u32(path: &Path, bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(path, offset as u64, "truncated header"))
}

pub fn parse_images(path: &Path, bytes: &[u8]) -> Result<Images> {
    let magic = be_u32(path, bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(path, 0, format!("bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")));
    }
    let count = be_u32(path, bytes, 4)? as usize;
    let rows = be_u32(path, bytes, 8)? as usize;
    let cols = be_u32(path, bytes, 12)? as usize;
    let need = count
        .checked_mul(rows)
        .and_then(|x| x.checked_mul(cols))
        .ok_or_else(|| Error::format(path, 4, "image dimensions overflow"))?;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!("truncated pixel data: header promises {count} images of {rows}x{cols} ({need} bytes), found {}", body.len()),
        ));
    }
    if body.len() > need {
        return Err(Error::format(path, (16 + need) as u64, "trailing bytes after pixel data"));
    }
    Ok(Images { rows, cols, pixels: body.to_vec() })
}

pub fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(path, bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(path, 0, format!("bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")));
    }
    let count = be_u32(path, bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!("truncated label data: header promises {count} labels, found {}", body.len()),
        ));
    }
    if body.len() > count {
        return Err(Error::format(path, (8 + count) as u64, "trailing bytes after label data"));
    }
    Ok(body.to_vec())
}

pub fn read_images(path: impl AsRef<Path>) -> Result<Images> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_images(path, &bytes)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_labels(path, &bytes)
}

/// Reads an image file and its label file; counts must agree.
pub fn load_mnist(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledImages> {
    let im = read_images(&images)?;
    let lb = read_labels(&labels)?;
    if im.len() != lb.len() {
        return Err(Error::format(
            labels.as_ref(),
            4,
            format!("label count {} does not match image count {}", lb.len(), im.len()),
        ));
    }
    Ok(LabeledImages { images: im, labels: lb })
}

pub fn encode_images(images: &Images) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC, images.len() as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
