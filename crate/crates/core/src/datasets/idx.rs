//! Big-endian IDX containers as used by MNIST.
//!
//! Layout: a 4-byte magic (`0x00000803` for 3-D unsigned-byte images,
//! `0x00000801` for 1-D unsigned-byte labels), one big-endian `u32` per
//! dimension, then the raw bytes in row-major order.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` pixels, image-major then row-major.
    pub pixels: Vec<u8>,
}

impl IdxImages {
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

fn read_u32(bytes: &[u8], at: usize, origin: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::parse(origin, "truncated IDX header"))
}

fn check_magic(bytes: &[u8], expected: u32, origin: &Path) -> Result<()> {
    let magic = read_u32(bytes, 0, origin)?;
    if magic != expected {
        return Err(Error::parse(
            origin,
            format!("bad IDX magic 0x{magic:08x}, expected 0x{expected:08x}"),
        ));
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8], origin: &Path) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC, origin)?;
    let count = read_u32(bytes, 4, origin)? as usize;
    let rows = read_u32(bytes, 8, origin)? as usize;
    let cols = read_u32(bytes, 12, origin)? as usize;
    let body = &bytes[16..];
    let need = count * rows * cols;
    if body.len() < need {
        return Err(Error::parse(
            origin,
            format!("IDX body has {} bytes, header needs {need}", body.len()),
        ));
    }
    Ok(IdxImages {
        rows,
        cols,
        pixels: body[..need].to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8], origin: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC, origin)?;
    let count = read_u32(bytes, 4, origin)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::parse(
            origin,
            format!("IDX body has {} bytes, header needs {count}", body.len()),
        ));
    }
    Ok(body[..count].to_vec())
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

pub fn read_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    let path = path.as_ref();
    parse_images(&read_all(path)?, path)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_labels(&read_all(path)?, path)
}

/// Serializes images in the IDX layout.
pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(images.rows as u32).to_be_bytes());
    out.extend_from_slice(&(images.cols as u32).to_be_bytes());
    out.extend_from_slice(&images.pixels);
    out
}

/// Serializes labels in the IDX layout.
pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
