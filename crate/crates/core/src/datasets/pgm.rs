//! Minimal reader for 8- and 16-bit grayscale PGM (binary `P5` and ASCII
//! `P2`), used for background images.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities scaled to `[0, 1]`.
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, origin: &Path) -> Result<usize> {
        let tok = self
            .next()
            .ok_or_else(|| Error::parse(origin, "truncated PGM header"))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(origin, "bad number in PGM header"))
    }
}

pub fn parse_pgm(bytes: &[u8], origin: &Path) -> Result<GrayImage> {
    let mut tokens = Tokens { bytes, pos: 0 };
    let magic = tokens
        .next()
        .ok_or_else(|| Error::parse(origin, "empty PGM"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(Error::parse(origin, "not a grayscale PGM (P2/P5)")),
    };
    let width = tokens.number(origin)?;
    let height = tokens.number(origin)?;
    let maxval = tokens.number(origin)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(origin, format!("invalid maxval {maxval}")));
    }
    let n = width * height;
    let scale = 1.0 / maxval as f64;
    let pixels = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = tokens.pos + 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let raster = bytes
            .get(start..start + need)
            .ok_or_else(|| Error::parse(origin, "truncated PGM raster"))?;
        if wide {
            raster
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 * scale)
                .collect()
        } else {
            raster.iter().map(|&b| b as f64 * scale).collect()
        }
    } else {
        (0..n)
            .map(|_| tokens.number(origin).map(|v| v.min(maxval) as f64 * scale))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, path)
}

/// Binary `P5` encoding with maxval 255; intensities are clamped to `[0, 1]`.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(
        image
            .pixels
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}
