use std::fs;
use std::path::Path;

use super::Image;
use crate::{Error, Result};

/// Reads a P2 (ASCII) or P5 (binary) PGM file.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            if self.data[self.pos] == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedPgm(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| {
                Error::MalformedPgm(format!("bad {what} {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

/// Decodes PGM bytes already in memory.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { data: bytes, pos: 0 };
    let binary = match cur.token() {
        Some(b"P2") => false,
        Some(b"P5") => true,
        Some(other) => {
            return Err(Error::MalformedPgm(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(Error::MalformedPgm("empty file".into())),
    };
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedPgm(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedPgm(format!("maxval {maxval} outside 1..=65535")));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedPgm("dimensions overflow".into()))?;

    let mut pixels = Vec::with_capacity(expected);
    if binary {
        // exactly one whitespace byte separates maxval from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::TruncatedRaster { expected, found: 0 });
        }
        let raster = &bytes[cur.pos + 1..];
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let found = raster.len() / sample_bytes;
        if found < expected {
            return Err(Error::TruncatedRaster { expected, found });
        }
        if sample_bytes == 1 {
            pixels.extend(raster[..expected].iter().map(|&b| b as f64));
        } else {
            pixels.extend(
                raster[..2 * expected]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64),
            );
        }
    } else {
        while pixels.len() < expected {
            let Some(tok) = cur.token() else {
                return Err(Error::TruncatedRaster {
                    expected,
                    found: pixels.len(),
                });
            };
            let v: usize = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    Error::MalformedPgm(format!("bad sample {:?}", String::from_utf8_lossy(tok)))
                })?;
            pixels.push(v as f64);
        }
    }
    if let Some(v) = pixels.iter().find(|&&v| v > maxval as f64) {
        return Err(Error::MalformedPgm(format!("sample {v} exceeds maxval {maxval}")));
    }
    Image::new(width, height, pixels, maxval as f64)
}

/// Encodes an image as PGM. Pixels are clamped to `[0, range_max]` and rounded;
/// maxval is `range_max` rounded to an integer level.
pub fn write_pgm(image: &Image, binary: bool) -> Vec<u8> {
    let maxval = (image.range_max().round() as u32).clamp(1, 65535);
    let levels: Vec<u32> = image
        .pixels()
        .iter()
        .map(|p| p.clamp(0.0, maxval as f64).round() as u32)
        .collect();
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", image.width(), image.height()).into_bytes();
    if binary {
        if maxval < 256 {
            out.extend(levels.iter().map(|&v| v as u8));
        } else {
            for v in levels {
                out.extend_from_slice(&(v as u16).to_be_bytes());
            }
        }
    } else {
        for row in levels.chunks(image.width()) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

pub fn save_pgm(image: &Image, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_pgm(image, binary)).map_err(|e| Error::io(path, e))
}
