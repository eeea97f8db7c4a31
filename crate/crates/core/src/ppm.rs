//! Binary (P6) and ASCII (P3) PPM images with 8-bit channels.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major RGB pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format("image must have at least one pixel".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch(pixels.len(), width * height));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Result<Self> {
        let pixels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(&self.encode())?;
        out.flush()?;
        Ok(())
    }

    /// P6 encoding with maxval 255.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.pixels.len());
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    /// Decodes P6 or P3. Samples with a maxval below 255 are rescaled.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let binary = match magic.as_str() {
            "P6" => true,
            "P3" => false,
            other => return Err(Error::Format(format!("unsupported magic `{other}`"))),
        };
        let width = cur.number()?;
        let height = cur.number()?;
        let maxval = cur.number()?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format(format!("unsupported maxval {maxval}")));
        }
        let count = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
        let samples: Vec<usize> = if binary {
            // a single whitespace byte separates the header from the raster
            let start = cur.pos + 1;
            let raster = bytes
                .get(start..start + count)
                .ok_or_else(|| Error::Format("truncated raster".into()))?;
            raster.iter().map(|&b| b as usize).collect()
        } else {
            (0..count).map(|_| cur.number()).collect::<Result<_>>()?
        };
        if let Some(&bad) = samples.iter().find(|&&s| s > maxval) {
            return Err(Error::Format(format!("sample {bad} exceeds maxval {maxval}")));
        }
        let scale = |s: usize| -> u8 {
            if maxval == 255 {
                s as u8
            } else {
                ((s * 255 + maxval / 2) / maxval) as u8
            }
        };
        let pixels = samples.chunks_exact(3).map(|c| [scale(c[0]), scale(c[1]), scale(c[2])]).collect();
        Self::new(width, height, pixels)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn token(&mut self) -> Result<String> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("unexpected end of file".into())),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| Error::Format(format!("expected a number, found `{t}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p6_round_trip() {
        let img = RgbImage::from_fn(3, 2, |x, y| [x as u8 * 80, y as u8 * 200, 7]).unwrap();
        assert_eq!(RgbImage::decode(&img.encode()).unwrap(), img);
    }

    #[test]
    fn p3_with_comments() {
        let text = b"P3\n# a comment\n2 1\n255\n255 0 0  0 # inline\n 255 10\n";
        let img = RgbImage::decode(text).unwrap();
        assert_eq!(img.pixels(), &[[255, 0, 0], [0, 255, 10]]);
    }

    #[test]
    fn maxval_rescaled() {
        let img = RgbImage::decode(b"P3 1 1 15 15 0 7").unwrap();
        assert_eq!(img.pixels(), &[[255, 0, 119]]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RgbImage::decode(b"P5 1 1 255 0"), Err(Error::Format(_))));
        assert!(matches!(RgbImage::decode(b"P6 2 2 255\n\x00\x00"), Err(Error::Format(_))));
        assert!(matches!(RgbImage::decode(b"P3 1 1 255 0 0 300"), Err(Error::Format(_))));
        assert!(matches!(RgbImage::decode(b"P3 0 1 255"), Err(Error::Format(_))));
    }
}
