//! Binary greyscale (P5, 8-bit) images.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    /// Scales `values` so that the largest maps to 255; an all-zero grid stays black.
    pub fn from_max_normalized<T: Scalar>(width: usize, height: usize, values: &[T]) -> Self {
        assert_eq!(values.len(), width * height);
        let max = values.iter().copied().fold(T::zero(), T::max);
        let pixels = values
            .iter()
            .map(|&v| {
                if max > T::zero() {
                    (v / max * T::of(255.0)).round().to_f64_lossy().clamp(0.0, 255.0) as u8
                } else {
                    0
                }
            })
            .collect();
        Self {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn put(&mut self, x: i64, y: i64, v: u8) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.pixels[y as usize * self.width + x as usize] = v;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Square outline of side `2 * half + 1` centered on (cx, cy).
    pub fn draw_box(&mut self, cx: i64, cy: i64, half: i64, v: u8) {
        for d in -half..=half {
            self.put(cx + d, cy - half, v);
            self.put(cx + d, cy + half, v);
            self.put(cx - half, cy + d, v);
            self.put(cx + half, cy + d, v);
        }
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let bad = |m: &str| Error::Parse {
            line: 0,
            msg: format!("pgm: {m}"),
        };
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("short header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(bad("only 8-bit P5 supported"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
        let pixels = bytes.get(pos..pos + width * height).ok_or_else(|| bad("short body"))?;
        Ok(Self {
            width,
            height,
            pixels: pixels.to_vec(),
        })
    }
}
