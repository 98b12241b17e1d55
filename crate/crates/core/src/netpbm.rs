//! Binary netpbm readers/writers: 16-bit PGM (P5) for depth frames and
//! 8-bit PPM (P6) for rendered maps. Byte-exact round trips.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Simple 8-bit RGB raster used for planograms and interaction maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        RgbImage {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn put(&mut self, u: u32, v: u32, rgb: [u8; 3]) {
        let i = ((v * self.width + u) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> [u8; 3] {
        let i = ((v * self.width + u) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

fn parse_header<'a>(bytes: &'a [u8], magic: &str, path: &Path) -> Result<(u32, u32, u32, &'a [u8])> {
    // Header tokens are whitespace separated; '#' starts a comment to EOL.
    let err = |msg: &str| Error::format(format!("{}: {}", path.display(), msg));
    if bytes.len() < 2 || &bytes[0..2] != magic.as_bytes() {
        return Err(err(&format!("missing {} magic", magic)));
    }
    let mut pos = 2usize;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(err("truncated header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text
            .parse::<u32>()
            .map_err(|_| err("header field out of range"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(err("missing raster separator")),
    }
    Ok((fields[0], fields[1], fields[2], &bytes[pos..]))
}

/// Writes a 16-bit big-endian binary PGM (maxval 65535).
pub fn write_pgm16(path: &Path, width: u32, height: u32, data: &[u16]) -> Result<()> {
    assert_eq!(data.len(), (width as usize) * (height as usize));
    let mut out = Vec::with_capacity(data.len() * 2 + 32);
    write!(&mut out, "P5\n{} {}\n65535\n", width, height).unwrap();
    for &sample in data {
        out.extend_from_slice(&sample.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a 16-bit binary PGM; returns (width, height, samples).
pub fn read_pgm16(path: &Path) -> Result<(u32, u32, Vec<u16>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, maxval, raster) = parse_header(&bytes, "P5", path)?;
    if maxval < 256 || maxval > 65535 {
        return Err(Error::format(format!(
            "{}: expected 16-bit maxval, got {}",
            path.display(),
            maxval
        )));
    }
    let n = (width as usize) * (height as usize);
    if raster.len() < n * 2 {
        return Err(Error::format(format!(
            "{}: raster truncated ({} bytes, need {})",
            path.display(),
            raster.len(),
            n * 2
        )));
    }
    let data = raster[..n * 2]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((width, height, data))
}

/// Reads only the dimensions of a 16-bit PGM (cheap validity check).
pub fn read_pgm16_dims(path: &Path) -> Result<(u32, u32)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, _, _) = parse_header(&bytes, "P5", path)?;
    Ok((width, height))
}

/// Writes an 8-bit binary PPM (maxval 255).
pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<()> {
    let mut out = Vec::with_capacity(image.data.len() + 32);
    write!(&mut out, "P6\n{} {}\n255\n", image.width, image.height).unwrap();
    out.extend_from_slice(&image.data);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads an 8-bit binary PPM.
pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, maxval, raster) = parse_header(&bytes, "P6", path)?;
    if maxval != 255 {
        return Err(Error::format(format!(
            "{}: expected maxval 255, got {}",
            path.display(),
            maxval
        )));
    }
    let n = (width as usize) * (height as usize) * 3;
    if raster.len() < n {
        return Err(Error::format(format!(
            "{}: raster truncated",
            path.display()
        )));
    }
    Ok(RgbImage {
        width,
        height,
        data: raster[..n].to_vec(),
    })
}
