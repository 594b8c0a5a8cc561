//! Image files: binary/ASCII PGM, PNG, and the raw float32 sidecar.
//!
//! Sidecar layout (little endian): `b"PRF1"`, `u32` width, `u32` height,
//! `u32` reserved (zero), then `width * height` `f32` values row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

pub const SIDECAR_MAGIC: &[u8; 4] = b"PRF1";
pub const SIDECAR_HEADER_LEN: usize = 16;

/// Reads a grayscale image. Colour PNGs are converted with Rec. 601 luma.
pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        parse_pgm(&bytes).map_err(|reason| Error::UnsupportedFormat {
            path: path.into(),
            reason,
        })
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(path, &bytes)
    } else if bytes.starts_with(SIDECAR_MAGIC) {
        decode_sidecar(&bytes).map_err(|reason| Error::UnsupportedFormat {
            path: path.into(),
            reason,
        })
    } else {
        Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: "expected PGM (P2/P5), PNG, or PRF1 sidecar".into(),
        })
    }
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<Image> {
    let dynimg = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(
        |e| Error::UnsupportedFormat {
            path: path.into(),
            reason: e.to_string(),
        },
    )?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let data: Vec<f64> = if dynimg.color().has_color() {
        log::info!("{}: converting colour input to Rec. 601 luma", path.display());
        dynimg
            .to_rgb32f()
            .pixels()
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    } else if matches!(
        dynimg.color(),
        image::ColorType::L16 | image::ColorType::La16
    ) {
        dynimg
            .to_luma16()
            .pixels()
            .map(|p| p[0] as f64 / 65535.0)
            .collect()
    } else {
        dynimg
            .to_luma8()
            .pixels()
            .map(|p| p[0] as f64 / 255.0)
            .collect()
    };
    Image::from_clamped(w, h, data)
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Image, String> {
    let binary = bytes.starts_with(b"P5");
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed PGM header")?;
    }
    let [w, h, maxval] = header;
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(format!("unsupported PGM header {w}x{h} maxval {maxval}"));
    }
    let n = w * h;
    let scale = maxval as f64;
    let data: Vec<f64> = if binary {
        pos += 1; // single whitespace byte after maxval
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let body = bytes
            .get(pos..pos + need)
            .ok_or("truncated PGM raster")?;
        if wide {
            body.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
                .collect()
        } else {
            body.iter().map(|&b| b as f64 / scale).collect()
        }
    } else {
        let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| "non-ASCII P2 body")?;
        let vals: Vec<f64> = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| t.parse::<f64>().map(|v| v / scale))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| "malformed P2 value")?;
        if vals.len() != n {
            return Err("truncated PGM raster".into());
        }
        vals
    };
    Image::from_clamped(w, h, data).map_err(|e| e.to_string())
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes binary 8-bit PGM (P5).
pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| to_u8(v)));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_png(path: &Path, img: &Image) -> Result<()> {
    let buf: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    image::save_buffer(
        path,
        &buf,
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::UnsupportedFormat {
            path: path.into(),
            reason: other.to_string(),
        },
    })
}

/// Writes PNG or PGM by extension (`.png`, `.pgm`), or the float sidecar for `.prf`.
pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => write_png(path, img),
        Some("pgm") => write_pgm(path, img),
        Some("prf") => write_sidecar(path, img),
        _ => Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: "output extension must be .png, .pgm or .prf".into(),
        }),
    }
}

pub fn encode_sidecar(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(SIDECAR_HEADER_LEN + 4 * img.len());
    out.extend_from_slice(SIDECAR_MAGIC);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &v in img.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn decode_sidecar(bytes: &[u8]) -> std::result::Result<Image, String> {
    if bytes.len() < SIDECAR_HEADER_LEN || &bytes[..4] != SIDECAR_MAGIC {
        return Err("bad sidecar header".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (w, h) = (word(4), word(8));
    let body = &bytes[SIDECAR_HEADER_LEN..];
    if body.len() != 4 * w * h {
        return Err(format!(
            "sidecar body has {} bytes, expected {}",
            body.len(),
            4 * w * h
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Image::new(w, h, data).map_err(|e| e.to_string())
}

pub fn write_sidecar(path: &Path, img: &Image) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_sidecar(img))
        .map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_sidecar(&bytes).map_err(|reason| Error::UnsupportedFormat {
        path: path.into(),
        reason,
    })
}

/// Image files (`.png`, `.pgm`) in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
                .unwrap_or(false)
        })
        .collect();
    out.sort();
    Ok(out)
}
