//! Netpbm grayscale images: P2 and P5 input, 16-bit P5 output. Pixel values map to [0, 1].

use crate::error::{Error, Result};
use crate::tensor::{Image, Tensor4};
use std::fs;
use std::path::Path;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Splits the header into `count` whitespace-separated tokens, skipping comments; returns
/// the tokens and the offset just past the single whitespace byte that ends the header.
fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(parse_err("truncated Netpbm header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    Ok((tokens, i + 1))
}

fn number(tok: &str, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(format!("bad {what} '{tok}' in Netpbm header")))
}

/// Decodes a P2 or P5 graymap.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let (head, offset) = header_tokens(bytes, 4)?;
    let (w, h, maxval) = (number(&head[1], "width")?, number(&head[2], "height")?, number(&head[3], "maxval")?);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(parse_err(format!("unsupported Netpbm geometry {w}x{h}, maxval {maxval}")));
    }
    let scale = 1.0 / maxval as f64;
    let raw: Vec<usize> = match head[0].as_str() {
        "P2" => {
            let text = std::str::from_utf8(bytes.get(offset.min(bytes.len())..).unwrap_or(&[]))
                .map_err(|_| parse_err("P2 body is not ASCII"))?;
            text.split_ascii_whitespace().take(w * h).map(|t| number(t, "sample")).collect::<Result<_>>()?
        }
        "P5" => {
            let body = bytes.get(offset..).unwrap_or(&[]);
            if maxval < 256 {
                body.iter().take(w * h).map(|&b| b as usize).collect()
            } else {
                body.chunks_exact(2).take(w * h).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize).collect()
            }
        }
        magic => return Err(parse_err(format!("unsupported Netpbm type {magic}; expected P2 or P5"))),
    };
    if raw.len() != w * h {
        return Err(parse_err(format!("Netpbm body holds {} of {} samples", raw.len(), w * h)));
    }
    if raw.iter().any(|&v| v > maxval) {
        return Err(parse_err("Netpbm sample exceeds maxval"));
    }
    Tensor4::image(h, w, raw.into_iter().map(|v| v as f64 * scale).collect())
}

/// 16-bit P5 with values clamped to [0, 1].
pub fn encode_pgm16(img: &Image) -> Result<Vec<u8>> {
    if img.n_rows() != 1 || img.n_cols() != 1 {
        return Err(Error::Shape(format!("expected a single-channel image, got {:?}", img.dims())));
    }
    let mut out = format!("P5\n{} {}\n65535\n", img.n_h(), img.n_v()).into_bytes();
    for &v in img.data() {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        out.extend_from_slice(&((v * 65535.0).round() as u16).to_be_bytes());
    }
    Ok(out)
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm16(path: &Path, img: &Image) -> Result<()> {
    Ok(fs::write(path, encode_pgm16(img)?)?)
}

/// Tiles a (C, C', n, n) response as a C x C' grid of n x n blocks separated by one pixel,
/// mapping 0 to mid-gray and ±max|r| to 1 and 0.
pub fn response_mosaic(r: &Tensor4) -> Image {
    let [rows, cols, n_v, n_h] = r.dims();
    let m = r.max_abs().max(f64::MIN_POSITIVE);
    let (h, w) = (rows * (n_v + 1) - 1, cols * (n_h + 1) - 1);
    let mut img = Tensor4::filled([1, 1, h, w], 0.5);
    for a in 0..rows {
        for b in 0..cols {
            for y in 0..n_v {
                for x in 0..n_h {
                    img.set(0, 0, a * (n_v + 1) + y, b * (n_h + 1) + x, 0.5 + 0.5 * r.get(a, b, y, x) / m);
                }
            }
        }
    }
    img
}
