use fdl_core::imageio::decode_pgm;
use fdl_core::{Error, Image, Result, Tensor4};
use std::fs;
use std::path::Path;

/// Grayscale image from a Netpbm (P2/P5) or PNG file, scaled to [0, 1]. Colour PNGs are
/// converted with Rec. 601 luma weights.
pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else {
        decode_pgm(&bytes)
    }
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let bad = |e: png::DecodingError| Error::Parse(format!("PNG: {e}"));
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(bad)?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| Error::Parse("PNG too large".into()))?];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let samples: Vec<f64> = match info.bit_depth {
        png::BitDepth::Sixteen => {
            buf[..info.buffer_size()].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0).collect()
        }
        png::BitDepth::Eight => buf[..info.buffer_size()].iter().map(|&b| b as f64 / 255.0).collect(),
        depth => return Err(Error::Parse(format!("unsupported PNG bit depth {depth:?}"))),
    };
    let stride = samples.len() / h.max(1);
    let pixels = (0..h)
        .flat_map(|y| (0..w).map(move |x| (y, x)))
        .map(|(y, x)| {
            let p = &samples[y * stride + x * channels..];
            match channels {
                1 | 2 => p[0],
                _ => 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2],
            }
        })
        .collect();
    Tensor4::image(h, w, pixels)
}
