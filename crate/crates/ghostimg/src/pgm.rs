//! 8-bit greymap IO. Reads P2 and P5, writes P5.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, ExtendedColorType, ImageDecoder, ImageEncoder};

use crate::error::{CliError, Result};

/// Pixels normalized to `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GreyImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<GreyImage> {
    let bad = |m: String| CliError::format(path, m);
    let decoder = PnmDecoder::new(Cursor::new(bytes)).map_err(|e| bad(e.to_string()))?;
    if !matches!(decoder.subtype(), PnmSubtype::Graymap(_)) {
        return Err(bad(format!("expected a P2/P5 greymap, found {:?}", decoder.subtype())));
    }
    if decoder.color_type() != ColorType::L8 {
        return Err(bad("only 8-bit greymaps (maxval <= 255) are supported".into()));
    }
    let (w, h) = decoder.dimensions();
    let mut buf = vec![0u8; decoder.total_bytes() as usize];
    decoder.read_image(&mut buf).map_err(|e| bad(e.to_string()))?;
    Ok(GreyImage {
        width: w as usize,
        height: h as usize,
        pixels: buf.iter().map(|&b| f64::from(b) / 255.0).collect(),
    })
}

pub fn read(path: &Path) -> Result<GreyImage> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes, path)
}

/// Quantizes values in `[0, 1]` to a binary P5 file image.
pub fn encode(side: usize, values: &[f64]) -> Result<Vec<u8>> {
    let samples: Vec<u8> = values.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&samples, side as u32, side as u32, ExtendedColorType::L8)
        .map_err(|e| CliError::format("<pgm>", e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_and_binary_agree() {
        let p2 = b"P2\n# c\n2 2\n255\n0 51\n204 255\n";
        let a = decode(p2, Path::new("a.pgm")).unwrap();
        assert_eq!((a.width, a.height), (2, 2));
        assert_eq!(a.pixels, vec![0.0, 0.2, 0.8, 1.0]);
        let p5 = encode(2, &a.pixels).unwrap();
        assert!(p5.starts_with(b"P5"));
        assert_eq!(decode(&p5, Path::new("b.pgm")).unwrap(), a);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(decode(b"P3\n1 1\n255\n1 2 3\n", Path::new("c.ppm")).is_err());
        assert!(decode(b"P2\n1 1\n65535\n300\n", Path::new("d.pgm")).is_err());
        assert!(decode(b"garbage", Path::new("e.pgm")).is_err());
    }
}
