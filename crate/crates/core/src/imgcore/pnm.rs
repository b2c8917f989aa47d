//! Binary PGM (P5) and PPM (P6) with maxval 255.

use super::{to_u8, GrayImage, RgbImage, SoftMask};
use crate::error::{Error, Result};

/// A decoded netpbm raster.
#[derive(Debug, Clone, PartialEq)]
pub enum PnmImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl PnmImage {
    pub fn width(&self) -> usize {
        match self {
            PnmImage::Gray(g) => g.width(),
            PnmImage::Rgb(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            PnmImage::Gray(g) => g.height(),
            PnmImage::Rgb(c) => c.height(),
        }
    }

    /// Grayscale view; RGB input goes through luma conversion.
    pub fn into_gray(self) -> GrayImage {
        match self {
            PnmImage::Gray(g) => g,
            PnmImage::Rgb(c) => super::to_gray(&c),
        }
    }

    pub fn into_rgb(self) -> RgbImage {
        match self {
            PnmImage::Rgb(c) => c,
            PnmImage::Gray(g) => {
                let data = g.to_u8_samples().iter().flat_map(|&v| [v, v, v]).collect();
                RgbImage::new(g.width(), g.height(), data).expect("dimensions already validated")
            }
        }
    }
}

impl From<GrayImage> for PnmImage {
    fn from(g: GrayImage) -> Self {
        PnmImage::Gray(g)
    }
}

impl From<RgbImage> for PnmImage {
    fn from(c: RgbImage) -> Self {
        PnmImage::Rgb(c)
    }
}

impl From<SoftMask> for PnmImage {
    fn from(m: SoftMask) -> Self {
        PnmImage::Gray(m.as_gray())
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Decode {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse().map_err(|_| Error::Decode {
            offset: start,
            message: format!("{what} out of range"),
        })
    }
}

/// Decodes a binary P5/P6 image with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage> {
    let mut h = Header { bytes, pos: 0 };
    let channels = match bytes.get(0..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(h.err("expected magic P5 or P6")),
    };
    h.pos = 2;
    if !bytes.get(2).is_some_and(|c| c.is_ascii_whitespace() || *c == b'#') {
        return Err(h.err("expected whitespace after magic"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    if width == 0 || height == 0 {
        return Err(h.err(format!("degenerate dimensions {width}x{height}")));
    }
    let maxval_at = {
        h.skip_whitespace_and_comments();
        h.pos
    };
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Decode {
            offset: maxval_at,
            message: format!("unsupported maxval {maxval}, only 255 is accepted"),
        });
    }
    match bytes.get(h.pos) {
        Some(c) if c.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(h.err("expected single whitespace before raster")),
    }
    let body_len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| h.err("dimensions overflow"))?;
    let body = &bytes[h.pos..];
    if body.len() < body_len {
        return Err(Error::Decode {
            offset: bytes.len(),
            message: format!("truncated body: expected {body_len} bytes, found {}", body.len()),
        });
    }
    let body = &body[..body_len];
    Ok(if channels == 1 {
        PnmImage::Gray(GrayImage::from_u8(width, height, body)?)
    } else {
        PnmImage::Rgb(RgbImage::new(width, height, body.to_vec())?)
    })
}

/// Encodes as binary P5 (gray, soft masks) or P6 (RGB). Real-valued samples are
/// written as `round(v * 255)` with half-up rounding.
pub fn encode_pnm(image: &PnmImage) -> Vec<u8> {
    match image {
        PnmImage::Gray(g) => {
            let mut out = format!("P5\n{} {}\n255\n", g.width(), g.height()).into_bytes();
            out.extend(g.data().iter().map(|&v| to_u8(v)));
            out
        }
        PnmImage::Rgb(c) => {
            let mut out = format!("P6\n{} {}\n255\n", c.width(), c.height()).into_bytes();
            out.extend_from_slice(c.data());
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_single_gray_zero() {
        let mut bytes = b"P5\n1 1\n255\n".to_vec();
        bytes.push(0);
        match decode_pnm(&bytes).unwrap() {
            PnmImage::Gray(g) => {
                assert_eq!((g.width(), g.height()), (1, 1));
                assert_eq!(g.get(0, 0), 0.0);
            }
            other => panic!("expected gray, got {other:?}"),
        }
    }

    #[test]
    fn decodes_single_rgb_red() {
        let mut bytes = b"P6\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0xFF, 0x00, 0x00]);
        match decode_pnm(&bytes).unwrap() {
            PnmImage::Rgb(c) => assert_eq!(c.pixel(0, 0), [255, 0, 0]),
            other => panic!("expected rgb, got {other:?}"),
        }
    }

    #[test]
    fn truncated_body() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let err = decode_pnm(&bytes).unwrap_err();
        assert!(matches!(err, Error::Decode { .. }), "{err}");
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn header_errors_name_offsets() {
        let err = decode_pnm(b"P3\n1 1\n255\n\0").unwrap_err();
        assert!(matches!(err, Error::Decode { offset: 0, .. }));
        let err = decode_pnm(b"P5\n1 1\n65535\n\0\0").unwrap_err();
        assert!(matches!(err, Error::Decode { offset: 7, .. }), "{err}");
        let err = decode_pnm(b"P5\n1 x\n255\n\0").unwrap_err();
        assert!(matches!(err, Error::Decode { offset: 5, .. }), "{err}");
    }

    #[test]
    fn comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# before maxval\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 20]);
        let g = decode_pnm(&bytes).unwrap().into_gray();
        assert_eq!(g.get_u8(1, 0), 20);
    }

    #[test]
    fn soft_mask_scaling() {
        let m = SoftMask::new(3, 1, vec![1.0, 0.5, 0.0]).unwrap();
        let bytes = encode_pnm(&m.into());
        assert_eq!(&bytes[bytes.len() - 3..], &[255, 128, 0]);
    }

    proptest! {
        #[test]
        fn gray_round_trip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let samples: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
            let img = PnmImage::Gray(GrayImage::from_u8(w, h, &samples).unwrap());
            let bytes = encode_pnm(&img);
            prop_assert_eq!(decode_pnm(&bytes).unwrap(), img.clone());
            prop_assert_eq!(encode_pnm(&decode_pnm(&bytes).unwrap()), bytes);
        }

        #[test]
        fn rgb_round_trip(w in 1usize..10, h in 1usize..10, data in proptest::collection::vec(any::<u8>(), 300)) {
            let img = PnmImage::Rgb(RgbImage::new(w, h, data[..w * h * 3].to_vec()).unwrap());
            let bytes = encode_pnm(&img);
            prop_assert_eq!(decode_pnm(&bytes).unwrap(), img);
        }
    }
}
