//! Raster codecs: PGM (P2/P5, 8- and 16-bit) and 8-bit grayscale PNG.
//!
//! Decode normalizes stored values by the declared maxval for probability
//! maps and treats any nonzero stored value as foreground for masks. Encode
//! writes masks as binary 8-bit PGM and probability maps as 16-bit PGM
//! (maxval 65535) so that quantization loss stays below `1/(2*65535)` per
//! pixel.

use crate::grid::{BinaryMask, ProbabilityMap};
use crate::{Error, Result};

/// What a raster payload should decode into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    Mask,
    Probability,
}

/// A decoded raster, either a binary mask or a probability map.
#[derive(Debug, Clone)]
pub enum Raster {
    Mask(BinaryMask),
    Probability(ProbabilityMap),
}

impl Raster {
    pub fn into_mask(self) -> Result<BinaryMask> {
        match self {
            Raster::Mask(m) => Ok(m),
            Raster::Probability(_) => {
                Err(Error::InvalidArgument("expected a mask raster".into()))
            }
        }
    }

    pub fn into_probability(self) -> Result<ProbabilityMap> {
        match self {
            Raster::Probability(p) => Ok(p),
            Raster::Mask(_) => {
                Err(Error::InvalidArgument("expected a probability raster".into()))
            }
        }
    }
}

fn decode_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Decode { offset, reason: reason.into() }
}

/// Decodes PGM (P2/P5) or 8-bit grayscale PNG bytes.
pub fn decode_raster(bytes: &[u8], kind: RasterKind) -> Result<Raster> {
    if bytes.len() >= 2 && bytes[0] == b'P' && (bytes[1] == b'2' || bytes[1] == b'5') {
        decode_pgm(bytes, kind)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(bytes, kind)
    } else {
        Err(decode_err(0, "unrecognized magic; expected P2/P5 PGM or PNG"))
    }
}

/// Encodes a mask as binary 8-bit PGM (0 background, 255 foreground).
pub fn encode_mask(mask: &BinaryMask) -> Result<Vec<u8>> {
    if mask.width() == 0 || mask.height() == 0 {
        return Err(Error::Dimensions("cannot encode an empty raster".into()));
    }
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.values().iter().map(|&v| if v { 255u8 } else { 0u8 }));
    Ok(out)
}

/// Encodes a probability map as 16-bit binary PGM (maxval 65535, big-endian
/// samples per the PGM specification).
pub fn encode_probability(map: &ProbabilityMap) -> Result<Vec<u8>> {
    if map.width() == 0 || map.height() == 0 {
        return Err(Error::Dimensions("cannot encode an empty raster".into()));
    }
    let mut out = format!("P5\n{} {}\n65535\n", map.width(), map.height()).into_bytes();
    for &v in map.values() {
        let q = (v * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

struct PgmHeader {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first payload byte.
    payload: usize,
}

/// Scanner over PGM header tokens that tracks its byte offset for error
/// reporting. Comments (`#` to end of line) are whitespace.
struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(decode_err(start, format!("expected {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("digits are ascii");
        text.parse().map_err(|_| decode_err(start, format!("{what} out of range")))
    }
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let binary = bytes[1] == b'5';
    let mut scanner = Scanner { bytes, pos: 2 };
    let width = scanner.next_uint("width")? as usize;
    let height = scanner.next_uint("height")? as usize;
    let maxval_at = scanner.pos;
    let maxval = scanner.next_uint("maxval")? as u32;
    if width == 0 || height == 0 {
        return Err(decode_err(2, "zero width or height"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(decode_err(maxval_at, format!("unsupported maxval {maxval}")));
    }
    // Binary payload starts after exactly one whitespace byte; for P2 the
    // scanner position is already at the next token.
    let payload = if binary {
        if scanner.pos >= bytes.len() {
            return Err(decode_err(scanner.pos, "truncated after maxval"));
        }
        scanner.pos + 1
    } else {
        scanner.pos
    };
    Ok(PgmHeader { binary, width, height, maxval, payload })
}

fn decode_pgm(bytes: &[u8], kind: RasterKind) -> Result<Raster> {
    let header = parse_pgm_header(bytes)?;
    let count = header.width * header.height;
    let mut samples = Vec::with_capacity(count);
    if header.binary {
        let wide = header.maxval > 255;
        let sample_bytes = if wide { 2 } else { 1 };
        let need = count * sample_bytes;
        let payload = &bytes[header.payload.min(bytes.len())..];
        if payload.len() < need {
            return Err(decode_err(
                header.payload + payload.len(),
                format!("truncated payload: need {need} bytes, have {}", payload.len()),
            ));
        }
        for i in 0..count {
            let v = if wide {
                u32::from(u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]))
            } else {
                u32::from(payload[i])
            };
            if v > header.maxval {
                return Err(decode_err(
                    header.payload + i * sample_bytes,
                    format!("sample {v} exceeds maxval {}", header.maxval),
                ));
            }
            samples.push(v);
        }
    } else {
        let mut scanner = Scanner { bytes, pos: header.payload };
        for _ in 0..count {
            let at = scanner.pos;
            let v = scanner.next_uint("sample")? as u32;
            if v > header.maxval {
                return Err(decode_err(at, format!("sample {v} exceeds maxval {}", header.maxval)));
            }
            samples.push(v);
        }
    }
    raster_from_samples(header.width, header.height, header.maxval, &samples, kind)
}

fn decode_png(bytes: &[u8], kind: RasterKind) -> Result<Raster> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| decode_err(0, format!("png: {e}")))?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(decode_err(
                0,
                format!("unsupported png color type {:?}; expected 8-bit grayscale", other.color()),
            ))
        }
    };
    let (width, height) = (gray.width() as usize, gray.height() as usize);
    let samples: Vec<u32> = gray.into_raw().into_iter().map(u32::from).collect();
    raster_from_samples(width, height, 255, &samples, kind)
}

fn raster_from_samples(
    width: usize,
    height: usize,
    maxval: u32,
    samples: &[u32],
    kind: RasterKind,
) -> Result<Raster> {
    match kind {
        RasterKind::Mask => {
            let values = samples.iter().map(|&v| v > 0).collect();
            Ok(Raster::Mask(BinaryMask::new(width, height, values)?))
        }
        RasterKind::Probability => {
            let values = samples.iter().map(|&v| f64::from(v) / f64::from(maxval)).collect();
            Ok(Raster::Probability(ProbabilityMap::new(width, height, values)?))
        }
    }
}
