use super::{GrayImage, ImageError};

/// Default cap on decoded pixel count.
pub const DEFAULT_PIXEL_CAP: usize = 100_000_000;

/// Decodes P2/P3/P5/P6 into grayscale. Color is reduced with BT.601 luma,
/// rounded half up.
pub fn decode_netpbm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    decode_netpbm_with_cap(bytes, DEFAULT_PIXEL_CAP)
}

pub fn decode_netpbm_with_cap(bytes: &[u8], pixel_cap: usize) -> Result<GrayImage, ImageError> {
    if bytes.len() < 2 {
        return Err(ImageError::UnknownMagic(String::from_utf8_lossy(bytes).into_owned()));
    }
    let magic = &bytes[..2];
    let (ascii, color) = match magic {
        b"P2" => (true, false),
        b"P5" => (false, false),
        b"P3" => (true, true),
        b"P6" => (false, true),
        _ => return Err(ImageError::UnknownMagic(String::from_utf8_lossy(magic).into_owned())),
    };

    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.header_number()?;
    let height = cur.header_number()?;
    let maxval = cur.header_number()?;
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader("zero dimension".into()));
    }
    let pixels = width
        .checked_mul(height)
        .filter(|&n| n <= pixel_cap)
        .ok_or(ImageError::DimensionOverflow {
            width,
            height,
            cap: pixel_cap,
        })?;
    if maxval == 0 || maxval > 255 {
        return Err(ImageError::UnsupportedMaxval(maxval.min(u32::MAX as usize) as u32));
    }
    let maxval = maxval as u32;
    let channels = if color { 3 } else { 1 };
    let samples = pixels * channels;

    let raw: Vec<u32> = if ascii {
        let mut v = Vec::with_capacity(samples);
        for _ in 0..samples {
            let n = cur.payload_number()?;
            if n > maxval as usize {
                return Err(ImageError::MalformedHeader(format!(
                    "sample {n} exceeds maxval {maxval}"
                )));
            }
            v.push(n as u32);
        }
        v
    } else {
        // exactly one whitespace byte separates the header from binary data
        let start = cur.pos + 1;
        let end = start + samples;
        if start > bytes.len() || end > bytes.len() {
            return Err(ImageError::TruncatedPayload);
        }
        bytes[start..end].iter().map(|&b| u32::from(b)).collect()
    };

    let rescale = |v: u32| -> u32 {
        if maxval == 255 {
            v.min(255)
        } else {
            (v * 255 + maxval / 2) / maxval
        }
    };

    let data: Vec<u8> = if color {
        raw.chunks_exact(3)
            .map(|rgb| {
                let (r, g, b) = (rescale(rgb[0]), rescale(rgb[1]), rescale(rgb[2]));
                luma(r, g, b)
            })
            .collect()
    } else {
        raw.into_iter().map(|v| rescale(v) as u8).collect()
    };
    GrayImage::new(width, height, data)
}

/// round(0.299 R + 0.587 G + 0.114 B), evaluated in integers so halves round up exactly.
fn luma(r: u32, g: u32, b: u32) -> u8 {
    let v = (299 * r + 587 * g + 114 * b + 500) / 1000;
    v.min(255) as u8
}

/// Binary PGM (P5, maxval 255).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Option<Result<usize, ImageError>> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return if self.pos >= self.bytes.len() {
                None
            } else {
                Some(Err(ImageError::MalformedHeader(format!(
                    "unexpected byte 0x{:02x}",
                    self.bytes[self.pos]
                ))))
            };
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        Some(
            text.parse::<usize>()
                .map_err(|_| ImageError::MalformedHeader(format!("number {text:?} too large"))),
        )
    }

    fn header_number(&mut self) -> Result<usize, ImageError> {
        self.number()
            .unwrap_or_else(|| Err(ImageError::MalformedHeader("header ends early".into())))
    }

    fn payload_number(&mut self) -> Result<usize, ImageError> {
        self.number().unwrap_or(Err(ImageError::TruncatedPayload))
    }
}
