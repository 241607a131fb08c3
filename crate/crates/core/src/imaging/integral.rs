use super::{GrayImage, ImageError};

/// Half-open pixel rectangle `[x, x + width) x [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }
}

/// Summed-area table with a zero first row and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let stride = w + 1;
        let mut table = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0u64;
            for x in 0..w {
                row_sum += u64::from(img.get(x, y));
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Self {
            width: w,
            height: h,
            table,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Entry at table coordinates, `0..=width` by `0..=height`.
    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.table[y * (self.width + 1) + x]
    }

    pub fn box_sum(&self, r: Rect) -> Result<u64, ImageError> {
        let x1 = r.x.checked_add(r.width).ok_or(ImageError::RectOutOfBounds)?;
        let y1 = r.y.checked_add(r.height).ok_or(ImageError::RectOutOfBounds)?;
        if x1 > self.width || y1 > self.height {
            return Err(ImageError::RectOutOfBounds);
        }
        Ok(self.at(x1, y1) + self.at(r.x, r.y) - self.at(r.x, y1) - self.at(x1, r.y))
    }
}

/// Builds the summed-area table of `img`.
pub fn integral(img: &GrayImage) -> IntegralImage {
    IntegralImage::new(img)
}
