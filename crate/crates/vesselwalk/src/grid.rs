//! Core raster types and coordinate geometry.
//!
//! All grids are row-major with the origin at the top-left corner; `x` is the
//! column index and `y` the row index. Grids are immutable after construction
//! and cheap to share across threads; "mutation" means building a new grid.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An integer pixel coordinate. `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub fn new(x: i32, y: i32) -> Self {
        Pixel { x, y }
    }
}

/// Euclidean distance between two pixel centers, in pixels.
pub fn euclidean_distance(a: Pixel, b: Pixel) -> f64 {
    let dx = f64::from(a.x - b.x);
    let dy = f64::from(a.y - b.y);
    (dx * dx + dy * dy).sqrt()
}

/// 2D grid of probabilities in `[0, 1]`, one value per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ProbabilityMap {
    /// Builds a map from row-major values. Rejects any value outside `[0, 1]`
    /// (NaN included) and payloads that do not match `width * height`.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Dimensions(format!(
                "expected {} values for {}x{}, got {}",
                width * height,
                width,
                height,
                values.len()
            )));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityRange { index, value });
            }
        }
        Ok(ProbabilityMap { width, height, values })
    }

    /// Constant-valued map, handy for tests and degenerate walks.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Value at `p`. Panics when `p` is out of bounds.
    pub fn get(&self, p: Pixel) -> f64 {
        assert!(self.contains(p), "pixel {:?} outside {}x{}", p, self.width, self.height);
        self.values[p.y as usize * self.width + p.x as usize]
    }
}

/// 2D boolean grid; `true` marks a foreground (vessel) pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Dimensions(format!(
                "expected {} values for {}x{}, got {}",
                width * height,
                width,
                height,
                values.len()
            )));
        }
        Ok(BinaryMask { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    pub fn get(&self, p: Pixel) -> bool {
        assert!(self.contains(p), "pixel {:?} outside {}x{}", p, self.width, self.height);
        self.values[p.y as usize * self.width + p.x as usize]
    }

    /// Number of foreground pixels.
    pub fn count_foreground(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Iterator over foreground pixels in raster order.
    pub fn foreground_pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let width = self.width;
        self.values
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v)
            .map(move |(i, _)| Pixel::new((i % width) as i32, (i / width) as i32))
    }

    /// New mask with the given pixels additionally set.
    pub fn with_pixels_set(&self, pixels: &[Pixel]) -> BinaryMask {
        let mut values = self.values.clone();
        for &p in pixels {
            if self.contains(p) {
                values[p.y as usize * self.width + p.x as usize] = true;
            }
        }
        BinaryMask { width: self.width, height: self.height, values }
    }

    /// Pixel-wise superset test.
    pub fn is_superset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.values.iter().zip(&other.values).all(|(&a, &b)| a || !b)
    }
}

/// Square region of interest, inclusive bounds clipped to the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub center: Pixel,
    pub side: u32,
    pub min_x: i32,
    pub max_x: i32,
    pub min_y: i32,
    pub max_y: i32,
}

impl Roi {
    /// Square of side `side` centered at `center`, clipped to a
    /// `width` x `height` image.
    pub fn centered(center: Pixel, side: u32, width: usize, height: usize) -> Roi {
        let half = (side / 2) as i32;
        Roi {
            center,
            side,
            min_x: (center.x - half).max(0),
            max_x: (center.x + half).min(width as i32 - 1),
            min_y: (center.y - half).max(0),
            max_y: (center.y + half).min(height as i32 - 1),
        }
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}
