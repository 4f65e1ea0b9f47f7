//! Dense per-pixel containers: masks, depth maps.

use crate::{Error, Real, Result};

/// Row-major H×W grid of pixel values, indexed by `(u, v)` = (column, row).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<P> {
    width: usize,
    height: usize,
    data: Vec<P>,
}

impl<P: Clone> Grid<P> {
    pub fn filled(width: usize, height: usize, value: P) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<P> Grid<P> {
    pub fn from_vec(width: usize, height: usize, data: Vec<P>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension {
                expected: format!("{} values for {width}x{height}", width * height),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.width && v < self.height);
        v * self.width + u
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> &P {
        &self.data[self.index(u, v)]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: P) {
        let i = self.index(u, v);
        self.data[i] = value;
    }

    pub fn data(&self) -> &[P] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [P] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<P> {
        self.data
    }

    /// Pixel coordinates of a flat index.
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }
}

/// Boolean per-pixel selection (object mask, validity mask).
pub type Mask = Grid<bool>;

impl Grid<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Depth in meters along the camera z axis; zero marks a missing reading.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap<T: Real> {
    grid: Grid<T>,
}

impl<T: Real> DepthMap<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|d| !d.is_finite() || **d < T::zero()) {
            return Err(Error::InvalidValue(format!(
                "depth must be finite and non-negative, found {bad:?}"
            )));
        }
        Ok(Self {
            grid: Grid::from_vec(width, height, data)?,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            grid: Grid::filled(width, height, T::zero()),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> T {
        *self.grid.get(u, v)
    }

    /// Negative or non-finite values are stored as zero (invalid).
    pub fn set(&mut self, u: usize, v: usize, depth: T) {
        let d = if depth.is_finite() && depth > T::zero() {
            depth
        } else {
            T::zero()
        };
        self.grid.set(u, v, d);
    }

    pub fn data(&self) -> &[T] {
        self.grid.data()
    }

    pub fn valid_mask(&self) -> Mask {
        Grid {
            width: self.grid.width,
            height: self.grid.height,
            data: self.grid.data.iter().map(|&d| d > T::zero()).collect(),
        }
    }
}

pub(crate) fn ensure_same_dims(
    what: &str,
    expected: (usize, usize),
    actual: (usize, usize),
) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension {
            expected: format!("{what} {}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_wrong_length() {
        assert!(matches!(
            Grid::from_vec(3, 2, vec![0u8; 5]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn grid_indexing_is_row_major() {
        let g = Grid::from_vec(3, 2, (0..6).collect::<Vec<_>>()).unwrap();
        assert_eq!(*g.get(2, 0), 2);
        assert_eq!(*g.get(0, 1), 3);
        assert_eq!(g.coords(4), (1, 1));
    }

    #[test]
    fn depth_rejects_negative_values() {
        assert!(DepthMap::new(2, 1, vec![1.0, -0.5]).is_err());
        assert!(DepthMap::new(2, 1, vec![1.0, f64::NAN]).is_err());
        let d = DepthMap::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(d.valid_mask().count(), 1);
    }
}
