use nalgebra::Vector3;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::image::ensure_same_dims;
use crate::image::DepthMap;
use crate::nocs::NocsMap;
use crate::{Error, Real, Result};

/// Corruption applied by [`corrupt`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec<T: Real> {
    /// Std-dev of Gaussian noise per NOCS channel (NOCS units).
    pub nocs_sigma: T,
    /// Std-dev of Gaussian depth noise (meters).
    pub depth_sigma: T,
    /// Fraction of valid NOCS pixels replaced by uniform `[0, 1]³` values.
    pub outlier_fraction: T,
    pub seed: u64,
}

impl<T: Real> Default for NoiseSpec<T> {
    fn default() -> Self {
        Self {
            nocs_sigma: T::zero(),
            depth_sigma: T::zero(),
            outlier_fraction: T::zero(),
            seed: 0,
        }
    }
}

impl<T: Real> NoiseSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: T| x.is_finite() && x >= T::zero();
        if !ok(self.nocs_sigma) || !ok(self.depth_sigma) {
            return Err(Error::InvalidConfig("noise sigmas must be finite and non-negative".into()));
        }
        if !(ok(self.outlier_fraction) && self.outlier_fraction < T::one()) {
            return Err(Error::InvalidConfig("outlier_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Pixel-local generator: stream `index` of the seeded ChaCha8 sequence,
/// so draws never depend on evaluation order.
fn pixel_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn normal<T: Real>(rng: &mut ChaCha8Rng, sigma: T) -> T {
    let z: f64 = rng.sample(StandardNormal);
    T::lit(z) * sigma
}

/// Adds Gaussian noise to valid depth and NOCS pixels and replaces
/// `floor(outlier_fraction · n)` of the `n` valid NOCS pixels by uniform
/// values. NOCS results are clamped to `[0, 1]`. Zero sigmas leave the
/// corresponding map untouched bit for bit.
pub fn corrupt<T: Real>(depth: &DepthMap<T>, nocs: &NocsMap<T>, noise: &NoiseSpec<T>) -> Result<(DepthMap<T>, NocsMap<T>)> {
    noise.validate()?;
    ensure_same_dims("NOCS map", depth.dims(), nocs.dims())?;
    let (w, h) = depth.dims();
    let seed = noise.seed;

    let out_depth = if noise.depth_sigma > T::zero() {
        let data = depth
            .data()
            .par_iter()
            .enumerate()
            .map(|(i, &d)| {
                if d <= T::zero() {
                    return d;
                }
                let mut rng = pixel_rng(seed, i);
                (d + normal(&mut rng, noise.depth_sigma)).max(T::zero())
            })
            .collect();
        DepthMap::new(w, h, data)?
    } else {
        depth.clone()
    };

    let valid: Vec<usize> = nocs.valid().data().iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i).collect();
    let n_out = (noise.outlier_fraction * T::from_usize(valid.len()).unwrap()).floor().to_usize().unwrap_or(0);
    let mut is_outlier = vec![false; w * h];
    if n_out > 0 {
        let mut rng = pixel_rng(seed, usize::MAX);
        for j in index::sample(&mut rng, valid.len(), n_out) {
            is_outlier[valid[j]] = true;
        }
    }

    let mut out_nocs = nocs.clone();
    if noise.nocs_sigma > T::zero() || n_out > 0 {
        let updates: Vec<(usize, Vector3<T>)> = valid
            .par_iter()
            .filter_map(|&i| {
                // Separate stream block from the depth noise.
                let mut rng = pixel_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i);
                let (u, v) = (i % w, i / w);
                if is_outlier[i] {
                    let r = Vector3::from_fn(|_, _| T::lit(rng.random::<f64>()));
                    return Some((i, r));
                }
                if noise.nocs_sigma > T::zero() {
                    let p = nocs.value(u, v) + Vector3::from_fn(|_, _| normal(&mut rng, noise.nocs_sigma));
                    return Some((i, p));
                }
                None
            })
            .collect();
        for (i, p) in updates {
            out_nocs.set(i % w, i / w, p);
        }
    }
    Ok((out_depth, out_nocs))
}
