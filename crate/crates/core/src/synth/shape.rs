use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{Rotation, Similarity};
use crate::symmetry::{ContinuousSymmetry, SymmetryAnnotation};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Box,
    /// Circular cylinder with its axis along object `y`.
    Cylinder,
    /// Regular prism with an even number of sides, axis along object `y`,
    /// one vertex on `+x`.
    Prism { sides: usize },
    /// Two slabs forming an "L" in the `xy` plane; no proper symmetry.
    LShape,
}

/// A parametric shape in its canonical frame: bounding box centred at the
/// origin with side lengths `extents` (meters).
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSpec<T: Real> {
    kind: ShapeKind,
    extents: Vector3<T>,
}

fn check_positive<T: Real>(what: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("{what} must be positive, got {v:?}")))
    }
}

/// Ray parameter interval `[enter, exit]`, possibly empty.
type Span<T> = (T, T);

fn slab<T: Real>(o: T, d: T, lo: T, hi: T, span: Span<T>) -> Span<T> {
    if d == T::zero() {
        if o < lo || o > hi {
            return (T::one(), T::zero());
        }
        return span;
    }
    let (a, b) = ((lo - o) / d, (hi - o) / d);
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    (span.0.max(a), span.1.min(b))
}

fn unbounded<T: Real>() -> Span<T> {
    (T::min_value().unwrap(), T::max_value().unwrap())
}

fn aabb<T: Real>(o: &Vector3<T>, d: &Vector3<T>, lo: &Vector3<T>, hi: &Vector3<T>) -> Span<T> {
    let mut s = unbounded();
    for i in 0..3 {
        s = slab(o[i], d[i], lo[i], hi[i], s);
    }
    s
}

impl<T: Real> ShapeSpec<T> {
    pub fn cuboid(extents: Vector3<T>) -> Result<Self> {
        for &e in extents.iter() {
            check_positive("box extent", e)?;
        }
        Ok(Self { kind: ShapeKind::Box, extents })
    }

    pub fn cylinder(radius: T, height: T) -> Result<Self> {
        check_positive("radius", radius)?;
        check_positive("height", height)?;
        let dia = radius * T::lit(2.0);
        Ok(Self {
            kind: ShapeKind::Cylinder,
            extents: Vector3::new(dia, height, dia),
        })
    }

    /// `circumradius` is the centre-to-vertex distance of the cross-section.
    pub fn prism(sides: usize, circumradius: T, height: T) -> Result<Self> {
        if sides < 4 || !sides.is_multiple_of(2) {
            return Err(Error::InvalidValue(format!(
                "prism needs an even side count ≥ 4, got {sides}"
            )));
        }
        check_positive("circumradius", circumradius)?;
        check_positive("height", height)?;
        let max_sin = (0..sides)
            .map(|i| (Self::vertex_angle(sides, i)).sin().abs())
            .fold(T::zero(), |a, b| a.max(b));
        let two = T::lit(2.0);
        Ok(Self {
            kind: ShapeKind::Prism { sides },
            extents: Vector3::new(two * circumradius, height, two * circumradius * max_sin),
        })
    }

    /// Side lengths must differ along `x` and `y`; equal ones would admit a
    /// half-turn about the diagonal.
    pub fn l_shape(extents: Vector3<T>) -> Result<Self> {
        for &e in extents.iter() {
            check_positive("L-shape extent", e)?;
        }
        if (extents.x - extents.y).abs() <= T::lit(1e-6) * extents.x.max(extents.y) {
            return Err(Error::InvalidValue("L-shape needs different x and y extents".into()));
        }
        Ok(Self { kind: ShapeKind::LShape, extents })
    }

    fn vertex_angle(sides: usize, i: usize) -> T {
        T::two_pi() * T::from_usize(i).unwrap() / T::from_usize(sides).unwrap()
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn extents(&self) -> &Vector3<T> {
        &self.extents
    }

    /// Length of the bounding-box diagonal.
    pub fn diagonal(&self) -> T {
        self.extents.norm()
    }

    /// NOCS normalization length: the longest bounding-box side.
    pub fn max_extent(&self) -> T {
        self.extents.max()
    }

    /// Slab thickness of an L-shape.
    fn l_width(&self) -> T {
        self.extents.x.min(self.extents.y) * T::lit(0.35)
    }

    pub fn symmetry(&self) -> SymmetryAnnotation<T> {
        let half_turn = |axis: Vector3<T>| Similarity::rigid(Rotation::from_axis_angle(&axis, T::pi()), Vector3::zeros());
        match self.kind {
            ShapeKind::Box => SymmetryAnnotation::discrete_only(vec![
                half_turn(Vector3::x()),
                half_turn(Vector3::y()),
                half_turn(Vector3::z()),
            ])
            .expect("half turns are proper"),
            ShapeKind::Cylinder => SymmetryAnnotation::continuous_only(vec![
                ContinuousSymmetry::about(Vector3::y()).expect("unit axis"),
            ]),
            ShapeKind::Prism { sides } => SymmetryAnnotation::cyclic(Vector3::y(), sides),
            ShapeKind::LShape => SymmetryAnnotation::none(),
        }
    }

    /// Smallest positive ray parameter at which `o + t·d` (object frame)
    /// enters the shape.
    pub fn intersect(&self, o: &Vector3<T>, d: &Vector3<T>) -> Option<T> {
        let half = self.extents * T::lit(0.5);
        let hit = |s: Span<T>| (s.0 <= s.1 && s.0 > T::zero()).then_some(s.0);
        match self.kind {
            ShapeKind::Box => hit(aabb(o, d, &-half, &half)),
            ShapeKind::Cylinder => {
                let r = half.x;
                let a = d.x * d.x + d.z * d.z;
                let b = (o.x * d.x + o.z * d.z) * T::lit(2.0);
                let c = o.x * o.x + o.z * o.z - r * r;
                let radial = if a == T::zero() {
                    if c > T::zero() {
                        return None;
                    }
                    unbounded()
                } else {
                    let disc = b * b - T::lit(4.0) * a * c;
                    if disc < T::zero() {
                        return None;
                    }
                    let sq = disc.sqrt();
                    // Numerically stable pair of roots.
                    let q = if b < T::zero() { (sq - b) * T::lit(0.5) } else { -(b + sq) * T::lit(0.5) };
                    let (t1, t2) = if q == T::zero() { (T::zero(), T::zero()) } else { (q / a, c / q) };
                    if t1 < t2 { (t1, t2) } else { (t2, t1) }
                };
                hit(slab(o.y, d.y, -half.y, half.y, radial))
            }
            ShapeKind::Prism { sides } => {
                let circum = half.x;
                let step = T::pi() / T::from_usize(sides).unwrap();
                let apothem = circum * step.cos();
                let mut s = slab(o.y, d.y, -half.y, half.y, unbounded());
                for i in 0..sides {
                    let phi = Self::vertex_angle(sides, i) + step;
                    let (n_x, n_z) = (phi.cos(), phi.sin());
                    let no = n_x * o.x + n_z * o.z;
                    let nd = n_x * d.x + n_z * d.z;
                    if nd == T::zero() {
                        if no > apothem {
                            return None;
                        }
                    } else {
                        let t = (apothem - no) / nd;
                        if nd > T::zero() {
                            s.1 = s.1.min(t);
                        } else {
                            s.0 = s.0.max(t);
                        }
                    }
                }
                hit(s)
            }
            ShapeKind::LShape => {
                let w = self.l_width();
                let bar_hi = Vector3::new(-half.x + w, half.y, half.z);
                let foot_hi = Vector3::new(half.x, -half.y + w, half.z);
                let a = hit(aabb(o, d, &-half, &bar_hi));
                let b = hit(aabb(o, d, &-half, &foot_hi));
                match (a, b) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
        }
    }
}
