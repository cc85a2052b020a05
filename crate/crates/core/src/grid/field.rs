use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible grid edge: the TVD stencil reaches two cells to
/// either side and a P2 element needs an interior node.
pub const MIN_DIM: usize = 4;

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < MIN_DIM || height < MIN_DIM {
        return Err(Error::DimensionTooSmall {
            width,
            height,
            min: MIN_DIM,
        });
    }
    Ok(())
}

/// Real-valued image on a `width x height` pixel grid, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    width: usize,
    height: usize,
    spacing: T,
    data: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::BufferLength {
                width,
                height,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field data".into()));
        }
        Ok(Self {
            width,
            height,
            spacing: T::one(),
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::constant(width, height, T::zero())
    }

    pub fn constant(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a field from `f(x, y)` evaluated at pixel indices.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Replaces the grid step (defaults to one pixel).
    pub fn with_spacing(mut self, spacing: T) -> Self {
        assert!(spacing > T::zero(), "grid spacing must be positive");
        self.spacing = spacing;
        self
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
    pub fn spacing(&self) -> T {
        self.spacing
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Value with indices clamped to the grid (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn ensure_same_dims<U: Real>(&self, other: &ScalarField<U>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_dims(other)?;
        Ok(Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..*self
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Pixelwise average `(self + other) / 2`.
    pub fn average(&self, other: &Self) -> Result<Self> {
        let half = T::lit(0.5);
        self.zip_map(other, |a, b| half * (a + b))
    }

    pub fn min(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `h * sqrt(sum v^2)`, the discrete L2 norm.
    pub fn l2_norm(&self) -> T {
        let s: T = self.data.iter().map(|&v| v * v).sum();
        s.sqrt() * self.spacing
    }

    pub(crate) fn from_parts(width: usize, height: usize, spacing: T, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            spacing,
            data,
        }
    }
}

/// Planar vector field `(v, w)` sampled at pixel centers.
///
/// Both components vanish on the outermost ring of pixels; every
/// constructor enforces this, modelling the no-slip condition `b = 0` on
/// the image boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    width: usize,
    height: usize,
    spacing: T,
    v: Vec<T>,
    w: Vec<T>,
}

impl<T: Real> VectorField<T> {
    pub fn new(width: usize, height: usize, v: Vec<T>, w: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        for comp in [&v, &w] {
            if comp.len() != width * height {
                return Err(Error::BufferLength {
                    width,
                    height,
                    found: comp.len(),
                });
            }
            if comp.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("vector field data".into()));
            }
        }
        let mut field = Self {
            width,
            height,
            spacing: T::one(),
            v,
            w,
        };
        field.zero_boundary();
        Ok(field)
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![T::zero(); n], vec![T::zero(); n])
    }

    /// Constant field `(v, w)` in the interior.
    pub fn uniform(width: usize, height: usize, v: T, w: T) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![v; n], vec![w; n])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (T, T)) -> Result<Self> {
        let mut v = Vec::with_capacity(width * height);
        let mut w = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                v.push(a);
                w.push(b);
            }
        }
        Self::new(width, height, v, w)
    }

    pub fn with_spacing(mut self, spacing: T) -> Self {
        assert!(spacing > T::zero(), "grid spacing must be positive");
        self.spacing = spacing;
        self
    }

    fn zero_boundary(&mut self) {
        let (wd, ht) = (self.width, self.height);
        for x in 0..wd {
            for y in [0, ht - 1] {
                self.v[y * wd + x] = T::zero();
                self.w[y * wd + x] = T::zero();
            }
        }
        for y in 0..ht {
            for x in [0, wd - 1] {
                self.v[y * wd + x] = T::zero();
                self.w[y * wd + x] = T::zero();
            }
        }
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
    pub fn spacing(&self) -> T {
        self.spacing
    }

    #[inline]
    pub fn v(&self) -> &[T] {
        &self.v
    }

    #[inline]
    pub fn w(&self) -> &[T] {
        &self.w
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (T, T) {
        let i = y * self.width + x;
        (self.v[i], self.w[i])
    }

    /// Largest absolute component, `max(|v|_max, |w|_max)`.
    pub fn max_speed(&self) -> T {
        self.v
            .iter()
            .chain(&self.w)
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().chain(&self.w).all(|x| x.is_zero())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            v: self.v.iter().map(|&x| x * s).collect(),
            w: self.w.iter().map(|&x| x * s).collect(),
            ..*self
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(Self {
            v: self.v.iter().zip(&other.v).map(|(&a, &b)| a + b).collect(),
            w: self.w.iter().zip(&other.w).map(|(&a, &b)| a + b).collect(),
            ..*self
        })
    }

    pub fn components(&self) -> (ScalarField<T>, ScalarField<T>) {
        (
            ScalarField::from_parts(self.width, self.height, self.spacing, self.v.clone()),
            ScalarField::from_parts(self.width, self.height, self.spacing, self.w.clone()),
        )
    }
}

/// Piecewise-constant-in-time flow on `[0, horizon]`: sample `k` is valid
/// on `[k T / n, (k + 1) T / n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeFlow<T> {
    horizon: T,
    samples: Vec<VectorField<T>>,
}

impl<T: Real> TimeFlow<T> {
    pub fn new(horizon: T, samples: Vec<VectorField<T>>) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidConfig(format!("time horizon must be positive, got {horizon}")));
        }
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidConfig("a time flow needs at least one sample".into()))?;
        let dims = first.dims();
        if let Some(bad) = samples.iter().find(|s| s.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: bad.dims(),
            });
        }
        Ok(Self { horizon, samples })
    }

    /// One stationary field over the whole horizon.
    pub fn stationary(horizon: T, field: VectorField<T>) -> Result<Self> {
        Self::new(horizon, vec![field])
    }

    pub fn zeros(width: usize, height: usize, horizon: T, n_samples: usize) -> Result<Self> {
        let zero = VectorField::zeros(width, height)?;
        Self::new(horizon, vec![zero; n_samples.max(1)])
    }

    #[inline]
    pub fn horizon(&self) -> T {
        self.horizon
    }

    #[inline]
    pub fn samples(&self) -> &[VectorField<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<VectorField<T>> {
        self.samples
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.samples[0].dims()
    }

    /// `[t0, t1)` covered by sample `k`.
    pub fn interval(&self, k: usize) -> (T, T) {
        let n = T::from_usize_lossy(self.samples.len());
        let k0 = T::from_usize_lossy(k);
        (self.horizon * k0 / n, self.horizon * (k0 + T::one()) / n)
    }

    /// Midpoint of sample `k`'s time interval.
    pub fn midpoint(&self, k: usize) -> T {
        let (a, b) = self.interval(k);
        T::lit(0.5) * (a + b)
    }

    /// Index of the sample active at time `t` (the last sample owns `t = T`).
    pub fn index_at(&self, t: T) -> usize {
        let n = self.samples.len();
        let pos = (t / self.horizon * T::from_usize_lossy(n)).floor();
        pos.to_usize().unwrap_or(0).min(n - 1)
    }

    pub fn at(&self, t: T) -> &VectorField<T> {
        &self.samples[self.index_at(t)]
    }

    /// Flow of the time-reversed problem `t' = T - t`: samples in reverse
    /// order with both components negated.
    pub fn reversed_negated(&self) -> Self {
        Self {
            horizon: self.horizon,
            samples: self
                .samples
                .iter()
                .rev()
                .map(|s| s.scale(-T::one()))
                .collect(),
        }
    }

    pub fn max_speed(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |m, s| m.max(s.max_speed()))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(VectorField::is_zero)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            horizon: self.horizon,
            samples: self.samples.iter().map(|f| f.scale(s)).collect(),
        }
    }

    pub fn map_samples(&self, f: impl FnMut(&VectorField<T>) -> Result<VectorField<T>>) -> Result<Self> {
        let samples = self.samples.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.horizon, samples)
    }
}

/// Foot points `Phi^{-1}(t, x)` of the characteristics through every pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct BacktraceMap<T> {
    width: usize,
    height: usize,
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Real> BacktraceMap<T> {
    /// Builds a map, clamping coordinates to `[0, width-1] x [0, height-1]`.
    pub fn new(width: usize, height: usize, mut x: Vec<T>, mut y: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        for c in [&x, &y] {
            if c.len() != width * height {
                return Err(Error::BufferLength {
                    width,
                    height,
                    found: c.len(),
                });
            }
        }
        let xmax = T::from_usize_lossy(width - 1);
        let ymax = T::from_usize_lossy(height - 1);
        for (px, py) in x.iter_mut().zip(y.iter_mut()) {
            if !px.is_finite() || !py.is_finite() {
                return Err(Error::NonFinite("backtrace coordinates".into()));
            }
            *px = px.max(T::zero()).min(xmax);
            *py = py.max(T::zero()).min(ymax);
        }
        Ok(Self { width, height, x, y })
    }

    pub fn identity(width: usize, height: usize) -> Result<Self> {
        let mut x = Vec::with_capacity(width * height);
        let mut y = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                x.push(T::from_usize_lossy(i));
                y.push(T::from_usize_lossy(j));
            }
        }
        Self::new(width, height, x, y)
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn x(&self) -> &[T] {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &[T] {
        &self.y
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (T, T) {
        let k = j * self.width + i;
        (self.x[k], self.y[k])
    }
}

/// Bilinear blend of the four pixels surrounding `(x, y)`, per component.
/// Coordinates are clamped to the grid rectangle first.
pub fn sample_flow_bilinear<T: Real>(b: &VectorField<T>, x: T, y: T) -> (T, T) {
    let (wd, ht) = b.dims();
    let x = x.max(T::zero()).min(T::from_usize_lossy(wd - 1));
    let y = y.max(T::zero()).min(T::from_usize_lossy(ht - 1));
    let i0 = x.floor().to_usize().unwrap_or(0).min(wd - 2);
    let j0 = y.floor().to_usize().unwrap_or(0).min(ht - 2);
    let fx = x - T::from_usize_lossy(i0);
    let fy = y - T::from_usize_lossy(j0);
    let k00 = j0 * wd + i0;
    let k10 = k00 + 1;
    let k01 = k00 + wd;
    let k11 = k01 + 1;
    let one = T::one();
    let blend = |c: &[T]| {
        (one - fy) * ((one - fx) * c[k00] + fx * c[k10]) + fy * ((one - fx) * c[k01] + fx * c[k11])
    };
    (blend(b.v()), blend(b.w()))
}
