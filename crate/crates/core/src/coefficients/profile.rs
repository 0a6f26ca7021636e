use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// A smooth map on one sub-interval together with its derivative.
pub trait Profile: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Profile for Constant {
    fn value(&self, _: f64) -> f64 {
        self.0
    }

    fn derivative(&self, _: f64) -> f64 {
        0.0
    }
}

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closure pair `(f, f')`.
pub struct FnProfile {
    f: RealFn,
    df: RealFn,
}

impl FnProfile {
    pub fn new<F, D>(f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FnProfile {
            f: Box::new(f),
            df: Box::new(df),
        }
    }
}

impl Profile for FnProfile {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.df)(x)
    }
}

/// `c + Σ aᵢ fᵢ`.
pub struct LinearCombination {
    terms: Vec<(f64, Arc<dyn Profile>)>,
    constant: f64,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, Arc<dyn Profile>)>, constant: f64) -> Self {
        LinearCombination { terms, constant }
    }
}

impl Profile for LinearCombination {
    fn value(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, (a, f)| acc + a * f.value(x))
    }

    fn derivative(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .fold(0.0, |acc, (a, f)| acc + a * f.derivative(x))
    }
}

/// `f'` as a profile; its own derivative is a central difference.
pub struct DerivativeOf {
    inner: Arc<dyn Profile>,
}

impl DerivativeOf {
    pub fn new(inner: Arc<dyn Profile>) -> Self {
        DerivativeOf { inner }
    }
}

impl Profile for DerivativeOf {
    fn value(&self, x: f64) -> f64 {
        self.inner.derivative(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        let h = 1e-5;
        (self.inner.derivative(x + h) - self.inner.derivative(x - h)) / (2.0 * h)
    }
}

/// Cubic Hermite interpolant of `(f, f')` tabulated at `xᵢ = i/m`.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    values: Arc<[f64]>,
    slopes: Arc<[f64]>,
}

impl HermiteTable {
    /// Both slices hold `m + 1` samples on the uniform grid.
    pub fn new(values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(values.len(), slopes.len());
        assert!(values.len() >= 2);
        HermiteTable {
            values: values.into(),
            slopes: slopes.into(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    #[inline]
    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let m = self.values.len() - 1;
        let h = 1.0 / m as f64;
        let s = x * m as f64;
        let i = (libm::floor(s).max(0.0) as usize).min(m - 1);
        (i, s - i as f64, h)
    }
}

impl Profile for HermiteTable {
    fn value(&self, x: f64) -> f64 {
        let (i, t, h) = self.locate(x);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }

    fn derivative(&self, x: f64) -> f64 {
        let (i, t, h) = self.locate(x);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * (y0 - y1)
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (3.0 * t2 - 2.0 * t) * d1)
            / h
    }
}
