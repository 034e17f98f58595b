//! Thin wrappers over `libm` so the crate stays `no_std`.

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Kahan-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Field operations shared by the real and complex transform paths.
pub(crate) trait Scalar:
    Copy
    + From<f64>
    + core::ops::Add<Output = Self>
    + core::ops::Sub<Output = Self>
    + core::ops::Mul<Output = Self>
    + core::ops::Div<Output = Self>
{
    fn ln1p(self) -> Self;
}

impl Scalar for f64 {
    fn ln1p(self) -> f64 {
        ln1p(self)
    }
}

impl Scalar for num_complex::Complex64 {
    fn ln1p(self) -> Self {
        if self.norm_sqr() < 1e-8 {
            // Horner form of the series up to z^6
            let z = self;
            let mut acc = num_complex::Complex64::new(-1.0 / 6.0, 0.0);
            for k in (1..6).rev() {
                let c = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                acc = acc * z + c;
            }
            acc * z
        } else {
            (self + 1.0).ln()
        }
    }
}
