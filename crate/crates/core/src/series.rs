//! Truncated power series in the counting field s.
//!
//! A [`Series`] stores plain Taylor coefficients a_k of Σ a_k s^k up to a
//! fixed order; derivatives at s = 0 are k!·a_k. Capacity is fixed so the
//! jet right-hand sides run without allocation.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Highest order a series can carry.
pub const JET_CAPACITY: usize = 8;

const LEN: usize = JET_CAPACITY + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series {
    coeffs: [f64; LEN],
    order: usize,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Series {
    pub fn check_order(order: usize) -> Result<()> {
        if order > JET_CAPACITY {
            return Err(Error::OrderOverflow {
                requested: order,
                capacity: JET_CAPACITY,
            });
        }
        Ok(())
    }

    pub fn zero(order: usize) -> Result<Self> {
        Self::check_order(order)?;
        Ok(Series {
            coeffs: [0.0; LEN],
            order,
        })
    }

    pub fn constant(value: f64, order: usize) -> Result<Self> {
        let mut s = Self::zero(order)?;
        s.coeffs[0] = value;
        Ok(s)
    }

    /// The identity series s.
    pub fn variable(order: usize) -> Result<Self> {
        let mut s = Self::zero(order)?;
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        Ok(s)
    }

    /// Series from plain coefficients; missing ones are zero.
    pub fn from_coeffs(coeffs: &[f64], order: usize) -> Result<Self> {
        let mut s = Self::zero(order)?;
        for (dst, &c) in s.coeffs.iter_mut().zip(coeffs).take(order + 1) {
            *dst = c;
        }
        Ok(s)
    }

    /// e^{sign·s}.
    pub fn exp_of_scaled_variable(sign: f64, order: usize) -> Result<Self> {
        let mut s = Self::zero(order)?;
        let mut term = 1.0;
        for k in 0..=order {
            s.coeffs[k] = term;
            term *= sign / (k + 1) as f64;
        }
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..=self.order]
    }

    pub fn coeff(&self, k: usize) -> f64 {
        if k <= self.order {
            self.coeffs[k]
        } else {
            0.0
        }
    }

    pub fn set_coeff(&mut self, k: usize, value: f64) {
        assert!(
            k <= self.order,
            "coefficient {k} beyond order {}",
            self.order
        );
        self.coeffs[k] = value;
    }

    /// k-th derivative at s = 0.
    pub fn derivative(&self, k: usize) -> f64 {
        factorial(k) * self.coeff(k)
    }

    /// Series from derivatives at s = 0.
    pub fn from_derivatives(derivs: &[f64], order: usize) -> Result<Self> {
        let mut s = Self::zero(order)?;
        for (k, &d) in derivs.iter().enumerate().take(order + 1) {
            s.coeffs[k] = d / factorial(k);
        }
        Ok(s)
    }

    pub fn scale(mut self, factor: f64) -> Self {
        for c in &mut self.coeffs[..=self.order] {
            *c *= factor;
        }
        self
    }

    pub fn add_scalar(mut self, value: f64) -> Self {
        self.coeffs[0] += value;
        self
    }

    /// Substitutes s → −s.
    pub fn reflect(mut self) -> Self {
        for k in (1..=self.order).step_by(2) {
            self.coeffs[k] = -self.coeffs[k];
        }
        self
    }

    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 {
            return Err(Error::Domain(
                "reciprocal of a series with zero constant term".into(),
            ));
        }
        let mut b = Series::zero(self.order)?;
        b.coeffs[0] = 1.0 / a0;
        for k in 1..=self.order {
            let acc: f64 = (1..=k).map(|j| self.coeffs[j] * b.coeffs[k - j]).sum();
            b.coeffs[k] = -acc / a0;
        }
        Ok(b)
    }

    pub fn exp(&self) -> Self {
        let mut e = Series {
            coeffs: [0.0; LEN],
            order: self.order,
        };
        e.coeffs[0] = self.coeffs[0].exp();
        for k in 1..=self.order {
            let acc: f64 = (1..=k)
                .map(|j| j as f64 * self.coeffs[j] * e.coeffs[k - j])
                .sum();
            e.coeffs[k] = acc / k as f64;
        }
        e
    }

    pub fn ln(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(Error::Domain(format!(
                "logarithm of a series with constant term {a0}"
            )));
        }
        let mut l = Series::zero(self.order)?;
        l.coeffs[0] = a0.ln();
        for k in 1..=self.order {
            let acc: f64 = (1..k)
                .map(|j| j as f64 * l.coeffs[j] * self.coeffs[k - j])
                .sum();
            l.coeffs[k] = (self.coeffs[k] - acc / k as f64) / a0;
        }
        Ok(l)
    }

    fn zip(mut self, rhs: Series, op: impl Fn(f64, f64) -> f64) -> Series {
        debug_assert_eq!(self.order, rhs.order, "series order mismatch");
        for k in 0..=self.order {
            self.coeffs[k] = op(self.coeffs[k], rhs.coeffs[k]);
        }
        self
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, rhs: Series) -> Series {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, rhs: Series) -> Series {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(-1.0)
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, rhs: Series) -> Series {
        debug_assert_eq!(self.order, rhs.order, "series order mismatch");
        let mut out = Series {
            coeffs: [0.0; LEN],
            order: self.order,
        };
        for i in 0..=self.order {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..=(self.order - i) {
                out.coeffs[i + j] += a * rhs.coeffs[j];
            }
        }
        out
    }
}

impl Mul<f64> for Series {
    type Output = Series;
    fn mul(self, rhs: f64) -> Series {
        self.scale(rhs)
    }
}
