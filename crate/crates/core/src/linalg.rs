//! Small dense containers: 3-vectors, column-major complex matrices and a
//! Householder least-squares solver for the trajectory fits.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn cast<U: Real>(self) -> Point3<U> {
        Point3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Add for Point3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Point3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Point3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Point3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    /// Builds a matrix from equally sized columns.
    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    what: "column length",
                    expected: rows,
                    got: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[Complex<T>] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Copies row `r` out (rows are strided in column-major storage).
    pub fn row(&self, r: usize) -> Vec<Complex<T>> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Frobenius inner product `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                what: "matrix shape",
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            }))
    }
}

/// `sum conj(a) * b`.
#[inline]
pub fn cdot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * y
        })
}

pub fn cnorm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
}

/// Least-squares solution of `A x = b` for a tall, full-column-rank `A`
/// given row-major as `rows x cols`, via Householder QR.
pub fn least_squares<T: Real>(a: &[T], rows: usize, cols: usize, b: &[T]) -> Result<Vec<T>> {
    if rows < cols {
        return Err(Error::InsufficientPoints {
            have: rows,
            need: cols,
        });
    }
    if a.len() != rows * cols || b.len() != rows {
        return Err(Error::DimensionMismatch {
            what: "least squares system",
            expected: rows * cols,
            got: a.len(),
        });
    }
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let at = |r: usize, c: usize| r * cols + c;

    for k in 0..cols {
        let norm = (k..rows).map(|r| m[at(r, k)].powi(2)).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(invalid_rank());
        }
        let alpha = if m[at(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..rows).map(|r| m[at(r, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = v.iter().map(|x| x.powi(2)).sum::<T>();
        if vnorm2 == T::zero() {
            continue;
        }
        for c in k..cols {
            let s = (k..rows).map(|r| v[r - k] * m[at(r, c)]).sum::<T>();
            let f = T::lit(2.0) * s / vnorm2;
            for r in k..rows {
                m[at(r, c)] -= f * v[r - k];
            }
        }
        let s = (k..rows).map(|r| v[r - k] * rhs[r]).sum::<T>();
        let f = T::lit(2.0) * s / vnorm2;
        for r in k..rows {
            rhs[r] -= f * v[r - k];
        }
    }

    let mut x = vec![T::zero(); cols];
    for k in (0..cols).rev() {
        let diag = m[at(k, k)];
        if diag.abs() <= T::epsilon() * T::lit(1e3) {
            return Err(invalid_rank());
        }
        let s = ((k + 1)..cols).map(|c| m[at(k, c)] * x[c]).sum::<T>();
        x[k] = (rhs[k] - s) / diag;
    }
    Ok(x)
}

fn invalid_rank() -> Error {
    Error::InvalidParameter("rank-deficient least-squares system".into())
}
