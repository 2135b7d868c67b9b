//! Complex-vector kernels shared by every modem in the crate.
//!
//! The DFT here is deliberately unnormalized in both directions: the forward
//! transform computes `F_n x` with `F_n[a, b] = exp(-j 2 pi a b / n)` and the
//! inverse computes `F_n^H x` without the `1/n` factor. Callers apply every
//! `1/K`, `1/M` or `1/N` scale explicitly.
//!
//! Polyphase and Zak transforms follow the row-major convention
//! `V_{Q,P}(a)[q, p] = a[p + q P]`, so a polyphase matrix is just the input
//! vector reinterpreted as a `Q x P` row-major matrix.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{GfdmError, Result};

pub type C64 = Complex64;

/// A length-n sequence of complex samples.
pub type ComplexVec = Vec<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn is_power_of_two(n: usize) -> bool {
    n >= 1 && n.is_power_of_two()
}

pub fn log2(n: usize) -> u32 {
    n.trailing_zeros()
}

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMat { rows, cols, data }
    }

    /// Wraps row-major `data`; fails unless `rows * cols == data.len()`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(GfdmError::DimensionMismatch(format!(
                "{} samples cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMat { rows, cols, data })
    }

    /// Builds a matrix from column-major `data` (the `unvec` operator).
    pub fn from_col_major(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(GfdmError::DimensionMismatch(format!(
                "{} samples cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |r, c| data[r + c * rows]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_row_major(self) -> Vec<C64> {
        self.data
    }

    /// Column-major vectorization (`vec(A)`).
    pub fn to_col_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> ComplexMat {
        ComplexMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[C64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (r, v) in values.iter().enumerate() {
            self[(r, c)] = *v;
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> ComplexMat {
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> ComplexMat {
        self.map(|v| v * s)
    }

    /// Element-wise product; shapes must agree.
    pub fn hadamard(&self, other: &ComplexMat) -> Result<ComplexMat> {
        if self.shape() != other.shape() {
            return Err(GfdmError::DimensionMismatch(format!(
                "element-wise product of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Largest element-wise distance `max |a - b|`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &ComplexMat) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        max_abs_diff(&self.data, &other.data)
    }

    /// Applies a DFT to every column, then multiplies by `scale`.
    pub fn dft_columns(
        &self,
        dir: Direction,
        scale: f64,
        counter: Option<&MulCounter>,
    ) -> Result<ComplexMat> {
        let plan = Radix2Fft::new(self.rows)?;
        let mut out = ComplexMat::zeros(self.rows, self.cols);
        let mut buf = vec![ZERO; self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                buf[r] = self[(r, c)];
            }
            plan.process(&mut buf, dir, counter);
            for r in 0..self.rows {
                out[(r, c)] = buf[r] * scale;
            }
        }
        Ok(out)
    }

    /// Applies a DFT to every row, then multiplies by `scale`.
    pub fn dft_rows(
        &self,
        dir: Direction,
        scale: f64,
        counter: Option<&MulCounter>,
    ) -> Result<ComplexMat> {
        let plan = Radix2Fft::new(self.cols)?;
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols.max(1)) {
            plan.process(row, dir, counter);
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for ComplexMat {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for ComplexMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for v in self.row(r) {
                write!(f, "{:+.4}{:+.4}j ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn max_abs(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Running tally of complex multiplications.
///
/// Counts only grow between explicit [`MulCounter::reset`] calls. Each
/// increment is also attributed to a label so mismatches can be broken down
/// per stage.
#[derive(Debug, Default)]
pub struct MulCounter {
    total: Cell<u64>,
    by_label: RefCell<BTreeMap<String, u64>>,
}

impl MulCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, label: &str, n: u64) {
        self.total.set(self.total.get() + n);
        *self.by_label.borrow_mut().entry(label.to_string()).or_insert(0) += n;
    }

    pub fn count(&self) -> u64 {
        self.total.get()
    }

    pub fn breakdown(&self) -> BTreeMap<String, u64> {
        self.by_label.borrow().clone()
    }

    pub fn reset(&self) {
        self.total.set(0);
        self.by_label.borrow_mut().clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Forward => 'D',
            Direction::Inverse => 'I',
        }
    }
}

/// Iterative in-place radix-2 decimation-in-time transform of one size.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    n: usize,
    twiddles: Vec<C64>,
    bitrev: Vec<usize>,
}

impl Radix2Fft {
    pub fn new(n: usize) -> Result<Self> {
        if !is_power_of_two(n) {
            return Err(GfdmError::NotPowerOfTwo(n));
        }
        let bits = log2(n);
        let bitrev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Radix2Fft {
            n,
            twiddles,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Multiplications charged for one transform: `(n/2) log2 n`, or zero for `n <= 2`.
    pub fn mul_cost(&self) -> u64 {
        if self.n <= 2 {
            0
        } else {
            (self.n as u64 / 2) * log2(self.n) as u64
        }
    }

    /// Transforms `buf` in place. `buf.len()` must equal the plan size.
    pub fn process(&self, buf: &mut [C64], dir: Direction, counter: Option<&MulCounter>) {
        assert_eq!(buf.len(), self.n, "buffer length does not match plan");
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if dir == Direction::Inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
        if let Some(c) = counter {
            let cost = self.mul_cost();
            if cost > 0 {
                let label = match dir {
                    Direction::Forward => format!("fft{n}"),
                    Direction::Inverse => format!("ifft{n}"),
                };
                c.add(&label, cost);
            }
        }
    }
}

/// Unnormalized DFT (`Forward`) or conjugate DFT (`Inverse`) of `x`.
pub fn dft(x: &[C64], dir: Direction, counter: Option<&MulCounter>) -> Result<ComplexVec> {
    let plan = Radix2Fft::new(x.len())?;
    let mut buf = x.to_vec();
    plan.process(&mut buf, dir, counter);
    Ok(buf)
}

/// `V_{Q,P}(a)[q, p] = a[p + q P]`.
pub fn polyphase(a: &[C64], q: usize, p: usize) -> Result<ComplexMat> {
    ComplexMat::from_row_major(q, p, a.to_vec())
}

/// Inverse of [`polyphase`].
pub fn unpolyphase(v: &ComplexMat) -> ComplexVec {
    v.as_slice().to_vec()
}

/// Time-domain discrete Zak transform `Z_{Q,P}(a) = F_Q V_{Q,P}(a)`.
pub fn zak_time(a: &[C64], q: usize, p: usize) -> Result<ComplexMat> {
    polyphase(a, q, p)?.dft_columns(Direction::Forward, 1.0, None)
}

/// Frequency-domain dual Zak transform `(1/P) F_P^H V_{P,Q}(a~)`.
pub fn zak_freq(a_freq: &[C64], p: usize, q: usize) -> Result<ComplexMat> {
    polyphase(a_freq, p, q)?.dft_columns(Direction::Inverse, 1.0 / p as f64, None)
}
