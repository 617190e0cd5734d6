//! Golay complementary pairs and the correlators built on them.
//!
//! A pair `(a, b)` of ±1 sequences is complementary when the aperiodic
//! autocorrelations add up to `2N` at lag zero and vanish everywhere else.
//! The preamble correlators in [`crate::sync`] and [`crate::radar`] only rely
//! on that property, so the recursive length-doubling construction is used by
//! default and an override file can substitute the exact standard sequences.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// A binary (±1) sequence.
#[derive(Clone, PartialEq, Eq)]
pub struct GolaySeq {
    values: Vec<i8>,
}

impl GolaySeq {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.is_empty() {
            return invalid("empty sequence");
        }
        if let Some(v) = values.iter().find(|v| **v != 1 && **v != -1) {
            return invalid(format!("sequence symbol {v} is not +1 or -1"));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect()
    }

    pub fn negated(&self) -> Self {
        Self { values: self.values.iter().map(|v| -v).collect() }
    }

    pub fn concat(parts: &[&GolaySeq]) -> Self {
        Self { values: parts.iter().flat_map(|p| p.values.iter().copied()).collect() }
    }

    /// Integer aperiodic autocorrelation over lags `-(N-1)..=(N-1)`.
    pub fn autocorr(&self) -> Vec<i64> {
        let n = self.len();
        let mut out = vec![0i64; 2 * n - 1];
        for lag in 0..n {
            let s: i64 = (lag..n).map(|i| self.values[i] as i64 * self.values[i - lag] as i64).sum();
            out[n - 1 + lag] = s;
            out[n - 1 - lag] = s;
        }
        out
    }
}

impl fmt::Debug for GolaySeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GolaySeq(len={})", self.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GolayPair {
    pub a: GolaySeq,
    pub b: GolaySeq,
}

impl GolayPair {
    pub fn new(a: GolaySeq, b: GolaySeq) -> Result<Self> {
        if a.len() != b.len() {
            return invalid(format!("pair lengths differ: {} vs {}", a.len(), b.len()));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Exact integer check of the aperiodic complementarity property.
    pub fn is_complementary(&self) -> bool {
        let n = self.len() as i64;
        let ra = self.a.autocorr();
        let rb = self.b.autocorr();
        let mid = self.len() - 1;
        ra.iter().zip(&rb).enumerate().all(|(i, (x, y))| if i == mid { x + y == 2 * n } else { x + y == 0 })
    }

    /// Periodic (cyclic) complementarity: sum of cyclic autocorrelations is `2N·δ`.
    pub fn is_periodic_complementary(&self) -> bool {
        let n = self.len();
        let a = self.a.values();
        let b = self.b.values();
        (0..n).all(|d| {
            let s: i64 =
                (0..n).map(|i| a[i] as i64 * a[(i + d) % n] as i64 + b[i] as i64 * b[(i + d) % n] as i64).sum();
            if d == 0 {
                s == 2 * n as i64
            } else {
                s == 0
            }
        })
    }

    /// Reads an override pair: `2N` lines of `+1`/`-1`, the `a` sequence first.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let file_err = |reason: String| Error::SequenceFile { path: path.to_path_buf(), reason };
        let mut symbols = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v: i8 = match t {
                "1" | "+1" => 1,
                "-1" => -1,
                other => return Err(file_err(format!("line {}: bad symbol {other:?}", lineno + 1))),
            };
            symbols.push(v);
        }
        if symbols.len() < 2 || symbols.len() % 2 != 0 {
            return Err(file_err(format!("expected an even symbol count, got {}", symbols.len())));
        }
        let half = symbols.len() / 2;
        let b = symbols.split_off(half);
        let pair = GolayPair::new(GolaySeq::new(symbols)?, GolaySeq::new(b)?)?;
        if !pair.is_complementary() {
            return Err(file_err("sequences are not a complementary pair".into()));
        }
        Ok(pair)
    }
}

/// Recursive construction `a' = [a b]`, `b' = [a -b]` seeded with `[+1]`.
pub fn generate_golay_pair(length: usize) -> Result<GolayPair> {
    if length < 2 || !length.is_power_of_two() {
        return invalid(format!("Golay length must be 2^k with k >= 1, got {length}"));
    }
    let mut a = vec![1i8];
    let mut b = vec![1i8];
    while a.len() < length {
        let mut na = a.clone();
        na.extend_from_slice(&b);
        let mut nb = a;
        nb.extend(b.iter().map(|v| -v));
        a = na;
        b = nb;
    }
    GolayPair::new(GolaySeq { values: a }, GolaySeq { values: b })
}

/// `out[lag + N - 1] = Σ_n seq[n]·conj(seq[n - lag])` for lags `-(N-1)..=(N-1)`.
pub fn aperiodic_autocorr(seq: &[Complex64]) -> Result<Vec<Complex64>> {
    if seq.is_empty() {
        return invalid("autocorrelation of an empty sequence");
    }
    let n = seq.len();
    let mut out = vec![Complex64::default(); 2 * n - 1];
    for lag in -(n as isize - 1)..=(n as isize - 1) {
        let mut acc = Complex64::default();
        for i in 0..n as isize {
            let j = i - lag;
            if (0..n as isize).contains(&j) {
                acc += seq[i as usize] * seq[j as usize].conj();
            }
        }
        out[(lag + n as isize - 1) as usize] = acc;
    }
    Ok(out)
}

/// Linear pair correlator
/// `γ(ℓ) = (Σ_n rx[n+ℓ]·a*[n] + Σ_n rx[n+ℓ+N]·b*[n]) / 2N` for `ℓ = 0..n_lags`.
///
/// `rx` must hold at least `2N + n_lags - 1` samples.
pub fn pair_correlate(rx: &[Complex64], a: &[Complex64], b: &[Complex64], n_lags: usize) -> Result<Vec<Complex64>> {
    let n = a.len();
    if n == 0 || b.len() != n {
        return invalid("reference sequences must be nonempty and of equal length");
    }
    if rx.len() < 2 * n || n_lags == 0 || rx.len() < 2 * n + n_lags - 1 {
        return invalid(format!(
            "received sequence of {} samples too short for {} lags of a length-{n} pair",
            rx.len(),
            n_lags
        ));
    }
    let scale = 1.0 / (2 * n) as f64;
    Ok((0..n_lags)
        .map(|l| {
            let mut acc = Complex64::default();
            for i in 0..n {
                acc += rx[l + i] * a[i].conj() + rx[l + i + n] * b[i].conj();
            }
            acc * scale
        })
        .collect())
}

/// Cyclic pair correlator over two length-`N` blocks with the cyclic prefix
/// already removed:
/// `γ_c(d) = (Σ_n x[(n+d) mod N]·a*[n] + Σ_n y[(n+d) mod N]·b*[n]) / 2N`.
///
/// Computed with FFTs; [`CyclicPairCorrelator::correlate_direct`] is the
/// plain O(N²) reference.
#[derive(Clone)]
pub struct CyclicPairCorrelator {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    a_spec: Vec<Complex64>,
    b_spec: Vec<Complex64>,
}

impl fmt::Debug for CyclicPairCorrelator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CyclicPairCorrelator").field("n", &self.n).finish()
    }
}

impl CyclicPairCorrelator {
    pub fn new(a: Vec<Complex64>, b: Vec<Complex64>) -> Result<Self> {
        let n = a.len();
        if n == 0 || b.len() != n {
            return invalid("reference sequences must be nonempty and of equal length");
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut a_spec = a.clone();
        let mut b_spec = b.clone();
        fwd.process(&mut a_spec);
        fwd.process(&mut b_spec);
        Ok(Self { n, fwd, inv, a, b, a_spec, b_spec })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn correlate(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(x, y)?;
        let mut xs = x.to_vec();
        let mut ys = y.to_vec();
        self.fwd.process(&mut xs);
        self.fwd.process(&mut ys);
        // corr(d) = Σ x[n+d] a*[n]  <=>  X(k)·conj(A(k))
        let mut acc: Vec<Complex64> = xs
            .iter()
            .zip(&ys)
            .zip(self.a_spec.iter().zip(&self.b_spec))
            .map(|((xk, yk), (ak, bk))| xk * ak.conj() + yk * bk.conj())
            .collect();
        self.inv.process(&mut acc);
        let scale = 1.0 / (2 * self.n * self.n) as f64;
        acc.iter_mut().for_each(|v| *v *= scale);
        Ok(acc)
    }

    pub fn correlate_direct(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(x, y)?;
        let n = self.n;
        let scale = 1.0 / (2 * n) as f64;
        Ok((0..n)
            .map(|d| {
                let mut acc = Complex64::default();
                for i in 0..n {
                    let j = (i + d) % n;
                    acc += x[j] * self.a[i].conj() + y[j] * self.b[i].conj();
                }
                acc * scale
            })
            .collect())
    }

    fn check(&self, x: &[Complex64], y: &[Complex64]) -> Result<()> {
        if x.len() != self.n || y.len() != self.n {
            return invalid(format!(
                "cyclic correlator expects two blocks of {} samples, got {} and {}",
                self.n,
                x.len(),
                y.len()
            ));
        }
        Ok(())
    }
}
