//! Cyclic prefix handling, multipath channel with AWGN, one-tap equalizer
//! and QPSK helpers for the loopback chain.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GfdmError, Result};
use crate::numerics::{dft, energy, ComplexVec, Direction, MulCounter, C64, ZERO};

/// Threshold on `min |H~|` below which the equalizer refuses to divide.
pub const CHANNEL_NULL_EPS: f64 = 1e-8;

/// Static multipath channel plus AWGN.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub taps: ComplexVec,
    /// `None` disables noise.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl ChannelSpec {
    pub fn new(taps: ComplexVec, snr_db: Option<f64>, seed: u64) -> Result<Self> {
        let spec = ChannelSpec { taps, snr_db, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Single unit tap, no noise.
    pub fn identity() -> Self {
        ChannelSpec {
            taps: vec![C64::new(1.0, 0.0)],
            snr_db: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(GfdmError::InvalidConfig("channel needs at least one tap".into()));
        }
        if self.taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(GfdmError::InvalidConfig("channel taps must be finite".into()));
        }
        if matches!(self.snr_db, Some(s) if s.is_nan()) {
            return Err(GfdmError::InvalidConfig("snr_db is NaN".into()));
        }
        Ok(())
    }

    /// True when a prefix of `n_cp` samples absorbs the channel memory.
    pub fn ibi_free(&self, n_cp: usize) -> bool {
        self.taps.len() <= n_cp + 1
    }

    /// Seeded random taps with an exponentially decaying power profile,
    /// normalized to unit energy.
    pub fn random_taps(n_taps: usize, seed: u64) -> ComplexVec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut taps: ComplexVec = (0..n_taps)
            .map(|i| gaussian(&mut rng) * (-(i as f64) / 2.0).exp())
            .collect();
        let e = energy(&taps).sqrt();
        if e > 0.0 {
            taps.iter_mut().for_each(|t| *t /= e);
        }
        taps
    }
}

/// Prepends the last `n_cp` samples and appends the first `n_cs`.
pub fn add_cp(x: &[C64], n_cp: usize, n_cs: usize) -> Result<ComplexVec> {
    let n = x.len();
    if n_cp > n || n_cs > n {
        return Err(GfdmError::InvalidConfig(format!(
            "CP={n_cp}/CS={n_cs} longer than the block of {n}"
        )));
    }
    let mut out = Vec::with_capacity(n + n_cp + n_cs);
    out.extend_from_slice(&x[n - n_cp..]);
    out.extend_from_slice(x);
    out.extend_from_slice(&x[..n_cs]);
    Ok(out)
}

/// Drops the first `n_cp` and last `n_cs` samples.
pub fn remove_cp(y: &[C64], n_cp: usize, n_cs: usize) -> Result<ComplexVec> {
    if n_cp + n_cs > y.len() {
        return Err(GfdmError::InvalidConfig(format!(
            "CP={n_cp}/CS={n_cs} longer than the received {} samples",
            y.len()
        )));
    }
    Ok(y[n_cp..y.len() - n_cs].to_vec())
}

/// Standard complex Gaussian (unit variance, `1/2` per component) via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    // 1 - U keeps the logarithm argument in (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    C64::new(r * c, r * s) * FRAC_1_SQRT_2
}

/// Linear convolution with the taps, truncated to the input length, plus
/// complex Gaussian noise at `snr_db` relative to the mean received power.
pub fn apply_channel(x_cp: &[C64], spec: &ChannelSpec) -> ComplexVec {
    let mut y = vec![ZERO; x_cp.len()];
    for (i, out) in y.iter_mut().enumerate() {
        for (l, t) in spec.taps.iter().enumerate().take(i + 1) {
            *out += t * x_cp[i - l];
        }
    }
    if let Some(snr_db) = spec.snr_db {
        if snr_db.is_finite() && !y.is_empty() {
            let power = energy(&y) / y.len() as f64;
            let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for v in y.iter_mut() {
                *v += gaussian(&mut rng) * sigma;
            }
        }
    }
    y
}

/// `N`-point channel frequency response.
pub fn channel_response(taps: &[C64], n: usize) -> Result<ComplexVec> {
    if taps.len() > n {
        return Err(GfdmError::DimensionMismatch(format!(
            "{} taps exceed the block of {n}",
            taps.len()
        )));
    }
    let mut padded = vec![ZERO; n];
    padded[..taps.len()].copy_from_slice(taps);
    dft(&padded, Direction::Forward, None)
}

/// One-tap zero-forcing equalizer. Returns the equalized spectrum
/// `(F_N y)[q] / H~[q]`; only the `N`-point transform is counted.
pub fn fd_equalize_zf(y: &[C64], taps: &[C64], counter: Option<&MulCounter>) -> Result<ComplexVec> {
    let h = channel_response(taps, y.len())?;
    let (bin, min_abs) = h
        .iter()
        .map(|v| v.norm())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    if min_abs <= CHANNEL_NULL_EPS {
        return Err(GfdmError::SingularChannel { min_abs, bin });
    }
    let yf = dft(y, Direction::Forward, counter)?;
    Ok(yf.iter().zip(&h).map(|(a, b)| a / b).collect())
}

/// Unit-energy QPSK symbols drawn from a seeded generator.
pub fn random_qpsk(count: usize, seed: u64) -> ComplexVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let b: u8 = rng.gen_range(0..4);
            qpsk_point(b)
        })
        .collect()
}

fn qpsk_point(b: u8) -> C64 {
    let re = if b & 1 == 0 { 1.0 } else { -1.0 };
    let im = if b & 2 == 0 { 1.0 } else { -1.0 };
    C64::new(re, im) * FRAC_1_SQRT_2
}

/// Hard QPSK decision.
pub fn qpsk_decide(v: C64) -> C64 {
    qpsk_point(u8::from(v.re < 0.0) | (u8::from(v.im < 0.0) << 1))
}

/// Fraction of QPSK decisions on `rx` that differ from `tx`.
pub fn symbol_error_rate(tx: &[C64], rx: &[C64]) -> f64 {
    if tx.is_empty() {
        return 0.0;
    }
    let errors = tx
        .iter()
        .zip(rx)
        .filter(|(a, b)| qpsk_decide(**a) != qpsk_decide(**b))
        .count();
    errors as f64 / tx.len() as f64
}

/// `sum |ref - est|^2 / sum |ref|^2`.
pub fn nmse(reference: &[C64], estimate: &[C64]) -> f64 {
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    err / energy(reference)
}
