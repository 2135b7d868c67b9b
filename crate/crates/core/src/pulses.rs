//! Prototype pulse synthesis and the transmit/receive windows derived from it.
//!
//! A window is the Zak-domain picture of the prototype pulse: a `K x M` array
//! of element-wise multipliers that turns the block circular convolution into
//! a single Hadamard product. The time-domain and frequency-domain modems use
//! different windows; the two differ by the twiddle `exp(-j 2 pi k m / N)`
//! (see [`duality_twiddle`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{GfdmError, Result};
use crate::numerics::{
    dft, energy, is_power_of_two, zak_freq, zak_time, ComplexMat, ComplexVec, Direction, C64,
    ZERO,
};

/// Default threshold below which a transmit window entry counts as zero.
pub const DEFAULT_SINGULAR_EPS: f64 = 1e-8;

/// Default relative threshold separating designed spectral zeros from roundoff.
pub const DEFAULT_SPARSITY_TOL: f64 = 1e-12;

/// Block geometry: `K` subcarriers by `M` subsymbols plus the active sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GfdmParams {
    pub k: usize,
    pub m: usize,
    pub k_on: Vec<usize>,
    pub m_on: Vec<usize>,
}

impl GfdmParams {
    /// Geometry with every subcarrier and subsymbol active.
    pub fn new(k: usize, m: usize) -> Result<Self> {
        Self::with_active(k, m, (0..k).collect(), (0..m).collect())
    }

    pub fn with_active(k: usize, m: usize, k_on: Vec<usize>, m_on: Vec<usize>) -> Result<Self> {
        let p = GfdmParams { k, m, k_on, m_on };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_power_of_two(self.k) || !is_power_of_two(self.m) {
            return Err(GfdmError::InvalidConfig(format!(
                "K={} and M={} must both be powers of two",
                self.k, self.m
            )));
        }
        check_active_set("K_on", &self.k_on, self.k)?;
        check_active_set("M_on", &self.m_on, self.m)?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.k * self.m
    }

    /// Number of active resource elements `|K_on| * |M_on|`.
    pub fn active_len(&self) -> usize {
        self.k_on.len() * self.m_on.len()
    }
}

fn check_active_set(name: &str, set: &[usize], bound: usize) -> Result<()> {
    if set.is_empty() {
        return Err(GfdmError::InvalidConfig(format!("{name} is empty")));
    }
    let mut seen = vec![false; bound];
    for &i in set {
        if i >= bound {
            return Err(GfdmError::InvalidConfig(format!(
                "{name} contains {i}, outside 0..{bound}"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(GfdmError::InvalidConfig(format!("{name} repeats index {i}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// Raised cosine, sampled in frequency.
    Rc,
    /// Root raised cosine, sampled in frequency.
    Rrc,
    /// Rectangle over `M` frequency bins: the orthogonal, single-band pulse.
    Dirichlet,
    /// Rectangle over one subsymbol in time. With `M = 1` this is OFDM.
    RectTd,
}

impl std::str::FromStr for PulseKind {
    type Err = GfdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rc" => Ok(PulseKind::Rc),
            "rrc" => Ok(PulseKind::Rrc),
            "dirichlet" => Ok(PulseKind::Dirichlet),
            "rect_td" | "rect" => Ok(PulseKind::RectTd),
            other => Err(GfdmError::InvalidConfig(format!("unknown pulse kind '{other}'"))),
        }
    }
}

/// Which Zak representation a modem works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[serde(alias = "td")]
    Time,
    #[serde(alias = "fd")]
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RxKind {
    #[serde(alias = "zf")]
    ZeroForcing,
    #[serde(alias = "mf")]
    MatchedFilter,
}

/// Periodic length-`N` prototype pulse with its `N`-point spectrum.
///
/// Always carries unit energy in time: `||g||^2 = 1`, `||g~||^2 = N`.
#[derive(Debug, Clone)]
pub struct PrototypePulse {
    params: GfdmParams,
    kind: Option<PulseKind>,
    rolloff: f64,
    shift: f64,
    time: ComplexVec,
    freq: ComplexVec,
}

/// Raised-cosine spectral shape `r_alpha(u)`.
fn raised_cosine(u: f64, alpha: f64) -> f64 {
    let u = u.abs();
    let flat = (1.0 - alpha) / 2.0;
    if u <= flat {
        1.0
    } else if u <= (1.0 + alpha) / 2.0 {
        0.5 * (1.0 + (PI / alpha * (u - flat)).cos())
    } else {
        0.0
    }
}

/// Synthesizes a prototype pulse for `params`.
///
/// `rolloff` must lie in `[0, 1]` and `shift` must be `0` or `0.5`; both only
/// affect the raised-cosine family. A singular design (for example `Rc` with
/// `rolloff = 0`, `shift = 0` and even `K`, `M`) is accepted here and rejected
/// when a zero-forcing window is requested.
pub fn make_prototype(
    kind: PulseKind,
    params: &GfdmParams,
    rolloff: f64,
    shift: f64,
) -> Result<PrototypePulse> {
    params.validate()?;
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(GfdmError::InvalidConfig(format!(
            "roll-off {rolloff} outside [0, 1]"
        )));
    }
    if shift != 0.0 && shift != 0.5 {
        return Err(GfdmError::InvalidConfig(format!(
            "grid shift {shift} must be 0 or 1/2"
        )));
    }
    let (k, m, n) = (params.k, params.m, params.n());

    let (time, freq) = match kind {
        PulseKind::Rc | PulseKind::Rrc => {
            let mut freq = vec![ZERO; n];
            // Two subcarrier bands around DC; with a single subcarrier the
            // whole period is one band.
            let (lo, hi) = if k == 1 {
                let half = (m / 2) as i64;
                (-half, m as i64 - half)
            } else {
                (-(m as i64), m as i64)
            };
            for q in lo..hi {
                let u = (q as f64 + shift) / m as f64;
                let mut v = raised_cosine(u, rolloff);
                if kind == PulseKind::Rrc {
                    v = v.sqrt();
                }
                freq[q.rem_euclid(n as i64) as usize] = C64::new(v, 0.0);
            }
            let time = time_from_freq(&freq)?;
            (time, freq)
        }
        PulseKind::Dirichlet => {
            let mut freq = vec![ZERO; n];
            for v in freq.iter_mut().take(m) {
                *v = C64::new(1.0, 0.0);
            }
            let time = time_from_freq(&freq)?;
            (time, freq)
        }
        PulseKind::RectTd => {
            let mut time = vec![ZERO; n];
            for v in time.iter_mut().take(k) {
                *v = C64::new(1.0, 0.0);
            }
            let freq = dft(&time, Direction::Forward, None)?;
            (time, freq)
        }
    };

    let mut pulse = PrototypePulse {
        params: params.clone(),
        kind: Some(kind),
        rolloff,
        shift,
        time,
        freq,
    };
    pulse.normalize()?;
    Ok(pulse)
}

fn time_from_freq(freq: &[C64]) -> Result<ComplexVec> {
    let n = freq.len() as f64;
    Ok(dft(freq, Direction::Inverse, None)?
        .into_iter()
        .map(|v| v / n)
        .collect())
}

impl PrototypePulse {
    /// Wraps arbitrary time samples as a prototype pulse, rescaled to unit energy.
    pub fn from_time(params: &GfdmParams, time: ComplexVec) -> Result<Self> {
        params.validate()?;
        if time.len() != params.n() {
            return Err(GfdmError::DimensionMismatch(format!(
                "pulse has {} samples, block has N={}",
                time.len(),
                params.n()
            )));
        }
        let freq = dft(&time, Direction::Forward, None)?;
        let mut pulse = PrototypePulse {
            params: params.clone(),
            kind: None,
            rolloff: 0.0,
            shift: 0.0,
            time,
            freq,
        };
        pulse.normalize()?;
        Ok(pulse)
    }

    fn normalize(&mut self) -> Result<()> {
        let e = energy(&self.time);
        if !(e.is_finite() && e > 0.0) {
            return Err(GfdmError::InvalidConfig("pulse has zero energy".into()));
        }
        let s = 1.0 / e.sqrt();
        self.time.iter_mut().for_each(|v| *v *= s);
        self.freq.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    /// Circularly delays the pulse: `g'[n] = g[<n - samples>_N]`.
    pub fn delayed(&self, samples: usize) -> PrototypePulse {
        let n = self.time.len();
        let time: ComplexVec = (0..n).map(|i| self.time[(i + n - samples % n) % n]).collect();
        let freq = (0..n)
            .map(|q| {
                self.freq[q]
                    * C64::from_polar(1.0, -2.0 * PI * (q * (samples % n)) as f64 / n as f64)
            })
            .collect();
        PrototypePulse {
            params: self.params.clone(),
            kind: None,
            rolloff: self.rolloff,
            shift: self.shift,
            time,
            freq,
        }
    }

    pub fn params(&self) -> &GfdmParams {
        &self.params
    }

    pub fn kind(&self) -> Option<PulseKind> {
        self.kind
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn time(&self) -> &[C64] {
        &self.time
    }

    pub fn freq(&self) -> &[C64] {
        &self.freq
    }
}

/// Transmit window `W_tx` (`K x M`) for the chosen modem domain.
///
/// Time domain: `K Z_{M,K}(g)^T`. Frequency domain: `K Zbar_{K,M}(g~)`.
pub fn tx_window(g: &PrototypePulse, domain: Domain) -> Result<ComplexMat> {
    let (k, m) = (g.params.k, g.params.m);
    let kf = k as f64;
    match domain {
        Domain::Time => Ok(zak_time(&g.time, m, k)?.transpose().scale(kf)),
        Domain::Frequency => Ok(zak_freq(&g.freq, k, m)?.scale(kf)),
    }
}

/// `exp(-j 2 pi k m / N)`: the factor mapping a time-domain window onto the
/// frequency-domain window of the same pulse.
pub fn duality_twiddle(k: usize, m: usize) -> ComplexMat {
    let n = (k * m) as f64;
    ComplexMat::from_fn(k, m, |kk, mm| {
        C64::from_polar(1.0, -2.0 * PI * (kk * mm) as f64 / n)
    })
}

/// Receive window for `w_tx`.
///
/// Zero forcing inverts every entry, so that `W_rx . W_tx = 1` and the
/// demodulator undoes the modulator exactly. Matched filtering conjugates,
/// which makes the demodulator compute `K A^H y`.
pub fn rx_window(w_tx: &ComplexMat, kind: RxKind, eps: f64) -> Result<ComplexMat> {
    match kind {
        RxKind::ZeroForcing => {
            let mut worst = (f64::INFINITY, 0, 0);
            for k in 0..w_tx.rows() {
                for m in 0..w_tx.cols() {
                    let a = w_tx[(k, m)].norm();
                    if a < worst.0 {
                        worst = (a, k, m);
                    }
                }
            }
            if worst.0 <= eps {
                return Err(GfdmError::SingularWindow {
                    min_abs: worst.0,
                    k: worst.1,
                    m: worst.2,
                });
            }
            Ok(w_tx.map(|v| v.inv()))
        }
        RxKind::MatchedFilter => Ok(w_tx.map(|v| v.conj())),
    }
}

/// Transmit and receive windows for one modem domain.
#[derive(Debug, Clone)]
pub struct WindowPair {
    pub domain: Domain,
    pub w_tx: ComplexMat,
    pub w_rx: ComplexMat,
    pub rx_kind: RxKind,
}

impl WindowPair {
    pub fn new(g: &PrototypePulse, domain: Domain, rx_kind: RxKind, eps: f64) -> Result<Self> {
        let w_tx = tx_window(g, domain)?;
        let w_rx = rx_window(&w_tx, rx_kind, eps)?;
        Ok(WindowPair {
            domain,
            w_tx,
            w_rx,
            rx_kind,
        })
    }
}

/// Indices of the `M`-bin bands of `spectrum` holding any sample above
/// `tol * max|spectrum|`.
pub fn occupied_bands(spectrum: &[C64], k: usize, m: usize, tol: f64) -> Vec<usize> {
    let peak = spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    (0..k)
        .filter(|&b| spectrum[b * m..(b + 1) * m].iter().any(|v| v.norm() > tol * peak))
        .collect()
}

/// Length of the shortest circular run of bands covering `occupied` out of `k`.
pub fn circular_span(occupied: &[usize], k: usize) -> usize {
    if occupied.is_empty() {
        return 0;
    }
    let mut used = vec![false; k];
    for &b in occupied {
        used[b] = true;
    }
    // The span is everything except the longest circular gap.
    let mut longest_gap = 0;
    let mut run = 0;
    for i in 0..2 * k {
        if used[i % k] {
            run = 0;
        } else {
            run += 1;
            longest_gap = longest_gap.max(run.min(k));
        }
    }
    k - longest_gap
}

/// Number of consecutive subcarrier bands the pulse spectrum spans.
pub fn freq_overlap(g: &PrototypePulse, tol: f64) -> usize {
    let (k, m) = (g.params.k, g.params.m);
    circular_span(&occupied_bands(&g.freq, k, m, tol), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs_diff;

    fn params(k: usize, m: usize) -> GfdmParams {
        GfdmParams::new(k, m).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GfdmParams::new(6, 4).is_err());
        assert!(GfdmParams::with_active(4, 4, vec![], vec![0]).is_err());
        assert!(GfdmParams::with_active(4, 4, vec![4], vec![0]).is_err());
        assert!(GfdmParams::with_active(4, 4, vec![1, 1], vec![0]).is_err());
        let p = GfdmParams::with_active(4, 2, vec![1, 3], vec![0]).unwrap();
        assert_eq!((p.n(), p.active_len()), (8, 2));
    }

    #[test]
    fn rect_td_with_one_subsymbol_is_ofdm() {
        let g = make_prototype(PulseKind::RectTd, &params(4, 1), 0.0, 0.0).unwrap();
        for v in g.time() {
            assert!((v - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rc_nonzero_bins() {
        // Brute-force count over the sampling grid: |q + 1/2| / 4 <= 3/4
        // holds for q in -4..=2, minus q = -4 whose |u| = 0.875.
        let expected = (-4i32..4)
            .filter(|&q| ((q as f64 + 0.5) / 4.0).abs() <= 0.75)
            .count();
        assert_eq!(expected, 6);
        let g = make_prototype(PulseKind::Rc, &params(4, 4), 0.5, 0.5).unwrap();
        let nnz = g.freq().iter().filter(|v| v.norm() > 1e-12).count();
        assert_eq!(nnz, expected);
        assert_eq!(freq_overlap(&g, DEFAULT_SPARSITY_TOL), 2);
    }

    #[test]
    fn energy_normalization() {
        for kind in [PulseKind::Rc, PulseKind::Rrc, PulseKind::Dirichlet, PulseKind::RectTd] {
            for (k, m) in [(4, 4), (8, 2), (1, 8), (16, 1)] {
                let g = make_prototype(kind, &params(k, m), 0.5, 0.5).unwrap();
                assert!((energy(g.time()) - 1.0).abs() < 1e-12);
                assert!((energy(g.freq()) - (k * m) as f64).abs() < 1e-9);
                let f = dft(g.time(), Direction::Forward, None).unwrap();
                assert!(max_abs_diff(&f, g.freq()) < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_rolloff_and_shift() {
        assert!(make_prototype(PulseKind::Rc, &params(4, 4), 1.5, 0.0).is_err());
        assert!(make_prototype(PulseKind::Rc, &params(4, 4), -0.1, 0.0).is_err());
        assert!(make_prototype(PulseKind::Rc, &params(4, 4), 0.5, 0.25).is_err());
    }

    #[test]
    fn rc_symmetry() {
        let p = params(8, 4);
        let n = p.n();
        let even = make_prototype(PulseKind::Rc, &p, 0.3, 0.0).unwrap();
        for q in 0..n {
            assert!(even.freq()[q].im.abs() < 1e-15);
            assert!((even.freq()[q] - even.freq()[(n - q) % n]).norm() < 1e-12);
        }
        let half = make_prototype(PulseKind::Rc, &p, 0.3, 0.5).unwrap();
        for i in 0..n {
            assert!(half.freq()[i].im.abs() < 1e-15);
            assert!((half.time()[(n - i) % n] - half.time()[i].conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn window_duality_holds_up_to_twiddle() {
        for kind in [PulseKind::Rc, PulseKind::Rrc, PulseKind::Dirichlet, PulseKind::RectTd] {
            for (k, m) in [(8, 4), (4, 8), (2, 2), (16, 1)] {
                let g = make_prototype(kind, &params(k, m), 0.5, 0.5).unwrap();
                let td = tx_window(&g, Domain::Time).unwrap();
                let fd = tx_window(&g, Domain::Frequency).unwrap();
                let mapped = td.hadamard(&duality_twiddle(k, m)).unwrap();
                assert!(mapped.max_abs_diff(&fd) < 1e-10, "{kind:?} {k}x{m}");
            }
        }
    }

    #[test]
    fn ofdm_and_single_carrier_windows() {
        let g = make_prototype(PulseKind::RectTd, &params(4, 1), 0.0, 0.0).unwrap();
        let w = tx_window(&g, Domain::Time).unwrap();
        assert_eq!(w.shape(), (4, 1));
        for k in 0..4 {
            assert!((w[(k, 0)] - C64::new(2.0, 0.0)).norm() < 1e-12);
        }

        let p = params(1, 4);
        let mut delta = vec![ZERO; 4];
        delta[0] = C64::new(3.0, 0.0);
        let g = PrototypePulse::from_time(&p, delta).unwrap();
        let w = tx_window(&g, Domain::Time).unwrap();
        assert_eq!(w.shape(), (1, 4));
        for m in 0..4 {
            assert!((w[(0, m)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_forcing_windows() {
        let ones = ComplexMat::from_fn(2, 2, |_, _| C64::new(1.0, 0.0));
        let rx = rx_window(&ones, RxKind::ZeroForcing, DEFAULT_SINGULAR_EPS).unwrap();
        assert!(rx.max_abs_diff(&ones) < 1e-15);

        let g = make_prototype(PulseKind::Rc, &params(8, 4), 0.5, 0.5).unwrap();
        let tx = tx_window(&g, Domain::Time).unwrap();
        let rx = rx_window(&tx, RxKind::ZeroForcing, DEFAULT_SINGULAR_EPS).unwrap();
        let prod = rx.hadamard(&tx).unwrap();
        assert!(prod.max_abs_diff(&ones_like(8, 4)) < 1e-12);

        let mf = rx_window(&tx, RxKind::MatchedFilter, DEFAULT_SINGULAR_EPS).unwrap();
        assert_eq!(mf[(1, 2)], tx[(1, 2)].conj());
    }

    fn ones_like(k: usize, m: usize) -> ComplexMat {
        ComplexMat::from_fn(k, m, |_, _| C64::new(1.0, 0.0))
    }

    #[test]
    fn even_even_zero_rolloff_is_singular_unless_shifted() {
        let p = params(4, 4);
        let g = make_prototype(PulseKind::Rc, &p, 0.0, 0.0).unwrap();
        let w = tx_window(&g, Domain::Time).unwrap();
        let min = w.as_slice().iter().map(|v| v.norm()).fold(f64::MAX, f64::min);
        assert!(min < 1e-12, "min |W_tx| = {min}");
        assert!(matches!(
            rx_window(&w, RxKind::ZeroForcing, DEFAULT_SINGULAR_EPS),
            Err(GfdmError::SingularWindow { .. })
        ));

        let g = make_prototype(PulseKind::Rc, &p, 0.0, 0.5).unwrap();
        let w = tx_window(&g, Domain::Time).unwrap();
        assert!(rx_window(&w, RxKind::ZeroForcing, DEFAULT_SINGULAR_EPS).is_ok());
    }

    #[test]
    fn overlap_counts() {
        let p = params(8, 4);
        let d = make_prototype(PulseKind::Dirichlet, &p, 0.0, 0.0).unwrap();
        assert_eq!(freq_overlap(&d, DEFAULT_SPARSITY_TOL), 1);
        for alpha in [0.1, 0.5, 0.9] {
            let g = make_prototype(PulseKind::Rc, &p, alpha, 0.5).unwrap();
            assert_eq!(freq_overlap(&g, DEFAULT_SPARSITY_TOL), 2);
        }
        let r = make_prototype(PulseKind::RectTd, &p, 0.0, 0.0).unwrap();
        assert_eq!(freq_overlap(&r, DEFAULT_SPARSITY_TOL), 8);
    }

    #[test]
    fn circular_span_wraps() {
        assert_eq!(circular_span(&[0, 7], 8), 2);
        assert_eq!(circular_span(&[3], 8), 1);
        assert_eq!(circular_span(&[0, 4], 8), 5);
        assert_eq!(circular_span(&[], 8), 0);
        assert_eq!(circular_span(&(0..8).collect::<Vec<_>>(), 8), 8);
    }

    #[test]
    fn delayed_pulse_matches_time_shift() {
        let p = params(4, 4);
        let g = make_prototype(PulseKind::Rc, &p, 0.5, 0.5).unwrap();
        let s = g.delayed(2);
        assert_eq!(s.time()[5], g.time()[3]);
        let f = dft(s.time(), Direction::Forward, None).unwrap();
        assert!(max_abs_diff(&f, s.freq()) < 1e-12);
    }
}
