//! Direct circular-convolution modem.
//!
//! The block convolution is evaluated as a sum of element-wise products
//! between prestored pulse matrices and shifted copies of the transformed
//! data, one product per multiplier chain:
//!
//! - time domain: a `K`-point transform, then `M` chains (one per subsymbol
//!   shift);
//! - frequency domain: an `M`-point transform, then one chain per occupied
//!   subcarrier band of the pulse spectrum (or all `K` bands).
//!
//! The chains are evaluated one after another in ascending index order, so
//! results do not depend on scheduling.

use crate::error::{GfdmError, Result};
use crate::modem_fft::DataGrid;
use crate::numerics::{
    dft, polyphase, ComplexMat, ComplexVec, Direction, MulCounter, C64,
};
use crate::pulses::{circular_span, occupied_bands, Domain, PrototypePulse};

/// Hardware limits of the direct engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectLimits {
    /// Number of parallel multiply-accumulate chains.
    pub l_max: usize,
    /// Largest supported block length.
    pub n_max: usize,
}

impl Default for DirectLimits {
    fn default() -> Self {
        DirectLimits {
            l_max: 16,
            n_max: 2048,
        }
    }
}

impl DirectLimits {
    /// Limits wide enough for any block of length `n`.
    pub fn unbounded(n: usize) -> Self {
        DirectLimits { l_max: n, n_max: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRole {
    Modulation,
    Demodulation,
}

/// Prestored pulse matrices, one per multiplier chain.
///
/// Time-domain sets hold `K x M` matrices indexed by subsymbol shift `m`;
/// frequency-domain sets hold `M x K` matrices indexed by band `l`.
#[derive(Debug, Clone)]
pub struct DirectPulseSet {
    pub domain: Domain,
    pub role: SetRole,
    pub k: usize,
    pub m: usize,
    pub indices: Vec<usize>,
    pub mats: Vec<ComplexMat>,
}

impl DirectPulseSet {
    /// Number of chains this set occupies.
    pub fn overlap(&self) -> usize {
        self.mats.len()
    }

    fn expect(&self, domain: Domain, role: SetRole) -> Result<()> {
        if self.domain != domain || self.role != role {
            return Err(GfdmError::InvalidConfig(format!(
                "pulse set is {:?}/{:?}, operation needs {domain:?}/{role:?}",
                self.domain, self.role
            )));
        }
        Ok(())
    }
}

/// Column-shifted copies of `base`: copy `s` has column `p` equal to
/// column `<p - s>` of `base`.
fn shifted_columns(base: &ComplexMat) -> Vec<ComplexMat> {
    let cols = base.cols();
    (0..cols)
        .map(|s| ComplexMat::from_fn(base.rows(), cols, |r, p| base[(r, (p + cols - s) % cols)]))
        .collect()
}

/// `rows x cols` matrix whose every column is `column`.
fn replicate_column(column: &[C64], cols: usize) -> ComplexMat {
    ComplexMat::from_fn(column.len(), cols, |r, _| column[r])
}

fn accumulate(acc: &mut ComplexMat, a: &ComplexMat, b: &ComplexMat, counter: &MulCounter) {
    let (rows, cols) = acc.shape();
    for r in 0..rows {
        for c in 0..cols {
            acc[(r, c)] += a[(r, c)] * b[(r, c)];
        }
    }
    counter.add("chain", (rows * cols) as u64);
}

/// Direct-convolution modem instance owning its multiplication counter.
#[derive(Debug, Default)]
pub struct DirectModem {
    limits: DirectLimits,
    counter: MulCounter,
}

impl DirectModem {
    pub fn new(limits: DirectLimits) -> Self {
        DirectModem {
            limits,
            counter: MulCounter::new(),
        }
    }

    pub fn limits(&self) -> DirectLimits {
        self.limits
    }

    pub fn counter(&self) -> &MulCounter {
        &self.counter
    }

    fn check_chains(&self, required: usize, n: usize) -> Result<()> {
        if n > self.limits.n_max {
            return Err(GfdmError::InvalidConfig(format!(
                "block length {n} exceeds N_max={}",
                self.limits.n_max
            )));
        }
        if required > self.limits.l_max {
            return Err(GfdmError::ChainLimitExceeded {
                required,
                available: self.limits.l_max,
            });
        }
        Ok(())
    }

    /// `G^(m)[:, p] = K [V_{M,K}(g)^T][:, <p - m>_M]` for `m = 0..M`.
    pub fn precompute_td_mod(&self, g: &PrototypePulse) -> Result<DirectPulseSet> {
        let (k, m) = (g.params().k, g.params().m);
        let base = polyphase(g.time(), m, k)?.transpose().scale(k as f64);
        Ok(DirectPulseSet {
            domain: Domain::Time,
            role: SetRole::Modulation,
            k,
            m,
            indices: (0..m).collect(),
            mats: shifted_columns(&base),
        })
    }

    /// Frequency-domain modulation pulses for the bands of `g~` holding
    /// samples above `tol * max|g~|`.
    pub fn precompute_fd_mod(&self, g: &PrototypePulse, tol: f64) -> Result<DirectPulseSet> {
        let (k, m) = (g.params().k, g.params().m);
        let bands = occupied_bands(g.freq(), k, m, tol);
        let span = circular_span(&bands, k);
        if span > self.limits.l_max {
            return Err(GfdmError::OverlapTooLarge {
                overlap: span,
                available: self.limits.l_max,
            });
        }
        Ok(fd_mod_set(g, bands))
    }

    /// Frequency-domain modulation pulses for all `K` bands, ignoring sparsity.
    pub fn precompute_fd_mod_full(&self, g: &PrototypePulse) -> DirectPulseSet {
        fd_mod_set(g, (0..g.params().k).collect())
    }

    /// `Gamma^(m)[:, p] = [V_{M,K}(gamma)^T][:, <p - m>_M]` with
    /// `V_{M,K}(gamma) = (1/M) F_M^H W_rx^T`. Takes the time-domain receive window.
    pub fn precompute_td_demod(&self, w_rx: &ComplexMat) -> Result<DirectPulseSet> {
        let (k, m) = w_rx.shape();
        let gamma = w_rx
            .transpose()
            .dft_columns(Direction::Inverse, 1.0 / m as f64, None)?;
        Ok(DirectPulseSet {
            domain: Domain::Time,
            role: SetRole::Demodulation,
            k,
            m,
            indices: (0..m).collect(),
            mats: shifted_columns(&gamma.transpose()),
        })
    }

    /// Frequency-domain demodulation pulses `(1/K) 1 (x) [V_{K,M}(gamma~)^T][:, l]`
    /// with `V_{K,M}(gamma~) = F_K W_rx`, restricted to occupied bands. Takes
    /// the frequency-domain receive window.
    pub fn precompute_fd_demod(&self, w_rx: &ComplexMat, tol: f64) -> Result<DirectPulseSet> {
        let (k, m) = w_rx.shape();
        let gamma = w_rx.dft_columns(Direction::Forward, 1.0, None)?;
        let bands = occupied_bands(gamma.as_slice(), k, m, tol);
        let span = circular_span(&bands, k);
        if span > self.limits.l_max {
            return Err(GfdmError::OverlapTooLarge {
                overlap: span,
                available: self.limits.l_max,
            });
        }
        Ok(fd_demod_set(&gamma, bands))
    }

    /// Frequency-domain demodulation pulses for all `K` bands.
    pub fn precompute_fd_demod_full(&self, w_rx: &ComplexMat) -> Result<DirectPulseSet> {
        let gamma = w_rx.dft_columns(Direction::Forward, 1.0, None)?;
        Ok(fd_demod_set(&gamma, (0..w_rx.rows()).collect()))
    }

    /// `V_{M,K}(x)^T = sum_m G^(m) . D^(m)` with `D^(m)` holding `M` copies of
    /// column `m` of `(1/K) F_K^H D`.
    pub fn direct_modulate_td(&self, d: &DataGrid, set: &DirectPulseSet) -> Result<ComplexVec> {
        set.expect(Domain::Time, SetRole::Modulation)?;
        let (k, m) = (set.k, set.m);
        check_grid(d, k, m)?;
        self.check_chains(set.overlap(), k * m)?;
        let b = d
            .mat()
            .dft_columns(Direction::Inverse, 1.0 / k as f64, Some(&self.counter))?;
        let mut acc = ComplexMat::zeros(k, m);
        for (&mi, g) in set.indices.iter().zip(&set.mats) {
            let data = replicate_column(&b.column(mi), m);
            accumulate(&mut acc, g, &data, &self.counter);
        }
        // acc[q, p] = x[q + pK]
        Ok(acc.to_col_major())
    }

    /// `V_{K,M}(x~)^T = sum_l G^(l) . D^(l)` with `D^(l)[:, q] = [F_M D^T][:, <q - l>_K]`.
    /// Returns the spectrum, or time samples when `emit_time` is set.
    pub fn direct_modulate_fd(
        &self,
        d: &DataGrid,
        set: &DirectPulseSet,
        emit_time: bool,
    ) -> Result<ComplexVec> {
        set.expect(Domain::Frequency, SetRole::Modulation)?;
        let (k, m) = (set.k, set.m);
        check_grid(d, k, m)?;
        self.check_chains(set.overlap(), k * m)?;
        let e = d
            .mat()
            .dft_rows(Direction::Forward, 1.0, Some(&self.counter))?
            .transpose();
        let mut acc = ComplexMat::zeros(m, k);
        for (&l, g) in set.indices.iter().zip(&set.mats) {
            let data = ComplexMat::from_fn(m, k, |p, q| e[(p, (q + k - l) % k)]);
            accumulate(&mut acc, g, &data, &self.counter);
        }
        // acc[p, q] = x~[p + qM]
        let spectrum = acc.to_col_major();
        if emit_time {
            let n = (k * m) as f64;
            Ok(dft(&spectrum, Direction::Inverse, Some(&self.counter))?
                .into_iter()
                .map(|v| v / n)
                .collect())
        } else {
            Ok(spectrum)
        }
    }

    /// `(1/K) F_K^H D-hat = sum_m Gamma^(m) . Y^(m)`, then a `K`-point FFT per column.
    pub fn direct_demodulate_td(&self, y_eq: &[C64], set: &DirectPulseSet) -> Result<DataGrid> {
        set.expect(Domain::Time, SetRole::Demodulation)?;
        let (k, m) = (set.k, set.m);
        check_block(y_eq, k * m)?;
        self.check_chains(set.overlap(), k * m)?;
        let vy = polyphase(y_eq, m, k)?.transpose();
        let mut acc = ComplexMat::zeros(k, m);
        for (&mi, gamma) in set.indices.iter().zip(&set.mats) {
            let data = replicate_column(&vy.column(mi), m);
            accumulate(&mut acc, gamma, &data, &self.counter);
        }
        Ok(DataGrid::new(acc.dft_columns(
            Direction::Forward,
            1.0,
            Some(&self.counter),
        )?))
    }

    /// `F_M D-hat^T = sum_l Gamma^(l) . Y^(l)`, then an `M`-point inverse FFT per column.
    pub fn direct_demodulate_fd(&self, y_eq_freq: &[C64], set: &DirectPulseSet) -> Result<DataGrid> {
        set.expect(Domain::Frequency, SetRole::Demodulation)?;
        let (k, m) = (set.k, set.m);
        check_block(y_eq_freq, k * m)?;
        self.check_chains(set.overlap(), k * m)?;
        let vy = polyphase(y_eq_freq, k, m)?.transpose();
        let mut acc = ComplexMat::zeros(m, k);
        for (&l, gamma) in set.indices.iter().zip(&set.mats) {
            let data = ComplexMat::from_fn(m, k, |p, q| vy[(p, (q + k - l) % k)]);
            accumulate(&mut acc, gamma, &data, &self.counter);
        }
        let dt = acc.dft_columns(Direction::Inverse, 1.0 / m as f64, Some(&self.counter))?;
        Ok(DataGrid::new(dt.transpose()))
    }
}

fn fd_mod_set(g: &PrototypePulse, bands: Vec<usize>) -> DirectPulseSet {
    let (k, m) = (g.params().k, g.params().m);
    let mats = bands
        .iter()
        .map(|&l| replicate_column(&g.freq()[l * m..(l + 1) * m], k))
        .collect();
    DirectPulseSet {
        domain: Domain::Frequency,
        role: SetRole::Modulation,
        k,
        m,
        indices: bands,
        mats,
    }
}

fn fd_demod_set(gamma: &ComplexMat, bands: Vec<usize>) -> DirectPulseSet {
    let (k, m) = gamma.shape();
    let mats = bands
        .iter()
        .map(|&l| {
            let row: Vec<C64> = gamma.row(l).iter().map(|v| v / k as f64).collect();
            replicate_column(&row, k)
        })
        .collect();
    DirectPulseSet {
        domain: Domain::Frequency,
        role: SetRole::Demodulation,
        k,
        m,
        indices: bands,
        mats,
    }
}

fn check_grid(d: &DataGrid, k: usize, m: usize) -> Result<()> {
    if (d.k(), d.m()) != (k, m) {
        return Err(GfdmError::DimensionMismatch(format!(
            "data grid {}x{} vs pulse set {k}x{m}",
            d.k(),
            d.m()
        )));
    }
    Ok(())
}

fn check_block(y: &[C64], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(GfdmError::DimensionMismatch(format!(
            "block has {} samples, pulse set implies N={n}",
            y.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem_fft::FftModem;
    use crate::numerics::{max_abs, max_abs_diff, ZERO};
    use crate::pulses::{
        make_prototype, rx_window, tx_window, GfdmParams, PulseKind, RxKind,
        DEFAULT_SINGULAR_EPS, DEFAULT_SPARSITY_TOL,
    };

    fn grid(k: usize, m: usize, seed: u64) -> DataGrid {
        let mut s = seed | 1;
        DataGrid::from_fn(k, m, |_, _| {
            s = s.wrapping_mul(0x5851F42D4C957F2D).wrapping_add(0x14057B7EF767814F);
            let re = if s >> 63 == 0 { 1.0 } else { -1.0 };
            let im = if (s >> 62) & 1 == 0 { 1.0 } else { -1.0 };
            C64::new(re, im) / 2f64.sqrt()
        })
    }

    fn rc(k: usize, m: usize, alpha: f64) -> PrototypePulse {
        make_prototype(PulseKind::Rc, &GfdmParams::new(k, m).unwrap(), alpha, 0.5).unwrap()
    }

    #[test]
    fn td_mod_set_structure() {
        let g = rc(8, 4, 0.5);
        let dm = DirectModem::default();
        let set = dm.precompute_td_mod(&g).unwrap();
        assert_eq!(set.overlap(), 4);
        let base = polyphase(g.time(), 4, 8).unwrap().transpose().scale(8.0);
        assert_eq!(set.mats[0], base);
        for (mi, mat) in set.mats.iter().enumerate() {
            for p in 0..4 {
                assert_eq!(mat.column(p), set.mats[0].column((p + 4 - mi) % 4));
            }
        }
    }

    #[test]
    fn td_modulation_matches_fft_modem() {
        let g = rc(8, 4, 0.5);
        let w = tx_window(&g, Domain::Time).unwrap();
        let d = grid(8, 4, 3);
        let dm = DirectModem::default();
        let set = dm.precompute_td_mod(&g).unwrap();
        let x = dm.direct_modulate_td(&d, &set).unwrap();
        let want = FftModem::new().modulate_td(&d, &w).unwrap();
        assert!(max_abs_diff(&x, &want) < 1e-10 * max_abs(&want));
    }

    #[test]
    fn single_subsymbol_is_windowed_idft() {
        let p = GfdmParams::new(8, 1).unwrap();
        let g = make_prototype(PulseKind::RectTd, &p, 0.0, 0.0).unwrap();
        let d = grid(8, 1, 5);
        let dm = DirectModem::default();
        let x = dm
            .direct_modulate_td(&d, &dm.precompute_td_mod(&g).unwrap())
            .unwrap();
        let idft = dft(&d.to_vec(), Direction::Inverse, None).unwrap();
        // g = 1/sqrt(8) on the single subsymbol, K = 8: x = (8/sqrt 8)(1/8) F^H d.
        let want: Vec<C64> = idft.iter().map(|v| v / 8f64.sqrt()).collect();
        assert!(max_abs_diff(&x, &want) < 1e-12);
    }

    #[test]
    fn chain_limit_enforced() {
        let g = rc(4, 64, 0.5);
        let dm = DirectModem::default();
        let set = dm.precompute_td_mod(&g).unwrap();
        assert!(matches!(
            dm.direct_modulate_td(&grid(4, 64, 1), &set),
            Err(GfdmError::ChainLimitExceeded {
                required: 64,
                available: 16
            })
        ));
    }

    #[test]
    fn fd_mod_sets() {
        let p = GfdmParams::new(8, 4).unwrap();
        let dm = DirectModem::default();
        let dir = make_prototype(PulseKind::Dirichlet, &p, 0.0, 0.0).unwrap();
        assert_eq!(dm.precompute_fd_mod(&dir, DEFAULT_SPARSITY_TOL).unwrap().overlap(), 1);
        let set = dm.precompute_fd_mod(&rc(8, 4, 0.5), DEFAULT_SPARSITY_TOL).unwrap();
        assert_eq!(set.indices, vec![0, 7]);
        for mat in &set.mats {
            assert_eq!(mat.shape(), (4, 8));
            for q in 1..8 {
                assert_eq!(mat.column(q), mat.column(0));
            }
        }
        let rect = make_prototype(PulseKind::RectTd, &GfdmParams::new(32, 2).unwrap(), 0.0, 0.0)
            .unwrap();
        assert!(matches!(
            dm.precompute_fd_mod(&rect, DEFAULT_SPARSITY_TOL),
            Err(GfdmError::OverlapTooLarge { overlap: 32, .. })
        ));
    }

    #[test]
    fn fd_modulation_matches_fft_modem() {
        let g = rc(8, 8, 0.5);
        let w = tx_window(&g, Domain::Frequency).unwrap();
        let d = grid(8, 8, 11);
        let dm = DirectModem::default();
        let fft = FftModem::new();
        for set in [
            dm.precompute_fd_mod(&g, DEFAULT_SPARSITY_TOL).unwrap(),
            dm.precompute_fd_mod_full(&g),
        ] {
            for emit in [false, true] {
                let x = dm.direct_modulate_fd(&d, &set, emit).unwrap();
                let want = fft.modulate_fd(&d, &w, emit).unwrap();
                assert!(max_abs_diff(&x, &want) < 1e-10 * max_abs(&want));
            }
        }
        let zero = dm
            .direct_modulate_fd(&DataGrid::zeros(8, 8), &dm.precompute_fd_mod_full(&g), true)
            .unwrap();
        assert_eq!(max_abs(&zero), 0.0);
    }

    #[test]
    fn single_subcarrier_support() {
        let (k, m) = (8, 4);
        let g = rc(k, m, 0.5);
        let dm = DirectModem::default();
        let set = dm.precompute_fd_mod(&g, DEFAULT_SPARSITY_TOL).unwrap();
        for k0 in 0..k {
            let d = DataGrid::from_fn(k, m, |kk, mm| {
                if kk == k0 {
                    C64::new(1.0, mm as f64)
                } else {
                    ZERO
                }
            });
            let spec = dm.direct_modulate_fd(&d, &set, false).unwrap();
            // Bands k0 and k0 - 1 (pulse occupies bands 0 and K-1).
            for (q, v) in spec.iter().enumerate() {
                let band = q / m;
                if band != k0 && band != (k0 + k - 1) % k {
                    assert!(v.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zf_td_direct_loopback() {
        let g = rc(8, 4, 0.5);
        let w = tx_window(&g, Domain::Time).unwrap();
        let rx = rx_window(&w, RxKind::ZeroForcing, DEFAULT_SINGULAR_EPS).unwrap();
        let dm = DirectModem::default();
        let d = grid(8, 4, 21);
        let x = dm.direct_modulate_td(&d, &dm.precompute_td_mod(&g).unwrap()).unwrap();
        let set = dm.precompute_td_demod(&rx).unwrap();
        assert_eq!(set.overlap(), 4);
        let dh = dm.direct_demodulate_td(&x, &set).unwrap();
        assert!(dh.max_abs_diff(&d) < 1e-9);
        let zero = dm.direct_demodulate_td(&[ZERO; 32], &set).unwrap();
        assert_eq!(zero.mat().max_abs(), 0.0);
    }

    #[test]
    fn mf_fd_direct_matches_fft_modem() {
        let p = GfdmParams::new(8, 4).unwrap();
        let g = make_prototype(PulseKind::Dirichlet, &p, 0.0, 0.0).unwrap();
        let w = tx_window(&g, Domain::Frequency).unwrap();
        let rx = rx_window(&w, RxKind::MatchedFilter, DEFAULT_SINGULAR_EPS).unwrap();
        let dm = DirectModem::default();
        let set = dm.precompute_fd_demod(&rx, DEFAULT_SPARSITY_TOL).unwrap();
        assert_eq!(set.overlap(), 1);
        let d = grid(8, 4, 8);
        let spec = FftModem::new().modulate_fd(&d, &w, false).unwrap();
        let want = FftModem::new().demodulate_fd(&spec, &rx).unwrap();
        let got = dm.direct_demodulate_fd(&spec, &set).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-10 * want.mat().max_abs());
        let zero = dm.direct_demodulate_fd(&[ZERO; 32], &set).unwrap();
        assert_eq!(zero.mat().max_abs(), 0.0);
    }

    #[test]
    fn zf_receiver_spreads_over_all_bands() {
        // K = 64, M = 4, even/even raised cosine: the inverse window is not
        // band-limited like the pulse.
        let g = rc(64, 4, 0.5);
        let w = tx_window(&g, Domain::Frequency).unwrap();
        let rx = rx_window(&w, RxKind::ZeroForcing, DEFAULT_SINGULAR_EPS).unwrap();
        let gamma = rx.dft_columns(Direction::Forward, 1.0, None).unwrap();
        let span = circular_span(
            &occupied_bands(gamma.as_slice(), 64, 4, DEFAULT_SPARSITY_TOL),
            64,
        );
        assert!(span > 16, "span {span}");
        let dm = DirectModem::default();
        assert!(matches!(
            dm.precompute_fd_demod(&rx, DEFAULT_SPARSITY_TOL),
            Err(GfdmError::OverlapTooLarge { .. })
        ));
    }

    #[test]
    fn role_and_domain_checked() {
        let g = rc(4, 4, 0.5);
        let dm = DirectModem::default();
        let set = dm.precompute_td_mod(&g).unwrap();
        assert!(dm.direct_modulate_fd(&grid(4, 4, 1), &set, true).is_err());
        assert!(dm.direct_demodulate_td(&[ZERO; 16], &set).is_err());
        assert!(dm.direct_modulate_td(&grid(4, 2, 1), &set).is_err());
    }

    #[test]
    fn instrumented_counts() {
        let (k, m) = (16, 8);
        let n = (k * m) as u64;
        let g = rc(k, m, 0.5);
        let dm = DirectModem::new(DirectLimits::unbounded(k * m));
        dm.direct_modulate_td(&grid(k, m, 1), &dm.precompute_td_mod(&g).unwrap())
            .unwrap();
        assert_eq!(dm.counter().count(), n / 2 * 4 + m as u64 * n);
        dm.counter().reset();
        let rx = rx_window(
            &tx_window(&g, Domain::Frequency).unwrap(),
            RxKind::MatchedFilter,
            DEFAULT_SINGULAR_EPS,
        )
        .unwrap();
        let set = dm.precompute_fd_demod(&rx, DEFAULT_SPARSITY_TOL).unwrap();
        dm.direct_demodulate_fd(&vec![ZERO; k * m], &set).unwrap();
        assert_eq!(dm.counter().count(), n / 2 * 3 + set.overlap() as u64 * n);
    }
}
