//! Closed-form complexity, latency and resource models for the modem
//! architectures, and an instrumented transceiver chain to check them.
//!
//! Complexity is counted in complex multiplications (CMs) for one block
//! through modulation, one-tap frequency-domain equalization and
//! demodulation. The equalizer division itself is not counted; its `N`-point
//! transform is.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{add_cp, apply_channel, fd_equalize_zf, remove_cp, ChannelSpec};
use crate::error::{GfdmError, Result};
use crate::modem_direct::{DirectLimits, DirectModem};
use crate::modem_fft::{DataGrid, FftModem};
use crate::numerics::{dft, is_power_of_two, log2, ComplexVec, Direction, MulCounter};
use crate::pulses::{Domain, PrototypePulse, RxKind, WindowPair};

/// FFT core processing latencies and multiplier delay, in clock cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    pub p_cycles: BTreeMap<usize, u64>,
    pub t_mul: u64,
}

impl Default for CostModel {
    /// Pipelined FFT IP core figures for sizes 8 to 2048 and a 12-cycle
    /// multiplier. Sizes 2 and 4 are absent on purpose.
    fn default() -> Self {
        let p_cycles = [
            (8, 57),
            (16, 110),
            (32, 126),
            (64, 177),
            (128, 241),
            (256, 387),
            (512, 643),
            (1024, 1170),
            (2048, 2194),
        ]
        .into_iter()
        .collect();
        CostModel { p_cycles, t_mul: 12 }
    }
}

impl CostModel {
    pub fn p(&self, size: usize) -> Result<u64> {
        self.p_cycles
            .get(&size)
            .copied()
            .ok_or(GfdmError::MissingCostEntry(size))
    }
}

/// Transceiver pairings: architecture, modulator domain, demodulator domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ArchKind {
    FftTdFd,
    FftTdTd,
    FftFdFd,
    DirTdFd,
    DirTdTd,
    DirFdFd,
    DirFdFdSparse,
}

impl ArchKind {
    pub const ALL: [ArchKind; 7] = [
        ArchKind::FftTdFd,
        ArchKind::FftTdTd,
        ArchKind::FftFdFd,
        ArchKind::DirTdFd,
        ArchKind::DirTdTd,
        ArchKind::DirFdFd,
        ArchKind::DirFdFdSparse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArchKind::FftTdFd => "FFT_TD_FD",
            ArchKind::FftTdTd => "FFT_TD_TD",
            ArchKind::FftFdFd => "FFT_FD_FD",
            ArchKind::DirTdFd => "DIR_TD_FD",
            ArchKind::DirTdTd => "DIR_TD_TD",
            ArchKind::DirFdFd => "DIR_FD_FD",
            ArchKind::DirFdFdSparse => "DIR_FD_FD_SPARSE",
        }
    }

    pub fn is_direct(self) -> bool {
        !matches!(self, ArchKind::FftTdFd | ArchKind::FftTdTd | ArchKind::FftFdFd)
    }

    pub fn mod_domain(self) -> Domain {
        match self {
            ArchKind::FftFdFd | ArchKind::DirFdFd | ArchKind::DirFdFdSparse => Domain::Frequency,
            _ => Domain::Time,
        }
    }

    pub fn demod_domain(self) -> Domain {
        match self {
            ArchKind::FftTdTd | ArchKind::DirTdTd => Domain::Time,
            _ => Domain::Frequency,
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchKind {
    type Err = GfdmError;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase().replace('-', "_");
        ArchKind::ALL
            .into_iter()
            .find(|k| k.name() == up)
            .ok_or_else(|| GfdmError::InvalidConfig(format!("unknown architecture kind '{s}'")))
    }
}

fn check_dims(k: usize, m: usize) -> Result<(u64, u64, u64, u64)> {
    if !is_power_of_two(k) || !is_power_of_two(m) {
        return Err(GfdmError::InvalidConfig(format!(
            "K={k} and M={m} must both be powers of two"
        )));
    }
    let n = (k * m) as u64;
    Ok((
        n,
        log2(k * m) as u64,
        log2(k) as u64,
        log2(m) as u64,
    ))
}

/// Complex multiplications per block. `l` is the number of occupied bands
/// and is only used (and required) for [`ArchKind::DirFdFdSparse`].
pub fn cm_count(kind: ArchKind, k: usize, m: usize, l: Option<usize>) -> Result<u64> {
    let (n, log_n, log_k, log_m) = check_dims(k, m)?;
    let (k, m) = (k as u64, m as u64);
    Ok(match kind {
        ArchKind::FftTdFd => 2 * n * log_n + 2 * n,
        ArchKind::FftTdTd => 2 * n * log_n + n * log_m + 2 * n,
        ArchKind::FftFdFd => 2 * n * log_n + n * log_k + 2 * n,
        ArchKind::DirTdFd => n * log_n + (k + m) * n,
        ArchKind::DirTdTd => n * log_n + n * log_k + 2 * m * n,
        ArchKind::DirFdFd => n * log_n + n * log_m + 2 * k * n,
        ArchKind::DirFdFdSparse => {
            let l = l.ok_or_else(|| {
                GfdmError::InvalidConfig("DIR_FD_FD_SPARSE needs the band count L".into())
            })?;
            n * log_n + n * log_m + 2 * l as u64 * n
        }
    })
}

/// [`ArchKind::DirFdFdSparse`] count when modulator and demodulator pulse
/// sets occupy different numbers of bands (e.g. a zero-forcing receiver).
pub fn cm_count_sparse(k: usize, m: usize, l_mod: usize, l_demod: usize) -> Result<u64> {
    let (n, log_n, _, log_m) = check_dims(k, m)?;
    Ok(n * log_n + n * log_m + (l_mod + l_demod) as u64 * n)
}

/// End-to-end latency in cycles for the three pipelined designs.
pub fn latency(kind: ArchKind, k: usize, m: usize, cost: &CostModel) -> Result<u64> {
    check_dims(k, m)?;
    let n = k * m;
    let (pn, pk, pm) = (cost.p(n)?, cost.p(k)?, cost.p(m)?);
    let (n, k, m) = (n as u64, k as u64, m as u64);
    let tm = cost.t_mul;
    match kind {
        ArchKind::FftTdFd => Ok(6 * n + 3 * (k + m) + pn + 3 * (pk + pm) + 2 * tm),
        ArchKind::DirTdTd => Ok(5 * n + 2 * k + 2 * pn + 2 * pk + 2 * tm),
        ArchKind::DirFdFd => Ok(5 * n + 2 * m + 2 * pn + 2 * pm + 2 * tm),
        other => Err(GfdmError::InvalidConfig(format!("no latency model for {other}"))),
    }
}

/// Extra cycles of the FFT-based design over the direct time-domain one.
pub fn latency_delta(k: usize, m: usize, cost: &CostModel) -> Result<i64> {
    Ok(latency(ArchKind::FftTdFd, k, m, cost)? as i64 - latency(ArchKind::DirTdTd, k, m, cost)? as i64)
}

/// Relative latency increase of the FFT-based design, in percent.
pub fn latency_increase_pct(k: usize, m: usize, cost: &CostModel) -> Result<f64> {
    Ok(100.0 * latency_delta(k, m, cost)? as f64 / latency(ArchKind::DirTdTd, k, m, cost)? as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceArch {
    FftBased,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceCount {
    pub fft_cores: usize,
    pub multipliers: usize,
    pub rw_rams: usize,
    pub r_or_w_rams: usize,
}

/// Hardware blocks needed by each architecture; the direct one scales with
/// the number of multiplier chains.
pub fn resources(arch: ResourceArch, l_max: usize) -> ResourceCount {
    match arch {
        ResourceArch::FftBased => ResourceCount {
            fft_cores: 7,
            multipliers: 2,
            rw_rams: 4,
            r_or_w_rams: 2,
        },
        ResourceArch::Direct => ResourceCount {
            fft_cores: 4,
            multipliers: 2 * l_max,
            rw_rams: 2 * l_max,
            r_or_w_rams: 2 * l_max,
        },
    }
}

/// Settings of a counted transceiver run.
#[derive(Debug, Clone)]
pub struct ChainSetup {
    pub rx_kind: RxKind,
    pub limits: DirectLimits,
    pub singular_eps: f64,
    pub sparsity_tol: f64,
    pub n_cp: usize,
    pub n_cs: usize,
}

impl ChainSetup {
    /// Unlimited direct engine, no CP, default thresholds.
    pub fn for_counting(n: usize, rx_kind: RxKind) -> Self {
        ChainSetup {
            rx_kind,
            limits: DirectLimits::unbounded(n),
            singular_eps: crate::pulses::DEFAULT_SINGULAR_EPS,
            sparsity_tol: crate::pulses::DEFAULT_SPARSITY_TOL,
            n_cp: 0,
            n_cs: 0,
        }
    }
}

/// Result of one block through modulate, channel, equalize and demodulate.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub kind: ArchKind,
    /// Transmitted core block (time samples, before the CP).
    pub x: ComplexVec,
    pub d_hat: DataGrid,
    /// Bands used by the frequency-domain direct sets as `(modulator,
    /// demodulator)`; a time-domain side reports 0.
    pub partitions: Option<(usize, usize)>,
    pub measured: u64,
    pub breakdown: BTreeMap<String, u64>,
}

/// Runs one block through the chain of `kind` with multiplication counting.
pub fn run_chain(
    kind: ArchKind,
    g: &PrototypePulse,
    d: &DataGrid,
    channel: &ChannelSpec,
    setup: &ChainSetup,
) -> Result<ChainOutput> {
    let (k, m) = (g.params().k, g.params().m);
    let n = k * m;
    let through_channel = |x: &[_], counter: &MulCounter| -> Result<ComplexVec> {
        let rx = apply_channel(&add_cp(x, setup.n_cp, setup.n_cs)?, channel);
        fd_equalize_zf(&remove_cp(&rx, setup.n_cp, setup.n_cs)?, &channel.taps, Some(counter))
    };

    if !kind.is_direct() {
        let modem = FftModem::new();
        let tx = WindowPair::new(g, kind.mod_domain(), setup.rx_kind, setup.singular_eps)?;
        let rx = WindowPair::new(g, kind.demod_domain(), setup.rx_kind, setup.singular_eps)?;
        let x = match kind.mod_domain() {
            Domain::Time => modem.modulate_td(d, &tx.w_tx)?,
            Domain::Frequency => modem.modulate_fd(d, &tx.w_tx, true)?,
        };
        let y_freq = through_channel(&x, modem.counter())?;
        let d_hat = match kind.demod_domain() {
            Domain::Time => modem.demodulate_td_from_freq(&y_freq, &rx.w_rx)?,
            Domain::Frequency => modem.demodulate_fd(&y_freq, &rx.w_rx)?,
        };
        return Ok(ChainOutput {
            kind,
            x,
            d_hat,
            partitions: None,
            measured: modem.counter().count(),
            breakdown: modem.counter().breakdown(),
        });
    }

    let modem = DirectModem::new(setup.limits);
    let counter = modem.counter();
    let sparse = kind == ArchKind::DirFdFdSparse;
    let mut partitions = None;
    let x = match kind.mod_domain() {
        Domain::Time => modem.direct_modulate_td(d, &modem.precompute_td_mod(g)?)?,
        Domain::Frequency => {
            let set = if sparse {
                modem.precompute_fd_mod(g, setup.sparsity_tol)?
            } else {
                modem.precompute_fd_mod_full(g)
            };
            partitions = Some((set.overlap(), 0));
            modem.direct_modulate_fd(d, &set, true)?
        }
    };
    let y_freq = through_channel(&x, counter)?;
    let rx = WindowPair::new(g, kind.demod_domain(), setup.rx_kind, setup.singular_eps)?;
    let d_hat = match kind.demod_domain() {
        Domain::Time => {
            let y: ComplexVec = dft(&y_freq, Direction::Inverse, Some(counter))?
                .into_iter()
                .map(|v| v / n as f64)
                .collect();
            modem.direct_demodulate_td(&y, &modem.precompute_td_demod(&rx.w_rx)?)?
        }
        Domain::Frequency => {
            let set = if sparse {
                modem.precompute_fd_demod(&rx.w_rx, setup.sparsity_tol)?
            } else {
                modem.precompute_fd_demod_full(&rx.w_rx)?
            };
            let tx_bands = partitions.map_or(0, |p: (usize, usize)| p.0);
            partitions = Some((tx_bands, set.overlap()));
            modem.direct_demodulate_fd(&y_freq, &set)?
        }
    };
    Ok(ChainOutput {
        kind,
        x,
        d_hat,
        partitions,
        measured: counter.count(),
        breakdown: counter.breakdown(),
    })
}

/// Measured versus closed-form multiplication count.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconcileReport {
    pub kind: ArchKind,
    pub k: usize,
    pub m: usize,
    pub expected: u64,
    pub measured: u64,
    pub breakdown: BTreeMap<String, u64>,
}

impl ReconcileReport {
    pub fn pass(&self) -> bool {
        self.expected == self.measured
    }
}

impl fmt::Display for ReconcileReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} K={} M={}: measured {} expected {} [{}]",
            self.kind,
            self.k,
            self.m,
            self.measured,
            self.expected,
            if self.pass() { "ok" } else { "MISMATCH" }
        )?;
        if !self.pass() {
            for (label, n) in &self.breakdown {
                write!(f, "\n  {label}: {n}")?;
            }
        }
        Ok(())
    }
}

/// Compares a counter reading with [`cm_count`].
pub fn reconcile(
    kind: ArchKind,
    k: usize,
    m: usize,
    l: Option<usize>,
    counter: &MulCounter,
) -> Result<ReconcileReport> {
    Ok(ReconcileReport {
        kind,
        k,
        m,
        expected: cm_count(kind, k, m, l)?,
        measured: counter.count(),
        breakdown: counter.breakdown(),
    })
}

/// [`reconcile`] for a finished chain run.
pub fn reconcile_chain(out: &ChainOutput) -> Result<ReconcileReport> {
    let (k, m) = (out.d_hat.k(), out.d_hat.m());
    let expected = match (out.kind, out.partitions) {
        (ArchKind::DirFdFdSparse, Some((l_mod, l_demod))) => cm_count_sparse(k, m, l_mod, l_demod)?,
        (kind, _) => cm_count(kind, k, m, None)?,
    };
    Ok(ReconcileReport {
        kind: out.kind,
        k,
        m,
        expected,
        measured: out.measured,
        breakdown: out.breakdown.clone(),
    })
}

/// One line of the analysis table. Cells that cannot be evaluated carry the
/// reason instead of a value.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub kind: ArchKind,
    pub k: usize,
    pub m: usize,
    pub cm: std::result::Result<u64, String>,
    pub latency: std::result::Result<u64, String>,
    pub delta: std::result::Result<i64, String>,
    pub pct: std::result::Result<f64, String>,
}

fn cell<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| match e {
        GfdmError::MissingCostEntry(_) => "missing cost entry".to_string(),
        GfdmError::InvalidConfig(msg) if msg.starts_with("no latency model") => String::new(),
        other => other.to_string(),
    })
}

pub fn analysis_row(kind: ArchKind, k: usize, m: usize, l: Option<usize>, cost: &CostModel) -> AnalysisRow {
    AnalysisRow {
        kind,
        k,
        m,
        cm: cell(cm_count(kind, k, m, l)),
        latency: cell(latency(kind, k, m, cost)),
        delta: cell(latency_delta(k, m, cost)),
        pct: cell(latency_increase_pct(k, m, cost)),
    }
}

pub const CSV_HEADER: &str = "kind,K,M,N,cm,latency,delta,pct";

impl AnalysisRow {
    pub fn to_csv(&self) -> String {
        fn show<T: fmt::Display>(v: &std::result::Result<T, String>) -> String {
            match v {
                Ok(x) => x.to_string(),
                Err(reason) => reason.clone(),
            }
        }
        let pct = match &self.pct {
            Ok(p) => format!("{p:.1}"),
            Err(reason) => reason.clone(),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            self.k,
            self.m,
            self.k * self.m,
            show(&self.cm),
            show(&self.latency),
            show(&self.delta),
            pct
        )
    }
}

/// CSV of every kind over every `(K, M)` pair.
pub fn analysis_csv(
    kinds: &[ArchKind],
    dims: &[(usize, usize)],
    l: Option<usize>,
    cost: &CostModel,
) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for &(k, m) in dims {
        for &kind in kinds {
            out.push_str(&analysis_row(kind, k, m, l, cost).to_csv());
            out.push('\n');
        }
    }
    out
}

/// All power-of-two splits `N = K M` with both factors at least `min_size`.
pub fn factorizations(n: usize, min_size: usize) -> Vec<(usize, usize)> {
    if !is_power_of_two(n) {
        return Vec::new();
    }
    (0..=log2(n))
        .map(|e| (n >> e, 1usize << e))
        .filter(|&(k, m)| k >= min_size && m >= min_size)
        .collect()
}
