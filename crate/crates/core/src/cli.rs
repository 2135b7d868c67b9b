//! Command-line front end: run configuration, subcommands and exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    analysis_csv, factorizations, reconcile_chain, run_chain, ArchKind, ChainSetup, CostModel,
};
use crate::channel::{
    add_cp, fd_equalize_zf, nmse, random_qpsk, remove_cp, symbol_error_rate, ChannelSpec,
};
use crate::error::{GfdmError, Result};
use crate::modem_direct::{DirectLimits, DirectModem};
use crate::modem_fft::{DataGrid, FftModem};
use crate::numerics::{dft, ComplexVec, Direction, C64};
use crate::oracle::{demap_symbols, map_symbols};
use crate::pulses::{
    freq_overlap, make_prototype, tx_window, Domain, GfdmParams, PrototypePulse, PulseKind,
    RxKind, WindowPair, DEFAULT_SINGULAR_EPS, DEFAULT_SPARSITY_TOL,
};
use crate::samples::{read_samples, write_samples, SampleFormat, FLAG_FREQUENCY};

/// Exit status for a failed command.
pub fn exit_code(e: &GfdmError) -> i32 {
    if e.is_numerical() {
        3
    } else if e.is_validation() {
        2
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Fft,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Td,
    Fd,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Domain {
        match d {
            DomainArg::Td => Domain::Time,
            DomainArg::Fd => Domain::Frequency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Bin,
    Csv,
}

impl From<FormatArg> for SampleFormat {
    fn from(f: FormatArg) -> SampleFormat {
        match f {
            FormatArg::Bin => SampleFormat::Bin,
            FormatArg::Csv => SampleFormat::Csv,
        }
    }
}

fn default_pulse() -> PulseKind {
    PulseKind::Rc
}
fn default_half() -> f64 {
    0.5
}
fn default_rx() -> RxKind {
    RxKind::ZeroForcing
}
fn default_arch() -> Arch {
    Arch::Fft
}
fn default_domain() -> Domain {
    Domain::Time
}
fn default_taps() -> Vec<[f64; 2]> {
    vec![[1.0, 0.0]]
}
fn default_l_max() -> usize {
    DirectLimits::default().l_max
}
fn default_n_max() -> usize {
    DirectLimits::default().n_max
}

/// Run configuration, stored as a flat JSON object.
///
/// Only `K` and `M` are required. `snr_db: null` (or absent) means no noise,
/// and absent active sets mean every subcarrier/subsymbol is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    #[serde(rename = "M", alias = "m")]
    pub m: usize,
    #[serde(default = "default_pulse")]
    pub pulse: PulseKind,
    #[serde(default = "default_half", alias = "rolloff")]
    pub alpha: f64,
    #[serde(default = "default_half", alias = "delta")]
    pub shift: f64,
    #[serde(default = "default_rx")]
    pub rx: RxKind,
    #[serde(default = "default_arch")]
    pub arch: Arch,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    /// Transceiver pairing for `loopback`; derived from `arch`/`domain` if absent.
    #[serde(default)]
    pub chain: Option<ArchKind>,
    #[serde(default)]
    pub k_on: Option<Vec<usize>>,
    #[serde(default)]
    pub m_on: Option<Vec<usize>>,
    #[serde(default)]
    pub n_cp: usize,
    #[serde(default)]
    pub n_cs: usize,
    /// Channel impulse response as `[re, im]` pairs.
    #[serde(default = "default_taps")]
    pub channel_taps: Vec<[f64; 2]>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_l_max")]
    pub l_max: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

impl RunConfig {
    /// Full-allocation raised-cosine configuration for `K x M`.
    pub fn new(k: usize, m: usize) -> Self {
        RunConfig {
            k,
            m,
            pulse: default_pulse(),
            alpha: 0.5,
            shift: 0.5,
            rx: default_rx(),
            arch: default_arch(),
            domain: default_domain(),
            chain: None,
            k_on: None,
            m_on: None,
            n_cp: 0,
            n_cs: 0,
            channel_taps: default_taps(),
            snr_db: None,
            seed: 0,
            l_max: default_l_max(),
            n_max: default_n_max(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| GfdmError::InvalidConfig(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn n(&self) -> usize {
        self.k * self.m
    }

    pub fn params(&self) -> Result<GfdmParams> {
        GfdmParams::with_active(
            self.k,
            self.m,
            self.k_on.clone().unwrap_or_else(|| (0..self.k).collect()),
            self.m_on.clone().unwrap_or_else(|| (0..self.m).collect()),
        )
    }

    pub fn prototype(&self) -> Result<PrototypePulse> {
        make_prototype(self.pulse, &self.params()?, self.alpha, self.shift)
    }

    pub fn channel(&self) -> Result<ChannelSpec> {
        ChannelSpec::new(
            self.channel_taps.iter().map(|&[re, im]| C64::new(re, im)).collect(),
            self.snr_db,
            self.seed,
        )
    }

    pub fn limits(&self) -> DirectLimits {
        DirectLimits {
            l_max: self.l_max,
            n_max: self.n_max,
        }
    }

    /// Loopback pairing: explicit `chain`, else the modulator domain picks
    /// `FFT_TD_FD`/`FFT_FD_FD` or `DIR_TD_TD`/`DIR_FD_FD_SPARSE`.
    pub fn chain_kind(&self) -> ArchKind {
        self.chain.unwrap_or(match (self.arch, self.domain) {
            (Arch::Fft, Domain::Time) => ArchKind::FftTdFd,
            (Arch::Fft, Domain::Frequency) => ArchKind::FftFdFd,
            (Arch::Direct, Domain::Time) => ArchKind::DirTdTd,
            (Arch::Direct, Domain::Frequency) => ArchKind::DirFdFdSparse,
        })
    }

    /// Re-checks every constraint the downstream modules impose.
    pub fn validate(&self) -> Result<()> {
        self.prototype()?;
        let n = self.n();
        if self.n_cp > n || self.n_cs > n {
            return Err(GfdmError::InvalidConfig(format!(
                "n_cp={} / n_cs={} exceed N={n}",
                self.n_cp, self.n_cs
            )));
        }
        let channel = self.channel()?;
        if channel.taps.len() > n {
            return Err(GfdmError::InvalidConfig(format!(
                "{} channel taps exceed N={n}",
                channel.taps.len()
            )));
        }
        if self.l_max == 0 || self.n_max == 0 {
            return Err(GfdmError::InvalidConfig("l_max and n_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "gfdm", version, about = "GFDM block modem, loopback simulator and complexity tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input sample or symbol file
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file, or a directory for `pulse`; loopback and analyze print to stdout without it
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sample file format; defaults to the file extension (.csv or binary)
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Overrides the configured architecture
    #[arg(long, value_enum)]
    pub arch: Option<Arch>,
    /// Overrides the configured modem domain
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the prototype pulse and its windows
    Pulse(CommonArgs),
    /// Modulate a symbol file into a sample file (with CP/CS)
    Modulate(CommonArgs),
    /// Equalize and demodulate a sample file into a symbol file
    Demodulate(CommonArgs),
    /// Simulate one block through the full transceiver chain
    Loopback(CommonArgs),
    /// Emit the complexity/latency table as CSV
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Block lengths to sweep over all K x M splits
    #[arg(long = "n")]
    pub n: Vec<usize>,
    /// Subsymbol counts; rows with K >= max(8, M) and N <= 2048
    #[arg(long = "m")]
    pub m: Vec<usize>,
    /// Architecture kinds (default: all)
    #[arg(long = "kind")]
    pub kinds: Vec<String>,
    /// Band count for DIR_FD_FD_SPARSE when no config is given
    #[arg(long, default_value_t = 2)]
    pub bands: usize,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Pulse(a) => {
            let cfg = load_config(a)?;
            cmd_pulse(&cfg, require(&a.out, "--out")?, a.format.map(Into::into))?;
            Ok(())
        }
        Command::Modulate(a) => {
            let cfg = load_config(a)?;
            let input = require(&a.input, "--in")?;
            let out = require(&a.out, "--out")?;
            cmd_modulate(&cfg, input, out, a.format.map(Into::into))?;
            Ok(())
        }
        Command::Demodulate(a) => {
            let cfg = load_config(a)?;
            let input = require(&a.input, "--in")?;
            let out = require(&a.out, "--out")?;
            cmd_demodulate(&cfg, input, out, a.format.map(Into::into))?;
            Ok(())
        }
        Command::Loopback(a) => {
            let cfg = load_config(a)?;
            let report = cmd_loopback(&cfg)?;
            let text = serde_json::to_string_pretty(&report)?;
            match &a.out {
                Some(p) => fs::write(p, text + "\n")?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Analyze(a) => {
            let cfg = match &a.common.config {
                Some(p) => Some(RunConfig::load(p)?),
                None => None,
            };
            let csv = cmd_analyze(cfg.as_ref(), a)?;
            match &a.common.out {
                Some(p) => fs::write(p, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| GfdmError::InvalidConfig(format!("{flag} is required")))
}

fn load_config(a: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(require(&a.config, "--config")?)?;
    if let Some(arch) = a.arch {
        cfg.arch = arch;
    }
    if let Some(d) = a.domain {
        cfg.domain = d.into();
    }
    Ok(cfg)
}

fn format_for(path: &Path, explicit: Option<SampleFormat>) -> SampleFormat {
    explicit.unwrap_or_else(|| SampleFormat::from_path(path))
}

/// Writes `pulse_time`, `pulse_freq` and the transmit/receive windows of both
/// domains (as `vec(W)`) into the directory `out`.
pub fn cmd_pulse(cfg: &RunConfig, out: &Path, format: Option<SampleFormat>) -> Result<Vec<PathBuf>> {
    let g = cfg.prototype()?;
    let td = WindowPair::new(&g, Domain::Time, cfg.rx, DEFAULT_SINGULAR_EPS)?;
    let fd = WindowPair::new(&g, Domain::Frequency, cfg.rx, DEFAULT_SINGULAR_EPS)?;
    let files: [(&str, ComplexVec, u32); 6] = [
        ("pulse_time", g.time().to_vec(), 0),
        ("pulse_freq", g.freq().to_vec(), FLAG_FREQUENCY),
        ("w_tx_td", td.w_tx.to_col_major(), 0),
        ("w_rx_td", td.w_rx.to_col_major(), 0),
        ("w_tx_fd", fd.w_tx.to_col_major(), FLAG_FREQUENCY),
        ("w_rx_fd", fd.w_rx.to_col_major(), FLAG_FREQUENCY),
    ];
    let formats = match format {
        Some(f) => vec![f],
        None => vec![SampleFormat::Bin, SampleFormat::Csv],
    };
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for (name, data, flags) in &files {
        for &f in &formats {
            let path = out.join(format!("{name}.{}", f.extension()));
            write_samples(&path, data, f, *flags)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Which modem path actually ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModemPath {
    pub arch: Arch,
    pub domain: Domain,
}

/// Modulates `d` into `N` time samples with the configured architecture.
///
/// A direct frequency-domain request whose pulse spans more than `l_max`
/// bands falls back to the direct time-domain path.
pub fn modulate_block(cfg: &RunConfig, d: &DataGrid) -> Result<(ComplexVec, ModemPath)> {
    let g = cfg.prototype()?;
    let path = ModemPath {
        arch: cfg.arch,
        domain: cfg.domain,
    };
    match (cfg.arch, cfg.domain) {
        (Arch::Fft, Domain::Time) => Ok((FftModem::new().modulate_td(d, &tx_window(&g, Domain::Time)?)?, path)),
        (Arch::Fft, Domain::Frequency) => Ok((
            FftModem::new().modulate_fd(d, &tx_window(&g, Domain::Frequency)?, true)?,
            path,
        )),
        (Arch::Direct, domain) => {
            let modem = DirectModem::new(cfg.limits());
            if domain == Domain::Frequency {
                match modem.precompute_fd_mod(&g, DEFAULT_SPARSITY_TOL) {
                    Ok(set) => return Ok((modem.direct_modulate_fd(d, &set, true)?, path)),
                    Err(GfdmError::OverlapTooLarge { overlap, available }) => eprintln!(
                        "note: pulse spans {overlap} bands (> {available}), using the direct time-domain path"
                    ),
                    Err(e) => return Err(e),
                }
            }
            let x = modem.direct_modulate_td(d, &modem.precompute_td_mod(&g)?)?;
            Ok((
                x,
                ModemPath {
                    arch: Arch::Direct,
                    domain: Domain::Time,
                },
            ))
        }
    }
}

/// Demodulates an equalized spectrum with the configured architecture, with
/// the same fallback as [`modulate_block`].
pub fn demodulate_block(cfg: &RunConfig, y_freq: &[C64]) -> Result<(DataGrid, ModemPath)> {
    let g = cfg.prototype()?;
    let path = ModemPath {
        arch: cfg.arch,
        domain: cfg.domain,
    };
    let rx = |domain| WindowPair::new(&g, domain, cfg.rx, DEFAULT_SINGULAR_EPS);
    match (cfg.arch, cfg.domain) {
        (Arch::Fft, Domain::Time) => Ok((
            FftModem::new().demodulate_td_from_freq(y_freq, &rx(Domain::Time)?.w_rx)?,
            path,
        )),
        (Arch::Fft, Domain::Frequency) => Ok((
            FftModem::new().demodulate_fd(y_freq, &rx(Domain::Frequency)?.w_rx)?,
            path,
        )),
        (Arch::Direct, domain) => {
            let modem = DirectModem::new(cfg.limits());
            if domain == Domain::Frequency {
                let w = rx(Domain::Frequency)?.w_rx;
                match modem.precompute_fd_demod(&w, DEFAULT_SPARSITY_TOL) {
                    Ok(set) => return Ok((modem.direct_demodulate_fd(y_freq, &set)?, path)),
                    Err(GfdmError::OverlapTooLarge { overlap, available }) => eprintln!(
                        "note: receive window spans {overlap} bands (> {available}), using the direct time-domain path"
                    ),
                    Err(e) => return Err(e),
                }
            }
            let n = y_freq.len() as f64;
            let y: ComplexVec = dft(y_freq, Direction::Inverse, None)?
                .into_iter()
                .map(|v| v / n)
                .collect();
            let set = modem.precompute_td_demod(&rx(Domain::Time)?.w_rx)?;
            Ok((
                modem.direct_demodulate_td(&y, &set)?,
                ModemPath {
                    arch: Arch::Direct,
                    domain: Domain::Time,
                },
            ))
        }
    }
}

/// Reads active-position symbols, modulates, adds CP/CS and writes samples.
pub fn cmd_modulate(
    cfg: &RunConfig,
    input: &Path,
    out: &Path,
    format: Option<SampleFormat>,
) -> Result<ModemPath> {
    let symbols = read_samples(input, format_for(input, format))?.samples;
    if symbols.is_empty() {
        return Err(GfdmError::InvalidConfig(format!("{} holds no symbols", input.display())));
    }
    let d = map_symbols(&symbols, &cfg.params()?)?;
    let (x, path) = modulate_block(cfg, &d)?;
    let tx = add_cp(&x, cfg.n_cp, cfg.n_cs)?;
    write_samples(out, &tx, format_for(out, format), 0)?;
    Ok(path)
}

/// Reads received samples, strips CP/CS, equalizes with the configured
/// channel, demodulates and writes the active symbols. A binary input flagged
/// as a spectrum is taken as already equalized.
pub fn cmd_demodulate(
    cfg: &RunConfig,
    input: &Path,
    out: &Path,
    format: Option<SampleFormat>,
) -> Result<ModemPath> {
    let block = read_samples(input, format_for(input, format))?;
    let n = cfg.n();
    let y_freq = if block.flags.is_some_and(|f| f & FLAG_FREQUENCY != 0) {
        if block.samples.len() != n {
            return Err(GfdmError::DimensionMismatch(format!(
                "spectrum has {} samples, N={n}",
                block.samples.len()
            )));
        }
        block.samples
    } else {
        if block.samples.len() != n + cfg.n_cp + cfg.n_cs {
            return Err(GfdmError::DimensionMismatch(format!(
                "{} samples, expected N + CP + CS = {}",
                block.samples.len(),
                n + cfg.n_cp + cfg.n_cs
            )));
        }
        let y = remove_cp(&block.samples, cfg.n_cp, cfg.n_cs)?;
        fd_equalize_zf(&y, &cfg.channel()?.taps, None)?
    };
    let (d_hat, path) = demodulate_block(cfg, &y_freq)?;
    let symbols = demap_symbols(&d_hat, &cfg.params()?)?;
    write_samples(out, &symbols, format_for(out, format), 0)?;
    Ok(path)
}

/// Outcome of a loopback run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LoopbackReport {
    pub kind: ArchKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub n: usize,
    pub symbols: usize,
    pub nmse: f64,
    pub ser: f64,
    pub measured_cm: u64,
    pub formula_cm: u64,
    pub cm_match: bool,
    pub partitions: Option<(usize, usize)>,
    pub snr_db: Option<f64>,
    pub ibi_free: bool,
}

/// Maps seeded QPSK symbols, then modulate, CP, channel, equalize,
/// demodulate and demap.
pub fn cmd_loopback(cfg: &RunConfig) -> Result<LoopbackReport> {
    let params = cfg.params()?;
    let g = cfg.prototype()?;
    let channel = cfg.channel()?;
    // Data and noise come from distinct streams of the same seed.
    let tx = random_qpsk(params.active_len(), cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let d = map_symbols(&tx, &params)?;
    let setup = ChainSetup {
        rx_kind: cfg.rx,
        limits: cfg.limits(),
        singular_eps: DEFAULT_SINGULAR_EPS,
        sparsity_tol: DEFAULT_SPARSITY_TOL,
        n_cp: cfg.n_cp,
        n_cs: cfg.n_cs,
    };
    let kind = cfg.chain_kind();
    let out = match run_chain(kind, &g, &d, &channel, &setup) {
        Err(GfdmError::OverlapTooLarge { overlap, available })
            if matches!(kind, ArchKind::DirFdFd | ArchKind::DirFdFdSparse) =>
        {
            eprintln!(
                "note: {overlap} bands exceed {available} chains, using {}",
                ArchKind::DirTdTd
            );
            run_chain(ArchKind::DirTdTd, &g, &d, &channel, &setup)?
        }
        other => other?,
    };
    let rx = demap_symbols(&out.d_hat, &params)?;
    let report = reconcile_chain(&out)?;
    Ok(LoopbackReport {
        kind: out.kind,
        k: cfg.k,
        m: cfg.m,
        n: cfg.n(),
        symbols: tx.len(),
        nmse: nmse(&tx, &rx),
        ser: symbol_error_rate(&tx, &rx),
        measured_cm: report.measured,
        formula_cm: report.expected,
        cm_match: report.pass(),
        partitions: out.partitions,
        snr_db: cfg.snr_db,
        ibi_free: channel.ibi_free(cfg.n_cp),
    })
}

/// Analysis CSV. Row selection, first match wins: `--n` sweeps every split of
/// each block length, `--m` lists `K >= max(8, M)` up to `N = 2048`, a config gives
/// its own `(K, M)`, and the default is the `N = 1024` sweep.
pub fn cmd_analyze(cfg: Option<&RunConfig>, args: &AnalyzeArgs) -> Result<String> {
    let kinds = if args.kinds.is_empty() {
        ArchKind::ALL.to_vec()
    } else {
        args.kinds
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<ArchKind>>>()?
    };
    let dims: Vec<(usize, usize)> = if !args.n.is_empty() {
        let mut dims = Vec::new();
        for &n in &args.n {
            let f = factorizations(n, 1);
            if f.is_empty() {
                return Err(GfdmError::InvalidConfig(format!("N={n} is not a power of two")));
            }
            dims.extend(f);
        }
        dims
    } else if !args.m.is_empty() {
        let mut dims = Vec::new();
        for &m in &args.m {
            let mut k = m.max(8);
            while k * m <= 2048 {
                dims.push((k, m));
                k *= 2;
            }
        }
        dims
    } else if let Some(cfg) = cfg {
        vec![(cfg.k, cfg.m)]
    } else {
        factorizations(1024, 1)
    };
    let bands = match cfg {
        Some(cfg) => freq_overlap(&cfg.prototype()?, DEFAULT_SPARSITY_TOL),
        None => args.bands,
    };
    Ok(analysis_csv(&kinds, &dims, Some(bands), &CostModel::default()))
}
