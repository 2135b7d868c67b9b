//! The unified FFT-based modem.
//!
//! One configurable pipeline serves all four jobs (time- or frequency-domain
//! modulation and demodulation):
//!
//! ```text
//! modulate:   stage1 -> memory1 -> stage2 -> window -> stage3 -> memory2 -> stage4
//! demodulate: stage4 -> memory2 -> stage3 -> window -> stage2 -> memory1 -> stage1
//! ```
//!
//! Each stage is a radix-2 FFT of configurable size and direction that can be
//! bypassed. Each memory writes the incoming stream column by column into a
//! matrix with a fixed number of rows and, when transposing, reads it back
//! row by row. The window memory is read incrementally and multiplied into
//! the stream sample by sample.
//!
//! [`ArchConfig::preset`] reproduces the four standard configurations; the
//! `modulate_*`/`demodulate_*` methods of [`FftModem`] are thin wrappers over
//! those presets.

use std::fmt;

use crate::error::{GfdmError, Result};
use crate::numerics::{
    is_power_of_two, ComplexMat, ComplexVec, Direction, MulCounter, Radix2Fft, C64,
};

/// `K x M` grid of data symbols `d_{k,m}`.
#[derive(Clone, PartialEq)]
pub struct DataGrid(ComplexMat);

impl DataGrid {
    pub fn new(mat: ComplexMat) -> Self {
        DataGrid(mat)
    }

    pub fn zeros(k: usize, m: usize) -> Self {
        DataGrid(ComplexMat::zeros(k, m))
    }

    pub fn from_fn(k: usize, m: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        DataGrid(ComplexMat::from_fn(k, m, f))
    }

    /// Builds a grid from `vec(D)`, i.e. index `k + m K`.
    pub fn from_vec(k: usize, m: usize, d: &[C64]) -> Result<Self> {
        Ok(DataGrid(ComplexMat::from_col_major(k, m, d)?))
    }

    /// `vec(D)`: subcarrier index runs fastest.
    pub fn to_vec(&self) -> ComplexVec {
        self.0.to_col_major()
    }

    pub fn k(&self) -> usize {
        self.0.rows()
    }

    pub fn m(&self) -> usize {
        self.0.cols()
    }

    pub fn mat(&self) -> &ComplexMat {
        &self.0
    }

    pub fn into_mat(self) -> ComplexMat {
        self.0
    }

    pub fn max_abs_diff(&self, other: &DataGrid) -> f64 {
        self.0.max_abs_diff(&other.0)
    }
}

impl std::ops::Index<(usize, usize)> for DataGrid {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl fmt::Debug for DataGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataGrid({:?})", self.0)
    }
}

/// One configurable FFT block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageConfig {
    pub size: usize,
    pub direction: Direction,
    pub enabled: bool,
    /// Scale the output by `1/size`. Presets set this on every inverse stage.
    pub normalize: bool,
}

impl StageConfig {
    pub const BYPASS: StageConfig = StageConfig {
        size: 0,
        direction: Direction::Forward,
        enabled: false,
        normalize: false,
    };

    pub fn forward(size: usize) -> Self {
        StageConfig {
            size,
            direction: Direction::Forward,
            enabled: true,
            normalize: false,
        }
    }

    /// Inverse transform carrying its `1/size` scale.
    pub fn inverse(size: usize) -> Self {
        StageConfig {
            size,
            direction: Direction::Inverse,
            enabled: true,
            normalize: true,
        }
    }

    /// Inverse transform without scaling.
    pub fn inverse_unscaled(size: usize) -> Self {
        StageConfig {
            normalize: false,
            ..Self::inverse(size)
        }
    }
}

/// Memory block that stores a stream in columns of `rows` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransposeMemory {
    pub rows: usize,
    /// Read back row by row; otherwise samples leave in arrival order.
    pub transpose: bool,
}

impl TransposeMemory {
    pub const PASS: TransposeMemory = TransposeMemory {
        rows: 1,
        transpose: false,
    };

    pub fn transposing(rows: usize) -> Self {
        TransposeMemory {
            rows,
            transpose: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModemMode {
    TdMod,
    FdMod,
    TdDemod,
    FdDemod,
}

impl ModemMode {
    pub fn is_demod(self) -> bool {
        matches!(self, ModemMode::TdDemod | ModemMode::FdDemod)
    }
}

impl std::str::FromStr for ModemMode {
    type Err = GfdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "td_mod" => Ok(ModemMode::TdMod),
            "fd_mod" => Ok(ModemMode::FdMod),
            "td_demod" => Ok(ModemMode::TdDemod),
            "fd_demod" => Ok(ModemMode::FdDemod),
            other => Err(GfdmError::InvalidConfig(format!("unknown modem mode '{other}'"))),
        }
    }
}

/// Full pipeline configuration.
///
/// `stages[i]` is FFT block `i + 1`; `memories[0]` is the allocation memory
/// next to block 1 and `memories[1]` the output memory next to block 4. The
/// window is stored in the orientation the pipeline consumes (`W^T` for the
/// time-domain modes) and read out in column-major order.
#[derive(Debug, Clone)]
pub struct ArchConfig {
    pub mode: ModemMode,
    pub stages: [StageConfig; 4],
    pub memories: [TransposeMemory; 2],
    pub window: Option<ComplexMat>,
}

impl ArchConfig {
    /// Every block bypassed: the pipeline forwards its input unchanged.
    pub fn bypass(mode: ModemMode) -> Self {
        ArchConfig {
            mode,
            stages: [StageConfig::BYPASS; 4],
            memories: [TransposeMemory::PASS; 2],
            window: None,
        }
    }

    /// Standard configuration for `mode` with a `K x M` window (`W_tx` for the
    /// modulators, `W_rx` for the demodulators).
    ///
    /// The frequency-domain modulator enables block 4 as an `N`-point inverse
    /// transform so that it emits time samples; the frequency-domain
    /// demodulator expects frequency-domain input and leaves block 4 off.
    pub fn preset(mode: ModemMode, k: usize, m: usize, window: &ComplexMat) -> Result<Self> {
        if !is_power_of_two(k) || !is_power_of_two(m) {
            return Err(GfdmError::InvalidConfig(format!(
                "K={k}, M={m} must be powers of two"
            )));
        }
        if window.shape() != (k, m) {
            return Err(GfdmError::DimensionMismatch(format!(
                "window is {:?}, expected ({k}, {m})",
                window.shape()
            )));
        }
        let n = k * m;
        let cfg = match mode {
            ModemMode::TdMod => ArchConfig {
                mode,
                stages: [
                    StageConfig::inverse(k),
                    StageConfig::forward(m),
                    StageConfig::inverse(m),
                    StageConfig::BYPASS,
                ],
                memories: [TransposeMemory::transposing(k), TransposeMemory::transposing(m)],
                window: Some(window.transpose()),
            },
            ModemMode::FdMod => ArchConfig {
                mode,
                stages: [
                    StageConfig::forward(m),
                    StageConfig::inverse(k),
                    StageConfig::forward(k),
                    StageConfig::inverse(n),
                ],
                memories: [TransposeMemory::transposing(m), TransposeMemory::transposing(k)],
                window: Some(window.clone()),
            },
            ModemMode::TdDemod => ArchConfig {
                mode,
                stages: [
                    StageConfig::forward(k),
                    StageConfig::inverse(m),
                    StageConfig::forward(m),
                    StageConfig::inverse(n),
                ],
                memories: [TransposeMemory::transposing(m), TransposeMemory::transposing(k)],
                window: Some(window.transpose()),
            },
            ModemMode::FdDemod => ArchConfig {
                mode,
                stages: [
                    StageConfig::inverse(m),
                    StageConfig::forward(k),
                    StageConfig::inverse(k),
                    StageConfig::BYPASS,
                ],
                memories: [TransposeMemory::transposing(k), TransposeMemory::transposing(m)],
                window: Some(window.clone()),
            },
        };
        Ok(cfg)
    }

    /// Stage sizes, directions and enables in block order 1..4, formatted as
    /// in the configuration tables (`-` for an unused entry).
    pub fn table_row(&self) -> (String, String, String) {
        let sizes: Vec<String> = self
            .stages
            .iter()
            .map(|s| if s.size == 0 { "-".into() } else { s.size.to_string() })
            .collect();
        let dirs: Vec<String> = self
            .stages
            .iter()
            .map(|s| {
                if s.size == 0 {
                    "-".into()
                } else {
                    s.direction.symbol().to_string()
                }
            })
            .collect();
        let enables: Vec<String> = self
            .stages
            .iter()
            .map(|s| if s.enabled { "E".into() } else { "D".into() })
            .collect();
        (
            format!("[{}]", sizes.join(",")),
            format!("[{}]", dirs.join(",")),
            format!("[{}]", enables.join(",")),
        )
    }

    fn validate(&self, n: usize) -> Result<()> {
        for (i, s) in self.stages.iter().enumerate() {
            if s.enabled && (!is_power_of_two(s.size) || !n.is_multiple_of(s.size)) {
                return Err(GfdmError::InvalidConfig(format!(
                    "stage {} size {} incompatible with block length {n}",
                    i + 1,
                    s.size
                )));
            }
        }
        for (i, mem) in self.memories.iter().enumerate() {
            if mem.transpose && (mem.rows == 0 || !n.is_multiple_of(mem.rows)) {
                return Err(GfdmError::InvalidConfig(format!(
                    "memory {} with {} rows cannot hold {n} samples",
                    i + 1,
                    mem.rows
                )));
            }
        }
        if let Some(w) = &self.window {
            if w.rows() * w.cols() != n {
                return Err(GfdmError::InvalidConfig(format!(
                    "window holds {} entries, block has {n}",
                    w.rows() * w.cols()
                )));
            }
        }
        Ok(())
    }
}

fn run_stage(stage: &StageConfig, data: &mut [C64], counter: Option<&MulCounter>) -> Result<()> {
    if !stage.enabled {
        return Ok(());
    }
    let plan = Radix2Fft::new(stage.size)?;
    let scale = if stage.normalize {
        1.0 / stage.size as f64
    } else {
        1.0
    };
    for chunk in data.chunks_mut(stage.size) {
        plan.process(chunk, stage.direction, counter);
        if stage.normalize {
            chunk.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(())
}

fn run_memory(mem: &TransposeMemory, data: Vec<C64>) -> Result<Vec<C64>> {
    if !mem.transpose {
        return Ok(data);
    }
    let cols = data.len() / mem.rows;
    let stored = ComplexMat::from_col_major(mem.rows, cols, &data)?;
    Ok(stored.into_row_major())
}

fn run_window(window: &Option<ComplexMat>, data: &mut [C64], counter: Option<&MulCounter>) {
    if let Some(w) = window {
        for (v, c) in data.iter_mut().zip(w.to_col_major()) {
            *v *= c;
        }
        if let Some(cnt) = counter {
            cnt.add("window", data.len() as u64);
        }
    }
}

/// Executes `cfg` on one block of samples.
pub fn run_pipeline(
    cfg: &ArchConfig,
    input: &[C64],
    counter: Option<&MulCounter>,
) -> Result<ComplexVec> {
    let n = input.len();
    if n == 0 {
        return Err(GfdmError::DimensionMismatch("empty input block".into()));
    }
    cfg.validate(n)?;
    let mut data = input.to_vec();
    let [s1, s2, s3, s4] = &cfg.stages;
    let [m1, m2] = &cfg.memories;
    if cfg.mode.is_demod() {
        run_stage(s4, &mut data, counter)?;
        data = run_memory(m2, data)?;
        run_stage(s3, &mut data, counter)?;
        run_window(&cfg.window, &mut data, counter);
        run_stage(s2, &mut data, counter)?;
        data = run_memory(m1, data)?;
        run_stage(s1, &mut data, counter)?;
    } else {
        run_stage(s1, &mut data, counter)?;
        data = run_memory(m1, data)?;
        run_stage(s2, &mut data, counter)?;
        run_window(&cfg.window, &mut data, counter);
        run_stage(s3, &mut data, counter)?;
        data = run_memory(m2, data)?;
        run_stage(s4, &mut data, counter)?;
    }
    Ok(data)
}

/// FFT-based modem instance owning its multiplication counter.
#[derive(Debug, Default)]
pub struct FftModem {
    counter: MulCounter,
}

impl FftModem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counter(&self) -> &MulCounter {
        &self.counter
    }

    pub fn run(&self, cfg: &ArchConfig, input: &[C64]) -> Result<ComplexVec> {
        run_pipeline(cfg, input, Some(&self.counter))
    }

    /// Time-domain modulation. Returns the `N` time samples of the core block.
    pub fn modulate_td(&self, d: &DataGrid, w_tx: &ComplexMat) -> Result<ComplexVec> {
        check_shape(d, w_tx)?;
        let cfg = ArchConfig::preset(ModemMode::TdMod, d.k(), d.m(), w_tx)?;
        // Columns of D enter first.
        self.run(&cfg, &d.to_vec())
    }

    /// Frequency-domain modulation. Returns the `N` spectrum samples, or the
    /// time samples when `emit_time` enables the final inverse transform.
    pub fn modulate_fd(&self, d: &DataGrid, w_tx: &ComplexMat, emit_time: bool) -> Result<ComplexVec> {
        check_shape(d, w_tx)?;
        let mut cfg = ArchConfig::preset(ModemMode::FdMod, d.k(), d.m(), w_tx)?;
        if !emit_time {
            cfg.stages[3] = StageConfig::BYPASS;
        }
        // Rows of D enter first.
        self.run(&cfg, d.mat().as_slice())
    }

    /// Time-domain demodulation of an equalized time-domain block.
    pub fn demodulate_td(&self, y_eq: &[C64], w_rx: &ComplexMat) -> Result<DataGrid> {
        let (k, m) = w_rx.shape();
        check_len(y_eq, k * m)?;
        let mut cfg = ArchConfig::preset(ModemMode::TdDemod, k, m, w_rx)?;
        cfg.stages[3] = StageConfig::BYPASS;
        let out = self.run(&cfg, y_eq)?;
        DataGrid::from_vec(k, m, &out)
    }

    /// Time-domain demodulation of an equalized frequency-domain block, using
    /// block 4 as the `N`-point inverse transform.
    pub fn demodulate_td_from_freq(&self, y_eq_freq: &[C64], w_rx: &ComplexMat) -> Result<DataGrid> {
        let (k, m) = w_rx.shape();
        check_len(y_eq_freq, k * m)?;
        let cfg = ArchConfig::preset(ModemMode::TdDemod, k, m, w_rx)?;
        let out = self.run(&cfg, y_eq_freq)?;
        DataGrid::from_vec(k, m, &out)
    }

    /// Frequency-domain demodulation of an equalized spectrum `y~_eq`.
    pub fn demodulate_fd(&self, y_eq_freq: &[C64], w_rx: &ComplexMat) -> Result<DataGrid> {
        let (k, m) = w_rx.shape();
        check_len(y_eq_freq, k * m)?;
        let cfg = ArchConfig::preset(ModemMode::FdDemod, k, m, w_rx)?;
        let out = self.run(&cfg, y_eq_freq)?;
        // Rows of D-hat leave first.
        Ok(DataGrid::new(ComplexMat::from_row_major(k, m, out)?))
    }
}

fn check_shape(d: &DataGrid, w: &ComplexMat) -> Result<()> {
    if d.mat().shape() != w.shape() {
        return Err(GfdmError::DimensionMismatch(format!(
            "data grid {:?} vs window {:?}",
            d.mat().shape(),
            w.shape()
        )));
    }
    Ok(())
}

fn check_len(y: &[C64], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(GfdmError::DimensionMismatch(format!(
            "block has {} samples, window implies N={n}",
            y.len()
        )));
    }
    Ok(())
}
