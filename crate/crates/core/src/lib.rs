//! GFDM block modem.
//!
//! A generalized frequency division multiplexing block carries `K x M` data
//! symbols on `K` subcarriers and `M` subsymbols, all shaped by circular
//! shifts of one prototype pulse. This crate provides:
//!
//! - [`modem_fft`]: a four-stage radix-2 FFT pipeline that modulates and
//!   demodulates in either the time or the frequency domain;
//! - [`modem_direct`]: the same operations as a sum of element-wise products
//!   over parallel multiplier chains;
//! - [`oracle`]: dense modulation-matrix references, multi-pulse and
//!   FBMC/OQAM block generation;
//! - [`channel`]: cyclic prefix, multipath with AWGN and one-tap equalization;
//! - [`analysis`]: complex-multiplication counts, pipeline latency and
//!   resource tables, checked against instrumented runs;
//! - [`cli`] and [`samples`]: the `gfdm` command-line tool and its file formats.
//!
//! ```
//! use gfdm::{make_prototype, tx_window, DataGrid, Domain, FftModem, GfdmParams, PulseKind, C64};
//!
//! let params = GfdmParams::new(8, 4).unwrap();
//! let g = make_prototype(PulseKind::Rc, &params, 0.5, 0.5).unwrap();
//! let w = tx_window(&g, Domain::Time).unwrap();
//! let d = DataGrid::from_fn(8, 4, |k, m| C64::new(k as f64, m as f64));
//! let x = FftModem::new().modulate_td(&d, &w).unwrap();
//! assert_eq!(x.len(), 32);
//! ```

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod modem_direct;
pub mod modem_fft;
pub mod numerics;
pub mod oracle;
pub mod pulses;
pub mod samples;

pub use error::{GfdmError, Result};
pub use modem_direct::{DirectLimits, DirectModem, DirectPulseSet};
pub use modem_fft::{ArchConfig, DataGrid, FftModem, ModemMode, StageConfig, TransposeMemory};
pub use numerics::{ComplexMat, ComplexVec, Direction, MulCounter, C64};
pub use pulses::{
    make_prototype, rx_window, tx_window, Domain, GfdmParams, PrototypePulse, PulseKind, RxKind,
    WindowPair,
};
