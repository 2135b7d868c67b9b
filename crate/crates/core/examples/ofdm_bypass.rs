//! With M = 1 and a rectangular time pulse the modem reduces to OFDM: the
//! output is the inverse DFT of the data.

use gfdm::channel::random_qpsk;
use gfdm::numerics::{dft, max_abs_diff};
use gfdm::{make_prototype, tx_window, DataGrid, Direction, Domain, FftModem, GfdmParams, PulseKind};

fn main() -> gfdm::Result<()> {
    let k = 64;
    let g = make_prototype(PulseKind::RectTd, &GfdmParams::new(k, 1)?, 0.0, 0.0)?;
    let symbols = random_qpsk(k, 6);
    let d = DataGrid::from_vec(k, 1, &symbols)?;

    let x = FftModem::new().modulate_td(&d, &tx_window(&g, Domain::Time)?)?;
    // The pulse is a constant of unit energy, 1/sqrt(K), on every sample.
    let amp = g.time()[0];
    let ofdm: Vec<_> = dft(&symbols, Direction::Inverse, None)?.iter().map(|v| v * amp).collect();
    println!("K={k}: max |gfdm - ofdm| = {:.2e}", max_abs_diff(&x, &ofdm));
    Ok(())
}
