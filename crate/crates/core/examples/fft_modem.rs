//! Modulate a block in both Zak domains with the four-stage FFT pipeline,
//! then show the stage configuration each mode uses and its multiplication count.

use gfdm::channel::random_qpsk;
use gfdm::numerics::max_abs_diff;
use gfdm::{
    make_prototype, ArchConfig, DataGrid, Domain, FftModem, GfdmParams, ModemMode, PulseKind,
    RxKind, WindowPair,
};

fn main() -> gfdm::Result<()> {
    let (k, m) = (32, 8);
    let g = make_prototype(PulseKind::Rc, &GfdmParams::new(k, m)?, 0.5, 0.5)?;
    let d = DataGrid::from_vec(k, m, &random_qpsk(k * m, 1))?;

    let td = WindowPair::new(&g, Domain::Time, RxKind::ZeroForcing, 1e-8)?;
    let fd = WindowPair::new(&g, Domain::Frequency, RxKind::ZeroForcing, 1e-8)?;

    let modem = FftModem::new();
    let x_td = modem.modulate_td(&d, &td.w_tx)?;
    let after_td = modem.counter().count();
    let x_fd = modem.modulate_fd(&d, &fd.w_tx, true)?;
    let after_fd = modem.counter().count() - after_td;
    println!("td vs fd modulator: max |diff| = {:.2e}", max_abs_diff(&x_td, &x_fd));
    println!("complex multiplications: td {after_td}, fd {after_fd}");

    let d_hat = modem.demodulate_td(&x_td, &td.w_rx)?;
    println!("zf round trip error = {:.2e}", d_hat.max_abs_diff(&d));

    println!("\n{:<10} {:<18} {:<10} enabled", "mode", "sizes", "dirs");
    for (mode, w) in [
        (ModemMode::TdMod, &td.w_tx),
        (ModemMode::FdMod, &fd.w_tx),
        (ModemMode::TdDemod, &td.w_rx),
        (ModemMode::FdDemod, &fd.w_rx),
    ] {
        let (sizes, dirs, en) = ArchConfig::preset(mode, k, m, w)?.table_row();
        println!("{:<10} {:<18} {:<10} {}", format!("{mode:?}"), sizes, dirs, en);
    }
    Ok(())
}
