//! The direct (element-wise) modem next to the FFT pipeline.
//!
//! A Dirichlet pulse occupies a single band, so the sparse frequency-domain
//! modulator needs one multiplier chain instead of K.

use gfdm::channel::random_qpsk;
use gfdm::numerics::max_abs_diff;
use gfdm::pulses::DEFAULT_SPARSITY_TOL;
use gfdm::{
    make_prototype, tx_window, DataGrid, DirectLimits, DirectModem, Domain, FftModem, GfdmParams,
    PulseKind,
};

fn main() -> gfdm::Result<()> {
    let (k, m) = (16, 16);
    let params = GfdmParams::new(k, m)?;
    let d = DataGrid::from_vec(k, m, &random_qpsk(k * m, 2))?;

    for kind in [PulseKind::Dirichlet, PulseKind::Rc] {
        let g = make_prototype(kind, &params, 0.5, 0.5)?;
        let reference = FftModem::new().modulate_td(&d, &tx_window(&g, Domain::Time)?)?;

        let direct = DirectModem::new(DirectLimits::default());
        let td_set = direct.precompute_td_mod(&g)?;
        let x_td = direct.direct_modulate_td(&d, &td_set)?;
        let td_cm = direct.counter().count();

        direct.counter().reset();
        let fd = direct
            .precompute_fd_mod(&g, DEFAULT_SPARSITY_TOL)
            .and_then(|set| Ok((set.overlap(), direct.direct_modulate_fd(&d, &set, true)?)));

        println!("{kind:?}:");
        println!("  td: {} chains, {td_cm} CM, err {:.1e}", td_set.overlap(), max_abs_diff(&x_td, &reference));
        match fd {
            Ok((l, x_fd)) => println!(
                "  fd: {l} chains, {} CM, err {:.1e}",
                direct.counter().count(),
                max_abs_diff(&x_fd, &reference)
            ),
            Err(e) => println!("  fd: {e}"),
        }
    }
    Ok(())
}
