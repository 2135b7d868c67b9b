//! Cross-check the fast modems against the dense N x N modulation matrix.

use gfdm::channel::random_qpsk;
use gfdm::numerics::max_abs_diff;
use gfdm::oracle::{build_matrix, oracle_demod_mf, oracle_demod_zf, oracle_modulate};
use gfdm::{make_prototype, DataGrid, Domain, FftModem, GfdmParams, PulseKind, RxKind, WindowPair};

fn main() -> gfdm::Result<()> {
    for (k, m) in [(8, 4), (16, 8), (4, 32)] {
        let g = make_prototype(PulseKind::Rrc, &GfdmParams::new(k, m)?, 0.3, 0.5)?;
        let a = build_matrix(&g)?;
        let d = DataGrid::from_vec(k, m, &random_qpsk(k * m, 3))?;

        let modem = FftModem::new();
        let x_ref = oracle_modulate(&a, &d)?;
        let zf = WindowPair::new(&g, Domain::Frequency, RxKind::ZeroForcing, 1e-8)?;
        let mf = WindowPair::new(&g, Domain::Time, RxKind::MatchedFilter, 1e-8)?;
        let x = modem.modulate_fd(&d, &zf.w_tx, true)?;

        // The MF window yields K A^H y; the oracle returns A^H y.
        let mf_ref = oracle_demod_mf(&a, &x_ref)?.mat().scale(k as f64);
        let mf_hat = modem.demodulate_td(&x_ref, &mf.w_rx)?;
        let zf_ref = oracle_demod_zf(&a, &x_ref)?;

        println!(
            "{k:>3}x{m:<3} mod {:.1e}  mf {:.1e}  zf-vs-data {:.1e}",
            max_abs_diff(&x, &x_ref),
            mf_hat.mat().max_abs_diff(&mf_ref),
            zf_ref.max_abs_diff(&d)
        );
    }
    Ok(())
}
