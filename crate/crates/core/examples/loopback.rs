//! End-to-end link: modulate, add a cyclic prefix, pass a multipath channel
//! with noise, equalize and demodulate. Sweeps SNR for every architecture.

use gfdm::analysis::{reconcile_chain, run_chain, ArchKind, ChainSetup};
use gfdm::channel::{nmse, qpsk_decide, random_qpsk, symbol_error_rate, ChannelSpec};
use gfdm::{make_prototype, DataGrid, GfdmParams, PulseKind, RxKind};

fn main() -> gfdm::Result<()> {
    let (k, m) = (64, 16);
    let g = make_prototype(PulseKind::Dirichlet, &GfdmParams::new(k, m)?, 0.0, 0.0)?;
    let symbols = random_qpsk(k * m, 4);
    let d = DataGrid::from_vec(k, m, &symbols)?;
    let taps = ChannelSpec::random_taps(6, 9);

    let mut setup = ChainSetup::for_counting(k * m, RxKind::ZeroForcing);
    setup.n_cp = 16;

    println!("{:<18} {:>6} {:>10} {:>8} {:>8}", "kind", "snr", "nmse", "ser", "cm ok");
    for kind in ArchKind::ALL {
        for snr in [10.0, 20.0, 30.0] {
            let channel = ChannelSpec::new(taps.clone(), Some(snr), 11)?;
            let out = match run_chain(kind, &g, &d, &channel, &setup) {
                Ok(out) => out,
                Err(e) => {
                    println!("{:<18} {e}", kind.name());
                    break;
                }
            };
            let est = out.d_hat.to_vec();
            let decided: Vec<_> = est.iter().map(|&v| qpsk_decide(v)).collect();
            println!(
                "{:<18} {:>6.0} {:>10.2e} {:>8.4} {:>8}",
                kind.name(),
                snr,
                nmse(&symbols, &est),
                symbol_error_rate(&symbols, &decided),
                reconcile_chain(&out)?.pass()
            );
        }
    }
    Ok(())
}
