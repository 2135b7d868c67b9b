//! Build each prototype pulse, report how many frequency bands it occupies
//! and whether its zero-forcing window exists.
//!
//! ```bash
//! cargo run --example pulse_design -- 16 8
//! ```

use gfdm::pulses::{freq_overlap, DEFAULT_SINGULAR_EPS, DEFAULT_SPARSITY_TOL};
use gfdm::{make_prototype, Domain, GfdmParams, PulseKind, RxKind, WindowPair};

fn main() -> gfdm::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("K and M are integers"));
    let k = args.next().unwrap_or(16);
    let m = args.next().unwrap_or(8);
    let params = GfdmParams::new(k, m)?;

    println!("K={k} M={m}");
    println!("{:<10} {:>6} {:>6} {:>10} {:>12}", "pulse", "alpha", "bands", "energy", "zf");
    for (kind, alpha) in [
        (PulseKind::Rc, 0.1),
        (PulseKind::Rc, 0.5),
        (PulseKind::Rc, 0.9),
        (PulseKind::Rrc, 0.5),
        (PulseKind::Dirichlet, 0.0),
        (PulseKind::RectTd, 0.0),
    ] {
        let g = make_prototype(kind, &params, alpha, 0.5)?;
        let energy: f64 = g.time().iter().map(|v| v.norm_sqr()).sum();
        // The ZF window is 1/W_tx; a zero anywhere in W_tx makes it singular.
        let zf = match WindowPair::new(&g, Domain::Time, RxKind::ZeroForcing, DEFAULT_SINGULAR_EPS) {
            Ok(pair) => format!("max {:.2e}", pair.w_rx.max_abs()),
            Err(e) => format!("{e}"),
        };
        println!(
            "{:<10} {:>6.2} {:>6} {:>10.4} {:>12}",
            format!("{kind:?}"),
            alpha,
            freq_overlap(&g, DEFAULT_SPARSITY_TOL),
            energy,
            zf
        );
    }
    Ok(())
}
