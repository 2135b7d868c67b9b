//! FBMC/OQAM as two half-shifted GFDM blocks with real-valued symbols.

use gfdm::channel::random_qpsk;
use gfdm::numerics::{energy, ComplexMat};
use gfdm::oracle::{fbmc_oqam_modulate, oqam_split};
use gfdm::{make_prototype, GfdmParams, PulseKind};

fn main() -> gfdm::Result<()> {
    let (k, m) = (16, 8);
    let g = make_prototype(PulseKind::Rrc, &GfdmParams::new(k, m)?, 1.0, 0.5)?;
    let qam = ComplexMat::from_col_major(k, m, &random_qpsk(k * m, 5))?;

    let (d0, d1) = oqam_split(&qam);
    for kk in 0..2 {
        println!(
            "subcarrier {kk}: qam {:.3}  ->  stream0 {:.3}, stream1 {:.3}",
            qam[(kk, 0)],
            d0[(kk, 0)],
            d1[(kk, 0)]
        );
    }

    let x = fbmc_oqam_modulate(&qam, &g)?;
    println!("block of {} samples, energy {:.3}", x.len(), energy(&x));
    Ok(())
}
