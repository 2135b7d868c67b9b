//! Multiplication counts, pipeline latency and hardware resources for the
//! FFT-based and direct designs.

use gfdm::analysis::{
    analysis_csv, cm_count, latency, latency_delta, latency_increase_pct, resources, ArchKind,
    CostModel, ResourceArch,
};

fn main() -> gfdm::Result<()> {
    let cost = CostModel::default();

    println!("CM per block, N = 1024");
    print!("{:>5} {:>5}", "K", "M");
    for kind in ArchKind::ALL {
        print!(" {:>17}", kind.name());
    }
    println!();
    for (k, m) in [(8, 128), (16, 64), (32, 32), (64, 16), (128, 8)] {
        print!("{k:>5} {m:>5}");
        for kind in ArchKind::ALL {
            print!(" {:>17}", cm_count(kind, k, m, Some(2))?);
        }
        println!();
    }

    println!("\nlatency in cycles");
    println!("{:>5} {:>5} {:>8} {:>8} {:>8} {:>7}", "K", "M", "fft", "direct", "delta", "%");
    for (k, m) in [(16, 16), (32, 16), (64, 16), (128, 16), (8, 8), (16, 8), (32, 8), (64, 8), (128, 8), (256, 8)] {
        println!(
            "{k:>5} {m:>5} {:>8} {:>8} {:>8} {:>7.2}",
            latency(ArchKind::FftTdFd, k, m, &cost)?,
            latency(ArchKind::DirTdTd, k, m, &cost)?,
            latency_delta(k, m, &cost)?,
            latency_increase_pct(k, m, &cost)?
        );
    }

    println!("\nresources (L_max = 16)");
    for arch in [ResourceArch::FftBased, ResourceArch::Direct] {
        println!("{arch:?}: {:?}", resources(arch, 16));
    }

    println!("\ncsv");
    print!("{}", analysis_csv(&[ArchKind::FftTdFd, ArchKind::DirTdTd], &[(64, 16)], Some(2), &cost));
    Ok(())
}
