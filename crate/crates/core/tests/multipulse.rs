//! Multi-pulse blocks against a modulation matrix built directly on the
//! oversampled time lattice `P = K/2`.

use std::f64::consts::PI;

use gfdm::channel::random_qpsk;
use gfdm::numerics::{max_abs, max_abs_diff, ComplexMat};
use gfdm::oracle::{compose_multipulse, fbmc_oqam_modulate, oqam_split, MultiPulseSpec, PulseComponent};
use gfdm::{make_prototype, ComplexVec, DataGrid, GfdmParams, PrototypePulse, PulseKind, C64};

/// `x[n] = sum_{k, j} d[k, j] g[<n - jP>_N] exp(j 2 pi n k / K)` for `j = 0..N/P`.
fn lattice_modulate(g: &[C64], k: usize, p: usize, d: &ComplexMat) -> ComplexVec {
    let n = g.len();
    assert_eq!(d.shape(), (k, n / p));
    (0..n)
        .map(|t| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n / p {
                let shifted = g[(t + n - (j * p) % n) % n];
                for kk in 0..k {
                    acc += d[(kk, j)] * shifted * C64::from_polar(1.0, 2.0 * PI * (t * kk) as f64 / k as f64);
                }
            }
            acc
        })
        .collect()
}

fn rc(k: usize, m: usize) -> PrototypePulse {
    make_prototype(PulseKind::Rc, &GfdmParams::new(k, m).unwrap(), 0.5, 0.5).unwrap()
}

fn full(k: usize, m: usize, pulse: PrototypePulse, grid: DataGrid) -> PulseComponent {
    PulseComponent {
        pulse,
        k_on: (0..k).collect(),
        m_on: (0..m).collect(),
        grid,
    }
}

#[test]
fn half_shifted_pair_is_oversampled_gfdm() {
    for (k, m) in [(8, 4), (16, 8), (4, 16)] {
        let g = rc(k, m);
        let merged = ComplexMat::from_col_major(k, 2 * m, &random_qpsk(2 * k * m, k as u64)).unwrap();
        let part = |l: usize| DataGrid::from_fn(k, m, |kk, mm| merged[(kk, 2 * mm + l)]);
        let spec = MultiPulseSpec {
            components: vec![full(k, m, g.clone(), part(0)), full(k, m, g.delayed(k / 2), part(1))],
        };
        let x = compose_multipulse(&spec).unwrap();
        let want = lattice_modulate(g.time(), k, k / 2, &merged);
        assert!(max_abs_diff(&x, &want) < 1e-12 * max_abs(&want), "{k}x{m}");
    }
}

#[test]
fn disjoint_subsymbol_sets() {
    // Pulse 0 on even subsymbols, pulse 1 (delayed K/2) on odd ones: every
    // pulse lands on a distinct point of the P = K/2 lattice.
    let (k, m) = (8, 8);
    let g = rc(k, m);
    let d = DataGrid::from_vec(k, m, &random_qpsk(k * m, 5)).unwrap();
    let even: Vec<usize> = (0..m).step_by(2).collect();
    let odd: Vec<usize> = (1..m).step_by(2).collect();
    let spec = MultiPulseSpec {
        components: vec![
            PulseComponent {
                pulse: g.clone(),
                k_on: (0..k).collect(),
                m_on: even,
                grid: d.clone(),
            },
            PulseComponent {
                pulse: g.delayed(k / 2),
                k_on: (0..k).collect(),
                m_on: odd,
                grid: d.clone(),
            },
        ],
    };
    let lattice = ComplexMat::from_fn(k, 2 * m, |kk, j| {
        let mm = j / 2;
        if j % 2 == mm % 2 {
            d[(kk, mm)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let x = compose_multipulse(&spec).unwrap();
    let want = lattice_modulate(g.time(), k, k / 2, &lattice);
    assert!(max_abs_diff(&x, &want) < 1e-12 * max_abs(&want));
}

#[test]
fn off_set_entries_are_ignored() {
    let (k, m) = (8, 4);
    let g = rc(k, m);
    let d = DataGrid::from_vec(k, m, &random_qpsk(k * m, 6)).unwrap();
    let k_on = vec![1, 2, 5];
    let m_on = vec![0, 3];
    let masked = DataGrid::from_fn(k, m, |kk, mm| {
        if k_on.contains(&kk) && m_on.contains(&mm) {
            d[(kk, mm)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let spec = MultiPulseSpec {
        components: vec![PulseComponent {
            pulse: g.clone(),
            k_on,
            m_on,
            grid: d,
        }],
    };
    let want = lattice_modulate(g.time(), k, k, masked.mat());
    assert!(max_abs_diff(&compose_multipulse(&spec).unwrap(), &want) < 1e-12);
}

#[test]
fn fbmc_matches_lattice_form() {
    let (k, m) = (16, 4);
    let g = rc(k, m);
    let qam = ComplexMat::from_col_major(k, m, &random_qpsk(k * m, 7)).unwrap();
    let (d0, d1) = oqam_split(&qam);
    let merged = ComplexMat::from_fn(k, 2 * m, |kk, j| {
        if j % 2 == 0 {
            d0[(kk, j / 2)]
        } else {
            d1[(kk, j / 2)]
        }
    });
    let want = lattice_modulate(g.time(), k, k / 2, &merged);
    let x = fbmc_oqam_modulate(&qam, &g).unwrap();
    assert!(max_abs_diff(&x, &want) < 1e-12 * max_abs(&want));

    // Stream 0 on even subcarriers is purely imaginary, on odd ones real.
    let j = C64::new(0.0, 1.0);
    assert_eq!(d0[(0, 0)], j * qam[(0, 0)].re);
    assert_eq!(d0[(1, 0)], C64::new(qam[(1, 0)].re, 0.0));
    assert_eq!(d1[(0, 0)], C64::new(qam[(0, 0)].im, 0.0));
    assert_eq!(d1[(1, 0)], j * qam[(1, 0)].im);
}
