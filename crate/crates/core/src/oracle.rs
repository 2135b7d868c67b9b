//! Reference implementations built on the dense modulation matrix.
//!
//! Everything here is deliberately naive (O(N^2) products, O(N^3) solves) and
//! shares no code path with the transform-based modems, so it can serve as
//! ground truth for them.

use std::f64::consts::PI;

use crate::error::{GfdmError, Result};
use crate::modem_fft::DataGrid;
use crate::numerics::{ComplexMat, ComplexVec, C64, ONE, ZERO};
use crate::pulses::{GfdmParams, PrototypePulse};

/// Condition number above which the ZF oracle refuses to solve.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Largest block the oracle accepts.
pub const ORACLE_N_MAX: usize = 4096;

/// Dense `N x N` modulation matrix, column `k + mK` holding `g_{k,m}`.
#[derive(Debug, Clone)]
pub struct ModMatrix {
    pub k: usize,
    pub m: usize,
    pub a: ComplexMat,
}

/// `A[n, k + mK] = g[<n - mK>_N] exp(j 2 pi n k / K)`.
pub fn build_matrix(g: &PrototypePulse) -> Result<ModMatrix> {
    let (k, m) = (g.params().k, g.params().m);
    let n = k * m;
    if n > ORACLE_N_MAX {
        return Err(GfdmError::InvalidConfig(format!(
            "oracle limited to N <= {ORACLE_N_MAX}, got {n}"
        )));
    }
    let time = g.time();
    // exp(j 2 pi n k / K) only depends on (n k) mod K.
    let phasor: Vec<C64> = (0..k)
        .map(|i| C64::from_polar(1.0, 2.0 * PI * i as f64 / k as f64))
        .collect();
    let a = ComplexMat::from_fn(n, n, |row, col| {
        let (kk, mm) = (col % k, col / k);
        time[(row + n - mm * k) % n] * phasor[(row * kk) % k]
    });
    Ok(ModMatrix { k, m, a })
}

impl ModMatrix {
    pub fn n(&self) -> usize {
        self.k * self.m
    }

    fn check_grid(&self, d: &DataGrid) -> Result<()> {
        if (d.k(), d.m()) != (self.k, self.m) {
            return Err(GfdmError::DimensionMismatch(format!(
                "grid {}x{} vs matrix built for {}x{}",
                d.k(),
                d.m(),
                self.k,
                self.m
            )));
        }
        Ok(())
    }

    fn check_block(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(GfdmError::DimensionMismatch(format!(
                "block of {} samples vs N={}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// `x = A vec(D)`.
pub fn oracle_modulate(a: &ModMatrix, d: &DataGrid) -> Result<ComplexVec> {
    a.check_grid(d)?;
    let dv = d.to_vec();
    let n = a.n();
    Ok((0..n)
        .map(|r| {
            a.a.row(r)
                .iter()
                .zip(&dv)
                .fold(ZERO, |acc, (x, y)| acc + x * y)
        })
        .collect())
}

/// `unvec(A^H x)`.
pub fn oracle_demod_mf(a: &ModMatrix, x: &[C64]) -> Result<DataGrid> {
    a.check_block(x)?;
    let n = a.n();
    let mut out = vec![ZERO; n];
    for (r, xr) in x.iter().enumerate() {
        for (c, v) in a.a.row(r).iter().enumerate() {
            out[c] += v.conj() * xr;
        }
    }
    DataGrid::from_vec(a.k, a.m, &out)
}

/// `unvec(A^{-1} x)` by dense LU; refuses ill-conditioned matrices.
pub fn oracle_demod_zf(a: &ModMatrix, x: &[C64]) -> Result<DataGrid> {
    a.check_block(x)?;
    let lu = Lu::factor(&a.a);
    let condition = lu.condition_estimate(&a.a);
    // Written so that a NaN estimate is also rejected.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(condition < CONDITION_LIMIT) {
        return Err(GfdmError::SingularMatrix { condition });
    }
    DataGrid::from_vec(a.k, a.m, &lu.solve(x))
}

/// LU factorization with partial pivoting, `P A = L U`.
struct Lu {
    n: usize,
    /// Unit-lower `L` below the diagonal, `U` on and above it.
    lu: Vec<C64>,
    /// Row `i` of `P A` is row `perm[i]` of `A`.
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    fn factor(a: &ComplexMat) -> Lu {
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let mut singular = scale == 0.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| lu[i * n + col].norm().total_cmp(&lu[j * n + col].norm()))
                .unwrap();
            if pivot != col {
                for c in 0..n {
                    lu.swap(pivot * n + c, col * n + c);
                }
                perm.swap(pivot, col);
            }
            let p = lu[col * n + col];
            if p.norm() <= 1e-15 * scale {
                singular = true;
                continue;
            }
            let (top, rest) = lu.split_at_mut((col + 1) * n);
            let prow = &top[col * n..];
            for row in rest.chunks_mut(n) {
                let f = row[col] / p;
                row[col] = f;
                if f != ZERO {
                    for c in col + 1..n {
                        row[c] -= f * prow[c];
                    }
                }
            }
        }
        Lu {
            n,
            lu,
            perm,
            singular,
        }
    }

    /// Solves `A x = b`.
    #[allow(clippy::needless_range_loop)]
    fn solve(&self, b: &[C64]) -> ComplexVec {
        let n = self.n;
        let mut y: ComplexVec = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        y
    }

    /// Solves `A^H x = b` using `A^H = U^H L^H P`.
    #[allow(clippy::needless_range_loop)]
    fn solve_adjoint(&self, b: &[C64]) -> ComplexVec {
        let n = self.n;
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[j * n + i].conj() * w[j];
            }
            w[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i].conj() * w[j];
            }
            w[i] = s;
        }
        let mut x = vec![ZERO; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    /// 2-norm condition estimate: power iteration on `A^H A` for the largest
    /// singular value, inverse iteration for the smallest.
    fn condition_estimate(&self, a: &ComplexMat) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        const ITERS: usize = 30;
        let n = self.n;
        let start = || -> ComplexVec {
            (0..n)
                .map(|i| C64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05))
                .collect()
        };
        let normalize = |v: &mut ComplexVec| -> f64 {
            let s = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if s > 0.0 {
                v.iter_mut().for_each(|x| *x /= s);
            }
            s
        };
        let matvec = |v: &[C64], adjoint: bool| -> ComplexVec {
            let mut out = vec![ZERO; n];
            for r in 0..n {
                for c in 0..n {
                    if adjoint {
                        out[c] += a[(r, c)].conj() * v[r];
                    } else {
                        out[r] += a[(r, c)] * v[c];
                    }
                }
            }
            out
        };

        let mut v = start();
        normalize(&mut v);
        let mut lambda_max = 0.0;
        for _ in 0..ITERS {
            v = matvec(&matvec(&v, false), true);
            lambda_max = normalize(&mut v);
        }
        let mut v = start();
        normalize(&mut v);
        let mut inv_lambda_min = 0.0;
        for _ in 0..ITERS {
            v = self.solve(&self.solve_adjoint(&v));
            inv_lambda_min = normalize(&mut v);
            if !inv_lambda_min.is_finite() {
                return f64::INFINITY;
            }
        }
        (lambda_max * inv_lambda_min).sqrt()
    }
}

/// Places `d_on` on the active positions, subcarrier index fastest.
pub fn map_symbols(d_on: &[C64], params: &GfdmParams) -> Result<DataGrid> {
    if d_on.len() != params.active_len() {
        return Err(GfdmError::DimensionMismatch(format!(
            "{} symbols for {} active positions",
            d_on.len(),
            params.active_len()
        )));
    }
    let mut d = ComplexMat::zeros(params.k, params.m);
    let mut it = d_on.iter();
    for &m in &params.m_on {
        for &k in &params.k_on {
            d[(k, m)] = *it.next().unwrap();
        }
    }
    Ok(DataGrid::new(d))
}

/// Inverse of [`map_symbols`].
pub fn demap_symbols(d: &DataGrid, params: &GfdmParams) -> Result<ComplexVec> {
    if (d.k(), d.m()) != (params.k, params.m) {
        return Err(GfdmError::DimensionMismatch(format!(
            "grid {}x{} vs params {}x{}",
            d.k(),
            d.m(),
            params.k,
            params.m
        )));
    }
    let mut out = Vec::with_capacity(params.active_len());
    for &m in &params.m_on {
        for &k in &params.k_on {
            out.push(d[(k, m)]);
        }
    }
    Ok(out)
}

/// One constituent of a multi-pulse block.
#[derive(Debug, Clone)]
pub struct PulseComponent {
    pub pulse: PrototypePulse,
    pub k_on: Vec<usize>,
    pub m_on: Vec<usize>,
    pub grid: DataGrid,
}

/// Superposition of GFDM blocks sharing `N` but using different pulses.
#[derive(Debug, Clone, Default)]
pub struct MultiPulseSpec {
    pub components: Vec<PulseComponent>,
}

/// `x = sum_l A^(l) vec(D^(l))`, each grid restricted to its active set.
pub fn compose_multipulse(spec: &MultiPulseSpec) -> Result<ComplexVec> {
    let Some(first) = spec.components.first() else {
        return Err(GfdmError::InvalidConfig("multi-pulse spec is empty".into()));
    };
    let n = first.pulse.params().n();
    let mut x = vec![ZERO; n];
    for comp in &spec.components {
        let p = comp.pulse.params();
        if p.n() != n {
            return Err(GfdmError::DimensionMismatch(format!(
                "component with N={} in a block of N={n}",
                p.n()
            )));
        }
        let params = GfdmParams::with_active(p.k, p.m, comp.k_on.clone(), comp.m_on.clone())?;
        let masked = map_symbols(&demap_symbols(&comp.grid, &params)?, &params)?;
        let a = build_matrix(&comp.pulse)?;
        for (acc, v) in x.iter_mut().zip(oracle_modulate(&a, &masked)?) {
            *acc += v;
        }
    }
    Ok(x)
}

/// OQAM precoding factors `(theta_0k, theta_1k)`.
pub fn oqam_theta(k: usize) -> (C64, C64) {
    let j = C64::new(0.0, 1.0);
    if k.is_multiple_of(2) {
        (j, ONE)
    } else {
        (ONE, j)
    }
}

/// The two OQAM-precoded streams `(D^(0), D^(1))` of a QAM grid.
pub fn oqam_split(d_qam: &ComplexMat) -> (DataGrid, DataGrid) {
    let (k, m) = d_qam.shape();
    let d0 = DataGrid::from_fn(k, m, |kk, mm| oqam_theta(kk).0 * d_qam[(kk, mm)].re);
    let d1 = DataGrid::from_fn(k, m, |kk, mm| oqam_theta(kk).1 * d_qam[(kk, mm)].im);
    (d0, d1)
}

/// FBMC/OQAM block from two GFDM cores; the second uses `g` delayed by `K/2`.
pub fn fbmc_oqam_modulate(d_qam: &ComplexMat, g: &PrototypePulse) -> Result<ComplexVec> {
    let (k, m) = (g.params().k, g.params().m);
    if k % 2 != 0 {
        return Err(GfdmError::InvalidConfig(format!("FBMC/OQAM needs even K, got {k}")));
    }
    if d_qam.shape() != (k, m) {
        return Err(GfdmError::DimensionMismatch(format!(
            "QAM grid {:?} vs pulse {k}x{m}",
            d_qam.shape()
        )));
    }
    let (d0, d1) = oqam_split(d_qam);
    let x0 = oracle_modulate(&build_matrix(g)?, &d0)?;
    let x1 = oracle_modulate(&build_matrix(&g.delayed(k / 2))?, &d1)?;
    Ok(x0.iter().zip(&x1).map(|(a, b)| a + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dft, max_abs, max_abs_diff, Direction};
    use crate::pulses::{make_prototype, PulseKind};

    fn qpsk_grid(k: usize, m: usize, seed: u64) -> DataGrid {
        let mut s = seed.wrapping_mul(2654435761) | 1;
        DataGrid::from_fn(k, m, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            let re = if s & 1 == 0 { 1.0 } else { -1.0 };
            let im = if s & 2 == 0 { 1.0 } else { -1.0 };
            C64::new(re, im) / 2f64.sqrt()
        })
    }

    fn rc(k: usize, m: usize, alpha: f64, shift: f64) -> PrototypePulse {
        make_prototype(PulseKind::Rc, &GfdmParams::new(k, m).unwrap(), alpha, shift).unwrap()
    }

    #[test]
    fn ofdm_matrix_is_scaled_idft() {
        let p = GfdmParams::new(8, 1).unwrap();
        let g = make_prototype(PulseKind::RectTd, &p, 0.0, 0.0).unwrap();
        let a = build_matrix(&g).unwrap();
        for c in 0..8 {
            let mut e = vec![ZERO; 8];
            e[c] = ONE;
            let want: Vec<C64> = dft(&e, Direction::Inverse, None)
                .unwrap()
                .iter()
                .map(|v| v / 8f64.sqrt())
                .collect();
            assert!(max_abs_diff(&a.a.column(c), &want) < 1e-14);
        }
    }

    #[test]
    fn single_carrier_matrix_is_identity() {
        let p = GfdmParams::new(1, 8).unwrap();
        let mut t = vec![ZERO; 8];
        t[0] = ONE;
        let g = PrototypePulse::from_time(&p, t).unwrap();
        let a = build_matrix(&g).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(a.a[(r, c)], if r == c { ONE } else { ZERO });
            }
        }
    }

    #[test]
    fn columns_have_unit_norm() {
        let a = build_matrix(&rc(8, 4, 0.5, 0.5)).unwrap();
        for c in 0..32 {
            let e: f64 = a.a.column(c).iter().map(|v| v.norm_sqr()).sum();
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_matrix_is_orthogonal() {
        let p = GfdmParams::new(8, 4).unwrap();
        let g = make_prototype(PulseKind::Dirichlet, &p, 0.0, 0.0).unwrap();
        let a = build_matrix(&g).unwrap();
        let n = 32;
        for i in 0..n {
            for j in 0..n {
                let v: C64 = (0..n).map(|r| a.a[(r, i)].conj() * a.a[(r, j)]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).norm() < 1e-8);
            }
        }
        // MF inverts an orthonormal system exactly.
        let d = qpsk_grid(8, 4, 4);
        let x = oracle_modulate(&a, &d).unwrap();
        assert!(oracle_demod_mf(&a, &x).unwrap().max_abs_diff(&d) < 1e-10);
    }

    #[test]
    fn zf_inverts_modulation() {
        let a = build_matrix(&rc(8, 4, 0.5, 0.5)).unwrap();
        let d = qpsk_grid(8, 4, 9);
        let x = oracle_modulate(&a, &d).unwrap();
        assert!(oracle_demod_zf(&a, &x).unwrap().max_abs_diff(&d) < 1e-10);
    }

    #[test]
    fn zf_rejects_singular_matrix() {
        let a = build_matrix(&rc(8, 4, 0.0, 0.0)).unwrap();
        let x = vec![ONE; 32];
        assert!(matches!(
            oracle_demod_zf(&a, &x),
            Err(GfdmError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn lu_adjoint_solve() {
        let a = build_matrix(&rc(4, 4, 0.3, 0.5)).unwrap();
        let lu = Lu::factor(&a.a);
        let b: Vec<C64> = (0..16).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let x = lu.solve_adjoint(&b);
        let back: Vec<C64> = (0..16)
            .map(|c| (0..16).map(|r| a.a[(r, c)].conj() * x[r]).sum())
            .collect();
        assert!(max_abs_diff(&back, &b) < 1e-9);
    }

    #[test]
    fn symbol_mapping() {
        let p = GfdmParams::with_active(4, 2, vec![1], vec![0]).unwrap();
        let d = map_symbols(&[ONE], &p).unwrap();
        assert_eq!(d[(1, 0)], ONE);
        assert_eq!(d.mat().max_abs(), 1.0);
        assert_eq!(d.mat().as_slice().iter().filter(|v| **v != ZERO).count(), 1);

        let full = GfdmParams::new(4, 2).unwrap();
        let v: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 0.0)).collect();
        let g = map_symbols(&v, &full).unwrap();
        assert_eq!(g.to_vec(), v);

        let sparse = GfdmParams::with_active(8, 4, vec![6, 1, 3], vec![3, 0]).unwrap();
        let v: Vec<C64> = (0..6).map(|i| C64::new(0.5, i as f64)).collect();
        let g = map_symbols(&v, &sparse).unwrap();
        assert_eq!(demap_symbols(&g, &sparse).unwrap(), v);
        assert_eq!(g[(6, 3)], v[0]);
        assert_eq!(g[(1, 3)], v[1]);

        assert!(map_symbols(&v[..5], &sparse).is_err());
    }

    #[test]
    fn multipulse_single_and_zero() {
        let g = rc(8, 4, 0.5, 0.5);
        let d = qpsk_grid(8, 4, 2);
        let spec = MultiPulseSpec {
            components: vec![PulseComponent {
                pulse: g.clone(),
                k_on: (0..8).collect(),
                m_on: (0..4).collect(),
                grid: d.clone(),
            }],
        };
        let want = oracle_modulate(&build_matrix(&g).unwrap(), &d).unwrap();
        assert!(max_abs_diff(&compose_multipulse(&spec).unwrap(), &want) < 1e-13);

        let zero = MultiPulseSpec {
            components: vec![PulseComponent {
                pulse: g,
                k_on: vec![0],
                m_on: vec![0],
                grid: DataGrid::zeros(8, 4),
            }],
        };
        assert_eq!(max_abs(&compose_multipulse(&zero).unwrap()), 0.0);
        assert!(compose_multipulse(&MultiPulseSpec::default()).is_err());
    }

    #[test]
    fn multipulse_rejects_mixed_block_lengths() {
        let spec = MultiPulseSpec {
            components: vec![
                PulseComponent {
                    pulse: rc(8, 4, 0.5, 0.5),
                    k_on: vec![0],
                    m_on: vec![0],
                    grid: DataGrid::zeros(8, 4),
                },
                PulseComponent {
                    pulse: rc(8, 8, 0.5, 0.5),
                    k_on: vec![0],
                    m_on: vec![0],
                    grid: DataGrid::zeros(8, 8),
                },
            ],
        };
        assert!(matches!(
            compose_multipulse(&spec),
            Err(GfdmError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn oqam_theta_pattern() {
        let j = C64::new(0.0, 1.0);
        assert_eq!(oqam_theta(0), (j, ONE));
        assert_eq!(oqam_theta(1), (ONE, j));
        assert_eq!(oqam_theta(6), (j, ONE));
    }

    #[test]
    fn fbmc_real_input_uses_first_stream_only() {
        let g = rc(8, 4, 0.5, 0.5);
        let d = ComplexMat::from_fn(8, 4, |k, m| C64::new(if (k + m) % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
        let (_, d1) = oqam_split(&d);
        assert_eq!(d1.mat().max_abs(), 0.0);
        let x = fbmc_oqam_modulate(&d, &g).unwrap();
        let (d0, _) = oqam_split(&d);
        let x0 = oracle_modulate(&build_matrix(&g).unwrap(), &d0).unwrap();
        assert!(max_abs_diff(&x, &x0) < 1e-13);
    }

    #[test]
    fn fbmc_rejects_odd_k() {
        let p = GfdmParams::new(1, 8).unwrap();
        let g = make_prototype(PulseKind::Rc, &p, 0.5, 0.5).unwrap();
        assert!(fbmc_oqam_modulate(&ComplexMat::zeros(1, 8), &g).is_err());
    }
}
