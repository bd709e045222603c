//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use dome_core::dynamics::{DensityMatrix, LindbladRates};
use dome_core::C64;
use nalgebra::DMatrix;

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm: f64 = (0..n).map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scaled = a * C64::new(1.0 / 2f64.powi(s), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Column-stacked Liouvillian built from explicit jump operators:
/// `sqrt(g1) |vac><n|` and `sqrt(gphi) Z_n` for every site `n`, with `Z_n`
/// equal to `+1` on `|n>` and `-1` on every other basis state.
pub fn liouvillian(h_block: &DMatrix<f64>, rates: LindbladRates) -> DMatrix<C64> {
    let d = h_block.nrows() + 1;
    let mut h = DMatrix::<C64>::zeros(d, d);
    for i in 1..d {
        for j in 1..d {
            h[(i, j)] = C64::new(h_block[(i - 1, j - 1)], 0.0);
        }
    }
    let id = DMatrix::<C64>::identity(d, d);
    let minus_i = C64::new(0.0, -1.0);
    let mut l = (kron(&id, &h) - kron(&h.transpose(), &id)) * minus_i;
    let mut jumps = Vec::new();
    for n in 1..d {
        let mut lower = DMatrix::<C64>::zeros(d, d);
        lower[(0, n)] = C64::new(rates.relaxation.sqrt(), 0.0);
        jumps.push(lower);
        let mut z = DMatrix::<C64>::from_diagonal_element(d, d, C64::new(-1.0, 0.0));
        z[(n, n)] = C64::new(1.0, 0.0);
        jumps.push(z * C64::new(rates.dephasing.sqrt(), 0.0));
    }
    for jmp in &jumps {
        let ldl = jmp.adjoint() * jmp;
        let conj = jmp.map(|z| z.conj());
        l += kron(&conj, jmp);
        l -= kron(&id, &ldl) * C64::new(0.5, 0.0);
        l -= kron(&ldl.transpose(), &id) * C64::new(0.5, 0.0);
    }
    l
}

/// `rho(t)` from the exponential of the vectorised Liouvillian.
pub fn liouvillian_evolve(h_block: &DMatrix<f64>, rates: LindbladRates, rho0: &DensityMatrix, t: f64) -> DMatrix<C64> {
    let d = rho0.matrix().nrows();
    let prop = expm(&(liouvillian(h_block, rates) * C64::new(t, 0.0)));
    let v0 = nalgebra::DVector::from_column_slice(rho0.matrix().as_slice());
    let v = prop * v0;
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// Embeds the subspace density matrix into the full `2^N` space (site 0 is
/// the most significant bit, `1` = excited) and traces out everything except
/// `keep`, returned in the same bit convention.
pub fn brute_force_reduce(rho: &DensityMatrix, keep: &[usize]) -> DMatrix<C64> {
    let n = rho.sites();
    let full_dim = 1usize << n;
    let index_of = |k: usize| if k == 0 { 0 } else { 1usize << (n - k) };
    let sub = rho.matrix();
    let mut full = DMatrix::<C64>::zeros(full_dim, full_dim);
    for a in 0..=n {
        for b in 0..=n {
            full[(index_of(a), index_of(b))] = sub[(a, b)];
        }
    }
    let bit = |x: usize, site: usize| (x >> (n - 1 - site)) & 1;
    let kdim = 1usize << keep.len();
    let project = |x: usize| keep.iter().fold(0usize, |acc, &s| (acc << 1) | bit(x, s));
    let rest_mask: usize = (0..n).filter(|s| !keep.contains(s)).fold(0usize, |acc, s| acc | (1 << (n - 1 - s)));
    let mut out = DMatrix::<C64>::zeros(kdim, kdim);
    for x in 0..full_dim {
        for y in 0..full_dim {
            if x & rest_mask == y & rest_mask {
                out[(project(x), project(y))] += full[(x, y)];
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}
