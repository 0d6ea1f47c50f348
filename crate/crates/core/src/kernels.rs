//! Small dense kernels for the layer products.
//!
//! Every output element is accumulated in a fixed order that does not depend
//! on the matrix sizes or on which code path (vector tile or scalar edge)
//! computes it, so a single-point evaluation and a batched one agree bitwise.
//! On x86-64 the same code is also compiled with AVX2 enabled and selected at
//! run time; no FMA contraction is used, so both builds round identically.

/// `c ← a·b` (or `c += a·b` when `accumulate`), `a` is m×k, `b` is k×n.
///
/// `a` is read as `a[r·ars + i·acs]`, so a transposed weight matrix is just a
/// stride swap. `b` and `c` are row-major with leading dimensions `ldb`/`ldc`.
/// Each element is `Σ_i a·b` summed with `i` ascending from 0.
#[allow(clippy::too_many_arguments)]
pub(crate) fn matmul(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (ars, acs): (usize, usize),
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || ((m - 1) * ars + (k - 1) * acs < a.len() && (k - 1) * ldb + n <= b.len()));
    assert!((m - 1) * ldc + n <= c.len());
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: AVX2 availability was checked just above.
        unsafe { matmul_avx2(m, k, n, a, (ars, acs), b, ldb, c, ldc, accumulate) };
        return;
    }
    matmul_body(m, k, n, a, (ars, acs), b, ldb, c, ldc, accumulate)
}

/// `c += a·bᵀ` with `a` m×n and `b` p×n, both row-major; `c` is m×p.
///
/// Each element sums over `n` with four interleaved partial sums
/// (index mod 4), combined as `(s0 + s1) + (s2 + s3)` plus the tail in order.
#[allow(clippy::too_many_arguments)]
pub(crate) fn matmul_nt(
    m: usize,
    p: usize,
    n: usize,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
) {
    if m == 0 || p == 0 {
        return;
    }
    assert!(n == 0 || ((m - 1) * lda + n <= a.len() && (p - 1) * ldb + n <= b.len()));
    assert!((m - 1) * ldc + p <= c.len());
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: AVX2 availability was checked just above.
        unsafe { matmul_nt_avx2(m, p, n, a, lda, b, ldb, c, ldc) };
        return;
    }
    matmul_nt_body(m, p, n, a, lda, b, ldb, c, ldc)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
#[allow(clippy::too_many_arguments)]
unsafe fn matmul_avx2(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    sa: (usize, usize),
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
    accumulate: bool,
) {
    matmul_body(m, k, n, a, sa, b, ldb, c, ldc, accumulate)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
#[allow(clippy::too_many_arguments)]
unsafe fn matmul_nt_avx2(
    m: usize,
    p: usize,
    n: usize,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
) {
    matmul_nt_body(m, p, n, a, lda, b, ldb, c, ldc)
}

const MR: usize = 4;
const NR: usize = 8;
// Largest inner dimension packed on the stack; larger ones take the scalar path.
const PACK: usize = 64;

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn matmul_body(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    sa: (usize, usize),
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
    accumulate: bool,
) {
    let mut r0 = 0;
    while r0 < m {
        match m - r0 {
            1 => rows_tile::<1>(r0, k, n, a, sa, b, ldb, c, ldc, accumulate),
            2 => rows_tile::<2>(r0, k, n, a, sa, b, ldb, c, ldc, accumulate),
            3 => rows_tile::<3>(r0, k, n, a, sa, b, ldb, c, ldc, accumulate),
            _ => rows_tile::<MR>(r0, k, n, a, sa, b, ldb, c, ldc, accumulate),
        }
        r0 += MR.min(m - r0);
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn rows_tile<const R: usize>(
    r0: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (ars, acs): (usize, usize),
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
    accumulate: bool,
) {
    let store = |c: &mut [f64], idx: usize, v: f64| {
        if accumulate {
            c[idx] += v;
        } else {
            c[idx] = v;
        }
    };
    // pack this row tile of `a` once; it is reused by every column tile
    let mut packed = [[0.0f64; R]; PACK];
    let pack = k <= PACK;
    if pack {
        for (i, p) in packed.iter_mut().enumerate().take(k) {
            for r in 0..R {
                p[r] = a[(r0 + r) * ars + i * acs];
            }
        }
    }
    let mut c0 = 0;
    while pack && c0 + NR <= n {
        let mut acc = [[0.0f64; NR]; R];
        for (i, w) in packed.iter().enumerate().take(k) {
            // SAFETY: `matmul` asserted (k-1)·ldb + n <= b.len() and
            // c0 + NR <= n here.
            let brow = unsafe { &*(b.as_ptr().add(i * ldb + c0) as *const [f64; NR]) };
            for r in 0..R {
                for l in 0..NR {
                    acc[r][l] += w[r] * brow[l];
                }
            }
        }
        for r in 0..R {
            for l in 0..NR {
                store(c, (r0 + r) * ldc + c0 + l, acc[r][l]);
            }
        }
        c0 += NR;
    }
    for col in c0..n {
        for r in 0..R {
            let mut s = 0.0;
            for i in 0..k {
                s += a[(r0 + r) * ars + i * acs] * b[i * ldb + col];
            }
            store(c, (r0 + r) * ldc + col, s);
        }
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn matmul_nt_body(
    m: usize,
    p: usize,
    n: usize,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
) {
    let mut r0 = 0;
    while r0 < m {
        let tm = 4.min(m - r0);
        let mut q0 = 0;
        while q0 < p {
            match (tm, 2.min(p - q0)) {
                (4, 2) => nt_tile::<4, 2>(r0, q0, n, a, lda, b, ldb, c, ldc),
                (4, _) => nt_tile::<4, 1>(r0, q0, n, a, lda, b, ldb, c, ldc),
                (3, 2) => nt_tile::<3, 2>(r0, q0, n, a, lda, b, ldb, c, ldc),
                (3, _) => nt_tile::<3, 1>(r0, q0, n, a, lda, b, ldb, c, ldc),
                (2, 2) => nt_tile::<2, 2>(r0, q0, n, a, lda, b, ldb, c, ldc),
                (2, _) => nt_tile::<2, 1>(r0, q0, n, a, lda, b, ldb, c, ldc),
                (_, 2) => nt_tile::<1, 2>(r0, q0, n, a, lda, b, ldb, c, ldc),
                _ => nt_tile::<1, 1>(r0, q0, n, a, lda, b, ldb, c, ldc),
            }
            q0 += 2.min(p - q0);
        }
        r0 += tm;
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn nt_tile<const TM: usize, const TP: usize>(
    r0: usize,
    q0: usize,
    n: usize,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
    ldc: usize,
) {
    const L: usize = 4;
    let body = n / L * L;
    let mut acc = [[[0.0f64; L]; TP]; TM];
    let mut x = 0;
    while x < body {
        // SAFETY: `matmul_nt` asserted that rows r0+TM-1 of `a` and q0+TP-1
        // of `b` hold `n` elements, and x + L <= body <= n.
        let bv: [[f64; L]; TP] =
            std::array::from_fn(|q| unsafe { *(b.as_ptr().add((q0 + q) * ldb + x) as *const [f64; L]) });
        for r in 0..TM {
            let av = unsafe { &*(a.as_ptr().add((r0 + r) * lda + x) as *const [f64; L]) };
            for q in 0..TP {
                for l in 0..L {
                    acc[r][q][l] += av[l] * bv[q][l];
                }
            }
        }
        x += L;
    }
    for r in 0..TM {
        for q in 0..TP {
            let v = &acc[r][q];
            let mut s = (v[0] + v[1]) + (v[2] + v[3]);
            for t in body..n {
                s += a[(r0 + r) * lda + t] * b[(q0 + q) * ldb + t];
            }
            c[(r0 + r) * ldc + q0 + q] += s;
        }
    }
}
