//! Small dense linear-algebra helpers shared by every layer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entry-wise difference.
pub fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |M - M^dagger|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |U^dagger U - 1|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Spectral decomposition of a Hermitian matrix: ascending eigenvalues and
/// the matching orthonormal eigenvectors as columns.
pub fn eigh(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    (values, vectors)
}

/// `f(H)` for Hermitian `H` by spectral decomposition.
pub fn hermitian_function(h: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let (values, vectors) = eigh(h);
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        let fk = f(lam);
        for z in scaled.column_mut(k).iter_mut() {
            *z *= fk;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(coef * H)` for Hermitian `H`; with `coef = -i t` this is a unitary.
pub fn exp_hermitian(h: &DMatrix<C64>, coef: C64) -> DMatrix<C64> {
    hermitian_function(h, |lam| (coef * lam).exp())
}

/// `min_theta max_ij |A - e^{i theta} B|`, the global-phase-insensitive distance.
///
/// The Frobenius-optimal phase `arg tr(B^dagger A)` seeds a golden-section
/// refinement of the max-norm objective.
pub fn phase_aligned_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in phase_aligned_distance");
    let overlap: C64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let seed = if overlap.norm() > 0.0 { overlap.arg() } else { 0.0 };
    let objective = |theta: f64| {
        let ph = C64::from_polar(1.0, theta);
        a.iter()
            .zip(b.iter())
            .fold(0.0_f64, |acc, (x, y)| acc.max((x - ph * y).norm()))
    };
    let seeded = objective(seed);
    let refined = golden_min(&objective, seed - 0.05, seed + 0.05, 1e-12);
    seeded.min(refined.1)
}

/// Phase-aligned distance between two state vectors.
pub fn phase_aligned_vector_distance(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let ma = DMatrix::from_column_slice(a.len(), 1, a.as_slice());
    let mb = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    phase_aligned_distance(&ma, &mb)
}

/// Golden-section minimisation of a unimodal scalar function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_min(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Kronecker product with the left factor as the slow index.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn identity(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

/// Round to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - magnitude);
    (x * scale).round() / scale
}
