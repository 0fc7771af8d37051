//! Small numerical helpers shared across modules.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// `max |M − M†|` over all entries.
pub(crate) fn hermiticity_drift(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

/// `max |M + M†|` over all entries.
pub(crate) fn antihermiticity_drift(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] + m[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Replace M by its Hermitian part (M + M†)/2.
pub(crate) fn symmetrize_hermitian(m: &mut Array2<C64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            let avg = (m[[i, j]] + m[[j, i]].conj()) / 2.0;
            m[[i, j]] = avg;
            m[[j, i]] = avg.conj();
        }
    }
}

/// Replace M by its anti-Hermitian part (M − M†)/2.
pub(crate) fn symmetrize_antihermitian(m: &mut Array2<C64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            let avg = (m[[i, j]] - m[[j, i]].conj()) / 2.0;
            m[[i, j]] = avg;
            m[[j, i]] = -avg.conj();
        }
    }
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
///
/// Works through the real-symmetric embedding `[[A, −B], [B, A]]` of
/// `M = A + iB`, which has the same spectrum with doubled multiplicity; this
/// avoids any dependence on a complex eigensolver backend.
pub(crate) fn hermitian_eigen_range(m: &Array2<C64>) -> (f64, f64) {
    let n = m.nrows();
    let mut embed = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[[i, j]];
            embed[(i, j)] = z.re;
            embed[(i + n, j + n)] = z.re;
            embed[(i, j + n)] = -z.im;
            embed[(i + n, j)] = z.im;
        }
    }
    let eig = embed.symmetric_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// `max |M|` over all entries.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_range_of_known_matrix() {
        // Pauli-like Hermitian matrix with eigenvalues ±√2.
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = C64::new(1.0, 0.0);
        m[[1, 1]] = C64::new(-1.0, 0.0);
        m[[0, 1]] = C64::new(0.0, -1.0);
        m[[1, 0]] = C64::new(0.0, 1.0);
        let (lo, hi) = hermitian_eigen_range(&m);
        assert_abs_diff_eq!(lo, -(2.0_f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn drift_measures() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = C64::new(1.0, 0.0);
        m[[1, 0]] = C64::new(1.0, 1e-3);
        assert_abs_diff_eq!(hermiticity_drift(&m), 1e-3, epsilon = 1e-15);
        symmetrize_hermitian(&mut m);
        assert_eq!(hermiticity_drift(&m), 0.0);
    }
}
