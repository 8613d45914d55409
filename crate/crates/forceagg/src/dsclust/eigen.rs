//! Eigenvalues of small symmetric matrices by cyclic Jacobi rotations.
//!
//! Only the spectrum is needed (for the critical-temperature estimate), so
//! eigenvectors are not accumulated.

use crate::float::Float;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigenvalues of the symmetric n-by-n matrix `m` (row-major), unsorted.
pub(crate) fn symmetric_eigenvalues<F: Float>(m: &[F], n: usize) -> Option<Vec<F>> {
    debug_assert_eq!(m.len(), n * n);
    if n == 0 {
        return Some(Vec::new());
    }
    if n == 1 {
        return Some(vec![m[0]]);
    }
    let mut a = m.to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    let frobenius: F = a.iter().map(|&x| x * x).sum::<F>().sqrt();
    let tol = F::real(1e-12) * (frobenius + F::one());

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[idx(i, j)] * a[idx(i, j)];
            }
        }
        if off.sqrt() <= tol {
            return Some((0..n).map(|i| a[idx(i, i)]).collect());
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq.abs() <= tol / F::count(n * n) {
                    continue;
                }
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (F::real(2.0) * apq);
                let t = if theta >= F::zero() {
                    F::one() / (theta + (theta * theta + F::one()).sqrt())
                } else {
                    -F::one() / (-theta + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_known_spectrum() {
        let m = vec![-0.5f64, 12.0, 12.0, -0.5];
        let mut eig = symmetric_eigenvalues(&m, 2).unwrap();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[0] - (-12.5)).abs() < 1e-10);
        assert!((eig[1] - 11.5).abs() < 1e-10);
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let m = vec![3.0f64, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 7.5];
        let mut eig = symmetric_eigenvalues(&m, 3).unwrap();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(eig, vec![-1.0, 3.0, 7.5]);
    }

    #[test]
    fn trace_and_frobenius_preserved_on_random_symmetric() {
        let rng = crate::rng::CounterRng::new(77);
        for trial in 0..20u64 {
            let n = 2 + (rng.uniform(&[trial, 999]) * 9.0) as usize;
            let mut m = vec![0.0f64; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = rng.uniform(&[trial, i as u64, j as u64]) * 4.0 - 2.0;
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            let eig = symmetric_eigenvalues(&m, n).unwrap();
            let trace: f64 = (0..n).map(|i| m[i * n + i]).sum();
            let frob2: f64 = m.iter().map(|x| x * x).sum();
            let eig_sum: f64 = eig.iter().sum();
            let eig_sq: f64 = eig.iter().map(|x| x * x).sum();
            assert!((trace - eig_sum).abs() < 1e-9 * (1.0 + trace.abs()));
            assert!((frob2 - eig_sq).abs() < 1e-9 * (1.0 + frob2));
        }
    }
}
