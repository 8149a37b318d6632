//! Eigenvalues of small hermitian matrices.

use super::QOperator;

/// Eigenvalues of a hermitian operator, unsorted.
///
/// `H = A + iB` is embedded as the real symmetric `[[A, -B], [B, A]]`,
/// whose spectrum is that of `H` with every eigenvalue doubled; cyclic
/// Jacobi rotations diagonalise the embedding and every second sorted
/// eigenvalue is kept. Only the hermitian part of the input is used.
pub fn hermitian_eigenvalues(op: &QOperator) -> Vec<f64> {
    let n = op.dim();
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for r in 0..n {
        for c in 0..n {
            let z = (op.get(r, c) + op.get(c, r).conj()) * 0.5;
            a[r * m + c] = z.re;
            a[(r + n) * m + c + n] = z.re;
            a[r * m + c + n] = -z.im;
            a[(r + n) * m + c] = z.im;
        }
    }
    jacobi_eigenvalues(&mut a, m);
    let mut ev: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

fn jacobi_eigenvalues(a: &mut [f64], n: usize) {
    let scale: f64 = a
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c] * a[r * n + c])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlin::{OperatorKind, C64};

    #[test]
    fn diagonal_and_pauli_y() {
        let d = QOperator::new(
            2,
            vec![
                C64::new(0.3, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.7, 0.0),
            ],
            OperatorKind::Hermitian,
        )
        .unwrap();
        let ev = hermitian_eigenvalues(&d);
        assert!((ev[0] - 0.3).abs() < 1e-14 && (ev[1] - 0.7).abs() < 1e-14);
        let ev = hermitian_eigenvalues(&crate::qlin::pauli_y());
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_offdiagonal() {
        // [[2, 1-i], [1+i, 3]] has eigenvalues (5 ± √9)/2 = 1, 4
        let h = QOperator::new(
            2,
            vec![
                C64::new(2.0, 0.0),
                C64::new(1.0, -1.0),
                C64::new(1.0, 1.0),
                C64::new(3.0, 0.0),
            ],
            OperatorKind::Hermitian,
        )
        .unwrap();
        let ev = hermitian_eigenvalues(&h);
        assert!(
            (ev[0] - 1.0).abs() < 1e-13 && (ev[1] - 4.0).abs() < 1e-13,
            "{ev:?}"
        );
    }

    #[test]
    fn pure_state_density_spectrum() {
        let s = crate::qlin::ghz_state();
        let ev = hermitian_eigenvalues(&s.density());
        assert_eq!(ev.len(), 8);
        assert!((ev[7] - 1.0).abs() < 1e-13);
        assert!(ev[..7].iter().all(|v| v.abs() < 1e-13));
    }
}
