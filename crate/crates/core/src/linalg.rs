//! Small fixed-size dense linear algebra for 4×4 (and 8×8) symmetric matrices.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Mat4<T> = [[T; 4]; 4];

pub fn identity<T: Real, const N: usize>() -> [[T; N]; N] {
    let mut m = [[T::zero(); N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat_mul<T: Real, const N: usize>(a: &[[T; N]; N], b: &[[T; N]; N]) -> [[T; N]; N] {
    let mut out = [[T::zero(); N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn transpose<T: Real, const N: usize>(a: &[[T; N]; N]) -> [[T; N]; N] {
    let mut out = *a;
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

pub fn mat_vec<T: Real, const N: usize>(a: &[[T; N]; N], v: &[T; N]) -> [T; N] {
    let mut out = [T::zero(); N];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row.iter().zip(v).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    }
    out
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of the second array.
pub fn symmetric_eigen<T: Real, const N: usize>(a: &[[T; N]; N]) -> ([T; N], [[T; N]; N]) {
    let mut m = *a;
    let mut v: [[T; N]; N] = identity();
    let two = T::lit(2.0);

    for _sweep in 0..64 {
        let mut off = T::zero();
        let mut scale = T::zero();
        for i in 0..N {
            scale += m[i][i] * m[i][i];
            for j in (i + 1)..N {
                off += m[i][j] * m[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * scale.max(T::min_positive_value()) {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = std::array::from_fn(|k| m[order[k]][order[k]]);
    let mut vectors = [[T::zero(); N]; N];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..N {
            vectors[row][col] = v[row][src];
        }
    }
    (values, vectors)
}

/// Symmetric square root `R` with `R·R = a` of a positive semidefinite matrix.
///
/// Eigenvalues down to `-tol·max|λ|` are clamped to zero; anything more
/// negative is a factorization error.
pub fn sqrt_psd<T: Real, const N: usize>(a: &[[T; N]; N]) -> Result<[[T; N]; N]> {
    let (values, vectors) = symmetric_eigen(a);
    let largest = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::lit(1e3) * T::epsilon() * largest.max(T::one());
    if values[0] < -tol {
        return Err(Error::Factorization(format!(
            "matrix is not positive semidefinite (min eigenvalue {:e})",
            values[0].as_f64()
        )));
    }
    let mut out = [[T::zero(); N]; N];
    for k in 0..N {
        let root = values[k].max(T::zero()).sqrt();
        for i in 0..N {
            let vik = vectors[i][k] * root;
            for j in i..N {
                out[i][j] += vik * vectors[j][k];
            }
        }
    }
    for i in 0..N {
        for j in 0..i {
            out[i][j] = out[j][i];
        }
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real, const N: usize>(a: &[[T; N]; N]) -> Result<[[T; N]; N]> {
    let mut l = [[T::zero(); N]; N];
    for i in 0..N {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= T::zero() {
                    return Err(Error::Factorization(format!(
                        "matrix is not positive definite (pivot {i} = {:e})",
                        sum.as_f64()
                    )));
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub fn lower_inverse<T: Real, const N: usize>(l: &[[T; N]; N]) -> [[T; N]; N] {
    let mut inv = [[T::zero(); N]; N];
    for col in 0..N {
        for i in col..N {
            let mut sum = if i == col { T::one() } else { T::zero() };
            for k in col..i {
                sum -= l[i][k] * inv[k][col];
            }
            inv[i][col] = sum / l[i][i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_spd() -> Mat4<f64> {
        [
            [4.0, 1.0, 0.5, 0.0],
            [1.0, 3.0, 0.2, -0.4],
            [0.5, 0.2, 2.0, 0.3],
            [0.0, -0.4, 0.3, 1.5],
        ]
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = sample_spd();
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            d[i][i] = vals[i];
        }
        let back = mat_mul(&mat_mul(&vecs, &d), &transpose(&vecs));
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[i][j] - a[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let a = sample_spd();
        let r = sqrt_psd(&a).unwrap();
        let back = mat_mul(&r, &r);
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[i][j] - a[i][j]).abs() < 1e-12);
                assert_eq!(r[i][j], r[j][i]);
            }
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let mut a = sample_spd();
        a[3][3] = -1.0;
        assert!(matches!(sqrt_psd(&a), Err(Error::Factorization(_))));
    }

    #[test]
    fn cholesky_and_inverse() {
        let a = sample_spd();
        let l = cholesky(&a).unwrap();
        let back = mat_mul(&l, &transpose(&l));
        let prod = mat_mul(&l, &lower_inverse(&l));
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[i][j] - a[i][j]).abs() < 1e-12);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a: Mat4<f32> = [
            [2.0, 0.5, 0.0, 0.0],
            [0.5, 2.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 3.0],
        ];
        let (vals, _) = symmetric_eigen(&a);
        let want = [1.0f32, 1.5, 2.5, 3.0];
        for (v, w) in vals.iter().zip(want) {
            assert!((v - w).abs() < 1e-5);
        }
    }
}
