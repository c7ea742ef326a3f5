//! Small dense linear algebra on fixed-size arrays.
//!
//! Matrices are row-major `[[T; N]; N]`. Everything here is for N ≤ 4, so
//! plain loops beat any blocking strategy.

use std::array::from_fn;

use crate::scalar::Real;

pub type Vector<T, const N: usize> = [T; N];
pub type Matrix<T, const N: usize> = [[T; N]; N];

pub type Vec3<T> = [T; 3];
pub type Vec4<T> = [T; 4];
pub type Mat3<T> = [[T; 3]; 3];
pub type Mat4<T> = [[T; 4]; 4];
/// Rank-3 array indexed `[i][j][k]`.
pub type Table4<T> = [[[T; 4]; 4]; 4];

pub fn zeros<T: Real, const N: usize>() -> Matrix<T, N> {
    [[T::zero(); N]; N]
}

pub fn identity<T: Real, const N: usize>() -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn diag<T: Real, const N: usize>(d: [T; N]) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| if i == j { d[i] } else { T::zero() }))
}

pub fn dot<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real, const N: usize>(a: &[T; N]) -> T {
    dot(a, a).sqrt()
}

pub fn mat_vec<T: Real, const N: usize>(m: &Matrix<T, N>, v: &[T; N]) -> [T; N] {
    from_fn(|i| dot(&m[i], v))
}

pub fn mat_mul<T: Real, const N: usize>(a: &Matrix<T, N>, b: &Matrix<T, N>) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| (0..N).map(|k| a[i][k] * b[k][j]).sum()))
}

/// `vᵀ m w`
pub fn bilinear<T: Real, const N: usize>(m: &Matrix<T, N>, v: &[T; N], w: &[T; N]) -> T {
    dot(v, &mat_vec(m, w))
}

pub fn quad_form<T: Real, const N: usize>(m: &Matrix<T, N>, v: &[T; N]) -> T {
    bilinear(m, v, v)
}

pub fn outer<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| a[i] * b[j]))
}

pub fn scale<T: Real, const N: usize>(m: &Matrix<T, N>, s: T) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| m[i][j] * s))
}

pub fn add<T: Real, const N: usize>(a: &Matrix<T, N>, b: &Matrix<T, N>) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| a[i][j] + b[i][j]))
}

pub fn sub<T: Real, const N: usize>(a: &Matrix<T, N>, b: &Matrix<T, N>) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| a[i][j] - b[i][j]))
}

pub fn transpose<T: Real, const N: usize>(m: &Matrix<T, N>) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| m[j][i]))
}

pub fn max_abs<T: Real, const N: usize>(m: &Matrix<T, N>) -> T {
    m.iter()
        .flatten()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

pub fn max_abs_vec<T: Real, const N: usize>(v: &[T; N]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Largest entrywise difference divided by the largest entry of `reference`.
pub fn relative_gap<T: Real, const N: usize>(value: &Matrix<T, N>, reference: &Matrix<T, N>) -> T {
    let floor = T::lit(crate::tolerances::GAP_FLOOR);
    max_abs(&sub(value, reference)) / max_abs(reference).max(floor)
}

/// Symmetrizes `m` as `(m + mᵀ)/2`.
pub fn symmetrize<T: Real, const N: usize>(m: &Matrix<T, N>) -> Matrix<T, N> {
    from_fn(|i| from_fn(|j| (m[i][j] + m[j][i]) * T::half()))
}

/// Lower Cholesky factor `L` with `L Lᵀ = m`.
///
/// On failure returns the 1-based order of the first leading principal
/// minor that is not positive.
pub fn cholesky<T: Real, const N: usize>(m: &Matrix<T, N>) -> Result<Matrix<T, N>, usize> {
    let mut l = zeros::<T, N>();
    for j in 0..N {
        let mut d = m[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > T::zero()) {
            return Err(j + 1);
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..N {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone, Copy)]
pub struct Lu<T, const N: usize> {
    lu: Matrix<T, N>,
    perm: [usize; N],
    sign: T,
}

impl<T: Real, const N: usize> Lu<T, N> {
    pub fn new(m: &Matrix<T, N>) -> Option<Self> {
        let mut lu = *m;
        let mut perm: [usize; N] = from_fn(|i| i);
        let mut sign = T::one();
        for k in 0..N {
            let mut p = k;
            let mut best = lu[k][k].abs();
            for (i, row) in lu.iter().enumerate().skip(k + 1) {
                if row[k].abs() > best {
                    best = row[k].abs();
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return None;
            }
            if p != k {
                lu.swap(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            for i in (k + 1)..N {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in (k + 1)..N {
                    let u = lu[k][j];
                    lu[i][j] -= f * u;
                }
            }
        }
        Some(Self { lu, perm, sign })
    }

    pub fn det(&self) -> T {
        (0..N).fold(self.sign, |acc, i| acc * self.lu[i][i])
    }

    pub fn solve(&self, b: &[T; N]) -> [T; N] {
        let mut x: [T; N] = from_fn(|i| b[self.perm[i]]);
        for i in 0..N {
            for j in 0..i {
                let v = x[j];
                x[i] -= self.lu[i][j] * v;
            }
        }
        for i in (0..N).rev() {
            for j in (i + 1)..N {
                let v = x[j];
                x[i] -= self.lu[i][j] * v;
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T, N> {
        let cols: [[T; N]; N] = from_fn(|j| {
            let e: [T; N] = from_fn(|i| if i == j { T::one() } else { T::zero() });
            self.solve(&e)
        });
        transpose(&cols)
    }
}

pub fn det<T: Real, const N: usize>(m: &Matrix<T, N>) -> T {
    Lu::new(m).map_or(T::zero(), |lu| lu.det())
}

pub fn inverse<T: Real, const N: usize>(m: &Matrix<T, N>) -> Option<Matrix<T, N>> {
    Lu::new(m).map(|lu| lu.inverse())
}

pub fn solve<T: Real, const N: usize>(m: &Matrix<T, N>, b: &[T; N]) -> Option<[T; N]> {
    Lu::new(m).map(|lu| lu.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reports_failing_minor() {
        let m: Mat3<f64> = [[1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(cholesky(&m), Err(2));
        let l = cholesky(&diag([4.0, 9.0, 1.0])).unwrap();
        assert_eq!(l[1][1], 3.0);
    }

    #[test]
    fn lu_inverse_and_det() {
        let m: Mat4<f64> = [
            [4.0, 1.0, 0.5, 0.0],
            [1.0, 3.0, 0.2, 0.1],
            [0.5, 0.2, 2.0, 0.3],
            [0.0, 0.1, 0.3, 1.0],
        ];
        let inv = inverse(&m).unwrap();
        let p = mat_mul(&m, &inv);
        assert!(relative_gap(&p, &identity()) < 1e-14);
        let d = det(&m);
        let l = cholesky(&m).unwrap();
        let dl: f64 = (0..4).map(|i| l[i][i]).product();
        assert!((d - dl * dl).abs() < 1e-12 * d);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m: Mat3<f64> = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]];
        assert!(inverse(&m).is_none());
        assert_eq!(det(&m), 0.0);
    }

    #[test]
    fn f32_path() {
        let m: Mat3<f32> = diag([2.0, 4.0, 8.0]);
        assert_eq!(det(&m), 64.0);
    }
}
