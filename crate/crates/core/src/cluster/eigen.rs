//! Symmetric eigensolvers used to find Fiedler vectors.
//!
//! The dense path reduces the matrix to tridiagonal form with Householder
//! reflections and diagonalizes it with the implicit QL algorithm (the
//! classic `tred2`/`tql2` pair). The sparse path runs deflated power
//! iteration on `σI - L`.

use crate::scalar::{dot, Scalar};

use super::graph::WeightedGraph;

/// Eigen-decomposition of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<T>>,
}

/// Decompose the symmetric matrix `a` (row-major, `n × n`). Only symmetry
/// is assumed; the input is not checked.
pub fn symmetric_eigen<T: Scalar>(a: &[Vec<T>]) -> SymmetricEigen<T> {
    let n = a.len();
    if n == 0 {
        return SymmetricEigen {
            values: vec![],
            vectors: vec![],
        };
    }
    let mut v: Vec<Vec<T>> = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    SymmetricEigen {
        values: order.iter().map(|&k| d[k]).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|r| v[r][k]).collect())
            .collect(),
    }
}

fn tred2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g = g + v[k][j] * d[k];
                    e[k] = e[k] + v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] = v[k][j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g = g + v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] = v[k][j] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

fn tql2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    let max_sweeps = 60 * n.max(1);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let hk = row[i + 1];
                        row[i + 1] = s * row[i] + c * hk;
                        row[i] = c * row[i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || !e[l].is_finite() || sweeps >= max_sweeps {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }
}

/// Dense unnormalized Laplacian `D - W`.
pub fn laplacian<T: Scalar>(g: &WeightedGraph<T>) -> Vec<Vec<T>> {
    let n = g.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for &(j, w) in g.neighbors(i) {
            l[i][j] = l[i][j] - w;
            l[i][i] = l[i][i] + w;
        }
    }
    l
}

/// Fiedler vector from the dense decomposition of the Laplacian.
pub fn fiedler_dense<T: Scalar>(g: &WeightedGraph<T>) -> Vec<T> {
    let eig = symmetric_eigen(&laplacian(g));
    eig.vectors
        .into_iter()
        .nth(1)
        .unwrap_or_else(|| vec![T::zero(); g.len()])
}

/// Fiedler vector by power iteration on `σI - L` with the constant vector
/// projected out, `σ = 2 · max weighted degree`.
pub fn fiedler_power<T: Scalar>(g: &WeightedGraph<T>, tol: T, max_iter: usize) -> Vec<T> {
    let n = g.len();
    if n < 2 {
        return vec![T::zero(); n];
    }
    let degrees: Vec<T> = (0..n).map(|i| g.degree(i)).collect();
    let sigma = T::lit(2.0) * degrees.iter().copied().fold(T::zero(), T::max);
    let nf = T::from_count(n);
    // Deterministic start that is not orthogonal to typical Fiedler vectors.
    let mut x: Vec<T> = (0..n)
        .map(|i| {
            let t = T::from_count(i) / nf;
            t - T::lit(0.5) + T::lit(0.01) * (T::from_count(i * 7919 % 101) / T::lit(101.0))
        })
        .collect();
    deflate_and_normalize(&mut x);
    let mut y = vec![T::zero(); n];
    for _ in 0..max_iter {
        for i in 0..n {
            let mut lx = degrees[i] * x[i];
            for &(j, w) in g.neighbors(i) {
                lx = lx - w * x[j];
            }
            y[i] = sigma * x[i] - lx;
        }
        deflate_and_normalize(&mut y);
        let diff: T = x
            .iter()
            .zip(&y)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        std::mem::swap(&mut x, &mut y);
        if diff < tol {
            break;
        }
    }
    x
}

fn deflate_and_normalize<T: Scalar>(x: &mut [T]) {
    let n = T::from_count(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    for v in x.iter_mut() {
        *v = *v - mean;
    }
    let nrm = dot(x, x).sqrt();
    if nrm > T::zero() {
        for v in x.iter_mut() {
            *v = *v / nrm;
        }
    }
}
