//! Principal component analysis of a small set of row vectors.
//!
//! The eigenproblem is solved on whichever is smaller, the `d × d` sample
//! covariance or the `n × n` Gram matrix of the centred rows, with a cyclic
//! Jacobi sweep. Directions are sign-normalized so the coordinate of largest
//! magnitude is positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    /// Unit principal directions, one per output dimension.
    pub directions: Vec<Vec<f64>>,
    /// Per-row coordinates along `directions`.
    pub projections: Vec<Vec<f64>>,
    /// Variance along each direction (sample covariance, `n − 1` denominator).
    pub variances: Vec<f64>,
    /// Each direction's share of the total variance.
    pub explained_variance: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and matching unit eigenvectors.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off.sqrt() <= 1e-15 * scale || scale == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Makes the largest-magnitude coordinate positive (first one on ties).
pub fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Removes the components along `basis` (modified Gram-Schmidt) and normalizes.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for b in basis {
        let d = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
    }
    normalize(v)
}

/// Unit vector orthogonal to `basis`: the standard axis with the largest
/// residual after projection.
fn complete(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for axis in 0..dim {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        let norm = orthogonalize(&mut e, basis);
        if best.as_ref().is_none_or(|(n, _)| norm > *n + 1e-12) {
            best = Some((norm, e));
        }
    }
    let mut v = best.expect("dim > 0").1;
    orthogonalize(&mut v, basis);
    v
}

/// Projects `rows` onto their top `out_dims` principal directions.
pub fn pca(rows: &[Vec<f64>], out_dims: usize) -> Result<Pca> {
    let n = rows.len();
    let dim = rows.first().map_or(0, Vec::len);
    if n < 2 || dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Shape(format!("PCA needs at least 2 rows of equal positive length, got {n}")));
    }
    if out_dims == 0 || out_dims > dim.min(n - 1) {
        return Err(Error::Domain(format!(
            "cannot project {n} items of dimension {dim} onto {out_dims} components (max {})",
            dim.min(n - 1)
        )));
    }
    let mean: Vec<f64> = (0..dim).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();
    let total: f64 = x.iter().flatten().map(|v| v * v).sum::<f64>() / (n - 1) as f64;
    if !(total > 0.0) {
        return Err(Error::Degenerate("all vectors are identical; PCA has rank 0".into()));
    }

    let (values, candidates): (Vec<f64>, Vec<Vec<f64>>) = if dim <= n {
        let cov: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| x.iter().map(|r| r[i] * r[j]).sum::<f64>() / (n - 1) as f64).collect())
            .collect();
        symmetric_eigen(&cov)
    } else {
        // Gram route: eigenvectors u of X Xᵀ map to directions Xᵀu.
        let gram: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dot(&x[i], &x[j])).collect()).collect();
        let (vals, us) = symmetric_eigen(&gram);
        let dirs = us.iter().map(|u| (0..dim).map(|k| (0..n).map(|i| u[i] * x[i][k]).sum()).collect()).collect();
        (vals.into_iter().map(|v| v / (n - 1) as f64).collect(), dirs)
    };

    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(out_dims);
    let mut variances = Vec::with_capacity(out_dims);
    for (value, mut d) in values.into_iter().zip(candidates).take(out_dims) {
        let null = value <= 1e-12 * total;
        if null || orthogonalize(&mut d, &directions) < 1e-12 {
            d = complete(&directions, dim);
        }
        orient(&mut d);
        variances.push(if null { 0.0 } else { value });
        directions.push(d);
    }
    let projections = x.iter().map(|r| directions.iter().map(|d| dot(r, d)).collect()).collect();
    let explained_variance = variances.iter().map(|v| (v / total).clamp(0.0, 1.0)).collect();
    Ok(Pca { directions, projections, variances, explained_variance })
}
