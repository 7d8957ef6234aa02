//! Two-component PCA for plotting embedding spaces.
//!
//! The covariance matrix is small (embedding dim squared), so the top two
//! eigenpairs come from power iteration with deflation.

use indexmap::IndexMap;

use crate::data::{Preference, PreferenceSet};
use crate::tsv::fmt_real;
use crate::{Error, Result};

pub const PCA_TOLERANCE: f64 = 1e-10;
pub const PCA_MAX_ITERATIONS: usize = 10_000;

/// Coordinates smaller than this do not count as "nonzero" for the sign rule.
const SIGN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
    /// Covariance eigenvalues of the two components, descending.
    pub explained_variance: [f64; 2],
    /// Sum of all covariance eigenvalues (the trace).
    pub total_variance: f64,
    /// Set when the data spans fewer than two directions.
    pub rank_deficient: bool,
    /// Set when power iteration hit the iteration cap.
    pub not_converged: bool,
}

type Sym = Vec<Vec<f64>>;

fn mat_vec(a: &Sym, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        let c = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
    }
}

/// Flips `v` so its first coordinate above [`SIGN_EPS`] in magnitude is positive.
fn fix_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > SIGN_EPS) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Dominant eigenpair of a symmetric PSD matrix by power iteration.
///
/// Stops once both the step size and the geometric-tail estimate of the
/// remaining error (`step·ρ/(1−ρ)` with `ρ` the observed contraction) fall
/// below `tol`. Returns `(λ, v, converged)`.
pub fn power_iteration(
    a: &Sym,
    against: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> (f64, Vec<f64>, bool) {
    let d = a.len();
    // Start from the largest column: never orthogonal to the top eigenvector
    // unless the matrix vanishes on it.
    let mut v = (0..d)
        .map(|j| a.iter().map(|row| row[j]).collect::<Vec<f64>>())
        .max_by(|x, y| norm(x).total_cmp(&norm(y)))
        .unwrap_or_default();
    orthogonalize(&mut v, against);
    let n0 = norm(&v);
    if n0 == 0.0 {
        return (0.0, v, true);
    }
    v.iter_mut().for_each(|x| *x /= n0);

    let mut prev_step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut w = mat_vec(a, &v);
        orthogonalize(&mut w, against);
        let nw = norm(&w);
        if nw == 0.0 {
            converged = true;
            break;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        let step = w
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        v = w;
        let rho = step / prev_step;
        let tail = if rho < 1.0 {
            step * rho / (1.0 - rho)
        } else {
            f64::INFINITY
        };
        prev_step = step;
        if step < tol && tail < tol {
            converged = true;
            break;
        }
    }
    let lambda = dot(&v, &mat_vec(a, &v));
    (lambda, v, converged)
}

/// Unit vector orthogonal to `u`, taken from the standard basis vector with
/// the largest residual.
fn orthogonal_complement(u: &[Vec<f64>], d: usize) -> Vec<f64> {
    (0..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            orthogonalize(&mut e, u);
            orthogonalize(&mut e, u);
            e
        })
        .max_by(|x, y| norm(x).total_cmp(&norm(y)))
        .map(|mut e| {
            let n = norm(&e);
            e.iter_mut().for_each(|x| *x /= n);
            e
        })
        .expect("d >= 2")
}

/// Sample covariance (divisor `n − 1`) and column means.
pub fn covariance(points: &[&[f64]]) -> (Vec<f64>, Sym) {
    let n = points.len();
    let d = points[0].len();
    let mut mean = vec![0.0; d];
    for p in points {
        mean.iter_mut().zip(*p).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    for p in points {
        let c: Vec<f64> = p.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    (mean, cov)
}

pub fn fit_pca2(points: &[&[f64]]) -> Result<Projection2D> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "PCA needs at least 3 points, got {}",
            points.len()
        )));
    }
    let d = points[0].len();
    if d < 2 {
        return Err(Error::InvalidInput(format!("PCA needs dim >= 2, got {d}")));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::shape("PCA point", d, p.len()));
    }
    let (mean, cov) = covariance(points);
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let scale = cov.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut rank_deficient = false;
    let mut not_converged = false;
    let (l1, mut v1) = if scale == 0.0 {
        rank_deficient = true;
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        (0.0, e)
    } else {
        let (l, v, ok) = power_iteration(&cov, &[], PCA_TOLERANCE, PCA_MAX_ITERATIONS);
        not_converged |= !ok;
        (l, v)
    };
    fix_sign(&mut v1);

    let mut deflated = cov.clone();
    for i in 0..d {
        for j in 0..d {
            deflated[i][j] -= l1 * v1[i] * v1[j];
        }
    }
    let residual = deflated
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let (l2, mut v2) = if scale == 0.0 || residual <= 1e-12 * scale {
        rank_deficient = true;
        (0.0, orthogonal_complement(std::slice::from_ref(&v1), d))
    } else {
        let (l, v, ok) = power_iteration(
            &deflated,
            std::slice::from_ref(&v1),
            PCA_TOLERANCE,
            PCA_MAX_ITERATIONS,
        );
        not_converged |= !ok;
        (l.max(0.0), v)
    };
    fix_sign(&mut v2);

    Ok(Projection2D {
        mean,
        components: [v1, v2],
        explained_variance: [l1.max(0.0), l2],
        total_variance: trace,
        rank_deficient,
        not_converged,
    })
}

impl Projection2D {
    pub fn project_point(&self, e: &[f64]) -> Result<(f64, f64)> {
        if e.len() != self.mean.len() {
            return Err(Error::shape("projection input", self.mean.len(), e.len()));
        }
        let c: Vec<f64> = e.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok((dot(&self.components[0], &c), dot(&self.components[1], &c)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub song_id: String,
    pub x: f64,
    pub y: f64,
    pub preference: Preference,
}

pub fn project(
    p: &Projection2D,
    embeddings: &IndexMap<String, Vec<f64>>,
    prefs: &PreferenceSet,
) -> Result<Vec<ProjectedPoint>> {
    embeddings
        .iter()
        .map(|(id, e)| {
            let (x, y) = p.project_point(e)?;
            Ok(ProjectedPoint {
                song_id: id.clone(),
                x,
                y,
                preference: prefs.label(id)?,
            })
        })
        .collect()
}

/// Fits on all embeddings and projects them.
pub fn fit_and_project(
    embeddings: &IndexMap<String, Vec<f64>>,
    prefs: &PreferenceSet,
) -> Result<(Projection2D, Vec<ProjectedPoint>)> {
    let points: Vec<&[f64]> = embeddings.values().map(Vec::as_slice).collect();
    let p = fit_pca2(&points)?;
    let rows = project(&p, embeddings, prefs)?;
    Ok((p, rows))
}

/// Plot data: `song_id<TAB>x<TAB>y<TAB>preference`.
pub fn plot_tsv(rows: &[ProjectedPoint]) -> String {
    let mut out = String::from("song_id\tx\ty\tpreference\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.song_id,
            fmt_real(r.x),
            fmt_real(r.y),
            r.preference
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_cloud() {
        let pts = [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.1], [0.0, -0.1]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let p = fit_pca2(&refs).unwrap();
        assert!((p.components[0][0] - 1.0).abs() < 1e-12 && p.components[0][1].abs() < 1e-12);
        assert!((p.components[1][1] - 1.0).abs() < 1e-12);
        assert!(p.explained_variance[0] > p.explained_variance[1]);
        assert!(!p.rank_deficient);
    }

    #[test]
    fn identical_points_are_flagged() {
        let pts = [[2.0, 3.0, 1.0]; 4];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let p = fit_pca2(&refs).unwrap();
        assert!(p.rank_deficient);
        assert_eq!(p.explained_variance, [0.0, 0.0]);
        assert!(dot(&p.components[0], &p.components[1]).abs() < 1e-12);
        assert!((norm(&p.components[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_flag_second_component() {
        let pts = [
            [0.0, 0.0, 0.0],
            [1.0, 2.0, 2.0],
            [2.0, 4.0, 4.0],
            [-1.0, -2.0, -2.0],
        ];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let p = fit_pca2(&refs).unwrap();
        assert!(p.rank_deficient);
        assert!(p.explained_variance[1].abs() < 1e-10);
        assert!(dot(&p.components[0], &p.components[1]).abs() < 1e-10);
    }

    #[test]
    fn rejects_too_few_points() {
        let pts = [[0.0, 1.0], [1.0, 0.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert!(fit_pca2(&refs).is_err());
        let pts = [[0.0], [1.0], [2.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert!(fit_pca2(&refs).is_err());
    }
}
