//! Eigen-decomposition of a dense, diagonalizable complex matrix via the
//! complex Schur form and back-substitution on the triangular factor.

use nalgebra::linalg::{Schur, SVD};

use crate::{CMat, CVec, Error, Result, C64};

pub(crate) struct EigenSystem {
    pub values: Vec<C64>,
    /// Right eigenvectors as columns.
    pub right: CMat,
    /// Left eigenvectors as rows, `left * right = 1`.
    pub left: CMat,
    pub condition: f64,
    /// Tolerance used for ties and for identifying zero eigenvalues.
    pub tol: f64,
}

/// Antilinear involution mapping an eigenvector of `λ` to one of `conj(λ)`.
pub(crate) type Partner<'a> = &'a dyn Fn(&CVec) -> CVec;

/// Decomposes `a`, ordering eigenvalues by decreasing real part, then
/// ascending `|Im|`, then positive imaginary part first, then solver order.
/// Real parts and `|Im|` within `tie_tol` count as equal; it defaults to
/// `1e-9·max|λ|`. When `partner` is given, conjugate eigenvalues are placed
/// next to each other and the second vector of each pair is rebuilt as the
/// partner of the first.
pub(crate) fn decompose(
    a: &CMat,
    tie_tol: Option<f64>,
    defect_tol: f64,
    partner: Option<Partner<'_>>,
) -> Result<EigenSystem> {
    let n = a.nrows();
    if n == 0 || a.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(EigenSystem {
            values: vec![C64::new(0.0, 0.0); n],
            right: CMat::identity(n, n),
            left: CMat::identity(n, n),
            condition: 1.0,
            tol: tie_tol.unwrap_or(0.0),
        });
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let raw: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let tie_tol = tie_tol.unwrap_or(1e-9 * raw.iter().map(|z| z.norm()).fold(0.0, f64::max));
    let smin = (f64::EPSILON * t.norm()).max(f64::MIN_POSITIVE);

    let mut raw_vecs = Vec::with_capacity(n);
    for k in 0..n {
        let mut y = CVec::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for i in j + 1..=k {
                s += t[(j, i)] * y[i];
            }
            let mut d = t[(j, j)] - raw[k];
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            y[j] = -s / d;
        }
        let v = &q * y;
        let nv = v.norm();
        raw_vecs.push(v / C64::new(nv, 0.0));
    }

    let order = sort_order(&raw, tie_tol, partner.is_some());
    let mut values: Vec<C64> = order.iter().map(|&i| raw[i]).collect();
    let mut cols: Vec<CVec> = order.iter().map(|&i| raw_vecs[i].clone()).collect();

    for v in values.iter_mut() {
        if v.im.abs() <= tie_tol {
            v.im = 0.0;
        }
    }
    if let Some(p) = partner {
        let mut k = 0;
        while k < n {
            if values[k].im > 0.0 && k + 1 < n {
                let mean = (values[k] + values[k + 1].conj()) * 0.5;
                values[k] = mean;
                values[k + 1] = mean.conj();
                cols[k + 1] = p(&cols[k]);
                k += 2;
            } else {
                if isolated(&values, k, tie_tol) {
                    let v = &cols[k];
                    let sym = v + p(v);
                    let h = if sym.norm() > 0.5 { sym } else { (v - p(v)) * C64::new(0.0, 1.0) };
                    let nh = h.norm();
                    cols[k] = h / C64::new(nh, 0.0);
                }
                k += 1;
            }
        }
    }

    let right = CMat::from_columns(&cols);
    let sv = SVD::new(right.clone(), false, false).singular_values;
    let condition = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
    if !(condition <= defect_tol) {
        return Err(Error::DefectiveLiouvillian(condition));
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or(Error::DefectiveLiouvillian(f64::INFINITY))?;
    Ok(EigenSystem { values, right, left, condition, tol: tie_tol })
}

fn isolated(values: &[C64], k: usize, tol: f64) -> bool {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let gap = (1e-6 * scale).max(tol);
    values.iter().enumerate().all(|(j, v)| j == k || (*v - values[k]).norm() > gap)
}

fn sort_order(vals: &[C64], tol: f64, pair: bool) -> Vec<usize> {
    let n = vals.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| vals[j].re.total_cmp(&vals[i].re).then(i.cmp(&j)));

    // clusters of (chained) equal real parts
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &idx {
        match clusters.last_mut() {
            Some(c) if (vals[*c.last().unwrap()].re - vals[i].re).abs() <= tol => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    let mut out = Vec::with_capacity(n);
    for mut c in clusters {
        c.sort_by(|&i, &j| vals[i].im.abs().total_cmp(&vals[j].im.abs()).then(i.cmp(&j)));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in &c {
            match groups.last_mut() {
                Some(g) if (vals[*g.last().unwrap()].im.abs() - vals[i].im.abs()) <= tol => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        for g in groups.iter_mut() {
            g.sort_by(|&i, &j| vals[j].im.total_cmp(&vals[i].im).then(i.cmp(&j)));
        }
        let c: Vec<usize> = groups.concat();
        if !pair {
            out.extend(c);
            continue;
        }
        let mut used = vec![false; c.len()];
        for a in 0..c.len() {
            if used[a] {
                continue;
            }
            used[a] = true;
            let i = c[a];
            if vals[i].im.abs() <= tol {
                out.push(i);
                continue;
            }
            let target = vals[i].conj();
            let best = (0..c.len())
                .filter(|&b| !used[b])
                .min_by(|&x, &y| {
                    (vals[c[x]] - target).norm().total_cmp(&(vals[c[y]] - target).norm()).then(x.cmp(&y))
                });
            match best {
                Some(b) => {
                    used[b] = true;
                    let j = c[b];
                    if vals[i].im > 0.0 {
                        out.extend([i, j]);
                    } else {
                        out.extend([j, i]);
                    }
                }
                None => out.push(i),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_sorted_by_real_part() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(-1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-0.5, 2.0),
            C64::new(-0.5, -2.0),
        ]));
        let e = decompose(&a, Some(1e-12), 1e8, None).unwrap();
        let re: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        assert_eq!(re, vec![0.0, -0.5, -0.5, -1.0]);
        assert!(e.values[1].im > 0.0);
        let id = &e.left * &e.right;
        assert!((id - CMat::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn reconstructs_non_normal_matrix() {
        let a = CMat::from_row_slice(3, 3, &[
            C64::new(1.0, 0.0), C64::new(2.0, 1.0), C64::new(0.0, 0.0),
            C64::new(0.0, 0.0), C64::new(-1.0, 0.5), C64::new(3.0, 0.0),
            C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::new(2.0, -1.0),
        ]);
        let e = decompose(&a, Some(1e-12), 1e8, None).unwrap();
        let d = CMat::from_diagonal(&CVec::from_vec(e.values.clone()));
        let rec = &e.right * d * &e.left;
        assert!((rec - a).norm() < 1e-12);
    }

    #[test]
    fn jordan_block_is_rejected() {
        let a = CMat::from_row_slice(2, 2, &[
            C64::new(-1.0, 0.0), C64::new(1.0, 0.0),
            C64::new(0.0, 0.0), C64::new(-1.0, 0.0),
        ]);
        assert!(matches!(decompose(&a, Some(1e-12), 1e8, None), Err(Error::DefectiveLiouvillian(_))));
    }
}
