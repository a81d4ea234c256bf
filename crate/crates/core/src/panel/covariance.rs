use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{check_full_rank, spd_inverse};

/// Cluster-robust (CR1) coefficient covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredCov {
    pub matrix: DMatrix<f64>,
    pub n_clusters: usize,
    /// `G/(G-1) · (n-1)/(n-k)`.
    pub adjustment: f64,
}

impl ClusteredCov {
    pub fn std_errors(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }

    /// Empty covariance for a model without slope coefficients.
    pub fn empty(n_clusters: usize) -> Self {
        ClusteredCov {
            matrix: DMatrix::zeros(0, 0),
            n_clusters,
            adjustment: 1.0,
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl Serialize for ClusteredCov {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ClusteredCov", 3)?;
        st.serialize_field("matrix", &self.rows())?;
        st.serialize_field("n_clusters", &self.n_clusters)?;
        st.serialize_field("adjustment", &self.adjustment)?;
        st.end()
    }
}

/// Sandwich `(X'X)^{-1} (Σ_c X_c' u_c u_c' X_c) (X'X)^{-1}` scaled by the CR1
/// factor `G/(G-1) · (n-1)/(n-k)`.
pub fn clustered_covariance(
    residuals: &DVector<f64>,
    regressors: &DMatrix<f64>,
    cluster_ids: &[usize],
    names: &[String],
) -> Result<ClusteredCov> {
    let n = residuals.len();
    let k = regressors.ncols();
    if regressors.nrows() != n || cluster_ids.len() != n {
        return Err(Error::Precondition("residuals, regressors and clusters are not conformable".into()));
    }
    let mut scores: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    for (r, &c) in cluster_ids.iter().enumerate() {
        let s = scores.entry(c).or_insert_with(|| DVector::zeros(k));
        for j in 0..k {
            s[j] += regressors[(r, j)] * residuals[r];
        }
    }
    let g = scores.len();
    if g < 2 {
        return Err(Error::Precondition(format!("clustered covariance needs at least 2 clusters, got {g}")));
    }
    if k == 0 {
        return Ok(ClusteredCov::empty(g));
    }
    check_full_rank(regressors, names)?;
    if n <= k {
        return Err(Error::Precondition(format!("{n} observations for {k} coefficients")));
    }

    let xtx = regressors.tr_mul(regressors);
    let bread = spd_inverse(&xtx);
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for s in scores.values() {
        meat.ger(1.0, s, s, 1.0);
    }
    let adjustment = (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64));
    let mut matrix = &bread * meat * &bread * adjustment;
    // exact symmetry
    let sym = (&matrix + matrix.transpose()) * 0.5;
    matrix.copy_from(&sym);
    Ok(ClusteredCov {
        matrix,
        n_clusters: g,
        adjustment,
    })
}
