use serde::Serialize;

use super::gfe::GfeFit;
use crate::error::{Error, Result};

/// Co-membership counts between the assignments of two fits:
/// `counts[a][b]` units sit in group `a` of the smaller fit and group `b` of
/// the larger one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowTable {
    pub from_groups: usize,
    pub to_groups: usize,
    pub counts: Vec<Vec<usize>>,
}

impl FlowTable {
    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.to_groups)
            .map(|b| self.counts.iter().map(|r| r[b]).sum())
            .collect()
    }

    pub fn total(&self) -> usize {
        self.row_sums().iter().sum()
    }
}

pub fn cross_tab(from: &[usize], from_groups: usize, to: &[usize], to_groups: usize) -> FlowTable {
    let mut counts = vec![vec![0; to_groups]; from_groups];
    for (&a, &b) in from.iter().zip(to) {
        counts[a][b] += 1;
    }
    FlowTable {
        from_groups,
        to_groups,
        counts,
    }
}

/// Cross-tabulate each adjacent pair of fits (ordered by group count).
pub fn group_flow(fits: &[GfeFit]) -> Result<Vec<FlowTable>> {
    fits.windows(2)
        .map(|w| {
            if w[0].unit_ids != w[1].unit_ids {
                return Err(Error::Precondition("fits are on different unit sets".into()));
            }
            Ok(cross_tab(&w[0].assignment, w[0].groups, &w[1].assignment, w[1].groups))
        })
        .collect()
}
