//! Cross-validation fold construction shared by the PLS and elastic-net
//! analyses.

use crate::error::{Error, Result};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// LOO is deterministic; k-fold shuffles with the given seed and deals
/// class-stratified when class indices are supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvScheme {
    Loo,
    KFold { k: usize, seed: u64 },
}

impl CvScheme {
    /// Parse `loo` or `kfold:K`; the seed attaches afterwards.
    pub fn parse(text: &str, seed: u64) -> Result<CvScheme> {
        let t = text.trim().to_ascii_lowercase();
        if t == "loo" {
            return Ok(CvScheme::Loo);
        }
        if let Some(k_text) = t.strip_prefix("kfold:") {
            let k: usize = k_text.parse().map_err(|_| {
                Error::InvalidArgument(format!("bad fold count in cv spec {text:?}"))
            })?;
            return Ok(CvScheme::KFold { k, seed });
        }
        Err(Error::InvalidArgument(format!(
            "cv scheme {text:?} is not `loo` or `kfold:K`"
        )))
    }

    /// Disjoint test folds covering 0..n. `classes[i]` (when given) is the
    /// class index of sample i, used for stratification.
    pub fn folds(&self, n: usize, classes: Option<&[usize]>) -> Result<Vec<Vec<usize>>> {
        match *self {
            CvScheme::Loo => Ok((0..n).map(|i| vec![i]).collect()),
            CvScheme::KFold { k, seed } => {
                if k < 2 || k > n {
                    return Err(Error::InvalidArgument(format!(
                        "k-fold needs 2 <= k <= {n}, got {k}"
                    )));
                }
                let mut rng = Rng::seed_from_u64(seed);
                let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
                match classes {
                    Some(class_idx) => {
                        let n_classes = class_idx.iter().copied().max().unwrap_or(0) + 1;
                        let mut slot = 0usize;
                        for class in 0..n_classes {
                            let mut members: Vec<usize> =
                                (0..n).filter(|&i| class_idx[i] == class).collect();
                            rng.shuffle(&mut members);
                            for m in members {
                                folds[slot % k].push(m);
                                slot += 1;
                            }
                        }
                    }
                    None => {
                        let mut order: Vec<usize> = (0..n).collect();
                        rng.shuffle(&mut order);
                        for (slot, m) in order.into_iter().enumerate() {
                            folds[slot % k].push(m);
                        }
                    }
                }
                folds.retain(|f| !f.is_empty());
                for f in folds.iter_mut() {
                    f.sort_unstable();
                }
                Ok(folds)
            }
        }
    }
}
