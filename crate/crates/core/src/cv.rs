//! Leakage-free fold plans over 1-based session positions.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rocv,
    Rwcv,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validate: Vec<usize>,
}

impl Fold {
    fn new(first: usize, last: usize, horizon: usize) -> Self {
        Self {
            train: (first..=last).collect(),
            validate: alloc::vec![last + horizon],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub scheme: Scheme,
    pub folds: Vec<Fold>,
    /// Initial training size (ROCV, forward) or window size (RWCV).
    pub size: usize,
    pub horizon: usize,
}

impl FoldPlan {
    pub fn validation_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.folds.iter().flat_map(|f| f.validate.iter().copied())
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    Ok(())
}

/// Rolling origin: fold `v` trains on `1..=initial_size+v-1`.
pub fn make_rocv(t: usize, initial_size: usize, horizon: usize) -> Result<FoldPlan> {
    check_horizon(horizon)?;
    if initial_size < 1 || t < initial_size + horizon {
        return Err(Error::SeriesTooShort {
            length: t,
            required: initial_size.max(1) + horizon,
        });
    }
    let folds = (initial_size..=t - horizon).map(|end| Fold::new(1, end, horizon)).collect();
    Ok(FoldPlan {
        scheme: Scheme::Rocv,
        folds,
        size: initial_size,
        horizon,
    })
}

/// Rolling window: every training set holds exactly `window_size` positions.
pub fn make_rwcv(t: usize, window_size: usize, horizon: usize) -> Result<FoldPlan> {
    check_horizon(horizon)?;
    if window_size < 1 || t < window_size + horizon {
        return Err(Error::SeriesTooShort {
            length: t,
            required: window_size.max(1) + horizon,
        });
    }
    let folds = (window_size..=t - horizon)
        .map(|end| Fold::new(end + 1 - window_size, end, horizon))
        .collect();
    Ok(FoldPlan {
        scheme: Scheme::Rwcv,
        folds,
        size: window_size,
        horizon,
    })
}

/// Rolling window preceded by expanding warm-up folds: validation starts at
/// `initial_size + 1` like [`make_rocv`], and training sets grow until they
/// reach `window_size`, after which the folds coincide with [`make_rwcv`].
pub fn make_rwcv_warm(t: usize, window_size: usize, initial_size: usize) -> Result<FoldPlan> {
    if window_size < 1 {
        return Err(Error::InvalidParameter("window size must be at least 1".into()));
    }
    let start = initial_size.min(window_size);
    if start < 1 || t <= start {
        return Err(Error::SeriesTooShort {
            length: t,
            required: start.max(1) + 1,
        });
    }
    let folds = (start..t)
        .map(|end| Fold::new(end.saturating_sub(window_size) + 1, end, 1))
        .collect();
    Ok(FoldPlan {
        scheme: Scheme::Rwcv,
        folds,
        size: window_size,
        horizon: 1,
    })
}

/// Outer forward validation: predict every position from `first_prediction`
/// to `t`, training on all earlier positions.
pub fn make_forward_plan(t: usize, first_prediction: usize) -> Result<FoldPlan> {
    if first_prediction < 2 {
        return Err(Error::InvalidParameter(
            "first prediction must leave at least one training session".into(),
        ));
    }
    if t < first_prediction {
        return Err(Error::SeriesTooShort {
            length: t,
            required: first_prediction,
        });
    }
    let folds = (first_prediction - 1..t).map(|end| Fold::new(1, end, 1)).collect();
    Ok(FoldPlan {
        scheme: Scheme::Forward,
        folds,
        size: first_prediction - 1,
        horizon: 1,
    })
}
