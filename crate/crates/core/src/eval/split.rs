use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Chronological train/test partition over date indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Range<usize>,
    pub test: Range<usize>,
    /// Index of the first test date; train stops `horizon` dates before it.
    pub split: usize,
    pub horizon: usize,
}

/// First `⌊ratio·T⌋` dates train, the rest test. The last `horizon` train
/// dates are dropped because their labels look into the test period.
pub fn chronological_split(n_dates: usize, ratio: f64, horizon: usize) -> Result<SplitPlan> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    if n_dates < 10 {
        return Err(Error::Data(format!("{n_dates} dates are too few to split (need at least 10)")));
    }
    // the epsilon keeps exact products such as 0.8·10 from rounding down
    let split = ((ratio * n_dates as f64) + 1e-9).floor() as usize;
    if split >= n_dates {
        return Err(Error::Data("split leaves no test dates".into()));
    }
    if split <= horizon {
        return Err(Error::Data(format!(
            "no training dates remain after the {horizon}-date embargo (split at {split} of {n_dates})"
        )));
    }
    Ok(SplitPlan {
        train: 0..split - horizon,
        test: split..n_dates,
        split,
        horizon,
    })
}

impl SplitPlan {
    /// Re-indexes a calendar-level plan onto a panel that starts `offset`
    /// dates later (e.g. after the feature warm-up).
    pub fn shifted(&self, offset: usize) -> Result<SplitPlan> {
        if self.train.end <= offset {
            return Err(Error::Data(format!(
                "the {offset}-date warm-up consumes the whole training period"
            )));
        }
        Ok(SplitPlan {
            train: self.train.start.saturating_sub(offset)..self.train.end - offset,
            test: self.test.start - offset..self.test.end - offset,
            split: self.split - offset,
            horizon: self.horizon,
        })
    }
}
