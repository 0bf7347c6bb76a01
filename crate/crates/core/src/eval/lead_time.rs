use serde::{Deserialize, Serialize};

/// One scored evaluation date. `day` is the trading-day index used for
/// lead-time arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub day: usize,
    pub date: String,
    pub score: f64,
    pub label: Option<bool>,
}

/// Inclusive range of trading days with crash label 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashWindow {
    pub start_day: usize,
    pub end_day: usize,
    pub start_date: String,
    pub end_date: String,
}

/// Maximal runs of label 1 over consecutive days. Unlabelled days and gaps
/// in the day index both end a run.
pub fn crash_windows(days: &[(usize, String, Option<bool>)]) -> Vec<CrashWindow> {
    let mut out: Vec<CrashWindow> = Vec::new();
    let mut prev_day: Option<usize> = None;
    let mut open = false;
    for (day, date, label) in days {
        let contiguous = prev_day.is_some_and(|p| p + 1 == *day);
        if *label == Some(true) {
            if open && contiguous {
                let w = out.last_mut().expect("open window");
                w.end_day = *day;
                w.end_date = date.clone();
            } else {
                out.push(CrashWindow {
                    start_day: *day,
                    end_day: *day,
                    start_date: date.clone(),
                    end_date: date.clone(),
                });
            }
            open = true;
        } else {
            open = false;
        }
        prev_day = Some(*day);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeadTimes {
    /// Trading days from each matched warning to the next onset.
    pub days: Vec<usize>,
    /// Warnings with no later onset (false-alarm mass).
    pub unmatched: usize,
    /// Warnings issued inside a window after its onset.
    pub in_window: usize,
}

/// Warnings are points with `score > gamma`.
pub fn lead_times(timeline: &[TimelinePoint], gamma: f64, windows: &[CrashWindow]) -> LeadTimes {
    let mut out = LeadTimes::default();
    for p in timeline.iter().filter(|p| p.score > gamma) {
        if windows.iter().any(|w| w.start_day < p.day && p.day <= w.end_day) {
            out.in_window += 1;
            continue;
        }
        match windows.iter().map(|w| w.start_day).filter(|&s| s >= p.day).min() {
            Some(onset) => out.days.push(onset - p.day),
            None => out.unmatched += 1,
        }
    }
    out
}
