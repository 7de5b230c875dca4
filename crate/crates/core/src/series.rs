//! Contiguous year-indexed series of `f64` values, the common currency for
//! net-addition histories, driver stocks and demand schedules.

use serde::{Deserialize, Serialize};

/// A contiguous series of annual values starting at `start_year`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSeries {
    start_year: i32,
    values: Vec<f64>,
}

impl YearSeries {
    /// Creates a series covering `start_year..start_year + values.len()`.
    pub fn new(start_year: i32, values: Vec<f64>) -> YearSeries {
        YearSeries { start_year, values }
    }

    /// Builds a series from (year, value) pairs, filling gaps with 0.
    /// Returns `Err` on duplicate years or an empty input.
    pub fn from_pairs(mut pairs: Vec<(i32, f64)>) -> Result<YearSeries, String> {
        if pairs.is_empty() {
            return Err("series must contain at least one year".to_string());
        }
        pairs.sort_by_key(|(y, _)| *y);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(format!("duplicate year {}", w[0].0));
            }
        }
        let start = pairs[0].0;
        let end = pairs[pairs.len() - 1].0;
        let mut values = vec![0.0; (end - start + 1) as usize];
        for (year, value) in pairs {
            values[(year - start) as usize] = value;
        }
        Ok(YearSeries {
            start_year: start,
            values,
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value for `year`, or `None` outside the covered range.
    pub fn get(&self, year: i32) -> Option<f64> {
        if year < self.start_year {
            return None;
        }
        self.values.get((year - self.start_year) as usize).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn push(&mut self, value: f64) {
        self.values.push(value);
    }

    /// Iterates over (year, value) pairs in year order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.start_year + i as i32, *v))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Year-over-year first differences: `d(y) = v(y) - v(y-1)` for years
    /// after the first. The result starts one year later and is one shorter.
    pub fn differences(&self) -> YearSeries {
        let diffs = self.values.windows(2).map(|w| w[1] - w[0]).collect();
        YearSeries {
            start_year: self.start_year + 1,
            values: diffs,
        }
    }
}
