//! Named residuals aggregated by maximum.

use serde::Serialize;

/// A set of named residuals. Recording the same name twice keeps the larger
/// value, so sample loops can be aggregated in any order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    entries: Vec<(String, f64)>,
}

impl Residuals {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `value` under `name`. NaN is kept as NaN so that it can never
    /// compare as a pass.
    pub fn record(&mut self, name: &str, value: f64) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => {
                if value.is_nan() || value > *v {
                    *v = value;
                }
            }
            None => self.entries.push((name.to_string(), value)),
        }
    }

    pub fn merge(&mut self, other: &Residuals) {
        for (n, v) in &other.entries {
            self.record(n, *v);
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Largest residual; `0` for an empty report.
    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0, |m: f64, (_, v)| if v.is_nan() { f64::NAN } else { m.max(*v) })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Euclidean norm of a difference of two slices.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
