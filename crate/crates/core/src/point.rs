//! Points of the carrier set.
//!
//! Every element the toolkit works with (reals, intervals `[a, b]`, planar
//! points and sampled functions) is a fixed-length vector of finite reals.
//! Equality is exact coordinate equality.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(SmallVec<[f64; 2]>);

impl Point {
    /// Builds a point, rejecting empty or non-finite coordinate vectors.
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords: Vec<f64> = coords.into();
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(coords));
        }
        Ok(Point(SmallVec::from_vec(coords)))
    }

    /// Builds a point from a slice without validation. Callers guarantee the
    /// coordinates are finite.
    pub(crate) fn from_slice_unchecked(coords: &[f64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn scalar(x: f64) -> Self {
        debug_assert!(x.is_finite());
        Point(SmallVec::from_slice(&[x]))
    }

    pub fn planar(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite());
        Point(SmallVec::from_slice(&[x, y]))
    }

    /// The interval `[lo, hi]`, encoded as a two-coordinate point.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Point::new(vec![lo, hi])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// First coordinate; the value of a one-dimensional point.
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            f.debug_list().entries(self.0.iter()).finish()
        }
    }
}

/// Hash key for exact coordinate equality. `-0.0` and `0.0` compare equal as
/// floats, so they share a key.
pub(crate) fn exact_key(coords: &[f64]) -> SmallVec<[u64; 2]> {
    coords.iter().map(|c| (c + 0.0).to_bits()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(Point::new(vec![1.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Point::new(Vec::<f64>::new()).is_err());
    }

    #[test]
    fn interval_requires_ordered_ends() {
        assert!(Point::interval(1.0, 3.0).is_ok());
        assert!(Point::interval(3.0, 1.0).is_err());
    }

    #[test]
    fn signed_zero_shares_key() {
        assert_eq!(exact_key(&[0.0]), exact_key(&[-0.0]));
        assert_ne!(exact_key(&[0.0]), exact_key(&[1e-300]));
    }
}
