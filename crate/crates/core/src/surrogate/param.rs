use std::ops::Deref;

use crate::error::{Result, SurroError};

/// A point `θ ∈ R^q` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(SurroError::InvalidArgument(
                "parameter vector must have q >= 1".into(),
            ));
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(SurroError::InvalidArgument(format!(
                "coordinate {i} is not finite"
            )));
        }
        Ok(Self(coords))
    }

    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    /// Unchecked conversion for values produced internally; use
    /// [`ParamVector::new`] for external input.
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
