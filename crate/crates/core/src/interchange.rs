//! JSON interchange documents for operators and Choi operators.
//!
//! ```json
//! {"shape": [[2, 2]], "entries": [[0.5, 0.0], [0.0, 0.0], ...]}
//! ```
//!
//! `entries` lists the matrix row-major as `[re, im]` pairs. Choi documents
//! add `input_factors`, the indices of the factors that form the channel
//! input.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{DensityOperator, FactorShape, LabeledOperator, STATE_TOL};
use crate::synthesis::ChoiOperator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDocument {
    pub shape: Vec<(usize, usize)>,
    pub entries: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_factors: Option<Vec<usize>>,
}

fn format_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

impl OperatorDocument {
    pub fn from_operator(op: &LabeledOperator) -> Self {
        Self {
            shape: op.shape().factors().to_vec(),
            entries: op.row_major_entries().iter().map(|z| [z.re, z.im]).collect(),
            input_factors: None,
        }
    }

    pub fn from_choi(j: &ChoiOperator) -> Self {
        Self {
            input_factors: Some(j.input_factors()),
            ..Self::from_operator(j.op())
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(format_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn to_operator(&self) -> Result<LabeledOperator> {
        let shape = FactorShape::new(self.shape.clone()).map_err(format_err)?;
        if let Some(bad) = self.entries.iter().flatten().find(|x| !x.is_finite()) {
            return Err(Error::Format(format!("non-finite entry {bad}")));
        }
        let entries: Vec<Complex64> = self.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        LabeledOperator::from_row_major(shape, &entries).map_err(format_err)
    }

    /// Validated with `tol` on trace, Hermiticity and positivity.
    pub fn to_state(&self, tol: f64) -> Result<DensityOperator> {
        DensityOperator::with_tolerance(self.to_operator()?, tol)
    }

    pub fn to_choi(&self) -> Result<ChoiOperator> {
        let inputs = self
            .input_factors
            .as_ref()
            .ok_or_else(|| Error::Format("Choi document lacks `input_factors`".into()))?;
        ChoiOperator::new(self.to_operator()?, inputs).map_err(format_err)
    }
}

pub fn read_state(text: &str) -> Result<DensityOperator> {
    OperatorDocument::parse(text)?.to_state(STATE_TOL.max(1e-9))
}

pub fn write_operator(op: &LabeledOperator) -> String {
    OperatorDocument::from_operator(op).to_json()
}
