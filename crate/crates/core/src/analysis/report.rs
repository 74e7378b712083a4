// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Estimate, FitResult, SaturationEstimate};

/// Fit of one transient curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub role: String,
    pub tau: Estimate,
    pub fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationEstimate>,
}

/// Provenance of the analyzed data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub master_seed: u64,
    pub inputs: Vec<String>,
}

/// Everything recovered from one set of histograms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branching: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<Estimate>,
    pub curves: Vec<CurveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_from_intensity: Option<Estimate>,
    /// Steps that could not be carried out, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub metadata: RunMetadata,
}
