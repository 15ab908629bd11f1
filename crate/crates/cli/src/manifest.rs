//! Run manifests: every emitted artifact is accompanied by the command,
//! input digest, seed, and tolerances that produced it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wickstd::standardize::StandardizeOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub input_digest: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub mass_tol: f64,
    pub positivity_tol: f64,
    pub structure_tol: f64,
    pub norm_cap: f64,
    pub truncation_budget: f64,
    pub max_order: usize,
}

impl Tolerances {
    pub fn from_options(opts: &StandardizeOptions, max_order: usize) -> Self {
        Tolerances {
            mass_tol: opts.mass_tol,
            positivity_tol: opts.positivity_tol,
            structure_tol: opts.structure_tol,
            norm_cap: opts.norm_cap,
            truncation_budget: opts.truncation_budget,
            max_order,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

impl RunManifest {
    pub fn new(
        command: &str,
        input_bytes: &[u8],
        seed: u64,
        opts: &StandardizeOptions,
        max_order: usize,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            input_digest: sha256_hex(input_bytes),
            seed,
            tolerances: Tolerances::from_options(opts, max_order),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}
