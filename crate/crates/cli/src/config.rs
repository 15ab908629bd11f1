//! On-disk chaos-expansion configs: a JSON schema with sorted multi-indices
//! and full round-trip precision on the coefficients. Unknown fields are
//! rejected so a typo cannot silently change a run.

use serde::{Deserialize, Serialize};

use wickstd::chaos::ChaosExpansion;
use wickstd::tensor::{MultiIndex, SymmetricTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    pub dimension: usize,
    pub max_order: usize,
    pub kernels: Vec<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub order: usize,
    pub entries: Vec<EntryConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub multi_index: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ExpansionConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| {
            format!(
                "config parse error at line {}, column {}: {e}",
                e.line(),
                e.column()
            )
        })
    }

    /// Validates the schema-level invariants and builds the expansion.
    pub fn to_expansion(&self) -> Result<ChaosExpansion, String> {
        if self.dimension == 0 {
            return Err("dimension must be at least 1".into());
        }
        let mut kernels: Vec<SymmetricTensor> = (0..=self.max_order)
            .map(|k| SymmetricTensor::zero(self.dimension, k))
            .collect();
        let mut seen_orders = vec![false; self.max_order + 1];
        for kernel in &self.kernels {
            if kernel.order > self.max_order {
                return Err(format!(
                    "kernel order {} exceeds max_order {}",
                    kernel.order, self.max_order
                ));
            }
            if seen_orders[kernel.order] {
                return Err(format!("kernel order {} listed twice", kernel.order));
            }
            seen_orders[kernel.order] = true;
            let slot = &mut kernels[kernel.order];
            for entry in &kernel.entries {
                if entry.multi_index.len() != kernel.order {
                    return Err(format!(
                        "multi-index {:?} has length {}, kernel order is {}",
                        entry.multi_index,
                        entry.multi_index.len(),
                        kernel.order
                    ));
                }
                let idx = MultiIndex::from_sorted(entry.multi_index.clone())
                    .map_err(|e| format!("{e}"))?;
                if idx.max_entry() as usize > self.dimension {
                    return Err(format!(
                        "multi-index {:?} exceeds dimension {}",
                        entry.multi_index, self.dimension
                    ));
                }
                if slot.coeff(&idx) != 0.0 {
                    return Err(format!(
                        "duplicate multi-index {:?} in kernel of order {}",
                        entry.multi_index, kernel.order
                    ));
                }
                if !entry.value.is_finite() {
                    return Err(format!(
                        "non-finite value at multi-index {:?}",
                        entry.multi_index
                    ));
                }
                slot.set(idx, entry.value).map_err(|e| format!("{e}"))?;
            }
        }
        ChaosExpansion::new(self.dimension, kernels).map_err(|e| format!("{e}"))
    }

    /// Serializes an expansion, listing every order with nonzero entries
    /// (plus order 0, which always appears).
    pub fn from_expansion(body: &ChaosExpansion, metadata: Option<Metadata>) -> Self {
        let trimmed = body.trimmed();
        let mut kernels = Vec::new();
        for (order, kernel) in trimmed.kernels().iter().enumerate() {
            let entries: Vec<EntryConfig> = kernel
                .coeffs()
                .map(|(idx, value)| EntryConfig {
                    multi_index: idx.entries().to_vec(),
                    value,
                })
                .collect();
            if order == 0 || !entries.is_empty() {
                kernels.push(KernelConfig { order, entries });
            }
        }
        ExpansionConfig {
            dimension: trimmed.dimension(),
            max_order: trimmed.max_order(),
            kernels,
            metadata,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}
