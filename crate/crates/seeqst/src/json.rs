//! On-disk JSON documents.
//!
//! The pipeline composes through files only: `plan` writes the subset plan
//! and circuit list, `run` writes measurement records, `estimate` writes a
//! report. Every document embeds the hash of the manifest that produced
//! it, and serialization is deterministic (struct field order plus sorted
//! maps), so identical manifests reproduce identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::fnv1a64;
use crate::circuits::{Circuit, CircuitLabel, Gate};
use crate::error::{Error, Result};
use crate::sim::MeasurementRecord;

/// One subset entry of a measurement plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetDoc {
    pub mask: usize,
    pub observables: Vec<String>,
}

/// The subset plan: which subsets to measure and their observables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDoc {
    pub n_qubits: usize,
    pub subsets: Vec<SubsetDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

/// One gate: name plus the 1-based qubit indices it touches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateDoc {
    pub g: String,
    pub q: Vec<usize>,
}

impl GateDoc {
    pub fn from_gate(gate: &Gate) -> Self {
        Self {
            g: gate.name().to_string(),
            q: gate.qubits(),
        }
    }

    pub fn to_gate(&self) -> Result<Gate> {
        let one = |doc: &GateDoc| -> Result<usize> {
            doc.q
                .first()
                .copied()
                .ok_or_else(|| Error::InvalidGate(format!("{} needs a qubit", doc.g)))
        };
        match self.g.as_str() {
            "RX90" => Ok(Gate::Rx90(one(self)?)),
            "RY90" => Ok(Gate::Ry90(one(self)?)),
            "RX90DAG" => Ok(Gate::Rx90Dag(one(self)?)),
            "RY90DAG" => Ok(Gate::Ry90Dag(one(self)?)),
            "H" => Ok(Gate::H(one(self)?)),
            "CNOT" => {
                if self.q.len() != 2 {
                    return Err(Error::InvalidGate("CNOT needs two qubits".into()));
                }
                Ok(Gate::Cnot {
                    control: self.q[0],
                    target: self.q[1],
                })
            }
            "MEASURE_ALL" => Ok(Gate::MeasureAll),
            other => Err(Error::InvalidGate(format!("unknown gate {other:?}"))),
        }
    }
}

/// One circuit: layered gates for a subset setting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub n_qubits: usize,
    pub subset_mask: usize,
    pub label: String,
    pub layers: Vec<Vec<GateDoc>>,
}

impl CircuitDoc {
    pub fn from_circuit(c: &Circuit) -> Self {
        Self {
            n_qubits: c.n_qubits(),
            subset_mask: c.subset_mask(),
            label: c.label().as_string(),
            layers: c
                .layers()
                .iter()
                .map(|layer| layer.iter().map(GateDoc::from_gate).collect())
                .collect(),
        }
    }

    pub fn to_circuit(&self) -> Result<Circuit> {
        let label = CircuitLabel::parse(&self.label)?;
        let layers = self
            .layers
            .iter()
            .map(|layer| layer.iter().map(GateDoc::to_gate).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(self.n_qubits, self.subset_mask, label, layers)
    }
}

/// The circuit file: the plan's circuits plus build metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitsDoc {
    pub n_qubits: usize,
    pub variant: String,
    pub connectivity: String,
    pub circuits: Vec<CircuitDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

/// One executed circuit's counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordDoc {
    pub label: String,
    pub mask: usize,
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
}

impl RecordDoc {
    pub fn from_record(r: &MeasurementRecord) -> Self {
        Self {
            label: r.circuit_label.clone(),
            mask: r.subset_mask,
            shots: r.shots,
            seed: r.seed,
            counts: r.counts.clone(),
        }
    }

    pub fn to_record(&self, n_qubits: usize) -> MeasurementRecord {
        MeasurementRecord {
            circuit_label: self.label.clone(),
            subset_mask: self.mask,
            n_qubits,
            shots: self.shots,
            seed: self.seed,
            counts: self.counts.clone(),
        }
    }
}

/// Sampling-stream metadata recorded with every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RngDoc {
    pub generator: String,
    pub stream_rule: String,
}

impl Default for RngDoc {
    fn default() -> Self {
        Self {
            generator: crate::sim::RNG_GENERATOR.to_string(),
            stream_rule: crate::sim::RNG_STREAM_RULE.to_string(),
        }
    }
}

/// The records file: one entry per executed circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordsDoc {
    pub n_qubits: usize,
    pub shots: u64,
    pub noise: String,
    pub master_seed: u64,
    pub rng: RngDoc,
    pub records: Vec<RecordDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

/// One reconstructed element.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementDoc {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

/// Report metrics; fidelity requires a truth state.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub fidelity: Option<f64>,
    pub delta_err_by_cnot_count: BTreeMap<String, f64>,
}

/// The estimation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDoc {
    pub method: String,
    pub n_qubits: usize,
    pub elements: Vec<ElementDoc>,
    pub metrics: MetricsDoc,
    pub config: serde_json::Value,
    pub rng: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

/// Fitted scaling-model coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingModelDoc {
    pub variant: String,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub residual_rms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

/// Everything needed to re-run a command and get byte-identical outputs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub command: String,
    pub tool_version: String,
    pub n_qubits: Option<usize>,
    pub elements: Option<Vec<String>>,
    pub full: Option<bool>,
    pub variant: Option<String>,
    pub connectivity: Option<String>,
    pub threshold: Option<f64>,
    pub diagonal_file: Option<String>,
    pub state: Option<String>,
    pub noise: Option<String>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub plan: Option<String>,
    pub records: Option<String>,
    pub circuits: Option<String>,
    pub method: Option<String>,
    pub truth: Option<String>,
    pub mle: Option<serde_json::Value>,
    pub sweep: Option<serde_json::Value>,
    pub outputs: Vec<String>,
}

impl ManifestDoc {
    /// Stable fingerprint of the manifest content.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        format!("{:016x}", fnv1a64(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_subset_circuits, Connectivity};
    use crate::subsets::SubsetKey;

    #[test]
    fn circuit_doc_round_trip() {
        let k = SubsetKey::new(0b101, 3).unwrap();
        for c in build_subset_circuits(&k, Connectivity::Chain).unwrap() {
            let doc = CircuitDoc::from_circuit(&c);
            let back = doc.to_circuit().unwrap();
            assert_eq!(c, back);
        }
    }

    #[test]
    fn circuit_json_shape_is_pinned() {
        let k = SubsetKey::new(0b11, 2).unwrap();
        let c = &build_subset_circuits(&k, Connectivity::Chain).unwrap()[0];
        let json = serde_json::to_value(CircuitDoc::from_circuit(c)).unwrap();
        assert_eq!(json["n_qubits"], 2);
        assert_eq!(json["subset_mask"], 3);
        assert_eq!(json["label"], "EVEN");
        assert_eq!(json["layers"][0][0]["g"], "CNOT");
        assert_eq!(json["layers"][0][0]["q"][0], 1);
        assert_eq!(json["layers"][0][0]["q"][1], 2);
        assert_eq!(json["layers"][1][0]["g"], "RY90DAG");
        assert_eq!(json["layers"][2][0]["g"], "MEASURE_ALL");
    }

    #[test]
    fn gate_doc_rejects_malformed() {
        assert!(GateDoc { g: "CNOT".into(), q: vec![1] }.to_gate().is_err());
        assert!(GateDoc { g: "WIBBLE".into(), q: vec![1] }.to_gate().is_err());
    }

    #[test]
    fn manifest_hash_is_stable_and_sensitive() {
        let mut m = ManifestDoc {
            command: "run".into(),
            tool_version: "0.1.0".into(),
            n_qubits: Some(3),
            shots: Some(1024),
            seed: Some(7),
            ..Default::default()
        };
        let h1 = m.hash();
        assert_eq!(h1, m.hash());
        m.seed = Some(8);
        assert_ne!(h1, m.hash());
    }
}
