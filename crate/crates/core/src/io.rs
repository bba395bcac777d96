//! Model files.
//!
//! Quantum models are JSON objects
//! `{"dim": D, "hamiltonian": [[[re, im], …], …], "jumps": [matrix, …]}`.
//! Classical generators are either JSON, `{"rates": [[…], …]}` with
//! `rates[to][from]` or `{"states": n, "edges": [[from, to, rate], …]}`,
//! or plain text with one `from to rate` edge per line (0-based states,
//! `#` starts a comment).
//!
//! Errors carry a location: line and column for JSON syntax, a field path
//! for shape problems, the line number for edge lists.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::ClassicalGenerator;
use crate::models::{Model, ModelSpecifier};
use crate::operator::{from_pairs, to_pairs};
use crate::superop::QuantumModel;
use crate::{CMat, Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumModelFile {
    pub dim: usize,
    pub hamiltonian: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub jumps: Vec<Vec<Vec<[f64; 2]>>>,
}

impl QuantumModelFile {
    pub fn from_model(m: &QuantumModel) -> Self {
        Self {
            dim: m.hamiltonian.nrows(),
            hamiltonian: to_pairs(&m.hamiltonian),
            jumps: m.jumps.iter().map(to_pairs).collect(),
        }
    }

    pub fn to_model(&self) -> Result<QuantumModel> {
        let h = matrix_at(&self.hamiltonian, self.dim, "hamiltonian")?;
        let jumps = self
            .jumps
            .iter()
            .enumerate()
            .map(|(k, j)| matrix_at(j, self.dim, &format!("jumps[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        QuantumModel::new(h, jumps).map_err(|e| Error::Parse(format!("model: {e}")))
    }
}

fn matrix_at(rows: &[Vec<[f64; 2]>], dim: usize, path: &str) -> Result<CMat> {
    if rows.len() != dim {
        return Err(Error::Parse(format!("{path}: {} rows, expected dim = {dim}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::Parse(format!("{path}[{i}]: {} entries, expected dim = {dim}", r.len())));
        }
        if let Some(j) = r.iter().position(|z| !(z[0].is_finite() && z[1].is_finite())) {
            return Err(Error::Parse(format!("{path}[{i}][{j}]: non-finite entry")));
        }
    }
    from_pairs(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassicalModelFile {
    Dense { rates: Vec<Vec<f64>> },
    Edges { states: usize, edges: Vec<(usize, usize, f64)> },
}

impl ClassicalModelFile {
    pub fn to_generator(&self) -> Result<ClassicalGenerator> {
        let g = match self {
            Self::Dense { rates } => {
                let n = rates.len();
                if let Some(i) = rates.iter().position(|r| r.len() != n) {
                    return Err(Error::Parse(format!("rates[{i}]: {} entries, expected {n}", rates[i].len())));
                }
                ClassicalGenerator::new(DMatrix::from_fn(n, n, |i, j| rates[i][j]))
            }
            Self::Edges { states, edges } => ClassicalGenerator::from_edges(*states, edges),
        };
        g.map_err(|e| Error::Parse(format!("generator: {e}")))
    }
}

/// Parses the `from to rate` text format; the state count is the largest
/// index plus one.
pub fn parse_edge_list(text: &str) -> Result<ClassicalGenerator> {
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: &str| Error::Parse(format!("line {}: {msg}: '{}'", k + 1, raw.trim()));
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(at("expected 'from to rate'"));
        }
        let from = f[0].parse::<usize>().map_err(|_| at("bad source state"))?;
        let to = f[1].parse::<usize>().map_err(|_| at("bad target state"))?;
        let rate = f[2].parse::<f64>().map_err(|_| at("bad rate"))?;
        if from == to {
            return Err(at("self loop"));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(at("rate must be finite and nonnegative"));
        }
        edges.push((from, to, rate));
    }
    let n = edges.iter().map(|&(a, b, _)| a.max(b) + 1).max().ok_or_else(|| Error::Parse("edge list is empty".into()))?;
    ClassicalGenerator::from_edges(n, &edges)
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
}

/// Reads any supported model text. JSON with a `hamiltonian` is quantum,
/// other JSON is a classical generator, anything else an edge list.
pub fn parse_model(text: &str) -> Result<Model> {
    let trimmed = text.trim_start();
    if !trimmed.starts_with('{') {
        return parse_edge_list(text).map(Model::Classical);
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
    if value.get("hamiltonian").is_some() || value.get("dim").is_some() {
        // reparse the text so shape errors keep their line numbers
        let f: QuantumModelFile = serde_json::from_str(text).map_err(json_error)?;
        return f.to_model().map(Model::Quantum);
    }
    let f: ClassicalModelFile = serde_json::from_value(value).map_err(|e| {
        Error::Parse(format!("expected {{\"rates\": …}} or {{\"states\": n, \"edges\": …}}: {e}"))
    })?;
    f.to_generator().map(Model::Classical)
}

/// A loaded model with the hash that identifies it in output headers.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: Model,
    pub hash: String,
    pub description: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the model's canonical JSON form, so equal models hash equal
/// however they were specified.
pub fn model_hash(model: &Model) -> String {
    let canonical = match model {
        Model::Quantum(m) => serde_json::to_string(&QuantumModelFile::from_model(m)),
        Model::Classical(g) => {
            let n = g.dim;
            let rates = (0..n).map(|i| (0..n).map(|j| g.rates[(i, j)]).collect()).collect();
            serde_json::to_string(&ClassicalModelFile::Dense { rates })
        }
    };
    sha256_hex(canonical.expect("model serializes").as_bytes())
}

/// Resolves `builtin:<name>` (with parameters) or `file:<path>`.
pub fn load_model(source: &str, spec_params: &[(String, f64)], seed: Option<u64>) -> Result<LoadedModel> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let mut spec = ModelSpecifier::new(name);
        for (k, v) in spec_params {
            spec.params.insert(k.clone(), *v);
        }
        spec.seed = seed;
        let model = spec.build()?;
        let description = serde_json::to_string(&spec).map_err(|e| Error::Parse(e.to_string()))?;
        return Ok(LoadedModel { hash: model_hash(&model), model, description });
    }
    if let Some(path) = source.strip_prefix("file:") {
        if !spec_params.is_empty() {
            return Err(Error::InvalidInput("--param applies to builtin models only".into()));
        }
        let text = std::fs::read_to_string(Path::new(path))
            .map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?;
        let model = parse_model(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{path}: {msg}")),
            other => other,
        })?;
        return Ok(LoadedModel { hash: model_hash(&model), model, description: path.to_string() });
    }
    Err(Error::InvalidInput(format!("model '{source}' must start with builtin: or file:")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spin_half_dephasing;

    #[test]
    fn quantum_round_trip() {
        let m = spin_half_dephasing(1.0, 0.005, 5.025).unwrap();
        let text = serde_json::to_string_pretty(&QuantumModelFile::from_model(&m)).unwrap();
        let Model::Quantum(back) = parse_model(&text).unwrap() else { panic!("not quantum") };
        assert_eq!(back.hamiltonian, m.hamiltonian);
        assert_eq!(back.jumps, m.jumps);
    }

    #[test]
    fn json_errors_have_locations() {
        let e = parse_model("{\n \"dim\": 2,\n \"hamiltonian\": [[[0,0],[0,0]],\n [[0,0]]]\n}").unwrap_err();
        assert!(e.to_string().contains("hamiltonian[1]"), "{e}");
        let e = parse_model("{\n \"dim\": 2,\n \"hamiltonian\": [[[0,0],]\n}").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = parse_model("{\"dim\": 2, \"hamiltonian\": [[[0,0],[0,0]],[[0,0],[0,0]]], \"jump\": []}").unwrap_err();
        assert!(e.to_string().contains("unknown field"), "{e}");
        let e = parse_model("{\"dim\": 2, \"hamiltonian\": [[[0,0],[1,0]],[[0,0],[0,0]]]}").unwrap_err();
        assert!(e.to_string().contains("Hermitian"), "{e}");
    }

    #[test]
    fn classical_formats_agree() {
        let dense = parse_model("{\"rates\": [[-1, 2], [1, -2]]}").unwrap();
        let edges = parse_model("{\"states\": 2, \"edges\": [[0, 1, 1], [1, 0, 2]]}").unwrap();
        let text = parse_model("# two states\n0 1 1\n\n1 0 2  # back\n").unwrap();
        let rates = |m: Model| match m {
            Model::Classical(g) => g.rates,
            Model::Quantum(_) => panic!("not classical"),
        };
        let want = rates(dense);
        assert_eq!(rates(edges), want);
        assert_eq!(rates(text), want);
    }

    #[test]
    fn edge_list_errors_name_the_line() {
        let e = parse_edge_list("0 1 1\n1 0 x\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(parse_edge_list("0 0 1").unwrap_err().to_string().contains("self loop"));
        assert!(parse_edge_list("# nothing\n").is_err());
        assert!(parse_model("{\"rates\": [[1, 0], [0, -1]]}").is_err());
    }

    #[test]
    fn builtin_hash_tracks_parameters() {
        let a = load_model("builtin:spin_half", &[], None).unwrap();
        let b = load_model("builtin:spin_half", &[("kappa".into(), 0.01)], None).unwrap();
        assert_ne!(a.hash, b.hash);
        let explicit = [("gamma".into(), 1.0), ("kappa".into(), 0.005), ("omega".into(), 5.025)];
        assert_eq!(a.hash, load_model("builtin:spin_half", &explicit, None).unwrap().hash);
        assert!(load_model("spin_half", &[], None).is_err());
        assert!(load_model("file:/nonexistent/model.json", &[], None).is_err());
    }
}
