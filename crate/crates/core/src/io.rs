//! File formats: network JSON, the CSV data dialect, and the JSON documents
//! written by the command-line tool.
//!
//! Network JSON lists variables in node order:
//!
//! ```json
//! {"variables": [
//!   {"name": "A", "levels": ["no", "yes"], "parents": [], "cpt": [[0.3, 0.7]]},
//!   {"name": "B", "levels": ["lo", "hi"], "parents": ["A"], "cpt": [[0.9, 0.1], [0.2, 0.8]]}
//! ]}
//! ```
//!
//! CPT rows run over parent configurations in the listed parent order, last
//! parent fastest. CSV files are comma-separated UTF-8 with a header row and
//! no quoting; empty cells and cells containing quotes are rejected.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averaging::{AveragedNetwork, AveragingError, ConfidenceProfile, ThresholdReport};
use crate::dataset::{Dataset, DatasetError};
use crate::graph::{Dag, GraphError, NodePair, NodeSet};
use crate::learn::{Diagnostics, LearnedStructure};
use crate::model::{Cpt, DiscreteBayesNet, ModelError, Variable};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("network: {0}")]
    Model(#[from] ModelError),
    #[error("network: {0}")]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Averaging(#[from] AveragingError),
    #[error("variable `{name}`: {message}")]
    Label { name: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub levels: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub variables: Vec<VariableDoc>,
}

fn check_label(owner: &str, label: &str) -> Result<(), IoError> {
    let bad = label.is_empty() || label.contains([',', '"', '\r', '\n']);
    if bad {
        return Err(IoError::Label {
            name: owner.to_string(),
            message: format!("label {label:?} cannot be written to CSV"),
        });
    }
    Ok(())
}

impl NetworkDoc {
    pub fn into_network(self) -> Result<DiscreteBayesNet, IoError> {
        let nodes = NodeSet::new(self.variables.iter().map(|v| v.name.clone()))?;
        let mut edges = Vec::new();
        let mut variables = Vec::new();
        let mut cpts = Vec::new();
        for (i, v) in self.variables.into_iter().enumerate() {
            check_label(&v.name, &v.name)?;
            for level in &v.levels {
                check_label(&v.name, level)?;
            }
            let parents = v
                .parents
                .iter()
                .map(|p| nodes.require(p))
                .collect::<Result<Vec<_>, _>>()?;
            edges.extend(parents.iter().map(|&p| (p, i)));
            variables.push(Variable::new(v.name, v.levels)?);
            cpts.push(Cpt { child: i, parents, table: v.cpt });
        }
        let dag = Dag::from_edges(nodes, &edges)?;
        Ok(DiscreteBayesNet::new(dag, variables, cpts)?)
    }

    pub fn from_network(net: &DiscreteBayesNet) -> Self {
        let names = net.dag().nodes();
        let variables = net
            .variables()
            .iter()
            .zip(net.cpts())
            .map(|(v, cpt)| VariableDoc {
                name: v.name().to_string(),
                levels: v.levels().to_vec(),
                parents: cpt.parents.iter().map(|&p| names.name(p).to_string()).collect(),
                cpt: cpt.table.clone(),
            })
            .collect();
        Self { variables }
    }
}

pub fn read_network(reader: impl Read) -> Result<DiscreteBayesNet, IoError> {
    let doc: NetworkDoc = serde_json::from_reader(reader)?;
    doc.into_network()
}

pub fn parse_network(text: &str) -> Result<DiscreteBayesNet, IoError> {
    read_network(text.as_bytes())
}

pub fn write_network(net: &DiscreteBayesNet, mut writer: impl Write) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut writer, &NetworkDoc::from_network(net))?;
    writer.write_all(b"\n")?;
    Ok(())
}

fn csv_records(reader: impl Read) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(reader);
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| IoError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if let Some((col, cell)) = fields
            .iter()
            .enumerate()
            .find(|(_, c)| c.is_empty() || c.contains('"'))
        {
            let message = if cell.is_empty() {
                format!("empty cell in column {}", col + 1)
            } else {
                format!("quoted cell in column {} is not supported", col + 1)
            };
            return Err(IoError::Csv { line, message });
        }
        match &header {
            None => {
                let unique: BTreeSet<&String> = fields.iter().collect();
                if unique.len() != fields.len() {
                    return Err(IoError::Csv { line, message: "duplicate column name".into() });
                }
                header = Some(fields);
            }
            Some(h) if h.len() != fields.len() => {
                return Err(IoError::Csv {
                    line,
                    message: format!("expected {} fields, found {}", h.len(), fields.len()),
                });
            }
            Some(_) => rows.push(fields),
        }
    }
    let header = header.ok_or(IoError::Csv { line: 1, message: "missing header row".into() })?;
    if rows.is_empty() {
        return Err(IoError::Csv { line: 2, message: "no data rows".into() });
    }
    Ok((header, rows))
}

/// Reads a CSV dataset. Each column's levels are its distinct labels in
/// sorted order.
pub fn read_csv(reader: impl Read) -> Result<Dataset, IoError> {
    let (header, rows) = csv_records(reader)?;
    let mut variables = Vec::with_capacity(header.len());
    let mut columns = Vec::with_capacity(header.len());
    for (j, name) in header.into_iter().enumerate() {
        let levels: Vec<String> = rows
            .iter()
            .map(|r| r[j].clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let column = rows
            .iter()
            .map(|r| levels.binary_search(&r[j]).expect("label collected above") as u32)
            .collect();
        variables.push(Variable::new(name, levels).map_err(IoError::Model)?);
        columns.push(column);
    }
    Ok(Dataset::new(variables, columns)?)
}

/// Reads a CSV dataset whose columns take their level sets from `variables`
/// (matched by header name), so levels absent from the sample are kept.
pub fn read_csv_with_levels(reader: impl Read, variables: &[Variable]) -> Result<Dataset, IoError> {
    let (header, rows) = csv_records(reader)?;
    let mut vars = Vec::with_capacity(header.len());
    let mut columns = Vec::with_capacity(header.len());
    for (j, name) in header.iter().enumerate() {
        let var = variables
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| IoError::Csv { line: 1, message: format!("unknown column `{name}`") })?;
        let column = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                var.level_index(&r[j]).map(|l| l as u32).ok_or_else(|| IoError::Csv {
                    line: i as u64 + 2,
                    message: format!("`{}` is not a level of `{name}`", r[j]),
                })
            })
            .collect::<Result<Vec<u32>, _>>()?;
        vars.push(var.clone());
        columns.push(column);
    }
    Ok(Dataset::new(vars, columns)?)
}

pub fn write_csv(data: &Dataset, writer: impl Write) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(writer);
    w.write_record(data.names()).map_err(csv_write_error)?;
    let vars = data.variables();
    for i in 0..data.n_rows() {
        let row = data.row(i);
        w.write_record(row.iter().zip(vars).map(|(&l, v)| v.levels()[l as usize].as_str()))
            .map_err(csv_write_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_write_error(e: csv::Error) -> IoError {
    IoError::Csv { line: 0, message: e.to_string() }
}

/// A confidence profile from JSON. `m` and `direction_counts` may be omitted
/// for externally computed confidences.
pub fn read_profile(reader: impl Read) -> Result<ConfidenceProfile, IoError> {
    let mut profile: ConfidenceProfile = serde_json::from_reader(reader)?;
    if profile.direction_counts.is_empty() {
        profile.direction_counts = vec![[0, 0]; profile.p_hat.len()];
    }
    profile.validate()?;
    Ok(profile)
}

/// A learned structure as written by `netavg learn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedNetworkDoc {
    pub nodes: Vec<String>,
    /// `[parent, child]` pairs in edge order.
    pub edges: Vec<[String; 2]>,
    pub algorithm: String,
    pub diagnostics: Diagnostics,
}

fn named_edges(dag: &Dag) -> Vec<[String; 2]> {
    let nodes = dag.nodes();
    dag.edges()
        .map(|(u, v)| [nodes.name(u).to_string(), nodes.name(v).to_string()])
        .collect()
}

impl LearnedNetworkDoc {
    pub fn new(learned: &LearnedStructure, algorithm: impl Into<String>) -> Self {
        Self {
            nodes: learned.dag.nodes().names().to_vec(),
            edges: named_edges(&learned.dag),
            algorithm: algorithm.into(),
            diagnostics: learned.diagnostics.clone(),
        }
    }

    pub fn dag(&self) -> Result<Dag, IoError> {
        let nodes = NodeSet::new(self.nodes.clone())?;
        let pairs: Vec<(&str, &str)> = self.edges.iter().map(|[a, b]| (a.as_str(), b.as_str())).collect();
        Ok(Dag::from_named_edges(nodes, &pairs)?)
    }
}

/// Oriented averaged network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedNetworkDoc {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
    /// Pairs oriented against their majority direction to keep the graph acyclic.
    pub flipped: Vec<NodePair>,
}

impl AveragedNetworkDoc {
    pub fn new(net: &AveragedNetwork) -> Self {
        Self {
            nodes: net.dag.nodes().names().to_vec(),
            edges: named_edges(&net.dag),
            flipped: net.flipped.clone(),
        }
    }
}

/// Everything `netavg avgnet` reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgnetDoc {
    pub profile: ConfidenceProfile,
    pub report: ThresholdReport,
    pub network: AveragedNetworkDoc,
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
