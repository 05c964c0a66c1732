//! Sensor-network graphs.
//!
//! A [`Topology`] is a qubit count plus an undirected edge list; each edge
//! becomes one controlled-Z link in the ansatz. Edges are stored as `(i, j)`
//! with `i < j`, sorted lexicographically.
//!
//! Built-in graphs:
//!
//! | name | edges |
//! |------|-------|
//! | `L4` | `(0,1) (1,2) (2,3)` |
//! | `R4` | `L4` plus `(0,3)` |
//! | `S4` | hub 0 linked to 1, 2, 3 |
//! | `F4` | all 6 pairs |
//! | `L9` | chain `0–1–…–8` |
//! | `S9` | 3×3 grid, centre 4 linked to 1, 3, 5, 7, plus `(0,1) (2,5) (7,8) (3,6)` |
//! | `RS9`| ring `0–1–…–7–0`, hub 8 linked to 0, 2, 4, 6 |
//! | `F9` | all 36 pairs (exceeds the degree-4 limit) |
//! | `GHZ4`, `GHZ9` | chain; the nearest-neighbour CNOT ladder of a GHZ encoder |
//!
//! Any other graph can be read from an edge-list file, see [`Topology::parse_edge_list`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QsnError, Result};
use crate::tol::MAX_QUBITS;

/// Hardware limit on links per qubit.
pub const MAX_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinTopology {
    L4,
    R4,
    S4,
    F4,
    L9,
    S9,
    RS9,
    F9,
    GHZ4,
    GHZ9,
}

impl BuiltinTopology {
    pub const ALL: [BuiltinTopology; 10] = [
        Self::L4,
        Self::R4,
        Self::S4,
        Self::F4,
        Self::L9,
        Self::S9,
        Self::RS9,
        Self::F9,
        Self::GHZ4,
        Self::GHZ9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::L4 => "L4",
            Self::R4 => "R4",
            Self::S4 => "S4",
            Self::F4 => "F4",
            Self::L9 => "L9",
            Self::S9 => "S9",
            Self::RS9 => "RS9",
            Self::F9 => "F9",
            Self::GHZ4 => "GHZ4",
            Self::GHZ9 => "GHZ9",
        }
    }
}

impl fmt::Display for BuiltinTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinTopology {
    type Err = QsnError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| QsnError::config(format!("unknown topology '{s}'")))
    }
}

/// Nodes whose degree exceeds [`MAX_DEGREE`], as `(node, degree)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DegreeReport {
    pub overdegree: Vec<(usize, usize)>,
}

impl DegreeReport {
    pub fn is_ok(&self) -> bool {
        self.overdegree.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    name: String,
    n_qubits: usize,
    edges: Vec<(usize, usize)>,
    allow_overdegree: bool,
}

fn chain(n: usize) -> Vec<(usize, usize)> {
    (0..n - 1).map(|i| (i, i + 1)).collect()
}

fn complete(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Checks structure (range, self-loops, duplicates) and reports degree
/// violations. Structural problems are errors; degree violations are
/// reported, and only become errors in [`Topology::new`] when not allowed.
pub fn validate_edges(n_qubits: usize, edges: &[(usize, usize)]) -> Result<DegreeReport> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(QsnError::config(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut degree = vec![0usize; n_qubits];
    for &(a, b) in edges {
        if a >= n_qubits || b >= n_qubits {
            return Err(QsnError::config(format!(
                "edge ({a},{b}) out of range for {n_qubits} qubits"
            )));
        }
        if a == b {
            return Err(QsnError::config(format!("self-loop on node {a}")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(QsnError::config(format!("duplicate edge ({a},{b})")));
        }
        degree[a] += 1;
        degree[b] += 1;
    }
    let overdegree = degree
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d > MAX_DEGREE)
        .collect();
    Ok(DegreeReport { overdegree })
}

impl Topology {
    pub fn new(
        name: impl Into<String>,
        n_qubits: usize,
        edges: Vec<(usize, usize)>,
        allow_overdegree: bool,
    ) -> Result<Self> {
        let name = name.into();
        let report = validate_edges(n_qubits, &edges)?;
        if !report.is_ok() && !allow_overdegree {
            return Err(QsnError::config(format!(
                "topology '{name}' exceeds {MAX_DEGREE} links on nodes {:?}",
                report.overdegree
            )));
        }
        let mut edges: Vec<_> = edges
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        Ok(Self {
            name,
            n_qubits,
            edges,
            allow_overdegree,
        })
    }

    pub fn builtin(which: BuiltinTopology) -> Self {
        use BuiltinTopology::*;
        let (n, edges, over) = match which {
            L4 | GHZ4 => (4, chain(4), false),
            R4 => {
                let mut e = chain(4);
                e.push((0, 3));
                (4, e, false)
            }
            S4 => (4, vec![(0, 1), (0, 2), (0, 3)], false),
            F4 => (4, complete(4), false),
            L9 | GHZ9 => (9, chain(9), false),
            S9 => (
                9,
                vec![
                    (1, 4),
                    (3, 4),
                    (4, 5),
                    (4, 7),
                    (0, 1),
                    (2, 5),
                    (7, 8),
                    (3, 6),
                ],
                false,
            ),
            RS9 => {
                let mut e: Vec<_> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
                e.extend([(0, 8), (2, 8), (4, 8), (6, 8)]);
                (9, e, false)
            }
            F9 => (9, complete(9), true),
        };
        Self::new(which.name(), n, edges, over).expect("built-in topologies are well formed")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::builtin(name.parse()?))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn allow_overdegree(&self) -> bool {
        self.allow_overdegree
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_qubits];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// Degree check against [`MAX_DEGREE`], honouring the override flag.
    pub fn validate(&self, allow_overdegree: bool) -> Result<DegreeReport> {
        let report = validate_edges(self.n_qubits, &self.edges)?;
        if allow_overdegree {
            Ok(DegreeReport::default())
        } else {
            Ok(report)
        }
    }

    /// Parses the edge-list format:
    ///
    /// ```text
    /// # comment
    /// 4 3        <- n_qubits, number of edges
    /// 0 1
    /// 1 2
    /// 2 3
    /// ```
    pub fn parse_edge_list(name: &str, text: &str, allow_overdegree: bool) -> Result<Self> {
        let mut records = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());

        let parse_pair = |lineno: usize, line: &str| -> Result<(usize, usize)> {
            let fields: Vec<_> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(QsnError::config(format!(
                    "line {}: expected two integers, got '{line}'",
                    lineno + 1
                )));
            }
            let num = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    QsnError::config(format!("line {}: '{s}' is not an index", lineno + 1))
                })
            };
            Ok((num(fields[0])?, num(fields[1])?))
        };

        let (lineno, header) = records
            .next()
            .ok_or_else(|| QsnError::config("edge list is empty"))?;
        let (n_qubits, n_edges) = parse_pair(lineno, header)?;
        let edges = records
            .map(|(i, l)| parse_pair(i, l))
            .collect::<Result<Vec<_>>>()?;
        if edges.len() != n_edges {
            return Err(QsnError::config(format!(
                "header announces {n_edges} edges, found {}",
                edges.len()
            )));
        }
        Self::new(name, n_qubits, edges, allow_overdegree)
    }

    pub fn from_edge_list_file(path: &Path, allow_overdegree: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".to_owned());
        Self::parse_edge_list(&name, &text, allow_overdegree)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {}\n{} {}\n", self.name, self.n_qubits, self.edges.len());
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}
