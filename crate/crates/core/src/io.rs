//! Text formats for graphs, step functions and benchmark results, PGM
//! heatmaps, and TUDataset ingestion.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{ObservedGraph, StepFunction};

/// Mass tolerance applied to measures read from step-function files.
pub const READ_MASS_TOL: f64 = 1e-9;

/// Column names of the results CSV.
pub const RESULTS_HEADER: [&str; 10] = [
    "graphon_family",
    "method",
    "trial",
    "M",
    "N_min",
    "N_max",
    "metric_name",
    "value",
    "runtime_seconds",
    "seed",
];

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads an `N <n>` header followed by one `u v` edge per line.
///
/// Endpoints are 0-based; duplicates and reversed copies collapse into one
/// undirected edge.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<ObservedGraph> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (first, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing 'N <count>' header"))?;
    let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["N", count] => count
            .parse::<usize>()
            .map_err(|_| parse_err(path, first + 1, format!("invalid node count '{count}'")))?,
        _ => return Err(parse_err(path, first + 1, "expected 'N <count>'")),
    };
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [u, v] = fields[..] else {
            return Err(parse_err(path, lineno, format!("expected two endpoints, got '{line}'")));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(path, lineno, format!("invalid endpoint '{s}'")))
        };
        let (u, v) = (parse(u)?, parse(v)?);
        if u >= n || v >= n {
            return Err(Error::Range {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("endpoint {} not below {n}", u.max(v)),
            });
        }
        if u == v {
            return Err(parse_err(path, lineno, format!("self-loop at node {u}")));
        }
        edges.push((u, v));
    }
    ObservedGraph::from_edges(n, edges)
}

/// Writes `graph` in the format read by [`read_edge_list`], each edge once
/// with `u < v`.
pub fn write_edge_list(graph: &ObservedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("N {}\n", graph.node_count()));
    for (u, v) in graph.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn find_prefix(dir: &Path) -> Result<String> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(name) = entry.file_name().to_str().and_then(|n| n.strip_suffix("_A.txt")) {
            names.push(name.to_string());
        }
    }
    names.sort();
    match names.len() {
        1 => Ok(names.remove(0)),
        0 => Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no <name>_A.txt file"),
        )),
        _ => Err(Error::Validation(format!(
            "several datasets in {}: {names:?}",
            dir.display()
        ))),
    }
}

fn read_integers(path: &Path) -> Result<Vec<(usize, Vec<i64>)>> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| parse_err(path, i + 1, format!("invalid integer '{}'", t.trim())))
                })
                .collect::<Result<Vec<_>>>()
                .map(|v| (i + 1, v))
        })
        .collect()
}

/// Reads a TUDataset-style corpus: `<name>_A.txt`, `<name>_graph_indicator.txt`
/// and `<name>_graph_labels.txt` in `dir`.
///
/// Labels are mapped to `0..L` in increasing order of the original values.
pub fn read_tu_dataset(dir: impl AsRef<Path>) -> Result<Vec<(ObservedGraph, usize)>> {
    let dir = dir.as_ref();
    let name = find_prefix(dir)?;
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));
    let (a_path, ind_path, lab_path) = (file("A"), file("graph_indicator"), file("graph_labels"));

    let single = |path: &Path, rows: Vec<(usize, Vec<i64>)>| -> Result<Vec<(usize, i64)>> {
        rows.into_iter()
            .map(|(line, v)| match v[..] {
                [x] => Ok((line, x)),
                _ => Err(parse_err(path, line, "expected one integer")),
            })
            .collect()
    };
    let indicator = single(&ind_path, read_integers(&ind_path)?)?;
    let labels = single(&lab_path, read_integers(&lab_path)?)?;
    let graph_count = labels.len();

    // Global node -> (graph, local index).
    let mut local = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; graph_count];
    for &(line, g) in &indicator {
        if g < 1 || g as usize > graph_count {
            return Err(parse_err(
                &ind_path,
                line,
                format!("graph id {g} outside 1..={graph_count}"),
            ));
        }
        let g = g as usize - 1;
        local.push((g, sizes[g]));
        sizes[g] += 1;
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return Err(parse_err(&ind_path, 0, format!("graph {} has no nodes", g + 1)));
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_count];
    for (line, pair) in read_integers(&a_path)? {
        let [u, v] = pair[..] else {
            return Err(parse_err(&a_path, line, "expected 'u, v'"));
        };
        let node = |x: i64| -> Result<(usize, usize)> {
            if x < 1 || x as usize > local.len() {
                return Err(Error::Range {
                    path: a_path.clone(),
                    line,
                    msg: format!("node {x} outside 1..={}", local.len()),
                });
            }
            Ok(local[x as usize - 1])
        };
        let ((gu, lu), (gv, lv)) = (node(u)?, node(v)?);
        if gu != gv {
            return Err(parse_err(
                &a_path,
                line,
                format!("edge ({u}, {v}) joins graphs {} and {}", gu + 1, gv + 1),
            ));
        }
        // TUDataset files occasionally contain self-loops; they carry no
        // information for a simple graph.
        if lu != lv {
            edges[gu].push((lu, lv));
        }
    }

    let distinct: BTreeMap<i64, usize> = labels
        .iter()
        .map(|&(_, l)| l)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    edges
        .into_iter()
        .zip(sizes)
        .zip(labels)
        .map(|((e, n), (_, l))| Ok((ObservedGraph::from_edges(n, e)?, distinct[&l])))
        .collect()
}

fn format_row(out: &mut String, values: impl Iterator<Item = f64>) {
    let row: Vec<String> = values.map(|v| format!("{v:.16e}")).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

/// Writes `K <k>`, the measure, and the `K` value rows with 17 significant
/// digits, which round-trips every finite `f64`.
pub fn write_step_function(w: &StepFunction, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("K {}\n", w.k());
    format_row(&mut out, w.measure().iter().cloned());
    for row in w.values().rows() {
        format_row(&mut out, row.iter().cloned());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_step_function`] and validates it.
pub fn read_step_function(path: impl AsRef<Path>) -> Result<StepFunction> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let Some(&(first, header)) = lines.first() else {
        return Err(parse_err(path, 1, "missing 'K <k>' header"));
    };
    let k = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["K", k] => k
            .parse::<usize>()
            .map_err(|_| parse_err(path, first, format!("invalid partition count '{k}'")))?,
        _ => return Err(parse_err(path, first, "expected 'K <k>'")),
    };
    if k == 0 {
        return Err(Error::Validation("partition count must be positive".into()));
    }
    if lines.len() != k + 2 {
        return Err(Error::Validation(format!(
            "header declares K={k} but found {} data rows",
            lines.len().saturating_sub(2)
        )));
    }
    let parse_row = |&(line, text): &(usize, &str)| -> Result<Vec<f64>> {
        let row = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(path, line, format!("invalid number '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != k {
            return Err(Error::Validation(format!(
                "line {line} has {} entries, expected {k}",
                row.len()
            )));
        }
        Ok(row)
    };
    let measure = Array1::from(parse_row(&lines[1])?);
    let mut flat = Vec::with_capacity(k * k);
    for line in &lines[2..] {
        flat.extend(parse_row(line)?);
    }
    let values = Array2::from_shape_vec((k, k), flat).expect("row lengths checked");
    StepFunction::with_mass_tolerance(values, measure, READ_MASS_TOL)
}

/// Writes `matrix` as a binary 8-bit PGM where 1 renders black and 0 white.
pub fn write_heatmap(matrix: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (rows, cols) = matrix.dim();
    let mut bytes = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    bytes.reserve(rows * cols);
    for ((i, j), &v) in matrix.indexed_iter() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("heatmap entry ({i},{j}) = {v} outside [0,1]")));
        }
        bytes.push(255 - (255.0 * v).round() as u8);
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// One record of a results table.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub family: String,
    pub method: String,
    pub trial: usize,
    pub m: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub metric: String,
    pub value: Option<f64>,
    pub runtime_seconds: Option<f64>,
    pub seed: u64,
}

impl ResultRow {
    fn record(&self) -> [String; 10] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.family.clone(),
            self.method.clone(),
            self.trial.to_string(),
            self.m.to_string(),
            self.n_min.to_string(),
            self.n_max.to_string(),
            self.metric.clone(),
            opt(self.value),
            opt(self.runtime_seconds),
            self.seed.to_string(),
        ]
    }

    fn sort_key(&self) -> impl Ord + '_ {
        (
            &self.family,
            &self.method,
            self.trial,
            self.m,
            self.n_min,
            self.n_max,
            &self.metric,
            self.seed,
        )
    }
}

fn sorted(rows: &[ResultRow]) -> Vec<&ResultRow> {
    let mut rows: Vec<&ResultRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then_with(|| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
    });
    rows
}

/// Writes a header and `rows` in sorted order, replacing any existing file.
pub fn write_results_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(BufWriter::new(file), rows, true, path)
}

/// Appends `rows` to `path`, writing the header first if the file is new or
/// empty.
pub fn append_results_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    write_rows(BufWriter::new(file), rows, fresh, path)
}

fn write_rows<W: Write>(out: W, rows: &[ResultRow], header: bool, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        writer.write_record(RESULTS_HEADER)?;
    }
    for row in sorted(rows) {
        writer.write_record(row.record())?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Per-graph file name used by [`write_graph_dir`].
pub fn graph_file_name(index: usize) -> PathBuf {
    PathBuf::from(format!("graph_{index:04}.txt"))
}

/// Reads every `*.txt` edge list in `dir` in file-name order.
pub fn read_graph_dir(dir: impl AsRef<Path>) -> Result<Vec<ObservedGraph>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(read_edge_list).collect()
}
