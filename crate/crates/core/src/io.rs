//! File ingestion (matrices, vectors, node lists) and record emission in
//! CSV or JSON-lines form.
//!
//! Rational scalars are serialized as `p/q` (or plain integer) strings and
//! round-trip exactly; floats are serialized with Rust's shortest
//! round-trip formatting. Support indices are 1-based in emitted records.

use std::fs;
use std::io::Write;
use std::path::Path as FsPath;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::homotopy::{PathNode, Problem};
use crate::iterative::IterationState;
use crate::linalg::{Matrix, Vector};
use crate::ops;
use crate::scalar::Scalar;

/// One selectable per-record field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordField {
    Counter,
    Time,
    X,
    Misfit,
    Remainder,
    Penalty,
    Support,
    L1Norm,
    Discrepancy,
    SupportSize,
    FixedPointResidual,
}

impl FromStr for RecordField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "counter" => RecordField::Counter,
            "time" => RecordField::Time,
            "x" => RecordField::X,
            "misfit" => RecordField::Misfit,
            "remainder" => RecordField::Remainder,
            "penalty" => RecordField::Penalty,
            "support" => RecordField::Support,
            "l1norm" => RecordField::L1Norm,
            "discrepancy" => RecordField::Discrepancy,
            "support_size" => RecordField::SupportSize,
            "fixed_point_residual" => RecordField::FixedPointResidual,
            other => return Err(Error::Parse(format!("unknown record field {other:?}"))),
        })
    }
}

impl RecordField {
    pub fn name(&self) -> &'static str {
        match self {
            RecordField::Counter => "counter",
            RecordField::Time => "time",
            RecordField::X => "x",
            RecordField::Misfit => "misfit",
            RecordField::Remainder => "remainder",
            RecordField::Penalty => "penalty",
            RecordField::Support => "support",
            RecordField::L1Norm => "l1norm",
            RecordField::Discrepancy => "discrepancy",
            RecordField::SupportSize => "support_size",
            RecordField::FixedPointResidual => "fixed_point_residual",
        }
    }
}

/// Ordered selection of record fields.
#[derive(Clone, Debug)]
pub struct RecordSpec(pub Vec<RecordField>);

impl RecordSpec {
    /// Parse a comma-separated field list, e.g. `counter,x,penalty`.
    pub fn parse(text: &str) -> Result<Self> {
        let fields: Result<Vec<RecordField>> =
            text.split(',').map(RecordField::from_str).collect();
        Ok(RecordSpec(fields?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    JsonLines,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RecordFormat::Csv),
            "jsonl" => Ok(RecordFormat::JsonLines),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// One emitted record, assembled from a path node or an iterate. All
/// fields derive from already-computed state; nothing here multiplies by
/// the matrix again.
#[derive(Clone, Debug)]
pub struct RecordRow<S> {
    pub counter: usize,
    pub time: f64,
    pub x: Vector<S>,
    pub misfit: Vector<S>,
    pub remainder: Vector<S>,
    pub penalty: S,
    pub support: Vec<usize>,
    pub fixed_point_residual: f64,
}

fn fixed_point_residual<S: Scalar>(
    problem: &Problem<S>,
    x: &Vector<S>,
    remainder: &Vector<S>,
    lambda: &S,
) -> f64 {
    let thresholds = problem.weights().scale(lambda);
    let arg = x.add(remainder);
    let s = match ops::soft_threshold_vec(&arg, &thresholds) {
        Ok(s) => s,
        Err(_) => return f64::NAN,
    };
    let diff: f64 = x
        .iter()
        .zip(s.iter())
        .map(|(a, b)| {
            let d = a.to_f64() - b.to_f64();
            d * d
        })
        .sum::<f64>()
        .sqrt();
    let norm: f64 = x.iter().map(|v| v.to_f64() * v.to_f64()).sum::<f64>().sqrt();
    diff / norm.max(1.0)
}

impl<S: Scalar> RecordRow<S> {
    pub fn from_path_node(problem: &Problem<S>, node: &PathNode<S>) -> Self {
        RecordRow {
            counter: node.counter,
            time: node.elapsed,
            x: node.x.clone(),
            misfit: node.misfit.clone(),
            remainder: node.remainder.clone(),
            penalty: node.lambda.clone(),
            support: node.support.clone(),
            fixed_point_residual: fixed_point_residual(
                problem,
                &node.x,
                &node.remainder,
                &node.lambda,
            ),
        }
    }

    /// For iterates of the penalized schemes `lambda` is the threshold in
    /// use; the constrained schemes pass `None` and get the penalty value
    /// implied by the current remainder.
    pub fn from_iteration(
        problem: &Problem<S>,
        state: &IterationState<S>,
        lambda: Option<&S>,
    ) -> Self {
        let penalty = match lambda {
            Some(l) => l.clone(),
            None => crate::homotopy::lambda_of(problem, &state.remainder),
        };
        RecordRow {
            counter: state.counter,
            time: state.elapsed,
            x: state.x.clone(),
            misfit: state.misfit.clone(),
            remainder: state.remainder.clone(),
            penalty: penalty.clone(),
            support: state.x.support(),
            fixed_point_residual: fixed_point_residual(
                problem,
                &state.x,
                &state.remainder,
                &penalty,
            ),
        }
    }

    pub fn l1_norm(&self) -> S {
        self.x.l1_norm()
    }

    pub fn discrepancy(&self) -> S {
        self.misfit.norm_sq()
    }
}

fn scalar_json<S: Scalar>(v: &S) -> Value {
    if S::EXACT {
        Value::String(v.to_string())
    } else {
        json!(v.to_f64())
    }
}

fn vector_json<S: Scalar>(v: &Vector<S>) -> Value {
    Value::Array(v.iter().map(scalar_json).collect())
}

fn field_value<S: Scalar>(row: &RecordRow<S>, field: RecordField) -> Value {
    match field {
        RecordField::Counter => json!(row.counter),
        RecordField::Time => json!(row.time),
        RecordField::X => vector_json(&row.x),
        RecordField::Misfit => vector_json(&row.misfit),
        RecordField::Remainder => vector_json(&row.remainder),
        RecordField::Penalty => scalar_json(&row.penalty),
        RecordField::Support => {
            Value::Array(row.support.iter().map(|&i| json!(i + 1)).collect())
        }
        RecordField::L1Norm => scalar_json(&row.l1_norm()),
        RecordField::Discrepancy => scalar_json(&row.discrepancy()),
        RecordField::SupportSize => json!(row.support.len()),
        RecordField::FixedPointResidual => json!(row.fixed_point_residual),
    }
}

fn csv_cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

/// Write the selected fields of each record, one line per record. CSV has
/// no header row; vector fields occupy a single JSON-encoded cell.
pub fn write_records<S: Scalar, W: Write>(
    out: &mut W,
    spec: &RecordSpec,
    format: RecordFormat,
    rows: &[RecordRow<S>],
) -> Result<()> {
    match format {
        RecordFormat::Csv => {
            let mut wtr = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            for row in rows {
                let cells: Vec<String> = spec
                    .0
                    .iter()
                    .map(|&f| csv_cell(&field_value(row, f)))
                    .collect();
                wtr.write_record(&cells).map_err(io_like)?;
            }
            wtr.flush()?;
        }
        RecordFormat::JsonLines => {
            for row in rows {
                let mut obj = serde_json::Map::new();
                for &f in &spec.0 {
                    obj.insert(f.name().to_string(), field_value(row, f));
                }
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
    }
    Ok(())
}

fn io_like(e: csv::Error) -> Error {
    Error::Parse(format!("csv write failed: {e}"))
}

fn parse_tokens<S: Scalar>(tokens: &[&str]) -> Result<Vec<S>> {
    tokens.iter().map(|t| S::parse(t)).collect()
}

/// Read a dense matrix: by default CSV with one row per line, or a JSON
/// array of arrays for `.json` files (entries as numbers or strings).
pub fn read_matrix<S: Scalar>(path: &FsPath) -> Result<Matrix<S>> {
    let text = fs::read_to_string(path)?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let parsed: Value =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("bad json: {e}")))?;
        let rows = parsed
            .as_array()
            .ok_or_else(|| Error::Parse("matrix json must be an array of rows".into()))?;
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let cells = row
                .as_array()
                .ok_or_else(|| Error::Parse("matrix row must be an array".into()))?;
            let mut r = Vec::with_capacity(cells.len());
            for c in cells {
                r.push(json_scalar(c)?);
            }
            out.push(r);
        }
        return Matrix::from_rows(out);
    }
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        rows.push(parse_tokens(&tokens)?);
    }
    Matrix::from_rows(rows)
}

fn json_scalar<S: Scalar>(v: &Value) -> Result<S> {
    match v {
        Value::String(s) => S::parse(s),
        Value::Number(n) => S::parse(&n.to_string()),
        other => Err(Error::Parse(format!("bad scalar {other}"))),
    }
}

/// Read a vector: values separated by commas or newlines.
pub fn read_vector<S: Scalar>(path: &FsPath) -> Result<Vector<S>> {
    let text = fs::read_to_string(path)?;
    let tokens: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(Error::Parse("empty vector file".into()));
    }
    Ok(Vector::new(parse_tokens(&tokens)?))
}

/// Read a node list: each line holds the penalty value followed by the
/// components of x, comma separated.
pub fn read_path_file<S: Scalar>(path: &FsPath) -> Result<Vec<(S, Vector<S>)>> {
    let text = fs::read_to_string(path)?;
    let mut nodes = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        if tokens.len() < 2 {
            return Err(Error::Parse(format!(
                "node line needs a penalty and at least one component: {line:?}"
            )));
        }
        let values: Vec<S> = parse_tokens(&tokens)?;
        let mut it = values.into_iter();
        let lambda = it.next().expect("checked length");
        nodes.push((lambda, Vector::new(it.collect())));
    }
    if nodes.is_empty() {
        return Err(Error::Parse("empty node list".into()));
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::Rational;

    type Q = Rational;

    fn write_temp(content: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn matrix_csv_round_trip() {
        let f = write_temp("1,2\n-3/2,4\n", ".csv");
        let m: Matrix<Q> = read_matrix(f.path()).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(*m.get(1, 0), Q::ratio(-3, 2));
    }

    #[test]
    fn matrix_json_container() {
        let f = write_temp(r#"[["1/2", 2], [3, 4]]"#, ".json");
        let m: Matrix<Q> = read_matrix(f.path()).unwrap();
        assert_eq!(*m.get(0, 0), Q::ratio(1, 2));
        assert_eq!(*m.get(1, 1), Q::from_int(4));
    }

    #[test]
    fn rational_backend_rejects_decimals() {
        let f = write_temp("1.5,2\n3,4\n", ".csv");
        assert!(read_matrix::<Q>(f.path()).is_err());
        let g = write_temp("1.5,2\n3,4\n", ".csv");
        assert!(read_matrix::<f64>(g.path()).is_ok());
    }

    #[test]
    fn empty_matrix_is_a_parse_error() {
        let f = write_temp("", ".csv");
        assert!(read_matrix::<Q>(f.path()).is_err());
    }

    #[test]
    fn vector_and_path_files() {
        let f = write_temp("1, -2/3, 5\n", ".csv");
        let v: Vector<Q> = read_vector(f.path()).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[1], Q::ratio(-2, 3));

        let g = write_temp("8, 4, 0\n5, 7, -3\n", ".csv");
        let nodes: Vec<(Q, Vector<Q>)> = read_path_file(g.path()).unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0].0, Q::from_int(8));
        assert_eq!(nodes[1].1, Vector::from_ints(&[7, -3]));
    }

    #[test]
    fn record_spec_parsing() {
        let spec = RecordSpec::parse("counter,x,penalty").unwrap();
        assert_eq!(spec.0.len(), 3);
        assert!(RecordSpec::parse("counter,bogus").is_err());
    }

    #[test]
    fn csv_and_jsonl_emission() {
        let p: Problem<Q> =
            Problem::new(Matrix::identity(2), Vector::from_ints(&[3, -1]), None).unwrap();
        let node = crate::homotopy::initial_node(&p, &crate::Tolerance::exact()).unwrap();
        let row = RecordRow::from_path_node(&p, &node);
        let spec = RecordSpec::parse("counter,x,penalty,support,discrepancy").unwrap();

        let mut csv_out = Vec::new();
        write_records(&mut csv_out, &spec, RecordFormat::Csv, &[row.clone()]).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        assert_eq!(text.trim(), "0,\"[\"\"0\"\",\"\"0\"\"]\",3,[],10");

        let mut jl_out = Vec::new();
        write_records(&mut jl_out, &spec, RecordFormat::JsonLines, &[row]).unwrap();
        let parsed: Value = serde_json::from_str(String::from_utf8(jl_out).unwrap().trim()).unwrap();
        assert_eq!(parsed["penalty"], Value::String("3".into()));
        assert_eq!(parsed["counter"], json!(0));
    }

    #[test]
    fn emitted_fields_match_recomputation() {
        let p: Problem<Q> =
            Problem::new(Matrix::identity(3), Vector::from_ints(&[5, -2, 1]), None).unwrap();
        let (nodes, _) = crate::homotopy::find_minimizer_collect(
            &p,
            &crate::homotopy::StoppingRule::Penalty(num_traits::Zero::zero()),
            &crate::homotopy::SolveOptions::default(),
        )
        .unwrap();
        for node in &nodes {
            let row = RecordRow::from_path_node(&p, node);
            assert_eq!(row.remainder, ops::remainder(&p, &row.x).unwrap());
            assert_eq!(row.discrepancy(), node.discrepancy());
            assert!(row.fixed_point_residual < 1e-12);
        }
    }

    #[test]
    fn one_based_support_in_records() {
        let p: Problem<Q> =
            Problem::new(Matrix::identity(3), Vector::from_ints(&[0, 7, 0]), None).unwrap();
        let result = crate::homotopy::find_minimizer(
            &p,
            &crate::homotopy::StoppingRule::Penalty(num_traits::Zero::zero()),
            &crate::homotopy::SolveOptions::default(),
        )
        .unwrap();
        let row = RecordRow::from_path_node(&p, &result.final_node);
        let v = field_value(&row, RecordField::Support);
        assert_eq!(v, json!([2]));
    }
}
