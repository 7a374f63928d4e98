//! CSV tables. Nodes are written 1-indexed; floats use the shortest
//! representation that round-trips.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use netfuse::model::{Coef, DyadPaths, ThetaTriple};
use netfuse::network::dyad_pairs;
use netfuse::select::{PredictionMatrix, RocCurve};

use crate::CliError;

fn data_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}:{line}: {msg}", path.display()))
}

/// `from,to,t,theta1,theta2,theta3` for `t = 0..=T`.
pub fn paths_csv(pairs: &[(usize, usize)], paths: &[DyadPaths]) -> String {
    let mut s = String::from("from,to,t,theta1,theta2,theta3\n");
    for (&(i, j), p) in pairs.iter().zip(paths) {
        for t in 0..=p.len() {
            let th = p.at(t);
            writeln!(s, "{},{},{t},{},{},{}", i + 1, j + 1, th.theta1, th.theta2, th.theta3).unwrap();
        }
    }
    s
}

fn fields<'a>(line: &'a str, want: usize, path: &Path, lineno: usize) -> Result<Vec<&'a str>, CliError> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != want {
        return Err(data_err(path, lineno, format!("expected {want} fields, found {}", f.len())));
    }
    Ok(f)
}

fn num<T: std::str::FromStr>(s: &str, path: &Path, lineno: usize) -> Result<T, CliError> {
    s.parse().map_err(|_| data_err(path, lineno, format!("bad number {s:?}")))
}

/// Reads [`paths_csv`] output back; returns the node count and one path set per
/// canonical dyad.
pub fn read_paths_csv(path: &Path) -> Result<(usize, Vec<DyadPaths>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: BTreeMap<(usize, usize), Vec<(usize, [f64; 3])>> = BTreeMap::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(line, 6, path, k + 1)?;
        let (i, j, t): (usize, usize, usize) = (num(f[0], path, k + 1)?, num(f[1], path, k + 1)?, num(f[2], path, k + 1)?);
        if i == 0 || j <= i {
            return Err(data_err(path, k + 1, "dyads must be written as from < to, 1-indexed"));
        }
        let th = [num(f[3], path, k + 1)?, num(f[4], path, k + 1)?, num(f[5], path, k + 1)?];
        rows.entry((i - 1, j - 1)).or_default().push((t, th));
    }
    let n = rows.keys().map(|&(_, j)| j + 1).max().ok_or_else(|| CliError::Data(format!("{} has no rows", path.display())))?;
    let pairs = dyad_pairs(n);
    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let mut r = rows.remove(&pair).ok_or_else(|| CliError::Data(format!("{}: dyad {:?} missing", path.display(), (pair.0 + 1, pair.1 + 1))))?;
        r.sort_by_key(|x| x.0);
        if r.iter().enumerate().any(|(k, x)| x.0 != k) {
            return Err(CliError::Data(format!("{}: times for dyad {:?} are not 0..=T", path.display(), (pair.0 + 1, pair.1 + 1))));
        }
        let len = r.len() - 1;
        let mut p = DyadPaths::constant(ThetaTriple::from_array(r[0].1), len);
        for c in Coef::ALL {
            for t in 1..=len {
                p.path_mut(c).free_mut()[t - 1] = r[t].1[c.index()];
            }
        }
        out.push(p);
    }
    if let Some(len) = out.first().map(DyadPaths::len) {
        if out.iter().any(|p| p.len() != len) {
            return Err(CliError::Data(format!("{}: dyads have different lengths", path.display())));
        }
    }
    Ok((n, out))
}

/// `from,to,prob` over off-diagonal cells in row-major order.
pub fn predictions_csv(m: &PredictionMatrix) -> String {
    let mut s = String::from("from,to,prob\n");
    for (i, j, p) in m.entries() {
        writeln!(s, "{},{},{p}", i + 1, j + 1).unwrap();
    }
    s
}

pub fn read_predictions_csv(path: &Path) -> Result<PredictionMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(line, 3, path, k + 1)?;
        let (i, j): (usize, usize) = (num(f[0], path, k + 1)?, num(f[1], path, k + 1)?);
        if i == 0 || j == 0 || i == j {
            return Err(data_err(path, k + 1, "nodes are 1-indexed and distinct"));
        }
        let p: f64 = num(f[2], path, k + 1)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(data_err(path, k + 1, format!("probability {p} outside [0, 1]")));
        }
        if cells.insert((i - 1, j - 1), p).is_some() {
            return Err(data_err(path, k + 1, "duplicate cell"));
        }
    }
    let n = cells.keys().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    let per: Result<Vec<(f64, f64)>, CliError> = dyad_pairs(n)
        .into_iter()
        .map(|(i, j)| match (cells.get(&(i, j)), cells.get(&(j, i))) {
            (Some(&a), Some(&b)) => Ok((a, b)),
            _ => Err(CliError::Data(format!("{}: missing cell for dyad ({}, {})", path.display(), i + 1, j + 1))),
        })
        .collect();
    PredictionMatrix::from_dyads(n, &per?).map_err(CliError::from)
}

/// `threshold,fpr,tpr`; the opening point has threshold `inf`.
pub fn roc_csv(curve: &RocCurve) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        writeln!(s, "{},{},{}", p.threshold, p.fpr, p.tpr).unwrap();
    }
    s
}

/// `t,fraction` for `t = 2..=T`.
pub fn changepoints_csv(series: &[f64]) -> String {
    let mut s = String::from("t,fraction\n");
    for (k, v) in series.iter().enumerate() {
        writeln!(s, "{},{v}", k + 2).unwrap();
    }
    s
}
