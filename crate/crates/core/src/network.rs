//! Time series of directed binary networks and their edge-list text format.
//!
//! ```text
//! n=3 T=2
//! # labels: alice bob carol
//! 1 1 2
//! 2 3 1
//! ```
//!
//! Body lines are `t i j` (all 1-indexed) meaning `y_{i,j,t} = 1`. Unlisted
//! triples are zero. Blank lines and other `#` comments are ignored.
//!
//! In the API, times run `1..=T` and nodes are 0-indexed.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::model::{DyadCategory, DyadSeries};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSeries {
    n: usize,
    len: usize,
    // snapshot-major, then row-major n×n
    links: Vec<bool>,
    labels: Option<Vec<String>>,
}

impl NetworkSeries {
    /// All-empty series of `len` snapshots over `n` nodes.
    pub fn empty(n: usize, len: usize) -> Self {
        Self { n, len, links: vec![false; n * n * len], labels: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of snapshots `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<()> {
        if labels.len() != self.n {
            return Err(Error::dim(format!("{} labels for {} nodes", labels.len(), self.n)));
        }
        if labels.iter().any(|l| l.is_empty() || l.chars().any(char::is_whitespace)) {
            return Err(Error::invalid("node labels must be non-empty and contain no whitespace"));
        }
        self.labels = Some(labels);
        Ok(())
    }

    fn offset(&self, t: usize, i: usize, j: usize) -> usize {
        ((t - 1) * self.n + i) * self.n + j
    }

    /// `y_{i,j,t}` for `t` in `1..=T`.
    pub fn link(&self, t: usize, i: usize, j: usize) -> bool {
        self.links[self.offset(t, i, j)]
    }

    pub fn set_link(&mut self, t: usize, i: usize, j: usize, value: bool) -> Result<()> {
        if t == 0 || t > self.len {
            return Err(Error::Index(format!("time {t} outside 1..={}", self.len)));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::Index(format!("node pair ({i}, {j}) outside 0..{}", self.n)));
        }
        if i == j {
            if value {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            return Ok(());
        }
        let k = self.offset(t, i, j);
        self.links[k] = value;
        Ok(())
    }

    /// Number of directed links in snapshot `t`.
    pub fn links_at(&self, t: usize) -> usize {
        let start = self.offset(t, 0, 0);
        self.links[start..start + self.n * self.n].iter().filter(|&&y| y).count()
    }

    pub fn total_links(&self) -> usize {
        self.links.iter().filter(|&&y| y).count()
    }

    pub fn num_dyads(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    /// Canonical dyad ordering: `(0,1), (0,2), …, (1,2), …`.
    pub fn dyad_pairs(&self) -> Vec<(usize, usize)> {
        dyad_pairs(self.n)
    }

    pub fn dyad(&self, i: usize, j: usize) -> Result<DyadSeries> {
        if i >= j || j >= self.n {
            return Err(Error::Index(format!("dyad ({i}, {j}) invalid for n = {}", self.n)));
        }
        let cats = (1..=self.len)
            .map(|t| DyadCategory::from_links(self.link(t, i, j), self.link(t, j, i)))
            .collect();
        DyadSeries::new(i, j, cats)
    }

    /// Every dyad in canonical order.
    pub fn dyads(&self) -> Vec<DyadSeries> {
        self.dyad_pairs()
            .into_iter()
            .map(|(i, j)| self.dyad(i, j).expect("canonical pair is valid"))
            .collect()
    }

    /// The prefix `Y_1..Y_len`.
    pub fn truncate(&self, len: usize) -> Result<NetworkSeries> {
        if len == 0 || len > self.len {
            return Err(Error::Index(format!("prefix length {len} outside 1..={}", self.len)));
        }
        Ok(Self {
            n: self.n,
            len,
            links: self.links[..len * self.n * self.n].to_vec(),
            labels: self.labels.clone(),
        })
    }

    /// Off-diagonal entries of snapshot `t` as `(i, j, y)` in row-major order.
    pub fn off_diagonal(&self, t: usize) -> Vec<(usize, usize, bool)> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1));
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    out.push((i, j, self.link(t, i, j)));
                }
            }
        }
        out
    }
}

pub fn dyad_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut n = None;
    let mut len = None;
    for tok in line.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, format!("malformed header token {tok:?}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| parse_err(lineno, format!("header value {value:?} is not an integer")))?;
        let slot = match key {
            "n" => &mut n,
            "T" => &mut len,
            _ => return Err(parse_err(lineno, format!("unknown header key {key:?}"))),
        };
        if slot.replace(value).is_some() {
            return Err(parse_err(lineno, format!("header key {key:?} repeated")));
        }
    }
    match (n, len) {
        (Some(n), Some(len)) if n >= 1 && len >= 1 => Ok((n, len)),
        (Some(_), Some(_)) => Err(parse_err(lineno, "header requires n >= 1 and T >= 1")),
        _ => Err(parse_err(lineno, "header must be \"n=<int> T=<int>\"")),
    }
}

/// Parses the edge-list format.
pub fn parse_series<R: BufRead>(input: R) -> Result<NetworkSeries> {
    let mut series: Option<NetworkSeries> = None;
    let mut lineno = 0;
    for line in input.lines() {
        lineno += 1;
        let line = line.map_err(|e| parse_err(lineno, format!("read failed: {e}")))?;
        let trimmed = line.trim();
        let Some(s) = series.as_mut() else {
            if trimmed.is_empty() {
                continue;
            }
            let (n, len) = parse_header(trimmed, lineno)?;
            series = Some(NetworkSeries::empty(n, len));
            continue;
        };
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(rest) = comment.trim_start().strip_prefix("labels:") {
                let labels: Vec<String> = rest.split_whitespace().map(str::to_owned).collect();
                if s.labels.is_some() {
                    return Err(parse_err(lineno, "labels given twice"));
                }
                s.set_labels(labels).map_err(|e| parse_err(lineno, e.to_string()))?;
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(lineno, format!("expected \"t i j\", got {trimmed:?}")));
        }
        let mut nums = [0usize; 3];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| parse_err(lineno, format!("{f:?} is not a positive integer")))?;
        }
        let [t, i, j] = nums;
        if t == 0 || t > s.len {
            return Err(parse_err(lineno, format!("time {t} outside 1..={}", s.len)));
        }
        if i == 0 || i > s.n || j == 0 || j > s.n {
            return Err(parse_err(lineno, format!("node index outside 1..={}", s.n)));
        }
        if i == j {
            return Err(parse_err(lineno, format!("self-loop at node {i}")));
        }
        if s.link(t, i - 1, j - 1) {
            return Err(parse_err(lineno, format!("duplicate edge {t} {i} {j}")));
        }
        s.set_link(t, i - 1, j - 1, true).expect("bounds checked above");
    }
    series.ok_or_else(|| parse_err(lineno.max(1), "missing header"))
}

/// Writes the canonical form: header, optional labels, then edges sorted by
/// `(t, i, j)`.
pub fn write_series<W: Write>(series: &NetworkSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "n={} T={}", series.n, series.len)?;
    if let Some(labels) = &series.labels {
        writeln!(out, "# labels: {}", labels.join(" "))?;
    }
    for t in 1..=series.len {
        for i in 0..series.n {
            for j in 0..series.n {
                if series.link(t, i, j) {
                    writeln!(out, "{} {} {}", t, i + 1, j + 1)?;
                }
            }
        }
    }
    Ok(())
}

/// Reads a series file, transparently decompressing names ending in `.gz`.
pub fn read_series_file(path: &Path) -> Result<NetworkSeries> {
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_series(BufReader::new(reader))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<NetworkSeries> {
        parse_series(s.as_bytes())
    }

    fn write(s: &NetworkSeries) -> String {
        let mut buf = Vec::new();
        write_series(s, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn parses_minimal_file() {
        let s = parse("n=3 T=2\n1 1 2\n2 3 1\n").unwrap();
        assert_eq!((s.n(), s.len()), (3, 2));
        assert!(s.link(1, 0, 1));
        assert!(s.link(2, 2, 0));
        assert_eq!(s.total_links(), 2);
    }

    #[test]
    fn self_loop_names_line() {
        let err = parse("n=3 T=2\n1 1 2\n1 2 2\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, message: "self-loop at node 2".into() });
    }

    #[test]
    fn rejects_documented_malformations() {
        let cases = [
            ("n=3\n", 1),
            ("n=3 T=x\n", 1),
            ("nodes=3 T=2\n", 1),
            ("n=3 T=2\n1 4 2\n", 2),
            ("n=3 T=2\n1 0 2\n", 2),
            ("n=3 T=2\n3 1 2\n", 2),
            ("n=3 T=2\n0 1 2\n", 2),
            ("n=3 T=2\n1 1 2\n1 1 2\n", 3),
            ("n=3 T=2\n1 1\n", 2),
            ("n=3 T=2\n1 1 -2\n", 2),
        ];
        for (text, line) in cases {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_networks_write_header_only() {
        let s = NetworkSeries::empty(4, 3);
        assert_eq!(write(&s), "n=4 T=3\n");
    }

    #[test]
    fn one_edge_is_one_body_line() {
        let mut s = NetworkSeries::empty(4, 3);
        s.set_link(2, 3, 1, true).unwrap();
        assert_eq!(write(&s), "n=4 T=3\n2 4 2\n");
    }

    #[test]
    fn permuted_input_canonicalizes() {
        let a = parse("n=3 T=2\n2 3 1\n1 2 1\n1 1 3\n").unwrap();
        let b = parse("n=3 T=2\n1 1 3\n\n# note\n2 3 1\n1 2 1\n").unwrap();
        assert_eq!(write(&a), write(&b));
        assert_eq!(write(&a), "n=3 T=2\n1 1 3\n1 2 1\n2 3 1\n");
    }

    #[test]
    fn labels_round_trip() {
        let s = parse("n=2 T=1\n# labels: a b\n1 2 1\n").unwrap();
        assert_eq!(s.labels().unwrap(), ["a", "b"]);
        assert_eq!(write(&s), "n=2 T=1\n# labels: a b\n1 2 1\n");
        assert!(parse("n=2 T=1\n# labels: a\n").is_err());
    }

    #[test]
    fn dyad_extraction_uses_upper_triangle_convention() {
        let s = parse("n=3 T=3\n1 1 2\n2 2 1\n3 1 2\n3 2 1\n").unwrap();
        let d = s.dyad(0, 1).unwrap();
        assert_eq!(d.categories, vec![DyadCategory::C10, DyadCategory::C01, DyadCategory::C11]);
        assert_eq!(s.dyads().len(), 3);
        assert!(s.dyad(1, 0).is_err());
    }

    #[test]
    fn truncate_keeps_prefix() {
        let s = parse("n=2 T=3\n1 1 2\n3 2 1\n").unwrap();
        let p = s.truncate(2).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.total_links(), 1);
        assert!(s.truncate(0).is_err());
    }
}
