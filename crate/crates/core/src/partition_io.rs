//! Plain-text partition files: a `# k=<k> n=<N>` header, then one
//! `point_index,cluster_id` line per point in index order. Cluster ids are
//! positions in the partition's cluster list.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Dataset, Partition};

pub fn render_partition(partition: &Partition) -> String {
    let mut out = format!("# k={} n={}\n", partition.k(), partition.n_points());
    for (i, c) in partition.assignments().iter().enumerate() {
        writeln!(out, "{i},{c}").expect("writing to a String");
    }
    out
}

pub fn write_partition(path: &Path, partition: &Partition) -> Result<()> {
    std::fs::write(path, render_partition(partition)).map_err(|e| Error::io(path, e))
}

/// Parses a partition file into per-point cluster ids, checking the header
/// counts and that every point appears exactly once, in order.
pub fn parse_partition(text: &str) -> Result<Vec<usize>> {
    let bad = |msg: String| Error::InvalidPartition(msg);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty partition file".into()))?;
    let mut k = None;
    let mut n = None;
    for field in header
        .strip_prefix('#')
        .ok_or_else(|| bad(format!("bad header '{header}'")))?
        .split_whitespace()
    {
        match field.split_once('=') {
            Some(("k", v)) => k = v.parse::<usize>().ok(),
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            _ => return Err(bad(format!("bad header field '{field}'"))),
        }
    }
    let (k, n) = k.zip(n).ok_or_else(|| bad(format!("header '{header}' lacks k or n")))?;

    let mut ids = Vec::with_capacity(n);
    for (lineno, line) in lines.enumerate().map(|(i, l)| (i + 2, l)) {
        if line.trim().is_empty() {
            continue;
        }
        let (p, c) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("line {lineno}: expected 'point,cluster'")))?;
        let p: usize = p.trim().parse().map_err(|_| bad(format!("line {lineno}: bad point index")))?;
        let c: usize = c.trim().parse().map_err(|_| bad(format!("line {lineno}: bad cluster id")))?;
        if p != ids.len() {
            return Err(bad(format!("line {lineno}: point {p} out of order")));
        }
        if c >= k {
            return Err(bad(format!("line {lineno}: cluster {c} not below k={k}")));
        }
        ids.push(c);
    }
    if ids.len() != n {
        return Err(bad(format!("header says n={n}, found {} points", ids.len())));
    }
    let mut used = vec![false; k];
    ids.iter().for_each(|&c| used[c] = true);
    if let Some(c) = used.iter().position(|u| !u) {
        return Err(bad(format!("cluster {c} has no points")));
    }
    Ok(ids)
}

pub fn read_partition(path: &Path, dataset: &Dataset) -> Result<Partition> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ids = parse_partition(&text)?;
    Partition::from_assignments(&ids, dataset)
}
