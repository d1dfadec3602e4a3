//! Node-field CSV files: one `#` header line naming the columns, then one
//! row per grid node in storage order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{DeformError, Result};
use crate::mesh::DomainGrid;

const AXES: [&str; 3] = ["x", "y", "z"];

/// Write coordinates followed by the given columns.
pub fn write_node_csv(path: &Path, grid: &DomainGrid, columns: &[(&str, &[f64])]) -> Result<()> {
    for (name, c) in columns {
        if c.len() != grid.len() {
            return Err(DeformError::Config(format!("column {name} has {} values for {} nodes", c.len(), grid.len())));
        }
    }
    let mut out = String::new();
    let mut head: Vec<&str> = AXES[..grid.dim].to_vec();
    head.extend(columns.iter().map(|(n, _)| *n));
    out.push_str("# ");
    out.push_str(&head.join(","));
    out.push('\n');
    for p in 0..grid.len() {
        let x = grid.coord(p);
        let mut row: Vec<String> = x[..grid.dim].iter().map(|v| format!("{v:.17e}")).collect();
        row.extend(columns.iter().map(|(_, c)| format!("{:.17e}", c[p])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

/// Generic table writer with a `#` header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = format!("# {}\n", header.join(","));
    for r in rows {
        out.push_str(&r.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a table written by [`write_table`] or [`write_node_csv`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let head = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| DeformError::Config(format!("{}: missing '#' header", path.display())))?;
    let names: Vec<String> = head.trim().split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (k, l) in lines.enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let r: std::result::Result<Vec<f64>, _> = l.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let r = r.map_err(|e| DeformError::Config(format!("{} line {}: {e}", path.display(), k + 2)))?;
        if r.len() != names.len() {
            return Err(DeformError::Config(format!("{} line {}: expected {} columns", path.display(), k + 2, names.len())));
        }
        rows.push(r);
    }
    Ok((names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_csv_roundtrip() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let f = g.sample(|x| x[0] * 3.0 - x[1]);
        let dir = std::env::temp_dir().join(format!("deform-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        write_node_csv(&path, &g, &[("f", &f)]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 1);
        let (names, rows) = read_table(&path).unwrap();
        assert_eq!(names, vec!["x", "y", "f"]);
        assert_eq!(rows.len(), g.len());
        for (p, r) in rows.iter().enumerate() {
            assert_eq!(r[2], f[p]);
        }
        fs::remove_dir_all(dir).ok();
    }
}
