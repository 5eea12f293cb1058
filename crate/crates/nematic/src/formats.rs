//! Plain-text CSV formats.
//!
//! Field snapshots are `i,j,k,x,y,z,q1,q2,q3,q4,q5`, one row per node in
//! storage order (k fastest), preceded by `#` comment lines carrying the
//! grid and the coefficient basis. Floats are written in shortest
//! round-trip form, so a snapshot reloads bit for bit.

use std::fmt::Write as _;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use nematic_core::analysis::SphereMap;
use nematic_core::radial::RadialProfile;
use nematic_core::{GridSpec, QField, QTensor};

pub const SNAPSHOT_HEADER: &str = "i,j,k,x,y,z,q1,q2,q3,q4,q5";

const BASIS_NOTE: &str = "# basis: Q = q1 E1 + ... + q5 E5, E1 = diag(-1,-1,2)/sqrt6, \
E2 = diag(1,-1,0)/sqrt2, E3 = (xy+yx)/sqrt2, E4 = (xz+zx)/sqrt2, E5 = (yz+zy)/sqrt2";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        msg: msg.into(),
    }
}

/// Writes a field snapshot. `eps` is recorded in the header when given.
pub fn write_snapshot(path: &Path, field: &QField, eps: Option<f64>) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let g = field.grid();
    let c = g.center();
    writeln!(
        w,
        "# grid: n_cells={} half_width={} center={},{},{}",
        g.n_cells(),
        g.half_width(),
        c[0],
        c[1],
        c[2]
    )?;
    if let Some(e) = eps {
        writeln!(w, "# eps={e}")?;
    }
    writeln!(w, "{BASIS_NOTE}")?;
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    let mut line = String::with_capacity(160);
    for (m, q) in field.values().iter().enumerate() {
        let [i, j, k] = g.ijk(m);
        let x = g.position(m);
        line.clear();
        let _ = write!(line, "{i},{j},{k},{},{},{}", x[0], x[1], x[2]);
        for v in q.coeffs() {
            let _ = write!(line, ",{v}");
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// A reloaded snapshot: the field (outer layer Dirichlet) and the recorded ε.
#[derive(Debug)]
pub struct Snapshot {
    pub field: QField,
    pub eps: Option<f64>,
}

fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, FormatError> {
    let file = std::fs::File::open(path)?;
    let mut grid: Option<GridSpec> = None;
    let mut eps = None;
    let mut values: Vec<QTensor> = Vec::new();
    let mut saw_header = false;
    for (n, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("grid:") {
                let parse = |key: &str| {
                    header_value(rest, key).ok_or_else(|| malformed(lineno, format!("missing {key}")))
                };
                let n_cells: usize = parse("n_cells")?
                    .parse()
                    .map_err(|_| malformed(lineno, "bad n_cells"))?;
                let half_width: f64 = parse("half_width")?
                    .parse()
                    .map_err(|_| malformed(lineno, "bad half_width"))?;
                let center: Vec<f64> = parse("center")?
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|_| malformed(lineno, "bad center"))?;
                if center.len() != 3 {
                    return Err(malformed(lineno, "center needs three values"));
                }
                let g = GridSpec::new([center[0], center[1], center[2]], half_width, n_cells)
                    .map_err(|e| malformed(lineno, e.to_string()))?;
                values.reserve(g.len());
                grid = Some(g);
            } else if let Some(e) = header_value(comment, "eps") {
                eps = Some(e.parse().map_err(|_| malformed(lineno, "bad eps"))?);
            }
            continue;
        }
        if !saw_header {
            if line.trim() != SNAPSHOT_HEADER {
                return Err(malformed(lineno, "expected the snapshot column header"));
            }
            saw_header = true;
            continue;
        }
        let g = grid.as_ref().ok_or_else(|| malformed(lineno, "data before grid line"))?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(malformed(lineno, "expected 11 columns"));
        }
        let ijk: Vec<usize> = cols[..3]
            .iter()
            .map(|c| c.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| malformed(lineno, "bad index"))?;
        if g.index(ijk[0], ijk[1], ijk[2]) != values.len() || ijk.iter().any(|&c| c >= g.n_cells()) {
            return Err(malformed(lineno, "nodes out of storage order"));
        }
        let q: Vec<f64> = cols[6..]
            .iter()
            .map(|c| c.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| malformed(lineno, "bad coefficient"))?;
        values.push(QTensor::from_slice(&q));
    }
    let g = grid.ok_or_else(|| malformed(0, "missing grid line"))?;
    if values.len() != g.len() {
        return Err(malformed(0, format!("expected {} nodes, found {}", g.len(), values.len())));
    }
    let mask = (0..g.len()).map(|m| g.is_outer(m)).collect();
    let field = QField::from_parts(g, values, mask).map_err(|e| malformed(0, e.to_string()))?;
    Ok(Snapshot { field, eps })
}

pub fn write_profile<W: Write>(w: &mut W, profile: &RadialProfile) -> io::Result<()> {
    writeln!(w, "r,h")?;
    for (r, h) in profile.r().iter().zip(profile.h()) {
        writeln!(w, "{r},{h}")?;
    }
    Ok(())
}

pub fn write_director_map(path: &Path, map: &SphereMap) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "vertex_id,x,y,z,nx,ny,nz")?;
    for (v, (p, n)) in map.sphere.points(map.center, map.radius).zip(&map.directors).enumerate() {
        writeln!(w, "{v},{},{},{},{},{},{}", p[0], p[1], p[2], n[0], n[1], n[2])?;
    }
    w.flush()
}

/// Two-column table with the given header, e.g. `R,ball_ratio`.
pub fn write_table(path: &Path, header: &str, rows: &[(f64, f64)]) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for (a, b) in rows {
        writeln!(w, "{a},{b}")?;
    }
    w.flush()
}
