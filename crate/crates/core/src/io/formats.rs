//! Diagnostics CSV, scalar snapshots (grid CSV and legacy VTK) and mesh files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! reader here reproduces the written values bit for bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::fields::{BoundaryCondition, Domain, RectDomain, ScalarField};
use crate::mesh::MeshDomain;
use crate::timestepper::RunSink;

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: `{s}` is not a number")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: `{s}` is not a count")))
}

pub fn diagnostics_header() -> String {
    DiagnosticsRecord::COLUMNS.join(",")
}

pub fn diagnostics_line(r: &DiagnosticsRecord) -> String {
    r.values().iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", diagnostics_header())?;
    for r in records {
        writeln!(w, "{}", diagnostics_line(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == diagnostics_header() => {}
        other => {
            return Err(Error::Parse(format!(
                "{}: unexpected header {:?}",
                path.display(),
                other.unwrap_or("")
            )))
        }
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(Error::Parse(format!("{} line {}: expected 10 columns", path.display(), n + 2)));
        }
        let mut v = [0.0; 10];
        for (k, c) in cells.iter().enumerate() {
            v[k] = parse_f64(c, DiagnosticsRecord::COLUMNS[k])?;
        }
        out.push(DiagnosticsRecord::from_values(v));
    }
    Ok(out)
}

/// A scalar field at one instant.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub name: String,
    pub field: ScalarField,
}

impl PartialEq for Snapshot {
    fn eq(&self, other: &Self) -> bool {
        let same_domain = match (self.field.domain(), other.field.domain()) {
            (Domain::Rect(a), Domain::Rect(b)) => a == b,
            (Domain::Mesh(a), Domain::Mesh(b)) => a == b,
            _ => false,
        };
        self.t.to_bits() == other.t.to_bits()
            && self.name == other.name
            && same_domain
            && self.field.values().len() == other.field.values().len()
            && self
                .field
                .values()
                .iter()
                .zip(other.field.values())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

const GRID_MAGIC: &str = "# optmix grid snapshot";
const VTK_MAGIC: &str = "# vtk DataFile Version 3.0";

/// Writes `.csv` (rectangles) or legacy ASCII `.vtk` (meshes).
pub fn write_snapshot(path: &Path, s: &Snapshot) -> Result<()> {
    if s.name.is_empty() || s.name.chars().any(|c| c.is_whitespace()) {
        return Err(Error::param("name", "snapshot field names must be one nonempty word"));
    }
    let text = match s.field.domain() {
        Domain::Rect(r) => grid_text(r, s),
        Domain::Mesh(m) => vtk_text(m, s),
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn grid_text(r: &RectDomain, s: &Snapshot) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "{GRID_MAGIC}");
    let _ = writeln!(o, "# field {}", s.name);
    let _ = writeln!(o, "# t {}", num(s.t));
    let _ = writeln!(
        o,
        "# domain {} {} {} {} {} {} {}",
        num(r.x_min),
        num(r.x_max),
        num(r.y_min),
        num(r.y_max),
        r.nx,
        r.ny,
        r.bc.name()
    );
    for row in s.field.values().chunks(r.nx) {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        let _ = writeln!(o, "{}", cells.join(","));
    }
    o
}

fn vtk_text(m: &MeshDomain, s: &Snapshot) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "{VTK_MAGIC}");
    let _ = writeln!(o, "optmix {} t={}", s.name, num(s.t));
    let _ = writeln!(o, "ASCII");
    let _ = writeln!(o, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(o, "POINTS {} double", m.n_vertices());
    for p in m.vertices() {
        let _ = writeln!(o, "{} {} 0", num(p[0]), num(p[1]));
    }
    let nt = m.triangles().len();
    let _ = writeln!(o, "CELLS {} {}", nt, 4 * nt);
    for t in m.triangles() {
        let _ = writeln!(o, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(o, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(o, "5");
    }
    let _ = writeln!(o, "POINT_DATA {}", m.n_vertices());
    let _ = writeln!(o, "SCALARS {} double 1", s.name);
    let _ = writeln!(o, "LOOKUP_TABLE default");
    for &v in s.field.values() {
        let _ = writeln!(o, "{}", num(v));
    }
    o
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path)?;
    let err = |m: String| Error::Parse(format!("{}: {m}", path.display()));
    match text.lines().next() {
        Some(l) if l.trim() == GRID_MAGIC => parse_grid(&text).map_err(|e| err(e.to_string())),
        Some(l) if l.trim() == VTK_MAGIC => parse_vtk(&text).map_err(|e| err(e.to_string())),
        _ => Err(err("not a snapshot file".into())),
    }
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix("# ")).and_then(|l| l.strip_prefix(key)).map(str::trim).ok_or_else(|| {
        Error::Parse(format!("missing `{key}` header"))
    })
}

fn parse_grid(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines().skip(1);
    let name = header_value(lines.next(), "field")?.to_string();
    let t = parse_f64(header_value(lines.next(), "t")?, "t")?;
    let d: Vec<&str> = header_value(lines.next(), "domain")?.split_whitespace().collect();
    if d.len() != 7 {
        return Err(Error::Parse("domain header needs 7 entries".into()));
    }
    let r = RectDomain::new(
        parse_f64(d[0], "x_min")?,
        parse_f64(d[1], "x_max")?,
        parse_f64(d[2], "y_min")?,
        parse_f64(d[3], "y_max")?,
        parse_usize(d[4], "nx")?,
        parse_usize(d[5], "ny")?,
        d[6].parse::<BoundaryCondition>()?,
    )?;
    let mut values = Vec::with_capacity(r.dofs());
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let before = values.len();
        for c in line.split(',') {
            values.push(parse_f64(c, "value")?);
        }
        if values.len() - before != r.nx {
            return Err(Error::Parse(format!("row with {} values, expected {}", values.len() - before, r.nx)));
        }
    }
    let field = ScalarField::new(r, values)?;
    Ok(Snapshot { t, name, field })
}

fn parse_vtk(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines().skip(1).filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("file ends before {what}")));
    let title = next("title")?;
    let rest = title
        .strip_prefix("optmix ")
        .ok_or_else(|| Error::Parse("unrecognised title line".into()))?;
    let (name, t) = rest
        .rsplit_once(" t=")
        .ok_or_else(|| Error::Parse("title lacks the time".into()))?;
    let t = parse_f64(t, "t")?;
    if next("format")?.trim() != "ASCII" || next("dataset")?.trim() != "DATASET UNSTRUCTURED_GRID" {
        return Err(Error::Parse("expected an ASCII unstructured grid".into()));
    }
    let pts: Vec<&str> = next("POINTS")?.split_whitespace().collect();
    if pts.len() != 3 || pts[0] != "POINTS" {
        return Err(Error::Parse("bad POINTS line".into()));
    }
    let n = parse_usize(pts[1], "POINTS")?;
    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let c: Vec<&str> = next("point")?.split_whitespace().collect();
        if c.len() != 3 {
            return Err(Error::Parse("points need three coordinates".into()));
        }
        vertices.push([parse_f64(c[0], "x")?, parse_f64(c[1], "y")?]);
    }
    let cells: Vec<&str> = next("CELLS")?.split_whitespace().collect();
    if cells.len() != 3 || cells[0] != "CELLS" {
        return Err(Error::Parse("bad CELLS line".into()));
    }
    let m = parse_usize(cells[1], "CELLS")?;
    let mut triangles = Vec::with_capacity(m);
    for _ in 0..m {
        let c: Vec<&str> = next("cell")?.split_whitespace().collect();
        if c.len() != 4 || c[0] != "3" {
            return Err(Error::Parse("only triangle cells are supported".into()));
        }
        triangles.push([parse_usize(c[1], "cell")?, parse_usize(c[2], "cell")?, parse_usize(c[3], "cell")?]);
    }
    if next("CELL_TYPES")?.split_whitespace().next() != Some("CELL_TYPES") {
        return Err(Error::Parse("bad CELL_TYPES line".into()));
    }
    for _ in 0..m {
        if next("cell type")?.trim() != "5" {
            return Err(Error::Parse("only triangle cells are supported".into()));
        }
    }
    next("POINT_DATA")?;
    let scal: Vec<&str> = next("SCALARS")?.split_whitespace().collect();
    if scal.len() < 2 || scal[0] != "SCALARS" || scal[1] != name {
        return Err(Error::Parse("SCALARS name does not match the title".into()));
    }
    next("LOOKUP_TABLE")?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(parse_f64(next("value")?, "value")?);
    }
    let mesh = Arc::new(MeshDomain::new(vertices, triangles)?);
    Ok(Snapshot {
        t,
        name: name.to_string(),
        field: ScalarField::new(mesh, values)?,
    })
}

/// Plain-text mesh: `vertices N` followed by `N` lines `x y`, then
/// `triangles M` and `M` lines `a b c` (counter-clockwise, 0-based).
/// Optional `b a b` lines list boundary edges; `#` starts a comment.
pub fn write_mesh(path: &Path, m: &MeshDomain) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "vertices {}", m.n_vertices())?;
    for p in m.vertices() {
        writeln!(w, "{} {}", num(p[0]), num(p[1]))?;
    }
    writeln!(w, "triangles {}", m.triangles().len())?;
    for t in m.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in m.boundary_edges() {
        writeln!(w, "b {} {}", e.a, e.b)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<MeshDomain> {
    let f = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for l in f.lines() {
        let l = l?;
        let l = l.split('#').next().unwrap_or("").trim().to_string();
        if !l.is_empty() {
            lines.push(l);
        }
    }
    let at = |i: usize| -> Result<&str> {
        lines
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("{}: unexpected end of file", path.display())))
    };
    let count = |line: &str, key: &str| -> Result<usize> {
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| Error::Parse(format!("{}: expected `{key} N`", path.display())))?;
        parse_usize(rest, key)
    };
    let nv = count(at(0)?, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let c: Vec<&str> = at(1 + i)?.split_whitespace().collect();
        if c.len() != 2 {
            return Err(Error::Parse(format!("{}: vertex {i} needs two coordinates", path.display())));
        }
        vertices.push([parse_f64(c[0], "x")?, parse_f64(c[1], "y")?]);
    }
    let nt = count(at(1 + nv)?, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for i in 0..nt {
        let c: Vec<&str> = at(2 + nv + i)?.split_whitespace().collect();
        if c.len() != 3 {
            return Err(Error::Parse(format!("{}: triangle {i} needs three indices", path.display())));
        }
        triangles.push([parse_usize(c[0], "a")?, parse_usize(c[1], "b")?, parse_usize(c[2], "c")?]);
    }
    let mut boundary = Vec::new();
    for l in &lines[2 + nv + nt..] {
        let c: Vec<&str> = l.split_whitespace().collect();
        if c.len() != 3 || c[0] != "b" {
            return Err(Error::Parse(format!("{}: unexpected line `{l}`", path.display())));
        }
        boundary.push([parse_usize(c[1], "edge")?, parse_usize(c[2], "edge")?]);
    }
    if boundary.is_empty() {
        MeshDomain::new(vertices, triangles)
    } else {
        MeshDomain::with_boundary(vertices, triangles, &boundary)
    }
}

/// Streams records to `diagnostics.csv` (flushed per record) and snapshots
/// to `snapshots/` under an output directory.
pub struct FileSink {
    dir: PathBuf,
    csv: BufWriter<File>,
    written: Vec<PathBuf>,
}

impl FileSink {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(csv, "{}", diagnostics_header())?;
        csv.flush()?;
        Ok(FileSink {
            dir: dir.to_path_buf(),
            csv,
            written: Vec::new(),
        })
    }

    /// Snapshot files written so far.
    pub fn snapshot_paths(&self) -> &[PathBuf] {
        &self.written
    }
}

impl RunSink for FileSink {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.csv, "{}", diagnostics_line(rec))?;
        self.csv.flush()?;
        Ok(())
    }

    fn snapshot(&mut self, t: f64, theta: &ScalarField) -> Result<()> {
        let sub = self.dir.join("snapshots");
        std::fs::create_dir_all(&sub)?;
        let ext = match theta.domain() {
            Domain::Rect(_) => "csv",
            Domain::Mesh(_) => "vtk",
        };
        let path = sub.join(format!("theta_t{t:.6}.{ext}"));
        write_snapshot(
            &path,
            &Snapshot {
                t,
                name: "theta".into(),
                field: theta.clone(),
            },
        )?;
        self.written.push(path);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{generate_mesh, MeshShape};

    fn sample_record(t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord::from_values([t, 0.1 / 3.0, 1e-300, 2.0, 1.0 / 7.0, 4.0, 5.5, -1e-17, 0.0, 3.0e8])
    }

    #[test]
    fn diagnostics_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let recs: Vec<_> = (0..4).map(|k| sample_record(0.01 * k as f64)).collect();
        write_diagnostics(&p, &recs).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,mix_norm,mix_norm_normalized,l2,linf,energy,enstrophy,instantaneous_rate,lower_bound,gamma"
        );
        assert_eq!(read_diagnostics(&p).unwrap(), recs);
    }

    #[test]
    fn grid_snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for bc in [BoundaryCondition::NoFlux, BoundaryCondition::Periodic] {
            let r = RectDomain::new(-1.0, 2.0, 0.5, 1.0 / 3.0 + 1.0, 11, 9, bc).unwrap();
            let f = ScalarField::from_fn(r, |x, y| (x * 1.7).sin() * y.exp() / 3.0);
            let s = Snapshot {
                t: 0.1 + 0.2,
                name: "theta".into(),
                field: f,
            };
            let p = dir.path().join("s.csv");
            write_snapshot(&p, &s).unwrap();
            assert_eq!(read_snapshot(&p).unwrap(), s);
        }
    }

    #[test]
    fn vtk_snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Arc::new(generate_mesh(MeshShape::Annulus, 0.3).unwrap());
        let f = ScalarField::from_fn(m.clone(), |x, y| (x * y).cos() / 7.0);
        let s = Snapshot {
            t: 1.0 / 3.0,
            name: "phi".into(),
            field: f,
        };
        let p = dir.path().join("s.vtk");
        write_snapshot(&p, &s).unwrap();
        assert_eq!(read_snapshot(&p).unwrap(), s);
        assert!(std::fs::read_to_string(&p).unwrap().contains("CELL_TYPES"));
    }

    #[test]
    fn mesh_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_mesh(MeshShape::Lshape, 0.4).unwrap();
        let p = dir.path().join("l.mesh");
        write_mesh(&p, &m).unwrap();
        assert_eq!(read_mesh(&p).unwrap(), m);
        std::fs::write(&p, "vertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2 # one\n").unwrap();
        assert!((read_mesh(&p).unwrap().area() - 0.5).abs() < 1e-15);
        std::fs::write(&p, "vertices 3\n0 0\n1 0\n").unwrap();
        assert!(matches!(read_mesh(&p), Err(Error::Parse(_))));
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "hello\n").unwrap();
        assert!(read_snapshot(&p).is_err());
        assert!(read_diagnostics(&p).is_err());
    }
}
