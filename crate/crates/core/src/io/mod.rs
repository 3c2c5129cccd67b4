//! File formats: native text formats for meshes and slabs, legacy VTK export, CSV time series.
//!
//! All writers are deterministic. Floats are written with Rust's shortest round-trip
//! representation, so reading a file back reproduces every coordinate bit for bit.

mod config;

pub use config::{parse_config, parse_config_str, MeshSource, OutputOptions, ParsedConfig};

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::coupling::StepRecord;
use crate::extrude::{Column, SpaceTimeSlab, SpaceTimeTet};
use crate::geometry::Point;
use crate::mesh::{Annulus, AnnulusQuad, Layer, Region, RingKind, RingOrdering, SpatialMesh, Triangle, VertexId};

pub const MESH_MAGIC: &str = "STMESH";
pub const SLAB_MAGIC: &str = "STSLAB";
pub const FORMAT_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "t,d,ddot,theta,thetadot,Fy,M,outer_iters,swapped";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at byte {offset} (line {line}): {message}")]
    Parse { offset: usize, line: usize, message: String },
    #[error("unsupported {kind} version {found}, expected {FORMAT_VERSION}")]
    UnsupportedVersion { kind: &'static str, found: String },
    #[error("refusing to write an empty slab")]
    EmptySlab,
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
}

// ---------------------------------------------------------------------------------------
// Line reader with byte offsets.

struct Lines<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

struct Line<'a> {
    offset: usize,
    number: usize,
    text: &'a str,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { text, pos: 0, line: 0 }
    }

    fn err<T>(&self, offset: usize, line: usize, message: impl Into<String>) -> Result<T, IoError> {
        Err(IoError::Parse { offset, line, message: message.into() })
    }

    fn next(&mut self) -> Result<Line<'a>, IoError> {
        loop {
            if self.pos >= self.text.len() {
                return self.err(self.text.len(), self.line + 1, "unexpected end of file");
            }
            let rest = &self.text[self.pos..];
            let (body, adv) = match rest.find('\n') {
                Some(i) => (&rest[..i], i + 1),
                None => (rest, rest.len()),
            };
            let offset = self.pos;
            self.pos += adv;
            self.line += 1;
            let t = body.trim_end_matches('\r');
            if t.trim().is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Line { offset, number: self.line, text: t });
        }
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    fn keyed(&mut self, key: &str) -> Result<(Line<'a>, Vec<&'a str>), IoError> {
        let l = self.next()?;
        let mut f = l.text.split_whitespace();
        if f.next() != Some(key) {
            return self.err(l.offset, l.number, format!("expected `{key}`, found `{}`", l.text));
        }
        let rest = f.collect();
        Ok((l, rest))
    }

    fn fields(&mut self, n: usize) -> Result<(Line<'a>, Vec<&'a str>), IoError> {
        let l = self.next()?;
        let f: Vec<&str> = l.text.split_whitespace().collect();
        if f.len() != n {
            return self.err(l.offset, l.number, format!("expected {n} fields, found {}", f.len()));
        }
        Ok((l, f))
    }
}

fn parse_num<T: std::str::FromStr>(l: &Line, s: &str) -> Result<T, IoError> {
    s.parse().map_err(|_| IoError::Parse { offset: l.offset, line: l.number, message: format!("bad number `{s}`") })
}

fn parse_all<T: std::str::FromStr>(l: &Line, f: &[&str]) -> Result<Vec<T>, IoError> {
    f.iter().map(|s| parse_num(l, s)).collect()
}

fn one<T: std::str::FromStr>(l: &Line, f: &[&str]) -> Result<T, IoError> {
    if f.len() != 1 {
        return Err(IoError::Parse { offset: l.offset, line: l.number, message: format!("expected one value, found {}", f.len()) });
    }
    parse_num(l, f[0])
}

fn header(lines: &mut Lines, magic: &'static str) -> Result<(), IoError> {
    let l = lines.next()?;
    let f: Vec<&str> = l.text.split_whitespace().collect();
    if f.first() != Some(&magic) || f.len() != 2 {
        return lines.err(l.offset, l.number, format!("expected `{magic} {FORMAT_VERSION}` header"));
    }
    if f[1] != FORMAT_VERSION.to_string() {
        return Err(IoError::UnsupportedVersion { kind: magic, found: f[1].to_string() });
    }
    Ok(())
}

fn region_of(l: &Line, s: &str) -> Result<Region, IoError> {
    Region::parse(s).ok_or_else(|| IoError::Parse { offset: l.offset, line: l.number, message: format!("unknown region `{s}`") })
}

fn join_ids(ids: &[VertexId]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn layer_str(l: Layer) -> &'static str {
    match l {
        Layer::Buffer => "buffer",
        Layer::Sliding => "sliding",
    }
}

// ---------------------------------------------------------------------------------------
// Native mesh.

pub fn mesh_to_string(m: &SpatialMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MESH_MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(s, "TIME {:?}", m.time);
    let _ = writeln!(s, "ID_BASE {}", m.id_base);
    let _ = writeln!(s, "CENTER {:?} {:?}", m.rotation_center.x, m.rotation_center.y);
    let _ = writeln!(s, "VERTICES {}", m.n_vertices());
    for (i, p) in m.positions.iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?}", m.id_base + i, p.x, p.y);
    }
    let _ = writeln!(s, "TRIANGLES {}", m.triangles.len());
    for t in &m.triangles {
        let _ = writeln!(s, "{} {} {} {}", t.v[0], t.v[1], t.v[2], t.region.as_str());
    }
    let _ = writeln!(s, "QUADS {}", m.quads.len());
    for q in &m.quads {
        let _ = writeln!(s, "{} {} {} {} {}", q.n[0], q.n[1], q.n[2], q.n[3], layer_str(q.layer));
    }
    match &m.annulus {
        Some(a) => {
            let _ = writeln!(s, "RINGS {}", a.n_quads());
            let _ = writeln!(s, "inner {}", join_ids(&a.inner.ids));
            let _ = writeln!(s, "middle {}", join_ids(&a.middle));
            let _ = writeln!(s, "outer {}", join_ids(&a.outer.ids));
            let _ = writeln!(s, "SLIDING_OFFSET {}", a.sliding_offset);
        }
        None => {
            let _ = writeln!(s, "RINGS 0");
        }
    }
    match &m.body {
        Some(b) => {
            let _ = writeln!(s, "BODY {} {}", b.len(), join_ids(b));
        }
        None => {
            let _ = writeln!(s, "BODY 0");
        }
    }
    s.push_str("END\n");
    s
}

fn ring_line(lines: &mut Lines, name: &str, n: usize) -> Result<Vec<VertexId>, IoError> {
    let (l, f) = lines.keyed(name)?;
    if f.len() != n {
        return lines.err(l.offset, l.number, format!("ring `{name}` needs {n} ids, found {}", f.len()));
    }
    parse_all(&l, &f)
}

fn expect_end(lines: &mut Lines) -> Result<(), IoError> {
    let (l, f) = lines.keyed("END")?;
    if !f.is_empty() {
        return lines.err(l.offset, l.number, "trailing fields after END");
    }
    Ok(())
}

pub fn mesh_from_str(text: &str) -> Result<SpatialMesh, IoError> {
    let mut lines = Lines::new(text);
    header(&mut lines, MESH_MAGIC)?;
    let (l, f) = lines.keyed("TIME")?;
    let time: f64 = one(&l, &f)?;
    let (l, f) = lines.keyed("ID_BASE")?;
    let id_base: usize = one(&l, &f)?;
    let (l, f) = lines.keyed("CENTER")?;
    let c: Vec<f64> = parse_all(&l, &f)?;
    if c.len() != 2 {
        return lines.err(l.offset, l.number, "CENTER needs two coordinates");
    }
    let (l, f) = lines.keyed("VERTICES")?;
    let nv: usize = one(&l, &f)?;
    let mut positions = Vec::with_capacity(nv);
    for i in 0..nv {
        let (l, f) = lines.fields(3)?;
        let id: usize = parse_num(&l, f[0])?;
        if id != id_base + i {
            return lines.err(l.offset, l.number, format!("vertex id {id} out of sequence, expected {}", id_base + i));
        }
        positions.push(Point::new(parse_num(&l, f[1])?, parse_num(&l, f[2])?));
    }
    let in_range = |l: &Line, ids: &[usize]| -> Result<(), IoError> {
        match ids.iter().find(|&&i| i < id_base || i >= id_base + nv) {
            Some(i) => Err(IoError::Parse { offset: l.offset, line: l.number, message: format!("vertex {i} not declared") }),
            None => Ok(()),
        }
    };
    let (l, f) = lines.keyed("TRIANGLES")?;
    let nt: usize = one(&l, &f)?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (l, f) = lines.fields(4)?;
        let v: Vec<usize> = parse_all(&l, &f[..3])?;
        in_range(&l, &v)?;
        triangles.push(Triangle { v: [v[0], v[1], v[2]], region: region_of(&l, f[3])? });
    }
    let (l, f) = lines.keyed("QUADS")?;
    let nq: usize = one(&l, &f)?;
    let mut quads = Vec::with_capacity(nq);
    for _ in 0..nq {
        let (l, f) = lines.fields(5)?;
        let v: Vec<usize> = parse_all(&l, &f[..4])?;
        in_range(&l, &v)?;
        let layer = match f[4] {
            "buffer" => Layer::Buffer,
            "sliding" => Layer::Sliding,
            other => return lines.err(l.offset, l.number, format!("unknown layer `{other}`")),
        };
        quads.push(AnnulusQuad { n: [v[0], v[1], v[2], v[3]], layer });
    }
    let (l, f) = lines.keyed("RINGS")?;
    let nr: usize = one(&l, &f)?;
    let annulus = if nr == 0 {
        None
    } else {
        let inner = ring_line(&mut lines, "inner", nr)?;
        let middle = ring_line(&mut lines, "middle", nr)?;
        let outer = ring_line(&mut lines, "outer", nr)?;
        let (l, f) = lines.keyed("SLIDING_OFFSET")?;
        let sliding_offset: i64 = one(&l, &f)?;
        Some(Annulus {
            inner: RingOrdering { ring: RingKind::InnerCircle, ids: inner },
            middle,
            outer: RingOrdering { ring: RingKind::OuterCircle, ids: outer },
            sliding_offset,
        })
    };
    let (l, f) = lines.keyed("BODY")?;
    if f.is_empty() {
        return lines.err(l.offset, l.number, "BODY needs a count");
    }
    let nb: usize = parse_num(&l, f[0])?;
    if f.len() != nb + 1 {
        return lines.err(l.offset, l.number, format!("BODY declares {nb} ids, found {}", f.len() - 1));
    }
    let body = if nb == 0 {
        None
    } else {
        let ids: Vec<usize> = parse_all(&l, &f[1..])?;
        in_range(&l, &ids)?;
        Some(ids)
    };
    expect_end(&mut lines)?;
    Ok(SpatialMesh {
        time,
        id_base,
        positions,
        triangles,
        quads,
        rotation_center: Point::new(c[0], c[1]),
        annulus,
        body,
    })
}

pub fn write_mesh(m: &SpatialMesh, path: &Path) -> Result<(), IoError> {
    fs::write(path, mesh_to_string(m))?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<SpatialMesh, IoError> {
    mesh_from_str(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------------------
// Native slab.

pub fn slab_to_string(s: &SpaceTimeSlab) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "{SLAB_MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(o, "TIME {:?} {:?}", s.t_start, s.t_end);
    let _ = writeln!(o, "N_V {}", s.n_v);
    let _ = writeln!(o, "BOTTOM_BASE {}", s.bottom_base);
    for (name, pts) in [("BOTTOM", &s.bottom), ("TOP", &s.top)] {
        let _ = writeln!(o, "{name} {}", pts.len());
        for p in pts {
            let _ = writeln!(o, "{:?} {:?}", p.x, p.y);
        }
    }
    for (name, tris) in [("BOTTOM_TRIANGLES", &s.bottom_triangles), ("TOP_TRIANGLES", &s.top_triangles)] {
        let _ = writeln!(o, "{name} {}", tris.len());
        for t in tris {
            let _ = writeln!(o, "{} {} {}", t[0], t[1], t[2]);
        }
    }
    let _ = writeln!(o, "COLUMNS {}", s.columns.len());
    for c in &s.columns {
        let _ = writeln!(o, "{} {} {}", c.configuration, c.polygon.len(), join_ids(&c.polygon));
    }
    let _ = writeln!(o, "TETS {}", s.tets.len());
    for t in &s.tets {
        let _ = writeln!(o, "{} {} {} {} {} {}", t.v[0], t.v[1], t.v[2], t.v[3], t.region.as_str(), t.column);
    }
    o.push_str("END\n");
    o
}

pub fn slab_from_str(text: &str) -> Result<SpaceTimeSlab, IoError> {
    let mut lines = Lines::new(text);
    header(&mut lines, SLAB_MAGIC)?;
    let (l, f) = lines.keyed("TIME")?;
    let t: Vec<f64> = parse_all(&l, &f)?;
    if t.len() != 2 {
        return lines.err(l.offset, l.number, "TIME needs start and end");
    }
    let (l, f) = lines.keyed("N_V")?;
    let n_v: usize = one(&l, &f)?;
    let (l, f) = lines.keyed("BOTTOM_BASE")?;
    let bottom_base: usize = one(&l, &f)?;
    let mut levels = Vec::new();
    for name in ["BOTTOM", "TOP"] {
        let (l, f) = lines.keyed(name)?;
        let n: usize = one(&l, &f)?;
        if n != n_v {
            return lines.err(l.offset, l.number, format!("{name} has {n} points, N_V is {n_v}"));
        }
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let (l, f) = lines.fields(2)?;
            pts.push(Point::new(parse_num(&l, f[0])?, parse_num(&l, f[1])?));
        }
        levels.push(pts);
    }
    let mut tri_sets = Vec::new();
    for name in ["BOTTOM_TRIANGLES", "TOP_TRIANGLES"] {
        let (l, f) = lines.keyed(name)?;
        let n: usize = one(&l, &f)?;
        let mut tris = Vec::with_capacity(n);
        for _ in 0..n {
            let (l, f) = lines.fields(3)?;
            let v: Vec<usize> = parse_all(&l, &f)?;
            tris.push([v[0], v[1], v[2]]);
        }
        tri_sets.push(tris);
    }
    let (l, f) = lines.keyed("COLUMNS")?;
    let nc: usize = one(&l, &f)?;
    let mut columns = Vec::with_capacity(nc);
    for _ in 0..nc {
        let l = lines.next()?;
        let f: Vec<&str> = l.text.split_whitespace().collect();
        if f.len() < 2 {
            return lines.err(l.offset, l.number, "column needs configuration and size");
        }
        let configuration: usize = parse_num(&l, f[0])?;
        let k: usize = parse_num(&l, f[1])?;
        if f.len() != k + 2 {
            return lines.err(l.offset, l.number, format!("column declares {k} ids, found {}", f.len() - 2));
        }
        columns.push(Column { polygon: parse_all(&l, &f[2..])?, configuration });
    }
    let (l, f) = lines.keyed("TETS")?;
    let nt: usize = one(&l, &f)?;
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (l, f) = lines.fields(6)?;
        let v: Vec<usize> = parse_all(&l, &f[..4])?;
        tets.push(SpaceTimeTet { v: [v[0], v[1], v[2], v[3]], region: region_of(&l, f[4])?, column: parse_num(&l, f[5])? });
    }
    expect_end(&mut lines)?;
    let top = levels.pop().expect("two levels");
    let bottom = levels.pop().expect("two levels");
    let top_triangles = tri_sets.pop().expect("two sets");
    let bottom_triangles = tri_sets.pop().expect("two sets");
    Ok(SpaceTimeSlab {
        t_start: t[0],
        t_end: t[1],
        n_v,
        bottom_base,
        bottom,
        top,
        tets,
        columns,
        bottom_triangles,
        top_triangles,
    })
}

pub fn write_slab(s: &SpaceTimeSlab, path: &Path) -> Result<(), IoError> {
    fs::write(path, slab_to_string(s))?;
    Ok(())
}

pub fn read_slab(path: &Path) -> Result<SpaceTimeSlab, IoError> {
    slab_from_str(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------------------
// Legacy VTK.

/// Unstructured grid with points `(x, y, t)`, bottom level first, and one tetra per tet.
pub fn slab_to_vtk(s: &SpaceTimeSlab) -> Result<String, IoError> {
    if s.tets.is_empty() {
        return Err(IoError::EmptySlab);
    }
    let mut o = String::new();
    o.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(o, "slabforge slab base {} n_v {}", s.bottom_base, s.n_v);
    o.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(o, "POINTS {} double", 2 * s.n_v);
    for (pts, t) in [(&s.bottom, s.t_start), (&s.top, s.t_end)] {
        for p in pts {
            let _ = writeln!(o, "{:?} {:?} {:?}", p.x, p.y, t);
        }
    }
    let n = s.tets.len();
    let _ = writeln!(o, "CELLS {n} {}", 5 * n);
    for t in &s.tets {
        let l = t.v.map(|i| i - s.bottom_base);
        let _ = writeln!(o, "4 {} {} {} {}", l[0], l[1], l[2], l[3]);
    }
    let _ = writeln!(o, "CELL_TYPES {n}");
    for _ in 0..n {
        o.push_str("10\n");
    }
    let _ = writeln!(o, "CELL_DATA {n}");
    o.push_str("SCALARS region int 1\nLOOKUP_TABLE default\n");
    for t in &s.tets {
        let _ = writeln!(o, "{}", t.region.code());
    }
    o.push_str("SCALARS column int 1\nLOOKUP_TABLE default\n");
    for t in &s.tets {
        let _ = writeln!(o, "{}", t.column);
    }
    Ok(o)
}

pub fn write_slab_vtk(s: &SpaceTimeSlab, path: &Path) -> Result<(), IoError> {
    let text = slab_to_vtk(s)?;
    fs::write(path, text)?;
    Ok(())
}

fn region_from_code(l: &Line, c: u8) -> Result<Region, IoError> {
    [Region::Rotating, Region::Buffer, Region::Sliding, Region::Static]
        .into_iter()
        .find(|r| r.code() == c)
        .ok_or_else(|| IoError::Parse { offset: l.offset, line: l.number, message: format!("unknown region code {c}") })
}

/// Read a file written by [`slab_to_vtk`]. Spatial triangles and column polygons are not
/// part of the VTK output and come back empty.
pub fn slab_from_vtk(text: &str) -> Result<SpaceTimeSlab, IoError> {
    let mut lines = Lines::new(text);
    // The version line starts with `#`, which the line reader would skip as a comment.
    if !text.starts_with("# vtk DataFile") {
        return lines.err(0, 1, "not a legacy VTK file");
    }
    lines.pos = text.find('\n').map_or(text.len(), |i| i + 1);
    lines.line = 1;
    let l = lines.next()?;
    let f: Vec<&str> = l.text.split_whitespace().collect();
    if f.len() != 6 || f[0] != "slabforge" || f[2] != "base" || f[4] != "n_v" {
        return lines.err(l.offset, l.number, "title line is not a slabforge slab");
    }
    let bottom_base: usize = parse_num(&l, f[3])?;
    let n_v: usize = parse_num(&l, f[5])?;
    for key in ["ASCII", "DATASET"] {
        lines.keyed(key)?;
    }
    let (l, f) = lines.keyed("POINTS")?;
    let np: usize = parse_num(&l, f.first().copied().unwrap_or(""))?;
    if np != 2 * n_v {
        return lines.err(l.offset, l.number, "point count must be twice n_v");
    }
    let mut bottom = Vec::with_capacity(n_v);
    let mut top = Vec::with_capacity(n_v);
    let (mut t0, mut t1) = (0.0, 0.0);
    for i in 0..np {
        let (l, f) = lines.fields(3)?;
        let p = Point::new(parse_num(&l, f[0])?, parse_num(&l, f[1])?);
        let t: f64 = parse_num(&l, f[2])?;
        if i < n_v {
            bottom.push(p);
            t0 = t;
        } else {
            top.push(p);
            t1 = t;
        }
    }
    let (l, f) = lines.keyed("CELLS")?;
    let nc: usize = parse_num(&l, f.first().copied().unwrap_or(""))?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (l, f) = lines.fields(5)?;
        if f[0] != "4" {
            return lines.err(l.offset, l.number, "only tetrahedra are supported");
        }
        let v: Vec<usize> = parse_all(&l, &f[1..])?;
        cells.push([v[0], v[1], v[2], v[3]].map(|i| i + bottom_base));
    }
    lines.keyed("CELL_TYPES")?;
    for _ in 0..nc {
        let (l, f) = lines.fields(1)?;
        if f[0] != "10" {
            return lines.err(l.offset, l.number, "cell type must be 10");
        }
    }
    lines.keyed("CELL_DATA")?;
    let mut scalars: Vec<Vec<usize>> = Vec::new();
    for name in ["region", "column"] {
        let (l, f) = lines.keyed("SCALARS")?;
        if f.first() != Some(&name) {
            return lines.err(l.offset, l.number, format!("expected `{name}` scalars"));
        }
        lines.keyed("LOOKUP_TABLE")?;
        let mut v = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (l, f) = lines.fields(1)?;
            v.push(parse_num(&l, f[0])?);
        }
        scalars.push(v);
    }
    let mut tets = Vec::with_capacity(nc);
    for (i, v) in cells.into_iter().enumerate() {
        let dummy = Line { offset: 0, number: 0, text: "" };
        tets.push(SpaceTimeTet { v, region: region_from_code(&dummy, scalars[0][i] as u8)?, column: scalars[1][i] });
    }
    Ok(SpaceTimeSlab {
        t_start: t0,
        t_end: t1,
        n_v,
        bottom_base,
        bottom,
        top,
        tets,
        columns: Vec::new(),
        bottom_triangles: Vec::new(),
        top_triangles: Vec::new(),
    })
}

// ---------------------------------------------------------------------------------------
// CSV time series.

pub fn csv_row(r: &StepRecord) -> String {
    format!(
        "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
        r.t,
        r.d,
        r.d_rate,
        r.theta,
        r.theta_rate,
        r.fy,
        r.m,
        r.outer_iterations,
        u8::from(r.swapped)
    )
}

/// Streams rows to a writer, flushing after each so a failed run leaves its prefix behind.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> Result<Self, IoError> {
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
        Ok(CsvWriter { out })
    }

    pub fn push(&mut self, r: &StepRecord) -> Result<(), IoError> {
        writeln!(self.out, "{}", csv_row(r))?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn time_series_to_string(records: &[StepRecord]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in records {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}
