//! ASCII readers and writers.
//!
//! * OFF: triangle meshes; boundary edges are inferred from the topology.
//! * TET: `TET n_v n_c n_bf`, then vertices, 4-index cells and 3-index
//!   boundary faces.
//! * PTS: `PTS d k n m`, then `n` coordinate lines, `m` boundary indices and
//!   optional `V` (n reals) and `A` (m reals) blocks.
//!
//! Floats are written with 17 significant digits so that a save/load round
//! trip reproduces every coordinate bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{exterior_facets, Point, PointCloud, SimplicialMesh};
use crate::error::{Error, Result};

struct Tokens<'a> {
    path: &'a Path,
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect();
        Self {
            path,
            items,
            pos: 0,
            last_line: text.lines().count().max(1),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|&(_, t)| t)
    }

    fn next(&mut self, section: &str) -> Result<(usize, &'a str)> {
        match self.items.get(self.pos) {
            Some(&item) => {
                self.pos += 1;
                Ok(item)
            }
            None => Err(Error::parse(
                self.path,
                self.last_line,
                format!("unexpected end of file in {section}"),
            )),
        }
    }

    fn usize(&mut self, section: &str) -> Result<usize> {
        let (line, tok) = self.next(section)?;
        tok.parse().map_err(|_| {
            Error::parse(
                self.path,
                line,
                format!("expected a nonnegative integer in {section}, found `{tok}`"),
            )
        })
    }

    fn index(&mut self, section: &str, bound: usize) -> Result<usize> {
        let line = self.line();
        let i = self.usize(section)?;
        if i >= bound {
            return Err(Error::parse(
                self.path,
                line,
                format!("index {i} out of range in {section} (n = {bound})"),
            ));
        }
        Ok(i)
    }

    fn real(&mut self, section: &str) -> Result<f64> {
        let (line, tok) = self.next(section)?;
        let x: f64 = tok.parse().map_err(|_| {
            Error::parse(
                self.path,
                line,
                format!("expected a real number in {section}, found `{tok}`"),
            )
        })?;
        if !x.is_finite() {
            return Err(Error::parse(
                self.path,
                line,
                format!("non-finite value `{tok}` in {section}"),
            ));
        }
        Ok(x)
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).map_or(self.last_line, |&(l, _)| l)
    }

    fn expect_end(&self) -> Result<()> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some(&(line, tok)) => Err(Error::parse(
                self.path,
                line,
                format!("unexpected trailing token `{tok}`"),
            )),
        }
    }
}

fn fmt_real(out: &mut String, x: f64) {
    // {:e} with 16 fractional digits = 17 significant digits.
    let _ = write!(out, "{x:.16e}");
}

fn write_point(out: &mut String, p: &Point, dim: usize) {
    for (c, x) in p.iter().take(dim).enumerate() {
        if c > 0 {
            out.push(' ');
        }
        fmt_real(out, *x);
    }
    out.push('\n');
}

/// Loads an OFF (triangle) or TET (tetrahedral) mesh, chosen by the header.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<SimplicialMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_mesh(path, &text)
}

pub fn parse_mesh(path: &Path, text: &str) -> Result<SimplicialMesh> {
    let mut tok = Tokens::new(path, text);
    let (line, magic) = tok.next("header")?;
    let mesh = match magic {
        "OFF" => parse_off(&mut tok)?,
        "TET" => parse_tet(&mut tok)?,
        other => {
            return Err(Error::parse(
                path,
                line,
                format!("unknown mesh header `{other}` (expected OFF or TET)"),
            ))
        }
    };
    tok.expect_end()?;
    Ok(mesh)
}

fn parse_off(tok: &mut Tokens<'_>) -> Result<SimplicialMesh> {
    let nv = tok.usize("header")?;
    let nf = tok.usize("header")?;
    let _ne = tok.usize("header")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push([tok.real("vertices")?, tok.real("vertices")?, tok.real("vertices")?]);
    }
    let mut cells = Vec::with_capacity(3 * nf);
    for _ in 0..nf {
        let line = tok.line();
        let arity = tok.usize("faces")?;
        if arity != 3 {
            return Err(Error::parse(
                tok.path,
                line,
                format!("only triangular faces are supported (found {arity}-gon)"),
            ));
        }
        for _ in 0..3 {
            cells.push(tok.index("faces", nv)?);
        }
    }
    let planar = vertices.iter().all(|p| p[2] == 0.0);
    let mut mesh = SimplicialMesh {
        ambient_dim: if planar { 2 } else { 3 },
        intrinsic_dim: 2,
        vertices,
        cells,
        boundary_cells: Vec::new(),
    };
    mesh.boundary_cells = exterior_facets(&mesh);
    Ok(mesh)
}

fn parse_tet(tok: &mut Tokens<'_>) -> Result<SimplicialMesh> {
    let nv = tok.usize("header")?;
    let nc = tok.usize("header")?;
    let nb = tok.usize("header")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push([tok.real("vertices")?, tok.real("vertices")?, tok.real("vertices")?]);
    }
    let mut cells = Vec::with_capacity(4 * nc);
    for _ in 0..4 * nc {
        cells.push(tok.index("cells", nv)?);
    }
    let mut boundary_cells = Vec::with_capacity(3 * nb);
    for _ in 0..3 * nb {
        boundary_cells.push(tok.index("boundary faces", nv)?);
    }
    Ok(SimplicialMesh {
        ambient_dim: 3,
        intrinsic_dim: 3,
        vertices,
        cells,
        boundary_cells,
    })
}

pub fn format_mesh(mesh: &SimplicialMesh) -> Result<String> {
    let mut out = String::new();
    match mesh.intrinsic_dim {
        2 => {
            let _ = writeln!(out, "OFF\n{} {} 0", mesh.vertices.len(), mesh.cell_count());
            for p in &mesh.vertices {
                write_point(&mut out, p, 3);
            }
            for c in mesh.cells() {
                let _ = writeln!(out, "3 {} {} {}", c[0], c[1], c[2]);
            }
        }
        3 => {
            let _ = writeln!(
                out,
                "TET {} {} {}",
                mesh.vertices.len(),
                mesh.cell_count(),
                mesh.boundary_cell_count()
            );
            for p in &mesh.vertices {
                write_point(&mut out, p, 3);
            }
            for c in mesh.cells() {
                let _ = writeln!(out, "{} {} {} {}", c[0], c[1], c[2], c[3]);
            }
            for f in mesh.boundary_cells() {
                let _ = writeln!(out, "{} {} {}", f[0], f[1], f[2]);
            }
        }
        k => return Err(Error::Unsupported(format!("cannot save a mesh with k = {k}"))),
    }
    Ok(out)
}

/// Writes OFF for triangle meshes and TET for tetrahedral meshes.
pub fn save_mesh(mesh: &SimplicialMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_mesh(mesh)?)?;
    Ok(())
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_cloud(path, &text)
}

pub fn parse_cloud(path: &Path, text: &str) -> Result<PointCloud> {
    let mut tok = Tokens::new(path, text);
    let (line, magic) = tok.next("header")?;
    if magic != "PTS" {
        return Err(Error::parse(
            path,
            line,
            format!("expected `PTS` header, found `{magic}`"),
        ));
    }
    let header_line = line;
    let d = tok.usize("header")?;
    let k = tok.usize("header")?;
    let n = tok.usize("header")?;
    let m = tok.usize("header")?;
    if !(1..=3).contains(&d) || k == 0 || k > d {
        return Err(Error::parse(
            path,
            header_line,
            format!("unsupported dimensions d = {d}, k = {k}"),
        ));
    }
    if m > n {
        return Err(Error::parse(
            path,
            header_line,
            format!("boundary count {m} exceeds point count {n}"),
        ));
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = [0.0; 3];
        for c in p.iter_mut().take(d) {
            *c = tok.real("coordinates")?;
        }
        points.push(p);
    }
    let mut boundary = Vec::with_capacity(m);
    for _ in 0..m {
        boundary.push(tok.index("boundary indices", n)?);
    }
    let mut volume = None;
    let mut area = None;
    while let Some(tag) = tok.peek() {
        let line = tok.line();
        match tag {
            "V" if volume.is_none() => {
                tok.next("V block")?;
                volume = Some((0..n).map(|_| tok.real("V block")).collect::<Result<Vec<_>>>()?);
            }
            "A" if area.is_none() => {
                tok.next("A block")?;
                area = Some((0..m).map(|_| tok.real("A block")).collect::<Result<Vec<_>>>()?);
            }
            other => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("unexpected token `{other}` (expected V or A block)"),
                ))
            }
        }
    }
    let cloud = PointCloud::new(d, k, points, boundary).map_err(|e| Error::parse(path, header_line, e.to_string()))?;
    match (volume, area) {
        (None, None) => Ok(cloud),
        (Some(v), Some(a)) => cloud.with_weights(v, a),
        (Some(v), None) if m == 0 => cloud.with_weights(v, Vec::new()),
        _ => Err(Error::parse(path, header_line, "V and A blocks must be given together")),
    }
}

pub fn format_cloud(cloud: &PointCloud) -> String {
    let d = cloud.ambient_dim();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "PTS {} {} {} {}",
        d,
        cloud.intrinsic_dim(),
        cloud.len(),
        cloud.boundary_len()
    );
    for p in cloud.points() {
        write_point(&mut out, p, d);
    }
    for b in cloud.boundary() {
        let _ = writeln!(out, "{b}");
    }
    if let (Some(v), Some(a)) = (cloud.volume_weights(), cloud.boundary_weights()) {
        out.push_str("V\n");
        for x in v {
            fmt_real(&mut out, *x);
            out.push('\n');
        }
        out.push_str("A\n");
        for x in a {
            fmt_real(&mut out, *x);
            out.push('\n');
        }
    }
    out
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_cloud(cloud))?;
    Ok(())
}
