//! Versioned plain-text graph format.
//!
//! ```text
//! SFPGRAPH v1 d=2 alpha=2.5 tau=2.2 rho=1 volume=100 boundary=box seed=42
//! V 2
//! 0 1.0000000000000000e0 2.0000000000000000e0 1.3000000000000000e0
//! 1 ...
//! E 1
//! 0 1
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::params::{Boundary, SfpParams};
use super::sample::{SfpGraph, VertexSet};
use super::SfpError;
use crate::graph::UndirectedGraph;

const MAGIC: &str = "SFPGRAPH";
const VERSION: &str = "v1";

/// Floats are printed with 17 significant digits, enough to round-trip f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_graph<W: Write>(g: &SfpGraph, mut out: W) -> std::io::Result<()> {
    let p = g.params();
    let seed = g.seed().map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(
        out,
        "{MAGIC} {VERSION} d={} alpha={} tau={} rho={} volume={} boundary={} seed={seed}",
        p.dim,
        fmt_f64(p.alpha),
        fmt_f64(p.tau),
        fmt_f64(p.rho),
        fmt_f64(p.volume),
        p.boundary.as_str(),
    )?;
    let vs = g.vertices();
    writeln!(out, "V {}", vs.len())?;
    let mut line = String::new();
    for v in vs.iter() {
        line.clear();
        write!(line, "{}", v.id).unwrap();
        for x in v.position {
            write!(line, " {}", fmt_f64(*x)).unwrap();
        }
        write!(line, " {}", fmt_f64(v.weight)).unwrap();
        writeln!(out, "{line}")?;
    }
    writeln!(out, "E {}", g.graph().edge_count())?;
    for (u, v) in g.graph().edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn serialize_graph(g: &SfpGraph, path: &Path) -> Result<(), SfpError> {
    let f = std::fs::File::create(path)?;
    write_graph(g, std::io::BufWriter::new(f))?;
    Ok(())
}

pub fn deserialize_graph(path: &Path) -> Result<SfpGraph, SfpError> {
    read_graph(std::fs::File::open(path)?)
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    number: usize,
}

impl<R: Read> Lines<R> {
    fn next_line(&mut self) -> Result<String, SfpError> {
        self.number += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> SfpError {
        SfpError::Parse {
            line: self.number,
            message: msg.into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("invalid {what} `{s}`"))
}

pub fn read_graph<R: Read>(reader: R) -> Result<SfpGraph, SfpError> {
    let mut lines = Lines {
        inner: BufReader::new(reader).lines(),
        number: 0,
    };
    let header = lines.next_line()?;
    let (params, seed) = parse_header(&header).map_err(|m| lines.err(m))?;
    let dim = params.dim;
    let side = params.side();

    let count = parse_count(&lines.next_line()?, "V").map_err(|m| lines.err(m))?;
    let mut vertices = VertexSet::new(dim);
    let mut pos = vec![0.0; dim];
    for expected in 0..count {
        let line = lines.next_line()?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 2 {
            return Err(lines.err(format!(
                "vertex line needs {} fields, found {}",
                dim + 2,
                fields.len()
            )));
        }
        let id: usize = parse_num(fields[0], "vertex id").map_err(|m| lines.err(m))?;
        if id != expected {
            return Err(lines.err(format!("vertex id {id} out of order, expected {expected}")));
        }
        for (a, f) in fields[1..=dim].iter().enumerate() {
            pos[a] = parse_num(f, "coordinate").map_err(|m| lines.err(m))?;
        }
        let w: f64 = parse_num(fields[dim + 1], "weight").map_err(|m| lines.err(m))?;
        if !(w >= 1.0 && w.is_finite()) {
            return Err(lines.err(format!("weight {w} is below 1")));
        }
        if let Some(x) = pos.iter().find(|x| !(**x >= 0.0 && **x < side)) {
            return Err(lines.err(format!("coordinate {x} outside [0, {side})")));
        }
        vertices.push(&pos, w);
    }

    let m = parse_count(&lines.next_line()?, "E").map_err(|m| lines.err(m))?;
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let line = lines.next_line()?;
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(lines.err("edge line needs exactly two ids"));
        };
        let u: u32 = parse_num(a, "vertex id").map_err(|m| lines.err(m))?;
        let v: u32 = parse_num(b, "vertex id").map_err(|m| lines.err(m))?;
        if u >= v {
            return Err(lines.err(format!("edge {u} {v} must be written with u < v")));
        }
        if v as usize >= count {
            return Err(lines.err(format!("edge endpoint {v} exceeds vertex count {count}")));
        }
        edges.push((u, v));
    }
    let graph = UndirectedGraph::from_edges(count, edges).map_err(|e| lines.err(e.to_string()))?;
    while let Some(extra) = lines.inner.next() {
        lines.number += 1;
        if !extra?.trim().is_empty() {
            return Err(lines.err("trailing content after edge list"));
        }
    }
    SfpGraph::from_parts(params, vertices, graph, seed)
}

fn parse_count(line: &str, tag: &str) -> Result<usize, String> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(t), Some(c), None) if t == tag => parse_num(c, "count"),
        _ => Err(format!("expected `{tag} <count>`")),
    }
}

fn parse_header(line: &str) -> Result<(SfpParams, Option<u64>), String> {
    let mut it = line.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(format!("missing `{MAGIC}` header"));
    }
    match it.next() {
        Some(VERSION) => {}
        Some(v) => return Err(format!("unsupported format version `{v}`")),
        None => return Err("missing format version".into()),
    }
    let (mut d, mut alpha, mut tau, mut rho, mut volume, mut boundary, mut seed) =
        (None, None, None, None, None, None, None);
    for kv in it {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{kv}`"))?;
        match k {
            "d" => d = Some(parse_num::<usize>(v, "d")?),
            "alpha" => alpha = Some(parse_num::<f64>(v, "alpha")?),
            "tau" => tau = Some(parse_num::<f64>(v, "tau")?),
            "rho" => rho = Some(parse_num::<f64>(v, "rho")?),
            "volume" => volume = Some(parse_num::<f64>(v, "volume")?),
            "boundary" => boundary = Some(v.parse::<Boundary>().map_err(|e| e.to_string())?),
            "seed" => {
                seed = Some(if v == "none" {
                    None
                } else {
                    Some(parse_num::<u64>(v, "seed")?)
                })
            }
            other => return Err(format!("unknown header field `{other}`")),
        }
    }
    let missing = |n: &str| format!("header field `{n}` missing");
    let params = SfpParams {
        dim: d.ok_or_else(|| missing("d"))?,
        alpha: alpha.ok_or_else(|| missing("alpha"))?,
        tau: tau.ok_or_else(|| missing("tau"))?,
        rho: rho.ok_or_else(|| missing("rho"))?,
        volume: volume.ok_or_else(|| missing("volume"))?,
        boundary: boundary.ok_or_else(|| missing("boundary"))?,
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok((params, seed.ok_or_else(|| missing("seed"))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfp::sample::sample_graph_reference;

    fn round_trip(g: &SfpGraph) -> SfpGraph {
        let mut buf = Vec::new();
        write_graph(g, &mut buf).unwrap();
        read_graph(buf.as_slice()).unwrap()
    }

    #[test]
    fn sampled_graph_round_trips() {
        let p = SfpParams::new(2, 2.5, 2.2, 0.7, 150.0).unwrap();
        let g = sample_graph_reference(&p, 8).unwrap();
        assert_eq!(round_trip(&g), g);
    }

    #[test]
    fn empty_graph_round_trips() {
        let p = SfpParams::new(3, 4.0, 1.5, 1.0, 8.0).unwrap();
        let g = SfpGraph::from_parts(p, VertexSet::new(3), UndirectedGraph::empty(0), None).unwrap();
        assert_eq!(round_trip(&g), g);
    }

    #[test]
    fn hand_written_file() {
        let text = "SFPGRAPH v1 d=1 alpha=2 tau=2 rho=1 volume=10 boundary=torus seed=none\n\
                    V 3\n0 0.5 1\n1 2.5 3.25\n2 9 1\n\
                    E 2\n0 2\n1 2\n";
        let g = read_graph(text.as_bytes()).unwrap();
        assert_eq!(g.params().boundary, Boundary::Torus);
        assert_eq!(g.vertices().weight(1), 3.25);
        assert_eq!(g.graph().neighbors(2), &[0, 1]);
        assert_eq!(g.graph().neighbors(0), &[2]);
        assert_eq!(g.seed(), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("SFPGRAPH v2 d=1\n", 1),
            (
                "SFPGRAPH v1 d=1 alpha=2 tau=2 rho=1 volume=10 boundary=box seed=1\nV 1\n0 11 1\nE 0\n",
                3,
            ),
            (
                "SFPGRAPH v1 d=1 alpha=2 tau=2 rho=1 volume=10 boundary=box seed=1\nV 2\n0 1 1\n1 2 1\nE 1\n1 0\n",
                6,
            ),
            (
                "SFPGRAPH v1 d=1 alpha=2 tau=2 rho=1 volume=10 boundary=box seed=1\nV 2\n0 1 1\n1 2 0.5\nE 0\n",
                4,
            ),
            (
                "SFPGRAPH v1 d=1 alpha=2 tau=2 rho=1 volume=10 boundary=box seed=1\nV 2\n0 1 1\n",
                4,
            ),
        ];
        for (text, line) in cases {
            match read_graph(text.as_bytes()) {
                Err(SfpError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }
}
