//! Edge-list text format: a header line `n d`, then one `u v` line per edge
//! with `0 <= u < v < n`. Written with LF line endings, edges in
//! lexicographic order.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Graph, GraphError};

pub fn write_edge_list(g: &Graph, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.n(), g.d())?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_edge_list(BufReader::new(file), format!("file({})", path.display()))
}

pub fn parse_edge_list(reader: impl BufRead, descriptor: String) -> Result<Graph, GraphError> {
    let mut header = None;
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::Parse {
                line: lineno,
                reason: format!("expected two integers, found {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| GraphError::Parse {
                line: lineno,
                reason: format!("{s:?}: {e}"),
            })
        };
        let (a, b) = (parse(fields[0])?, parse(fields[1])?);
        match header {
            None => header = Some((a, b)),
            Some((n, _)) => {
                if a >= b {
                    return Err(GraphError::Parse {
                        line: lineno,
                        reason: format!("edge ({a}, {b}) must satisfy u < v"),
                    });
                }
                if b >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: b, n });
                }
                edges.push((a, b));
            }
        }
    }
    let (n, d) = header.ok_or(GraphError::Parse { line: 1, reason: "missing header".into() })?;
    Graph::from_edges(n, d, &edges, descriptor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamilySpec;

    #[test]
    fn complete_four_serialises_to_six_edges() {
        let g = GraphFamilySpec::complete(4).build().unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "4 3\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    }

    #[test]
    fn roundtrip_preserves_adjacency() {
        let g = GraphFamilySpec::circulant(8, vec![1, 2]).build().unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = parse_edge_list(&buf[..], "x".into()).unwrap();
        assert!(g.edges().eq(back.edges()));
    }

    #[test]
    fn non_regular_file_names_the_vertex() {
        let text = "4 2\n0 1\n1 2\n2 3\n";
        let err = parse_edge_list(text.as_bytes(), "x".into()).unwrap_err();
        assert!(matches!(err, GraphError::NotRegular { vertex: 0, found: 1, expected: 2 }));
        assert!(err.to_string().contains("vertex 0"));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let err = parse_edge_list("3 2\n0 1 2\n".as_bytes(), "x".into()).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let err = parse_edge_list("3 2\n1 0\n".as_bytes(), "x".into()).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
    }
}
