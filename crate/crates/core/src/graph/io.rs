use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};

use super::Graph;

/// How the ids in an edge-list file are numbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Indexing {
    /// 0-based if the smallest id is 0, otherwise 1-based.
    #[default]
    Auto,
    Zero,
    One,
}

impl std::str::FromStr for Indexing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Indexing::Auto),
            "zero" | "0" => Ok(Indexing::Zero),
            "one" | "1" => Ok(Indexing::One),
            other => Err(Error::InvalidArgument(format!(
                "unknown indexing {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub indexing: Indexing,
    /// Reject self-loops instead of dropping them.
    pub strict: bool,
    /// Keep only the largest connected component instead of failing on disconnected input.
    pub largest_component: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            indexing: Indexing::Auto,
            strict: true,
            largest_component: false,
        }
    }
}

/// A parsed graph with its mapping back to file ids.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// File id of every internal node, in internal order.
    pub node_ids: Vec<i64>,
    /// 0 or 1, as given or detected.
    pub base: i64,
    pub duplicates_dropped: usize,
    pub self_loops_dropped: usize,
    /// Nodes removed by largest-component extraction.
    pub nodes_discarded: usize,
}

pub fn load_edge_list(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_edge_list(BufReader::new(file), opts)
}

pub fn parse_edge_list<R: Read>(reader: R, opts: &LoadOptions) -> Result<LoadedGraph> {
    let mut raw = Vec::new();
    let mut self_loops = 0;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let mut tokens = t.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (parse_id(a, lineno)?, parse_id(b, lineno)?),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected two integer ids, got {t:?}"),
                })
            }
        };
        if a == b {
            if opts.strict {
                return Err(Error::SelfLoop {
                    line: lineno,
                    node: a,
                });
            }
            self_loops += 1;
            continue;
        }
        raw.push((a, b, lineno));
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let min_id = raw.iter().map(|&(a, b, _)| a.min(b)).min().unwrap_or(0);
    let base = match opts.indexing {
        Indexing::Auto => i64::from(min_id != 0),
        Indexing::Zero => 0,
        Indexing::One => 1,
    };
    if let Some(&(a, b, line)) = raw.iter().find(|&&(a, b, _)| a.min(b) < base) {
        return Err(Error::Parse {
            line,
            message: format!("id {} below base {base}", a.min(b)),
        });
    }

    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut node_ids = Vec::new();
    let mut intern = |id: i64| {
        *index.entry(id).or_insert_with(|| {
            node_ids.push(id);
            node_ids.len() - 1
        })
    };
    let edges: Vec<(usize, usize)> = raw
        .iter()
        .map(|&(a, b, _)| (intern(a), intern(b)))
        .collect();
    let n = node_ids.len();

    if opts.largest_component {
        let (report, kept) = Graph::largest_component(n, edges)?;
        let nodes_discarded = n - kept.len();
        Ok(LoadedGraph {
            graph: report.graph,
            node_ids: kept.iter().map(|&i| node_ids[i]).collect(),
            base,
            duplicates_dropped: report.duplicates_dropped,
            self_loops_dropped: self_loops,
            nodes_discarded,
        })
    } else {
        let report = Graph::build(n, edges)?;
        Ok(LoadedGraph {
            graph: report.graph,
            node_ids,
            base,
            duplicates_dropped: report.duplicates_dropped,
            self_loops_dropped: self_loops,
            nodes_discarded: 0,
        })
    }
}

fn parse_id(token: &str, line: usize) -> Result<i64> {
    token.parse::<i64>().map_err(|_| Error::Parse {
        line,
        message: format!("not an integer id: {token:?}"),
    })
}

/// Write `g` as a 0-based edge list that [`load_edge_list`] reads back unchanged.
pub fn write_edge_list<W: std::io::Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    for (i, j) in g.edges() {
        writeln!(out, "{i} {j}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, opts: LoadOptions) -> Result<LoadedGraph> {
        parse_edge_list(text.as_bytes(), &opts)
    }

    #[test]
    fn triangle_file() {
        let g = parse("0 1\n1 2\n2 0", LoadOptions::default()).unwrap();
        assert_eq!(g.graph.n(), 3);
        assert_eq!(g.graph.degrees(), vec![2, 2, 2]);
        assert_eq!(g.base, 0);
    }

    #[test]
    fn comments_blank_lines_and_first_appearance_order() {
        let text = "% header\n# another\n\n10 7\n7 3\n3 10\n10 7\n";
        let g = parse(text, LoadOptions::default()).unwrap();
        assert_eq!(g.node_ids, vec![10, 7, 3]);
        assert_eq!(g.duplicates_dropped, 1);
        assert_eq!(g.base, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("0 1\n1 x\n", LoadOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("0 1 2\n", LoadOptions::default()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn self_loops_strict_and_lenient() {
        assert!(matches!(
            parse("0 1\n1 1\n", LoadOptions::default()),
            Err(Error::SelfLoop { line: 2, node: 1 })
        ));
        let lenient = LoadOptions {
            strict: false,
            ..LoadOptions::default()
        };
        let g = parse("0 1\n1 1\n", lenient).unwrap();
        assert_eq!(g.self_loops_dropped, 1);
        assert_eq!(g.graph.num_edges(), 1);
    }

    #[test]
    fn explicit_indexing_checks_base() {
        let one = LoadOptions {
            indexing: Indexing::One,
            ..LoadOptions::default()
        };
        assert!(matches!(parse("0 1\n", one), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_and_disconnected() {
        assert!(matches!(
            parse("# nothing\n", LoadOptions::default()),
            Err(Error::EmptyGraph)
        ));
        assert!(matches!(
            parse("0 1\n2 3\n", LoadOptions::default()),
            Err(Error::Disconnected { components: 2 })
        ));
        let lcc = LoadOptions {
            largest_component: true,
            ..LoadOptions::default()
        };
        let g = parse("0 1\n2 3\n3 4\n", lcc).unwrap();
        assert_eq!(g.node_ids, vec![2, 3, 4]);
        assert_eq!(g.nodes_discarded, 2);
    }

    #[test]
    fn write_then_read_round_trips() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = parse_edge_list(buf.as_slice(), &LoadOptions::default()).unwrap();
        assert_eq!(back.graph, g);
    }
}
