//! Ingestion of edge lists and bag-of-words corpora into sparse structures,
//! plus the random node partition used by the community pipeline.

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Dedup};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// The observed network G as a compressed sparse adjacency matrix.
///
/// Node ids are compacted to `[0, n)` at load time; the original ids are kept
/// in a remap table so reports can refer to external ids.
#[derive(Clone, Debug)]
pub struct SparseGraph {
    adj: CsrMatrix,
    directed: bool,
    bipartite_split: Option<usize>,
    remap: Vec<u64>,
    self_loops_dropped: usize,
}

impl SparseGraph {
    pub fn new(
        adj: CsrMatrix,
        directed: bool,
        bipartite_split: Option<usize>,
        remap: Vec<u64>,
    ) -> Self {
        assert_eq!(adj.rows(), adj.cols());
        SparseGraph {
            adj,
            directed,
            bipartite_split,
            remap,
            self_loops_dropped: 0,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.rows()
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adj
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn bipartite_split(&self) -> Option<usize> {
        self.bipartite_split
    }

    pub fn remap(&self) -> &[u64] {
        &self.remap
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Weighted degree per node (row sums of the adjacency).
    pub fn degrees(&self) -> Vec<f64> {
        self.adj.row_sums()
    }

    /// G restricted to `rows` × `cols`, both compacted in the given order.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        self.adj.select(rows, cols)
    }

    /// Write as edge-list text, one `src dst [weight]` line per stored entry
    /// (each undirected edge written once, smaller endpoint first).
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut emit = |i: usize, j: usize, v: f64| -> std::io::Result<()> {
            if v == 1.0 {
                writeln!(w, "{} {}", i, j)
            } else {
                writeln!(w, "{} {} {}", i, j, v)
            }
        };
        for (i, j, v) in self.adj.iter_entries() {
            if !self.directed && j < i {
                continue;
            }
            emit(i, j, v).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Two-column `internal external` table mapping compact ids back.
    pub fn write_remap_table(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        for (internal, external) in self.remap.iter().enumerate() {
            writeln!(w, "{} {}", internal, external).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

/// Per-document word-frequency vectors over a vocabulary of size d.
#[derive(Clone, Debug)]
pub struct Corpus {
    freq: CsrMatrix,
    skipped_docs: usize,
}

impl Corpus {
    /// Build from a document×vocab count matrix, dropping documents whose
    /// total count is below 3 (third-order moments need word triples).
    pub fn new(freq: CsrMatrix) -> Self {
        let keep: Vec<usize> = (0..freq.rows())
            .filter(|&i| freq.row(i).1.iter().sum::<f64>() >= 3.0)
            .collect();
        let skipped = freq.rows() - keep.len();
        let cols: Vec<usize> = (0..freq.cols()).collect();
        let freq = if skipped > 0 {
            freq.select(&keep, &cols)
        } else {
            freq
        };
        Corpus {
            freq,
            skipped_docs: skipped,
        }
    }

    /// Wrap a count matrix the caller has already filtered; the length-≥3
    /// invariant is the caller's responsibility here.
    pub fn from_filtered(freq: CsrMatrix) -> Self {
        Corpus {
            freq,
            skipped_docs: 0,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.freq.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.freq.cols()
    }

    pub fn freq(&self) -> &CsrMatrix {
        &self.freq
    }

    pub fn skipped_docs(&self) -> usize {
        self.skipped_docs
    }

    /// UCI bag-of-words text format, 1-indexed.
    pub fn write_bag_of_words(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut lines = Vec::new();
        for (i, j, v) in self.freq.iter_entries() {
            lines.push(format!("{} {} {}", i + 1, j + 1, v as u64));
        }
        writeln!(w, "{}", self.n_docs()).map_err(|e| Error::io(path, e))?;
        writeln!(w, "{}", self.vocab_size()).map_err(|e| Error::io(path, e))?;
        writeln!(w, "{}", lines.len()).map_err(|e| Error::io(path, e))?;
        for l in lines {
            writeln!(w, "{}", l).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

/// Disjoint node sets X, A, B, C over `[0, n_nodes)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePartition {
    pub x: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub seed: u64,
}

impl NodePartition {
    /// The complement of A within the partition: X ∪ B ∪ C, in that order.
    pub fn a_complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.x.len() + self.b.len() + self.c.len());
        out.extend_from_slice(&self.x);
        out.extend_from_slice(&self.b);
        out.extend_from_slice(&self.c);
        out
    }

    /// Same partition with the roles of X and A exchanged.
    pub fn swap_x_a(&self) -> NodePartition {
        NodePartition {
            x: self.a.clone(),
            a: self.x.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub directed: bool,
    pub weighted: bool,
    pub bipartite: bool,
}

/// Load a whitespace-separated `src dst [weight]` edge list. Lines starting
/// with `#` are comments. Node ids are compacted in first-appearance order;
/// undirected inputs are symmetrized; self-loops are dropped with a warning
/// counter; duplicates are summed when weighted, collapsed when unweighted.
pub fn load_edge_list(path: &Path, options: LoadOptions) -> Result<SparseGraph> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(f);
    let mut raw: Vec<(u64, u64, f64)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse_id = |tok: Option<&str>| -> Result<u64> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected `src dst [weight]`, got {:?}", line),
            })
        };
        let src = parse_id(it.next())?;
        let dst = parse_id(it.next())?;
        let weight = match it.next() {
            None => 1.0,
            Some(t) => t.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("bad weight {:?}", t),
            })?,
        };
        if it.next().is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: "trailing tokens".into(),
            });
        }
        if weight < 0.0 {
            return Err(Error::Validation(format!(
                "negative edge weight {} at {}:{}",
                weight,
                path.display(),
                lineno + 1
            )));
        }
        raw.push((src, dst, if options.weighted { weight } else { 1.0 }));
    }
    if raw.is_empty() {
        return Err(Error::Validation(format!(
            "empty graph in {}",
            path.display()
        )));
    }

    // Drop self-loops before id compaction so a node seen only in dropped
    // loops does not linger as an isolated vertex.
    let mut self_loops = 0usize;
    if !options.bipartite {
        let before = raw.len();
        raw.retain(|&(s, d, _)| s != d);
        self_loops = before - raw.len();
        if raw.is_empty() {
            return Err(Error::Validation(format!(
                "graph in {} has no off-diagonal edges",
                path.display()
            )));
        }
    }

    // Compact ids in sorted numeric order, which makes loading independent
    // of edge order in the file and makes write→reload a fixed point. For
    // bipartite inputs src and dst live in separate id spaces: left nodes
    // first, then right nodes offset by the split.
    use std::collections::HashMap;
    let sorted_unique = |ids: Vec<u64>| -> Vec<u64> {
        let mut v = ids;
        v.sort_unstable();
        v.dedup();
        v
    };
    let index_of = |order: &[u64]| -> HashMap<u64, usize> {
        order.iter().enumerate().map(|(i, &e)| (e, i)).collect()
    };
    let (n, split, remap, edges): (usize, Option<usize>, Vec<u64>, Vec<(usize, usize, f64)>) =
        if options.bipartite {
            let left = sorted_unique(raw.iter().map(|&(s, _, _)| s).collect());
            let right = sorted_unique(raw.iter().map(|&(_, d, _)| d).collect());
            let li = index_of(&left);
            let ri = index_of(&right);
            let edges = raw
                .iter()
                .map(|&(s, d, w)| (li[&s], ri[&d], w))
                .collect();
            let l = left.len();
            let n = l + right.len();
            let mut remap = left;
            remap.extend_from_slice(&right);
            (n, Some(l), remap, edges)
        } else {
            let all = sorted_unique(
                raw.iter()
                    .flat_map(|&(s, d, _)| [s, d])
                    .collect::<Vec<u64>>(),
            );
            let idx = index_of(&all);
            let edges = raw
                .iter()
                .map(|&(s, d, w)| (idx[&s], idx[&d], w))
                .collect();
            (all.len(), None, all, edges)
        };

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
    for (i, j, w) in edges {
        let (i, j) = if options.bipartite {
            // cross-block edges only; no self-loops possible
            (i, split.unwrap() + j)
        } else {
            (i, j)
        };
        triplets.push((i, j, w));
        if !options.directed {
            triplets.push((j, i, w));
        }
    }
    let dedup = if options.weighted {
        Dedup::Sum
    } else {
        Dedup::Collapse
    };
    let adj = CsrMatrix::from_triplets(n, n, triplets, dedup);
    Ok(SparseGraph {
        adj,
        directed: options.directed,
        bipartite_split: split,
        remap,
        self_loops_dropped: self_loops,
    })
}

/// Load a UCI bag-of-words file: three header lines (n_docs, vocab_size,
/// nnz) followed by 1-indexed `docID wordID count` triples.
pub fn load_bag_of_words(path: &Path) -> Result<Corpus> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(f);
    let mut lines = reader.lines().enumerate();
    let mut header = [0usize; 3];
    for h in header.iter_mut() {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                msg: "truncated header".into(),
            })
            .and_then(|(n, l)| l.map(|l| (n, l)).map_err(|e| Error::io(path, e)))?;
        *h = line.trim().parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: format!("bad header value {:?}", line.trim()),
        })?;
    }
    let [n_docs, vocab, nnz] = header;
    if n_docs == 0 {
        return Err(Error::Validation(format!(
            "bag-of-words {} declares zero documents",
            path.display()
        )));
    }
    let mut triplets = Vec::with_capacity(nnz);
    let mut body_lines = 0usize;
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        body_lines += 1;
        let mut it = line.split_whitespace();
        let mut next_int = || -> Result<u64> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("expected `docID wordID count`, got {:?}", line),
                })
        };
        let doc = next_int()?;
        let word = next_int()?;
        let count = next_int()?;
        if doc == 0 || doc as usize > n_docs {
            return Err(Error::Validation(format!(
                "docID {} out of range 1..={} at {}:{}",
                doc,
                n_docs,
                path.display(),
                lineno + 1
            )));
        }
        if word == 0 || word as usize > vocab {
            return Err(Error::Validation(format!(
                "wordID {} out of range 1..={} at {}:{}",
                word,
                vocab,
                path.display(),
                lineno + 1
            )));
        }
        if count > 0 {
            triplets.push((doc as usize - 1, word as usize - 1, count as f64));
        }
    }
    if body_lines != nnz {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("header declares {} entries, body has {}", nnz, body_lines),
        });
    }
    let freq = CsrMatrix::from_triplets(n_docs, vocab, triplets, Dedup::Sum);
    Ok(Corpus::new(freq))
}

/// Randomly partition nodes into X, A, B, C. Sizes are ⌊fraction·n⌋ with the
/// remainder going to X; deterministic for a fixed seed. Each set must end up
/// with at least `k` nodes.
pub fn partition_nodes(
    graph: &SparseGraph,
    fractions: [f64; 4],
    seed: u64,
    k: usize,
) -> Result<NodePartition> {
    let n = graph.n_nodes();
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|&f| f <= 0.0) || sum > 1.0 + 1e-12 {
        return Err(Error::Config(format!(
            "partition fractions must be positive and sum to ≤ 1, got {:?}",
            fractions
        )));
    }
    let sizes: Vec<usize> = fractions.iter().map(|f| (f * n as f64).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let remainder = n - assigned.min(n);
    let x_size = sizes[0] + remainder;
    let names = ["X", "A", "B", "C"];
    for (i, &sz) in [x_size, sizes[1], sizes[2], sizes[3]].iter().enumerate() {
        if sz < k {
            return Err(Error::Config(format!(
                "partition set {} has {} nodes, fewer than k = {}",
                names[i], sz, k
            )));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let take = |len: usize, cursor: &mut usize| -> Vec<usize> {
        let mut s = order[*cursor..*cursor + len].to_vec();
        *cursor += len;
        s.sort_unstable();
        s
    };
    let mut cursor = 0usize;
    let x = take(x_size, &mut cursor);
    let a = take(sizes[1], &mut cursor);
    let b = take(sizes[2], &mut cursor);
    let c = take(sizes[3], &mut cursor);
    Ok(NodePartition { x, a, b, c, seed })
}
