//! Simple undirected graphs, their Laplacians and Laplacian spectra.
//!
//! Vertices are 0-indexed; the star hub is vertex 0.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcore::{jacobi_eig, Matrix, SpectralDecomp};

/// Eigenvalues with magnitude below this count as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

/// Largest graph [`spectrum`] accepts by default.
pub const DEFAULT_SPECTRUM_CAP: usize = 500;

/// Resampling attempts for ER/WS before giving up on connectivity.
pub const CONNECT_RETRIES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a simple graph; pairs may be given in either orientation but
    /// loops and repeated pairs are rejected.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut edges = BTreeSet::new();
        for (u, v) in pairs {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {u}-{v} out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if !edges.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge {u}-{v}")));
            }
        }
        Ok(Self::from_edge_set(n, edges))
    }

    fn from_edge_set(n: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Self {
            n,
            edges,
            neighbors,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn adjacency(&self) -> Matrix {
        Matrix::from_fn(
            self.n,
            self.n,
            |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 },
        )
    }

    fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(Option::is_some)
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            for (v, d) in self.bfs(s).into_iter().enumerate() {
                if d.is_some() {
                    seen[v] = true;
                }
            }
        }
        count
    }

    /// Reads the edge-list format: first line `n`, then one `u v` pair per line.
    pub fn read_edge_list(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader
            .lines()
            .map(|l| l.map(|s| s.trim().to_string()))
            .filter(|l| l.as_ref().map(|s| !s.is_empty()).unwrap_or(true));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))??;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("bad vertex count {header:?}")))?;
        let mut pairs = Vec::new();
        for line in lines {
            let line = line?;
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad edge line {line:?}")))
            };
            let (u, v) = (next()?, next()?);
            if it.next().is_some() {
                return Err(Error::Parse(format!("bad edge line {line:?}")));
            }
            pairs.push((u, v));
        }
        Graph::new(n, pairs)
    }

    pub fn write_edge_list(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.n)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegularKind {
    Complete,
    Star,
    Path,
    Ring,
}

impl RegularKind {
    pub const ALL: [RegularKind; 4] = [Self::Complete, Self::Star, Self::Path, Self::Ring];

    pub fn min_n(self) -> usize {
        match self {
            RegularKind::Ring => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegularKind::Complete => "complete",
            RegularKind::Star => "star",
            RegularKind::Path => "path",
            RegularKind::Ring => "ring",
        }
    }

    fn check(self, n: usize) -> Result<()> {
        if n < self.min_n() {
            return Err(Error::TooSmall {
                what: self.name(),
                n,
                min: self.min_n(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for RegularKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegularKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "complete" | "k" => Ok(Self::Complete),
            "star" | "s" => Ok(Self::Star),
            "path" | "p" => Ok(Self::Path),
            "ring" | "r" | "cycle" => Ok(Self::Ring),
            other => Err(Error::Parse(format!("unknown graph kind {other:?}"))),
        }
    }
}

pub fn build_regular(kind: RegularKind, n: usize) -> Result<Graph> {
    kind.check(n)?;
    let pairs: Vec<(usize, usize)> = match kind {
        RegularKind::Complete => (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect(),
        RegularKind::Star => (1..n).map(|v| (0, v)).collect(),
        RegularKind::Path => (1..n).map(|v| (v - 1, v)).collect(),
        RegularKind::Ring => (0..n).map(|u| (u, (u + 1) % n)).collect(),
    };
    Graph::new(n, pairs)
}

/// Random graph families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RandomModel {
    /// Erdős–Rényi: each pair independently with probability `p`.
    ErdosRenyi { p: f64 },
    /// Watts–Strogatz: ring lattice of even degree `k`, each edge rewired with probability `p`.
    WattsStrogatz { k: usize, p: f64 },
    /// Barabási–Albert preferential attachment, `m` edges per new vertex.
    BarabasiAlbert { m: usize },
}

/// Seeded random graph. ER and WS are resampled (up to
/// [`CONNECT_RETRIES`] draws from the same stream) until connected.
pub fn build_random(model: RandomModel, n: usize, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        RandomModel::ErdosRenyi { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!(
                    "ER probability {p} not in [0, 1]"
                )));
            }
            retry_until_connected(|| erdos_renyi(n, p, &mut rng))
        }
        RandomModel::WattsStrogatz { k, p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!(
                    "WS probability {p} not in [0, 1]"
                )));
            }
            if k % 2 != 0 || k >= n {
                return Err(Error::InvalidParams(format!(
                    "WS needs even k < n, got k = {k}, n = {n}"
                )));
            }
            retry_until_connected(|| watts_strogatz(n, k, p, &mut rng))
        }
        RandomModel::BarabasiAlbert { m } => {
            if m == 0 || m >= n {
                return Err(Error::InvalidParams(format!(
                    "BA needs 1 <= m < n, got m = {m}, n = {n}"
                )));
            }
            Ok(barabasi_albert(n, m, &mut rng))
        }
    }
}

fn retry_until_connected(mut draw: impl FnMut() -> Graph) -> Result<Graph> {
    for _ in 0..CONNECT_RETRIES {
        let g = draw();
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Disconnected)
}

fn erdos_renyi(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.insert((u, v));
            }
        }
    }
    Graph::from_edge_set(n, edges)
}

fn watts_strogatz(n: usize, k: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for offset in 1..=k / 2 {
        for u in 0..n {
            edges.insert(key(u, (u + offset) % n));
        }
    }
    for offset in 1..=k / 2 {
        for u in 0..n {
            let far = (u + offset) % n;
            if !rng.gen_bool(p) || !edges.contains(&key(u, far)) {
                continue;
            }
            let candidates: Vec<usize> = (0..n)
                .filter(|&w| w != u && !edges.contains(&key(u, w)))
                .collect();
            if let Some(&w) = candidates.choose(rng) {
                edges.remove(&key(u, far));
                edges.insert(key(u, w));
            }
        }
    }
    Graph::from_edge_set(n, edges)
}

fn barabasi_albert(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = BTreeSet::new();
    // every endpoint of every edge, so uniform draws are degree-proportional
    let mut endpoints: Vec<usize> = Vec::new();
    for u in 0..m {
        for v in (u + 1)..m {
            edges.insert((u, v));
            endpoints.extend([u, v]);
        }
    }
    for new in m..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            let t = if endpoints.is_empty() {
                rng.gen_range(0..new)
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            targets.insert(t);
        }
        for t in targets {
            edges.insert((t, new));
            endpoints.extend([t, new]);
        }
    }
    Graph::from_edge_set(n, edges)
}

/// L = D − A.
pub fn laplacian(g: &Graph) -> Matrix {
    Matrix::from_fn(g.n(), g.n(), |i, j| {
        if i == j {
            g.degree(i) as f64
        } else if g.has_edge(i, j) {
            -1.0
        } else {
            0.0
        }
    })
}

/// Largest BFS distance over all vertex pairs.
pub fn diameter(g: &Graph) -> Result<usize> {
    let mut best = 0;
    for s in 0..g.n() {
        for d in g.bfs(s) {
            best = best.max(d.ok_or(Error::Disconnected)?);
        }
    }
    Ok(best)
}

pub fn spectrum(g: &Graph) -> Result<SpectralDecomp> {
    spectrum_with_cap(g, DEFAULT_SPECTRUM_CAP)
}

/// Laplacian eigendecomposition; λ₁ is clamped to exactly 0 when within
/// [`ZERO_EIGENVALUE_TOL`].
pub fn spectrum_with_cap(g: &Graph, cap: usize) -> Result<SpectralDecomp> {
    if g.n() > cap {
        return Err(Error::SizeOverflow { size: g.n(), cap });
    }
    let mut decomp = jacobi_eig(&laplacian(g))?;
    if decomp.eigenvalues[0].abs() <= ZERO_EIGENVALUE_TOL {
        decomp.eigenvalues[0] = 0.0;
    }
    Ok(decomp)
}

/// Number of eigenvalues below [`ZERO_EIGENVALUE_TOL`].
pub fn zero_eigenvalue_count(decomp: &SpectralDecomp) -> usize {
    decomp
        .eigenvalues
        .iter()
        .filter(|l| l.abs() < ZERO_EIGENVALUE_TOL)
        .count()
}

/// Algebraic connectivity from the closed-form spectra of regular families.
pub fn lambda2_analytic(kind: RegularKind, n: usize) -> Result<f64> {
    kind.check(n)?;
    let nf = n as f64;
    Ok(match kind {
        RegularKind::Complete => nf,
        RegularKind::Ring => 2.0 - 2.0 * (2.0 * PI / nf).cos(),
        RegularKind::Star if n == 2 => 2.0,
        RegularKind::Star => 1.0,
        RegularKind::Path => 2.0 - 2.0 * (PI / nf).cos(),
    })
}

/// Bounds `4/(n·d) ≤ λ₂ ≤ n·g_min/(n−1)` with `d` the diameter and
/// `g_min` the smallest degree.
pub fn lambda2_bounds(g: &Graph) -> Result<(f64, f64)> {
    if g.n() < 2 {
        return Err(Error::TooSmall {
            what: "lambda2 bounds",
            n: g.n(),
            min: 2,
        });
    }
    let d = diameter(g)? as f64;
    let n = g.n() as f64;
    let min_degree = g.degrees().into_iter().min().unwrap_or(0) as f64;
    Ok((4.0 / (n * d), n * min_degree / (n - 1.0)))
}
