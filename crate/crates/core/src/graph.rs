//! Average-degree and edge-count estimation from random-vertex,
//! random-edge and degree queries.
//!
//! A vertex weighted by its degree gives `W = 2m` and `W/n = d`. A uniform
//! vertex query is a uniform draw; a random edge with a random endpoint is a
//! proportional draw. The harmonic estimator then estimates `d`, with a
//! doubling search over its advice.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::amplify::{median_of_runs, repetitions_for, BASE_FAILURE};
use crate::error::{Error, Result};
use crate::hybrid::{harmonic_estimate, HarmonicConfig};
use crate::sampling::{HybridOracle, ItemDraw, ItemId, ProportionalOracle, UniformOracle};

/// Per-copy failure of the harmonic estimator inside the search: its 1/3
/// accuracy failure plus the 1/20 chance of falling below `d/20`.
pub const COPY_FAILURE: f64 = BASE_FAILURE + 1.0 / 20.0;

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    degrees: Vec<u32>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(crate::error::invalid("too many vertices"));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        let mut degrees = vec![0u32; n];
        for (u, v) in edges {
            for endpoint in [u, v] {
                if endpoint >= n {
                    return Err(Error::EndpointOutOfRange { endpoint, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(u, v));
            }
            degrees[u] += 1;
            degrees[v] += 1;
            list.push((u as u32, v as u32));
        }
        Ok(Self {
            n,
            edges: list,
            degrees,
        })
    }

    /// Parses `n <count>` followed by one `u v` edge per line. Vertex ids are
    /// 0-based; `#` comments and blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [a, b] = fields[..] else {
                return Err(err("expected two fields".into()));
            };
            if n.is_none() {
                if a != "n" {
                    return Err(err("expected header `n <count>`".into()));
                }
                n = Some(b.parse::<usize>().map_err(|_| err(format!("invalid vertex count `{b}`")))?);
                continue;
            }
            let parse = |s: &str| s.parse::<usize>().map_err(|_| err(format!("invalid vertex `{s}`")));
            edges.push((parse(a)?, parse(b)?));
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing header `n <count>`".into(),
        })?;
        Self::from_edges(n, edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Serializes in the format accepted by [`Graph::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(u, v)| (u as usize, v as usize))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v] as usize
    }

    /// `2m / n`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    /// Number of vertices with at least one incident edge.
    pub fn non_isolated(&self) -> usize {
        self.degrees.iter().filter(|&&d| d > 0).count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounters {
    pub vertex: u64,
    pub edge: u64,
    pub degree: u64,
}

/// Query interface over a [`Graph`], exposed as a hybrid sampling oracle
/// over `U = V` with `w(v) = deg(v)`.
///
/// A uniform draw costs one vertex query and one degree query; a
/// proportional draw costs one edge query and one degree query.
#[derive(Debug, Clone)]
pub struct GraphOracle<'g, R = ChaCha8Rng> {
    graph: &'g Graph,
    rng: R,
    counters: QueryCounters,
}

/// Wraps `graph` in a seeded query oracle.
pub fn degree_sampler<R: RngCore>(graph: &Graph, rng: R) -> GraphOracle<'_, R> {
    GraphOracle {
        graph,
        rng,
        counters: QueryCounters::default(),
    }
}

impl<'g, R: RngCore> GraphOracle<'g, R> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn counters(&self) -> QueryCounters {
        self.counters
    }

    pub fn random_vertex(&mut self) -> usize {
        self.counters.vertex += 1;
        self.rng.gen_range(0..self.graph.n)
    }

    pub fn random_edge(&mut self) -> Result<(usize, usize)> {
        if self.graph.edges.is_empty() {
            return Err(Error::EdgelessGraph);
        }
        self.counters.edge += 1;
        let (u, v) = self.graph.edges[self.rng.gen_range(0..self.graph.edges.len())];
        Ok((u as usize, v as usize))
    }

    pub fn degree(&mut self, v: usize) -> usize {
        self.counters.degree += 1;
        self.graph.degree(v)
    }

    fn weighted(&mut self, v: usize) -> ItemDraw {
        ItemDraw {
            id: ItemId(v as u64),
            weight: self.degree(v) as f64,
        }
    }
}

impl<R: RngCore> UniformOracle for GraphOracle<'_, R> {
    fn sample_uniform(&mut self) -> Result<ItemDraw> {
        let v = self.random_vertex();
        Ok(self.weighted(v))
    }
}

impl<R: RngCore> ProportionalOracle for GraphOracle<'_, R> {
    fn sample_proportional(&mut self) -> Result<ItemDraw> {
        let m = self.graph.edges.len();
        if m == 0 {
            return Err(Error::EdgelessGraph);
        }
        // One draw over the 2m (edge, endpoint) pairs.
        self.counters.edge += 1;
        let slot = self.rng.gen_range(0..2 * m);
        let (u, v) = self.graph.edges[slot / 2];
        let endpoint = if slot % 2 == 0 { u } else { v };
        Ok(self.weighted(endpoint as usize))
    }
}

/// One round of the advice search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchIteration {
    pub theta_tilde: f64,
    /// Target failure of this round's median.
    pub delta: f64,
    pub copies: u32,
    pub d_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSearchTrace {
    pub iterations: Vec<SearchIteration>,
    pub d_hat: f64,
    /// `d̂ · n / 2`; `NaN` when `n` was not known to the search.
    pub m_hat: f64,
}

/// Target failure of round `j` (1-based); these sum to 1/3 over all rounds.
pub fn round_failure(j: u32) -> f64 {
    2.0 / (PI * PI * (j as f64) * (j as f64))
}

/// Doubling search for the average weight with advice-free harmonic
/// estimation (`φ = 1`).
///
/// Round `j` uses advice `θ̃ = 2^{j-1}` and the median of
/// `repetitions_for(round_failure(j), 1/3 + 1/20)` harmonic copies, and the
/// search stops at the first round whose median is at most `θ̃/20`.
pub fn degree_search<O>(oracle: &mut O, eps: f64) -> Result<DegreeSearchTrace>
where
    O: HybridOracle + ?Sized,
{
    let mut iterations = Vec::new();
    let mut theta_tilde = 1.0;
    let mut round = 1;
    loop {
        let delta = round_failure(round);
        let copies = repetitions_for(delta, COPY_FAILURE)?;
        let cfg = HarmonicConfig::new(eps, theta_tilde, 1.0)?;
        let d_hat = median_of_runs(copies, || Ok(harmonic_estimate(&mut *oracle, &cfg)?.theta_hat))?.median;
        iterations.push(SearchIteration {
            theta_tilde,
            delta,
            copies,
            d_hat,
        });
        if d_hat <= theta_tilde / 20.0 {
            return Ok(DegreeSearchTrace {
                iterations,
                d_hat,
                m_hat: f64::NAN,
            });
        }
        theta_tilde *= 2.0;
        round += 1;
    }
}

/// Estimates the average degree `d = 2m/n` and the edge count of the graph
/// behind `oracle`.
pub fn estimate_avg_degree<R: RngCore>(oracle: &mut GraphOracle<'_, R>, eps: f64) -> Result<DegreeSearchTrace> {
    let graph = oracle.graph();
    if graph.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let mut trace = degree_search(oracle, eps)?;
    trace.m_hat = trace.d_hat * graph.vertex_count() as f64 / 2.0;
    Ok(trace)
}
