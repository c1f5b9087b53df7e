//! Deterministic synthetic instances and graphs.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::rng::generator_stream;
use crate::sampling::WeightedInstance;

/// Shape of a generated instance. Item and vertex ids are `0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    /// `n` items of weight 1.
    Uniform { n: u64 },
    /// Item 0 has weight `heavy`, the other `n − 1` items weight 1.
    PointMass { n: u64, heavy: f64 },
    /// The first `heavy_count` items weigh `heavy`, the rest `light`.
    TwoLevel {
        n: u64,
        heavy_count: u64,
        heavy: f64,
        light: f64,
    },
    /// Item `i` weighs `(i + 1)^−alpha`.
    Zipf { n: u64, alpha: f64 },
    /// `per_level` items of weight `2^j` for each `j < levels`.
    Dyadic { levels: u32, per_level: u64 },
    /// Erdős–Rényi graph: each pair is an edge with probability `p`.
    Er { n: u64, p: f64 },
    /// Vertex 0 joined to vertices `1..n`.
    Star { n: u64 },
    /// Path `0 − 1 − … − (n−1)`.
    Path { n: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub seed: u64,
}

/// A generated instance together with its exact ground truth.
#[derive(Debug, Clone)]
pub enum Generated {
    Weights(WeightedInstance),
    Graph(Graph),
}

impl Generated {
    /// Universe size: item count or vertex count.
    pub fn size(&self) -> u64 {
        match self {
            Generated::Weights(inst) => inst.len() as u64,
            Generated::Graph(g) => g.vertex_count() as u64,
        }
    }
}

impl GeneratorKind {
    pub fn is_graph(&self) -> bool {
        matches!(self, Self::Er { .. } | Self::Star { .. } | Self::Path { .. })
    }

    /// Universe size of the generated instance.
    pub fn size(&self) -> u64 {
        match *self {
            Self::Uniform { n }
            | Self::PointMass { n, .. }
            | Self::TwoLevel { n, .. }
            | Self::Zipf { n, .. }
            | Self::Er { n, .. }
            | Self::Star { n }
            | Self::Path { n } => n,
            Self::Dyadic { levels, per_level } => levels as u64 * per_level,
        }
    }

    /// Same shape with universe size `n`. Dyadic instances keep their level
    /// count and rescale the per-level count; two-level instances keep the
    /// heavy count.
    pub fn with_size(&self, n: u64) -> Result<Self> {
        let mut out = *self;
        match &mut out {
            Self::Uniform { n: m }
            | Self::PointMass { n: m, .. }
            | Self::TwoLevel { n: m, .. }
            | Self::Zipf { n: m, .. }
            | Self::Er { n: m, .. }
            | Self::Star { n: m }
            | Self::Path { n: m } => *m = n,
            Self::Dyadic { levels, per_level } => {
                if !n.is_multiple_of(*levels as u64) {
                    return Err(invalid(format!("{n} is not a multiple of {levels} levels")));
                }
                *per_level = n / *levels as u64;
            }
        }
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if self.size() == 0 {
            return Err(invalid("counts must be at least 1"));
        }
        match *self {
            Self::PointMass { heavy, .. } => positive("heavy weight", heavy),
            Self::TwoLevel {
                n,
                heavy_count,
                heavy,
                light,
            } => {
                if heavy_count == 0 || heavy_count > n {
                    return Err(invalid(format!("heavy count must lie in 1..={n}")));
                }
                positive("heavy weight", heavy)?;
                if !(light >= 0.0 && light.is_finite()) {
                    return Err(invalid(format!("light weight must be nonnegative, got {light}")));
                }
                Ok(())
            }
            Self::Zipf { alpha, .. } if !(alpha >= 0.0 && alpha.is_finite()) => {
                Err(invalid(format!("zipf exponent must be nonnegative, got {alpha}")))
            }
            Self::Dyadic { levels, .. } if levels > 1000 => Err(invalid("at most 1000 levels")),
            Self::Er { n, p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid(format!("edge probability must lie in [0, 1], got {p}")));
                }
                if n < 2 {
                    return Err(invalid("graphs need at least 2 vertices"));
                }
                Ok(())
            }
            Self::Star { n } | Self::Path { n } if n < 2 => Err(invalid("graphs need at least 2 vertices")),
            _ => Ok(()),
        }
    }
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

/// Builds the instance or graph described by `spec`. Randomized kinds draw
/// from the generator stream of `spec.seed`, so equal specs give equal output.
pub fn generate_instance(spec: &GeneratorSpec) -> Result<Generated> {
    spec.kind.validate()?;
    let weights = match spec.kind {
        GeneratorKind::Uniform { n } => vec![1.0; n as usize],
        GeneratorKind::PointMass { n, heavy } => {
            let mut w = vec![1.0; n as usize];
            w[0] = heavy;
            w
        }
        GeneratorKind::TwoLevel {
            n,
            heavy_count,
            heavy,
            light,
        } => (0..n).map(|i| if i < heavy_count { heavy } else { light }).collect(),
        GeneratorKind::Zipf { n, alpha } => (1..=n).map(|i| (i as f64).powf(-alpha)).collect(),
        GeneratorKind::Dyadic { levels, per_level } => (0..levels)
            .flat_map(|j| std::iter::repeat_n(2f64.powi(j as i32), per_level as usize))
            .collect(),
        GeneratorKind::Er { n, p } => {
            let n = n as usize;
            let mut rng = generator_stream(spec.seed);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            return graph(n, edges);
        }
        GeneratorKind::Star { n } => return graph(n as usize, (1..n as usize).map(|v| (0, v))),
        GeneratorKind::Path { n } => return graph(n as usize, (1..n as usize).map(|v| (v - 1, v))),
    };
    Ok(Generated::Weights(WeightedInstance::from_weights(weights)?))
}

fn graph(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Generated> {
    let g = Graph::from_edges(n, edges)?;
    if g.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    Ok(Generated::Graph(g))
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Uniform { n } => write!(f, "uniform:{n}"),
            Self::PointMass { n, heavy } => write!(f, "point-mass:{n},{heavy}"),
            Self::TwoLevel {
                n,
                heavy_count,
                heavy,
                light,
            } => write!(f, "two-level:{n},{heavy_count},{heavy},{light}"),
            Self::Zipf { n, alpha } => write!(f, "zipf:{n},{alpha}"),
            Self::Dyadic { levels, per_level } => write!(f, "dyadic:{levels},{per_level}"),
            Self::Er { n, p } => write!(f, "er:{n},{p}"),
            Self::Star { n } => write!(f, "star:{n}"),
            Self::Path { n } => write!(f, "path:{n}"),
        }
    }
}

/// Parses `kind:arg,arg,...`, e.g. `uniform:1000`, `two-level:1010,10,100,1`,
/// `er:2000,0.005`.
impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if args.is_empty() { vec![] } else { args.split(',').map(str::trim).collect() };
        let bad = || invalid(format!("invalid generator `{s}`"));
        let count = |i: usize| -> Result<u64> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let real = |i: usize| -> Result<f64> { args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let arity = |k: usize| if args.len() == k { Ok(()) } else { Err(bad()) };
        let kind = match name {
            "uniform" => {
                arity(1)?;
                Self::Uniform { n: count(0)? }
            }
            "point-mass" => {
                arity(2)?;
                Self::PointMass {
                    n: count(0)?,
                    heavy: real(1)?,
                }
            }
            "two-level" => {
                arity(4)?;
                Self::TwoLevel {
                    n: count(0)?,
                    heavy_count: count(1)?,
                    heavy: real(2)?,
                    light: real(3)?,
                }
            }
            "zipf" => {
                arity(2)?;
                Self::Zipf {
                    n: count(0)?,
                    alpha: real(1)?,
                }
            }
            "dyadic" => {
                arity(2)?;
                Self::Dyadic {
                    levels: count(0)?.try_into().map_err(|_| bad())?,
                    per_level: count(1)?,
                }
            }
            "er" => {
                arity(2)?;
                Self::Er {
                    n: count(0)?,
                    p: real(1)?,
                }
            }
            "star" => {
                arity(1)?;
                Self::Star { n: count(0)? }
            }
            "path" => {
                arity(1)?;
                Self::Path { n: count(0)? }
            }
            _ => return Err(invalid(format!("unknown generator `{name}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}
