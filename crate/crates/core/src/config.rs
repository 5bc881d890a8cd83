//! Experiment configuration: a TOML document with `plant`, `graph`,
//! `coupling`, `grid`, `averaging` and `output` sections.
//!
//! Graph edges are `[i, j, mu]` triples with `i < j`; node 0 is the plant.
//! Instead of an explicit edge list a `generator` table may be given.

use nalgebra::{RowVector3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::graph::ObserverGraph;
use crate::spin_algebra::PlantSpec;
use crate::synthesis::CouplingScheme;

/// Bundled configuration of the five-node complete-graph example.
pub const EXAMPLE_SEC4: &str = include_str!("../configs/example_sec4.toml");

pub fn example_sec4() -> ExperimentConfig {
    parse_config(EXAMPLE_SEC4.as_bytes()).expect("bundled config is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub plant: PlantConfig,
    pub graph: GraphConfig,
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub averaging: AveragingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "experiment".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(default)]
    pub r_p: [f64; 3],
    pub c_p: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    /// Observer node count `N`.
    pub nodes: usize,
    /// Index of the plant node; only 0 is accepted.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub plant_node: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

/// `[i, j, mu]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEntry {
    pub i: usize,
    pub j: usize,
    pub mu: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn value(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(x) => x,
        }
    }
}

impl<'de> Deserialize<'de> for EdgeEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (i, j, mu) = <(usize, usize, Number)>::deserialize(d)?;
        Ok(EdgeEntry {
            i,
            j,
            mu: mu.value(),
        })
    }
}

impl Serialize for EdgeEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.i, self.j, self.mu).serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Complete,
    Path,
    Star,
    RandomConnected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Weight for the deterministic generators.
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_weight_range")]
    pub weight_range: [f64; 2],
    #[serde(default = "default_extra_edge_probability")]
    pub extra_edge_probability: f64,
}

fn one() -> f64 {
    1.0
}

fn default_weight_range() -> [f64; 2] {
    [0.1, 2.0]
}

fn default_extra_edge_probability() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub alpha1: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    pub horizons: Vec<f64>,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            horizons: vec![10.0, 50.0, 100.0, 500.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Artifact {
    /// Coefficient traces, one table per output row.
    Traces,
    /// Running time averages, one table per output row.
    Averages,
    /// Averages at the configured horizons.
    Horizons,
    /// Invariant residual report.
    Residuals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub artifacts: Vec<Artifact>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            artifacts: vec![
                Artifact::Traces,
                Artifact::Averages,
                Artifact::Horizons,
                Artifact::Residuals,
            ],
        }
    }
}

pub fn parse_config(text: &[u8]) -> Result<ExperimentConfig> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Parse(format!("not UTF-8: {e}")))?;
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn finite(field: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation(field, "values must be finite"))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        finite("plant.r_p", &self.plant.r_p)?;
        finite("plant.c_p", &self.plant.c_p)?;
        if self.plant.c_p.iter().all(|&x| x == 0.0) {
            return Err(Error::validation("plant.c_p", "output row must be nonzero"));
        }

        let g = &self.graph;
        if g.plant_node != 0 {
            return Err(Error::validation(
                "graph.plant_node",
                format!("the plant must be node 0, not node {}", g.plant_node),
            ));
        }
        if g.nodes == 0 {
            return Err(Error::validation(
                "graph.nodes",
                "need at least one observer node",
            ));
        }
        match (&g.generator, g.edges.is_empty()) {
            (Some(_), false) => {
                return Err(Error::validation(
                    "graph",
                    "give either `edges` or `generator`, not both",
                ))
            }
            (None, true) => {
                return Err(Error::validation(
                    "graph.edges",
                    "no edges and no generator",
                ))
            }
            _ => {}
        }
        for (k, e) in g.edges.iter().enumerate() {
            let field = format!("graph.edges[{k}]");
            if e.i >= e.j {
                return Err(Error::validation(
                    field,
                    format!("edge [{}, {}] must satisfy i < j", e.i, e.j),
                ));
            }
            if e.j > g.nodes {
                return Err(Error::validation(
                    field,
                    format!(
                        "edge [{}, {}] refers to a node beyond {}",
                        e.i, e.j, g.nodes
                    ),
                ));
            }
            if !(e.mu > 0.0) || !e.mu.is_finite() {
                return Err(Error::validation(
                    field,
                    format!(
                        "weight {} on edge ({}, {}) must be positive",
                        e.mu, e.i, e.j
                    ),
                ));
            }
        }
        if let Some(gen) = &g.generator {
            if !(gen.mu > 0.0) || !gen.mu.is_finite() {
                return Err(Error::validation(
                    "graph.generator.mu",
                    "weight must be positive",
                ));
            }
            let [lo, hi] = gen.weight_range;
            if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
                return Err(Error::validation(
                    "graph.generator.weight_range",
                    format!("need 0 < lo <= hi, got [{lo}, {hi}]"),
                ));
            }
            if !(0.0..=1.0).contains(&gen.extra_edge_probability) {
                return Err(Error::validation(
                    "graph.generator.extra_edge_probability",
                    "must lie in [0, 1]",
                ));
            }
        }

        finite("coupling.alpha1", &self.coupling.alpha1)?;
        if self.coupling.alpha1.iter().all(|&x| x == 0.0) {
            return Err(Error::validation("coupling.alpha1", "must be nonzero"));
        }

        let grid = &self.grid;
        if !(grid.t_max > 0.0) || !grid.t_max.is_finite() {
            return Err(Error::validation(
                "grid.t_max",
                format!("must be positive, got {}", grid.t_max),
            ));
        }
        if !(grid.step > 0.0) || !(grid.step <= grid.t_max) {
            return Err(Error::validation(
                "grid.step",
                format!("must lie in (0, t_max], got {}", grid.step),
            ));
        }
        if self.averaging.horizons.is_empty() {
            return Err(Error::validation(
                "averaging.horizons",
                "need at least one horizon",
            ));
        }
        if let Some(h) = self
            .averaging
            .horizons
            .iter()
            .find(|h| !(**h > 0.0) || !h.is_finite())
        {
            return Err(Error::validation(
                "averaging.horizons",
                format!("horizon {h} must be positive"),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn plant_spec(&self) -> Result<PlantSpec> {
        PlantSpec::new(
            Vector3::from(self.plant.r_p),
            RowVector3::from(self.plant.c_p),
        )
    }

    pub fn coupling_scheme(&self) -> Result<CouplingScheme> {
        CouplingScheme::new(Vector2::from(self.coupling.alpha1), &self.plant_spec()?)
    }

    pub fn build_graph(&self) -> Result<ObserverGraph> {
        let n = self.graph.nodes;
        match &self.graph.generator {
            None => ObserverGraph::from_edges(n, self.graph.edges.iter().map(|e| (e.i, e.j, e.mu))),
            Some(gen) => Ok(match gen.kind {
                GeneratorKind::Complete => ObserverGraph::complete(n, gen.mu),
                GeneratorKind::Path => ObserverGraph::path(n, gen.mu),
                GeneratorKind::Star => ObserverGraph::star(n, gen.mu),
                GeneratorKind::RandomConnected => {
                    let mut rng = ChaCha8Rng::seed_from_u64(gen.seed);
                    let [lo, hi] = gen.weight_range;
                    ObserverGraph::random_connected(
                        n,
                        (lo, hi),
                        gen.extra_edge_probability,
                        &mut rng,
                    )
                }
            }),
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.grid.t_max, self.grid.step)
    }

    /// Replaces the generator seed; no effect on explicit edge lists.
    pub fn set_seed(&mut self, seed: u64) {
        if let Some(gen) = self.graph.generator.as_mut() {
            gen.seed = seed;
        }
    }

    pub fn wants(&self, artifact: Artifact) -> bool {
        self.output.artifacts.contains(&artifact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_example() {
        let cfg = example_sec4();
        assert_eq!(cfg.graph.nodes, 5);
        assert_eq!(cfg.plant.c_p, [1.0, 0.0, 0.0]);
        assert_eq!(cfg.coupling.alpha1, [1.0, 0.0]);
        let g = cfg.build_graph().unwrap();
        assert_eq!(g, ObserverGraph::complete(5, 1.0));
        let rg = g.reduce(1.0).unwrap();
        assert!(rg.edges().all(|(_, _, w)| w == 1.0));
        assert!(rg.plant_attached().values().all(|&w| w == 1.0));
    }

    #[test]
    fn negative_weight_names_edge() {
        let text = EXAMPLE_SEC4.replace("[0, 3, 1.0]", "[0, 3, -1]");
        match parse_config(text.as_bytes()) {
            Err(Error::Validation { field, message }) => {
                assert_eq!(field, "graph.edges[2]");
                assert!(message.contains("(0, 3)"), "{message}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_parse_error() {
        assert!(matches!(parse_config(b""), Err(Error::Parse(_))));
        assert!(matches!(parse_config(b"\xff\xfe"), Err(Error::Parse(_))));
        assert!(matches!(parse_config(b"name = ["), Err(Error::Parse(_))));
    }

    #[test]
    fn validation_errors() {
        let cases = [
            (
                "alpha1 = [1.0, 0.0]",
                "alpha1 = [0.0, 0.0]",
                "coupling.alpha1",
            ),
            ("t_max = 10.0", "t_max = 0.0", "grid.t_max"),
            ("nodes = 5", "nodes = 5\nplant_node = 2", "graph.plant_node"),
            ("[0, 1, 1.0]", "[1, 0, 1.0]", "graph.edges[0]"),
            ("[4, 5, 1.0]", "[4, 6, 1.0]", "graph.edges[14]"),
            (
                "c_p = [1.0, 0.0, 0.0]",
                "c_p = [0.0, 0.0, 0.0]",
                "plant.c_p",
            ),
            (
                "horizons = [10.0, 50.0, 100.0, 500.0, 1000.0]",
                "horizons = [10.0, -1.0]",
                "averaging.horizons",
            ),
        ];
        for (from, to, expected) in cases {
            let text = EXAMPLE_SEC4.replace(from, to);
            match parse_config(text.as_bytes()) {
                Err(Error::Validation { field, .. }) => assert_eq!(field, expected),
                other => panic!("{expected}: got {other:?}"),
            }
        }
    }

    #[test]
    fn integer_weights_accepted() {
        let text = EXAMPLE_SEC4.replace("[0, 1, 1.0]", "[0, 1, 2]");
        let cfg = parse_config(text.as_bytes()).unwrap();
        assert_eq!(cfg.graph.edges[0].mu, 2.0);
    }

    #[test]
    fn generator_configs() {
        let text = r#"
            [plant]
            c_p = [0.0, 0.0, 1.0]
            [graph]
            nodes = 6
            generator = { kind = "random-connected", seed = 9 }
            [coupling]
            alpha1 = [0.5, 0.5]
        "#;
        let cfg = parse_config(text.as_bytes()).unwrap();
        let a = cfg.build_graph().unwrap();
        assert_eq!(a, cfg.build_graph().unwrap());
        assert!(a.validate().is_ok());
        let mut other = cfg.clone();
        other.set_seed(10);
        assert_ne!(a, other.build_graph().unwrap());

        let both = text.replace("nodes = 6", "nodes = 6\nedges = [[0, 1, 1.0]]");
        assert!(matches!(
            parse_config(both.as_bytes()),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let cfg = example_sec4();
        let back = parse_config(cfg.to_toml().as_bytes()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }
}
