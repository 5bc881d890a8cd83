//! Experiment orchestration behind the `synthesize`, `simulate` and `verify`
//! commands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Artifact, ExperimentConfig};
use crate::dynamics::{
    self, check_convergence, check_hamiltonian_conservation, check_norm_bound,
    check_symplectic_ccr, coefficient_traces, propagate, running_average_closed_form,
    spectrum_real_part_ratio, GridAdvisory, TimeGrid, PLANT_ROW_RESIDUAL,
};
use crate::error::{Error, Result};
use crate::graph::ObserverGraph;
use crate::spin_algebra::{
    pauli_matrices, theta_identities_residual, theta_identities_tolerance, verify_zp_invariance,
    PlantSpec,
};
use crate::synthesis::{
    assemble_augmented, build_realization, certify_positive_definite, sym_extremes,
    AugmentedSystem, CouplingScheme, NetworkRealization, PositivityCertificate,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerance shared by the symplectic, energy and plant-row checks.
pub const INVARIANT_TOL: f64 = 1e-8;

/// Row-major matrix with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixRecord {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl From<&DVector<f64>> for MatrixRecord {
    fn from(v: &DVector<f64>) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.as_slice().to_vec(),
        }
    }
}

/// Everything produced by synthesis for one configuration.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub plant: PlantSpec,
    pub graph: ObserverGraph,
    pub realization: NetworkRealization,
    pub augmented: AugmentedSystem,
    pub certificate: PositivityCertificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRecord {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub comparison_lambda_min: f64,
    pub laplacian_nullity: usize,
    pub components: usize,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisReport {
    pub name: String,
    pub observers: usize,
    pub omega: Vec<f64>,
    pub r_o: MatrixRecord,
    pub a_o: MatrixRecord,
    pub b: MatrixRecord,
    pub c_o: MatrixRecord,
    pub a_a: MatrixRecord,
    pub c_a: MatrixRecord,
    pub certificate: CertificateRecord,
}

pub fn synthesize_graph(
    plant: &PlantSpec,
    scheme: &CouplingScheme,
    graph: ObserverGraph,
) -> Result<Synthesis> {
    let realization = build_realization(&graph, scheme)?;
    let certificate = certify_positive_definite(&realization)?;
    let augmented = assemble_augmented(plant, &realization)?;
    Ok(Synthesis {
        plant: plant.clone(),
        graph,
        realization,
        augmented,
        certificate,
    })
}

pub fn run_synthesize(cfg: &ExperimentConfig) -> Result<Synthesis> {
    let plant = cfg.plant_spec()?;
    let scheme = cfg.coupling_scheme()?;
    synthesize_graph(&plant, &scheme, cfg.build_graph()?)
}

impl Synthesis {
    pub fn report(&self, name: &str) -> SynthesisReport {
        let real = &self.realization;
        let cert = &self.certificate;
        SynthesisReport {
            name: name.to_string(),
            observers: real.n(),
            omega: real.omega().as_slice().to_vec(),
            r_o: real.r_o().into(),
            a_o: real.a_o().into(),
            b: real.b().into(),
            c_o: real.c_o().into(),
            a_a: self.augmented.a_a().into(),
            c_a: self.augmented.c_a().into(),
            certificate: CertificateRecord {
                lambda_min: cert.lambda_min,
                lambda_max: cert.lambda_max,
                comparison_lambda_min: cert.comparison_lambda_min,
                laplacian_nullity: cert.laplacian_nullity,
                components: cert.components,
                certified: true,
            },
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_synthesis(report: &SynthesisReport, out_dir: &Path) -> Result<PathBuf> {
    ensure_dir(out_dir)?;
    let path = out_dir.join("synthesis.json");
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&path, &(text + "\n"))?;
    Ok(path)
}

/// Comma-delimited table with a one-line header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn column_names(row: usize, cols: usize) -> impl Iterator<Item = String> {
    (1..=cols).map(move |c| format!("row{row}_col{c}"))
}

/// Per-row time table; output rows are numbered from 1 (row 1 is the plant).
fn time_table(
    name: String,
    time_label: &str,
    times: &[f64],
    row: usize,
    values: &DMatrix<f64>,
) -> Table {
    let header = std::iter::once(time_label.to_string())
        .chain(column_names(row, values.ncols()))
        .collect();
    let rows = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            std::iter::once(t)
                .chain(values.row(k).iter().copied())
                .collect()
        })
        .collect();
    Table { name, header, rows }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl ResidualEntry {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveMetadata {
    pub name: String,
    pub config_hash: String,
    pub tool_version: String,
    pub observers: usize,
    pub samples: usize,
    pub t_max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceArchive {
    pub metadata: ArchiveMetadata,
    pub traces: Vec<Table>,
    pub averages: Vec<Table>,
    pub horizons: Option<Table>,
    pub residuals: Vec<ResidualEntry>,
    pub advisories: Vec<String>,
}

/// Seeded nonzero initial observer state for energy checks.
fn random_state<R: Rng>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let x = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        if x.norm() > 1e-3 {
            return x;
        }
    }
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<TraceArchive> {
    let syn = run_synthesize(cfg)?;
    let grid = cfg.time_grid()?;
    let aug = &syn.augmented;
    let real = &syn.realization;
    let prop = propagate(aug, &grid)?;
    let mut result = coefficient_traces(aug, &prop)?;
    let averages = running_average_closed_form(aug, &prop)?;
    result.set_running_avg(averages.clone());

    let prop_o = prop.observer_block();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x0 = random_state(2 * real.n(), &mut rng);
    let mut residuals = vec![
        ResidualEntry::at_most(
            PLANT_ROW_RESIDUAL,
            result.residual(PLANT_ROW_RESIDUAL).unwrap_or(f64::NAN),
            INVARIANT_TOL,
        ),
        ResidualEntry::at_most(
            "symplectic",
            check_symplectic_ccr(real, &prop_o),
            INVARIANT_TOL,
        ),
        ResidualEntry::at_most(
            "hamiltonian_drift",
            check_hamiltonian_conservation(real, &x0, &prop_o)?,
            INVARIANT_TOL,
        ),
        ResidualEntry::at_most(
            "norm_bound_ratio",
            check_norm_bound(real, &prop_o)?,
            1.0 + INVARIANT_TOL,
        ),
    ];
    let convergence = check_convergence(aug, real, &cfg.averaging.horizons)?;
    for e in &convergence.entries {
        residuals.push(ResidualEntry::at_most(
            format!("consensus_deviation_T{}", e.horizon),
            e.deviation,
            e.bound,
        ));
    }

    let mut advisories = Vec::new();
    if let Some(GridAdvisory::GridTooCoarse { rate_times_step }) = dynamics::grid_advisory(&result)
    {
        advisories.push(format!(
            "GridTooCoarse: max|A_a| * step = {rate_times_step} exceeds {}",
            dynamics::GRID_RATE_LIMIT
        ));
    }

    let times = grid.times();
    let traces = result
        .traces()
        .iter()
        .enumerate()
        .map(|(k, t)| time_table(format!("traces_row{}", k + 1), "time", times, k + 1, t))
        .collect();
    let averages = averages
        .iter()
        .enumerate()
        .map(|(k, t)| time_table(format!("averages_row{}", k + 1), "T", times, k + 1, t))
        .collect();

    let cols = aug.a_a().ncols();
    let mut horizon_rows = Vec::new();
    for &h in &cfg.averaging.horizons {
        let avg = dynamics::time_average_closed_form(aug, h)?;
        for k in 0..avg.nrows() {
            horizon_rows.push(
                [h, (k + 1) as f64]
                    .into_iter()
                    .chain(avg.row(k).iter().copied())
                    .collect(),
            );
        }
    }
    let horizons = Table {
        name: "horizon_averages".into(),
        header: ["horizon".to_string(), "output_row".to_string()]
            .into_iter()
            .chain((1..=cols).map(|c| format!("col{c}")))
            .collect(),
        rows: horizon_rows,
    };

    Ok(TraceArchive {
        metadata: ArchiveMetadata {
            name: cfg.name.clone(),
            config_hash: cfg.hash(),
            tool_version: TOOL_VERSION.to_string(),
            observers: real.n(),
            samples: grid.len(),
            t_max: cfg.grid.t_max,
            step: cfg.grid.step,
        },
        traces,
        averages,
        horizons: Some(horizons),
        residuals,
        advisories,
    })
}

impl TraceArchive {
    /// Writes the requested tables (one CSV per output row) and the combined
    /// `archive.json`. Returns the written paths in order.
    pub fn write(&self, out_dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
        ensure_dir(out_dir)?;
        let mut written = Vec::new();
        let mut emit = |table: &Table| -> Result<()> {
            let path = out_dir.join(format!("{}.csv", table.name));
            write_file(&path, &table.to_csv())?;
            written.push(path);
            Ok(())
        };
        if artifacts.contains(&Artifact::Traces) {
            self.traces.iter().try_for_each(&mut emit)?;
        }
        if artifacts.contains(&Artifact::Averages) {
            self.averages.iter().try_for_each(&mut emit)?;
        }
        if artifacts.contains(&Artifact::Horizons) {
            if let Some(h) = &self.horizons {
                emit(h)?;
            }
        }
        if artifacts.contains(&Artifact::Residuals) {
            let mut text = String::from("name,value,limit,passed\n");
            for r in &self.residuals {
                text.push_str(&format!(
                    "{},{:e},{:e},{}\n",
                    r.name, r.value, r.limit, r.passed
                ));
            }
            let path = out_dir.join("residuals.csv");
            write_file(&path, &text)?;
            written.push(path);
        }
        let path = out_dir.join("archive.json");
        let text = serde_json::to_string(self).expect("archive serializes");
        write_file(&path, &(text + "\n"))?;
        written.push(path);
        Ok(written)
    }

    pub fn residuals_passed(&self) -> bool {
        self.residuals.iter().all(|r| r.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    Above,
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            limit,
            passed: value <= limit,
            detail: None,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::Above,
            limit,
            passed: value > limit,
            detail: None,
        }
    }

    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            relation: Relation::AtMost,
            limit: f64::NAN,
            passed: false,
            detail: Some(err.to_string()),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::Above => ">",
        };
        write!(
            f,
            "{status} {:<28} {:>12.4e} {op} {:.4e}",
            self.name, self.value, self.limit
        )?;
        if let Some(d) = &self.detail {
            write!(f, "  ({d})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// 0 when every check passes, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            3
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Pauli commutators, the four `Θ` identities over `pairs` random inputs in
/// `[-10, 10]³`, and `C_p Θ(C_pᵀ) = 0` for the given plant.
pub fn algebra_checks<R: Rng>(plant: &PlantSpec, pairs: usize, rng: &mut R) -> Vec<Check> {
    let pauli = pauli_matrices();
    let mut worst_ratio = 0.0f64;
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let beta = Vector3::from_fn(|_, _| rng.random_range(-10.0..=10.0));
        let gamma = Vector3::from_fn(|_, _| rng.random_range(-10.0..=10.0));
        let r = theta_identities_residual(&beta, &gamma);
        worst = worst.max(r);
        worst_ratio = worst_ratio.max(r / theta_identities_tolerance(&beta, &gamma));
    }
    vec![
        Check::at_most("pauli_commutators", pauli.commutator_residual(), 0.0),
        Check::at_most("theta_identities", worst, 1e-10)
            .with_detail(format!("max residual/scaled tolerance = {worst_ratio:.3e}")),
        Check::at_most(
            "zp_invariance",
            verify_zp_invariance(plant),
            1e-14 * plant.c_p().norm_squared(),
        ),
    ]
}

/// Structural and dynamical checks on one realization. Works on unchecked
/// realizations too; failures are report content, not errors.
pub fn realization_checks(
    plant: &PlantSpec,
    real: &NetworkRealization,
    grid: &TimeGrid,
    horizons: &[f64],
    seed: u64,
) -> Vec<Check> {
    let mut checks = Vec::new();
    let (lambda_min, lambda_max) = sym_extremes(real.r_o());
    match certify_positive_definite(real) {
        Ok(cert) => checks.push(
            Check::above(
                "lemma_positive_definite",
                cert.lambda_min,
                1e-10 * cert.lambda_max,
            )
            .with_detail(format!(
                "comparison lambda_min = {:.4e}, components = {}, nullity = {}",
                cert.comparison_lambda_min, cert.components, cert.laplacian_nullity
            )),
        ),
        Err(e) => checks.push(
            Check::above("lemma_positive_definite", lambda_min, 1e-10 * lambda_max)
                .with_detail(e.to_string()),
        ),
    }
    let asym = (real.r_o() - real.r_o().transpose()).amax();
    checks.push(Check::at_most("r_o_symmetry", asym, 0.0));

    let aug = match assemble_augmented(plant, real) {
        Ok(a) => a,
        Err(e) => {
            checks.push(Check::failed("assemble_augmented", &e));
            return checks;
        }
    };
    let prop = match propagate(&aug, grid) {
        Ok(p) => p,
        Err(e) => {
            checks.push(Check::failed("propagate", &e));
            return checks;
        }
    };
    let prop_o = prop.observer_block();
    match coefficient_traces(&aug, &prop) {
        Ok(res) => checks.push(Check::at_most(
            PLANT_ROW_RESIDUAL,
            res.residual(PLANT_ROW_RESIDUAL).unwrap_or(f64::NAN),
            INVARIANT_TOL,
        )),
        Err(e) => checks.push(Check::failed(PLANT_ROW_RESIDUAL, &e)),
    }
    checks.push(Check::at_most(
        "symplectic_ccr",
        check_symplectic_ccr(real, &prop_o),
        INVARIANT_TOL,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = random_state(2 * real.n(), &mut rng);
    checks.push(match check_hamiltonian_conservation(real, &x0, &prop_o) {
        Ok(v) => Check::at_most("hamiltonian_drift", v, INVARIANT_TOL),
        Err(e) => Check::failed("hamiltonian_drift", &e),
    });
    checks.push(match check_norm_bound(real, &prop_o) {
        Ok(v) => Check::at_most("norm_bound_ratio", v, 1.0 + INVARIANT_TOL),
        Err(e) => Check::failed("norm_bound_ratio", &e),
    });
    checks.push(Check::at_most(
        "spectrum_imaginary",
        spectrum_real_part_ratio(real.a_o()),
        1e-10,
    ));
    checks.push(match check_convergence(&aug, real, horizons) {
        Ok(rep) => {
            let worst = rep
                .entries
                .iter()
                .map(|e| e.deviation / e.bound)
                .fold(0.0, f64::max);
            Check::at_most("consensus_decay", worst, 1.0).with_detail(format!(
                "max D(T)*T/K over {} horizons, K = {:.4e}",
                rep.entries.len(),
                rep.constant
            ))
        }
        Err(e) => Check::failed("consensus_decay", &e),
    });
    checks
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let syn = run_synthesize(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.graph.generator.as_ref().map_or(0, |g| g.seed));
    let mut checks = algebra_checks(&syn.plant, 1000, &mut rng);
    checks.extend(realization_checks(
        &syn.plant,
        &syn.realization,
        &cfg.time_grid()?,
        &cfg.averaging.horizons,
        1,
    ));
    Ok(VerifyReport { checks })
}

/// Parameters of a random-graph verification sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub seed: u64,
    pub count: usize,
    pub max_nodes: usize,
    pub weight_range: (f64, f64),
    pub t_max: f64,
    pub step: f64,
    pub horizons: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            count: 50,
            max_nodes: 8,
            weight_range: (0.1, 2.0),
            t_max: 50.0,
            step: 0.25,
            horizons: vec![100.0, 200.0, 400.0, 800.0],
        }
    }
}

/// One random network of a sweep: plant output, coupling direction and graph.
pub fn sweep_instance(
    sweep: &SweepConfig,
    index: usize,
) -> Result<(PlantSpec, CouplingScheme, ObserverGraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    rng.set_stream(index as u64);
    let n = rng.random_range(1..=sweep.max_nodes);
    let c_p = loop {
        let c = nalgebra::RowVector3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
        if c.norm() > 1e-3 {
            break c;
        }
    };
    let plant = PlantSpec::free(c_p)?;
    let alpha1 = loop {
        let a = nalgebra::Vector2::from_fn(|_, _| rng.random_range(-1.0..=1.0));
        if a.norm() > 0.1 {
            break a;
        }
    };
    let scheme = CouplingScheme::new(alpha1, &plant)?;
    let graph = ObserverGraph::random_connected(n, sweep.weight_range, 0.3, &mut rng);
    Ok((plant, scheme, graph))
}

/// Runs the full battery over `count` random connected networks and reports
/// the worst value of each check.
pub fn run_verify_sweep(sweep: &SweepConfig) -> Result<VerifyReport> {
    let grid = TimeGrid::uniform(sweep.t_max, sweep.step)?;
    let per_graph = (0..sweep.count)
        .into_par_iter()
        .map(|k| {
            let (plant, scheme, graph) = sweep_instance(sweep, k)?;
            let real = build_realization(&graph, &scheme)?;
            Ok(realization_checks(
                &plant,
                &real,
                &grid,
                &sweep.horizons,
                k as u64,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    let plant = sweep_instance(sweep, 0)?.0;
    let mut checks = algebra_checks(&plant, 1000, &mut rng);
    let Some(first) = per_graph.first() else {
        return Ok(VerifyReport { checks });
    };
    for (idx, template) in first.iter().enumerate() {
        let mut worst = template.clone();
        let mut failures = 0usize;
        for graph_checks in &per_graph {
            let c = &graph_checks[idx];
            if !c.passed {
                failures += 1;
            }
            let worse = match c.relation {
                Relation::AtMost => !(c.value <= worst.value),
                Relation::Above => c.value / c.limit < worst.value / worst.limit,
            };
            if worse || (!c.passed && worst.passed) {
                worst = c.clone();
            }
        }
        worst.passed = failures == 0;
        worst.detail = Some(format!(
            "worst of {} graphs, {} failing",
            per_graph.len(),
            failures
        ));
        checks.push(worst);
    }
    Ok(VerifyReport { checks })
}
