//! Experiments selectable by name. Each one writes its CSV tables and plot
//! scripts into the run directory.

use std::f64::consts::FRAC_PI_2;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rayon::prelude::*;
use thiserror::Error;

use shearless_core::classical::{self, locate_extremum, rotation_profile};
use shearless_core::entanglement::{concurrence_series, lookup_estimator};
use shearless_core::floquet::{
    circular_gaps, find_peaks, floquet_decompose, ladder_gaps, local_spectrum, mean, monodromy, relative_std,
    smooth_spectrum_on_grid,
};
use shearless_core::quantum::{gaussian_packet, packet_diagnostics, spin_distribution, Propagator};
use shearless_core::ValidatedParams;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{real, Header, OutputTable, Value};
use crate::plot::{emit_plot_script, PlotError};

pub const NORM_DRIFT_LIMIT: f64 = 1e-10;
pub const WEIGHT_SUM_LIMIT: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("numerical contract violated: {0}")]
    Contract(String),
    #[error("numerical contract violated: {0}")]
    Numerical(#[from] shearless_core::Error),
}

impl RunError {
    /// 1 for configuration and environment problems, 2 for numerical contracts.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Contract(_) | Self::Numerical(_) => 2,
            _ => 1,
        }
    }
}

pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub params: &'a ValidatedParams,
    pub dir: PathBuf,
    experiment: &'static str,
}

impl<'a> RunContext<'a> {
    pub fn new(experiment: &'static str, config: &'a ExperimentConfig, params: &'a ValidatedParams, dir: PathBuf) -> Self {
        Self {
            config,
            params,
            dir,
            experiment,
        }
    }

    fn write(&self, table: &OutputTable) -> Result<PathBuf, RunError> {
        let header = Header::new(self.experiment, self.config, self.params);
        Ok(table.write(&self.dir, &header)?)
    }

    fn plot(&self, stem: &str, kind: &str, data: &[PathBuf], table: &OutputTable) -> Result<PathBuf, RunError> {
        Ok(emit_plot_script(&self.dir, stem, kind, data, &table.columns)?)
    }
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Runs and returns the files written.
    fn run(&self, ctx: &RunContext) -> Result<Vec<PathBuf>, RunError>;
}

struct Sos;

impl Experiment for Sos {
    fn name(&self) -> &'static str {
        "sos"
    }

    fn description(&self) -> &'static str {
        "stroboscopic surface of section of the classical image"
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<PathBuf>, RunError> {
        let c = &ctx.config.sos;
        let seeds = classical::seed_grid(ctx.params.sites(), c.nx, c.np);
        let sos = classical::surface_of_section(ctx.params, &seeds, c.periods);
        let mut table = OutputTable::new("sos", &["seed_id", "n", "x", "p"]);
        for (id, orbit) in sos.orbits.iter().enumerate() {
            for (n, z) in orbit.iter().enumerate() {
                table.push(vec![id.into(), n.into(), z.x.into(), z.p.into()]);
            }
        }
        let csv = ctx.write(&table)?;
        let gp = ctx.plot("sos", "sos", std::slice::from_ref(&csv), &table)?;
        Ok(vec![csv, gp])
    }
}

struct Evolve;

impl Experiment for Evolve {
    fn name(&self) -> &'static str {
        "evolve"
    }

    fn description(&self) -> &'static str {
        "spin distribution P(j, t) of the Gaussian packet with center, width and IPR"
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<PathBuf>, RunError> {
        let p = ctx.params;
        let c = &ctx.config.evolve;
        let prop = Propagator::new(p);
        let mut psi = gaussian_packet(p, &ctx.config.packet_spec())?;
        let dt = p.period() / c.snapshots_per_period as f64;
        let mut density = OutputTable::new("evolve_density", &["t", "j", "P"]);
        let mut diagnostics = OutputTable::new("evolve_diagnostics", &["t", "center", "width", "ipr", "norm"]);
        let mut drift: f64 = 0.0;
        for k in 0..=c.periods * c.snapshots_per_period {
            let t = k as f64 * dt;
            if k > 0 {
                psi = prop.propagate(&psi, (k - 1) as f64 * dt, t)?;
            }
            let dist = spin_distribution(&psi);
            for (j, &prob) in dist.values().iter().enumerate() {
                density.push(vec![t.into(), (j + 1).into(), prob.into()]);
            }
            let d = packet_diagnostics(&dist);
            let norm = psi.norm_sqr();
            drift = drift.max((norm - 1.0).abs());
            diagnostics.push(vec![t.into(), d.center.into(), d.width.into(), d.ipr.into(), norm.into()]);
        }
        diagnostics.note(format!("max norm drift {}", real(drift)));
        let a = ctx.write(&density)?;
        let b = ctx.write(&diagnostics)?;
        let ga = ctx.plot("evolve_density", "heatmap", std::slice::from_ref(&a), &density)?;
        let gb = ctx.plot("evolve_diagnostics", "series", std::slice::from_ref(&b), &diagnostics)?;
        if drift > NORM_DRIFT_LIMIT {
            return Err(RunError::Contract(format!(
                "norm drift {drift:e} exceeds {NORM_DRIFT_LIMIT:e}"
            )));
        }
        Ok(vec![a, b, ga, gb])
    }
}

struct Floquet;

impl Experiment for Floquet {
    fn name(&self) -> &'static str {
        "floquet"
    }

    fn description(&self) -> &'static str {
        "quasienergy spectrum local to the packet, smoothed, with peak detection"
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<PathBuf>, RunError> {
        let c = &ctx.config.floquet;
        let u = monodromy(ctx.params)?;
        let decomp = floquet_decompose(&u)?;
        let psi0 = gaussian_packet(ctx.params, &ctx.config.packet_spec())?;
        let spectrum = local_spectrum(&decomp, &psi0)?;

        let mut lines = OutputTable::new("floquet_lines", &["m", "quasienergy", "weight", "kept"]);
        for (m, l) in spectrum.lines().iter().enumerate() {
            let kept = usize::from(l.weight >= c.weight_threshold);
            lines.push(vec![m.into(), l.quasienergy.into(), l.weight.into(), kept.into()]);
        }
        let total = spectrum.total_weight();
        lines.note(format!(
            "kept = 1 marks weight >= {}; total weight over all lines {}",
            c.weight_threshold,
            real(total)
        ));
        lines.note(format!("unitarity residual {}", real(u.unitarity_residual())));

        let smoothed = smooth_spectrum_on_grid(&spectrum, c.sigma, c.grid_points)?;
        let mut density = OutputTable::new("floquet_smoothed", &["quasienergy", "density"]);
        for (&e, &s) in smoothed.grid.iter().zip(&smoothed.density) {
            density.push(vec![e.into(), s.into()]);
        }
        density.note(format!("sigma {}; all lines smoothed", c.sigma));

        let found = find_peaks(&smoothed, c.prominence);
        let positions: Vec<f64> = found.iter().map(|pk| pk.quasienergy).collect();
        let gaps = circular_gaps(&positions);
        let mut peaks = OutputTable::new("floquet_peaks", &["quasienergy", "height", "prominence", "gap_to_next"]);
        for (pk, &gap) in found.iter().zip(&gaps) {
            peaks.push(vec![pk.quasienergy.into(), pk.height.into(), pk.prominence.into(), gap.into()]);
        }
        peaks.note(format!("sigma {}; minimum prominence {} of the tallest peak", c.sigma, c.prominence));
        if found.is_empty() {
            peaks.note("no peaks");
        } else {
            peaks.note(format!(
                "{} peaks; mean gap {}; gap relative std {}",
                found.len(),
                real(mean(&gaps)),
                real(relative_std(&gaps))
            ));
            let ladder = ladder_gaps(&gaps);
            if ladder.len() >= 2 {
                peaks.note(format!(
                    "without the widest gap: mean {}; relative std {}",
                    real(mean(&ladder)),
                    real(relative_std(&ladder))
                ));
            }
        }

        let a = ctx.write(&lines)?;
        let b = ctx.write(&density)?;
        let d = ctx.write(&peaks)?;
        let g = ctx.plot("floquet_spectrum", "spectrum", &[b.clone(), a.clone()], &density)?;
        if (total - 1.0).abs() > WEIGHT_SUM_LIMIT {
            return Err(RunError::Contract(format!(
                "local spectrum weights sum to {total}, not 1 within {WEIGHT_SUM_LIMIT:e}"
            )));
        }
        Ok(vec![a, b, d, g])
    }
}

struct Concurrence;

impl Experiment for Concurrence {
    fn name(&self) -> &'static str {
        "concurrence"
    }

    fn description(&self) -> &'static str {
        "nearest-neighbour concurrence time series"
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<PathBuf>, RunError> {
        let c = &ctx.config.concurrence;
        let pairs = ctx.config.pairs();
        let estimator = lookup_estimator(&c.estimator)?;
        let series = concurrence_series(
            ctx.params,
            &ctx.config.packet_spec(),
            &pairs,
            c.periods,
            c.samples_per_period,
            estimator,
        )?;
        let names: Vec<String> = std::iter::once("t".to_string())
            .chain(pairs.iter().map(|(i, j)| format!("C_{i}_{j}")))
            .collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut table = OutputTable::new("concurrence", &refs);
        for (t, row) in series.times.iter().zip(&series.values) {
            table.push(std::iter::once(*t).chain(row.iter().copied()).map(Value::from).collect());
        }
        table.note(format!("estimator {}", estimator.name()));
        let csv = ctx.write(&table)?;
        let gp = ctx.plot("concurrence", "concurrence", std::slice::from_ref(&csv), &table)?;
        Ok(vec![csv, gp])
    }
}

struct Rotation;

impl Experiment for Rotation {
    fn name(&self) -> &'static str {
        "rotation"
    }

    fn description(&self) -> &'static str {
        "rotation-number profile over initial momentum and its extremum"
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<PathBuf>, RunError> {
        let profile = rotation_profile(ctx.params, &ctx.config.rotation_scan())?;
        let mut table = OutputTable::new("rotation", &["p0", "nu", "convergence_error"]);
        for s in &profile {
            table.push(vec![s.p0.into(), s.rotation.nu.into(), s.rotation.convergence_error.into()]);
        }
        let mut extremum = OutputTable::new("rotation_extremum", &["p_star", "nu_star", "kind"]);
        match locate_extremum(&profile) {
            Ok(loc) => {
                let kind = if loc.is_maximum { "maximum" } else { "minimum" };
                extremum.push(vec![loc.p.into(), loc.nu.into(), Value::Text(kind.into())]);
            }
            Err(shearless_core::Error::NotFound) => {
                extremum.push(vec![Value::Empty, Value::Empty, Value::Empty]);
                extremum.note("no interior extremum: the rotation number is monotone on the scanned range");
            }
            Err(e) => return Err(e.into()),
        }
        let a = ctx.write(&table)?;
        let b = ctx.write(&extremum)?;
        let g = ctx.plot("rotation", "series", std::slice::from_ref(&a), &table)?;
        Ok(vec![a, b, g])
    }
}

struct Ensemble;

impl Experiment for Ensemble {
    fn name(&self) -> &'static str {
        "ensemble"
    }

    fn description(&self) -> &'static str {
        "spreading of the matched classical cloud"
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<PathBuf>, RunError> {
        let c = &ctx.config.ensemble;
        let spread = classical::ensemble_spread(
            ctx.params,
            &ctx.config.packet_spec(),
            c.n_samples,
            c.periods,
            c.rng_seed,
        )?;
        let mut table = OutputTable::new("ensemble", &["n", "t", "circular_variance", "variance_sites"]);
        for (n, (cv, vs)) in spread.circular_variance.iter().zip(&spread.variance_sites).enumerate() {
            let t = n as f64 * ctx.params.period();
            table.push(vec![n.into(), t.into(), (*cv).into(), (*vs).into()]);
        }
        let csv = ctx.write(&table)?;
        let gp = ctx.plot("ensemble", "series", std::slice::from_ref(&csv), &table)?;
        Ok(vec![csv, gp])
    }
}

#[derive(Default)]
pub struct ExperimentRegistry {
    entries: Vec<Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn builtin() -> Self {
        let mut r = Self::default();
        r.register(Box::new(Sos));
        r.register(Box::new(Evolve));
        r.register(Box::new(Floquet));
        r.register(Box::new(Concurrence));
        r.register(Box::new(Rotation));
        r.register(Box::new(Ensemble));
        r
    }

    /// Adds an experiment, replacing any with the same name.
    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.entries.retain(|e| e.name() != experiment.name());
        self.entries.push(experiment);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.entries.iter().find(|e| e.name() == name).map(|e| e.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.entries.iter().map(|e| e.as_ref())
    }
}

static EXPERIMENTS: LazyLock<ExperimentRegistry> = LazyLock::new(ExperimentRegistry::builtin);

pub fn experiments() -> &'static ExperimentRegistry {
    &EXPERIMENTS
}

pub fn run_experiment(name: &str, config: &ExperimentConfig, params: &ValidatedParams, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let experiment = experiments()
        .get(name)
        .ok_or_else(|| RunError::UnknownExperiment(name.to_string()))?;
    let ctx = RunContext::new(experiment.name(), config, params, dir.to_path_buf());
    experiment.run(&ctx)
}

/// One figure panel: an experiment at a fixed frequency and packet momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub id: &'static str,
    pub experiment: &'static str,
    pub omega: f64,
    pub k0: f64,
}

pub const PANELS: [Panel; 15] = [
    Panel { id: "fig1a", experiment: "sos", omega: 0.20, k0: 0.0 },
    Panel { id: "fig1b", experiment: "sos", omega: 0.16, k0: 0.0 },
    Panel { id: "fig1c", experiment: "sos", omega: 0.12, k0: 0.0 },
    Panel { id: "fig2a", experiment: "evolve", omega: 0.20, k0: 1.0 },
    Panel { id: "fig2b", experiment: "evolve", omega: 0.20, k0: 0.0 },
    Panel { id: "fig2c", experiment: "evolve", omega: 0.12, k0: 0.0 },
    Panel { id: "fig3a", experiment: "floquet", omega: 1.0, k0: FRAC_PI_2 },
    Panel { id: "fig3b", experiment: "floquet", omega: 0.12, k0: 0.0 },
    Panel { id: "fig3c", experiment: "floquet", omega: 0.20, k0: 0.0 },
    Panel { id: "fig4a", experiment: "concurrence", omega: 0.20, k0: 0.0 },
    Panel { id: "fig4b", experiment: "concurrence", omega: 0.12, k0: 0.0 },
    Panel { id: "rotation_020", experiment: "rotation", omega: 0.20, k0: 0.0 },
    Panel { id: "rotation_012", experiment: "rotation", omega: 0.12, k0: 0.0 },
    Panel { id: "ensemble_020", experiment: "ensemble", omega: 0.20, k0: 0.0 },
    Panel { id: "ensemble_012", experiment: "ensemble", omega: 0.12, k0: 0.0 },
];

#[derive(Debug)]
pub struct PanelOutcome {
    pub panel: Panel,
    pub result: Result<Vec<PathBuf>, RunError>,
}

/// Runs every panel concurrently, each into `<output_dir>/<panel id>`.
/// `base` supplies everything except the panel's omega and k0.
pub fn reproduce_paper(base: &ExperimentConfig, panels: &[Panel]) -> Vec<PanelOutcome> {
    panels
        .par_iter()
        .map(|&panel| {
            let mut config = base.clone();
            config.omega = panel.omega;
            config.packet.k0 = panel.k0;
            let dir = base.output_dir.join(panel.id);
            config.output_dir = dir.clone();
            let result = config
                .validate("")
                .map_err(RunError::from)
                .and_then(|params| run_experiment(panel.experiment, &config, &params, &dir));
            PanelOutcome { panel, result }
        })
        .collect()
}
