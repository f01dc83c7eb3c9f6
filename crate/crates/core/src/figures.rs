//! Datasets behind each published figure panel.
//!
//! Each figure is a list of spectra and/or sweeps built from the reference
//! configuration with the panel's overrides. Grids are sized to run in well
//! under a minute per figure on one core.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::{linspace, spectrum_on, SpectrumPoint};
use crate::params::{derive, ConfigDocument, SystemParams};
use crate::provenance::{Provenance, VERSION};
use crate::steady_state::{
    assess_linear_stability, solve_steady_state, BranchPolicy, RESIDUAL_TOL,
};
use crate::sweep::{
    relative_residual, run_sweep, write_sweep_csv, Axis, Grid, Observable, SweepResult, SweepSpec,
    MIN_OMEGA_POINTS,
};

pub const FIGURE_IDS: [&str; 13] = [
    "2", "3", "4a", "4b", "4c", "4d", "5", "6a", "6b", "6c", "6d", "7a", "7b",
];

/// Which spectrum columns a dataset file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Columns {
    All,
    EtaF,
    EtaS,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadySummary {
    pub roots: Vec<f64>,
    pub residual_rel: f64,
    pub converged: bool,
    pub stable: bool,
    pub max_real_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumDataset {
    /// File stem.
    pub name: String,
    pub columns: Columns,
    pub config: ConfigDocument,
    pub resolved: SystemParams<f64>,
    pub steady: SteadySummary,
    #[serde(skip)]
    pub points: Vec<SpectrumPoint<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDataset {
    pub name: String,
    #[serde(skip)]
    pub result: SweepResult,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Spectrum(SpectrumDataset),
    Sweep(SweepDataset),
}

impl Dataset {
    pub fn name(&self) -> &str {
        match self {
            Dataset::Spectrum(s) => &s.name,
            Dataset::Sweep(s) => &s.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub id: String,
    pub description: String,
    pub datasets: Vec<Dataset>,
}

impl FigureData {
    pub fn spectrum(&self, name: &str) -> Option<&SpectrumDataset> {
        self.datasets.iter().find_map(|d| match d {
            Dataset::Spectrum(s) if s.name == name => Some(s),
            _ => None,
        })
    }

    pub fn sweep(&self, name: &str) -> Option<&SweepResult> {
        self.datasets.iter().find_map(|d| match d {
            Dataset::Sweep(s) if s.name == name => Some(&s.result),
            _ => None,
        })
    }

    /// Largest steady-state residual (relative) over every evaluated point.
    pub fn max_residual_rel(&self) -> f64 {
        self.datasets
            .iter()
            .map(|d| match d {
                Dataset::Spectrum(s) => s.steady.residual_rel,
                Dataset::Sweep(s) => s.result.max_residual_rel(),
            })
            .fold(0.0, f64::max)
    }

    pub fn multistable_points(&self) -> Vec<MultistablePoint> {
        let mut out = Vec::new();
        for d in &self.datasets {
            match d {
                Dataset::Spectrum(s) if s.steady.roots.len() > 1 => out.push(MultistablePoint {
                    dataset: s.name.clone(),
                    coords: Vec::new(),
                    roots: s.steady.roots.len(),
                }),
                Dataset::Sweep(s) => {
                    out.extend(s.result.multistable_points().into_iter().map(|p| {
                        MultistablePoint {
                            dataset: s.name.clone(),
                            coords: p.coords.clone(),
                            roots: p.root_count,
                        }
                    }))
                }
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultistablePoint {
    pub dataset: String,
    pub coords: Vec<f64>,
    pub roots: usize,
}

/// Reference configuration with passive/gain cavity B and the Fig. 3 base
/// (ω_m = 2π×10 MHz, G = 2π×10 MHz).
fn base() -> ConfigDocument {
    ConfigDocument::reference()
}

fn spectrum_dataset(
    name: &str,
    columns: Columns,
    config: ConfigDocument,
    window: [f64; 2],
    points: usize,
) -> Result<SpectrumDataset> {
    let p = config.resolve()?;
    let d = derive(&p);
    let s = solve_steady_state(&p, &d, BranchPolicy::Lowest)?;
    let st = assess_linear_stability(&p, &d, &s);
    let grid: Vec<f64> = linspace(window[0], window[1], points)
        .iter()
        .map(|r| r * p.omega_m)
        .collect();
    let pts = spectrum_on(&p, &d, &s, &grid)?;
    Ok(SpectrumDataset {
        name: name.to_string(),
        columns,
        config,
        resolved: p,
        steady: SteadySummary {
            roots: s.all_roots.clone(),
            residual_rel: relative_residual(&p, &d, &s),
            converged: s.converged,
            stable: st.stable,
            max_real_eigenvalue: st.max_real,
        },
        points: pts,
    })
}

fn sweep_dataset(name: &str, spec: SweepSpec) -> Result<Dataset> {
    Ok(Dataset::Sweep(SweepDataset {
        name: name.to_string(),
        result: run_sweep(&spec)?,
    }))
}

fn axis(parameter: &str, grid: Grid) -> Axis {
    Axis {
        parameter: parameter.into(),
        grid,
    }
}

fn spec(
    axis1: Axis,
    axis2: Option<Axis>,
    observable: Observable,
    centre: f64,
    base_config: ConfigDocument,
) -> SweepSpec {
    SweepSpec {
        axis1,
        axis2,
        observable,
        window: SweepSpec::centred_window(centre),
        omega_points: MIN_OMEGA_POINTS,
        branch: BranchPolicy::Lowest,
        base_config,
    }
}

/// Grid of J/κ_a for the tunnelling scans.
pub fn fig4_j_grid() -> Grid {
    Grid::Range {
        from: 0.01,
        to: 4.0,
        points: 400,
    }
}

/// Pump-power grid (µW) for the power scans.
pub fn fig7_power_grid() -> Grid {
    Grid::Range {
        from: 10.0,
        to: 1000.0,
        points: 100,
    }
}

/// Compute every dataset of a figure in memory.
pub fn figure_data(id: &str) -> Result<FigureData> {
    let (description, datasets) = match id {
        "2" => {
            let mut cfg = base();
            cfg.g_mhz = 0.0;
            cfg.j_over_kappa_a = 0.45;
            cfg.kappa_b_mhz = -cfg.kappa_a_mhz;
            let mut sets = Vec::new();
            for wm in [20.0, 30.0, 50.0] {
                let mut c = cfg;
                c.omega_m_mhz = wm;
                sets.push(Dataset::Spectrum(spectrum_dataset(
                    &format!("fig2_tp_wm{wm}"),
                    Columns::All,
                    c,
                    [0.5, 1.5],
                    2001,
                )?));
            }
            let scan = spec(
                axis(
                    "omega_m_MHz",
                    Grid::Range {
                        from: 10.0,
                        to: 100.0,
                        points: 91,
                    },
                ),
                None,
                Observable::TPSqMax,
                1.0,
                cfg,
            );
            sets.push(sweep_dataset("fig2_peak_vs_omega_m", scan)?);
            ("probe transmission |t_p|² without atoms (G = 0, J = 0.45 κ_a, κ_b = −κ_a): spectra at ω_m/2π = 20, 30, 50 MHz and peak |t_p|² vs ω_m", sets)
        }
        "3" => {
            let mut sets = Vec::new();
            for j in [0.55, 1.0, 1.3] {
                let mut c = base();
                c.j_over_kappa_a = j;
                sets.push(Dataset::Spectrum(spectrum_dataset(
                    &format!("fig3_eta_s_J{j}"),
                    Columns::EtaS,
                    c,
                    [-2.0, 2.0],
                    4001,
                )?));
            }
            (
                "second-order efficiency η_s vs Ω/ω_m for J/κ_a = 0.55, 1, 1.3",
                sets,
            )
        }
        "4a" | "4b" | "4c" | "4d" => {
            let (kb_sign, centre, what) = match id {
                "4a" => (1.0, -1.0, "passive-passive, near Ω/ω_m = −1"),
                "4b" => (-1.0, -1.0, "gain-loss, near Ω/ω_m = −1"),
                "4c" => (1.0, 1.0, "passive-passive, near Ω/ω_m = +1"),
                _ => (-1.0, 1.0, "gain-loss, near Ω/ω_m = +1"),
            };
            let mut c = base();
            c.p1_uw = 210.3;
            c.kappa_b_mhz = kb_sign * c.kappa_a_mhz;
            let s = spec(
                axis("J_over_kappa_a", fig4_j_grid()),
                None,
                Observable::EtaSMax,
                centre,
                c,
            );
            let name = format!("fig{id}_eta_s_max_vs_J");
            (what, vec![sweep_dataset(&name, s)?])
        }
        "5" => {
            let mut c = base();
            c.j_over_kappa_a = 0.55;
            let data = spectrum_dataset("fig5", Columns::All, c, [-2.0, 2.0], 4001)?;
            let mut f = data.clone();
            f.name = "fig5_eta_f".into();
            f.columns = Columns::EtaF;
            let mut s = data;
            s.name = "fig5_eta_s".into();
            s.columns = Columns::EtaS;
            (
                "first- and second-order efficiencies vs Ω/ω_m at J = 0.55 κ_a",
                vec![Dataset::Spectrum(f), Dataset::Spectrum(s)],
            )
        }
        "6a" | "6b" | "6c" | "6d" => {
            let (observable, centre, what) = match id {
                "6a" => (
                    Observable::EtaSMax,
                    -1.0,
                    "max η_s near Ω/ω_m = −1 over (G, Δ₂)",
                ),
                "6b" => (
                    Observable::EtaSMax,
                    1.0,
                    "max η_s near Ω/ω_m = +1 over (G, Δ₂)",
                ),
                "6c" => (
                    Observable::DeltaMax,
                    -1.0,
                    "max (η_s − η_f) near Ω/ω_m = −1 over (G, Δ₂)",
                ),
                _ => (
                    Observable::DeltaMax,
                    1.0,
                    "max (η_s − η_f) near Ω/ω_m = +1 over (G, Δ₂)",
                ),
            };
            let mut c = base();
            c.j_over_kappa_a = 0.55;
            let s = spec(
                axis(
                    "G_MHz",
                    Grid::Range {
                        from: 8.0,
                        to: 12.0,
                        points: 41,
                    },
                ),
                Some(axis(
                    "delta_2_over_omega_m",
                    Grid::Range {
                        from: -1.0,
                        to: 1.0,
                        points: 41,
                    },
                )),
                observable,
                centre,
                c,
            );
            (what, vec![sweep_dataset(&format!("fig{id}"), s)?])
        }
        "7a" | "7b" => {
            let (centre, what) = if id == "7a" {
                (
                    -1.0,
                    "max η_s near Ω/ω_m = −1 vs pump power for G/2π = 8, 9, 10 MHz",
                )
            } else {
                (
                    1.0,
                    "max η_s near Ω/ω_m = +1 vs pump power for G/2π = 8, 9, 10 MHz",
                )
            };
            let mut c = base();
            c.j_over_kappa_a = 0.55;
            let s = spec(
                axis("G_MHz", Grid::Values(vec![8.0, 9.0, 10.0])),
                Some(axis("P1_uW", fig7_power_grid())),
                Observable::EtaSMax,
                centre,
                c,
            );
            (
                what,
                vec![sweep_dataset(&format!("fig{id}_eta_s_max_vs_P1"), s)?],
            )
        }
        other => return Err(Error::UnknownFigure(other.to_string())),
    };
    Ok(FigureData {
        id: id.to_string(),
        description: description.to_string(),
        datasets,
    })
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn write_spectrum<W: Write>(mut out: W, d: &SpectrumDataset) -> std::io::Result<()> {
    match d.columns {
        Columns::All => crate::observables::write_spectrum_csv(out, &d.points),
        Columns::EtaF | Columns::EtaS => {
            let (label, pick): (&str, fn(&SpectrumPoint<f64>) -> f64) =
                if d.columns == Columns::EtaF {
                    ("eta_f", |p| p.eta_f)
                } else {
                    ("eta_s", |p| p.eta_s)
                };
            writeln!(out, "Omega_over_omega_m,{label},masked")?;
            for p in &d.points {
                writeln!(
                    out,
                    "{},{},{}",
                    fmt(p.omega_over_omega_m),
                    fmt(pick(p)),
                    u8::from(p.masked)
                )?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct DatasetSidecar<'a> {
    file: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<&'a SpectrumDataset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepSidecar<'a>>,
}

#[derive(Debug, Serialize)]
struct SweepSidecar<'a> {
    spec: &'a SweepSpec,
    resolved_base: SystemParams<f64>,
    shape: &'a [usize],
    provenance: &'a Provenance,
    masked_points: usize,
    unrefined_points: usize,
    unstable_points: usize,
}

#[derive(Debug, Serialize)]
struct FigureSidecar<'a> {
    figure: &'a str,
    description: &'a str,
    version: &'static str,
    datasets: Vec<DatasetSidecar<'a>>,
    max_residual_rel: f64,
    residual_bound: f64,
    residual_bound_holds: bool,
    multistable: bool,
    multistable_points: Vec<MultistablePoint>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Files written for one figure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FigureOutput {
    pub id: String,
    pub files: Vec<PathBuf>,
    pub sidecar: PathBuf,
}

/// Write a figure's datasets (CSV) and its JSON sidecar into `outdir`.
pub fn write_figure(data: &FigureData, outdir: &Path) -> Result<FigureOutput> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for d in &data.datasets {
        let path = outdir.join(format!("{}.csv", d.name()));
        let mut w = create(&path)?;
        let entry = match d {
            Dataset::Spectrum(s) => {
                write_spectrum(&mut w, s).map_err(|e| Error::io(&path, e))?;
                DatasetSidecar {
                    file: file_name(&path),
                    kind: "spectrum",
                    spectrum: Some(s),
                    sweep: None,
                }
            }
            Dataset::Sweep(s) => {
                write_sweep_csv(&mut w, &s.result).map_err(|e| Error::io(&path, e))?;
                let r = &s.result;
                DatasetSidecar {
                    file: file_name(&path),
                    kind: "sweep",
                    spectrum: None,
                    sweep: Some(SweepSidecar {
                        spec: &r.spec,
                        resolved_base: r.spec.base_config.resolve()?,
                        shape: &r.shape,
                        provenance: &r.provenance,
                        masked_points: r.points.iter().filter(|p| p.masked).count(),
                        unrefined_points: r
                            .points
                            .iter()
                            .filter(|p| !p.masked && !p.refined)
                            .count(),
                        unstable_points: r.points.iter().filter(|p| !p.stable).count(),
                    }),
                }
            }
        };
        w.flush().map_err(|e| Error::io(&path, e))?;
        entries.push(entry);
        files.push(path);
    }
    let max_residual_rel = data.max_residual_rel();
    let multistable_points = data.multistable_points();
    let sidecar = FigureSidecar {
        figure: &data.id,
        description: &data.description,
        version: VERSION,
        datasets: entries,
        max_residual_rel,
        residual_bound: RESIDUAL_TOL,
        residual_bound_holds: max_residual_rel < RESIDUAL_TOL,
        multistable: !multistable_points.is_empty(),
        multistable_points,
    };
    let path = outdir.join(format!("fig{}.json", data.id));
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    writeln!(w).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(FigureOutput {
        id: data.id.clone(),
        files,
        sidecar: path,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Compute and write one figure.
pub fn reproduce_figure(id: &str, outdir: &Path) -> Result<FigureOutput> {
    let data = figure_data(id)?;
    write_figure(&data, outdir)
}
