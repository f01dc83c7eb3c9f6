//! One- and two-dimensional parameter sweeps with windowed peak search.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::golden_section_max;
use crate::observables::{evaluate_point, linspace, SpectrumPoint};
use crate::params::{derive, ConfigDocument, DerivedQuantities, SystemParams};
use crate::provenance::Provenance;
use crate::steady_state::{assess_linear_stability, solve_steady_state, BranchPolicy, SteadyState};

/// Smallest Ω sub-grid per window.
pub const MIN_OMEGA_POINTS: usize = 801;
/// Golden-section bracket target, in units of ω_m.
pub const PEAK_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    TPSqMax,
    EtaSMax,
    EtaFMax,
    DeltaMax,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::TPSqMax => "t_p_sq_max",
            Observable::EtaSMax => "eta_s_max",
            Observable::EtaFMax => "eta_f_max",
            Observable::DeltaMax => "delta_max",
        }
    }

    /// The maximised quantity at one spectrum point, NaN when masked.
    pub fn of(self, pt: &SpectrumPoint<f64>) -> f64 {
        if pt.masked {
            return f64::NAN;
        }
        match self {
            Observable::TPSqMax => pt.t_p_sq,
            Observable::EtaSMax => pt.eta_s,
            Observable::EtaFMax => pt.eta_f,
            Observable::DeltaMax => pt.delta,
        }
    }
}

/// Grid values, either listed or as an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { from: f64, to: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Range { from, to, points } => linspace(*from, *to, *points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Config key, e.g. `J_over_kappa_a`; values are in that key's units.
    pub parameter: String,
    pub grid: Grid,
}

fn default_omega_points() -> usize {
    MIN_OMEGA_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    pub observable: Observable,
    /// Peak-search interval in Ω/ω_m.
    pub window: [f64; 2],
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    #[serde(default)]
    pub branch: BranchPolicy,
    pub base_config: ConfigDocument,
}

impl SweepSpec {
    /// Window `|Ω/ω_m − centre| ≤ 0.5`.
    pub fn centred_window(centre: f64) -> [f64; 2] {
        [centre - 0.5, centre + 0.5]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::MalformedConfig {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    fn axes(&self) -> Vec<&Axis> {
        std::iter::once(&self.axis1)
            .chain(self.axis2.as_ref())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for axis in self.axes() {
            if ConfigDocument::reference().get(&axis.parameter).is_none() {
                return Err(Error::InvalidInput(format!(
                    "unknown sweep parameter `{}`",
                    axis.parameter
                )));
            }
            let v = axis.grid.values();
            if v.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "empty grid for `{}`",
                    axis.parameter
                )));
            }
            let up = v.windows(2).all(|w| w[1] > w[0]);
            let down = v.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                return Err(Error::InvalidInput(format!(
                    "grid for `{}` must be strictly monotone",
                    axis.parameter
                )));
            }
        }
        if let Some(a2) = &self.axis2 {
            if a2.parameter == self.axis1.parameter {
                return Err(Error::InvalidInput(
                    "both axes sweep the same parameter".into(),
                ));
            }
        }
        let [lo, hi] = self.window;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("window [{lo}, {hi}] is empty")));
        }
        if self.omega_points < MIN_OMEGA_POINTS {
            return Err(Error::InvalidInput(format!(
                "omega_points must be at least {MIN_OMEGA_POINTS} (got {})",
                self.omega_points
            )));
        }
        self.base_config.resolve()?;
        Ok(())
    }
}

/// Outcome of the peak search over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub value: f64,
    /// Location in Ω/ω_m.
    pub omega_over_omega_m: f64,
    /// Golden-section bracket reached the target width.
    pub refined: bool,
    /// Every grid point in the window was masked.
    pub masked: bool,
    pub masked_points: usize,
}

/// Maximum of `observable` over Ω/ω_m ∈ `window`: dense grid, then golden
/// section between the neighbours of the best grid point.
pub fn find_peak(
    p: &SystemParams<f64>,
    d: &DerivedQuantities<f64>,
    s: &SteadyState<f64>,
    observable: Observable,
    window: [f64; 2],
    points: usize,
) -> Result<Peak> {
    let grid = linspace(window[0], window[1], points.max(2));
    let eval = |r: f64| evaluate_point(p, d, s, r * p.omega_m).map(|pt| observable.of(&pt));
    let values = grid
        .iter()
        .map(|&r| eval(r))
        .collect::<Result<Vec<f64>>>()?;
    let masked_points = values.iter().filter(|v| v.is_nan()).count();
    let best = values.iter().enumerate().filter(|(_, v)| !v.is_nan()).fold(
        None,
        |acc: Option<(usize, f64)>, (k, &v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((k, v)),
        },
    );
    let Some((k, grid_value)) = best else {
        return Ok(Peak {
            value: f64::NAN,
            omega_over_omega_m: f64::NAN,
            refined: false,
            masked: true,
            masked_points,
        });
    };
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let golden = golden_section_max(|r| eval(r).unwrap_or(f64::NAN), lo, hi, PEAK_TOL, 200);
    let (value, at) = if golden.value > grid_value {
        (golden.value, golden.x)
    } else {
        (grid_value, grid[k])
    };
    Ok(Peak {
        value,
        omega_over_omega_m: at,
        refined: golden.converged,
        masked: false,
        masked_points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Axis values in config units, one per axis.
    pub coords: Vec<f64>,
    pub value: f64,
    pub omega_at_peak: f64,
    pub refined: bool,
    pub masked: bool,
    pub root_count: usize,
    pub stable: bool,
    /// Steady-state residual relative to sqrt(ηκ_a) ε₁.
    pub residual_rel: f64,
    pub converged: bool,
    /// Reason when the point could not be evaluated.
    pub note: Option<String>,
}

impl SweepPoint {
    pub fn multistable(&self) -> bool {
        self.root_count > 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Grid sizes per axis; points are stored row-major (last axis fastest).
    pub shape: Vec<usize>,
    pub points: Vec<SweepPoint>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn max_residual_rel(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.residual_rel)
            .fold(0.0, f64::max)
    }

    pub fn multistable_points(&self) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.multistable()).collect()
    }
}

pub(crate) fn relative_residual(
    p: &SystemParams<f64>,
    d: &DerivedQuantities<f64>,
    s: &SteadyState<f64>,
) -> f64 {
    let drive = p.input_coupling() * d.eps_pump;
    if drive == 0.0 {
        s.residual
    } else {
        s.residual / drive
    }
}

fn evaluate(spec: &SweepSpec, coords: Vec<f64>, doc: &ConfigDocument) -> SweepPoint {
    let failed = |coords: Vec<f64>, note: String, root_count| {
        log::warn!("sweep point {coords:?} masked: {note}");
        SweepPoint {
            coords,
            value: f64::NAN,
            omega_at_peak: f64::NAN,
            refined: false,
            masked: true,
            root_count,
            stable: false,
            residual_rel: 0.0,
            converged: false,
            note: Some(note),
        }
    };
    let p = match doc.resolve() {
        Ok(p) => p,
        Err(e) => return failed(coords, e.to_string(), 0),
    };
    let d = derive(&p);
    let s = match solve_steady_state(&p, &d, spec.branch) {
        Ok(s) => s,
        Err(e) => return failed(coords, e.to_string(), 0),
    };
    let stable = assess_linear_stability(&p, &d, &s).stable;
    let residual_rel = relative_residual(&p, &d, &s);
    match find_peak(&p, &d, &s, spec.observable, spec.window, spec.omega_points) {
        Ok(peak) => SweepPoint {
            coords,
            value: peak.value,
            omega_at_peak: peak.omega_over_omega_m,
            refined: peak.refined,
            masked: peak.masked,
            root_count: s.all_roots.len(),
            stable,
            residual_rel,
            converged: s.converged,
            note: None,
        },
        Err(e) => SweepPoint {
            residual_rel,
            converged: s.converged,
            stable,
            ..failed(coords, e.to_string(), s.all_roots.len())
        },
    }
}

/// Evaluate the sweep. Grid points run concurrently on the current rayon
/// pool; results are assembled in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let g1 = spec.axis1.grid.values();
    let g2 = spec.axis2.as_ref().map(|a| a.grid.values());
    let mut tasks = Vec::new();
    for &v1 in &g1 {
        match &g2 {
            None => tasks.push(vec![v1]),
            Some(g2) => tasks.extend(g2.iter().map(|&v2| vec![v1, v2])),
        }
    }
    let axes = spec.axes();
    let points = tasks
        .into_par_iter()
        .map(|coords| {
            let mut doc = spec.base_config;
            for (axis, &v) in axes.iter().zip(&coords) {
                doc.set(&axis.parameter, v);
            }
            evaluate(spec, coords, &doc)
        })
        .collect();
    let mut shape = vec![g1.len()];
    shape.extend(g2.map(|g| g.len()));
    Ok(SweepResult {
        spec: spec.clone(),
        shape,
        points,
        provenance: Provenance::for_config(&spec.base_config),
    })
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// CSV with one row per grid point.
pub fn write_sweep_csv<W: Write>(mut out: W, result: &SweepResult) -> std::io::Result<()> {
    let mut header: Vec<&str> = vec![result.spec.axis1.parameter.as_str()];
    if let Some(a2) = &result.spec.axis2 {
        header.push(a2.parameter.as_str());
    }
    header.extend([
        result.spec.observable.name(),
        "Omega_at_peak_over_omega_m",
        "root_count",
        "stable",
        "residual_rel",
        "refined",
        "masked",
    ]);
    writeln!(out, "{}", header.join(","))?;
    for p in &result.points {
        let mut row: Vec<String> = p.coords.iter().map(|&c| fmt(c)).collect();
        row.push(fmt(p.value));
        row.push(fmt(p.omega_at_peak));
        row.push(p.root_count.to_string());
        row.push(u8::from(p.stable).to_string());
        row.push(fmt(p.residual_rel));
        row.push(u8::from(p.refined).to_string());
        row.push(u8::from(p.masked).to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
