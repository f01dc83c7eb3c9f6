//! Physical parameters, configuration schema and derived drive/coupling
//! constants.
//!
//! Frequencies in the config document are ordinary frequencies (MHz, kHz)
//! and are multiplied by 2π on load. Inside the engine every rate is an
//! angular frequency in rad/s.
//!
//! The mechanical coordinate is carried in units of the zero-point
//! displacement `x_zpf = sqrt(ħ / (m ω_m))`. In those units the radiation
//! pressure coupling is the single-photon rate
//! `g1 = (ω_opt / L) · x_zpf` (rad/s), and the SI equations of motion
//! are recovered with `x = x_zpf · x̃` and per-metre coupling `g1 / x_zpf`.

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, SPEED_OF_LIGHT, TWO_PI_KHZ, TWO_PI_MHZ};
use crate::error::{Error, Result};
use crate::real::Real;

/// Probe-to-pump ratio above which the weak-probe expansion is suspect.
pub const PROBE_RATIO_ADVISORY: f64 = 0.2;

/// The on-disk configuration document. Keys are fixed; units are encoded in
/// the key names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(rename = "omega_m_MHz")]
    pub omega_m_mhz: f64,
    pub mass_ng: f64,
    #[serde(rename = "gamma_m_kHz")]
    pub gamma_m_khz: f64,
    #[serde(rename = "L_mm")]
    pub l_mm: f64,
    #[serde(rename = "kappa_a_MHz")]
    pub kappa_a_mhz: f64,
    #[serde(rename = "kappa_b_MHz")]
    pub kappa_b_mhz: f64,
    #[serde(rename = "J_over_kappa_a")]
    pub j_over_kappa_a: f64,
    #[serde(rename = "G_MHz")]
    pub g_mhz: f64,
    #[serde(rename = "gamma_atom_MHz")]
    pub gamma_atom_mhz: f64,
    pub eta: f64,
    pub wavelength_nm: f64,
    #[serde(rename = "P1_uW")]
    pub p1_uw: f64,
    pub probe_ratio: f64,
    pub delta_1_over_omega_m: f64,
    pub delta_2_over_omega_m: f64,
}

impl ConfigDocument {
    /// Reference working point: 10 MHz mechanics, 20 ng, 1 mm cavity,
    /// balanced gain (κ_b = −κ_a), J = 0.45 κ_a, red-detuned pump.
    pub fn reference() -> Self {
        Self {
            omega_m_mhz: 10.0,
            mass_ng: 20.0,
            gamma_m_khz: 40.0,
            l_mm: 1.0,
            kappa_a_mhz: 2.0,
            kappa_b_mhz: -2.0,
            j_over_kappa_a: 0.45,
            g_mhz: 10.0,
            gamma_atom_mhz: 5.0,
            eta: 0.5,
            wavelength_nm: 1064.0,
            p1_uw: 310.3,
            probe_ratio: 0.05,
            delta_1_over_omega_m: -1.0,
            delta_2_over_omega_m: 1.0,
        }
    }

    /// Names of every key, in schema order.
    pub const KEYS: [&'static str; 15] = [
        "omega_m_MHz",
        "mass_ng",
        "gamma_m_kHz",
        "L_mm",
        "kappa_a_MHz",
        "kappa_b_MHz",
        "J_over_kappa_a",
        "G_MHz",
        "gamma_atom_MHz",
        "eta",
        "wavelength_nm",
        "P1_uW",
        "probe_ratio",
        "delta_1_over_omega_m",
        "delta_2_over_omega_m",
    ];

    pub fn get(&self, key: &str) -> Option<f64> {
        self.field(key).copied()
    }

    /// Set one key by its schema name. Returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match self.field_mut(key) {
            Some(slot) => {
                *slot = value;
                true
            }
            None => false,
        }
    }

    fn field(&self, key: &str) -> Option<&f64> {
        let v = match key {
            "omega_m_MHz" => &self.omega_m_mhz,
            "mass_ng" => &self.mass_ng,
            "gamma_m_kHz" => &self.gamma_m_khz,
            "L_mm" => &self.l_mm,
            "kappa_a_MHz" => &self.kappa_a_mhz,
            "kappa_b_MHz" => &self.kappa_b_mhz,
            "J_over_kappa_a" => &self.j_over_kappa_a,
            "G_MHz" => &self.g_mhz,
            "gamma_atom_MHz" => &self.gamma_atom_mhz,
            "eta" => &self.eta,
            "wavelength_nm" => &self.wavelength_nm,
            "P1_uW" => &self.p1_uw,
            "probe_ratio" => &self.probe_ratio,
            "delta_1_over_omega_m" => &self.delta_1_over_omega_m,
            "delta_2_over_omega_m" => &self.delta_2_over_omega_m,
            _ => return None,
        };
        Some(v)
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut f64> {
        let v = match key {
            "omega_m_MHz" => &mut self.omega_m_mhz,
            "mass_ng" => &mut self.mass_ng,
            "gamma_m_kHz" => &mut self.gamma_m_khz,
            "L_mm" => &mut self.l_mm,
            "kappa_a_MHz" => &mut self.kappa_a_mhz,
            "kappa_b_MHz" => &mut self.kappa_b_mhz,
            "J_over_kappa_a" => &mut self.j_over_kappa_a,
            "G_MHz" => &mut self.g_mhz,
            "gamma_atom_MHz" => &mut self.gamma_atom_mhz,
            "eta" => &mut self.eta,
            "wavelength_nm" => &mut self.wavelength_nm,
            "P1_uW" => &mut self.p1_uw,
            "probe_ratio" => &mut self.probe_ratio,
            "delta_1_over_omega_m" => &mut self.delta_1_over_omega_m,
            "delta_2_over_omega_m" => &mut self.delta_2_over_omega_m,
            _ => return None,
        };
        Some(v)
    }

    /// Parse a JSON config document. Errors carry the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::MalformedConfig {
                path,
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    /// Convert to SI and validate.
    pub fn resolve(&self) -> Result<SystemParams<f64>> {
        let omega_m = self.omega_m_mhz * TWO_PI_MHZ;
        let kappa_a = self.kappa_a_mhz * TWO_PI_MHZ;
        let p = SystemParams {
            omega_m,
            mass: self.mass_ng * 1e-12,
            gamma_m: self.gamma_m_khz * TWO_PI_KHZ,
            cavity_length: self.l_mm * 1e-3,
            kappa_a,
            kappa_b: self.kappa_b_mhz * TWO_PI_MHZ,
            tunneling_j: self.j_over_kappa_a * kappa_a,
            atom_coupling_g: self.g_mhz * TWO_PI_MHZ,
            gamma_atom: self.gamma_atom_mhz * TWO_PI_MHZ,
            eta: self.eta,
            wavelength: self.wavelength_nm * 1e-9,
            pump_power: self.p1_uw * 1e-6,
            probe_ratio: self.probe_ratio,
            delta_1: self.delta_1_over_omega_m * omega_m,
            delta_2: self.delta_2_over_omega_m * omega_m,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Parse and validate a config document.
pub fn load_config(text: &str) -> Result<SystemParams<f64>> {
    ConfigDocument::from_json(text)?.resolve()
}

/// Raw physical parameters in SI / rad·s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams<T> {
    pub omega_m: T,
    pub mass: T,
    pub gamma_m: T,
    pub cavity_length: T,
    /// Passive-cavity loss rate.
    pub kappa_a: T,
    /// Second-cavity rate; negative means gain.
    pub kappa_b: T,
    pub tunneling_j: T,
    pub atom_coupling_g: T,
    pub gamma_atom: T,
    pub eta: T,
    pub wavelength: T,
    pub pump_power: T,
    pub probe_ratio: T,
    /// Pump-cavity detuning Δ₁.
    pub delta_1: T,
    /// Atom-pump detuning Δ₂.
    pub delta_2: T,
}

fn check(ok: bool, field: &'static str, bound: &'static str, value: f64) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Validation {
            field,
            bound,
            value,
        })
    }
}

impl<T: Real> SystemParams<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let all = [
            ("omega_m", self.omega_m),
            ("mass", self.mass),
            ("gamma_m", self.gamma_m),
            ("cavity_length", self.cavity_length),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("tunneling_j", self.tunneling_j),
            ("atom_coupling_g", self.atom_coupling_g),
            ("gamma_atom", self.gamma_atom),
            ("eta", self.eta),
            ("wavelength", self.wavelength),
            ("pump_power", self.pump_power),
            ("probe_ratio", self.probe_ratio),
            ("delta_1", self.delta_1),
            ("delta_2", self.delta_2),
        ];
        for (name, v) in all {
            check(v.is_finite(), name, "finite", v.as_f64())?;
        }
        check(self.kappa_a > z, "kappa_a", "> 0", self.kappa_a.as_f64())?;
        check(
            self.gamma_atom > z,
            "gamma_atom",
            "> 0",
            self.gamma_atom.as_f64(),
        )?;
        check(self.mass > z, "mass", "> 0", self.mass.as_f64())?;
        check(self.omega_m > z, "omega_m", "> 0", self.omega_m.as_f64())?;
        check(self.gamma_m >= z, "gamma_m", ">= 0", self.gamma_m.as_f64())?;
        check(
            self.cavity_length > z,
            "cavity_length",
            "> 0",
            self.cavity_length.as_f64(),
        )?;
        check(
            self.wavelength > z,
            "wavelength",
            "> 0",
            self.wavelength.as_f64(),
        )?;
        check(
            self.pump_power >= z,
            "pump_power",
            ">= 0",
            self.pump_power.as_f64(),
        )?;
        check(
            self.tunneling_j >= z,
            "tunneling_j",
            ">= 0",
            self.tunneling_j.as_f64(),
        )?;
        check(
            self.atom_coupling_g >= z,
            "atom_coupling_g",
            ">= 0",
            self.atom_coupling_g.as_f64(),
        )?;
        check(
            self.eta > z && self.eta <= T::one(),
            "eta",
            "in (0, 1]",
            self.eta.as_f64(),
        )?;
        check(
            self.probe_ratio >= z,
            "probe_ratio",
            ">= 0",
            self.probe_ratio.as_f64(),
        )?;
        Ok(())
    }

    /// Non-fatal warnings about the validity range of the weak-probe expansion.
    pub fn advisories(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.probe_ratio > T::lit(PROBE_RATIO_ADVISORY) {
            out.push(format!(
                "probe_ratio = {} exceeds {PROBE_RATIO_ADVISORY}; second-order truncation may be inaccurate",
                self.probe_ratio
            ));
        }
        out
    }

    /// `sqrt(η κ_a)`, the input coupling of cavity A.
    pub fn input_coupling(&self) -> T {
        (self.eta * self.kappa_a).sqrt()
    }

    pub fn cast<U: Real>(&self) -> SystemParams<U> {
        let f = |v: T| U::lit(v.as_f64());
        SystemParams {
            omega_m: f(self.omega_m),
            mass: f(self.mass),
            gamma_m: f(self.gamma_m),
            cavity_length: f(self.cavity_length),
            kappa_a: f(self.kappa_a),
            kappa_b: f(self.kappa_b),
            tunneling_j: f(self.tunneling_j),
            atom_coupling_g: f(self.atom_coupling_g),
            gamma_atom: f(self.gamma_atom),
            eta: f(self.eta),
            wavelength: f(self.wavelength),
            pump_power: f(self.pump_power),
            probe_ratio: f(self.probe_ratio),
            delta_1: f(self.delta_1),
            delta_2: f(self.delta_2),
        }
    }
}

impl SystemParams<f64> {
    pub fn reference() -> Self {
        ConfigDocument::reference()
            .resolve()
            .expect("reference document is valid")
    }

    /// Express the parameters in the config schema. Reloading the result
    /// reproduces every field bit-for-bit.
    pub fn to_config(&self) -> ConfigDocument {
        ConfigDocument {
            omega_m_mhz: invert_scale(self.omega_m, TWO_PI_MHZ),
            mass_ng: invert_scale(self.mass, 1e-12),
            gamma_m_khz: invert_scale(self.gamma_m, TWO_PI_KHZ),
            l_mm: invert_scale(self.cavity_length, 1e-3),
            kappa_a_mhz: invert_scale(self.kappa_a, TWO_PI_MHZ),
            kappa_b_mhz: invert_scale(self.kappa_b, TWO_PI_MHZ),
            j_over_kappa_a: invert_scale(self.tunneling_j, self.kappa_a),
            g_mhz: invert_scale(self.atom_coupling_g, TWO_PI_MHZ),
            gamma_atom_mhz: invert_scale(self.gamma_atom, TWO_PI_MHZ),
            eta: self.eta,
            wavelength_nm: invert_scale(self.wavelength, 1e-9),
            p1_uw: invert_scale(self.pump_power, 1e-6),
            probe_ratio: self.probe_ratio,
            delta_1_over_omega_m: invert_scale(self.delta_1, self.omega_m),
            delta_2_over_omega_m: invert_scale(self.delta_2, self.omega_m),
        }
    }
}

/// Find `v` with `v * scale == target` exactly, searching a few ulps around
/// `target / scale`. Falls back to the plain quotient.
fn invert_scale(target: f64, scale: f64) -> f64 {
    let guess = target / scale;
    if guess * scale == target || !guess.is_finite() {
        return guess;
    }
    let mut up = guess;
    let mut down = guess;
    for _ in 0..8 {
        up = next_toward(up, f64::INFINITY);
        down = next_toward(down, f64::NEG_INFINITY);
        if up * scale == target {
            return up;
        }
        if down * scale == target {
            return down;
        }
    }
    guess
}

fn next_toward(x: f64, dir: f64) -> f64 {
    if x == 0.0 {
        return if dir > 0.0 {
            f64::from_bits(1)
        } else {
            -f64::from_bits(1)
        };
    }
    let bits = x.to_bits();
    let away_from_zero = (dir > x) == (x > 0.0);
    f64::from_bits(if away_from_zero { bits + 1 } else { bits - 1 })
}

/// Quantities computed once from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities<T> {
    /// Optical angular frequency 2πc/λ (rad/s).
    pub omega_opt: T,
    /// Single-photon optomechanical rate (ω_opt/L)·sqrt(ħ/(m ω_m)), rad/s.
    pub g1: T,
    /// Zero-point displacement sqrt(ħ/(m ω_m)), m.
    pub x_zpf: T,
    /// Pump amplitude sqrt(P₁/(ħ ω_opt)), s^(-1/2).
    pub eps_pump: T,
    /// Probe amplitude, s^(-1/2).
    pub eps_probe: T,
}

impl<T: Real> DerivedQuantities<T> {
    /// Coupling per metre of displacement, `g1 / x_zpf = ω_opt / L`.
    pub fn coupling_per_metre(&self) -> T {
        self.g1 / self.x_zpf
    }

    pub fn cast<U: Real>(&self) -> DerivedQuantities<U> {
        let f = |v: T| U::lit(v.as_f64());
        DerivedQuantities {
            omega_opt: f(self.omega_opt),
            g1: f(self.g1),
            x_zpf: f(self.x_zpf),
            eps_pump: f(self.eps_pump),
            eps_probe: f(self.eps_probe),
        }
    }
}

pub fn derive<T: Real>(params: &SystemParams<T>) -> DerivedQuantities<T> {
    let hbar = T::lit(HBAR);
    let omega_opt = T::lit(2.0) * T::PI() * T::lit(SPEED_OF_LIGHT) / params.wavelength;
    let x_zpf = (hbar / (params.mass * params.omega_m)).sqrt();
    let g1 = omega_opt / params.cavity_length * x_zpf;
    let eps_pump = (params.pump_power / (hbar * omega_opt)).sqrt();
    DerivedQuantities {
        omega_opt,
        g1,
        x_zpf,
        eps_pump,
        eps_probe: params.probe_ratio * eps_pump,
    }
}
