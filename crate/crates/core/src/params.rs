use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Thermodynamic and kinetic constants of the dealloying model (SI units).
///
/// Defaults are the reference parameter set for a binary A-B alloy in a
/// liquid C bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Temperature, K.
    #[serde(rename = "T")]
    pub temperature: f64,
    /// Diffuse interface width, m.
    pub eta: f64,
    /// Solid-liquid interfacial energy, J/m^2.
    pub sigma_sl: f64,
    /// Gradient energy coefficient, J/m.
    pub kappa: f64,
    /// Latent heats of melting, J/m^3.
    #[serde(rename = "L_A")]
    pub latent_a: f64,
    #[serde(rename = "L_B")]
    pub latent_b: f64,
    #[serde(rename = "L_C")]
    pub latent_c: f64,
    /// Melting temperatures, K.
    #[serde(rename = "T_A")]
    pub melt_a: f64,
    #[serde(rename = "T_B")]
    pub melt_b: f64,
    #[serde(rename = "T_C")]
    pub melt_c: f64,
    /// Atomic volume, m^3.
    #[serde(rename = "V_a")]
    pub atomic_volume: f64,
    /// A-C excess enthalpy of mixing, J/m^3.
    #[serde(rename = "Omega_AC")]
    pub omega_ac: f64,
    /// Interface mobility, m s^-1 GPa^-1.
    #[serde(rename = "M_phi")]
    pub m_phi: f64,
    /// Liquid diffusivity, m^2/s.
    #[serde(rename = "D_liq")]
    pub d_liq: f64,
    /// Boltzmann constant, J/K.
    #[serde(rename = "k_B")]
    pub k_b: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            temperature: 1775.0,
            eta: 4e-9,
            sigma_sl: 0.2,
            kappa: 2.4e-9,
            latent_a: 2.82e9,
            latent_b: 1.89e9,
            latent_c: 1.84e9,
            melt_a: 3290.0,
            melt_b: 1941.0,
            melt_c: 1358.0,
            atomic_volume: 0.01e-27,
            omega_ac: 1.44e10,
            m_phi: 12.0,
            d_liq: 7e-9,
            k_b: BOLTZMANN,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("T", self.temperature),
            ("eta", self.eta),
            ("sigma_sl", self.sigma_sl),
            ("kappa", self.kappa),
            ("L_A", self.latent_a),
            ("L_B", self.latent_b),
            ("L_C", self.latent_c),
            ("T_A", self.melt_a),
            ("T_B", self.melt_b),
            ("T_C", self.melt_c),
            ("V_a", self.atomic_volume),
            ("k_B", self.k_b),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [("Omega_AC", self.omega_ac), ("M_phi", self.m_phi), ("D_liq", self.d_liq)];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// kT / V_a, J/m^3.
    pub fn thermal_energy_density(&self) -> f64 {
        self.k_b * self.temperature / self.atomic_volume
    }

    /// Undercooling driving force per species, `L_i (T - T_i) / T_i`.
    pub fn driving_forces(&self) -> [f64; 3] {
        let t = self.temperature;
        [
            self.latent_a * (t - self.melt_a) / self.melt_a,
            self.latent_b * (t - self.melt_b) / self.melt_b,
            self.latent_c * (t - self.melt_c) / self.melt_c,
        ]
    }

    /// Relaxation rate of the phase field, `M_phi * pi^2 / (8 eta)` in 1/(Pa s).
    pub fn phase_relaxation_rate(&self) -> f64 {
        // GPa -> Pa
        let m = self.m_phi * 1e-9;
        m * std::f64::consts::PI.powi(2) / (8.0 * self.eta)
    }
}
