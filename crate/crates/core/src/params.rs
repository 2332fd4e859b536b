use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permeability expressed in the unit group
/// (cm, µs, 10³ T, 10⁵ J/cm³, 10² mΩ·cm).
///
/// Diffusivity η/μ₀ must come out in cm²/µs: η carries 10⁻³ Ω·m and
/// cm²/µs is 10² m²/s, so μ₀ = 4π×10⁻⁷ · 10² / 10⁻³ = 4π×10⁻². The energy
/// relation `e = B²/(2μ₀)` gives the same number: (10³ T)² / (4π×10⁻⁷ H/m)
/// expressed in 10¹¹ J/m³ is 1/(4π×10⁻²).
pub const MU0_DEFAULT: f64 = 4.0 * std::f64::consts::PI * 1e-2;

/// Physical inputs of the problem.
///
/// `e_crit = +∞` is accepted and turns off the resistivity jump, leaving a
/// linear diffusion problem with `η = eta_cold` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Boundary field at x = 0.
    #[serde(rename = "B0")]
    pub b0: f64,
    /// Critical energy density at which the resistivity jumps.
    #[serde(rename = "ec")]
    pub e_crit: f64,
    /// Resistivity of burned material (e > e_crit).
    #[serde(rename = "etaL")]
    pub eta_burned: f64,
    /// Resistivity of cold material (e <= e_crit).
    #[serde(rename = "etaS")]
    pub eta_cold: f64,
    #[serde(default = "default_mu0")]
    pub mu0: f64,
}

fn default_mu0() -> f64 {
    MU0_DEFAULT
}

impl ProblemParams {
    pub fn new(b0: f64, e_crit: f64, eta_burned: f64, eta_cold: f64) -> Result<Self> {
        let p = Self {
            b0,
            e_crit,
            eta_burned,
            eta_cold,
            mu0: MU0_DEFAULT,
        };
        p.validate()?;
        Ok(p)
    }

    /// The worked example: B₀ = 0.2, e_c = 0.1, η_L = 9.7e-3, η_S = 9.7e-5.
    pub fn reference() -> Self {
        Self {
            b0: 0.2,
            e_crit: 0.1,
            eta_burned: 9.7e-3,
            eta_cold: 9.7e-5,
            mu0: MU0_DEFAULT,
        }
    }

    pub fn with_mu0(mut self, mu0: f64) -> Self {
        self.mu0 = mu0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("B0", self.b0)?;
        positive("etaS", self.eta_cold)?;
        positive("etaL", self.eta_burned)?;
        positive("mu0", self.mu0)?;
        if !(self.e_crit > 0.0) {
            return Err(Error::invalid(format!("ec must be > 0, got {}", self.e_crit)));
        }
        if !(self.eta_burned > self.eta_cold) {
            return Err(Error::invalid(format!(
                "etaL ({}) must exceed etaS ({})",
                self.eta_burned, self.eta_cold
            )));
        }
        Ok(())
    }

    /// Step-function resistivity; `e == e_crit` still counts as cold.
    pub fn resistivity(&self, e: f64) -> f64 {
        if e > self.e_crit {
            self.eta_burned
        } else {
            self.eta_cold
        }
    }

    /// `b = B₀ / √(2 μ₀ e_c)`.
    pub fn field_ratio(&self) -> f64 {
        self.b0 / (2.0 * self.mu0 * self.e_crit).sqrt()
    }

    /// `r = η_L / η_S`.
    pub fn resistivity_ratio(&self) -> f64 {
        self.eta_burned / self.eta_cold
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu0_follows_from_si_through_unit_group() {
        let mu0_si = 4.0 * std::f64::consts::PI * 1e-7; // T·m/A
        let field_unit = 1e3; // T
        let energy_unit = 1e5 * 1e6; // J/m³
        let resistivity_unit = 1e2 * 1e-3 * 1e-2; // Ω·m
        let length_unit = 1e-2; // m
        let time_unit = 1e-6; // s

        // ∂B/∂t = ∂x(η/μ₀ ∂x B): η/μ₀ must be measured in length²/time.
        let diffusivity_unit = length_unit * length_unit / time_unit;
        let mu0_from_diffusion = mu0_si * diffusivity_unit / resistivity_unit;
        // e = B²/(2μ₀): B²/μ₀ must be measured in the energy unit.
        let mu0_from_energy = mu0_si * energy_unit / (field_unit * field_unit);
        // ∂e/∂t = η (∂x B)² / μ₀²: the numeric μ₀ absorbs every unit factor.
        let mu0_from_heating = mu0_si
            * length_unit
            * (energy_unit / (resistivity_unit * field_unit * field_unit * time_unit)).sqrt();

        for mu0 in [mu0_from_diffusion, mu0_from_energy, mu0_from_heating] {
            assert!(((mu0 - MU0_DEFAULT) / MU0_DEFAULT).abs() < 1e-12, "{mu0}");
        }
    }

    #[test]
    fn validation() {
        assert!(ProblemParams::reference().validate().is_ok());
        assert!(ProblemParams::new(0.2, 0.1, 1e-5, 1e-4).is_err());
        assert!(ProblemParams::new(-0.2, 0.1, 1e-2, 1e-4).is_err());
        assert!(ProblemParams::new(0.2, 0.0, 1e-2, 1e-4).is_err());
        assert!(ProblemParams::new(0.2, f64::NAN, 1e-2, 1e-4).is_err());
        assert!(ProblemParams::new(0.2, f64::INFINITY, 1e-2, 1e-4).is_ok());
    }

    #[test]
    fn step_resistivity_is_cold_at_threshold() {
        let p = ProblemParams::reference();
        assert_eq!(p.resistivity(0.0), p.eta_cold);
        assert_eq!(p.resistivity(p.e_crit), p.eta_cold);
        assert_eq!(p.resistivity(p.e_crit * (1.0 + 1e-15)), p.eta_burned);
    }

    #[test]
    fn reference_ratios() {
        let p = ProblemParams::reference();
        assert!((p.field_ratio() - 1.261_566).abs() < 1e-6);
        assert!((p.resistivity_ratio() - 100.0).abs() < 1e-12);
    }
}
