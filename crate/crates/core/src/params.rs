//! Gas parameters: adiabatic exponent, expansion amplitude, field sign.

use crate::{Error, Result};

/// Sign of the self-consistent force field coupling.
///
/// `Attractive` (+1) models self-gravitation, `Repulsive` (-1) the
/// electrostatic repulsion of a single-species plasma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSign {
    Attractive,
    Repulsive,
}

impl FieldSign {
    /// The signed coupling constant `c` in `{-1, +1}`.
    pub fn c(self) -> f64 {
        match self {
            FieldSign::Attractive => 1.0,
            FieldSign::Repulsive => -1.0,
        }
    }

    pub fn from_int(c: i64) -> Result<Self> {
        match c {
            1 => Ok(FieldSign::Attractive),
            -1 => Ok(FieldSign::Repulsive),
            other => Err(Error::domain(format!(
                "field sign must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// Polytropic gas parameters.
///
/// * `gamma` — adiabatic exponent, `gamma > 1`; the perturbation dynamics is
///   formulated for `1 < gamma < 5/3`.
/// * `delta` — amplitude of the background expansion nonlinearity,
///   `delta >= 0`.
/// * `field_sign` — attractive or repulsive nonlocal field.
#[derive(Debug, Clone, Copy)]
pub struct GasParams {
    pub gamma: f64,
    pub delta: f64,
    pub field_sign: FieldSign,
}

impl GasParams {
    pub fn new(gamma: f64, delta: f64, field_sign: FieldSign) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must satisfy gamma > 1, got {gamma}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("delta must satisfy delta >= 0, got {delta}")));
        }
        Ok(GasParams { gamma, delta, field_sign })
    }

    /// `alpha = 1/(gamma - 1)`, the polytropic index of the enthalpy profile.
    ///
    /// Computed on demand so that `alpha * (gamma - 1) == 1` holds to machine
    /// precision by construction.
    pub fn alpha(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    /// Whether `gamma` lies in the open interval `(1, 5/3)` where the
    /// perturbation dynamics (positive decay rates `mu0`, `mu2`) applies.
    pub fn in_dynamic_range(&self) -> bool {
        self.gamma > 1.0 && self.gamma < 5.0 / 3.0
    }

    /// Enthalpy normalisation `(gamma - 1) / (2 gamma)`.
    pub fn enthalpy_coeff(&self) -> f64 {
        (self.gamma - 1.0) / (2.0 * self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_inverse_relation_is_exact() {
        for gamma in [1.2, 4.0 / 3.0, 1.5, 1.6, 2.0, 5.0 / 3.0] {
            let p = GasParams::new(gamma, 0.0, FieldSign::Attractive).unwrap();
            assert_eq!(p.alpha() * (gamma - 1.0), 1.0);
        }
    }

    #[test]
    fn gamma_two_gives_alpha_one() {
        let p = GasParams::new(2.0, 1e-2, FieldSign::Attractive).unwrap();
        assert_eq!(p.alpha(), 1.0);
        assert!(!p.in_dynamic_range());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GasParams::new(1.0, 0.1, FieldSign::Attractive).is_err());
        assert!(GasParams::new(0.9, 0.1, FieldSign::Attractive).is_err());
        assert!(GasParams::new(1.5, -0.1, FieldSign::Attractive).is_err());
        assert!(FieldSign::from_int(0).is_err());
        assert_eq!(FieldSign::from_int(-1).unwrap().c(), -1.0);
    }
}
