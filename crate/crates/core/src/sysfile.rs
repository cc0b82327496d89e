//! System description files: JSON with `dim`, `modes` (list of matrices,
//! each a list of rows), `cost_Q` and an optional `rho_hint`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt17::{wrap_rows, F17};
use crate::model::{Matrix, QuadraticCost, SwitchedSystem};

#[derive(Clone, Debug, PartialEq)]
pub struct SystemDescription {
    pub system: SwitchedSystem,
    pub cost: QuadraticCost,
    pub rho_hint: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    dim: usize,
    modes: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "cost_Q")]
    cost_q: Vec<Vec<f64>>,
    #[serde(default)]
    rho_hint: Option<f64>,
}

#[derive(Serialize)]
struct OutFile {
    dim: usize,
    modes: Vec<Vec<Vec<F17>>>,
    #[serde(rename = "cost_Q")]
    cost_q: Vec<Vec<F17>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_hint: Option<F17>,
}

impl SystemDescription {
    pub fn new(system: SwitchedSystem, cost: QuadraticCost, rho_hint: Option<f64>) -> Result<Self> {
        if system.dim() != cost.dim() {
            return Err(Error::Input(format!(
                "system dimension {} does not match cost dimension {}",
                system.dim(),
                cost.dim()
            )));
        }
        Ok(Self {
            system,
            cost,
            rho_hint,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let out = OutFile {
            dim: self.system.dim(),
            modes: self.system.modes().iter().map(|m| wrap_rows(&m.to_rows())).collect(),
            cost_q: wrap_rows(&self.cost.matrix().to_rows()),
            rho_hint: self.rho_hint.map(F17),
        };
        let mut s = serde_json::to_string_pretty(&out)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text)?;
        let modes = raw
            .modes
            .iter()
            .map(|rows| Matrix::from_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        let system = SwitchedSystem::new(modes)?;
        if system.dim() != raw.dim {
            return Err(Error::Input(format!(
                "declared dim {} but modes are {}x{}",
                raw.dim,
                system.dim(),
                system.dim()
            )));
        }
        let cost = QuadraticCost::new(Matrix::from_rows(&raw.cost_q)?)?;
        Self::new(system, cost, raw.rho_hint)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_files() {
        let bad_dim = r#"{"dim": 3, "modes": [[[1,0],[0,1]]], "cost_Q": [[1,0],[0,1]]}"#;
        assert!(SystemDescription::from_json(bad_dim).is_err());
        let bad_cost = r#"{"dim": 2, "modes": [[[1,0],[0,1]]], "cost_Q": [[1]]}"#;
        assert!(SystemDescription::from_json(bad_cost).is_err());
        let unknown = r#"{"dim": 1, "modes": [[[1]]], "cost_Q": [[1]], "extra": 1}"#;
        assert!(SystemDescription::from_json(unknown).is_err());
        let ok = r#"{"dim": 1, "modes": [[[0.5]]], "cost_Q": [[1]]}"#;
        assert_eq!(SystemDescription::from_json(ok).unwrap().rho_hint, None);
    }
}
