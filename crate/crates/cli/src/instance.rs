//! Where a run's MILP comes from.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qbenders::benders::MasterRow;
use qbenders::mes::{build_instance, default_dataset, load_dataset, MesInstance};
use qbenders::model::{load_model, normalize};
use qbenders::{MilpModel, StandardMilp};

#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSource {
    /// A model file, or a dataset sidecar (`*.mes.json`).
    File(PathBuf),
    /// A generated MES instance.
    Mes { steps: usize, seed: u64 },
}

pub struct Instance {
    pub id: String,
    /// Number of typical steps for MES instances.
    pub steps: Option<usize>,
    pub model: MilpModel,
    pub milp: StandardMilp,
    pub mes: Option<MesInstance>,
}

impl Instance {
    pub fn load(src: &InstanceSource) -> Result<Self> {
        match src {
            InstanceSource::Mes { steps, seed } => {
                let mes = build_instance(&default_dataset(*seed, *steps)).context("building MES instance")?;
                Ok(Self::from_mes(format!("mes_t{steps}_s{seed}"), mes))
            }
            InstanceSource::File(path) => {
                let name = file_stem(path);
                if path.to_string_lossy().ends_with(".mes.json") {
                    let mes = load_dataset(path)?;
                    return Ok(Self::from_mes(name, mes));
                }
                let model = load_model(path)?;
                let milp = normalize(&model).with_context(|| format!("normalizing {}", path.display()))?;
                Ok(Self {
                    id: name,
                    steps: None,
                    model,
                    milp,
                    mes: None,
                })
            }
        }
    }

    fn from_mes(id: String, mes: MesInstance) -> Self {
        Self {
            id,
            steps: Some(mes.steps.len()),
            model: mes.model.clone(),
            milp: mes.milp.clone(),
            mes: Some(mes),
        }
    }

    pub fn valid_inequalities(&self) -> Vec<MasterRow> {
        self.mes.as_ref().map(|m| m.peak_demand_inequalities()).unwrap_or_default()
    }

    pub fn hints(&self) -> Vec<Vec<i64>> {
        self.mes.as_ref().map(|m| vec![m.all_purchase_design()]).unwrap_or_default()
    }
}

fn file_stem(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for suffix in [".mes.json", ".model.json", ".json"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            return stem.to_string();
        }
    }
    name
}
