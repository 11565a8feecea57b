//! Multi-energy system design instances.
//!
//! Superstructure: heat pump, compression chiller, combined heat and power
//! engine, photovoltaic and battery, serving heating, cooling and
//! electricity demands over `T` typical time steps, with grid electricity
//! and gas bought at fixed prices.
//!
//! Variables:
//!
//! * purchase binaries for the heat pump, chiller, CHP and battery, each at
//!   its rated (maximum) size;
//! * PV capacity as one continuous variable;
//! * per step: charge and discharge binaries, on/off and second-segment
//!   binaries for the three dispatchable units, first- and second-segment
//!   output of each dispatchable unit, battery state of charge, charge and
//!   discharge flow and grid import.
//!
//! That gives `8T + 4` binaries and `10T + 1` continuous variables.
//!
//! Dispatchable units follow a two-segment part-load curve: the first
//! segment runs between the minimum part load and `first_segment · cap`
//! while the unit is on, the second segment adds up to the remaining
//! capacity at a different conversion ratio and only once the first one is
//! full. The battery balance is cyclic: the last step wraps to the first.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benders::{MasterRow, RowOrigin};
use crate::model::{load_model, normalize, save_model, MilpModel, ModelError, Sense, StandardMilp, VarSlot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    HeatPump,
    Chiller,
    Chp,
    Pv,
    Battery,
}

impl ComponentKind {
    pub fn label(self) -> &'static str {
        match self {
            ComponentKind::HeatPump => "hp",
            ComponentKind::Chiller => "ch",
            ComponentKind::Chp => "chp",
            ComponentKind::Pv => "pv",
            ComponentKind::Battery => "bat",
        }
    }

    fn dispatchable(self) -> bool {
        matches!(self, ComponentKind::HeatPump | ComponentKind::Chiller | ComponentKind::Chp)
    }
}

/// One unit of the superstructure. Capacities are MW, or MWh for the
/// battery; costs are per MW (MWh) of capacity and per MWh of output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub kind: ComponentKind,
    pub capacity_min: f64,
    pub capacity_max: f64,
    pub investment_cost: f64,
    pub operating_cost: f64,
    /// Output per unit of input on the first segment: COP for the heat
    /// pump and chiller, heat per unit of gas for the CHP.
    pub conversion: f64,
    /// Same on the second segment.
    pub conversion_second: f64,
    /// Electricity per unit of heat (CHP only).
    pub electric_ratio: f64,
    /// Share of capacity covered by the first segment.
    pub first_segment: f64,
    pub min_part_load: f64,
    /// Charge efficiency (battery); 1 elsewhere.
    pub efficiency: f64,
    /// Charge and discharge power per MWh of storage (battery only).
    pub power_ratio: f64,
}

impl ComponentSpec {
    pub fn validate(&self) -> Result<(), MesError> {
        let bad = |what: &str| Err(MesError::InvalidComponent(self.kind, what.to_string()));
        if !(self.capacity_min >= 0.0 && self.capacity_min <= self.capacity_max && self.capacity_max.is_finite()) {
            return bad("capacity bounds must satisfy 0 <= min <= max < inf");
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad("efficiency must lie in (0, 1]");
        }
        if !(self.min_part_load >= 0.0 && self.min_part_load < 1.0) {
            return bad("minimum part load must lie in [0, 1)");
        }
        if self.kind.dispatchable() {
            if !(self.conversion > 0.0 && self.conversion_second > 0.0) {
                return bad("conversion ratios must be positive");
            }
            if !(self.first_segment > 0.0 && self.first_segment <= 1.0) {
                return bad("first segment must lie in (0, 1]");
            }
            if self.min_part_load > self.first_segment {
                return bad("minimum part load exceeds the first segment");
            }
        }
        if self.kind == ComponentKind::Battery && !(self.power_ratio > 0.0) {
            return bad("battery power ratio must be positive");
        }
        if self.investment_cost < 0.0 || self.operating_cost < 0.0 {
            return bad("costs must be non-negative");
        }
        Ok(())
    }
}

/// Demands in MW per typical step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    pub heating: Vec<f64>,
    pub cooling: Vec<f64>,
    pub electricity: Vec<f64>,
    /// Hours of the year represented by each step.
    pub weight: Vec<f64>,
    pub pv_availability: Vec<f64>,
}

impl DemandProfile {
    pub fn steps(&self) -> usize {
        self.weight.len()
    }

    pub fn validate(&self) -> Result<(), MesError> {
        let t = self.steps();
        if t == 0 {
            return Err(MesError::InvalidProfile("no time steps".into()));
        }
        for (name, v) in [
            ("heating", &self.heating),
            ("cooling", &self.cooling),
            ("electricity", &self.electricity),
            ("pv_availability", &self.pv_availability),
        ] {
            if v.len() != t {
                return Err(MesError::InvalidProfile(format!("{name} has {} entries, expected {t}", v.len())));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(MesError::InvalidProfile(format!("{name} must be finite and non-negative")));
            }
        }
        if self.pv_availability.iter().any(|&a| a > 1.0) {
            return Err(MesError::InvalidProfile("pv_availability must lie in [0, 1]".into()));
        }
        if self.weight.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(MesError::InvalidProfile("weights must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prices {
    pub grid_electricity: f64,
    pub gas: f64,
    /// Share of the investment paid per year.
    pub annualization_factor: f64,
    /// Hours between consecutive steps in the storage balance.
    pub storage_step_hours: f64,
}

/// Everything needed to build one instance; also the sidecar file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MesDataset {
    pub seed: u64,
    pub components: Vec<ComponentSpec>,
    pub profile: DemandProfile,
    pub prices: Prices,
}

#[derive(Debug, Error, PartialEq)]
pub enum MesError {
    #[error("component {0:?}: {1}")]
    InvalidComponent(ComponentKind, String),
    #[error("component {0:?} is listed twice")]
    DuplicateComponent(ComponentKind),
    #[error("component {0:?} is missing")]
    MissingComponent(ComponentKind),
    #[error("invalid demand profile: {0}")]
    InvalidProfile(String),
    #[error("{form} demand {demand} at step {step} exceeds the installable capacity {capacity}")]
    InsufficientCapacity {
        form: &'static str,
        step: usize,
        demand: f64,
        capacity: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

/// Raw variable indices of one time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepVars {
    pub charge: usize,
    pub discharge: usize,
    /// Heat pump, chiller, CHP.
    pub on: [usize; 3],
    pub second: [usize; 3],
    pub first_output: [usize; 3],
    pub second_output: [usize; 3],
    pub soc: usize,
    pub charge_flow: usize,
    pub discharge_flow: usize,
    pub grid: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MesInstance {
    pub dataset: MesDataset,
    pub model: MilpModel,
    pub milp: StandardMilp,
    /// Purchase binaries (raw indices).
    pub purchase: BTreeMap<ComponentKind, usize>,
    pub pv_capacity: usize,
    pub steps: Vec<StepVars>,
}

const DISPATCH: [ComponentKind; 3] = [ComponentKind::HeatPump, ComponentKind::Chiller, ComponentKind::Chp];

fn component(specs: &[ComponentSpec], kind: ComponentKind) -> Result<&ComponentSpec, MesError> {
    specs.iter().find(|c| c.kind == kind).ok_or(MesError::MissingComponent(kind))
}

pub fn build_instance(dataset: &MesDataset) -> Result<MesInstance, MesError> {
    let specs = &dataset.components;
    let profile = &dataset.profile;
    let prices = &dataset.prices;
    profile.validate()?;
    for (i, c) in specs.iter().enumerate() {
        c.validate()?;
        if specs[..i].iter().any(|o| o.kind == c.kind) {
            return Err(MesError::DuplicateComponent(c.kind));
        }
    }
    let hp = component(specs, ComponentKind::HeatPump)?;
    let chiller = component(specs, ComponentKind::Chiller)?;
    let chp = component(specs, ComponentKind::Chp)?;
    let pv = component(specs, ComponentKind::Pv)?;
    let bat = component(specs, ComponentKind::Battery)?;
    for t in 0..profile.steps() {
        let heat_cap = hp.capacity_max + chp.capacity_max;
        if profile.heating[t] > heat_cap {
            return Err(MesError::InsufficientCapacity {
                form: "heating",
                step: t,
                demand: profile.heating[t],
                capacity: heat_cap,
            });
        }
        if profile.cooling[t] > chiller.capacity_max {
            return Err(MesError::InsufficientCapacity {
                form: "cooling",
                step: t,
                demand: profile.cooling[t],
                capacity: chiller.capacity_max,
            });
        }
    }

    let af = prices.annualization_factor;
    let mut m = MilpModel::new(format!("mes-t{}-s{}", profile.steps(), dataset.seed));
    m.metadata.insert("generator".into(), "mes".into());
    m.metadata.insert("seed".into(), dataset.seed.to_string());
    m.metadata.insert("steps".into(), profile.steps().to_string());

    let mut purchase = BTreeMap::new();
    for c in [hp, chiller, chp, bat] {
        let v = m.add_binary(format!("buy_{}", c.kind.label()), af * c.investment_cost * c.capacity_max);
        purchase.insert(c.kind, v);
    }
    let pv_capacity = m.add_var(
        "cap_pv",
        crate::model::VarKind::Continuous,
        pv.capacity_min,
        Some(pv.capacity_max),
        af * pv.investment_cost,
    );
    let units = [hp, chiller, chp];

    let mut steps = Vec::with_capacity(profile.steps());
    for t in 0..profile.steps() {
        let w = profile.weight[t];
        let charge = m.add_binary(format!("charge_{t}"), 0.0);
        let discharge = m.add_binary(format!("discharge_{t}"), 0.0);
        let on = DISPATCH.map(|k| m.add_binary(format!("on_{}_{t}", k.label()), 0.0));
        let second = DISPATCH.map(|k| m.add_binary(format!("seg2_{}_{t}", k.label()), 0.0));
        let mut first_output = [0; 3];
        let mut second_output = [0; 3];
        for (u, c) in units.iter().enumerate() {
            let input_price = if c.kind == ComponentKind::Chp { prices.gas } else { prices.grid_electricity };
            // CHP fuel is paid directly; electric units pay through grid import
            let fuel = |conv: f64| if c.kind == ComponentKind::Chp { input_price / conv } else { 0.0 };
            first_output[u] = m.add_continuous(format!("out1_{}_{t}", c.kind.label()), w * (c.operating_cost + fuel(c.conversion)));
            second_output[u] = m.add_continuous(
                format!("out2_{}_{t}", c.kind.label()),
                w * (c.operating_cost + fuel(c.conversion_second)),
            );
        }
        let soc = m.add_continuous(format!("soc_{t}"), 0.0);
        let charge_flow = m.add_continuous(format!("charge_flow_{t}"), 0.0);
        let discharge_flow = m.add_continuous(format!("discharge_flow_{t}"), w * bat.operating_cost);
        let grid = m.add_continuous(format!("grid_{t}"), w * prices.grid_electricity);
        steps.push(StepVars {
            charge,
            discharge,
            on,
            second,
            first_output,
            second_output,
            soc,
            charge_flow,
            discharge_flow,
            grid,
        });
    }

    let n_steps = steps.len();
    for (t, s) in steps.iter().enumerate() {
        let [o_hp, o_ch, o_chp] = [0, 1, 2].map(|u| (s.first_output[u], s.second_output[u]));
        m.add_constraint(
            format!("heat_{t}"),
            vec![(o_hp.0, 1.0), (o_hp.1, 1.0), (o_chp.0, 1.0), (o_chp.1, 1.0)],
            Sense::Ge,
            profile.heating[t],
        );
        m.add_constraint(format!("cool_{t}"), vec![(o_ch.0, 1.0), (o_ch.1, 1.0)], Sense::Ge, profile.cooling[t]);
        m.add_constraint(
            format!("elec_{t}"),
            vec![
                (s.grid, 1.0),
                (pv_capacity, profile.pv_availability[t]),
                (o_chp.0, chp.electric_ratio),
                (o_chp.1, chp.electric_ratio),
                (s.discharge_flow, 1.0),
                (s.charge_flow, -1.0),
                (o_hp.0, -1.0 / hp.conversion),
                (o_hp.1, -1.0 / hp.conversion_second),
                (o_ch.0, -1.0 / chiller.conversion),
                (o_ch.1, -1.0 / chiller.conversion_second),
            ],
            Sense::Ge,
            profile.electricity[t],
        );
        for (u, c) in units.iter().enumerate() {
            let cap = c.capacity_max;
            let l = c.kind.label();
            let (p, q) = (s.first_output[u], s.second_output[u]);
            m.add_constraint(
                format!("link_{l}_{t}"),
                vec![(p, 1.0), (q, 1.0), (purchase[&c.kind], -cap)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("minload_{l}_{t}"),
                vec![(p, 1.0), (s.on[u], -c.min_part_load * cap)],
                Sense::Ge,
                0.0,
            );
            m.add_constraint(
                format!("seg1_{l}_{t}"),
                vec![(p, 1.0), (s.on[u], -c.first_segment * cap)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("seg2_{l}_{t}"),
                vec![(q, 1.0), (s.second[u], -(1.0 - c.first_segment) * cap)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("fill_{l}_{t}"),
                vec![(p, 1.0), (s.second[u], -c.first_segment * cap)],
                Sense::Ge,
                0.0,
            );
            m.add_constraint(
                format!("onbuy_{l}_{t}"),
                vec![(s.on[u], 1.0), (purchase[&c.kind], -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(format!("segon_{l}_{t}"), vec![(s.second[u], 1.0), (s.on[u], -1.0)], Sense::Le, 0.0);
        }
        let bat_buy = purchase[&ComponentKind::Battery];
        let power = bat.power_ratio * bat.capacity_max;
        m.add_constraint(
            format!("charge_cap_{t}"),
            vec![(s.charge_flow, 1.0), (s.charge, -power)],
            Sense::Le,
            0.0,
        );
        m.add_constraint(
            format!("discharge_cap_{t}"),
            vec![(s.discharge_flow, 1.0), (s.discharge, -power)],
            Sense::Le,
            0.0,
        );
        m.add_constraint(
            format!("soc_cap_{t}"),
            vec![(s.soc, 1.0), (bat_buy, -bat.capacity_max)],
            Sense::Le,
            0.0,
        );
        m.add_constraint(format!("chbuy_{t}"), vec![(s.charge, 1.0), (bat_buy, -1.0)], Sense::Le, 0.0);
        m.add_constraint(format!("disbuy_{t}"), vec![(s.discharge, 1.0), (bat_buy, -1.0)], Sense::Le, 0.0);
        m.add_constraint(
            format!("exclusive_{t}"),
            vec![(s.charge, 1.0), (s.discharge, 1.0)],
            Sense::Le,
            1.0,
        );
        let prev = &steps[(t + n_steps - 1) % n_steps];
        let h = prices.storage_step_hours;
        let mut coeffs = vec![(s.charge_flow, -h * bat.efficiency), (s.discharge_flow, h)];
        if prev.soc == s.soc {
            // a single step balances with itself
        } else {
            coeffs.push((s.soc, 1.0));
            coeffs.push((prev.soc, -1.0));
        }
        m.add_constraint(format!("storage_{t}"), coeffs, Sense::Eq, 0.0);
    }

    let milp = normalize(&m)?;
    Ok(MesInstance {
        dataset: dataset.clone(),
        model: m,
        milp,
        purchase,
        pv_capacity,
        steps,
    })
}

impl MesInstance {
    pub fn binary_count(&self) -> usize {
        self.milp.n_int
    }

    pub fn continuous_count(&self) -> usize {
        self.milp.n_cont
    }

    fn int_index(&self, raw: usize) -> usize {
        match self.milp.shift.slots[raw] {
            VarSlot::Integer(j) => j,
            VarSlot::Continuous(_) => unreachable!("binary variable mapped to a continuous slot"),
        }
    }

    /// Buy every unit, keep every dispatchable unit fully available and the
    /// battery idle. Feasible whenever the build checks pass.
    pub fn all_purchase_design(&self) -> Vec<i64> {
        let mut y = vec![0i64; self.milp.n_int];
        for &v in self.purchase.values() {
            y[self.int_index(v)] = 1;
        }
        for s in &self.steps {
            for u in 0..3 {
                y[self.int_index(s.on[u])] = 1;
                y[self.int_index(s.second[u])] = 1;
            }
        }
        y
    }

    /// Purchased capacities of a standard-form point.
    pub fn design(&self, x: &[f64], y: &[f64]) -> BTreeMap<ComponentKind, f64> {
        let mut out = BTreeMap::new();
        for c in &self.dataset.components {
            let cap = match c.kind {
                ComponentKind::Pv => match self.milp.shift.slots[self.pv_capacity] {
                    VarSlot::Continuous(j) => x[j] + self.milp.shift.lower[self.pv_capacity],
                    VarSlot::Integer(_) => unreachable!(),
                },
                k => y[self.int_index(self.purchase[&k])] * c.capacity_max,
            };
            out.insert(c.kind, cap);
        }
        out
    }

    /// Pure-integer rows implied by the balances: installed heating and
    /// cooling capacity covers the peak, and at every step the units that
    /// are on cover that step's demand. Indices refer to the standard form.
    pub fn peak_demand_inequalities(&self) -> Vec<MasterRow> {
        let specs = &self.dataset.components;
        let cap = |k| component(specs, k).map(|c| c.capacity_max).unwrap_or(0.0);
        let heat = [(0usize, ComponentKind::HeatPump), (2, ComponentKind::Chp)];
        let cool = [(1usize, ComponentKind::Chiller)];
        let p = &self.dataset.profile;
        let mut rows = Vec::new();
        let push = |coeffs: Vec<(usize, f64)>, rhs: f64, rows: &mut Vec<MasterRow>| {
            if rhs > 0.0 {
                let k = rows.len();
                rows.push(MasterRow {
                    coeffs,
                    zeta: 0.0,
                    rhs,
                    origin: RowOrigin::ValidInequality(k),
                    exclude: None,
                });
            }
        };
        for (units, demand) in [(&heat[..], &p.heating), (&cool[..], &p.cooling)] {
            let peak = demand.iter().copied().fold(0.0, f64::max);
            let coeffs = units.iter().map(|&(_, k)| (self.int_index(self.purchase[&k]), cap(k))).collect();
            push(coeffs, peak, &mut rows);
            // a running unit without its second segment delivers only the
            // first one; scaled by ten and rounded up so the row stays valid
            // with integer coefficients
            let up = |v: f64| (10.0 * v - 1e-9).ceil();
            for (t, s) in self.steps.iter().enumerate() {
                let mut coeffs = Vec::new();
                for &(u, k) in units {
                    let first = component(specs, k).map(|c| c.first_segment).unwrap_or(1.0);
                    for (j, a) in [(s.on[u], up(cap(k) * first)), (s.second[u], up(cap(k) * (1.0 - first)))] {
                        if a > 0.0 {
                            coeffs.push((self.int_index(j), a));
                        }
                    }
                }
                push(coeffs, up(demand[t]), &mut rows);
            }
        }
        rows
    }
}

pub const SIDECAR_FORMAT: &str = "qbenders-mes";
pub const SIDECAR_VERSION: u32 = 1;

/// Metadata written next to a generated model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    /// Model file name, relative to the sidecar.
    pub model_file: String,
    pub steps: usize,
    pub binaries: usize,
    pub continuous: usize,
    pub dataset: MesDataset,
}

fn file_error(path: &Path, message: impl ToString) -> MesError {
    MesError::File {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Writes `<stem>.model.json` and `<stem>.mes.json` into `dir`.
pub fn write_dataset(inst: &MesInstance, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), MesError> {
    std::fs::create_dir_all(dir).map_err(|e| file_error(dir, e))?;
    let model_name = format!("{stem}.model.json");
    let model_path = dir.join(&model_name);
    save_model(&inst.model, &model_path).map_err(|e| file_error(&model_path, e))?;
    let sidecar = Sidecar {
        format: SIDECAR_FORMAT.into(),
        version: SIDECAR_VERSION,
        model_file: model_name,
        steps: inst.steps.len(),
        binaries: inst.binary_count(),
        continuous: inst.continuous_count(),
        dataset: inst.dataset.clone(),
    };
    let sidecar_path = dir.join(format!("{stem}.mes.json"));
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| file_error(&sidecar_path, e))?;
    std::fs::write(&sidecar_path, text + "\n").map_err(|e| file_error(&sidecar_path, e))?;
    Ok((model_path, sidecar_path))
}

/// Rebuilds an instance from its sidecar and checks it against the model
/// file it names.
pub fn load_dataset(sidecar_path: &Path) -> Result<MesInstance, MesError> {
    let text = std::fs::read_to_string(sidecar_path).map_err(|e| file_error(sidecar_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| file_error(sidecar_path, e))?;
    if sidecar.format != SIDECAR_FORMAT || sidecar.version != SIDECAR_VERSION {
        return Err(file_error(
            sidecar_path,
            format!("unsupported format {} version {}", sidecar.format, sidecar.version),
        ));
    }
    let inst = build_instance(&sidecar.dataset)?;
    let model_path = sidecar_path.parent().unwrap_or(Path::new(".")).join(&sidecar.model_file);
    let model = load_model(&model_path).map_err(|e| file_error(&model_path, e))?;
    if model != inst.model {
        return Err(file_error(&model_path, "model does not match the dataset in its sidecar"));
    }
    Ok(inst)
}

fn cosine(t: usize, steps: usize) -> f64 {
    (2.0 * std::f64::consts::PI * t as f64 / steps as f64).cos()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Synthetic dataset with `steps` typical steps. Step 0 is the heating
/// peak; cooling peaks half a year later. Seed 0 is the reference dataset,
/// other seeds scale every demand entry by a factor in `[0.9, 1.1]`.
pub fn default_dataset(seed: u64, steps: usize) -> MesDataset {
    let steps = steps.max(1);
    let components = vec![
        ComponentSpec {
            kind: ComponentKind::HeatPump,
            capacity_min: 0.0,
            capacity_max: 6.0,
            investment_cost: 10_000.0,
            operating_cost: 0.05,
            conversion: 3.5,
            conversion_second: 3.0,
            electric_ratio: 0.0,
            first_segment: 0.6,
            min_part_load: 0.15,
            efficiency: 1.0,
            power_ratio: 0.0,
        },
        ComponentSpec {
            kind: ComponentKind::Chiller,
            capacity_min: 0.0,
            capacity_max: 5.0,
            investment_cost: 8_000.0,
            operating_cost: 0.05,
            conversion: 4.0,
            conversion_second: 3.5,
            electric_ratio: 0.0,
            first_segment: 0.6,
            min_part_load: 0.1,
            efficiency: 1.0,
            power_ratio: 0.0,
        },
        ComponentSpec {
            kind: ComponentKind::Chp,
            capacity_min: 0.0,
            capacity_max: 5.0,
            investment_cost: 16_000.0,
            operating_cost: 0.1,
            conversion: 0.5,
            conversion_second: 0.45,
            electric_ratio: 0.8,
            first_segment: 0.6,
            min_part_load: 0.3,
            efficiency: 1.0,
            power_ratio: 0.0,
        },
        ComponentSpec {
            kind: ComponentKind::Pv,
            capacity_min: 0.0,
            capacity_max: 5.0,
            investment_cost: 60_000.0,
            operating_cost: 0.0,
            conversion: 1.0,
            conversion_second: 1.0,
            electric_ratio: 0.0,
            first_segment: 1.0,
            min_part_load: 0.0,
            efficiency: 1.0,
            power_ratio: 0.0,
        },
        ComponentSpec {
            kind: ComponentKind::Battery,
            capacity_min: 0.0,
            capacity_max: 8.0,
            investment_cost: 20_000.0,
            operating_cost: 0.02,
            conversion: 1.0,
            conversion_second: 1.0,
            electric_ratio: 0.0,
            first_segment: 1.0,
            min_part_load: 0.0,
            efficiency: 0.9,
            power_ratio: 0.5,
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |v: f64| if seed == 0 { v } else { v * rng.gen_range(0.9..1.1) };
    let mut profile = DemandProfile {
        heating: Vec::with_capacity(steps),
        cooling: Vec::with_capacity(steps),
        electricity: Vec::with_capacity(steps),
        weight: vec![round2(8760.0 / steps as f64); steps],
        pv_availability: Vec::with_capacity(steps),
    };
    for t in 0..steps {
        let c = cosine(t, steps);
        let s = (2.0 * std::f64::consts::PI * t as f64 / steps as f64).sin();
        profile.heating.push(round2(jitter(5.5 + 4.5 * c).min(10.5)));
        profile.cooling.push(round2(jitter(2.5 - 2.0 * c).min(4.8)));
        profile.electricity.push(round2(jitter(3.0 + 0.8 * s)));
        profile.pv_availability.push(round2(0.5 - 0.3 * c));
    }
    MesDataset {
        seed,
        components,
        profile,
        prices: Prices {
            grid_electricity: 2.0,
            gas: 1.0,
            annualization_factor: 0.1,
            storage_step_hours: 2.0,
        },
    }
}
