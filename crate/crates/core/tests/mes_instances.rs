use qbenders::mes::*;
use qbenders::model::model_stats;
use qbenders::{branch_and_bound, BendersConfig, BendersSolver, BendersStatus, MipStatus};

fn solve(t: usize) -> (MesInstance, Vec<f64>) {
    let inst = build_instance(&default_dataset(0, t)).unwrap();
    let out = branch_and_bound(&inst.milp, &Default::default()).unwrap();
    assert_eq!(out.status, MipStatus::Optimal, "T={t}");
    let full = inst.milp.denormalize(&out.x, &out.y);
    (inst, full)
}

#[test]
fn counts_match_the_scaling_formulas() {
    for (t, bin, cont) in [(2, 20, 21), (3, 28, 31), (4, 36, 41), (5, 44, 51)] {
        let inst = build_instance(&default_dataset(0, t)).unwrap();
        let stats = model_stats(&inst.milp);
        assert_eq!(inst.binary_count(), bin);
        assert_eq!(inst.continuous_count(), cont);
        assert_eq!(stats.continuous, cont);
        assert_eq!(stats.binary_after_encoding, bin);
    }
}

#[test]
fn reference_optimum_buys_the_dispatchable_units() {
    for t in 2..=5 {
        let (inst, full) = solve(t);
        for k in [ComponentKind::HeatPump, ComponentKind::Chiller, ComponentKind::Chp] {
            assert_eq!(full[inst.purchase[&k]].round(), 1.0, "T={t} {k:?}");
        }
        let obj = inst.model.objective(&full);
        assert!((1e4..1e6).contains(&obj), "T={t} objective {obj}");
    }
}

#[test]
fn storage_balances_over_the_cycle() {
    // a pricier grid and cheaper battery make storage worth using
    let mut d = default_dataset(0, 3);
    d.prices.grid_electricity = 6.0;
    for c in d.components.iter_mut().filter(|c| c.kind == ComponentKind::Battery) {
        c.investment_cost = 100.0;
    }
    d.profile.electricity = vec![1.0, 6.0, 1.0];
    let inst = build_instance(&d).unwrap();
    let out = branch_and_bound(&inst.milp, &Default::default()).unwrap();
    let full = inst.milp.denormalize(&out.x, &out.y);
    let eta = d.components.iter().find(|c| c.kind == ComponentKind::Battery).unwrap().efficiency;
    let charged: f64 = inst.steps.iter().map(|s| full[s.charge_flow]).sum();
    let discharged: f64 = inst.steps.iter().map(|s| full[s.discharge_flow]).sum();
    assert!((eta * charged - discharged).abs() <= 1e-6 * (1.0 + discharged));
    for s in &inst.steps {
        assert!(full[s.charge].round() + full[s.discharge].round() <= 1.0);
    }
}

#[test]
fn exclusivity_holds_at_every_optimum() {
    for t in 2..=4 {
        let (inst, full) = solve(t);
        for s in &inst.steps {
            assert!(full[s.charge].round() + full[s.discharge].round() <= 1.0);
        }
    }
}

#[test]
fn benders_with_valid_inequalities_matches_direct() {
    for t in [2, 3] {
        let (inst, full) = solve(t);
        let want = inst.model.objective(&full);
        let cfg = BendersConfig { gap_tol: 1e-9, ..Default::default() };
        let out = BendersSolver::new(&inst.milp, cfg)
            .with_valid_inequalities(inst.peak_demand_inequalities())
            .with_hints(vec![inst.all_purchase_design()])
            .solve()
            .unwrap();
        assert_eq!(out.status, BendersStatus::OptimalWithinGap);
        assert!((out.objective.unwrap() - want).abs() <= 1e-6 * want.abs(), "T={t}");
    }
}

#[test]
fn datasets_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("qbenders-mes-{}", std::process::id()));
    let inst = build_instance(&default_dataset(7, 3)).unwrap();
    let (model, sidecar) = write_dataset(&inst, &dir, "mes_t3").unwrap();
    assert!(model.exists());
    let back = load_dataset(&sidecar).unwrap();
    assert_eq!(back.model, inst.model);
    assert_eq!(back.dataset, inst.dataset);

    // a model file edited behind the sidecar's back is refused
    let mut m = inst.model.clone();
    m.constraints[0].rhs += 1.0;
    qbenders::model::save_model(&m, &model).unwrap();
    assert!(matches!(load_dataset(&sidecar), Err(MesError::File { .. })));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn checked_in_datasets_are_current() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for t in 2..=5 {
        let inst = load_dataset(&root.join(format!("mes_t{t}_s0.mes.json"))).unwrap();
        assert_eq!(inst.dataset, default_dataset(0, t));
    }
}
