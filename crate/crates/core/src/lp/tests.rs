use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ge(coeffs: Vec<(usize, f64)>, rhs: f64) -> LpRow {
    LpRow {
        coeffs,
        sense: Sense::Ge,
        rhs,
    }
}

fn nonneg(costs: Vec<f64>, rows: Vec<LpRow>) -> LpProblem {
    let n = costs.len();
    LpProblem {
        costs,
        rows,
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
        offset: 0.0,
    }
}

fn assert_optimality_certificates(lp: &LpProblem, sol: &LpSolution) {
    assert!(lp.max_violation(&sol.x) <= 1e-7, "primal violation {}", lp.max_violation(&sol.x));
    assert!(dual_residual(lp, sol) <= 1e-7, "dual residual {}", dual_residual(lp, sol));
    let dual = dual_objective(lp, sol);
    assert!(
        (dual - sol.objective).abs() <= 1e-7 * (1.0 + sol.objective.abs()),
        "duality gap primal {} dual {}",
        sol.objective,
        dual
    );
    // complementary slackness
    for (row, &y) in lp.rows.iter().zip(&sol.duals) {
        let slack = row.activity(&sol.x) - row.rhs;
        assert!((slack * y).abs() <= 1e-6, "row slack {slack} dual {y}");
    }
}

#[test]
fn single_constraint_duality() {
    let lp = nonneg(vec![1.0], vec![ge(vec![(0, 1.0)], 2.0)]);
    let out = solve_lp(&lp, &LpTolerances::default()).unwrap();
    let sol = out.optimal().expect("optimal");
    assert!((sol.x[0] - 2.0).abs() < 1e-12);
    assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    assert!((sol.objective - 2.0).abs() < 1e-12);
}

#[test]
fn textbook_farkas_certificate() {
    let lp = nonneg(vec![0.0], vec![ge(vec![(0, 1.0)], 1.0), ge(vec![(0, -1.0)], 0.0)]);
    match solve_lp(&lp, &LpTolerances::default()).unwrap() {
        LpOutcome::Infeasible(ray) => {
            assert!((ray.rows[0] - 1.0).abs() < 1e-12);
            assert!((ray.rows[1] - 1.0).abs() < 1e-12);
            let (worst, value) = ray.check(&lp);
            assert!(worst <= 0.0);
            assert!((value - 1.0).abs() < 1e-12);
            assert!(ray.is_valid(&lp, 1e-9));
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn unbounded_direction_improves() {
    // min -x s.t. x - y >= 0
    let lp = nonneg(vec![-1.0, 0.0], vec![ge(vec![(0, 1.0), (1, -1.0)], 0.0)]);
    match solve_lp(&lp, &LpTolerances::default()).unwrap() {
        LpOutcome::Unbounded { direction, .. } => {
            let slope: f64 = lp.costs.iter().zip(&direction).map(|(c, d)| c * d).sum();
            assert!(slope < 0.0);
            assert!(direction.iter().all(|&d| d >= -1e-12));
            assert!(direction[0] - direction[1] >= -1e-12);
        }
        other => panic!("expected unbounded, got {other:?}"),
    }
}

#[test]
fn mixed_senses_bounds_and_offset() {
    // min 2a + 3b + 1 s.t. a + b = 4, a <= 3, 1 <= b <= 10
    let lp = LpProblem {
        costs: vec![2.0, 3.0],
        rows: vec![
            LpRow {
                coeffs: vec![(0, 1.0), (1, 1.0)],
                sense: Sense::Eq,
                rhs: 4.0,
            },
            LpRow {
                coeffs: vec![(0, 1.0)],
                sense: Sense::Le,
                rhs: 3.0,
            },
        ],
        lower: vec![0.0, 1.0],
        upper: vec![f64::INFINITY, 10.0],
        offset: 1.0,
    };
    let out = solve_lp(&lp, &LpTolerances::default()).unwrap();
    let sol = out.optimal().unwrap();
    assert!((sol.x[0] - 3.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
    assert!((sol.objective - 10.0).abs() < 1e-9);
    assert!(sol.duals[1] <= 0.0);
    assert_optimality_certificates(&lp, sol);
}

#[test]
fn crossed_bounds_give_bound_certificate() {
    let lp = LpProblem {
        costs: vec![1.0],
        rows: vec![],
        lower: vec![2.0],
        upper: vec![1.0],
        offset: 0.0,
    };
    match solve_lp(&lp, &LpTolerances::default()).unwrap() {
        LpOutcome::Infeasible(ray) => assert!(ray.is_valid(&lp, 1e-9)),
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn degenerate_problem_terminates() {
    // Classic cycling example (Beale) rewritten as a minimization with >= rows.
    let lp = nonneg(
        vec![-0.75, 150.0, -0.02, 6.0],
        vec![
            ge(vec![(0, -0.25), (1, 60.0), (2, 0.04), (3, -9.0)], 0.0),
            ge(vec![(0, -0.5), (1, 90.0), (2, 0.02), (3, -3.0)], 0.0),
            ge(vec![(2, -1.0)], -1.0),
        ],
    );
    let out = solve_lp(&lp, &LpTolerances::default()).unwrap();
    let sol = out.optimal().unwrap();
    assert!((sol.objective + 0.05).abs() < 1e-9, "{}", sol.objective);
    assert_optimality_certificates(&lp, sol);
}

#[test]
fn deterministic() {
    let lp = nonneg(
        vec![1.0, 1.0, 1.0],
        vec![ge(vec![(0, 1.0), (1, 1.0)], 1.0), ge(vec![(1, 1.0), (2, 1.0)], 1.0)],
    );
    let a = solve_lp(&lp, &LpTolerances::default()).unwrap();
    let b = solve_lp(&lp, &LpTolerances::default()).unwrap();
    assert_eq!(a, b);
}

/// Solves a dense square system by Gaussian elimination; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimum of `c·x` over all vertices of `{A x >= b, x >= 0}`, by trying
/// every choice of `n` tight hyperplanes.
fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let n = c.len();
    let m = a.len();
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    let total = m + n;
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let mat: Vec<Vec<f64>> = pick.iter().map(|&k| planes[k].0.clone()).collect();
        let rhs: Vec<f64> = pick.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(mat, rhs) {
            let feasible = planes
                .iter()
                .all(|(row, r)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() >= r - 1e-7);
            if feasible {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn random_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| if rng.gen_bool(0.7) { rng.gen_range(-1.0..3.0) } else { 0.0 }).collect())
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..6.0)).collect();
    (c, a, b)
}

fn as_problem(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpProblem {
    let rows = a
        .iter()
        .zip(b)
        .map(|(row, &r)| ge(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect(), r))
        .collect();
    nonneg(c.to_vec(), rows)
}

fn check_against_vertices(seed: u64, m: usize, n: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, a, b) = random_lp(&mut rng, m, n);
    let lp = as_problem(&c, &a, &b);
    let oracle = vertex_enumeration(&c, &a, &b);
    let out = solve_lp(&lp, &LpTolerances::default()).unwrap();
    match (&out, oracle) {
        (LpOutcome::Optimal(sol), Some(v)) => {
            assert!((sol.objective - v).abs() <= 1e-6 * (1.0 + v.abs()), "seed {seed}: {} vs {v}", sol.objective);
            assert_optimality_certificates(&lp, sol);
            true
        }
        (LpOutcome::Infeasible(ray), None) => {
            assert!(ray.is_valid(&lp, 1e-7), "seed {seed}: invalid ray {:?}", ray.check(&lp));
            false
        }
        (o, v) => panic!("seed {seed}: solver {} vs oracle {v:?}", o.status_name()),
    }
}

#[test]
fn small_random_lps_match_vertex_enumeration() {
    let mut feasible = 0;
    for seed in 0..200 {
        if check_against_vertices(seed, 6, 4) {
            feasible += 1;
        }
    }
    assert!(feasible > 20 && feasible < 200, "corpus should mix outcomes: {feasible}");
}

#[test]
fn ten_by_ten_lps_match_vertex_enumeration() {
    for seed in 1000..1004 {
        check_against_vertices(seed, 10, 10);
    }
}

#[test]
fn infeasible_rays_are_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut found = 0;
    for _ in 0..300 {
        let (c, a, b) = random_lp(&mut rng, 8, 3);
        let lp = as_problem(&c, &a, &b);
        if let LpOutcome::Infeasible(ray) = solve_lp(&lp, &LpTolerances::default()).unwrap() {
            found += 1;
            assert!(ray.rows.iter().all(|&u| u >= 0.0));
            assert!(ray.is_valid(&lp, 1e-7), "{:?}", ray.check(&lp));
        }
    }
    assert!(found > 10);
}
