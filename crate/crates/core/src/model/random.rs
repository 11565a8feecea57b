//! Seeded random MILPs in standard form, used for tests and benchmarks.
//!
//! Each continuous column is switched on by one integer column through a
//! capacity row `−x_k + cap · y_j >= 0`, demand rows mix both kinds, and a
//! cover row over the integers is added when there is more than one. Most
//! draws are feasible; some are not, on purpose.

use rand::Rng;

use super::{SparseMatrix, StandardMilp};

fn cents<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 100.0).round() / 100.0
}

pub fn random_milp<R: Rng>(rng: &mut R, n_int: usize, n_cont: usize) -> StandardMilp {
    let n_int = n_int.max(1);
    let c: Vec<f64> = (0..n_cont).map(|_| cents(rng, 0.5, 5.0)).collect();
    let d: Vec<f64> = (0..n_int).map(|_| cents(rng, 1.0, 10.0)).collect();
    let int_upper: Vec<i64> = (0..n_int).map(|_| if rng.gen_bool(0.7) { 1 } else { rng.gen_range(2..=3) }).collect();

    let mut a = Vec::new();
    let mut bm = Vec::new();
    let mut b = Vec::new();
    let mut row = 0usize;

    for k in 0..n_cont {
        let j = rng.gen_range(0..n_int);
        a.push((row, k, -1.0));
        bm.push((row, j, cents(rng, 2.0, 8.0)));
        b.push(0.0);
        row += 1;
    }
    let demands = 1 + n_cont / 3;
    for _ in 0..demands {
        for k in 0..n_cont {
            if rng.gen_bool(0.5) {
                a.push((row, k, cents(rng, 0.5, 2.0)));
            }
        }
        for j in 0..n_int {
            if rng.gen_bool(0.3) {
                bm.push((row, j, cents(rng, -1.0, 2.0)));
            }
        }
        b.push(cents(rng, 1.0, 6.0));
        row += 1;
    }
    if n_cont > 0 && rng.gen_bool(0.5) {
        let k = rng.gen_range(0..n_cont);
        a.push((row, k, -1.0));
        b.push(-cents(rng, 2.0, 6.0));
        row += 1;
    }
    if n_int > 1 {
        for j in 0..n_int {
            if rng.gen_bool(0.5) {
                bm.push((row, j, 1.0));
            }
        }
        bm.push((row, rng.gen_range(0..n_int), 1.0));
        b.push(1.0);
        row += 1;
    }
    StandardMilp::from_parts(
        c,
        d,
        SparseMatrix::from_triplets(row, n_cont, a),
        SparseMatrix::from_triplets(row, n_int, bm),
        b,
        int_upper,
    )
    .expect("generated dimensions are consistent")
}
