#![allow(dead_code)]

use dyndisc::gaussian::{symplectic, CovarianceMatrix};
use proptest::prelude::*;

/// Random valid state built as `S (⊕ ν_k I) S^T` from uniform draws in [0, 1).
/// `pure` fixes every symplectic eigenvalue at 1/2.
pub fn cm_from_draws(n: usize, draws: &[f64], pure: bool) -> CovarianceMatrix {
    let mut it = draws.iter().copied().cycle();
    let mut next = move || it.next().unwrap();
    let nus: Vec<f64> = (0..n).map(|_| if pure { 0.5 } else { 0.5 + 2.5 * next() }).collect();
    let mut s = nalgebra::DMatrix::identity(2 * n, 2 * n);
    for _ in 0..2 {
        for j in 0..n {
            s = symplectic::squeezer(n, j, 1.6 * next() - 0.8) * s;
            s = symplectic::rotation(n, j, 6.2 * next()) * s;
        }
        for j in 0..n {
            for k in (j + 1)..n {
                s = symplectic::beam_splitter(n, j, k, 3.1 * next()) * s;
            }
        }
    }
    CovarianceMatrix::thermal(&nus).unwrap().transform(&s).unwrap()
}

pub fn arb_cm(n: usize, pure: bool) -> impl Strategy<Value = CovarianceMatrix> {
    prop::collection::vec(0.0..1.0f64, 64).prop_map(move |d| cm_from_draws(n, &d, pure))
}

/// Two states with the same, random mode count in 1..=4.
pub fn arb_pair() -> impl Strategy<Value = (CovarianceMatrix, CovarianceMatrix)> {
    (1usize..=4).prop_flat_map(|n| (arb_cm(n, false), arb_cm(n, false)))
}
