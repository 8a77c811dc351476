//! Two-route checks: the tensor-compression production path against the
//! closed-form weighted-shift oracle for the symmetric two-letter system.
//!
//! The production multiset basis is ordered lexicographically (index counts
//! occurrences of the second letter), the oracle basis counts the first
//! letter, so matrices agree after conjugation by the index reversal.

mod common;

use std::sync::Arc;

type Terms = Vec<(Complex64, Vec<u8>, Vec<u8>)>;

use common as oracle;
use num_complex::Complex64;

use subfock::fock::shift_block;
use subfock::quantize::{self, parse_element};
use subfock::subproduct::{Caps, SubproductSystem};
use subfock::tensor::{operator_norm, CMat};
use subfock::weights::WeightSystem;

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Conjugates an oracle block `H_m -> H_l` into production index order.
fn to_production(block: &oracle::Mat) -> CMat {
    let (rows, cols) = (block.nrows(), block.ncols());
    CMat::from_fn(rows, cols, |i, j| block[(rows - 1 - i, cols - 1 - j)])
}

fn sym(m_max: usize) -> Arc<SubproductSystem> {
    Arc::new(SubproductSystem::build_symmetric(2, m_max, &Caps::default()).unwrap())
}

#[test]
fn shift_blocks_match_closed_form() {
    let sys = sym(6);
    for m in 0..6usize {
        for k in 1..=2u8 {
            let production = shift_block(&sys, k, m).unwrap();
            let reference = to_production(&oracle::sym2_shift(k, m));
            let dev = operator_norm(&(production - reference));
            assert!(dev <= 1e-13, "S_{k} at m={m}: {dev:.3e}");
        }
    }
}

#[test]
fn iota_matches_closed_form() {
    let sys = sym(6);
    for m in 0..=2usize {
        let d = m + 1;
        // a basis of matrix units is enough by linearity
        for r in 0..d {
            for cidx in 0..d {
                let mut unit = CMat::zeros(d, d);
                unit[(r, cidx)] = cr(1.0);
                let mut unit_oracle = oracle::Mat::zeros(d, d);
                unit_oracle[(d - 1 - r, d - 1 - cidx)] = cr(1.0);
                for l in m..=5usize {
                    let production = quantize::iota(&sys, &unit, m, l).unwrap();
                    let reference = to_production(&oracle::sym2_iota(&unit_oracle, m, l));
                    let dev = operator_norm(&(production - reference));
                    assert!(dev <= 1e-12, "iota unit ({r},{cidx}) m={m} l={l}: {dev:.3e}");
                }
            }
        }
    }
}

#[test]
fn jmath_matches_closed_form() {
    let sys = sym(6);
    let ws = WeightSystem::flat(&sys);
    for l in 1..=5usize {
        let d = l + 1;
        for r in 0..d {
            for cidx in 0..d {
                let mut unit = CMat::zeros(d, d);
                unit[(r, cidx)] = cr(1.0);
                let mut unit_oracle = oracle::Mat::zeros(d, d);
                unit_oracle[(d - 1 - r, d - 1 - cidx)] = cr(1.0);
                for m in 0..=l {
                    let production = quantize::jmath(&sys, &ws, &unit, l, m).unwrap();
                    let reference = to_production(&oracle::sym2_jmath(&unit_oracle, l, m));
                    let dev = operator_norm(&(production - reference));
                    assert!(dev <= 1e-12, "jmath unit ({r},{cidx}) l={l} m={m}: {dev:.3e}");
                }
            }
        }
    }
}

#[test]
fn contravariant_matches_closed_form() {
    let sys = sym(7);
    let ws = WeightSystem::flat(&sys);
    let cases: Vec<(&str, Terms)> = vec![
        ("Z1*Zd1", vec![(cr(1.0), vec![1], vec![1])]),
        ("Z1*Zd2", vec![(cr(1.0), vec![1], vec![2])]),
        (
            "Z1*Zd1 + 0.5*Z2*Zd1",
            vec![(cr(1.0), vec![1], vec![1]), (cr(0.5), vec![2], vec![1])],
        ),
    ];
    for (text, terms) in &cases {
        let f = parse_element(text, 2).unwrap();
        for m in 1..=3usize {
            let production = quantize::contravariant_symbol(&sys, &ws, &f, m).unwrap();
            let reference = to_production(&oracle::sym2_contravariant(
                &|l| oracle::sym2_rep_block(terms, l),
                m,
                7,
            ));
            let dev = operator_norm(&(production.matrix - reference));
            assert!(dev <= 1e-11, "{text} at m={m}: {dev:.3e}");
        }
    }
}

#[test]
fn berezin_profile_matches_closed_form() {
    // re-derives the frozen criterion-10 numbers straight from the oracle
    let sys = sym(11);
    let ws = WeightSystem::flat(&sys);
    let f = parse_element("Z1*Zd1", 2).unwrap();
    let terms = vec![(cr(1.0), vec![1u8], vec![1u8])];
    for m in 1..=5usize {
        let bt = quantize::berezin_transform(&sys, &ws, &f, m).unwrap();
        let window = 3.min(bt.diff_norms.len());
        let production = bt.diff_norms[bt.diff_norms.len() - window..]
            .iter()
            .map(|&(_, v)| v)
            .fold(0.0, f64::max);

        let breve = oracle::sym2_contravariant(&|l| oracle::sym2_rep_block(&terms, l), m, 11);
        let mut reference = 0.0f64;
        for l in 9..=11usize {
            let beta = oracle::sym2_iota(&breve, m, l);
            let diff = beta - oracle::sym2_rep_block(&terms, l);
            reference = reference.max(oracle::norm(&diff));
        }
        assert!(
            (production - reference).abs() <= 1e-11,
            "m={m}: production {production:.12e}, oracle {reference:.12e}"
        );
    }
}

#[test]
fn quasi_free_state_matches_closed_form() {
    let sys = sym(6);
    let ws = WeightSystem::flat(&sys);
    // phi_l of word monomial representatives agrees with the oracle trace
    for (j, k) in [(vec![1u8], vec![1u8]), (vec![1u8], vec![2u8]), (vec![2u8, 1], vec![1u8, 2])] {
        let terms = vec![(cr(1.0), j.clone(), k.clone())];
        let f = subfock::quantize::NormalOrderedElement::from_terms(
            2,
            vec![subfock::quantize::NoTerm {
                coeff: cr(1.0),
                creation: subfock::tensor::Word::new(j.clone(), 2).unwrap(),
                annihilation: subfock::tensor::Word::new(k.clone(), 2).unwrap(),
            }],
        )
        .unwrap();
        let rep = f.rep(&sys).unwrap();
        let state = quantize::limit_state(&ws, &rep).unwrap();
        for &(level, value) in &state.values {
            let reference = oracle::sym2_omega_at(&terms, level);
            assert!(
                (value - reference).norm() <= 1e-12,
                "level {level}: {value} vs {reference}"
            );
        }
    }
}
