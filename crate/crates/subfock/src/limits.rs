//! Inductive/projective-limit analytics on level sequences: truncation
//! proxies for asymptotic norms, asymptotic multiplicativity gaps, the
//! Markov operator and its Choi–Effros product, strict-quantization
//! residuals, commutator (essential normality) diagnostics and the weighted
//! sphere relations.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{shift_block, word_shift, GradedOperator};
use crate::quantize::{
    contravariant_of_rep, iota, jmath, NormalOrderedElement,
};
use crate::subproduct::SubproductSystem;
use crate::tensor::{numerical_rank, operator_norm, words_of_length, CMat};
use crate::weights::WeightSystem;

pub const DEFAULT_NORM_WINDOW: usize = 3;

/// Truncation proxy for `limsup_m ||X_m||`: the maximum block norm over the
/// top `window` available levels, together with the full level profile.
pub fn asymptotic_norm(x: &GradedOperator, window: usize) -> Result<(f64, Vec<(usize, f64)>)> {
    let profile = x.level_norms();
    if profile.is_empty() || window == 0 {
        return Err(Error::EmptyRange);
    }
    if window > profile.len() {
        return Err(Error::LevelOutOfRange { level: window, max: profile.len() });
    }
    let value = profile[profile.len() - window..]
        .iter()
        .map(|&(_, n)| n)
        .fold(0.0, f64::max);
    Ok((value, profile))
}

/// Whether a degree-0 sequence is constant under the inductive maps on its
/// range: `X_l = ι_{r,l}(X_r)` for all `lo <= r <= l <= hi`, to `tol`.
pub fn detect_iota_constant(
    system: &SubproductSystem,
    x: &GradedOperator,
    tol: f64,
) -> Result<bool> {
    if x.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: x.degree() });
    }
    let levels: Vec<usize> = x.levels().collect();
    for pair in levels.windows(2) {
        let (r, l) = (pair[0], pair[1]);
        let pushed = iota(system, x.block(r).unwrap(), r, l)?;
        if operator_norm(&(pushed - x.block(l).unwrap())) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether a degree-0 sequence is constant under the projective maps:
/// `X_m = ȷ_{l,m}(X_l)` on its range, to `tol`.
pub fn detect_jmath_constant(
    system: &SubproductSystem,
    ws: &WeightSystem,
    x: &GradedOperator,
    tol: f64,
) -> Result<bool> {
    if x.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: x.degree() });
    }
    let levels: Vec<usize> = x.levels().collect();
    for pair in levels.windows(2) {
        let (m, l) = (pair[0], pair[1]);
        let pulled = jmath(system, ws, x.block(l).unwrap(), l, m)?;
        if operator_norm(&(pulled - x.block(m).unwrap())) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The asymptotic-multiplicativity gap
/// `|| ι_{r,l}(ι_{m,r}(A) ι_{m,r}(B)) - ι_{m,l}(A) ι_{m,l}(B) ||`.
pub fn asymptotic_mult_gap(
    system: &SubproductSystem,
    a: &CMat,
    b: &CMat,
    m: usize,
    r: usize,
    l: usize,
) -> Result<f64> {
    if m > r || r > l {
        return Err(Error::LevelOutOfRange { level: r, max: l });
    }
    let at_r = iota(system, a, m, r)? * iota(system, b, m, r)?;
    let lhs = iota(system, &at_r, r, l)?;
    let rhs = iota(system, a, m, l)? * iota(system, b, m, l)?;
    Ok(operator_norm(&(lhs - rhs)))
}

/// One Markov step: `(Φ X)_m = ȷ_{m+1,m}(X_{m+1})`; the top level drops off.
pub fn markov_apply(
    system: &SubproductSystem,
    ws: &WeightSystem,
    x: &GradedOperator,
) -> Result<GradedOperator> {
    if x.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: x.degree() });
    }
    let mut blocks = std::collections::BTreeMap::new();
    for m in x.levels() {
        if let Some(next) = x.block(m + 1) {
            blocks.insert(m, jmath(system, ws, next, m + 1, m)?);
        }
    }
    if blocks.is_empty() {
        return Err(Error::EmptyRange);
    }
    GradedOperator::from_blocks(
        x.system().clone(),
        0,
        blocks,
        format!("Phi({})", x.label()),
    )
}

/// `Φ^r` applied to the pointwise product `XY`.
pub fn choi_effros_power(
    system: &SubproductSystem,
    ws: &WeightSystem,
    x: &GradedOperator,
    y: &GradedOperator,
    r: usize,
) -> Result<GradedOperator> {
    let mut current = x.compose(y)?;
    for _ in 0..r {
        current = markov_apply(system, ws, &current)?;
    }
    Ok(current)
}

/// Choi–Effros product diagnostics for the quantizations of two elements:
/// per iteration count `r`, the maximal level deviation of `Φ^r(XY)` from the
/// projective-limit product, i.e. from the quantization of `fg`.
#[derive(Clone, Debug)]
pub struct ChoiEffrosReport {
    /// `(r, max_m || Φ^r(XY)_m - ς̆^{(m)}(fg) ||)` over the shared range.
    pub residuals: Vec<(usize, f64)>,
}

pub fn choi_effros_report(
    system: &Arc<SubproductSystem>,
    ws: &WeightSystem,
    f: &NormalOrderedElement,
    g: &NormalOrderedElement,
    r_max: usize,
    m_min: usize,
) -> Result<ChoiEffrosReport> {
    if r_max + m_min + 1 > system.m_max() {
        return Err(Error::Headroom { needed: r_max + m_min + 1, have: system.m_max() });
    }
    let x = quantization_sequence(system, ws, f, m_min)?;
    let y = quantization_sequence(system, ws, g, m_min)?;
    let fg_rep = f.rep(system)?.compose(&g.rep(system)?)?;
    let reference = quantization_sequence_of_rep(system, ws, &fg_rep, m_min)?;
    let mut residuals = Vec::new();
    for r in 0..=r_max {
        let power = choi_effros_power(system, ws, &x, &y, r)?;
        let mut worst = 0.0f64;
        for m in power.levels() {
            if let Some(reference_block) = reference.block(m) {
                let dev = operator_norm(&(power.block(m).unwrap() - reference_block));
                worst = worst.max(dev);
            }
        }
        residuals.push((r, worst));
    }
    Ok(ChoiEffrosReport { residuals })
}

/// The sequence `(ς̆^{(m)}(f))_m` over `m_min..` as a graded operator; the
/// canonical anti-normally ordered (projective-limit) element attached to a
/// normally ordered `f`.
pub fn quantization_sequence(
    system: &Arc<SubproductSystem>,
    ws: &WeightSystem,
    f: &NormalOrderedElement,
    m_min: usize,
) -> Result<GradedOperator> {
    let rep = f.rep(system)?;
    quantization_sequence_of_rep(system, ws, &rep, m_min)
}

pub fn quantization_sequence_of_rep(
    system: &Arc<SubproductSystem>,
    ws: &WeightSystem,
    rep: &GradedOperator,
    m_min: usize,
) -> Result<GradedOperator> {
    let mut blocks = std::collections::BTreeMap::new();
    let top = rep.max_level().ok_or(Error::EmptyRange)?;
    for m in m_min..=top {
        if m as i64 + rep.degree() < 0 {
            continue;
        }
        blocks.insert(m, contravariant_of_rep(system, ws, rep, m)?.matrix);
    }
    if blocks.is_empty() {
        return Err(Error::EmptyRange);
    }
    GradedOperator::from_blocks(
        system.clone(),
        rep.degree(),
        blocks,
        format!("breve({})", rep.label()),
    )
}

/// Strict-quantization residual table: per level `m`, the Rieffel norm
/// profile `||ς̆^{(m)}(f)||`, the von Neumann multiplicativity gap
/// `||ς̆^{(m)}(fg) - ς̆^{(m)}(f) ς̆^{(m)}(g)||` and the Dirac/Poisson profile
/// `m ||[ς̆^{(m)}(f), ς̆^{(m)}(g)]||`.
#[derive(Clone, Debug)]
pub struct StrictQuantizationRow {
    pub m: usize,
    pub rieffel: f64,
    pub von_neumann_gap: f64,
    pub dirac: f64,
}

pub fn strict_quantization_report(
    system: &Arc<SubproductSystem>,
    ws: &WeightSystem,
    f: &NormalOrderedElement,
    g: &NormalOrderedElement,
    m_range: std::ops::RangeInclusive<usize>,
) -> Result<Vec<StrictQuantizationRow>> {
    let f_rep = f.rep(system)?;
    let g_rep = g.rep(system)?;
    let fg_rep = f_rep.compose(&g_rep)?;
    let mut rows = Vec::new();
    for m in m_range {
        let qf = contravariant_of_rep(system, ws, &f_rep, m)?.matrix;
        let qg = contravariant_of_rep(system, ws, &g_rep, m)?.matrix;
        let qfg = contravariant_of_rep(system, ws, &fg_rep, m)?.matrix;
        let rieffel = operator_norm(&qf);
        let von_neumann_gap = operator_norm(&(&qfg - &qf * &qg));
        let commutator = &qf * &qg - &qg * &qf;
        let dirac = m as f64 * operator_norm(&commutator);
        rows.push(StrictQuantizationRow { m, rieffel, von_neumann_gap, dirac });
    }
    Ok(rows)
}

/// Commutator diagnostics per level: `max_{i<j} ||[S_i,S_j]|_{H_m}||`
/// (exactly zero on commutative systems) and `max_{i,j} ||[S_i,S_j^*]|_{H_m}||`
/// (the essential-normality decay profile).
#[derive(Clone, Debug)]
pub struct ArvesonRow {
    pub m: usize,
    pub shift_commutator: f64,
    pub cross_commutator: f64,
}

#[derive(Clone, Debug)]
pub struct ArvesonReport {
    pub rows: Vec<ArvesonRow>,
    /// False when the system is not commutative; the table is still produced
    /// but the commutativity conclusion does not apply.
    pub applies: bool,
}

pub fn arveson_report(system: &SubproductSystem) -> Result<ArvesonReport> {
    let n = system.n() as u8;
    let m_top = match system.m_max() {
        0 | 1 => return Err(Error::Headroom { needed: 2, have: system.m_max() }),
        m => m - 2,
    };
    let mut rows = Vec::new();
    for m in 0..=m_top {
        let mut shift_commutator = 0.0f64;
        let mut cross_commutator = 0.0f64;
        for i in 1..=n {
            let si_m = shift_block(system, i, m)?;
            let si_m1 = shift_block(system, i, m + 1)?;
            for j in 1..=n {
                let sj_m = shift_block(system, j, m)?;
                let sj_m1 = shift_block(system, j, m + 1)?;
                if i < j {
                    let comm = &si_m1 * &sj_m - &sj_m1 * &si_m;
                    shift_commutator = shift_commutator.max(operator_norm(&comm));
                }
                // [S_i, S_j^*]|_{H_m}; at the vacuum S_j^* kills the level
                // and only the second term survives
                let cross = if m == 0 {
                    (sj_m.adjoint() * &si_m).scale(-1.0)
                } else {
                    let si_down = shift_block(system, i, m - 1)?;
                    let sj_down = shift_block(system, j, m - 1)?;
                    &si_down * sj_down.adjoint() - sj_m.adjoint() * &si_m
                };
                cross_commutator = cross_commutator.max(operator_norm(&cross));
            }
        }
        rows.push(ArvesonRow { m, shift_commutator, cross_commutator });
    }
    Ok(ArvesonReport { rows, applies: system.is_commutative() })
}

/// Residual of the weighted sphere relation at level `m`:
/// `|| Σ_r q_r^{-1} S_r^* S_r |_{H_m} - q_1^{-1} ||`.
pub fn qsphere_residual(
    system: &SubproductSystem,
    ws: &WeightSystem,
    m: usize,
) -> Result<f64> {
    system.check_level(m + 1)?;
    let d = system.dim(m);
    let mut acc = CMat::identity(d, d) * Complex64::new(-1.0 / ws.q()[0], 0.0);
    for r in 1..=system.n() as u8 {
        let s = shift_block(system, r, m)?;
        acc += (s.adjoint() * &s) * Complex64::new(1.0 / ws.q()[r as usize - 1], 0.0);
    }
    Ok(operator_norm(&acc))
}

/// Numerical rank of `span{S_j S_k^* |_{H_m} : |j| = |k| <= m}` inside
/// `B(H_m)`, against the full dimension `d_m^2`. Equality certifies that
/// degree-`m` compressions are normally ordered combinations.
pub fn normal_order_span_report(system: &SubproductSystem, m: usize) -> Result<(usize, usize)> {
    system.check_level(m)?;
    let d = system.dim(m);
    if d == 0 {
        return Ok((0, 0));
    }
    let mut columns = Vec::new();
    for p in 0..=m {
        for j in words_of_length(system.n(), p) {
            let up = word_shift(system, &j, m - p)?;
            for k in words_of_length(system.n(), p) {
                let down = word_shift(system, &k, m - p)?;
                let op = &up * down.adjoint();
                let mut col = nalgebra::DVector::zeros(d * d);
                for c_ in 0..d {
                    for r_ in 0..d {
                        col[c_ * d + r_] = op[(r_, c_)];
                    }
                }
                columns.push(col);
            }
        }
    }
    let mat = CMat::from_columns(&columns);
    Ok((numerical_rank(&mat, 1e-10), d * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::parse_element;
    use crate::subproduct::{named_system, Caps, NamedSystem, SubproductSystem};
    use crate::tensor::c;
    use rand::Rng;
    use rand::SeedableRng;

    fn sym2(m_max: usize) -> Arc<SubproductSystem> {
        Arc::new(SubproductSystem::build_symmetric(2, m_max, &Caps::default()).unwrap())
    }

    fn full2(m_max: usize) -> Arc<SubproductSystem> {
        Arc::new(SubproductSystem::build_full(2, m_max, &Caps::default()).unwrap())
    }

    fn qplane(q: f64, m_max: usize) -> Arc<SubproductSystem> {
        Arc::new(
            named_system(&NamedSystem::QuantumPlane { q }, 2, m_max, &Caps::default()).unwrap(),
        )
    }

    #[test]
    fn asymptotic_norm_examples() {
        let sys = sym2(5);
        let id = GradedOperator::identity(sys.clone(), 0, 5).unwrap();
        let (norm, profile) = asymptotic_norm(&id, 3).unwrap();
        assert!((norm - 1.0).abs() < 1e-14);
        assert_eq!(profile.len(), 6);

        // compact (finitely supported) sequences have asymptotic norm 0
        let vac = GradedOperator::vacuum_projection(sys.clone(), 5).unwrap();
        let (norm, _) = asymptotic_norm(&vac, 3).unwrap();
        assert!(norm <= 1e-15);

        assert!(asymptotic_norm(&id, 0).is_err());
        assert!(asymptotic_norm(&id, 7).is_err());
    }

    #[test]
    fn asymptotic_norm_of_covariant_is_constant_profile() {
        let sys = sym2(5);
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = c(1.0, 0.0);
        let symb = crate::quantize::covariant_symbol(&sys, &a, 1).unwrap();
        let (_, profile) = asymptotic_norm(&symb, 3).unwrap();
        // ι-constant sequence of a positive rank-one matrix: norms stay 1
        for (_, n) in profile {
            assert!((n - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn mult_gap_vanishes_on_full_and_for_identity() {
        let full = full2(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let a = CMat::from_fn(2, 2, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let b = CMat::from_fn(2, 2, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        assert!(asymptotic_mult_gap(&full, &a, &b, 1, 2, 4).unwrap() <= 1e-13);

        let sys = sym2(4);
        let id = CMat::identity(2, 2);
        let x = CMat::from_fn(2, 2, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        assert!(asymptotic_mult_gap(&sys, &id, &x, 1, 2, 4).unwrap() <= 1e-13);
        assert!(asymptotic_mult_gap(&sys, &x, &id, 1, 2, 4).unwrap() <= 1e-13);
    }

    #[test]
    fn mult_gap_profile_reported_on_symmetric() {
        let sys = sym2(5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let a = CMat::from_fn(2, 2, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let b = CMat::from_fn(2, 2, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let early = asymptotic_mult_gap(&sys, &a, &b, 1, 2, 3).unwrap();
        let late = asymptotic_mult_gap(&sys, &a, &b, 1, 4, 5).unwrap();
        // decrease is expected on this range; reported, not a theorem
        assert!(late < early, "gap profile: early {early:.3e}, late {late:.3e}");
    }

    #[test]
    fn markov_is_unital_and_positive() {
        let sys = qplane(0.5, 5);
        let ws = WeightSystem::build(&sys, &[2.0, 0.5], 1e-8).unwrap();
        let id = GradedOperator::identity(sys.clone(), 0, 5).unwrap();
        let out = markov_apply(&sys, &ws, &id).unwrap();
        for m in out.levels() {
            let d = sys.dim(m);
            assert!(operator_norm(&(out.block(m).unwrap() - CMat::identity(d, d))) <= 1e-12);
        }

        // positivity: Φ(X^†X) has nonnegative spectrum
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(47);
        let mut blocks = std::collections::BTreeMap::new();
        for m in 0..=5usize {
            let d = sys.dim(m);
            let x = CMat::from_fn(d, d, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            blocks.insert(m, x.adjoint() * x);
        }
        let pos = GradedOperator::from_blocks(sys.clone(), 0, blocks, "X*X").unwrap();
        let out = markov_apply(&sys, &ws, &pos).unwrap();
        for m in out.levels() {
            let block = out.block(m).unwrap();
            let lambda_min = block
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(lambda_min >= -1e-10, "m={m} lambda_min={lambda_min}");
        }
    }

    #[test]
    fn markov_fixes_quantization_sequences() {
        for (sys, q) in [
            (sym2(6), vec![1.0, 1.0]),
            (qplane(0.5, 6), vec![2.0, 0.5]),
            (qplane(0.5, 6), vec![0.5, 2.0]),
        ] {
            let ws = WeightSystem::build(&sys, &q, 1e-8).unwrap();
            let f = parse_element("Z1*Zd1", 2).unwrap();
            let x = quantization_sequence(&sys, &ws, &f, 0).unwrap();
            let fixed = markov_apply(&sys, &ws, &x).unwrap();
            for m in fixed.levels() {
                let dev = operator_norm(&(fixed.block(m).unwrap() - x.block(m).unwrap()));
                assert!(dev <= 1e-10, "{:?} q={q:?} m={m}: {dev:.3e}", sys.provenance());
            }
        }
    }

    #[test]
    fn anti_normal_monomials_are_fixed_on_the_full_system() {
        // S_1^* S_1 as a raw sequence: Φ-fixed when Tr(Q_m) is geometric,
        // which holds on the product system
        let sys = full2(5);
        let ws = WeightSystem::flat(&sys);
        let s1 = crate::fock::shift_operator(&sys, 1).unwrap();
        let x = s1.adjoint().compose(&s1).unwrap();
        let out = markov_apply(&sys, &ws, &x).unwrap();
        for m in out.levels() {
            let dev = operator_norm(&(out.block(m).unwrap() - x.block(m).unwrap()));
            assert!(dev <= 1e-12, "m={m}");
        }
    }

    #[test]
    fn normally_ordered_sequences_are_not_markov_fixed() {
        // ι-constant is not ȷ-constant: the representative of Z1 Zd1 on the
        // quantum plane moves under Φ by a visible amount
        let sys = qplane(0.5, 5);
        let ws = WeightSystem::build(&sys, &[2.0, 0.5], 1e-8).unwrap();
        let f = parse_element("Z1*Zd1", 2).unwrap();
        let rep = f.rep(&sys).unwrap().restrict(1, 5);
        assert!(detect_iota_constant(&sys, &rep, 1e-10).unwrap());
        let moved = markov_apply(&sys, &ws, &rep).unwrap();
        let mut gap = 0.0f64;
        for m in moved.levels() {
            gap = gap.max(operator_norm(&(moved.block(m).unwrap() - rep.block(m).unwrap())));
        }
        assert!(gap > 0.01, "gap {gap:.3e}");
        assert!(!detect_jmath_constant(&sys, &ws, &rep, 1e-10).unwrap());
    }

    #[test]
    fn choi_effros_on_identity_and_fixed_points() {
        let sys = sym2(6);
        let ws = WeightSystem::flat(&sys);
        let one = NormalOrderedElement::one(2);
        let id = GradedOperator::identity(sys.clone(), 0, 6).unwrap();
        for r in 0..=2usize {
            let out = choi_effros_power(&sys, &ws, &id, &id, r).unwrap();
            for m in out.levels() {
                let d = sys.dim(m);
                assert!(operator_norm(&(out.block(m).unwrap() - CMat::identity(d, d))) <= 1e-12);
            }
        }
        // X fixed, Y = 1 -> X on the shared range
        let f = parse_element("Z1*Zd1", 2).unwrap();
        let x = quantization_sequence(&sys, &ws, &f, 0).unwrap();
        let y = quantization_sequence(&sys, &ws, &one, 0).unwrap();
        let out = choi_effros_power(&sys, &ws, &x, &y, 2).unwrap();
        for m in out.levels() {
            assert!(operator_norm(&(out.block(m).unwrap() - x.block(m).unwrap())) <= 1e-10);
        }
    }

    #[test]
    fn choi_effros_residual_decreases() {
        let sys = sym2(7);
        let ws = WeightSystem::flat(&sys);
        let f = parse_element("Z1*Zd1", 2).unwrap();
        let g = parse_element("Z2*Zd2", 2).unwrap();
        let report = choi_effros_report(&sys, &ws, &f, &g, 4, 1).unwrap();
        assert_eq!(report.residuals.len(), 5);
        let first = report.residuals.first().unwrap().1;
        let last = report.residuals.last().unwrap().1;
        assert!(last < first, "profile {:?}", report.residuals);
    }

    #[test]
    fn choi_effros_headroom_enforced() {
        let sys = sym2(4);
        let ws = WeightSystem::flat(&sys);
        let f = parse_element("Z1*Zd1", 2).unwrap();
        assert!(matches!(
            choi_effros_report(&sys, &ws, &f, &f, 4, 1),
            Err(Error::Headroom { .. })
        ));
    }

    #[test]
    fn strict_quantization_columns() {
        let sys = sym2(6);
        let ws = WeightSystem::flat(&sys);
        let f = parse_element("Z1*Zd1", 2).unwrap();
        let one = NormalOrderedElement::one(2);

        // f = 1 pairs give an all-zero von Neumann column
        let rows = strict_quantization_report(&sys, &ws, &one, &one, 0..=2).unwrap();
        for row in &rows {
            assert!(row.von_neumann_gap <= 1e-12);
            assert!(row.dirac <= 1e-12);
        }

        // Rieffel profile for Z1 Zd1 climbs monotonically toward the
        // asymptotic norm of the representative (the classical Toeplitz
        // norms approach the symbol norm from below)
        let rows = strict_quantization_report(&sys, &ws, &f, &f, 1..=2).unwrap();
        let rep = f.rep(&sys).unwrap().restrict(1, 6);
        let (limit, _) = asymptotic_norm(&rep, 3).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].rieffel >= pair[0].rieffel - 1e-12);
        }
        for row in &rows {
            assert!(row.rieffel <= limit + 1e-12);
        }
    }

    #[test]
    fn arveson_symmetric_columns() {
        let sys = sym2(7);
        let report = arveson_report(&sys).unwrap();
        assert!(report.applies);
        for row in &report.rows {
            assert!(row.shift_commutator <= 1e-12, "m={}", row.m);
        }
        // cross commutator follows the d-shift decay 1/(m+1)
        for row in &report.rows {
            assert!(
                (row.cross_commutator - 1.0 / (row.m as f64 + 1.0)).abs() <= 1e-10,
                "m={} got {}",
                row.m,
                row.cross_commutator
            );
        }
    }

    #[test]
    fn arveson_commutative_ideal_and_noncommutative_flag() {
        let g = crate::poly::parse_poly("z1^2", 2, crate::poly::PolyMode::Commutative).unwrap();
        let sys = Arc::new(
            SubproductSystem::build_from_ideal(&[g], 2, 6, &Caps::default()).unwrap(),
        );
        let report = arveson_report(&sys).unwrap();
        assert!(report.applies);
        for row in &report.rows {
            assert!(row.shift_commutator <= 1e-12);
        }
        let first = report.rows.first().unwrap().cross_commutator;
        let last = report.rows.last().unwrap().cross_commutator;
        assert!(last < first);

        let qp = qplane(0.5, 4);
        let report = arveson_report(&qp).unwrap();
        assert!(!report.applies);
        assert!(report.rows.iter().any(|r| r.shift_commutator > 0.01));
    }

    #[test]
    fn qsphere_residuals() {
        // full n=1: S^*S = 1 exactly
        let sys = Arc::new(SubproductSystem::build_full(1, 3, &Caps::default()).unwrap());
        let ws = WeightSystem::flat(&sys);
        assert!(qsphere_residual(&sys, &ws, 1).unwrap() <= 1e-14);

        // symmetric n=2 flat: residual decays in m
        let sym = sym2(7);
        let wsym = WeightSystem::flat(&sym);
        let profile: Vec<f64> = (0..=6)
            .map(|m| qsphere_residual(&sym, &wsym, m).unwrap())
            .collect();
        assert!(profile.last().unwrap() < &profile[1]);

        // quantum plane with its modular weights: decay profile emitted
        let qp = qplane(0.5, 7);
        let wq = WeightSystem::build(&qp, &[2.0, 0.5], 1e-8).unwrap();
        let profile: Vec<f64> = (1..=6)
            .map(|m| qsphere_residual(&qp, &wq, m).unwrap())
            .collect();
        assert!(profile.last().unwrap() < profile.first().unwrap(), "{profile:?}");
    }

    #[test]
    fn normal_order_span_ranks() {
        let full = full2(3);
        assert_eq!(normal_order_span_report(&full, 1).unwrap(), (4, 4));
        let sym = sym2(3);
        assert_eq!(normal_order_span_report(&sym, 1).unwrap(), (4, 4));
        assert_eq!(normal_order_span_report(&sym, 0).unwrap(), (1, 1));
    }
}
