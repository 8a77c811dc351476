//! Command implementations behind the `subfock` binary: builders, residual
//! tables, invariant suites and quantization reports, emitted as CSV or JSON
//! with a fixed exit-code contract (0 pass, 1 failed checks, 2 bad input,
//! 3 insufficient truncation headroom).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fock::{row_sum_residual, word_shift};
use crate::limits;
use crate::quantize::{self, parse_element, parse_word_expression, NormalOrderedElement};
use crate::report::{Cell, Format, Report, Summary, SummaryRow};
use crate::subproduct::SubproductSystem;
use crate::tensor::{c, operator_norm, words_of_length, CMat};

#[derive(Debug)]
pub struct CommandOutput {
    pub text: String,
    pub pass: bool,
}

fn ok(text: String) -> CommandOutput {
    CommandOutput { text, pass: true }
}

fn random_cmat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

/// `dims`: the raw `m,dim` table (no header block; this output is pinned).
pub fn cmd_dims(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.check(false)?;
    let system = cfg.build_system()?;
    match cfg.format {
        Format::Csv => {
            let mut text = String::new();
            for (m, d) in system.dims().iter().enumerate() {
                text.push_str(&format!("{m},{d}\n"));
            }
            Ok(ok(text))
        }
        Format::Json => {
            let mut report = Report::new("fiber dimensions", cfg.system_label(), &["m", "dim"]);
            for (m, d) in system.dims().iter().enumerate() {
                report.push(vec![Cell::Int(m as i64), Cell::Int(*d as i64)]);
            }
            Ok(ok(report.to_json()))
        }
    }
}

/// `build`: constructs the system and weights, prints a one-line summary per
/// level plus the validation verdict.
pub fn cmd_build(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.check(false)?;
    let system = cfg.build_system()?;
    let ws = cfg.build_weights(&system)?;
    let mut report = Report::new(
        "system construction",
        cfg.system_label(),
        &["m", "dim", "weight_trace", "invariance_residual"],
    );
    for m in 0..=system.m_max() {
        report.push(vec![
            Cell::Int(m as i64),
            Cell::Int(system.dim(m) as i64),
            Cell::Float(ws.trace(m)),
            Cell::Float(ws.invariance_residuals()[m]),
        ]);
    }
    let validation = system.validate();
    let tol = cfg.tol.unwrap_or(1e-10);
    let pass = validation.pass(tol);
    Ok(CommandOutput { text: report.render(cfg.format), pass })
}

/// `validate`: the subproduct-law residual table over all splits.
pub fn cmd_validate(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.check(false)?;
    let system = cfg.build_system()?;
    let tol = cfg.tol.unwrap_or(1e-10);
    let validation = system.validate();
    let mut report = Report::new(
        "subproduct law p_l (p_m x p_{l-m}) p_l = p_l",
        cfg.system_label(),
        &["m", "l", "residual", "pass"],
    );
    for &(m, l, residual) in &validation.rows {
        report.push(vec![
            Cell::Int(m as i64),
            Cell::Int(l as i64),
            Cell::Float(residual),
            Cell::Bool(residual <= tol),
        ]);
    }
    let pass = validation.pass(tol);
    Ok(CommandOutput { text: report.render(cfg.format), pass })
}

/// `invariants`: one row per identity of the workbench, with residual and
/// threshold; exit 0 iff every row passes.
pub fn cmd_invariants(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.check(true)?;
    let system = cfg.build_system()?;
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // subproduct law
    let validation = system.validate();
    push_row(&mut rows, "subproduct-law", validation.max_residual(), 1e-10, None);

    // weight invariance; a failure here aborts the weight-dependent rows
    let ws = match cfg.build_weights(&system) {
        Ok(ws) => {
            let worst = ws
                .invariance_residuals()
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            push_row(&mut rows, "weight-invariance", worst, 1e-8, None);
            ws
        }
        Err(Error::WeightInvariance { residual, tol, .. }) => {
            push_row(&mut rows, "weight-invariance", residual, tol, None);
            let summary = Summary {
                system: cfg.system_label(),
                seed: cfg.seed,
                pass: false,
                rows,
            };
            return Ok(CommandOutput { text: summary.render(cfg.format), pass: false });
        }
        Err(e) => return Err(e),
    };

    let m_top = system.m_max();
    // row-sum identity on the interior levels
    let mut worst_s = 0.0f64;
    let mut worst_r = 0.0f64;
    for l in 0..m_top {
        for m in 0..=l {
            let (s, r) = row_sum_residual(&system, m, l)?;
            worst_s = worst_s.max(s);
            worst_r = worst_r.max(r);
        }
    }
    push_row(&mut rows, "row-sum-left", worst_s, 1e-10, None);
    push_row(&mut rows, "row-sum-right", worst_r, 1e-10, None);

    // inductive map: cross-check and coherence
    let mut cross = 0.0f64;
    let mut coherence = 0.0f64;
    for m in 0..=m_top.min(2) {
        for _ in 0..3 {
            let a = random_cmat(&mut rng, system.dim(m), system.dim(m));
            for l in m..=m_top {
                let lhs = quantize::iota(&system, &a, m, l)?;
                let rhs = quantize::iota_compression(&system, &a, m, l)?;
                cross = cross.max(operator_norm(&(&lhs - &rhs)));
                for r in m..=l {
                    let step =
                        quantize::iota(&system, &quantize::iota(&system, &a, m, r)?, r, l)?;
                    coherence = coherence.max(operator_norm(&(&step - &lhs)));
                }
            }
        }
    }
    push_row(&mut rows, "iota-cross-check", cross, 1e-12, None);
    push_row(&mut rows, "iota-coherence", coherence, 1e-12, None);

    // isometries
    let mut gram_dev = 0.0f64;
    let mut range_dev = 0.0f64;
    for l in 0..=m_top {
        for m in 0..=l {
            let v = quantize::isometry_v(&system, &ws, m, l)?;
            let d_l = system.dim(l);
            gram_dev = gram_dev.max(operator_norm(
                &(v.matrix.adjoint() * &v.matrix - CMat::identity(d_l, d_l)),
            ));
            let target = quantize::final_projection(&system, &ws, m, l - m)?;
            range_dev =
                range_dev.max(operator_norm(&(&v.matrix * v.matrix.adjoint() - target)));
        }
    }
    push_row(&mut rows, "isometry-gram", gram_dev, 1e-10, None);
    push_row(&mut rows, "isometry-final-projection", range_dev, 1e-10, None);

    // adjointness and state compatibility
    let mut adjointness = 0.0f64;
    let mut phi_iota = 0.0f64;
    let mut phi_jmath = 0.0f64;
    let mut j_unital = 0.0f64;
    for l in 0..=m_top {
        let id_l = CMat::identity(system.dim(l), system.dim(l));
        for m in 0..=l {
            let a = random_cmat(&mut rng, system.dim(l), system.dim(l));
            let b = random_cmat(&mut rng, system.dim(m), system.dim(m));
            let lhs = ws.phi(l, &(&a * quantize::iota(&system, &b, m, l)?))?;
            let rhs = ws.phi(m, &(quantize::jmath(&system, &ws, &a, l, m)? * &b))?;
            adjointness = adjointness.max((lhs - rhs).norm());

            let state_push = ws.phi(l, &quantize::iota(&system, &b, m, l)?)?;
            phi_iota = phi_iota.max((state_push - ws.phi(m, &b)?).norm());
            let state_pull = ws.phi(m, &quantize::jmath(&system, &ws, &a, l, m)?)?;
            phi_jmath = phi_jmath.max((state_pull - ws.phi(l, &a)?).norm());

            let ju = quantize::jmath(&system, &ws, &id_l, l, m)?;
            j_unital = j_unital
                .max(operator_norm(&(ju - CMat::identity(system.dim(m), system.dim(m)))));
        }
    }
    push_row(&mut rows, "adjointness", adjointness, 1e-10, None);
    push_row(&mut rows, "state-compatibility-iota", phi_iota, 1e-10, None);
    push_row(&mut rows, "state-compatibility-jmath", phi_jmath, 1e-10, None);
    push_row(&mut rows, "jmath-unital", j_unital, 1e-12, None);

    // quasi-free values of the limit state on shift monomials
    let mut quasi_free = 0.0f64;
    for m in 1..=2.min(m_top) {
        let um = system.isometry(m);
        let pm = um * um.adjoint();
        for j in words_of_length(system.n(), m) {
            for k in words_of_length(system.n(), m) {
                let expect = pm[(k.index(system.n()), j.index(system.n()))]
                    * c(ws.word_weight(&k) / ws.trace(m), 0.0);
                for l in m..=m_top {
                    let block = word_shift(&system, &j, l - m)?
                        * word_shift(&system, &k, l - m)?.adjoint();
                    quasi_free = quasi_free.max((ws.phi(l, &block)? - expect).norm());
                }
            }
        }
    }
    push_row(&mut rows, "quasi-free-values", quasi_free, 1e-10, None);

    // Markov fixed points of quantized monomials
    let mut markov = 0.0f64;
    for a in 1..=system.n() as u8 {
        for b in 1..=system.n() as u8 {
            let f = NormalOrderedElement::monomial(
                system.n(),
                crate::tensor::Word::new(vec![a], system.n())?,
                crate::tensor::Word::new(vec![b], system.n())?,
            )?;
            let x = limits::quantization_sequence(&system, &ws, &f, 0)?;
            let moved = limits::markov_apply(&system, &ws, &x)?;
            for m in moved.levels() {
                markov = markov.max(operator_norm(
                    &(moved.block(m).unwrap() - x.block(m).unwrap()),
                ));
            }
        }
    }
    push_row(&mut rows, "markov-fixed-points", markov, 1e-10, None);

    // covariant symbol blocks against the inductive images
    let mut covariant = 0.0f64;
    let a = random_cmat(&mut rng, system.dim(1), system.dim(1));
    let symb = quantize::covariant_symbol(&system, &a, 1)?;
    for l in 1..=m_top {
        covariant = covariant.max(operator_norm(
            &(symb.block(l).unwrap() - quantize::iota(&system, &a, 1, l)?),
        ));
    }
    push_row(&mut rows, "covariant-blocks", covariant, 1e-10, None);

    // asymptotic multiplicativity: reported, flagged exact when it vanishes
    let b = random_cmat(&mut rng, system.dim(1), system.dim(1));
    let gap = limits::asymptotic_mult_gap(&system, &a, &b, 1, m_top - 1, m_top)?;
    rows.push(SummaryRow {
        identity: "asymptotic-mult-gap".into(),
        residual: gap,
        threshold: f64::INFINITY,
        pass: true,
        note: Some(if gap <= 1e-14 { "exact".into() } else { "report".into() }),
    });

    let pass = rows.iter().all(|r| r.pass);
    let summary = Summary { system: cfg.system_label(), seed: cfg.seed, pass, rows };
    Ok(CommandOutput { text: summary.render(cfg.format), pass })
}

fn push_row(rows: &mut Vec<SummaryRow>, identity: &str, residual: f64, threshold: f64, note: Option<String>) {
    rows.push(SummaryRow {
        identity: identity.into(),
        residual,
        threshold,
        pass: residual <= threshold,
        note,
    });
}

fn parse_cfg_element(text: &str, system: &SubproductSystem) -> Result<NormalOrderedElement> {
    parse_element(text, system.n())
}

/// `berezin`: difference norms of the Berezin transform per level.
pub fn cmd_berezin(cfg: &RunConfig, f_text: &str) -> Result<CommandOutput> {
    cfg.check(true)?;
    let system = cfg.build_system()?;
    let ws = cfg.build_weights(&system)?;
    let f = parse_cfg_element(f_text, &system)?;
    let max_deg = f.max_word_len();
    if system.m_max() < 2 + max_deg {
        return Err(Error::Headroom { needed: 2 + max_deg, have: system.m_max() });
    }
    let top_m = (system.m_max() - max_deg) / 2;
    let mut report = Report::new(
        format!("Berezin transform difference |cov(breve(f)) - f| for f = {}", f.print()),
        cfg.system_label(),
        &["m", "value"],
    );
    for m in 1..=top_m {
        let bt = quantize::berezin_transform(&system, &ws, &f, m)?;
        // limsup proxy over the trailing window of the difference profile
        let window = limits::DEFAULT_NORM_WINDOW.min(bt.diff_norms.len());
        let value = bt.diff_norms[bt.diff_norms.len() - window..]
            .iter()
            .map(|&(_, v)| v)
            .fold(0.0, f64::max);
        report.push(vec![Cell::Int(m as i64), Cell::Float(value)]);
    }
    Ok(ok(report.render(cfg.format)))
}

/// `arveson`: commutator decay columns; the `[S_i,S_j]` column must vanish
/// on commutative systems.
pub fn cmd_arveson(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.check(true)?;
    let system = cfg.build_system()?;
    let report_data = limits::arveson_report(&system)?;
    let mut report = Report::new(
        if report_data.applies {
            "commutator decay [S_i,S_j] and [S_i,S_j*] per level"
        } else {
            "commutator decay per level (system not commutative; conjecture does not apply)"
        },
        cfg.system_label(),
        &["m", "shift_commutator", "cross_commutator"],
    );
    let mut pass = true;
    for row in &report_data.rows {
        if report_data.applies && row.shift_commutator > 1e-12 {
            pass = false;
        }
        report.push(vec![
            Cell::Int(row.m as i64),
            Cell::Float(row.shift_commutator),
            Cell::Float(row.cross_commutator),
        ]);
    }
    Ok(CommandOutput { text: report.render(cfg.format), pass })
}

/// `strict`: Rieffel / von Neumann / Dirac residual columns.
pub fn cmd_strict(cfg: &RunConfig, f_text: &str, g_text: &str) -> Result<CommandOutput> {
    cfg.check(true)?;
    let system = cfg.build_system()?;
    let ws = cfg.build_weights(&system)?;
    let f = parse_cfg_element(f_text, &system)?;
    let g = parse_cfg_element(g_text, &system)?;
    let budget = f.max_word_len() + g.max_word_len();
    if system.m_max() < budget + 2 {
        return Err(Error::Headroom { needed: budget + 2, have: system.m_max() });
    }
    let top_m = (system.m_max() - budget) / 2;
    let rows = limits::strict_quantization_report(&system, &ws, &f, &g, 1..=top_m.max(1))?;
    let mut report = Report::new(
        format!(
            "strict quantization residuals for f = {}, g = {}",
            f.print(),
            g.print()
        ),
        cfg.system_label(),
        &["m", "rieffel_norm", "von_neumann_gap", "dirac_profile"],
    );
    for row in rows {
        report.push(vec![
            Cell::Int(row.m as i64),
            Cell::Float(row.rieffel),
            Cell::Float(row.von_neumann_gap),
            Cell::Float(row.dirac),
        ]);
    }
    Ok(ok(report.render(cfg.format)))
}

/// `markov`: fixed-point residuals of the quantized element under one Markov
/// step; the quantization sequence must be fixed to 1e-10. Accepts products
/// of `Z<k>`/`Zd<k>` in any order.
pub fn cmd_markov(cfg: &RunConfig, x_text: &str) -> Result<CommandOutput> {
    cfg.check(true)?;
    let system = cfg.build_system()?;
    let ws = cfg.build_weights(&system)?;
    let f = parse_word_expression(x_text, system.n())?;
    if f.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: f.degree() });
    }
    let rep = f.rep(&system)?;
    let x = limits::quantization_sequence_of_rep(&system, &ws, &rep, 0)?;
    let moved = limits::markov_apply(&system, &ws, &x)?;
    let mut report = Report::new(
        format!("Markov fixed point residual for breve({x_text})"),
        cfg.system_label(),
        &["m", "residual"],
    );
    let mut pass = true;
    for m in moved.levels() {
        let residual = operator_norm(&(moved.block(m).unwrap() - x.block(m).unwrap()));
        if residual > 1e-10 {
            pass = false;
        }
        report.push(vec![Cell::Int(m as i64), Cell::Float(residual)]);
    }
    Ok(CommandOutput { text: report.render(cfg.format), pass })
}

/// `qsphere`: the weighted sphere-relation residual per level.
pub fn cmd_qsphere(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.check(true)?;
    let system = cfg.build_system()?;
    let ws = cfg.build_weights(&system)?;
    let mut report = Report::new(
        "weighted sphere relation sum_r q_r^{-1} S_r^* S_r = q_1^{-1}",
        cfg.system_label(),
        &["m", "residual"],
    );
    for m in 0..system.m_max() {
        report.push(vec![
            Cell::Int(m as i64),
            Cell::Float(limits::qsphere_residual(&system, &ws, m)?),
        ]);
    }
    Ok(ok(report.render(cfg.format)))
}

/// `limit-state`: per-level state values of the representative of an
/// element, with the eventual-constancy flag.
pub fn cmd_limit_state(cfg: &RunConfig, x_text: &str) -> Result<CommandOutput> {
    cfg.check(true)?;
    let system = cfg.build_system()?;
    let ws = cfg.build_weights(&system)?;
    let f = parse_word_expression(x_text, system.n())?;
    if f.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: f.degree() });
    }
    let rep = f.rep(&system)?;
    let state = quantize::limit_state(&ws, &rep)?;
    let mut report = Report::new(
        format!(
            "limit state profile for {x_text} ({})",
            if state.exact { "exact" } else { "estimated" }
        ),
        cfg.system_label(),
        &["m", "value_re", "value_im"],
    );
    for (m, v) in &state.values {
        report.push(vec![Cell::Int(*m as i64), Cell::Float(v.re), Cell::Float(v.im)]);
    }
    Ok(ok(report.render(cfg.format)))
}
