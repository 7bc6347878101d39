//! The acceptance suite: eleven end-to-end checks of the closed forms
//! against exact arithmetic, dense oracles and sampling.
//!
//! Each criterion produces a list of checks. `Gate` checks decide the
//! criterion; `Reference` checks compare known-wrong printed fixtures and
//! are reported without gating; `Info` lines carry extra figures.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::io::Write;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Result};
use isotwirl_core::hamiltonians::{CbHamiltonian, ToricCode};
use isotwirl_core::linalg::{rat, to_f64};
use isotwirl_core::perm_algebra::{irrep_projector, ALL};
use isotwirl_core::probes::{compare_closed_forms, rel_diff, ProbeEngine, ProbeKind};
use isotwirl_core::spectral::{
    gde_averages, gde_printed_g3tilde, gde_printed_g4, gue_averages, linear_grid, log_grid, sff_explicit,
    FormFactors, Spectrum,
};
use isotwirl_core::twirl_engine::{xi_eigenvectors, Vec24, Weights, XiMatrix};
use isotwirl_core::weingarten::{
    compare_with_printed, printed_minus_character_formula, printed_plus_character_formula, printed_table,
    weingarten_by_characters, weingarten_by_inversion, weingarten_s2, GramKind,
};
use num_complex::Complex64 as C64;

use crate::oracle::{
    enumerate_clifford_n1, exact_second_moment, mc_form_factors, mc_second_moment, mc_twirl, q_trace_dense,
    toric_g3tilde_pauli, toric_spectrum_dense, CMat, SampledEnsemble, SpectralEnsemble, Stats,
};

/// Frequencies of the computational-basis model used throughout.
pub const CB_OMEGAS: [f64; 4] = [0.3711, 0.9137, 1.5329, 2.2903];
/// Default master seed for the sampling criteria.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Gate,
    Reference,
    Info,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub role: Role,
    pub pass: bool,
    pub label: String,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub budget: Duration,
    pub elapsed: Duration,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn within_budget(&self) -> bool {
        self.elapsed <= self.budget
    }

    pub fn pass(&self) -> bool {
        self.error.is_none()
            && self.within_budget()
            && self.checks.iter().filter(|c| c.role == Role::Gate).all(|c| c.pass)
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, role: Role, pass: bool, label: impl Into<String>, detail: impl Into<String>) {
        self.0.push(Check { role, pass, label: label.into(), detail: detail.into() });
    }

    fn gate(&mut self, pass: bool, label: impl Into<String>, detail: impl Into<String>) {
        self.push(Role::Gate, pass, label, detail);
    }

    fn reference(&mut self, pass: bool, label: impl Into<String>, detail: impl Into<String>) {
        self.push(Role::Reference, pass, label, detail);
    }

    fn info(&mut self, label: impl Into<String>, detail: impl Into<String>) {
        self.push(Role::Info, true, label, detail);
    }
}

/// Settings shared by the sampling criteria.
#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Config {
        Config { seed: DEFAULT_SEED }
    }
}

type Body = fn(&Config, &mut Checks) -> Result<()>;

const CRITERIA: [(u8, &str, u64, Body); 11] = [
    (1, "Weingarten tables: inversion vs characters vs printed", 1, c01_weingarten),
    (2, "Clifford 3-design: order-2 moment equals Haar", 60, c02_three_design),
    (3, "Doping transfer matrix eigenstructure", 1, c03_xi_eigen),
    (4, "Doped interpolation limits k=0 and k=10^6", 10, c04_doped_limits),
    (5, "Sampled twirls vs closed forms", 1800, c05_oracle_probes),
    (6, "Stabilizer q-vector vs dense Pauli sum", 300, c06_q_vector),
    (7, "Toric code form factors", 300, c07_toric),
    (8, "GDE averages vs sampled spectra", 300, c08_gde),
    (9, "GUE qualitative envelope", 600, c09_gue),
    (10, "Long-time scaling with d", 60, c10_scaling),
    (11, "Table-driven vs displayed closed forms", 60, c11_closed_forms),
];

pub fn criterion_ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.0).collect()
}

/// Run one criterion.
pub fn run_criterion(id: u8, cfg: &Config) -> Result<CriterionResult> {
    let &(id, title, budget, body) =
        CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| anyhow!("no criterion {id} (valid: 1–11)"))?;
    let start = Instant::now();
    let mut checks = Checks::default();
    let error = body(cfg, &mut checks).err().map(|e| format!("{e:#}"));
    Ok(CriterionResult {
        id,
        title,
        budget: Duration::from_secs(budget),
        elapsed: start.elapsed(),
        checks: checks.0,
        error,
    })
}

pub fn format_criterion(r: &CriterionResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "═══ C{:02}: {} ═══", r.id, r.title);
    for c in &r.checks {
        let tag = match (c.role, c.pass) {
            (Role::Gate, true) => "PASS",
            (Role::Gate, false) => "FAIL",
            (Role::Reference, true) => "pass (printed fixture)",
            (Role::Reference, false) => "FAIL (printed fixture, not gating)",
            (Role::Info, _) => "info",
        };
        let _ = writeln!(s, "  [{tag}] {}: {}", c.label, c.detail);
    }
    if let Some(e) = &r.error {
        let _ = writeln!(s, "  [FAIL] error: {e}");
    }
    let _ = writeln!(
        s,
        "  [{}] runtime {:.2} s (budget {} s)",
        if r.within_budget() { "PASS" } else { "FAIL" },
        r.elapsed.as_secs_f64(),
        r.budget.as_secs()
    );
    let _ = writeln!(s, "C{:02} RESULT: {}", r.id, if r.pass() { "PASS" } else { "FAIL" });
    s
}

pub fn format_summary(results: &[CriterionResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "═══ ACCEPTANCE SUMMARY ═══");
    for r in results {
        let _ = writeln!(s, "  C{:02} {}  {}", r.id, if r.pass() { "PASS" } else { "FAIL" }, r.title);
    }
    let passed = results.iter().filter(|r| r.pass()).count();
    let _ = writeln!(s, "{passed}/{} criteria PASS", results.len());
    s
}

/// Run the given criteria, streaming the report to `out`.
pub fn run_suite(ids: &[u8], cfg: &Config, out: &mut dyn Write) -> Result<Vec<CriterionResult>> {
    let mut results = Vec::new();
    for &id in ids {
        let r = run_criterion(id, cfg)?;
        out.write_all(format_criterion(&r).as_bytes())?;
        out.flush()?;
        results.push(r);
    }
    out.write_all(format_summary(&results).as_bytes())?;
    Ok(results)
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn cb(n: usize) -> Result<CbHamiltonian> {
    Ok(CbHamiltonian::new(CB_OMEGAS[..n].to_vec())?)
}

fn diag_v(s: &Spectrum, t: f64) -> CMat {
    let d = s.energies.len();
    CMat::from_fn(d, d, |i, j| if i == j { C64::from_polar(1.0, -s.energies[i] * t) } else { C64::new(0.0, 0.0) })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn z_score(closed: f64, s: &Stats) -> f64 {
    let diff = (closed - s.mean).abs();
    let se = s.stderr();
    if diff <= 1e-10 * closed.abs().max(1.0) {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff / se
    }
}

fn rat_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Fourth-order unitary Weingarten values by cycle type:
/// `[1⁴], [2 1²], [2²], [3 1], [4]`.
fn weingarten_reference(d: u64) -> [isotwirl_core::linalg::BigRational; 5] {
    let x = rat(d as i64);
    let x2 = &x * &x;
    let den = &x2 * (&x2 - rat(1)) * (&x2 - rat(4)) * (&x2 - rat(9));
    [
        (&x2 * &x2 - rat(8) * &x2 + rat(6)) / &den,
        -rat(1) / (&x * (&x2 - rat(1)) * (&x2 - rat(9))),
        (&x2 + rat(6)) / &den,
        (rat(2) * &x2 - rat(3)) / &den,
        rat(-5) / (&x * (&x2 - rat(1)) * (&x2 - rat(4)) * (&x2 - rat(9))),
    ]
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn c01_weingarten(_: &Config, ck: &mut Checks) -> Result<()> {
    for d in [8u64, 16, 32] {
        for kind in [GramKind::Plain, GramKind::QProjected, GramKind::QPerpProjected] {
            let inv = weingarten_by_inversion(kind, d)?;
            let chr = weingarten_by_characters(kind, d)?;
            let diff = (0..5).filter(|&c| inv.values[c] != chr.values[c]).count();
            ck.gate(
                diff == 0,
                format!("{} d={d}: inversion = characters", kind.name()),
                format!("{}/5 classes equal exactly, Gram rank {}", 5 - diff, inv.rank),
            );
            match kind {
                GramKind::Plain => {
                    let want = weingarten_reference(d);
                    let bad = (0..5).filter(|&c| inv.values[c] != want[c]).count();
                    ck.gate(
                        bad == 0,
                        format!("plain d={d}: cycle-type formulas"),
                        format!("{}/5 classes equal", 5 - bad),
                    );
                }
                _ => {
                    let cmp = compare_with_printed(&inv, printed_table(kind, d));
                    let bad: Vec<_> = cmp.iter().filter(|c| !c.matches()).collect();
                    let mut detail = format!("{}/5 classes equal", 5 - bad.len());
                    for b in &bad {
                        let printed = b.printed.as_ref().map(|p| p.to_string()).unwrap_or_else(|| "pole".into());
                        let _ = write!(detail, "; {} computed {} printed {}", b.class.name(), b.computed, printed);
                    }
                    ck.gate(bad.is_empty(), format!("{} d={d}: printed table", kind.name()), detail);
                    let formula = if kind == GramKind::QProjected {
                        Some(printed_plus_character_formula(d))
                    } else {
                        printed_minus_character_formula(d)
                    };
                    let eq = formula.as_ref().is_some_and(|f| *f == inv.values);
                    ck.reference(
                        eq,
                        format!("{} d={d}: printed character-sum formula", kind.name()),
                        match &formula {
                            Some(f) if !eq => format!("printed [{}] vs computed [{}]", rat_list(f), rat_list(&inv.values)),
                            Some(_) => "equal".into(),
                            None => "pole".into(),
                        },
                    );
                }
            }
        }
    }
    Ok(())
}

fn c02_three_design(cfg: &Config, ck: &mut Checks) -> Result<()> {
    for n in [1usize, 2] {
        let model = cb(n)?;
        let spec = model.spectrum();
        let t = 0.83;
        let v = diag_v(&spec, t);
        let d = v.nrows();
        let ws = weingarten_s2(d as u64)?.to_f64();
        let g2 = sff_explicit(&spec, t).g2;
        let (ci, cs) = (ws[0] * g2 + ws[1] * d as f64, ws[2] * g2 + ws[3] * d as f64);
        let dd = d * d;
        let swap = CMat::from_fn(dd, dd, |r, c| {
            let (a, b) = (c / d, c % d);
            if r == b * d + a {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let target = CMat::identity(dd, dd).scale(ci) + swap.scale(cs);
        if n == 1 {
            let group: Vec<CMat> = enumerate_clifford_n1().iter().map(|c| c.dense()).collect();
            let exact = exact_second_moment(&v, &group);
            let err = (exact - &target).iter().map(|z| z.norm()).fold(0.0, f64::max);
            ck.gate(err <= 1e-12, "N=1: average over all 24 Clifford elements", format!("max |Δ| = {err:.3e}"));
        } else {
            let samples = 100_000;
            let stats = mc_second_moment(&v, SampledEnsemble::Clifford, samples, cfg.seed ^ 0x02)?;
            let mut chi2 = 0.0;
            let mut dof = 0usize;
            let mut zmax: f64 = 0.0;
            let mut exact_bad = 0usize;
            for (k, (re, im)) in stats.iter().enumerate() {
                let want = target[(k / dd, k % dd)];
                for (s, w) in [(re, want.re), (im, want.im)] {
                    let se = s.stderr();
                    if se < 1e-13 {
                        if (s.mean - w).abs() > 1e-10 {
                            exact_bad += 1;
                        }
                        continue;
                    }
                    let z = (s.mean - w) / se;
                    chi2 += z * z;
                    dof += 1;
                    zmax = zmax.max(z.abs());
                }
            }
            let zagg = (chi2 - dof as f64) / (2.0 * dof as f64).sqrt();
            ck.gate(
                zagg.abs() <= 3.0 && exact_bad == 0,
                format!("N=2: {samples} sampled Clifford elements"),
                format!(
                    "χ² = {chi2:.1} over {dof} fluctuating entries (standardized {zagg:+.2}σ); \
                     {exact_bad} deterministic entries off"
                ),
            );
            ck.info("N=2: largest single-entry deviation", format!("{zmax:.2}σ of {dof} entries"));
        }
    }
    Ok(())
}

fn c03_xi_eigen(_: &Config, ck: &mut Checks) -> Result<()> {
    let theta = FRAC_PI_4;
    let proj = |l: usize| Vec24::from_iterator(irrep_projector(l).iter().map(to_f64));
    let align = |a: &Vec24, b: &Vec24| 1.0 - (a.dot(b) / (a.norm() * b.norm())).abs();
    let (pi_sign, pi_sym) = (proj(0), proj(4));
    let vecs = xi_eigenvectors();
    for d in [4u64, 16, 256] {
        let w = Weights::new(d)?;
        let xi = XiMatrix::new(&w, theta)?;
        let mut ev: Vec<C64> = xi.m.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re));
        let (xp, xm, x1) = XiMatrix::closed_form_eigenvalues(d, theta);
        let mut want = vec![xp, xm, x1, x1, x1, x1];
        want.extend([0.0; 18]);
        want.sort_by(|a, b| b.total_cmp(a));
        let err = ev.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let shown: Vec<String> = ev[..6].iter().map(|z| format!("{:.15}", z.re)).collect();
        ck.gate(
            err <= 1e-12,
            format!("d={d}: spectrum {{ξ₊, ξ₋, ξ₁×4, 0×18}}"),
            format!("max |Δ| = {err:.3e}; leading [{}] vs ξ₊={xp:.15} ξ₋={xm:.15} ξ₁={x1:.15}", shown.join(", ")),
        );
        let res = |v: &Vec24, x: f64| (xi.m * v - v * x).amax();
        let (rp, rm) = (res(&vecs[0], xp), res(&vecs[1], xm));
        ck.gate(
            rp <= 1e-12 && rm <= 1e-12,
            format!("d={d}: Ξ T₊ = ξ₊ T₊ and Ξ T₋ = ξ₋ T₋"),
            format!("residuals {rp:.3e}, {rm:.3e}"),
        );
        let (ap, am) = (align(&vecs[0], &pi_sign), align(&vecs[1], &pi_sym));
        ck.gate(
            ap <= 1e-12 && am <= 1e-12,
            format!("d={d}: T₊ ∥ Π_sign and T₋ ∥ Π_sym"),
            format!("1 − |cos| = {ap:.3e}, {am:.3e}"),
        );
        if w.minus.as_ref().is_some_and(|m| m.singular()) {
            ck.info(format!("d={d}"), "W⁻ Gram matrix is singular here; Ξ uses its pseudo-inverse");
        }
    }
    Ok(())
}

fn c04_doped_limits(_: &Config, ck: &mut Checks) -> Result<()> {
    let model = cb(4)?;
    let engine = ProbeEngine::new(16, Some(FRAC_PI_4))?;
    let grid = log_grid(0.01, 100.0, 50);
    let ffs: Vec<FormFactors> = grid.iter().map(|&t| model.product_form(t)).collect();
    for kind in ProbeKind::ALL {
        let (mut e0, mut e1): (f64, f64) = (0.0, 0.0);
        for ff in &ffs {
            e0 = e0.max(rel_diff(kind, engine.doped(kind, ff, 0)?, engine.clifford(kind, ff)?));
            e1 = e1.max(rel_diff(kind, engine.doped(kind, ff, 1_000_000)?, engine.haar(kind, ff)));
        }
        ck.gate(
            e0 <= 1e-9 && e1 <= 1e-9,
            format!("{}: k=0 → Clifford, k=10⁶ → Haar", kind.name()),
            format!("max rel {e0:.2e}, {e1:.2e}"),
        );
    }
    Ok(())
}

fn c05_oracle_probes(cfg: &Config, ck: &mut Checks) -> Result<()> {
    let grid = log_grid(0.1, 10.0, 6);
    let (mut total, mut inside) = (0usize, 0usize);
    for n in [2u32, 3] {
        let d = 1u64 << n;
        let model = cb(n as usize)?;
        let spec = model.spectrum();
        let engine = ProbeEngine::with_split(d, None, Some(1))?;
        for (ens, samples, salt) in
            [(SampledEnsemble::Clifford, 100_000usize, 0x51u64), (SampledEnsemble::Haar, 20_000, 0x52)]
        {
            let mc = mc_twirl(&spec, &grid, ens, &ProbeKind::ALL, 1, samples, cfg.seed ^ (salt << 8) ^ n as u64)?;
            let (mut cells, mut ok) = (0usize, 0usize);
            let mut worst = (0.0f64, String::new());
            for (ti, &t) in grid.iter().enumerate() {
                let ff = model.product_form(t);
                for (ki, &kind) in ProbeKind::ALL.iter().enumerate() {
                    let closed = match ens {
                        SampledEnsemble::Haar => engine.haar(kind, &ff),
                        _ => engine.clifford(kind, &ff)?,
                    };
                    let z = z_score(closed, &mc.cells[ti][ki]);
                    cells += 1;
                    if z <= 3.0 {
                        ok += 1;
                    }
                    if z > worst.0 {
                        worst = (z, format!("{} t={t:.3}", kind.name()));
                    }
                }
            }
            total += cells;
            inside += ok;
            ck.info(
                format!("N={n} {ens:?} ({samples} samples)"),
                format!("{ok}/{cells} cells within 3σ; worst {:.2}σ at {}", worst.0, worst.1),
            );
        }
    }
    let frac = inside as f64 / total as f64;
    ck.gate(frac >= 0.95, "cells within 3 standard errors", format!("{inside}/{total} = {:.1}%", 100.0 * frac));
    Ok(())
}

fn c06_q_vector(_: &Config, ck: &mut Checks) -> Result<()> {
    for n in [2usize, 3] {
        let model = cb(n)?;
        let spec = model.spectrum();
        let mut err: f64 = 0.0;
        let mut imag: f64 = 0.0;
        for t in [0.31, 0.77, 1.9] {
            let v = diag_v(&spec, t);
            let ff = sff_explicit(&spec, t);
            let q = isotwirl_core::twirl_engine::q_vector_stabilizer(&ff)?;
            for &p in ALL.iter() {
                let dense = q_trace_dense(p, &v);
                err = err.max(rel(dense.re, q[p.index()]));
                imag = imag.max(dense.im.abs());
            }
        }
        ck.gate(
            err <= 1e-8 && imag <= 1e-8,
            format!("N={n}: 24 traces × 3 times"),
            format!("max rel {err:.2e}, max |Im| {imag:.2e}"),
        );
    }
    Ok(())
}

fn c07_toric(_: &Config, ck: &mut Checks) -> Result<()> {
    let tc = ToricCode::new(2, 1.0)?;
    let spec = toric_spectrum_dense(2, 1.0)?;
    let grid = log_grid(0.01, 100.0, 100);
    let mut errs = [0.0f64; 5];
    let mut printed: f64 = 0.0;
    for &t in &grid {
        let closed = tc.sff(t);
        let dense = sff_explicit(&spec, t);
        let pauli = toric_g3tilde_pauli(2, 1.0, t)?;
        let g3t = closed.g3tilde.ok_or_else(|| anyhow!("toric form factors lack g̃₃"))?;
        for (e, (a, b)) in errs.iter_mut().zip([
            (closed.g2, dense.g2),
            (closed.g2_2t, dense.g2_2t),
            (closed.g3_re, dense.g3_re),
            (closed.g4, dense.g4),
            (g3t, pauli),
        ]) {
            *e = e.max(rel(a, b));
        }
        printed = printed.max(rel(tc.printed_g3tilde(t), pauli));
    }
    for (name, e) in ["g₂(t)", "g₂(2t)", "Re g₃", "g₄"].iter().zip(&errs) {
        ck.gate(*e <= 1e-8, format!("{name}: closed vs dense spectrum (d=256)"), format!("max rel {e:.2e}"));
    }
    ck.gate(errs[4] <= 1e-8, "g̃₃: closed vs Pauli-sum expansion", format!("max rel {:.2e}", errs[4]));
    ck.reference(printed <= 1e-8, "g̃₃ printed closed form vs Pauli sum", format!("max rel {printed:.2e}"));
    Ok(())
}

fn c08_gde(cfg: &Config, ck: &mut Checks) -> Result<()> {
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let samples = 100_000;
    for d in [4u64, 8] {
        let mc = mc_form_factors(SpectralEnsemble::Gde, d as usize, &grid, samples, cfg.seed ^ 0x800 ^ d)?;
        let mut zs = [0.0f64; 4];
        let (mut zp4, mut zp3): (f64, f64) = (0.0, 0.0);
        for (&t, st) in grid.iter().zip(&mc) {
            let ff = gde_averages(d, t)?;
            let g3t = ff.g3tilde.unwrap_or(f64::NAN);
            for (z, (c, s)) in
                zs.iter_mut().zip([(ff.g2, &st.g2), (ff.g3_re, &st.g3_re), (ff.g4, &st.g4), (g3t, &st.g3tilde)])
            {
                *z = z.max(z_score(c, s));
            }
            zp4 = zp4.max(z_score(gde_printed_g4(d, t), &st.g4));
            zp3 = zp3.max(z_score(gde_printed_g3tilde(d, t), &st.g3tilde));
        }
        for (name, z) in ["g₂", "Re g₃", "g₄", "g̃₃"].iter().zip(&zs) {
            ck.gate(*z <= 3.0, format!("d={d} {name}"), format!("max {z:.2}σ over {} times", grid.len()));
        }
        ck.reference(zp4 <= 3.0, format!("d={d} printed g₄"), format!("max {zp4:.2}σ"));
        ck.reference(zp3 <= 3.0, format!("d={d} printed g̃₃"), format!("max {zp3:.2}σ"));
    }
    Ok(())
}

fn rms_rel(closed: &[f64], sampled: &[f64]) -> f64 {
    let s: f64 = closed.iter().zip(sampled).map(|(c, m)| ((c - m) / m).powi(2)).sum();
    (s / closed.len() as f64).sqrt()
}

fn c09_gue(cfg: &Config, ck: &mut Checks) -> Result<()> {
    let d = 32u64;
    let x = d as f64;
    let g0 = gue_averages(d, 0.0)?.g2;
    ck.gate((g0 - x * x).abs() <= 1e-12 * x * x, "g₂(0) = d²", format!("{g0} vs {}", x * x));

    let plateau = log_grid(3.0 * x + 1.0, 100.0 * x, 30);
    let (mut p2, mut p3): (f64, f64) = (0.0, 0.0);
    for &t in &plateau {
        let ff = gue_averages(d, t)?;
        p2 = p2.max((ff.g2 / x - 1.0).abs());
        p3 = p3.max((ff.g3tilde.unwrap_or(f64::NAN) / (2.0 * x) - 1.0).abs());
    }
    ck.gate(p2 <= 0.02, "g₂ plateau → d for t > 3d", format!("max |g₂/d − 1| = {:.2}%", 100.0 * p2));
    ck.gate(p3 <= 0.05, "g̃₃ plateau → 2d for t > 3d", format!("max |g̃₃/2d − 1| = {:.2}%", 100.0 * p3));

    let log_t = log_grid(0.1, 4.0 * x, 40);
    let lin_t = linear_grid(0.1, 4.0 * x, 40);
    let all: Vec<f64> = log_t.iter().chain(&lin_t).copied().collect();
    let mc = mc_form_factors(SpectralEnsemble::Gue, d as usize, &all, 2000, cfg.seed ^ 0x900)?;
    let closed: Vec<f64> = all.iter().map(|&t| gue_averages(d, t).map(|f| f.g2)).collect::<Result<_, _>>()?;
    let sampled: Vec<f64> = mc.iter().map(|s| s.g2.mean).collect();
    let rms_log = rms_rel(&closed[..40], &sampled[..40]);
    let rms_lin = rms_rel(&closed[40..], &sampled[40..]);
    ck.gate(
        rms_log <= 0.10,
        "g₂ vs 2000 sampled spectra, log grid t ∈ [0.1, 4d]",
        format!("relative RMS {:.2}%", 100.0 * rms_log),
    );
    ck.info("same, linear grid t ∈ [0.1, 4d]", format!("relative RMS {:.2}%", 100.0 * rms_lin));
    let tail: Vec<&Stats> = mc[40..].iter().rev().take(10).map(|s| &s.g3tilde).collect();
    let g3_tail = tail.iter().map(|s| s.mean).sum::<f64>() / tail.len() as f64;
    ck.info("sampled g̃₃ near t = 4d", format!("{:.3} vs 2d = {}", g3_tail, 2.0 * x));
    Ok(())
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn c10_scaling(_: &Config, ck: &mut Checks) -> Result<()> {
    let ds = [256u64, 1024, 4096];
    let t = 1e4;
    let engines: Vec<ProbeEngine> = ds.iter().map(|&d| ProbeEngine::new(d, None)).collect::<Result<_, _>>()?;
    let lx: Vec<f64> = ds.iter().map(|&d| (d as f64).ln()).collect();
    for kind in [ProbeKind::Loschmidt2, ProbeKind::Otoc4] {
        for (label, want) in [("clifford", -1.0), ("haar", -2.0)] {
            let mut vals = Vec::new();
            for (e, &d) in engines.iter().zip(&ds) {
                let ff = gde_averages(d, t)?;
                vals.push(if label == "haar" { e.haar(kind, &ff) } else { e.clifford(kind, &ff)? });
            }
            let ly: Vec<f64> = vals.iter().map(|v| v.abs().ln()).collect();
            let s = slope(&lx, &ly);
            let shown: Vec<String> = vals.iter().map(|v| format!("{v:.3e}")).collect();
            ck.gate(
                (s - want).abs() <= 0.1,
                format!("{} {label}: log-log slope", kind.name()),
                format!("{s:.4} (target {want}); values [{}]", shown.join(", ")),
            );
        }
    }
    Ok(())
}

fn c11_closed_forms(_: &Config, ck: &mut Checks) -> Result<()> {
    let grid = log_grid(0.01, 100.0, 50);
    let ffs = |d: u64| -> Vec<FormFactors> {
        let n = d.trailing_zeros() as usize;
        let model = CbHamiltonian::new(CB_OMEGAS[..n].to_vec()).expect("valid frequencies");
        grid.iter().map(|&t| model.product_form(t)).collect()
    };
    let tol = 1e-10;
    let report = compare_closed_forms(&[8, 16], &ffs, &[1, 4, 16], FRAC_PI_4, tol)?;
    for m in &report.entries {
        let mut detail = format!("max rel {:.2e}", m.max_rel);
        if m.max_rel > tol {
            let _ = write!(detail, " at t={:.4}", m.worst_t);
        }
        if m.exact {
            let _ = write!(detail, "; exact coefficients {}", if m.coefficient_diffs.is_empty() { "equal" } else { "differ" });
            for (s, a, b) in &m.coefficient_diffs {
                let _ = write!(detail, " [{}: table {a} vs shown {b}]", s.name());
            }
        }
        if let Some(e) = m.explanation {
            let _ = write!(detail, "; explained: {e}");
        }
        ck.gate(m.ok(tol), format!("d={} {} {}", m.d, m.kind.name(), m.ensemble), detail);
    }
    ck.info(
        "mismatch report",
        format!(
            "{} comparisons, {} failing, {} unexplained",
            report.entries.len(),
            report.failing().count(),
            report.unexplained()
        ),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use isotwirl_core::perm_algebra::CycleClass;

    #[test]
    fn exact_criteria_pass() {
        let cfg = Config::default();
        for id in [4u8, 6, 7, 10] {
            let r = run_criterion(id, &cfg).unwrap();
            assert!(r.pass(), "{}", format_criterion(&r));
        }
    }

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(run_criterion(12, &Config::default()).is_err());
    }

    #[test]
    fn reference_weingarten_matches_class_order() {
        let w = weingarten_reference(5);
        let chr = weingarten_by_characters(GramKind::Plain, 5).unwrap();
        for c in CycleClass::ALL {
            assert_eq!(w[c as usize], chr.values[c as usize], "{}", c.name());
        }
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0f64, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 4.0 - 2.0 * x).collect();
        assert!((slope(&xs, &ys) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn format_marks_fixture_failures_as_non_gating() {
        let r = CriterionResult {
            id: 7,
            title: "t",
            budget: Duration::from_secs(1),
            elapsed: Duration::from_millis(1),
            checks: vec![Check { role: Role::Reference, pass: false, label: "x".into(), detail: "y".into() }],
            error: None,
        };
        assert!(r.pass());
        assert!(format_criterion(&r).contains("not gating"));
    }
}
