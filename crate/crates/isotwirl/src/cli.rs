//! Scenario runner and table dumps behind the command line.
//!
//! A run writes, into the output directory:
//!
//! * `sff_<quantity>.csv` for `g2`, `g2_2t`, `g3_re`, `g4` and (when
//!   defined) `g3tilde`;
//! * `<probe>_<ensemble>.csv` for every requested probe and ensemble;
//! * `oracle_<probe|sff quantity>_<ensemble>.csv` with sampled means and
//!   standard errors when the oracle block is enabled;
//! * `manifest.json` with versions, seeds, dimensions, provenance of every
//!   series and the closed-form mismatch reports;
//! * `plot.gp` when requested.
//!
//! CSV columns are `t,value[,stderr]` with every float written as `{:.16e}`
//! (17 significant digits). Output contains no timestamps or absolute paths,
//! so identical scenarios and seeds produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use isotwirl_core::hamiltonians::{CbHamiltonian, ToricCode};
use isotwirl_core::linalg::to_f64;
use isotwirl_core::perm_algebra::ALL;
use isotwirl_core::probes::{compare_closed_forms, Mismatch, ProbeEngine};
use isotwirl_core::spectral::{gde_averages, gue_averages, sff_explicit, FormFactors, Spectrum};
use isotwirl_core::twirl_engine::{XiMatrix, Weights};
use isotwirl_core::weingarten::{gram, weingarten_by_characters, GramKind};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde_json::{json, Value};

use crate::oracle::{mc_form_factors, mc_twirl, stream_rng, SampledEnsemble, SpectralEnsemble, Stats};
use crate::scenario::{EnsembleSpec, Frequencies, Model, Scenario, Spacing, SpectralAverage};

/// Relative tolerance of the table-driven vs displayed comparison.
pub const MISMATCH_TOL: f64 = 1e-10;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t,value` or `t,value,stderr` rows.
pub fn csv(times: &[f64], values: &[f64], stderr: Option<&[f64]>) -> String {
    let mut s = String::from(if stderr.is_some() { "t,value,stderr\n" } else { "t,value\n" });
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        let _ = write!(s, "{},{}", fmt_f64(t), fmt_f64(v));
        if let Some(e) = stderr {
            let _ = write!(s, ",{}", fmt_f64(e[i]));
        }
        s.push('\n');
    }
    s
}

/// Resolved spectral source of a scenario.
enum Source {
    Cb(CbHamiltonian),
    Toric(ToricCode),
    Raw(Spectrum),
    Gde(u64),
    Gue(u64),
}

impl Source {
    fn dim(&self) -> u64 {
        match self {
            Source::Cb(h) => h.dim(),
            Source::Toric(t) => t.dim(),
            Source::Raw(s) => s.dim(),
            Source::Gde(d) | Source::Gue(d) => *d,
        }
    }

    fn form_factors(&self, t: f64) -> Result<FormFactors> {
        Ok(match self {
            Source::Cb(h) => h.product_form(t),
            Source::Toric(tc) => tc.sff(t),
            Source::Raw(s) => sff_explicit(s, t),
            Source::Gde(d) => gde_averages(*d, t)?,
            Source::Gue(d) => gue_averages(*d, t)?,
        })
    }

    fn describe(&self) -> Value {
        match self {
            Source::Cb(h) => json!({"kind": "cb", "omegas": h.omegas}),
            Source::Toric(t) => json!({"kind": "toric", "n": t.n, "j": t.j}),
            Source::Raw(s) => json!({"kind": "raw", "levels": s.energies.len()}),
            Source::Gde(d) => json!({"kind": "gde", "d": d}),
            Source::Gue(d) => json!({"kind": "gue", "d": d}),
        }
    }
}

fn resolve_source(scn: &Scenario, seed: u64) -> Result<Source> {
    Ok(match (&scn.model, scn.spectral) {
        (Some(Model::Cb(Frequencies::Explicit(w))), _) => Source::Cb(CbHamiltonian::new(w.clone())?),
        (Some(Model::Cb(Frequencies::Random { qubits, seed: s })), _) => {
            let mut rng = stream_rng(s.unwrap_or(seed), 0);
            Source::Cb(CbHamiltonian::new((0..*qubits).map(|_| rng.random::<f64>()).collect())?)
        }
        (Some(Model::Toric { n, j }), _) => Source::Toric(ToricCode::new(*n, *j)?),
        (Some(Model::Raw { energies, .. }), _) => Source::Raw(Spectrum::new(energies.clone())?),
        (None, SpectralAverage::Gde { d }) => Source::Gde(d),
        (None, SpectralAverage::Gue { d }) => Source::Gue(d),
        (None, SpectralAverage::None) => bail!("scenario has neither a model nor a spectral average"),
    })
}

fn ensemble_json(e: &EnsembleSpec) -> Value {
    match e {
        EnsembleSpec::Haar => json!({"name": "haar"}),
        EnsembleSpec::Clifford => json!({"name": "clifford"}),
        EnsembleSpec::Doped { k, theta } => json!({"name": "doped", "k": k, "theta": theta}),
    }
}

fn mismatch_json(m: &Mismatch) -> Value {
    json!({
        "probe": m.kind.name(),
        "ensemble": m.ensemble,
        "d": m.d,
        "points": m.points,
        "max_rel": m.max_rel,
        "worst_t": if m.worst_t.is_finite() { json!(m.worst_t) } else { Value::Null },
        "exact_comparison": m.exact,
        "coefficient_diffs": m.coefficient_diffs.iter().map(|(s, a, b)| json!({"symbol": s.name(), "table": a, "displayed": b})).collect::<Vec<_>>(),
        "explanation": m.explanation,
        "ok": m.ok(MISMATCH_TOL),
    })
}

/// Options from the command line.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub files: Vec<String>,
    pub d: u64,
    pub seed: u64,
    pub unexplained_mismatches: usize,
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
    series: Vec<Value>,
}

impl Writer {
    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn series(&mut self, name: &str, content: &str, meta: Value) -> Result<()> {
        self.write(name, content)?;
        let mut m = meta;
        m["file"] = json!(name);
        self.series.push(m);
        Ok(())
    }
}

const SFF_QUANTITIES: [&str; 5] = ["g2", "g2_2t", "g3_re", "g4", "g3tilde"];

fn sff_value(ff: &FormFactors, q: &str) -> Option<f64> {
    match q {
        "g2" => Some(ff.g2),
        "g2_2t" => Some(ff.g2_2t),
        "g3_re" => Some(ff.g3_re),
        "g4" => Some(ff.g4),
        _ => ff.g3tilde,
    }
}

/// Execute a scenario.
pub fn run(scn: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let seed = opts.seed.or(scn.seed).unwrap_or(0);
    let source = resolve_source(scn, seed)?;
    let d = source.dim();
    let times = scn.time.times();
    let ffs: Vec<FormFactors> = times.iter().map(|&t| source.form_factors(t)).collect::<Result<_>>()?;
    fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    let mut w = Writer { dir: opts.out.clone(), files: Vec::new(), series: Vec::new() };

    for q in SFF_QUANTITIES {
        let vals: Option<Vec<f64>> = ffs.iter().map(|ff| sff_value(ff, q)).collect();
        if let Some(vals) = vals {
            w.series(&format!("sff_{q}.csv"), &csv(&times, &vals, None), json!({"quantity": q, "ensemble": "none"}))?;
        }
    }

    let mut mismatches: Vec<Value> = Vec::new();
    let mut unexplained = 0usize;
    let mut mismatch_notes: Vec<String> = Vec::new();
    if !scn.probes.is_empty() {
        for ens in &scn.ensembles {
            let theta = match ens {
                EnsembleSpec::Doped { theta, .. } => Some(*theta),
                _ => None,
            };
            let engine = ProbeEngine::new(d, theta)?;
            for &kind in &scn.probes {
                let vals: Vec<f64> = ffs
                    .iter()
                    .map(|ff| {
                        Ok(match ens {
                            EnsembleSpec::Haar => engine.haar(kind, ff),
                            EnsembleSpec::Clifford => engine.clifford(kind, ff)?,
                            EnsembleSpec::Doped { k, .. } => engine.doped(kind, ff, *k)?,
                        })
                    })
                    .collect::<Result<_>>()?;
                w.series(
                    &format!("{}_{}.csv", kind.name(), ens.tag()),
                    &csv(&times, &vals, None),
                    json!({"probe": kind.name(), "ensemble": ensemble_json(ens)}),
                )?;
            }
        }

        // Table-driven vs displayed closed forms for the requested probes.
        let mut thetas: Vec<f64> = scn
            .ensembles
            .iter()
            .filter_map(|e| if let EnsembleSpec::Doped { theta, .. } = e { Some(*theta) } else { None })
            .collect();
        thetas.dedup();
        let want_plain = scn.ensembles.iter().any(|e| !matches!(e, EnsembleSpec::Doped { .. }));
        let mut runs: Vec<(f64, Vec<u64>, bool)> = thetas
            .iter()
            .enumerate()
            .map(|(i, &th)| {
                let ks = scn
                    .ensembles
                    .iter()
                    .filter_map(|e| match e {
                        EnsembleSpec::Doped { k, theta } if *theta == th => Some(*k),
                        _ => None,
                    })
                    .collect();
                (th, ks, want_plain && i == 0)
            })
            .collect();
        if thetas.is_empty() {
            runs.push((std::f64::consts::FRAC_PI_4, Vec::new(), true));
        }
        let ff_fn = |_: u64| ffs.clone();
        for (theta, ks, plain) in runs {
            match compare_closed_forms(&[d], &ff_fn, &ks, theta, MISMATCH_TOL) {
                Ok(report) => {
                    for m in &report.entries {
                        let is_doped = m.ensemble.starts_with("doped");
                        let requested = scn.probes.contains(&m.kind)
                            && if is_doped {
                                true
                            } else {
                                plain && scn.ensembles.iter().any(|e| e.tag() == m.ensemble)
                            };
                        if !requested {
                            continue;
                        }
                        if !m.ok(MISMATCH_TOL) && m.explanation.is_none() {
                            unexplained += 1;
                        }
                        let mut v = mismatch_json(m);
                        if is_doped {
                            v["theta"] = json!(theta);
                        }
                        mismatches.push(v);
                    }
                }
                Err(e) => mismatch_notes.push(format!("comparison skipped at d={d}: {e}")),
            }
        }
    }

    let oracle = match scn.oracle {
        Some(o) if o.enabled => Some(run_oracle(scn, &source, o.qubits, o.samples, o.seed.unwrap_or(seed), &times, &mut w)?),
        Some(_) => Some(json!({"enabled": false})),
        None => None,
    };

    if scn.gnuplot {
        let script = gnuplot_script(scn, &w.series);
        w.write("plot.gp", &script)?;
    }

    let manifest = json!({
        "versions": {"isotwirl": env!("CARGO_PKG_VERSION"), "isotwirl-core": isotwirl_core::VERSION},
        "scenario": scn.name,
        "seed": seed,
        "model": source.describe(),
        "d": d,
        "ensembles": scn.ensembles.iter().map(ensemble_json).collect::<Vec<_>>(),
        "probes": scn.probes.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "time_grid": {
            "t_min": scn.time.t_min,
            "t_max": scn.time.t_max,
            "points": scn.time.points,
            "spacing": match scn.time.spacing { Spacing::Log => "log", Spacing::Linear => "linear" },
        },
        "float_format": "{:.16e}",
        "series": w.series,
        "oracle": oracle,
        "mismatch_reports": {
            "tolerance": MISMATCH_TOL,
            "entries": mismatches,
            "unexplained": unexplained,
            "notes": mismatch_notes,
        },
    });
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    w.write("manifest.json", &text)?;
    Ok(RunSummary { files: w.files, d, seed, unexplained_mismatches: unexplained })
}

fn sampled(e: &EnsembleSpec) -> SampledEnsemble {
    match *e {
        EnsembleSpec::Haar => SampledEnsemble::Haar,
        EnsembleSpec::Clifford => SampledEnsemble::Clifford,
        EnsembleSpec::Doped { k, theta } => SampledEnsemble::Doped { k, theta },
    }
}

fn within_3se(closed: &[f64], stats: &[&Stats]) -> (usize, f64) {
    let mut inside = 0;
    let mut worst: f64 = 0.0;
    for (c, s) in closed.iter().zip(stats) {
        let diff = (c - s.mean).abs();
        let z = if diff <= 1e-10 * c.abs().max(1.0) { 0.0 } else { diff / s.stderr() };
        if z <= 3.0 {
            inside += 1;
        }
        worst = worst.max(z);
    }
    (inside, worst)
}

fn run_oracle(
    scn: &Scenario,
    source: &Source,
    qubits: u32,
    samples: usize,
    seed: u64,
    times: &[f64],
    w: &mut Writer,
) -> Result<Value> {
    let d = 1u64 << qubits;
    let mut comparisons = Vec::new();
    let spectral = match source {
        Source::Gde(_) => Some(SpectralEnsemble::Gde),
        Source::Gue(_) => Some(SpectralEnsemble::Gue),
        _ => None,
    };
    if let Some(ens) = spectral {
        // Sample spectra at the oracle dimension and compare with the
        // closed-form averages there.
        let mc = mc_form_factors(ens, d as usize, times, samples, seed)?;
        let closed: Vec<FormFactors> = times
            .iter()
            .map(|&t| match ens {
                SpectralEnsemble::Gde => gde_averages(d, t),
                SpectralEnsemble::Gue => gue_averages(d, t),
            })
            .collect::<Result<_, _>>()?;
        let name = if ens == SpectralEnsemble::Gde { "gde" } else { "gue" };
        for q in SFF_QUANTITIES {
            let stats: Vec<&Stats> = mc
                .iter()
                .map(|s| match q {
                    "g2" => &s.g2,
                    "g2_2t" => &s.g2_2t,
                    "g3_re" => &s.g3_re,
                    "g4" => &s.g4,
                    _ => &s.g3tilde,
                })
                .collect();
            let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
            let ses: Vec<f64> = stats.iter().map(|s| s.stderr()).collect();
            let file = format!("oracle_sff_{q}_{name}.csv");
            w.series(&file, &csv(times, &means, Some(&ses)), json!({"quantity": q, "ensemble": name, "oracle": true, "d": d}))?;
            let cl: Vec<f64> = closed.iter().map(|f| sff_value(f, q).unwrap_or(f64::NAN)).collect();
            let (inside, worst) = within_3se(&cl, &stats);
            comparisons.push(json!({"series": file, "cells": times.len(), "within_3se": inside, "max_z": worst}));
        }
    } else {
        let spectrum = match source {
            Source::Cb(h) => {
                ensure!(h.qubits() >= qubits as usize, "oracle needs {qubits} frequencies, model has {}", h.qubits());
                CbHamiltonian::new(h.omegas[..qubits as usize].to_vec())?.spectrum()
            }
            Source::Raw(s) => {
                ensure!(s.energies.len() >= d as usize, "oracle needs {d} levels, spectrum has {}", s.energies.len());
                Spectrum::new(s.energies[..d as usize].to_vec())?
            }
            Source::Toric(_) => bail!("the dense oracle does not support the toric model (d = 2^(2N²) exceeds its limit)"),
            _ => unreachable!("spectral sources handled above"),
        };
        if scn.probes.is_empty() {
            return Ok(json!({"enabled": true, "qubits": qubits, "note": "no probes requested; nothing to sample"}));
        }
        for (i, ens) in scn.ensembles.iter().enumerate() {
            let theta = match ens {
                EnsembleSpec::Doped { theta, .. } => Some(*theta),
                _ => None,
            };
            let engine = ProbeEngine::with_split(d, theta, Some(1))?;
            let mc = mc_twirl(&spectrum, times, sampled(ens), &scn.probes, 1, samples, seed.wrapping_add(i as u64))?;
            for (pi, &kind) in scn.probes.iter().enumerate() {
                let stats: Vec<&Stats> = mc.cells.iter().map(|row| &row[pi]).collect();
                let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
                let ses: Vec<f64> = stats.iter().map(|s| s.stderr()).collect();
                let file = format!("oracle_{}_{}.csv", kind.name(), ens.tag());
                w.series(
                    &file,
                    &csv(times, &means, Some(&ses)),
                    json!({"probe": kind.name(), "ensemble": ensemble_json(ens), "oracle": true, "d": d}),
                )?;
                let closed: Vec<f64> = times
                    .iter()
                    .map(|&t| {
                        let ff = sff_explicit(&spectrum, t);
                        Ok(match ens {
                            EnsembleSpec::Haar => engine.haar(kind, &ff),
                            EnsembleSpec::Clifford => engine.clifford(kind, &ff)?,
                            EnsembleSpec::Doped { k, .. } => engine.doped(kind, &ff, *k)?,
                        })
                    })
                    .collect::<Result<_>>()?;
                let (inside, worst) = within_3se(&closed, &stats);
                comparisons.push(json!({"series": file, "cells": times.len(), "within_3se": inside, "max_z": worst}));
            }
        }
    }
    Ok(json!({"enabled": true, "qubits": qubits, "d": d, "samples": samples, "seed": seed, "comparisons": comparisons}))
}

fn gnuplot_script(scn: &Scenario, series: &[Value]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot companion script; run `gnuplot plot.gp` inside the output directory.");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set xlabel 't'");
    if scn.time.spacing == Spacing::Log {
        let _ = writeln!(s, "set logscale x");
    }
    let mut groups: Vec<(String, Vec<(String, String)>)> = Vec::new();
    for v in series {
        let file = v["file"].as_str().unwrap_or_default().to_string();
        let (group, title) = if let Some(p) = v["probe"].as_str() {
            let prefix = if v["oracle"] == json!(true) { "oracle_" } else { "" };
            (format!("{prefix}{p}"), file.trim_end_matches(".csv").to_string())
        } else {
            let q = v["quantity"].as_str().unwrap_or_default();
            let prefix = if v["oracle"] == json!(true) { "oracle_" } else { "" };
            (format!("{prefix}sff_{q}"), file.trim_end_matches(".csv").to_string())
        };
        match groups.iter_mut().find(|(g, _)| *g == group) {
            Some((_, list)) => list.push((file, title)),
            None => groups.push((group, vec![(file, title)])),
        }
    }
    for (group, list) in groups {
        let log_y = group.contains("sff") || group.contains("loschmidt") || group.contains("otoc");
        let _ = writeln!(s, "\nset output '{group}.png'");
        let _ = writeln!(s, "{}", if log_y { "set logscale y" } else { "unset logscale y" });
        let _ = writeln!(s, "set title '{}'", group.replace('_', " "));
        let plots: Vec<String> =
            list.iter().map(|(f, t)| format!("'{f}' using 1:2 with lines title '{}'", t.replace('_', " "))).collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s
}

/// Weingarten class values, Gram matrices and Ξ eigenvalues at `d`.
pub fn tables(d: u64, theta: f64, out: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = Vec::new();
    let mut put = |name: String, content: String| -> Result<()> {
        fs::write(out.join(&name), content).with_context(|| format!("writing {name}"))?;
        files.push(name);
        Ok(())
    };

    let mut s = String::from("class,kind,value_exact,value\n");
    for kind in [GramKind::Plain, GramKind::QProjected, GramKind::QPerpProjected] {
        match weingarten_by_characters(kind, d) {
            Ok(t) => {
                for c in isotwirl_core::perm_algebra::CycleClass::ALL {
                    let v = t.value(c);
                    let _ = writeln!(s, "{},{},{},{}", c.name(), kind.name(), v, fmt_f64(to_f64(v)));
                }
            }
            Err(e) if kind != GramKind::Plain => {
                let _ = writeln!(s, "# {}: {e}", kind.name());
            }
            Err(e) => return Err(e.into()),
        }
    }
    put(format!("weingarten_d{d}.csv"), s)?;

    for kind in [GramKind::Plain, GramKind::QProjected, GramKind::QPerpProjected] {
        let g = match gram(kind, d) {
            Ok(g) => g,
            Err(_) if kind != GramKind::Plain => continue,
            Err(e) => return Err(e.into()),
        };
        let mut s = String::from("row");
        for p in ALL.iter() {
            let _ = write!(s, ",{}", p.to_string());
        }
        s.push('\n');
        for (i, p) in ALL.iter().enumerate() {
            s.push_str(&p.to_string());
            for j in 0..24 {
                let _ = write!(s, ",{}", g[(i, j)]);
            }
            s.push('\n');
        }
        put(format!("gram_{}_d{d}.csv", kind.name()), s)?;
    }

    if d.is_power_of_two() && d >= 4 {
        let w = Weights::new(d)?;
        let xi = XiMatrix::new(&w, theta)?;
        let mut ev: Vec<C64> = xi.m.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re));
        let (xp, xm, x1) = XiMatrix::closed_form_eigenvalues(d, theta);
        let mut closed = vec![xp, xm, x1, x1, x1, x1];
        closed.extend([0.0; 18]);
        closed.sort_by(|a, b| b.total_cmp(a));
        let mut s = String::from("index,re,im,closed_form\n");
        for (i, (z, c)) in ev.iter().zip(&closed).enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(*c));
        }
        put(format!("xi_eigenvalues_d{d}.csv"), s)?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        let s = csv(&[0.1], &[1.0 / 3.0], Some(&[2.0]));
        assert_eq!(s, "t,value,stderr\n1.0000000000000001e-1,3.3333333333333331e-1,2.0000000000000000e0\n");
    }

    #[test]
    fn sff_only_run() {
        let dir = std::env::temp_dir().join(format!("isotwirl-cli-{}", std::process::id()));
        let scn = Scenario::parse(
            "g.txt",
            "[spectral]\naverage = gde\nd = 16\n[time]\nt_min = 0.1\nt_max = 10\npoints = 4\n",
            Path::new("."),
        )
        .unwrap();
        let r = run(&scn, &RunOptions { out: dir.clone(), seed: Some(1) }).unwrap();
        assert!(r.files.contains(&"sff_g3tilde.csv".to_string()));
        assert!(!r.files.iter().any(|f| f.starts_with("loschmidt")));
        fs::remove_dir_all(dir).unwrap();
    }
}
