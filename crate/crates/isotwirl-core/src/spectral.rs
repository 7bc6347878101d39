//! Spectral form factors of `V = e^{-iHt}` from explicit spectra, and their
//! closed-form averages over the Gaussian diagonal (GDE) and Gaussian unitary
//! (GUE) ensembles.
//!
//! * `g₂(t) = |Tr V|²`
//! * `g₃(t) = Tr[V²] (Tr V†)²` (only `Re g₃` enters probe averages)
//! * `g₄(t) = |Tr V|⁴`
//! * `g̃₃(t) = d⁻¹ Σ_{ijk} e^{-i(E_i+E_j−E_k−E_{i⊕j⊕k})t}` for spectra indexed
//!   by bitstrings (diagonal, hence stabilizer, Hamiltonians).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
// f64 math comes from `Float` under no_std; test builds link std and get it inherently.
#[allow(unused_imports)]
use num_traits::Float;

use crate::{qubits_of, Error, Result};

type C64 = Complex<f64>;

/// A spectrum of `d` real (dimensionless) energies.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
}

impl Spectrum {
    pub fn new(energies: Vec<f64>) -> Result<Spectrum> {
        if energies.is_empty() {
            return Err(Error::Invalid("empty spectrum"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Invalid("spectrum contains non-finite energies"));
        }
        Ok(Spectrum { energies })
    }

    pub fn dim(&self) -> u64 {
        self.energies.len() as u64
    }
}

/// Where a set of form factors came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Explicit,
    Gde,
    Gue,
    Toric,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Explicit => "explicit",
            Source::Gde => "gde",
            Source::Gue => "gue",
            Source::Toric => "toric",
        }
    }
}

/// Form factors at one time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormFactors {
    pub t: f64,
    pub d: u64,
    pub g2: f64,
    pub g2_2t: f64,
    pub g3_re: f64,
    pub g4: f64,
    /// Stabilizer (XOR-correlated) form factor; `None` when the source does
    /// not define it.
    pub g3tilde: Option<f64>,
    pub source: Source,
}

impl FormFactors {
    /// Counting values at `t = 0`.
    pub fn at_zero(d: u64, source: Source) -> FormFactors {
        let x = d as f64;
        FormFactors {
            t: 0.0,
            d,
            g2: x * x,
            g2_2t: x * x,
            g3_re: x * x * x,
            g4: x * x * x * x,
            g3tilde: Some(x * x),
            source,
        }
    }
}

fn phase(x: f64) -> C64 {
    C64::new(libm::cos(x), -libm::sin(x))
}

/// `Tr V(t) = Σ_i e^{-iE_i t}`.
pub fn trace_v(s: &Spectrum, t: f64) -> C64 {
    s.energies.iter().fold(C64::new(0.0, 0.0), |acc, &e| acc + phase(e * t))
}

/// Direct O(d) evaluation of `g₂`, `g₂(2t)`, `Re g₃`, `g₄`, plus `g̃₃` when
/// `d` is a power of two.
pub fn sff_explicit(s: &Spectrum, t: f64) -> FormFactors {
    let tr = trace_v(s, t);
    let tr2 = trace_v(s, 2.0 * t);
    let g2 = tr.norm_sqr();
    let g3 = tr2 * tr.conj() * tr.conj();
    let d = s.dim();
    FormFactors {
        t,
        d,
        g2,
        g2_2t: tr2.norm_sqr(),
        g3_re: g3.re,
        g4: g2 * g2,
        g3tilde: sff_clifford_cb(s, t).ok(),
        source: Source::Explicit,
    }
}

/// In-place Walsh–Hadamard transform (unnormalized).
pub fn walsh_hadamard<T>(v: &mut [T])
where
    T: Copy + core::ops::Add<Output = T> + core::ops::Sub<Output = T>,
{
    let n = v.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let a = v[i];
                let b = v[i + h];
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `g̃₃` of a bitstring-indexed spectrum in O(d log d).
///
/// With `z_i = e^{-iE_i t}` and `a(x) = Σ_i z_i z̄_{i⊕x}` (a real XOR
/// autocorrelation), `g̃₃ = d⁻¹ Σ_x a(x)²`; `a = d⁻¹ H(|Hz|²)` for the
/// Walsh–Hadamard transform `H`.
pub fn sff_clifford_cb(s: &Spectrum, t: f64) -> Result<f64> {
    let d = s.dim();
    qubits_of(d)?;
    let mut z: Vec<C64> = s.energies.iter().map(|&e| phase(e * t)).collect();
    walsh_hadamard(&mut z);
    let mut a: Vec<f64> = z.iter().map(|c| c.norm_sqr()).collect();
    walsh_hadamard(&mut a);
    let df = d as f64;
    Ok(a.iter().map(|x| (x / df) * (x / df)).sum::<f64>() / df)
}

fn gauss(t: f64, k: f64) -> f64 {
    libm::exp(-k * t * t)
}

/// GDE averages (energies i.i.d. normal with variance 1/4).
///
/// `g₄` includes the `d(d−1)e^{-t²}` pairing term and `g̃₃` decays with
/// `e^{-t²/2}` in its last term; both were fixed against the sampling oracle
/// (the printed variants are [`gde_printed_g4`] and [`gde_printed_g3tilde`]).
pub fn gde_averages(d: u64, t: f64) -> Result<FormFactors> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { d, min: 2 });
    }
    let x = d as f64;
    let e14 = gauss(t, 0.25);
    let e1 = gauss(t, 1.0);
    let e34 = gauss(t, 0.75);
    let e12 = gauss(t, 0.5);
    let g2 = x + x * (x - 1.0) * e14;
    let g2_2t = x + x * (x - 1.0) * gauss(2.0 * t, 0.25);
    let g3 = x + x * (x - 1.0) * e1 + 2.0 * x * (x - 1.0) * e14 + x * (x - 1.0) * (x - 2.0) * e34;
    let g4 = x * (2.0 * x - 1.0)
        + 4.0 * x * (x - 1.0) * (x - 1.0) * e14
        + 2.0 * x * (x - 1.0) * (x - 2.0) * e34
        + x * (x - 1.0) * (x - 2.0) * (x - 3.0) * e12
        + x * (x - 1.0) * e1;
    let g3t = 1.0 + 2.0 * (x - 1.0) + (x - 1.0) * e1 + (x - 1.0) * (x - 2.0) * e12;
    Ok(FormFactors { t, d, g2, g2_2t, g3_re: g3, g4, g3tilde: Some(g3t), source: Source::Gde })
}

/// Printed GDE `g₄` (lacks the `d(d−1)e^{-t²}` term; `g₄(0) ≠ d⁴`).
pub fn gde_printed_g4(d: u64, t: f64) -> f64 {
    let x = d as f64;
    x * (2.0 * x - 1.0)
        + 4.0 * x * (x - 1.0) * (x - 1.0) * gauss(t, 0.25)
        + 2.0 * x * (x - 1.0) * (x - 2.0) * gauss(t, 0.75)
        + x * (x - 1.0) * (x - 2.0) * (x - 3.0) * gauss(t, 0.5)
}

/// Printed GDE `g̃₃` (last term decays with `e^{-3t²/4}`).
pub fn gde_printed_g3tilde(d: u64, t: f64) -> f64 {
    let x = d as f64;
    1.0 + 2.0 * (x - 1.0) + (x - 1.0) * gauss(t, 1.0) + (x - 1.0) * (x - 2.0) * gauss(t, 0.75)
}

/// `r₁(t) = J₁(2t)/t`, with `r₁(0) = 1`.
pub fn r1(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 - t * t / 2.0
    } else {
        libm::j1(2.0 * t) / t
    }
}

/// Dimensionless box ramp `r₂(t) = θ(2d−t)(1 − t/2d)`.
pub fn r2(d: u64, t: f64) -> f64 {
    let two_d = 2.0 * d as f64;
    if t < two_d {
        1.0 - t / two_d
    } else {
        0.0
    }
}

/// `r₃(t) = sin(πt/2)/(πt/2)`, with `r₃(0) = 1`.
pub fn r3(t: f64) -> f64 {
    let x = core::f64::consts::PI * t / 2.0;
    if x.abs() < 1e-8 {
        1.0
    } else {
        libm::sin(x) / x
    }
}

/// The all-distinct-index part of `g₄` for the GUE.
fn gue_f4(d: u64, t: f64) -> f64 {
    let x = d as f64;
    let (a, b) = (r1(t), r2(d, t));
    x.powi(4) * a.powi(4) - 6.0 * x * r2(d, 2.0 * t) - 2.0 * x.powi(3) * a * a * b * r3(2.0 * t)
        - 4.0 * x.powi(3) * a * a * b
        + 2.0 * x * x * b * b
        + x * x * b * b * r3(2.0 * t).powi(2)
        + 8.0 * x * x * a * b * r3(t)
}

/// The all-distinct-index part of `g₃` for the GUE.
fn gue_g3_distinct(d: u64, t: f64) -> f64 {
    let x = d as f64;
    x.powi(3) * r1(t).powi(2) * r1(2.0 * t)
        - x * x * r1(2.0 * t) * r2(d, t) * r3(2.0 * t)
        - 2.0 * x * x * r1(t) * r2(d, 2.0 * t) * r3(t)
        + 2.0 * x * r2(d, 3.0 * t)
}

fn gue_g2(d: u64, t: f64) -> f64 {
    let x = d as f64;
    x + x * x * r1(t).powi(2) - x * r2(d, t)
}

/// GUE averages in the box approximation (valid for large `d`).
///
/// `g₄` counts the three-distinct-index sums once (the printed expression
/// counts the non-distinct pieces of `g₃` twice; see [`gue_printed_g4`]).
/// `g̃₃` uses the exact `1/(d−3)` weight of the four-distinct part.
pub fn gue_averages(d: u64, t: f64) -> Result<FormFactors> {
    if d < 4 {
        return Err(Error::DimensionTooSmall { d, min: 4 });
    }
    let x = d as f64;
    let g2 = gue_g2(d, t);
    let g2_2t = gue_g2(d, 2.0 * t);
    let rest3 = x * x * r1(2.0 * t).powi(2) - x * r2(d, 2.0 * t) + 2.0 * x * x * r1(t).powi(2)
        - 2.0 * x * r2(d, t)
        + x;
    let g3 = gue_g3_distinct(d, t) + rest3;
    let f4 = gue_f4(d, t);
    let g4 = f4
        + 2.0 * gue_g3_distinct(d, t)
        + 4.0 * (x - 1.0) * (x * x * r1(t).powi(2) - x * r2(d, t))
        + x * x * r1(2.0 * t).powi(2)
        - x * r2(d, 2.0 * t)
        + 2.0 * x * (x - 1.0)
        + x;
    let g3t = 1.0 + 2.0 * (x - 1.0) - r2(d, 2.0 * t) + x * r1(2.0 * t).powi(2) + (f4 / x) / (x - 3.0);
    Ok(FormFactors { t, d, g2, g2_2t, g3_re: g3, g4, g3tilde: Some(g3t), source: Source::Gue })
}

/// Printed GUE `g₄` (its `2Re[…]` bracket repeats the non-distinct pieces
/// of `g₃`; at `t = 0` it gives `d⁴ + 6d² − 6d`).
pub fn gue_printed_g4(d: u64, t: f64) -> f64 {
    let x = d as f64;
    let bracket = gue_g3_distinct(d, t) + x * x * r1(2.0 * t).powi(2) - x * r2(d, 2.0 * t)
        + 2.0 * x * x * r1(t).powi(2)
        - 2.0 * x * r2(d, t);
    gue_f4(d, t)
        + 2.0 * bracket
        + 4.0 * (x - 1.0) * (x * x * r1(t).powi(2) - x * r2(d, t))
        + x * x * r1(2.0 * t).powi(2)
        - x * r2(d, 2.0 * t)
        + 2.0 * x * (x - 1.0)
        + x
}

/// Characteristic times and values of the GUE envelopes.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub d: u64,
    /// Time and value of the `g₂` dip (numeric minimum of the closed form).
    pub g2_dip_time: f64,
    pub g2_dip_value: f64,
    /// Equilibration time of the `r₁` contribution, `d ≈ π t³`.
    pub g2_equilibration_time: f64,
    /// Heisenberg time `2d`, where the ramp ends.
    pub ramp_end: f64,
    pub g2_plateau: f64,
    pub g3tilde_plateau: f64,
    pub g4_dip_time: f64,
    pub g4_dip_value: f64,
    pub g4_plateau: f64,
}

/// Scan the closed forms on a log grid to locate dips; plateaus are the
/// `t → ∞` values of the closed forms.
pub fn envelope_times(d: u64) -> Result<Envelope> {
    if d < 4 {
        return Err(Error::DimensionTooSmall { d, min: 4 });
    }
    let x = d as f64;
    let grid = log_grid(0.05, 2.0 * x, 4000);
    let mut best2 = (0.0, f64::INFINITY);
    let mut best4 = (0.0, f64::INFINITY);
    for &t in &grid {
        let ff = gue_averages(d, t)?;
        if ff.g2 < best2.1 {
            best2 = (t, ff.g2);
        }
        if ff.g4 < best4.1 {
            best4 = (t, ff.g4);
        }
    }
    let late = gue_averages(d, 10.0 * x)?;
    Ok(Envelope {
        d,
        g2_dip_time: best2.0,
        g2_dip_value: best2.1,
        g2_equilibration_time: libm::cbrt(x / core::f64::consts::PI),
        ramp_end: 2.0 * x,
        g2_plateau: late.g2,
        g3tilde_plateau: late.g3tilde.unwrap_or(f64::NAN),
        g4_dip_time: best4.0,
        g4_dip_value: best4.1,
        g4_plateau: late.g4,
    })
}

/// `n` log-spaced points between `a` and `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (libm::log(a), libm::log(b));
    (0..n)
        .map(|i| libm::exp(la + (lb - la) * i as f64 / (n - 1) as f64))
        .collect()
}

/// `n` linearly spaced points between `a` and `b` inclusive.
pub fn linear_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn counting_values_at_zero() {
        let s = Spectrum::new(vec![0.3, -1.2, 0.7, 2.0, 0.1, -0.4, 1.5, -2.2]).unwrap();
        let ff = sff_explicit(&s, 0.0);
        assert_eq!((ff.g2, ff.g2_2t, ff.g3_re, ff.g4), (64.0, 64.0, 512.0, 4096.0));
        assert!(close(ff.g3tilde.unwrap(), 64.0, 1e-14));
    }

    #[test]
    fn single_level() {
        let s = Spectrum::new(vec![1.7]).unwrap();
        assert!(close(sff_explicit(&s, 3.1).g2, 1.0, 1e-15));
    }

    #[test]
    fn xor_sum_matches_triple_loop() {
        let e = [0.3, -1.2, 0.7, 2.0, 0.1, -0.4, 1.5, -2.2];
        let s = Spectrum::new(e.to_vec()).unwrap();
        let t = 0.83;
        let mut acc = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    let l = i ^ j ^ k;
                    acc += libm::cos((e[i] + e[j] - e[k] - e[l]) * t);
                }
            }
        }
        assert!(close(sff_clifford_cb(&s, t).unwrap(), acc / 8.0, 1e-12));
        assert!(sff_clifford_cb(&Spectrum::new(vec![0.0; 6]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn energy_shift_invariance() {
        let e = [0.3, -1.2, 0.7, 2.0];
        let s = Spectrum::new(e.to_vec()).unwrap();
        let sh = Spectrum::new(e.iter().map(|x| x + 5.5).collect()).unwrap();
        let (a, b) = (sff_explicit(&s, 1.3), sff_explicit(&sh, 1.3));
        assert!(close(a.g2, b.g2, 1e-12));
        assert!(close(a.g3_re, b.g3_re, 1e-12));
        assert!(close(a.g4, b.g4, 1e-12));
        assert!(close(a.g3tilde.unwrap(), b.g3tilde.unwrap(), 1e-12));
    }

    #[test]
    fn closed_forms_at_zero() {
        for d in [4u64, 8, 32] {
            for ff in [gde_averages(d, 0.0).unwrap(), gue_averages(d, 0.0).unwrap()] {
                let z = FormFactors::at_zero(d, ff.source);
                assert!(close(ff.g2, z.g2, 1e-12));
                assert!(close(ff.g3_re, z.g3_re, 1e-12));
                assert!(close(ff.g4, z.g4, 1e-12));
                assert!(close(ff.g3tilde.unwrap(), z.g3tilde.unwrap(), 1e-12));
            }
        }
        let x = 8.0f64;
        assert!(close(gue_printed_g4(8, 0.0), x.powi(4) + 6.0 * x * x - 6.0 * x, 1e-12));
        assert!(!close(gde_printed_g4(8, 0.0), 4096.0, 1e-6));
    }

    #[test]
    fn long_time_limits() {
        let d = 64u64;
        let x = d as f64;
        let gde = gde_averages(d, 1e3).unwrap();
        assert!(close(gde.g2, x, 1e-12));
        assert!(close(gde.g4, x * (2.0 * x - 1.0), 1e-12));
        assert!(close(gde.g3tilde.unwrap(), 2.0 * x - 1.0, 1e-12));
        let gue = gue_averages(d, 50.0 * x).unwrap();
        assert!(close(gue.g2, x, 1e-3));
        assert!(close(gue.g4, 2.0 * x * x, 1e-2));
        assert!(close(gue.g3tilde.unwrap(), 2.0 * x, 0.02));
    }

    #[test]
    fn bessel_limit() {
        assert!(close(r1(0.0), 1.0, 0.0));
        assert!(close(r1(1e-3), libm::j1(2e-3) / 1e-3, 1e-12));
    }

    #[test]
    fn envelope_scaling() {
        let e = envelope_times(1 << 12).unwrap();
        assert_eq!(e.ramp_end, 8192.0);
        let x = 4096.0;
        assert!(e.g4_plateau > 1.9 * x * x && e.g4_plateau < 2.1 * x * x);
        assert!(e.g2_dip_value < 3.0 * x);
    }
}
