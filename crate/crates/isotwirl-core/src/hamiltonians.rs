//! Stabilizer Hamiltonian models: the computational-basis model
//! `H = Σ_b ω_b Z_b` and the toric code.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
// f64 math comes from `Float` under no_std; test builds link std and get it inherently.
#[allow(unused_imports)]
use num_traits::Float;

use crate::spectral::{FormFactors, Source, Spectrum};
use crate::{Error, Result};

type C64 = Complex<f64>;

/// Largest number of qubits for which a spectrum is materialized.
pub const MAX_CB_QUBITS: usize = 24;

/// `H = Σ_b ω_b Z_b` on `N = omegas.len()` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct CbHamiltonian {
    pub omegas: Vec<f64>,
}

impl CbHamiltonian {
    pub fn new(omegas: Vec<f64>) -> Result<CbHamiltonian> {
        if omegas.is_empty() {
            return Err(Error::Invalid("computational-basis model needs at least one frequency"));
        }
        if omegas.len() > MAX_CB_QUBITS {
            return Err(Error::Invalid("computational-basis model limited to 24 qubits"));
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::Invalid("non-finite frequency"));
        }
        Ok(CbHamiltonian { omegas })
    }

    pub fn qubits(&self) -> usize {
        self.omegas.len()
    }

    pub fn dim(&self) -> u64 {
        1u64 << self.omegas.len()
    }

    pub fn spectrum(&self) -> Spectrum {
        cb_spectrum(&self.omegas).expect("validated on construction")
    }

    /// Form factors from the single-spin factorization:
    /// `Tr V = Π_b 2cos(ω_b t)`, `g̃₃ = Π_b ¼ Σ_{a,b,c=±1} cos(ω_b t(a+b−c−abc))`.
    pub fn product_form(&self, t: f64) -> FormFactors {
        let tr = |s: f64| -> f64 { self.omegas.iter().map(|w| 2.0 * (w * s).cos()).product() };
        let (tv, tv2) = (tr(t), tr(2.0 * t));
        let g3t: f64 = self
            .omegas
            .iter()
            .map(|w| {
                let mut acc = 0.0;
                for a in [-1.0, 1.0] {
                    for b in [-1.0, 1.0] {
                        for c in [-1.0, 1.0] {
                            acc += (w * t * (a + b - c - a * b * c)).cos();
                        }
                    }
                }
                acc / 2.0
            })
            .product();
        FormFactors {
            t,
            d: self.dim(),
            g2: tv * tv,
            g2_2t: tv2 * tv2,
            g3_re: tv2 * tv * tv,
            g4: tv.powi(4),
            g3tilde: Some(g3t),
            source: Source::Explicit,
        }
    }
}

/// All `2^N` energies `E_i = Σ_b (1 − 2·bit_b(i)) ω_b`, bitstring-indexed.
pub fn cb_spectrum(omegas: &[f64]) -> Result<Spectrum> {
    let n = omegas.len();
    if n == 0 || n > MAX_CB_QUBITS {
        return Err(Error::Invalid("computational-basis model needs 1..=24 frequencies"));
    }
    let d = 1usize << n;
    let energies = (0..d)
        .map(|i| {
            omegas
                .iter()
                .enumerate()
                .map(|(b, w)| if (i >> b) & 1 == 0 { *w } else { -*w })
                .sum()
        })
        .collect();
    Spectrum::new(energies)
}

/// Toric code on an `N×N` periodic lattice, `H = −J(Σ_v A_v + Σ_f B_f)`,
/// `2N²` qubits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToricCode {
    pub n: u32,
    pub j: f64,
}

/// Largest lattice whose `d = 2^{2N²}` fits a `u64`.
const MAX_TORIC_N: u32 = 5;

fn binomial(n: u64, k: u64) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl ToricCode {
    pub fn new(n: u32, j: f64) -> Result<ToricCode> {
        if n < 2 {
            return Err(Error::Invalid("toric code needs N ≥ 2"));
        }
        if n > MAX_TORIC_N {
            return Err(Error::Invalid("toric code limited to N ≤ 5"));
        }
        if !j.is_finite() {
            return Err(Error::Invalid("non-finite coupling"));
        }
        Ok(ToricCode { n, j })
    }

    /// Number of vertex (equivalently plaquette) operators, `M = N²`.
    pub fn m(&self) -> u32 {
        self.n * self.n
    }

    pub fn qubits(&self) -> u32 {
        2 * self.m()
    }

    pub fn dim(&self) -> u64 {
        1u64 << self.qubits()
    }

    /// `Tr V(t) = d[cos^M(Jt) + (i sin Jt)^M]²`.
    pub fn trace_v(&self, t: f64) -> C64 {
        let m = self.m() as i32;
        let (c, s) = ((self.j * t).cos(), (self.j * t).sin());
        let z = C64::new(c.powi(m), 0.0) + C64::new(0.0, s).powi(m);
        z * z * self.dim() as f64
    }

    /// `g̃₃ = d⁻² Σ_P |Tr[V P]|⁴`, resummed over the weight `m` of the vertex
    /// subset in each `X`-type (and independently `Z`-type) product:
    /// `g̃₃ = d² [½ Σ_m C(M,m) |c^{M−m}(is)^m + c^m(is)^{M−m}|⁴]²`.
    pub fn g3tilde(&self, t: f64) -> f64 {
        let m = self.m() as u64;
        let (c, s) = ((self.j * t).cos(), (self.j * t).sin());
        let is = C64::new(0.0, s);
        let cc = C64::new(c, 0.0);
        let mut acc = 0.0;
        for k in 0..=m {
            let f = cc.powi((m - k) as i32) * is.powi(k as i32) + cc.powi(k as i32) * is.powi((m - k) as i32);
            acc += binomial(m, k) * f.norm_sqr() * f.norm_sqr();
        }
        let half = acc / 2.0;
        let d = self.dim() as f64;
        d * d * half * half
    }

    /// The printed closed form
    /// `d²(c⁴+s⁴)^{2M} + 3d·sin(2Jt)^{2M} + 4(−1)^M sin(4Jt)^{2M}`; kept as a
    /// fixture (it disagrees with the Pauli-sum oracle for `t ≠ 0`).
    pub fn printed_g3tilde(&self, t: f64) -> f64 {
        let m = self.m() as i32;
        let (c, s) = ((self.j * t).cos(), (self.j * t).sin());
        let d = self.dim() as f64;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        d * d * (c.powi(4) + s.powi(4)).powi(2 * m)
            + 3.0 * d * (2.0 * self.j * t).sin().powi(2 * m)
            + 4.0 * sign * (4.0 * self.j * t).sin().powi(2 * m)
    }

    /// Form factors from the closed traces.
    pub fn sff(&self, t: f64) -> FormFactors {
        let tv = self.trace_v(t);
        let tv2 = self.trace_v(2.0 * t);
        let g2 = tv.norm_sqr();
        FormFactors {
            t,
            d: self.dim(),
            g2,
            g2_2t: tv2.norm_sqr(),
            g3_re: (tv2 * tv.conj() * tv.conj()).re,
            g4: g2 * g2,
            g3tilde: Some(self.g3tilde(t)),
            source: Source::Toric,
        }
    }

    /// Distinct energy levels with multiplicities: `E = −J(Σ_v a_v + Σ_f b_f)`
    /// over `±1` assignments with `Π a_v = Π b_f = 1`, each assignment
    /// `4`-fold degenerate (the two logical qubits).
    pub fn levels(&self) -> Vec<(f64, u64)> {
        let m = self.m() as u64;
        // Sums of one constrained sector: M − 2k with k even, C(M,k) ways.
        let sector: Vec<(i64, u64)> = (0..=m)
            .step_by(2)
            .map(|k| (m as i64 - 2 * k as i64, binomial(m, k).round() as u64))
            .collect();
        let mut out: Vec<(i64, u64)> = Vec::new();
        for &(a, na) in &sector {
            for &(b, nb) in &sector {
                let e = -(a + b);
                match out.iter_mut().find(|(x, _)| *x == e) {
                    Some(entry) => entry.1 += 4 * na * nb,
                    None => out.push((e, 4 * na * nb)),
                }
            }
        }
        out.sort_unstable();
        out.into_iter().map(|(e, n)| (self.j * e as f64, n)).collect()
    }

    /// The full degenerate spectrum (only materialized for `N = 2`).
    pub fn spectrum(&self) -> Result<Spectrum> {
        if self.n != 2 {
            return Err(Error::Invalid("toric spectrum is materialized only for N = 2"));
        }
        let mut e = Vec::with_capacity(self.dim() as usize);
        for (level, mult) in self.levels() {
            e.extend(vec![level; mult as usize]);
        }
        Spectrum::new(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sff_clifford_cb, sff_explicit};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn cb_enumeration_order() {
        assert_eq!(cb_spectrum(&[1.0]).unwrap().energies, vec![1.0, -1.0]);
        assert_eq!(cb_spectrum(&[1.0, 2.0]).unwrap().energies, vec![3.0, 1.0, -1.0, -3.0]);
        assert!(cb_spectrum(&[]).is_err());
    }

    #[test]
    fn cb_sign_flip_symmetry() {
        let mut a = cb_spectrum(&[0.3, 1.1, 0.7]).unwrap().energies;
        let mut b = cb_spectrum(&[-0.3, -1.1, -0.7]).unwrap().energies;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn cb_product_form_matches_explicit() {
        let h = CbHamiltonian::new(vec![0.31, 0.77, 1.23, 0.05]).unwrap();
        let s = h.spectrum();
        for t in [0.0, 0.4, 1.7, 5.2] {
            let a = h.product_form(t);
            let b = sff_explicit(&s, t);
            assert!(close(a.g2, b.g2, 1e-12));
            assert!(close(a.g2_2t, b.g2_2t, 1e-12));
            assert!(close(a.g3_re, b.g3_re, 1e-12));
            assert!(close(a.g4, b.g4, 1e-12));
            assert!(close(a.g3tilde.unwrap(), sff_clifford_cb(&s, t).unwrap(), 1e-12));
        }
    }

    #[test]
    fn toric_levels_and_trace() {
        let tc = ToricCode::new(2, 1.0).unwrap();
        let lv = tc.levels();
        assert_eq!(
            lv,
            vec![(-8.0, 4), (-4.0, 48), (0.0, 152), (4.0, 48), (8.0, 4)]
        );
        let s = tc.spectrum().unwrap();
        assert_eq!(s.dim(), 256);
        for t in [0.0, 0.3, 1.1, 2.5] {
            let a = tc.sff(t);
            let b = sff_explicit(&s, t);
            assert!(close(a.g2, b.g2, 1e-10));
            assert!(close(a.g3_re, b.g3_re, 1e-10));
            assert!(close(a.g4, b.g4, 1e-10));
        }
        let tot: u64 = ToricCode::new(3, 1.0).unwrap().levels().iter().map(|x| x.1).sum();
        assert_eq!(tot, 1 << 18);
    }

    #[test]
    fn toric_limits_and_period() {
        for n in [2, 3] {
            let tc = ToricCode::new(n, 0.7).unwrap();
            let d = tc.dim() as f64;
            let z = tc.sff(0.0);
            assert!(close(z.g2, d * d, 1e-12));
            assert!(close(z.g4, d.powi(4), 1e-12));
            assert!(close(z.g3tilde.unwrap(), d * d, 1e-12));
            assert!(close(tc.printed_g3tilde(0.0), d * d, 1e-12));
            let t = 0.9;
            let p = core::f64::consts::PI / 0.7;
            assert!(close(tc.sff(t).g2, tc.sff(t + p).g2, 1e-9));
            assert!(close(tc.g3tilde(t), tc.g3tilde(t + p), 1e-9));
        }
        assert!(ToricCode::new(1, 1.0).is_err());
    }
}
