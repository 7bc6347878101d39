//! Independent brute-force verification at small dimension.
//!
//! Nothing here uses the permutation-basis machinery of `isotwirl-core`:
//! permutation operators act on explicit tensor indices, `Q` is a literal
//! sum over Pauli strings, Clifford unitaries are realized densely from a
//! random symplectic tableau, Haar unitaries come from QR of a complex
//! Gaussian matrix, and probe operators are assembled from 2×2 blocks.

use std::collections::BTreeMap;

use anyhow::{bail, ensure, Result};
use isotwirl_core::hamiltonians::ToricCode;
use isotwirl_core::perm_algebra::Perm;
use isotwirl_core::probes::ProbeKind;
use isotwirl_core::spectral::{sff_explicit, Spectrum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

pub type CMat = DMatrix<C64>;

/// Largest `d⁴` for which a permutation operator is materialized.
pub const MAX_DENSE_DIM4: usize = 1 << 12;
/// Largest qubit count accepted by the sampling oracle.
pub const MAX_ORACLE_QUBITS: u32 = 3;
/// Samples per RNG stream; fixes the reduction order independently of the
/// thread count.
pub const CHUNK: usize = 500;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A seeded generator for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// Tensor indices and permutation operators
// ---------------------------------------------------------------------------

/// `(a₁,a₂,a₃,a₄)` ↔ `a₁d³ + a₂d² + a₃d + a₄` (slot 1 most significant).
fn split4(idx: usize, d: usize) -> [usize; 4] {
    [idx / (d * d * d), (idx / (d * d)) % d, (idx / d) % d, idx % d]
}

fn join4(a: [usize; 4], d: usize) -> usize {
    ((a[0] * d + a[1]) * d + a[2]) * d + a[3]
}

/// `T_p|a⟩ = |a'⟩` with `a'_{p(j)} = a_j`.
fn permute(p: Perm, a: [usize; 4]) -> [usize; 4] {
    let mut out = [0; 4];
    for j in 0..4 {
        out[p.apply(j)] = a[j];
    }
    out
}

/// The explicit permutation matrix `T_p` on `(C^d)^{⊗4}`.
pub fn build_perm_dense(p: Perm, d: usize) -> Result<CMat> {
    let n = d.pow(4);
    ensure!(n <= MAX_DENSE_DIM4, "d⁴ = {n} exceeds the dense limit {MAX_DENSE_DIM4}");
    let mut m = CMat::zeros(n, n);
    for b in 0..n {
        m[(join4(permute(p, split4(b, d)), d), b)] = ONE;
    }
    Ok(m)
}

/// `Tr[T_p (X₁⊗X₂⊗X₃⊗X₄)] = Σ_a Π_j X_j[a_{p(j)}, a_j]`, summed over all
/// `d⁴` index tuples.
pub fn perm_trace_product(p: Perm, ops: [&CMat; 4]) -> C64 {
    let d = ops[0].nrows();
    let mut acc = ZERO;
    for idx in 0..d.pow(4) {
        let a = split4(idx, d);
        let mut x = ONE;
        for j in 0..4 {
            x *= ops[j][(a[p.apply(j)], a[j])];
            if x == ZERO {
                break;
            }
        }
        acc += x;
    }
    acc
}

// ---------------------------------------------------------------------------
// Pauli strings
// ---------------------------------------------------------------------------

/// A Hermitian Pauli string `i^{|x∧z|} X^x Z^z`; qubit `j` is bit `n−1−j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pauli {
    pub x: u32,
    pub z: u32,
}

impl Pauli {
    pub const IDENTITY: Pauli = Pauli { x: 0, z: 0 };

    pub fn single(n: u32, qubit: u32, x: bool, z: bool) -> Pauli {
        let bit = 1 << (n - 1 - qubit);
        Pauli { x: if x { bit } else { 0 }, z: if z { bit } else { 0 } }
    }

    /// 0 when the strings commute, 1 when they anticommute.
    pub fn symplectic(self, o: Pauli) -> u32 {
        ((self.x & o.z) ^ (self.z & o.x)).count_ones() & 1
    }

    /// `P·O = i^k R`; returns `(k mod 4, R)`.
    pub fn mul(self, o: Pauli) -> (u32, Pauli) {
        let r = Pauli { x: self.x ^ o.x, z: self.z ^ o.z };
        let k = (self.x & self.z).count_ones() + (o.x & o.z).count_ones() + 2 * (self.z & o.x).count_ones();
        let k = (k + 4 * 32 - (r.x & r.z).count_ones()) % 4;
        (k, r)
    }

    /// `(P v)_{b⊕x} = i^{|x∧z|} (−1)^{|z∧b|} v_b`.
    pub fn apply(self, v: &DVector<C64>) -> DVector<C64> {
        let ph = ipow((self.x & self.z).count_ones());
        let mut out = DVector::zeros(v.len());
        for b in 0..v.len() {
            let s = if (self.z & b as u32).count_ones() % 2 == 1 { -ph } else { ph };
            out[b ^ self.x as usize] = v[b] * s;
        }
        out
    }

    pub fn matrix(self, n: u32) -> CMat {
        let d = 1usize << n;
        let ph = ipow((self.x & self.z).count_ones());
        let mut m = CMat::zeros(d, d);
        for b in 0..d {
            let s = if (self.z & b as u32).count_ones() % 2 == 1 { -ph } else { ph };
            m[(b ^ self.x as usize, b)] = s;
        }
        m
    }
}

fn ipow(k: u32) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => C64::new(0.0, 1.0),
        2 => -ONE,
        _ => C64::new(0.0, -1.0),
    }
}

/// `Tr[T_p Q V^{⊗2,2}]` with `Q = d⁻² Σ_P P^{⊗4}`, applied as a literal sum
/// over all `d²` Pauli strings.
pub fn q_trace_dense(p: Perm, v: &CMat) -> C64 {
    let d = v.nrows();
    let n = d.trailing_zeros();
    let vd = v.adjoint();
    let mut acc = ZERO;
    for x in 0..d as u32 {
        for z in 0..d as u32 {
            let pm = Pauli { x, z }.matrix(n);
            let a = &pm * v;
            let b = &pm * &vd;
            acc += perm_trace_product(p, [&a, &a, &b, &b]);
        }
    }
    acc / (d * d) as f64
}

/// `Q` as an explicit `16×16` matrix (one qubit).
pub fn build_q_dense_n1() -> CMat {
    let mut q = CMat::zeros(16, 16);
    for x in 0..2 {
        for z in 0..2 {
            let p = Pauli { x, z }.matrix(1);
            q += kron(&kron(&p, &p), &kron(&p, &p));
        }
    }
    q.unscale(4.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

// ---------------------------------------------------------------------------
// Clifford group
// ---------------------------------------------------------------------------

/// A Clifford unitary (modulo global phase) given by the images of
/// `X₁…X_N, Z₁…Z_N` under conjugation, with sign bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordElement {
    pub n: u32,
    /// `images[j]` for `X_j`, `images[n+j]` for `Z_j`.
    pub images: Vec<Pauli>,
    /// `true` = the image carries a minus sign.
    pub signs: Vec<bool>,
}

impl CliffordElement {
    /// Images pairwise satisfy the canonical commutation relations.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n as usize;
        (0..2 * n).all(|a| {
            (0..2 * n).all(|b| {
                let want = u32::from(a % n == b % n && a != b);
                self.images[a].symplectic(self.images[b]) == want
            })
        })
    }

    /// Dense `d×d` realization: `U|0⟩` is the joint `+1` eigenvector of the
    /// signed `Z` images and `U|b⟩ = Π_j X'_j^{b_j} U|0⟩`.
    pub fn dense(&self) -> CMat {
        let n = self.n;
        let d = 1usize << n;
        let signed = |k: usize, v: &DVector<C64>| {
            let w = self.images[k].apply(v);
            if self.signs[k] {
                -w
            } else {
                w
            }
        };
        let mut psi = DVector::zeros(d);
        for start in 0..d {
            let mut v = DVector::zeros(d);
            v[start] = ONE;
            for j in 0..n as usize {
                v = (&v + signed(n as usize + j, &v)).scale(0.5);
            }
            if v.norm() > 1e-6 {
                psi = v.normalize();
                break;
            }
        }
        let mut u = CMat::zeros(d, d);
        for b in 0..d {
            let mut col = psi.clone();
            for j in 0..n as usize {
                if (b >> (n as usize - 1 - j)) & 1 == 1 {
                    col = signed(j, &col);
                }
            }
            u.set_column(b, &col);
        }
        u
    }
}

/// Uniform Clifford element: symplectic pairs drawn sequentially (each
/// uniform among vectors with the required commutation relations to the
/// earlier pairs), then uniform sign bits (the Pauli layer).
pub fn sample_clifford<R: Rng>(n: u32, rng: &mut R) -> CliffordElement {
    let mask = (1u32 << n) - 1;
    let mut xs: Vec<Pauli> = Vec::with_capacity(n as usize);
    let mut zs: Vec<Pauli> = Vec::with_capacity(n as usize);
    let random = |rng: &mut R| Pauli { x: rng.random::<u32>() & mask, z: rng.random::<u32>() & mask };
    for _ in 0..n {
        let orth = |p: Pauli, xs: &[Pauli], zs: &[Pauli]| {
            xs.iter().chain(zs.iter()).all(|q| p.symplectic(*q) == 0)
        };
        let x = loop {
            let p = random(rng);
            if p != Pauli::IDENTITY && orth(p, &xs, &zs) {
                break p;
            }
        };
        let z = loop {
            let p = random(rng);
            if x.symplectic(p) == 1 && orth(p, &xs, &zs) {
                break p;
            }
        };
        xs.push(x);
        zs.push(z);
    }
    let signs = (0..2 * n).map(|_| rng.random::<bool>()).collect();
    xs.extend(zs);
    CliffordElement { n, images: xs, signs }
}

/// All 24 single-qubit Clifford elements (6 symplectic maps × 4 signs).
pub fn enumerate_clifford_n1() -> Vec<CliffordElement> {
    let nonzero = [Pauli { x: 1, z: 0 }, Pauli { x: 0, z: 1 }, Pauli { x: 1, z: 1 }];
    let mut out = Vec::with_capacity(24);
    for &a in &nonzero {
        for &b in &nonzero {
            if a.symplectic(b) != 1 {
                continue;
            }
            for s in 0..4u8 {
                out.push(CliffordElement { n: 1, images: vec![a, b], signs: vec![s & 1 == 1, s & 2 == 2] });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Haar and doped ensembles
// ---------------------------------------------------------------------------

/// Haar unitary: QR of a complex Ginibre matrix with the phases of `diag R`
/// moved into `Q`.
pub fn sample_haar<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// `diag(1, e^{−iθ})` on qubit 1.
pub fn theta_gate(n: u32, theta: f64) -> CMat {
    let d = 1usize << n;
    let ph = C64::from_polar(1.0, -theta);
    CMat::from_fn(d, d, |i, j| {
        if i != j {
            ZERO
        } else if (i >> (n - 1)) & 1 == 1 {
            ph
        } else {
            ONE
        }
    })
}

/// `C_k Θ C_{k−1} ⋯ Θ C_0` with independent uniform Clifford layers.
pub fn sample_doped<R: Rng>(n: u32, k: u64, theta: f64, rng: &mut R) -> CMat {
    let gate = theta_gate(n, theta);
    let mut u = sample_clifford(n, rng).dense();
    for _ in 0..k {
        u = sample_clifford(n, rng).dense() * &gate * u;
    }
    u
}

/// Ensembles the oracle can sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampledEnsemble {
    Haar,
    Clifford,
    Doped { k: u64, theta: f64 },
}

impl SampledEnsemble {
    pub fn sample<R: Rng>(&self, n: u32, rng: &mut R) -> CMat {
        match *self {
            SampledEnsemble::Haar => sample_haar(1 << n, rng),
            SampledEnsemble::Clifford => sample_clifford(n, rng).dense(),
            SampledEnsemble::Doped { k, theta } => sample_doped(n, k, theta, rng),
        }
    }
}

// ---------------------------------------------------------------------------
// Probe operators
// ---------------------------------------------------------------------------

fn m2(a: [[f64; 2]; 2]) -> CMat {
    CMat::from_fn(2, 2, |i, j| C64::new(a[i][j], 0.0))
}

fn kron4(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    kron(&kron(a, b), &kron(c, d))
}

fn swap2() -> CMat {
    let mut s = CMat::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            s[(2 * b + a, 2 * a + b)] = ONE;
        }
    }
    s
}

/// Per-qubit 16×16 operators across the four slots (slot 1 most
/// significant), the probe permutation and side, and the prefactor.
fn probe_operators(kind: ProbeKind, n: u32, split: u32) -> (Vec<CMat>, Perm, bool, f64) {
    let i = m2([[1.0, 0.0], [0.0, 1.0]]);
    let x = m2([[0.0, 1.0], [1.0, 0.0]]);
    let z = m2([[1.0, 0.0], [0.0, -1.0]]);
    let p0 = m2([[1.0, 0.0], [0.0, 0.0]]);
    let p1 = m2([[0.0, 0.0], [0.0, 1.0]]);
    let i4 = kron(&i, &i);
    let sw = swap2();
    let idq = kron4(&i, &i, &i, &i);
    let d = (1u64 << n) as f64;
    let nn = n as usize;
    let a = split as usize;
    let pairs = (&kron(&p0, &p0) + &kron(&p1, &p1)).clone();
    let basis = kron(&pairs, &kron(&p0, &p0));
    let p = kind.permutation();
    match kind {
        ProbeKind::Loschmidt2 => {
            let mut ops = vec![kron4(&z, &z, &z, &z)];
            ops.extend(vec![idq; nn - 1]);
            (ops, p, true, 1.0 / (d * d))
        }
        ProbeKind::Otoc4 => {
            let mut ops = vec![kron4(&x, &x, &i, &i)];
            ops.extend(vec![idq.clone(); nn - 2]);
            ops.push(kron4(&i, &i, &z, &z));
            (ops, p, true, 1.0 / d)
        }
        ProbeKind::Purity2Renyi => {
            let mut ops = vec![kron(&kron(&p0, &p0), &sw); a];
            ops.extend(vec![kron4(&p0, &p0, &i, &i); nn - a]);
            (ops, p, false, 1.0)
        }
        ProbeKind::TripartiteC2 => {
            let mut ops = vec![kron(&sw, &sw); a];
            ops.extend(vec![idq; nn - a]);
            (ops, p, false, 1.0)
        }
        ProbeKind::TripartiteCD => {
            let mut ops = vec![kron(&sw, &i4); a];
            ops.extend(vec![kron(&i4, &sw); nn - a]);
            (ops, p, false, 1.0)
        }
        ProbeKind::CoherenceL2 | ProbeKind::WydCB => (vec![basis; nn], p, true, 1.0),
        ProbeKind::WydPauli => {
            let mut ops = vec![kron4(&z, &z, &p0, &p0)];
            ops.extend(vec![kron4(&i, &i, &p0, &p0); nn - 1]);
            (ops, p, true, 1.0)
        }
    }
}

/// A probe as a sparse list of `W^{⊗2,2}` matrix elements:
/// `value = Σ v · W[a₁,b₁] W[a₂,b₂] W̄[b₃,a₃] W̄[b₄,a₄]`.
#[derive(Clone, Debug)]
pub struct DenseProbe {
    pub kind: ProbeKind,
    pub n: u32,
    entries: Vec<([u16; 4], [u16; 4], C64)>,
}

impl DenseProbe {
    /// `split` is the size of subsystem `A` (or `C`) for the split probes.
    pub fn new(kind: ProbeKind, n: u32, split: u32) -> Result<DenseProbe> {
        ensure!((2..=MAX_ORACLE_QUBITS + 1).contains(&n), "dense probes need 2 ≤ N ≤ {}", MAX_ORACLE_QUBITS + 1);
        ensure!(split >= 1 && split < n, "split {split} must leave both parts non-empty");
        let (ops, p, left, pre) = probe_operators(kind, n, split);
        // Every per-qubit operator has at most one nonzero per column.
        let mut maps: Vec<Vec<Option<(usize, C64)>>> = Vec::with_capacity(ops.len());
        for op in &ops {
            let mut map = vec![None; 16];
            for c in 0..16 {
                for r in 0..16 {
                    let v = op[(r, c)];
                    if v != ZERO {
                        ensure!(map[c].is_none(), "probe operator is not monomial");
                        map[c] = Some((r, v));
                    }
                }
            }
            maps.push(map);
        }
        let d = 1usize << n;
        let mut entries = Vec::new();
        for c in 0..d.pow(4) {
            let cs = split4(c, d);
            let mut rs = [0usize; 4];
            let mut v = C64::new(pre, 0.0);
            for (q, map) in maps.iter().enumerate() {
                let bit = n as usize - 1 - q;
                let col = (0..4).fold(0, |acc, j| (acc << 1) | ((cs[j] >> bit) & 1));
                match map[col] {
                    Some((row, val)) => {
                        v *= val;
                        for (j, r) in rs.iter_mut().enumerate() {
                            *r |= ((row >> (3 - j)) & 1) << bit;
                        }
                    }
                    None => {
                        v = ZERO;
                        break;
                    }
                }
            }
            if v == ZERO {
                continue;
            }
            // O|c⟩ = v|r⟩.
            let (row, col) = if left {
                // Tr[W4 T_P O] = Σ_c v W4[c, T_P r]
                (cs, permute(p, rs))
            } else {
                // Tr[T_P W4 O] = Σ_c v W4[T_P⁻¹ c, r]
                (permute(p.inverse(), cs), rs)
            };
            let to16 = |a: [usize; 4]| a.map(|x| x as u16);
            entries.push((to16(row), to16(col), v));
        }
        Ok(DenseProbe { kind, n, entries })
    }

    /// Probe value for the evolved unitary `W = U V U†`.
    pub fn value(&self, w: &CMat) -> f64 {
        let mut acc = ZERO;
        for (a, b, v) in &self.entries {
            let [a1, a2, a3, a4] = a.map(usize::from);
            let [b1, b2, b3, b4] = b.map(usize::from);
            acc += v * w[(a1, b1)] * w[(a2, b2)] * w[(b3, a3)].conj() * w[(b4, a4)].conj();
        }
        if self.kind.has_offset() {
            1.0 - acc.re
        } else {
            acc.re
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Direct textbook formulas, used to cross-check [`DenseProbe`].
pub mod direct {
    use super::*;

    fn z1(n: u32) -> CMat {
        Pauli::single(n, 0, false, true).matrix(n)
    }

    /// `|Tr[Z₁ W Z₁ W†]|²/d²`.
    pub fn loschmidt2(w: &CMat) -> f64 {
        let n = w.nrows().trailing_zeros();
        let z = z1(n);
        let d = w.nrows() as f64;
        ((&z * w * &z * w.adjoint()).trace().norm() / d).powi(2)
    }

    /// `Re Tr[X₁ W Z_N W† X₁ W Z_N W†]/d`.
    pub fn otoc4(w: &CMat) -> f64 {
        let n = w.nrows().trailing_zeros();
        let a = Pauli::single(n, 0, true, false).matrix(n);
        let b = Pauli::single(n, n - 1, false, true).matrix(n);
        let bt = w * b * w.adjoint();
        let m = &a * &bt;
        (&m * &m).trace().re / w.nrows() as f64
    }

    /// `W|0⟩`.
    pub fn state(w: &CMat) -> DVector<C64> {
        w.column(0).into_owned()
    }

    /// `Tr ρ_A²` with `A` the first `a` qubits.
    pub fn purity(w: &CMat, a: u32) -> f64 {
        let psi = state(w);
        let n = w.nrows().trailing_zeros();
        let (da, db) = (1usize << a, 1usize << (n - a));
        let m = CMat::from_fn(da, db, |i, j| psi[i * db + j]);
        let rho = &m * m.adjoint();
        (&rho * &rho).trace().re
    }

    /// `1 − Σ_i |⟨i|ψ⟩|⁴`.
    pub fn coherence(w: &CMat) -> f64 {
        1.0 - state(w).iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>()
    }

    /// `1 − ⟨ψ|Z₁|ψ⟩²`.
    pub fn wyd_pauli(w: &CMat) -> f64 {
        let psi = state(w);
        let n = w.nrows().trailing_zeros();
        let ez = (psi.adjoint() * z1(n) * &psi)[(0, 0)].re;
        1.0 - ez * ez
    }
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Running mean and variance with associative merging.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Stats) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        self.mean += delta * o.n as f64 / n as f64;
        self.m2 += o.m2 + delta * delta * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Run `samples` draws in fixed-size streams and merge in stream order.
fn chunked<T, F, M>(samples: usize, seed: u64, init: T, work: F, merge: M) -> T
where
    T: Send + Sync + Clone,
    F: Fn(&mut ChaCha8Rng, usize, &mut T) + Sync,
    M: Fn(&mut T, &T),
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut acc = init.clone();
            work(&mut rng, count, &mut acc);
            acc
        })
        .collect();
    let mut total = init;
    for p in &parts {
        merge(&mut total, p);
    }
    total
}

// ---------------------------------------------------------------------------
// Monte-Carlo twirl
// ---------------------------------------------------------------------------

/// Sampled probe averages on a time grid.
#[derive(Clone, Debug)]
pub struct TwirlGrid {
    pub times: Vec<f64>,
    pub kinds: Vec<ProbeKind>,
    /// `cells[t][k]`.
    pub cells: Vec<Vec<Stats>>,
}

/// `E_G[probe(G V(t) G†)]` for `V(t) = Σ_i e^{−iE_i t}|i⟩⟨i|`.
pub fn mc_twirl(
    spectrum: &Spectrum,
    times: &[f64],
    ensemble: SampledEnsemble,
    kinds: &[ProbeKind],
    split: u32,
    samples: usize,
    seed: u64,
) -> Result<TwirlGrid> {
    let d = spectrum.energies.len();
    ensure!(d.is_power_of_two(), "spectrum length {d} is not a power of two");
    let n = d.trailing_zeros();
    ensure!((2..=MAX_ORACLE_QUBITS).contains(&n), "oracle needs 2 ≤ N ≤ {MAX_ORACLE_QUBITS}, got {n}");
    ensure!(samples >= 1000, "at least 10³ samples required, got {samples}");
    let probes: Vec<DenseProbe> = kinds.iter().map(|&k| DenseProbe::new(k, n, split)).collect::<Result<_>>()?;
    let phases: Vec<Vec<C64>> = times
        .iter()
        .map(|&t| spectrum.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect())
        .collect();
    let init = vec![vec![Stats::default(); kinds.len()]; times.len()];
    let cells = chunked(
        samples,
        seed,
        init,
        |rng, count, acc| {
            for _ in 0..count {
                let u = ensemble.sample(n, rng);
                let ud = u.adjoint();
                for (ti, ph) in phases.iter().enumerate() {
                    let uv = CMat::from_fn(d, d, |i, j| u[(i, j)] * ph[j]);
                    let w = uv * &ud;
                    for (pi, p) in probes.iter().enumerate() {
                        acc[ti][pi].push(p.value(&w));
                    }
                }
            }
        },
        |a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    x.merge(y);
                }
            }
        },
    );
    Ok(TwirlGrid { times: times.to_vec(), kinds: kinds.to_vec(), cells })
}

/// Sampled second moment `E_G[(GVG†) ⊗ (GVG†)†]` as `d²×d²` entry
/// statistics (real and imaginary parts), row-major.
pub fn mc_second_moment(v: &CMat, ensemble: SampledEnsemble, samples: usize, seed: u64) -> Result<Vec<(Stats, Stats)>> {
    let d = v.nrows();
    let n = d.trailing_zeros();
    ensure!(n >= 1 && n <= MAX_ORACLE_QUBITS, "second-moment oracle needs 1 ≤ N ≤ {MAX_ORACLE_QUBITS}");
    let init = vec![(Stats::default(), Stats::default()); d.pow(4)];
    Ok(chunked(
        samples,
        seed,
        init,
        |rng, count, acc| {
            for _ in 0..count {
                let u = ensemble.sample(n, rng);
                let w = &u * v * u.adjoint();
                let m = kron(&w, &w.adjoint());
                for (k, (re, im)) in acc.iter_mut().enumerate() {
                    let c = m[(k / (d * d), k % (d * d))];
                    re.push(c.re);
                    im.push(c.im);
                }
            }
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0.merge(&y.0);
                x.1.merge(&y.1);
            }
        },
    ))
}

/// Exact second moment over an explicit list of unitaries.
pub fn exact_second_moment(v: &CMat, group: &[CMat]) -> CMat {
    let d = v.nrows();
    let mut acc = CMat::zeros(d * d, d * d);
    for u in group {
        let w = u * v * u.adjoint();
        acc += kron(&w, &w.adjoint());
    }
    acc.unscale(group.len() as f64)
}

// ---------------------------------------------------------------------------
// Spectral ensembles
// ---------------------------------------------------------------------------

/// Spectra the oracle can sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralEnsemble {
    /// i.i.d. normal energies with variance 1/4.
    Gde,
    /// Eigenvalues of `(A + A†)/(2√d)`, `A` complex Gaussian with
    /// `E|A_ij|² = 2`, randomly assigned to basis strings.
    Gue,
}

pub fn sample_gde<R: Rng>(d: usize, rng: &mut R) -> Spectrum {
    let normal = Normal::new(0.0, 0.5).expect("valid normal");
    Spectrum { energies: (0..d).map(|_| normal.sample(rng)).collect() }
}

pub fn sample_gue<R: Rng>(d: usize, rng: &mut R) -> Spectrum {
    let a = CMat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let h = (&a + a.adjoint()).unscale(2.0 * (d as f64).sqrt());
    let mut energies: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    energies.shuffle(rng);
    Spectrum { energies }
}

/// Sampled `g₂, g₂(2t), Re g₃, g₄, g̃₃` at each time.
#[derive(Clone, Copy, Debug, Default)]
pub struct FormFactorStats {
    pub g2: Stats,
    pub g2_2t: Stats,
    pub g3_re: Stats,
    pub g4: Stats,
    pub g3tilde: Stats,
}

pub fn mc_form_factors(
    ensemble: SpectralEnsemble,
    d: usize,
    times: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<FormFactorStats>> {
    ensure!(d.is_power_of_two() && d >= 2, "d must be a power of two ≥ 2");
    let init = vec![FormFactorStats::default(); times.len()];
    Ok(chunked(
        samples,
        seed,
        init,
        |rng, count, acc| {
            for _ in 0..count {
                let s = match ensemble {
                    SpectralEnsemble::Gde => sample_gde(d, rng),
                    SpectralEnsemble::Gue => sample_gue(d, rng),
                };
                for (st, &t) in acc.iter_mut().zip(times) {
                    let ff = sff_explicit(&s, t);
                    st.g2.push(ff.g2);
                    st.g2_2t.push(ff.g2_2t);
                    st.g3_re.push(ff.g3_re);
                    st.g4.push(ff.g4);
                    st.g3tilde.push(ff.g3tilde.unwrap_or(f64::NAN));
                }
            }
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.g2.merge(&y.g2);
                x.g2_2t.merge(&y.g2_2t);
                x.g3_re.merge(&y.g3_re);
                x.g4.merge(&y.g4);
                x.g3tilde.merge(&y.g3tilde);
            }
        },
    ))
}

// ---------------------------------------------------------------------------
// Toric code
// ---------------------------------------------------------------------------

/// Star (`X`) and plaquette (`Z`) stabilizers of the `N×N` toric code.
/// Horizontal edge `(x,y)` is qubit `yN+x`, vertical edge `(x,y)` is qubit
/// `N² + yN + x`.
pub fn toric_stabilizers(n: u32) -> Result<Vec<Pauli>> {
    ensure!((2..=4).contains(&n), "dense toric oracle needs 2 ≤ N ≤ 4");
    let q = 2 * n * n;
    let h = |x: u32, y: u32| (y % n) * n + (x % n);
    let v = |x: u32, y: u32| n * n + (y % n) * n + (x % n);
    let mask = |edges: [u32; 4]| edges.iter().fold(0u32, |m, &e| m | 1 << (q - 1 - e));
    let mut out = Vec::new();
    for y in 0..n {
        for x in 0..n {
            let star = mask([h(x, y), h(x + n - 1, y), v(x, y), v(x, y + n - 1)]);
            out.push(Pauli { x: star, z: 0 });
        }
    }
    for y in 0..n {
        for x in 0..n {
            let plaq = mask([h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)]);
            out.push(Pauli { x: 0, z: plaq });
        }
    }
    Ok(out)
}

/// Dense `H = −J Σ_s S_s` (real symmetric; stars are real `X` strings,
/// plaquettes real `Z` strings).
pub fn toric_hamiltonian_dense(n: u32, j: f64) -> Result<DMatrix<f64>> {
    let stabs = toric_stabilizers(n)?;
    let q = 2 * n * n;
    ensure!(q <= 12, "dense toric Hamiltonian limited to 12 qubits");
    let d = 1usize << q;
    let mut h = DMatrix::<f64>::zeros(d, d);
    for s in &stabs {
        for b in 0..d {
            let sign = if (s.z & b as u32).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            h[(b ^ s.x as usize, b)] -= j * sign;
        }
    }
    Ok(h)
}

/// Spectrum by dense diagonalization.
pub fn toric_spectrum_dense(n: u32, j: f64) -> Result<Spectrum> {
    let h = toric_hamiltonian_dense(n, j)?;
    let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    Ok(Spectrum { energies: e })
}

/// Pauli expansion `V(t) = Π_s (cos Jt + i sin Jt · S_s)`.
pub fn toric_pauli_coefficients(n: u32, j: f64, t: f64) -> Result<BTreeMap<Pauli, C64>> {
    let stabs = toric_stabilizers(n)?;
    let (c, s) = ((j * t).cos(), (j * t).sin());
    let mut acc: BTreeMap<Pauli, C64> = BTreeMap::new();
    acc.insert(Pauli::IDENTITY, ONE);
    for st in &stabs {
        let mut next: BTreeMap<Pauli, C64> = BTreeMap::new();
        for (p, coef) in &acc {
            *next.entry(*p).or_insert(ZERO) += coef * c;
            let (k, r) = p.mul(*st);
            *next.entry(r).or_insert(ZERO) += coef * C64::new(0.0, s) * ipow(k);
        }
        acc = next;
    }
    Ok(acc)
}

/// `g̃₃ = d⁻² Σ_P |Tr[V P]|⁴ = d² Σ_P |v_P|⁴` from the Pauli expansion.
pub fn toric_g3tilde_pauli(n: u32, j: f64, t: f64) -> Result<f64> {
    let coef = toric_pauli_coefficients(n, j, t)?;
    let d = (1u64 << (2 * n * n)) as f64;
    Ok(d * d * coef.values().map(|c| c.norm_sqr().powi(2)).sum::<f64>())
}

/// The levels of [`ToricCode`] recovered from the dense spectrum, for
/// cross-checks.
pub fn toric_level_counts(n: u32, j: f64) -> Result<Vec<(f64, u64)>> {
    let s = toric_spectrum_dense(n, j)?;
    let mut out: Vec<(f64, u64)> = Vec::new();
    for e in s.energies {
        let r = e.round();
        if (e - r).abs() > 1e-9 {
            bail!("non-integer toric level {e}");
        }
        match out.last_mut() {
            Some((x, c)) if *x == r => *c += 1,
            _ => out.push((r, 1)),
        }
    }
    let _ = ToricCode::new(n, j)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use isotwirl_core::perm_algebra::{trace_of_perm, ALL};

    fn rng() -> ChaCha8Rng {
        stream_rng(7, 0)
    }

    fn unitarity(u: &CMat) -> f64 {
        let d = u.nrows();
        (u.adjoint() * u - CMat::identity(d, d)).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn perm_matrices_compose_and_trace() {
        for d in [2usize, 4] {
            for &p in ALL.iter() {
                let tp = build_perm_dense(p, d).unwrap();
                let tr = tp.trace().re;
                assert_eq!(tr as i64, trace_of_perm(p, d as u64).unwrap().to_string().parse::<i64>().unwrap());
            }
        }
        let (a, b) = (ALL[5], ALL[17]);
        let lhs = build_perm_dense(a, 2).unwrap() * build_perm_dense(b, 2).unwrap();
        assert_eq!(lhs, build_perm_dense(a.compose(b), 2).unwrap());
    }

    #[test]
    fn swap_trick() {
        let mut r = rng();
        let a = sample_haar(4, &mut r);
        let b = sample_haar(4, &mut r);
        let id = CMat::identity(4, 4);
        let s = Perm::from_cycles(&[&[1, 2]]);
        let lhs = perm_trace_product(s, [&a, &b, &id, &id]);
        assert!((lhs - (&a * &b).trace() * 16.0).norm() < 1e-10);
    }

    #[test]
    fn q_is_a_projector_commuting_with_permutations() {
        let q = build_q_dense_n1();
        assert!((&q * &q - &q).norm() < 1e-12);
        assert!((q.trace().re - 4.0).abs() < 1e-12);
        for &p in ALL.iter() {
            let t = build_perm_dense(p, 2).unwrap();
            assert!((&q * &t - &t * &q).norm() < 1e-12);
        }
    }

    #[test]
    fn pauli_multiplication_matches_matrices() {
        for a in 0..16u32 {
            for b in 0..16u32 {
                let p = Pauli { x: a & 3, z: a >> 2 };
                let o = Pauli { x: b & 3, z: b >> 2 };
                let (k, r) = p.mul(o);
                let lhs = p.matrix(2) * o.matrix(2);
                assert!((lhs - r.matrix(2) * ipow(k)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn clifford_elements_map_paulis_to_paulis() {
        let mut r = rng();
        for n in 1..=3 {
            for _ in 0..20 {
                let c = sample_clifford(n, &mut r);
                assert!(c.is_symplectic());
                let u = c.dense();
                assert!(unitarity(&u) < 1e-12);
                for q in 0..n {
                    for (k, (x, z)) in [(q, (true, false)), (n + q, (false, true))] {
                        let g = Pauli::single(n, q, x, z).matrix(n);
                        let img = c.images[k as usize].matrix(n).scale(if c.signs[k as usize] { -1.0 } else { 1.0 });
                        assert!((&u * g * u.adjoint() - img).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_gives_24_distinct_projective_elements() {
        let els: Vec<CMat> = enumerate_clifford_n1().iter().map(|c| c.dense()).collect();
        assert_eq!(els.len(), 24);
        for i in 0..24 {
            for j in 0..i {
                // Projectively equal iff |Tr[U_i† U_j]| = d.
                assert!((els[i].adjoint() * &els[j]).trace().norm() < 2.0 - 1e-9);
            }
        }
    }

    #[test]
    fn haar_is_unitary_and_one_design() {
        let mut r = rng();
        let a = CMat::from_fn(4, 4, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let mut acc = CMat::zeros(4, 4);
        let m = 4000;
        for _ in 0..m {
            let u = sample_haar(4, &mut r);
            assert!(unitarity(&u) < 1e-12);
            acc += &u * &a * u.adjoint();
        }
        acc.unscale_mut(m as f64);
        let target = CMat::identity(4, 4) * (a.trace() / 4.0);
        assert!((acc - target).norm() < 0.6);
    }

    #[test]
    fn doped_with_zero_angle_is_clifford() {
        let mut r1 = stream_rng(3, 1);
        let mut r2 = stream_rng(3, 1);
        let u = sample_doped(2, 0, 0.3, &mut r1);
        let c = sample_clifford(2, &mut r2).dense();
        assert!((u - c).norm() < 1e-12);
        let g = theta_gate(2, 0.0);
        assert!((g - CMat::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn dense_probes_match_direct_formulas() {
        let mut r = rng();
        for n in [2u32, 3] {
            for _ in 0..5 {
                let w = sample_haar(1 << n, &mut r);
                let val = |k| DenseProbe::new(k, n, 1).unwrap().value(&w);
                assert!((val(ProbeKind::Loschmidt2) - direct::loschmidt2(&w)).abs() < 1e-12);
                assert!((val(ProbeKind::Otoc4) - direct::otoc4(&w)).abs() < 1e-12);
                assert!((val(ProbeKind::Purity2Renyi) - direct::purity(&w, 1)).abs() < 1e-12);
                assert!((val(ProbeKind::CoherenceL2) - direct::coherence(&w)).abs() < 1e-12);
                assert!((val(ProbeKind::WydCB) - direct::coherence(&w)).abs() < 1e-12);
                assert!((val(ProbeKind::WydPauli) - direct::wyd_pauli(&w)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_probes_at_identity() {
        let w = CMat::identity(4, 4);
        for (k, v) in [
            (ProbeKind::Loschmidt2, 1.0),
            (ProbeKind::Otoc4, 1.0),
            (ProbeKind::Purity2Renyi, 1.0),
            (ProbeKind::CoherenceL2, 0.0),
            (ProbeKind::WydPauli, 0.0),
        ] {
            assert!((DenseProbe::new(k, 2, 1).unwrap().value(&w) - v).abs() < 1e-14, "{k:?}");
        }
    }

    #[test]
    fn stats_merge_is_associative() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Stats::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Stats::default();
        let mut b = Stats::default();
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-14);
        assert!((a.variance() - all.variance()).abs() < 1e-13);
    }

    #[test]
    fn toric_dense_levels_match_counting() {
        let counts = toric_level_counts(2, 1.0).unwrap();
        let want = ToricCode::new(2, 1.0).unwrap().levels();
        assert_eq!(counts.len(), want.len());
        for ((e, c), (we, wc)) in counts.iter().zip(&want) {
            assert_eq!((*e, *c), (*we, *wc));
        }
    }

    #[test]
    fn toric_pauli_sum_is_normalized() {
        let coef = toric_pauli_coefficients(2, 1.0, 0.37).unwrap();
        let norm: f64 = coef.values().map(|c| c.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_across_thread_counts() {
        let s = Spectrum { energies: vec![0.3, -0.1, 0.8, -1.0] };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_twirl(&s, &[0.5], SampledEnsemble::Clifford, &[ProbeKind::Loschmidt2], 1, 1200, 11).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.cells[0][0], b.cells[0][0]);
    }
}
