//! Fourth-moment twirl coefficients for the Haar, Clifford and T-doped
//! Clifford ensembles.
//!
//! A twirled probe `⟨Tr[T_P O^{⊗4}-structure · G†^{⊗4} V^{⊗2,2} G^{⊗4}]⟩`
//! reduces to two 24-vectors attached to the probe,
//! `H_π = Tr[T_π O]` and `Qv_π = Tr[T_π Q O]`, and a [`MomentCoeffs`]
//! `(a, y)` attached to the evolution: `value = a·Qv + y·H`.
//!
//! * Haar: `a = 0`, `y = W c`.
//! * Clifford: `a = W⁺q − W⁻q⊥`, `y = W⁻q⊥` with `q⊥ = c − q`.
//! * `k` doped layers: `a_k = Ξ^k a`, `y_k = y + Λ Σ_{i<k} Ξ^i a`, with
//!   `Ξ = (W⁺+W⁻)K⁽²⁾ − W⁻K⁽¹⁾` and `Λ = W⁻(K⁽¹⁾ − K⁽²⁾)`.
//!
//! `c` and `q` are the spectral vectors `Tr[T_π V^{⊗2,2}]` and
//! `Tr[T_π Q V^{⊗2,2}]`; both are linear in `(g₄, Re g₃, g₂, g₂(2t), g̃₃, 1)`,
//! which makes the Haar and Clifford values exact [`LinearForm`]s.

use alloc::vec::Vec;

use nalgebra::{SMatrix, SVector};
use num_bigint::BigInt;
use num_rational::BigRational;
// f64 math comes from `Float` under no_std; test builds link std and get it inherently.
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};

use crate::linalg::{rat, to_f64, RatMatrix};
use crate::perm_algebra::{CycleClass, FineClass, Perm, ALL};
use crate::spectral::FormFactors;
use crate::weingarten::{weingarten_by_characters, GramKind, WeingartenTable};
use crate::{qubits_of, Error, Result};

pub type Mat24 = SMatrix<f64, 24, 24>;
pub type Vec24 = SVector<f64, 24>;

/// The spectral quantities a twirled probe can depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spectral {
    G4,
    G3Re,
    G2,
    G22,
    G3Tilde,
    One,
}

impl Spectral {
    pub const ALL: [Spectral; 6] = [
        Spectral::G4,
        Spectral::G3Re,
        Spectral::G2,
        Spectral::G22,
        Spectral::G3Tilde,
        Spectral::One,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Spectral::G4 => "g4",
            Spectral::G3Re => "Re g3",
            Spectral::G2 => "g2",
            Spectral::G22 => "g2(2t)",
            Spectral::G3Tilde => "g3~",
            Spectral::One => "1",
        }
    }

    fn value(self, ff: &FormFactors) -> Option<f64> {
        Some(match self {
            Spectral::G4 => ff.g4,
            Spectral::G3Re => ff.g3_re,
            Spectral::G2 => ff.g2,
            Spectral::G22 => ff.g2_2t,
            Spectral::G3Tilde => ff.g3tilde?,
            Spectral::One => 1.0,
        })
    }
}

/// An exact linear combination of [`Spectral`] quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm(pub [BigRational; 6]);

impl LinearForm {
    pub fn zero() -> LinearForm {
        LinearForm(core::array::from_fn(|_| BigRational::zero()))
    }

    pub fn term(s: Spectral, coef: BigRational) -> LinearForm {
        let mut f = LinearForm::zero();
        f.0[s as usize] = coef;
        f
    }

    pub fn coef(&self, s: Spectral) -> &BigRational {
        &self.0[s as usize]
    }

    pub fn add_scaled(&mut self, other: &LinearForm, k: &BigRational) {
        if k.is_zero() {
            return;
        }
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            if !b.is_zero() {
                *a += b * k;
            }
        }
    }

    pub fn scaled(&self, k: &BigRational) -> LinearForm {
        LinearForm(core::array::from_fn(|i| &self.0[i] * k))
    }

    pub fn sub(&self, o: &LinearForm) -> LinearForm {
        LinearForm(core::array::from_fn(|i| &self.0[i] - &o.0[i]))
    }

    pub fn needs_g3tilde(&self) -> bool {
        !self.0[Spectral::G3Tilde as usize].is_zero()
    }

    /// Evaluate with the form factors converted exactly to rationals, so the
    /// only rounding is the final conversion to `f64`.
    pub fn evaluate(&self, ff: &FormFactors) -> Result<f64> {
        let mut acc = BigRational::zero();
        for s in Spectral::ALL {
            let c = &self.0[s as usize];
            if c.is_zero() {
                continue;
            }
            let v = s.value(ff).ok_or(Error::NotStabilizerValid)?;
            let x = BigRational::from_float(v).ok_or(Error::Invalid("non-finite form factor"))?;
            acc += c * x;
        }
        Ok(to_f64(&acc))
    }
}

/// `c_π = Tr[T_π V^{⊗2,2}]` as linear forms.
pub fn c_vector_symbolic(d: u64) -> Vec<LinearForm> {
    let x = rat(d as i64);
    ALL.iter()
        .map(|p| match p.fine_class() {
            FineClass::Id => LinearForm::term(Spectral::G4, rat(1)),
            FineClass::Swap12 | FineClass::Swap34 => LinearForm::term(Spectral::G3Re, rat(1)),
            FineClass::OtherTwo => LinearForm::term(Spectral::G2, x.clone()),
            FineClass::ThreeFix12 | FineClass::ThreeFix34 => LinearForm::term(Spectral::G2, rat(1)),
            FineClass::CrossingFour | FineClass::OtherFour => LinearForm::term(Spectral::One, x.clone()),
            FineClass::Swap12Swap34 => LinearForm::term(Spectral::G22, rat(1)),
            FineClass::OtherTwoTwo => LinearForm::term(Spectral::One, &x * &x),
        })
        .collect()
}

/// `q_π = Tr[T_π Q V^{⊗2,2}]` for a diagonal (stabilizer) `V`, as linear
/// forms. Requires `d = 2^N`.
pub fn q_vector_symbolic(d: u64) -> Result<Vec<LinearForm>> {
    qubits_of(d)?;
    let x = rat(d as i64);
    let inv = x.recip();
    Ok(ALL
        .iter()
        .map(|p| match p.fine_class() {
            FineClass::Id | FineClass::Swap12Swap34 | FineClass::OtherTwoTwo => {
                LinearForm::term(Spectral::G3Tilde, rat(1))
            }
            FineClass::OtherTwo | FineClass::OtherFour => LinearForm::term(Spectral::One, x.clone()),
            FineClass::Swap12 | FineClass::Swap34 | FineClass::CrossingFour => {
                LinearForm::term(Spectral::G22, inv.clone())
            }
            FineClass::ThreeFix12 | FineClass::ThreeFix34 => LinearForm::term(Spectral::One, rat(1)),
        })
        .collect())
}

fn eval_vector(forms: &[LinearForm], ff: &FormFactors) -> Result<Vec24> {
    let mut v = Vec24::zeros();
    for (i, f) in forms.iter().enumerate() {
        let mut acc = 0.0;
        for s in Spectral::ALL {
            let c = &f.0[s as usize];
            if !c.is_zero() {
                acc += to_f64(c) * s.value(ff).ok_or(Error::NotStabilizerValid)?;
            }
        }
        v[i] = acc;
    }
    Ok(v)
}

/// Numeric `c` vector.
pub fn c_vector(ff: &FormFactors) -> Vec24 {
    eval_vector(&c_vector_symbolic(ff.d), ff).expect("c vector needs no g3~")
}

/// Numeric `q` vector; rejects form factors without `g̃₃`.
pub fn q_vector_stabilizer(ff: &FormFactors) -> Result<Vec24> {
    if ff.g3tilde.is_none() {
        return Err(Error::NotStabilizerValid);
    }
    eval_vector(&q_vector_symbolic(ff.d)?, ff)
}

/// Which twirling ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ensemble {
    Haar,
    Clifford,
    /// `k` layers of Clifford–Θ–Clifford with `Θ = diag(1, e^{-iθ})` on one
    /// qubit.
    Doped { k: u64, theta: f64 },
}

impl Ensemble {
    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::Haar => "haar",
            Ensemble::Clifford => "clifford",
            Ensemble::Doped { .. } => "doped",
        }
    }
}

/// `value = a·Qv + y·H` for the probe vectors `Qv`, `H`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentCoeffs {
    pub ensemble: Ensemble,
    pub d: u64,
    pub a: Vec24,
    pub y: Vec24,
}

impl MomentCoeffs {
    pub fn apply(&self, h: &Vec24, qv: &Vec24) -> f64 {
        self.a.dot(qv) + self.y.dot(h)
    }
}

/// Weingarten data for one dimension, exact and in `f64`.
#[derive(Clone, Debug)]
pub struct Weights {
    pub d: u64,
    pub plain: WeingartenTable,
    pub plus: Option<WeingartenTable>,
    pub minus: Option<WeingartenTable>,
    pub w: Mat24,
    pub wp: Mat24,
    pub wm: Mat24,
}

fn to_mat24(m: &RatMatrix) -> Mat24 {
    Mat24::from_row_slice(&m.to_f64())
}

impl Weights {
    /// Plain weights for any `d ≥ 2`; the Clifford-projected ones only when
    /// `d = 2^N` (else `wp`, `wm` are zero).
    pub fn new(d: u64) -> Result<Weights> {
        let plain = weingarten_by_characters(GramKind::Plain, d)?;
        let (plus, minus) = if qubits_of(d).is_ok() {
            (
                Some(weingarten_by_characters(GramKind::QProjected, d)?),
                Some(weingarten_by_characters(GramKind::QPerpProjected, d)?),
            )
        } else {
            (None, None)
        };
        let w = to_mat24(&plain.matrix());
        let wp = plus.as_ref().map(|t| to_mat24(&t.matrix())).unwrap_or_else(Mat24::zeros);
        let wm = minus.as_ref().map(|t| to_mat24(&t.matrix())).unwrap_or_else(Mat24::zeros);
        Ok(Weights { d, plain, plus, minus, w, wp, wm })
    }

    fn require_clifford(&self) -> Result<(&WeingartenTable, &WeingartenTable)> {
        match (&self.plus, &self.minus) {
            (Some(p), Some(m)) => Ok((p, m)),
            _ => Err(Error::NotPowerOfTwo { d: self.d }),
        }
    }

    /// `R⁽⁴⁾` coefficients for the Haar average.
    pub fn haar(&self, ff: &FormFactors) -> MomentCoeffs {
        MomentCoeffs { ensemble: Ensemble::Haar, d: self.d, a: Vec24::zeros(), y: self.w * c_vector(ff) }
    }

    /// `R⁽⁴⁾` coefficients for the Clifford average.
    pub fn clifford(&self, ff: &FormFactors) -> Result<MomentCoeffs> {
        self.require_clifford()?;
        let c = c_vector(ff);
        let q = q_vector_stabilizer(ff)?;
        let qp = c - q;
        Ok(MomentCoeffs {
            ensemble: Ensemble::Clifford,
            d: self.d,
            a: self.wp * q - self.wm * qp,
            y: self.wm * qp,
        })
    }

    /// Exact Haar value as a linear form in the form factors.
    pub fn haar_form(&self, h: &[BigRational]) -> LinearForm {
        let u = self.plain.matrix().mul_vec(h);
        combine(&c_vector_symbolic(self.d), &u)
    }

    /// Exact Clifford value as a linear form:
    /// `q·(W⁺Qv + W⁻Qv − W⁻H) + c·(W⁻H − W⁻Qv)`.
    pub fn clifford_form(&self, h: &[BigRational], qv: &[BigRational]) -> Result<LinearForm> {
        let (plus, minus) = self.require_clifford()?;
        let wm = minus.matrix();
        let wp_qv = plus.matrix().mul_vec(qv);
        let wm_qv = wm.mul_vec(qv);
        let wm_h = wm.mul_vec(h);
        let uq: Vec<BigRational> = (0..24).map(|i| &wp_qv[i] + &wm_qv[i] - &wm_h[i]).collect();
        let uc: Vec<BigRational> = (0..24).map(|i| &wm_h[i] - &wm_qv[i]).collect();
        let mut f = combine(&q_vector_symbolic(self.d)?, &uq);
        let g = combine(&c_vector_symbolic(self.d), &uc);
        f.add_scaled(&g, &BigRational::one());
        Ok(f)
    }
}

fn combine(forms: &[LinearForm], u: &[BigRational]) -> LinearForm {
    let mut acc = LinearForm::zero();
    for (f, k) in forms.iter().zip(u) {
        acc.add_scaled(f, k);
    }
    acc
}

/// `Tr[T_π Q̃]` class values of the single-qubit doping kernel, scaled to
/// `d = 2^N` (Id, (ij), (ij)(kl), (ijk), (ijkl)).
pub fn theta2_class_values(d: u64, theta: f64) -> [f64; 5] {
    let x = d as f64;
    let (c, s) = (theta.cos(), theta.sin());
    let c2 = (2.0 * theta).cos();
    let c4 = (4.0 * theta).cos();
    [
        4.0 * (c.powi(4) + s.powi(4)) * x * x,
        4.0 * c2 * c2 * x,
        (3.0 + c4) * x * x,
        4.0 * c4,
        4.0 * c2 * c2 * x,
    ]
}

/// `K⁽²⁾_{τσ} = Tr[T_σ Θ^{⊗4} Q Θ^{†⊗4} Q T_τ] = ½Ω⁺ + ⅛·theta2`, a class
/// function of `τ∘σ`.
pub fn k2_matrix(d: u64, theta: f64) -> Result<Mat24> {
    let n = qubits_of(d)?;
    let t2 = theta2_class_values(d, theta);
    let omega_plus: Vec<f64> = CycleClass::ALL
        .iter()
        .map(|&cl| {
            let single = crate::perm_algebra::q_trace_single(crate::weingarten::class_representative(cl));
            to_f64(&single).powi(n as i32)
        })
        .collect();
    Ok(Mat24::from_fn(|i, j| {
        let cl = ALL[i].compose(ALL[j]).class() as usize;
        0.5 * omega_plus[cl] + 0.125 * t2[cl]
    }))
}

/// The transfer matrix of one doped layer.
#[derive(Clone, Debug)]
pub struct XiMatrix {
    pub d: u64,
    pub theta: f64,
    /// `Ξ = (W⁺+W⁻)K⁽²⁾ − W⁻K⁽¹⁾`.
    pub m: Mat24,
    /// `Λ = W⁻(K⁽¹⁾ − K⁽²⁾)`.
    pub l: Mat24,
}

impl XiMatrix {
    pub fn new(weights: &Weights, theta: f64) -> Result<XiMatrix> {
        weights.require_clifford()?;
        let d = weights.d;
        let k1 = to_mat24(&crate::weingarten::gram(GramKind::QProjected, d)?);
        let k2 = k2_matrix(d, theta)?;
        let m = (weights.wp + weights.wm) * k2 - weights.wm * k1;
        let l = weights.wm * (k1 - k2);
        Ok(XiMatrix { d, theta, m, l })
    }

    /// Closed-form nonzero eigenvalues `(ξ₊, ξ₋, ξ₁)`; `ξ₁` is 4-fold.
    pub fn closed_form_eigenvalues(d: u64, theta: f64) -> (f64, f64, f64) {
        let x = d as f64;
        let c4 = (4.0 * theta).cos();
        let den = 8.0 * (x * x - 1.0);
        let base = (7.0 + c4) * x * x - 8.0;
        let lin = 3.0 * x * (1.0 - c4);
        ((base + lin) / den, (base - lin) / den, base / den)
    }

    /// `Λ T_j = λ T_j` with `λ = sin²2θ/(d²−1)`.
    pub fn lambda(d: u64, theta: f64) -> f64 {
        let s = (2.0 * theta).sin();
        s * s / ((d * d) as f64 - 1.0)
    }

    /// Numerically sorted eigenvalues (descending) of the symmetric part.
    pub fn numeric_eigenvalues(&self) -> Vec<f64> {
        let sym = (self.m + self.m.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(sym);
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// `(Ξ^k, Σ_{i<k} Ξ^i)` by binary doubling.
    pub fn propagator(&self, k: u64) -> Propagator {
        let mut result = Propagator { k: 0, p: Mat24::identity(), s: Mat24::zeros() };
        let mut base = Propagator { k: 1, p: self.m, s: Mat24::identity() };
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.then(&base);
            }
            base = base.then(&base);
            e >>= 1;
        }
        result
    }
}

/// `P = Ξ^k`, `S = Σ_{i<k} Ξ^i`.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub k: u64,
    pub p: Mat24,
    pub s: Mat24,
}

impl Propagator {
    /// `(P_a, S_a)·(P_b, S_b) = (P_a P_b, S_a + P_a S_b)`.
    fn then(&self, o: &Propagator) -> Propagator {
        Propagator { k: self.k + o.k, p: self.p * o.p, s: self.s + self.p * o.s }
    }
}

/// Orthonormal eigenvectors of `Ξ` for its nonzero eigenvalues, in the order
/// `T₊` (sign rep, `ξ₊`), `T₋` (trivial rep, `ξ₋`), then the four `ξ₁` ones.
pub fn xi_eigenvectors() -> [Vec24; 6] {
    let r6 = 2.0 * 6.0f64.sqrt();
    let r2 = 2.0 * 2.0f64.sqrt();
    let cv = |terms: &[(f64, &[&[u8]])]| -> Vec24 {
        let mut v = Vec24::zeros();
        for (coef, cs) in terms {
            v[Perm::from_cycles(cs).index()] += coef;
        }
        v
    };
    let tp = Vec24::from_fn(|i, _| ALL[i].sign() as f64 / r6);
    let tm = Vec24::from_element(1.0 / r6);
    let t1 = cv(&[
        (1.0, &[]),
        (-1.0, &[&[1, 2, 4]]),
        (-1.0, &[&[1, 3, 2]]),
        (-1.0, &[&[1, 4, 3]]),
        (-1.0, &[&[2, 3, 4]]),
        (1.0, &[&[1, 2], &[3, 4]]),
        (1.0, &[&[1, 3], &[2, 4]]),
        (1.0, &[&[1, 4], &[2, 3]]),
    ]) / r2;
    let t2 = cv(&[
        (1.0, &[&[1, 3]]),
        (1.0, &[&[2, 4]]),
        (-1.0, &[&[1, 4]]),
        (-1.0, &[&[2, 3]]),
        (-1.0, &[&[1, 3, 4, 2]]),
        (-1.0, &[&[1, 2, 4, 3]]),
        (1.0, &[&[1, 2, 3, 4]]),
        (1.0, &[&[1, 4, 3, 2]]),
    ]) / r2;
    let t3 = cv(&[
        (2.0, &[&[1, 2]]),
        (2.0, &[&[3, 4]]),
        (-1.0, &[&[1, 3]]),
        (-1.0, &[&[1, 4]]),
        (-1.0, &[&[2, 3]]),
        (-1.0, &[&[2, 4]]),
        (2.0, &[&[1, 4, 2, 3]]),
        (2.0, &[&[1, 3, 2, 4]]),
        (-1.0, &[&[1, 2, 3, 4]]),
        (-1.0, &[&[1, 2, 4, 3]]),
        (-1.0, &[&[1, 3, 4, 2]]),
        (-1.0, &[&[1, 4, 3, 2]]),
    ]) / r6;
    let t4 = -cv(&[
        (1.0, &[]),
        (1.0, &[&[1, 2, 4]]),
        (1.0, &[&[1, 3, 2]]),
        (1.0, &[&[1, 4, 3]]),
        (1.0, &[&[2, 3, 4]]),
        (-2.0, &[&[1, 2, 3]]),
        (-2.0, &[&[1, 3, 4]]),
        (-2.0, &[&[1, 4, 2]]),
        (-2.0, &[&[2, 4, 3]]),
        (1.0, &[&[1, 2], &[3, 4]]),
        (1.0, &[&[1, 3], &[2, 4]]),
        (1.0, &[&[1, 4], &[2, 3]]),
    ]) / r6;
    [tp, tm, t1, t2, t3, t4]
}

/// True when `θ` is a multiple of `π/2` (the phase gate is then Clifford).
pub fn is_clifford_angle(theta: f64) -> bool {
    let r = theta / core::f64::consts::FRAC_PI_2;
    (r - r.round()).abs() < 1e-12
}

/// T-doped Clifford twirls at one dimension and angle.
#[derive(Clone, Debug)]
pub struct DopedEngine {
    pub weights: Weights,
    pub xi: XiMatrix,
}

impl DopedEngine {
    pub fn new(d: u64, theta: f64) -> Result<DopedEngine> {
        if is_clifford_angle(theta) {
            return Err(Error::InvalidAngle { theta });
        }
        let weights = Weights::new(d)?;
        let xi = XiMatrix::new(&weights, theta)?;
        Ok(DopedEngine { weights, xi })
    }

    /// Coefficients after the layers in `prop`.
    pub fn coeffs(&self, ff: &FormFactors, prop: &Propagator) -> Result<MomentCoeffs> {
        let cl = self.weights.clifford(ff)?;
        Ok(MomentCoeffs {
            ensemble: Ensemble::Doped { k: prop.k, theta: self.xi.theta },
            d: cl.d,
            a: prop.p * cl.a,
            y: cl.y + self.xi.l * (prop.s * cl.a),
        })
    }

    /// Coefficients after `k` layers from the closed-form spectral
    /// decomposition of `Ξ` (valid for `k ≥ 1` where the 18-dimensional
    /// kernel has been projected out).
    pub fn coeffs_eigen(&self, ff: &FormFactors, k: u64) -> Result<MomentCoeffs> {
        let cl = self.weights.clifford(ff)?;
        if k == 0 {
            return Ok(cl);
        }
        let d = self.weights.d;
        let theta = self.xi.theta;
        let (xp, xm, x1) = XiMatrix::closed_form_eigenvalues(d, theta);
        let xis = [xp, xm, x1, x1, x1, x1];
        let lam = XiMatrix::lambda(d, theta);
        let mut a = Vec24::zeros();
        let mut y = cl.y + self.xi.l * cl.a;
        for (tj, &xj) in xi_eigenvectors().iter().zip(xis.iter()) {
            let proj = tj.dot(&cl.a);
            a += *tj * (proj * xj.powi(k as i32));
            // Σ_{i=1}^{k-1} ξ^i = ξ(1−ξ^{k−1})/(1−ξ)
            let geo = if (1.0 - xj).abs() < 1e-15 {
                (k - 1) as f64
            } else {
                xj * (1.0 - xj.powi(k as i32 - 1)) / (1.0 - xj)
            };
            y += *tj * (lam * proj * geo);
        }
        Ok(MomentCoeffs { ensemble: Ensemble::Doped { k, theta }, d, a, y })
    }
}

/// Whether a sequence is monotone (non-increasing or non-decreasing) up to a
/// relative slack.
pub fn is_monotone(seq: &[f64], slack: f64) -> bool {
    let scale = seq.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let tol = slack * scale;
    let up = seq.windows(2).all(|w| w[1] >= w[0] - tol);
    let down = seq.windows(2).all(|w| w[1] <= w[0] + tol);
    up || down
}

/// Exact rational from an integer, re-exported for callers building forms.
pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::CbHamiltonian;
    use crate::spectral::Source;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn cb_ff(n: usize, t: f64) -> FormFactors {
        let om: Vec<f64> = (0..n).map(|i| 0.37 + 0.29 * i as f64).collect();
        CbHamiltonian::new(om).unwrap().product_form(t)
    }

    #[test]
    fn c_and_q_at_zero() {
        let ff = FormFactors::at_zero(8, Source::Explicit);
        let c = c_vector(&ff);
        let q = q_vector_stabilizer(&ff).unwrap();
        for (i, p) in ALL.iter().enumerate() {
            assert_eq!(c[i], 8f64.powi(p.cycle_count() as i32));
        }
        assert_eq!(c[0], 4096.0);
        assert_eq!(q[0], 64.0);
        assert_eq!(q[Perm::from_cycles(&[&[1, 2, 3]]).index()], 1.0);
        let mut no = ff;
        no.g3tilde = None;
        assert_eq!(q_vector_stabilizer(&no), Err(Error::NotStabilizerValid));
    }

    #[test]
    fn q_vector_at_zero_is_projected_gram_row() {
        // V = 1: q_π = Tr[T_π Q] = Ω⁺ row of the identity.
        let d = 16;
        let ff = FormFactors::at_zero(d, Source::Explicit);
        let q = q_vector_stabilizer(&ff).unwrap();
        let g = crate::weingarten::gram(GramKind::QProjected, d).unwrap();
        for i in 0..24 {
            assert_eq!(q[i], to_f64(&g[(0, i)]));
        }
    }

    #[test]
    fn haar_at_zero_selects_identity() {
        // At V = 1, W c = e_Id, so the Haar value is H_Id for any probe.
        let w = Weights::new(8).unwrap();
        let ff = FormFactors::at_zero(8, Source::Explicit);
        let probe = Vec24::from_fn(|i, _| (i as f64 * 0.37).sin());
        let y = w.haar(&ff).y;
        assert!(close(y.dot(&probe), probe[0], 1e-10));
    }

    #[test]
    fn k2_matches_theta_zero_and_is_symmetric() {
        let d = 8;
        let k2 = k2_matrix(d, 0.0).unwrap();
        let k1 = to_mat24(&crate::weingarten::gram(GramKind::QProjected, d).unwrap());
        assert!((k2 - k1).abs().max() < 1e-12);
        let k = k2_matrix(d, 0.3).unwrap();
        assert!((k - k.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn xi_closed_form_values() {
        let (p, m, one) = XiMatrix::closed_form_eigenvalues(16, core::f64::consts::FRAC_PI_4);
        assert!(close(one, 1528.0 / 2040.0, 1e-15));
        assert!(p > one && one > m);
        let (p0, m0, o0) = XiMatrix::closed_form_eigenvalues(16, 0.0);
        assert_eq!((p0, m0, o0), (1.0, 1.0, 1.0));
    }

    #[test]
    fn xi_eigenvectors_are_orthonormal_and_exact() {
        let ts = xi_eigenvectors();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ts[i].dot(&ts[j]) - expect).abs() < 1e-14);
            }
        }
        let theta = core::f64::consts::FRAC_PI_4;
        for d in [16u64, 256] {
            let w = Weights::new(d).unwrap();
            let xi = XiMatrix::new(&w, theta).unwrap();
            let (p, m, one) = XiMatrix::closed_form_eigenvalues(d, theta);
            let lam = XiMatrix::lambda(d, theta);
            for (t, x) in ts.iter().zip([p, m, one, one, one, one]) {
                assert!((xi.m * t - t * x).abs().max() < 1e-12, "d={d}");
                assert!((xi.l * t - t * lam).abs().max() < 1e-12, "d={d}");
            }
            let ev = xi.numeric_eigenvalues();
            assert!(ev[6..].iter().all(|e| e.abs() < 1e-12));
        }
    }

    #[test]
    fn doubling_equals_direct_iteration() {
        let e = DopedEngine::new(8, core::f64::consts::FRAC_PI_4).unwrap();
        let mut p = Mat24::identity();
        let mut s = Mat24::zeros();
        for k in 0..40u64 {
            let prop = e.xi.propagator(k);
            assert!((prop.p - p).abs().max() < 1e-12);
            assert!((prop.s - s).abs().max() < 1e-10);
            s += p;
            p = e.xi.m * p;
        }
    }

    #[test]
    fn eigen_form_equals_recursion() {
        let e = DopedEngine::new(16, core::f64::consts::FRAC_PI_4).unwrap();
        let ff = cb_ff(4, 0.9);
        for k in [1u64, 2, 7, 50] {
            let a = e.coeffs(&ff, &e.xi.propagator(k)).unwrap();
            let b = e.coeffs_eigen(&ff, k).unwrap();
            assert!((a.a - b.a).abs().max() < 1e-10, "k={k}");
            assert!((a.y - b.y).abs().max() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn doped_limits() {
        let e = DopedEngine::new(16, core::f64::consts::FRAC_PI_4).unwrap();
        let ff = cb_ff(4, 1.3);
        let k0 = e.coeffs(&ff, &e.xi.propagator(0)).unwrap();
        let cl = e.weights.clifford(&ff).unwrap();
        assert_eq!(k0.a, cl.a);
        assert_eq!(k0.y, cl.y);
        let big = e.coeffs(&ff, &e.xi.propagator(1_000_000)).unwrap();
        let haar = e.weights.haar(&ff);
        let scale = haar.y.abs().max();
        assert!(big.a.abs().max() < 1e-10 * scale);
        assert!((big.y - haar.y).abs().max() < 1e-10 * scale);
        assert!(DopedEngine::new(16, core::f64::consts::FRAC_PI_2).is_err());
    }

    #[test]
    fn exact_forms_match_numeric_coefficients() {
        let d = 8;
        let w = Weights::new(d).unwrap();
        let h: Vec<BigRational> = (0..24).map(|i| int((i as i64 * 7) % 5 - 2)).collect();
        let qv: Vec<BigRational> = (0..24).map(|i| int((i as i64 * 3) % 4 - 1)).collect();
        let hf = Vec24::from_fn(|i, _| to_f64(&h[i]));
        let qf = Vec24::from_fn(|i, _| to_f64(&qv[i]));
        let ff = cb_ff(3, 0.7);
        let hv = w.haar_form(&h).evaluate(&ff).unwrap();
        assert!(close(hv, w.haar(&ff).apply(&hf, &qf), 1e-9));
        let cv = w.clifford_form(&h, &qv).unwrap().evaluate(&ff).unwrap();
        assert!(close(cv, w.clifford(&ff).unwrap().apply(&hf, &qf), 1e-9));
    }

    #[test]
    fn monotone_helper() {
        assert!(is_monotone(&[1.0, 0.8, 0.8, 0.1], 0.0));
        assert!(!is_monotone(&[1.0, 0.8, 0.9], 0.0));
    }
}
