//! Gram matrices `Ω`, `Ω⁺`, `Ω⁻` and Weingarten functions `W`, `W⁺`, `W⁻`.
//!
//! Every Weingarten table is computed two independent ways — exact matrix
//! (pseudo-)inversion and the character formula — and the two must agree.
//! The printed tables and character prefactors are kept as fixtures and
//! compared against the computed values; they are never used for evaluation.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::linalg::{rat, RatMatrix};
use crate::perm_algebra::{
    q_trace_single, rpow, trace_of_perm, CycleClass, Perm, ALL, CHARACTERS, IRREP_DIMS,
};
use crate::{qubits_of, Error, Result};

/// Which Gram matrix.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GramKind {
    /// `Ω_{πσ} = Tr[T_π T_σ]`.
    Plain,
    /// `Ω⁺_{πσ} = Tr[T_π T_σ Q]`.
    QProjected,
    /// `Ω⁻ = Ω − Ω⁺`.
    QPerpProjected,
}

impl GramKind {
    pub fn name(self) -> &'static str {
        match self {
            GramKind::Plain => "plain",
            GramKind::QProjected => "plus",
            GramKind::QPerpProjected => "minus",
        }
    }
}

/// Value of the Gram matrix as a function of the class of `π∘σ`.
pub fn gram_class_value(kind: GramKind, class: CycleClass, d: u64) -> Result<BigRational> {
    let rep = class_representative(class);
    let plain = || -> Result<BigRational> { Ok(BigRational::from_integer(trace_of_perm(rep, d)?)) };
    let plus = || -> Result<BigRational> { Ok(rpow(&q_trace_single(rep), qubits_of(d)?)) };
    match kind {
        GramKind::Plain => plain(),
        GramKind::QProjected => plus(),
        GramKind::QPerpProjected => Ok(plain()? - plus()?),
    }
}

/// A fixed representative of each cycle class.
pub fn class_representative(class: CycleClass) -> Perm {
    match class {
        CycleClass::Id => Perm::IDENTITY,
        CycleClass::Two => Perm::from_cycles(&[&[1, 2]]),
        CycleClass::TwoTwo => Perm::from_cycles(&[&[1, 2], &[3, 4]]),
        CycleClass::Three => Perm::from_cycles(&[&[1, 2, 3]]),
        CycleClass::Four => Perm::from_cycles(&[&[1, 2, 3, 4]]),
    }
}

/// The 24×24 Gram matrix. The projected kinds require `d = 2^N`.
pub fn gram(kind: GramKind, d: u64) -> Result<RatMatrix> {
    let vals: Vec<BigRational> = CycleClass::ALL
        .iter()
        .map(|&c| gram_class_value(kind, c, d))
        .collect::<Result<_>>()?;
    Ok(RatMatrix::from_fn(24, 24, |i, j| {
        vals[ALL[i].compose(ALL[j]).class() as usize].clone()
    }))
}

/// The S2 Gram matrix `[[d², d],[d, d²]]`.
pub fn gram_s2(d: u64) -> Result<RatMatrix> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { d, min: 2 });
    }
    let dd = rat(d as i64);
    Ok(RatMatrix::from_fn(2, 2, |i, j| if i == j { &dd * &dd } else { dd.clone() }))
}

/// `W = Ω⁻¹` for S2: `(d²−1)⁻¹ [[1, −1/d],[−1/d, 1]]`.
pub fn weingarten_s2(d: u64) -> Result<RatMatrix> {
    gram_s2(d)?.inverse().ok_or(Error::Pole { what: "S2 Weingarten", d })
}

/// `D_λ`, `D⁺_λ`, `D⁻_λ` as functions of `d`. With these normalizations
/// `Tr Π_λ = d_λ·D_λ` and `Tr[Q Π_λ] = d_λ·D⁺_λ`.
pub fn dlambda(kind: GramKind, lambda: usize, d: u64) -> BigRational {
    let x = rat(d as i64);
    let f = |v: &[i64]| -> BigRational {
        let mut acc = BigRational::from_integer(BigInt::from(1));
        for &s in v {
            acc *= &x + rat(s);
        }
        acc
    };
    let r = |n: BigRational, den: i64| n / rat(den);
    match (kind, lambda) {
        (GramKind::QProjected, 0) => r(f(&[-2, -1]), 6),
        (GramKind::QProjected, 1) | (GramKind::QProjected, 3) => BigRational::zero(),
        (GramKind::QProjected, 2) => r(f(&[1, -1]), 3),
        (GramKind::QProjected, 4) => r(f(&[2, 1]), 6),
        (GramKind::QPerpProjected, 0) => r(f(&[-4, -2, -1, 1]), 24),
        (GramKind::QPerpProjected, 1) => r(f(&[-2, -1, 0, 1]), 8),
        (GramKind::QPerpProjected, 2) => r(f(&[-2, -1, 1, 2]), 12),
        (GramKind::QPerpProjected, 3) => r(f(&[-1, 0, 1, 2]), 8),
        (GramKind::QPerpProjected, 4) => r(f(&[-1, 1, 2, 4]), 24),
        (GramKind::Plain, 0) => r(f(&[0, -1, -2, -3]), 24),
        (GramKind::Plain, 1) => r(f(&[0, 1, -2, -1]), 8),
        (GramKind::Plain, 2) => r(f(&[0, 0, -1, 1]), 12),
        (GramKind::Plain, 3) => r(f(&[0, 1, 2, -1]), 8),
        (GramKind::Plain, 4) => r(f(&[0, 1, 2, 3]), 24),
        _ => panic!("irrep index out of range"),
    }
}

/// Rank of the Gram matrix at generic (large) `d`.
pub fn generic_rank(kind: GramKind) -> usize {
    match kind {
        GramKind::Plain | GramKind::QPerpProjected => 24,
        GramKind::QProjected => 6,
    }
}

/// Weingarten function as a class function of `π∘σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeingartenTable {
    pub kind: GramKind,
    pub d: u64,
    /// Values at classes Id, (ij), (ij)(kl), (ijk), (ijkl).
    pub values: [BigRational; 5],
    /// Rank of the underlying Gram matrix at this `d`.
    pub rank: usize,
}

impl WeingartenTable {
    /// True when the Gram matrix is rank-deficient relative to its generic
    /// rank (a pole of the printed closed forms); values are then the
    /// pseudo-inverse.
    pub fn singular(&self) -> bool {
        self.rank < generic_rank(self.kind)
    }

    pub fn value(&self, class: CycleClass) -> &BigRational {
        &self.values[class as usize]
    }

    /// `W_{πσ} = w(class(π∘σ))` as a 24×24 matrix.
    pub fn matrix(&self) -> RatMatrix {
        RatMatrix::from_fn(24, 24, |i, j| self.values[ALL[i].compose(ALL[j]).class() as usize].clone())
    }
}

fn rank_from_dlambda(kind: GramKind, d: u64) -> usize {
    (0..5)
        .filter(|&l| !dlambda(kind, l, d).is_zero())
        .map(|l| (IRREP_DIMS[l] * IRREP_DIMS[l]) as usize)
        .sum()
}

/// `W` by exact inversion of the Gram matrix (pseudo-inverse when singular).
pub fn weingarten_by_inversion(kind: GramKind, d: u64) -> Result<WeingartenTable> {
    let g = gram(kind, d)?;
    let rank = g.rank();
    let w = if rank == 24 { g.inverse().expect("full rank") } else { g.pseudo_inverse() };
    let mut values: [BigRational; 5] = core::array::from_fn(|_| BigRational::zero());
    for c in CycleClass::ALL {
        let j = class_representative(c).index();
        values[c as usize] = w[(0, j)].clone();
    }
    for i in 0..24 {
        for j in 0..24 {
            if w[(i, j)] != values[ALL[i].compose(ALL[j]).class() as usize] {
                return Err(Error::Invalid("Weingarten matrix is not a class function"));
            }
        }
    }
    Ok(WeingartenTable { kind, d, values, rank })
}

/// `W_π = Σ_{λ: D_λ≠0} d_λ² χ^λ(π) / ((4!)² D_λ)`.
pub fn weingarten_by_characters(kind: GramKind, d: u64) -> Result<WeingartenTable> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { d, min: 2 });
    }
    if kind != GramKind::Plain {
        qubits_of(d)?;
    }
    let mut values: [BigRational; 5] = core::array::from_fn(|_| BigRational::zero());
    for c in 0..5 {
        let mut acc = BigRational::zero();
        for l in 0..5 {
            let dl = dlambda(kind, l, d);
            if dl.is_zero() {
                continue;
            }
            let num = rat(IRREP_DIMS[l] * IRREP_DIMS[l] * CHARACTERS[l][c]);
            acc += num / (rat(576) * dl);
        }
        values[c] = acc;
    }
    Ok(WeingartenTable { kind, d, values, rank: rank_from_dlambda(kind, d) })
}

/// The printed table of generalized Weingarten functions, class order
/// Id, (ij), (ij)(kl), (ijk), (ijkl). Kept as a fixture; see
/// [`compare_with_printed`].
pub fn printed_table(kind: GramKind, d: u64) -> Option<[BigRational; 5]> {
    let x = rat(d as i64);
    let p = |v: &[i64]| -> BigRational {
        let mut acc = rat(1);
        for &s in v {
            acc *= &x + rat(s);
        }
        acc
    };
    let q = |n: BigRational, den: BigRational| -> Option<BigRational> {
        if den.is_zero() {
            None
        } else {
            Some(n / den)
        }
    };
    let r24 = rat(24);
    match kind {
        GramKind::QProjected => Some([
            q(rat(1), &r24 * p(&[2, -2]))?,
            q(rat(-3), &r24 * rat(2) * p(&[1, -1, 2, -2]))?,
            q(rat(1), &r24 * p(&[2, -2]))?,
            q(&x * &x + rat(8), &r24 * p(&[1, -1, 2, -2]))?,
            q(rat(-3) * &x, &r24 * rat(2) * p(&[0, 1, -1, 2, -2]))?,
        ]),
        GramKind::QPerpProjected => Some([
            q(rat(3) * (rat(3) * &x + rat(10)), &r24 * p(&[-1, 1, -2, 2, -4]))?,
            q(&x - rat(8), &r24 * p(&[0, -1, 1, -2, 4]))?,
            q(rat(1), &r24 * p(&[-1, 1, 2, 4]))?,
            q(rat(-6), &r24 * p(&[-1, 1, 2, -2, 4]))?,
            q(&x * &x + rat(2) * &x + rat(16), &r24 * p(&[0, -1, 1, -2, 2, 4]))?,
        ]),
        GramKind::Plain => None,
    }
}

/// The printed character-sum prefactor for `W⁺` (restricted to λ1, λ5).
pub fn printed_plus_character_formula(d: u64) -> [BigRational; 5] {
    let x = rat(d as i64);
    let pref = rat(2) / (rat(576) * &x * (&x + rat(1)) * (&x - rat(1)));
    core::array::from_fn(|c| {
        let chi1 = rat(CHARACTERS[0][c]);
        let chi5 = rat(CHARACTERS[4][c]);
        &pref * (&x * (&chi1 + &chi5) + (chi1 - chi5))
    })
}

/// The printed character-sum formula for `W⁻`. `None` at its poles.
pub fn printed_minus_character_formula(d: u64) -> Option<[BigRational; 5]> {
    let x = rat(d as i64);
    let p = |v: &[i64]| -> BigRational {
        let mut acc = rat(1);
        for &s in v {
            acc *= &x + rat(s);
        }
        acc
    };
    let den = rat(24) * p(&[0, 0, -1, 1, 2, -2, 6, -6]);
    if den.is_zero() {
        return None;
    }
    let coef = [
        p(&[0, -2, 2, 6]),
        p(&[1, 2, -6, 6]),
        p(&[-2, 2, -6, 6]),
        p(&[0, -2, -6, 6]),
        p(&[0, -2, 2, -6]),
    ];
    Some(core::array::from_fn(|c| {
        let mut acc = BigRational::zero();
        for l in 0..5 {
            acc += &coef[l] * rat(CHARACTERS[l][c]);
        }
        acc / &den
    }))
}

/// One entry of a printed-vs-computed comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassComparison {
    pub class: CycleClass,
    pub computed: BigRational,
    pub printed: Option<BigRational>,
}

impl ClassComparison {
    pub fn matches(&self) -> bool {
        self.printed.as_ref() == Some(&self.computed)
    }
}

/// Compare computed class values with a printed fixture.
pub fn compare_with_printed(
    computed: &WeingartenTable,
    printed: Option<[BigRational; 5]>,
) -> Vec<ClassComparison> {
    CycleClass::ALL
        .iter()
        .map(|&c| ClassComparison {
            class: c,
            computed: computed.values[c as usize].clone(),
            printed: printed.as_ref().map(|p| p[c as usize].clone()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ratio;
    use crate::perm_algebra::irrep_trace;

    #[test]
    fn s2_gram_and_weingarten() {
        let g = gram_s2(5).unwrap();
        assert_eq!(g[(0, 0)], rat(25));
        assert_eq!(g[(0, 1)], rat(5));
        let w = weingarten_s2(5).unwrap();
        assert_eq!(w[(0, 0)], ratio(1, 24));
        assert_eq!(w[(0, 1)], ratio(-1, 120));
    }

    #[test]
    fn gram_entries() {
        let g = gram(GramKind::Plain, 4).unwrap();
        assert!(g.is_symmetric());
        assert_eq!(g[(0, 0)], rat(256));
        let gp = gram(GramKind::QProjected, 8).unwrap();
        assert_eq!(gp[(0, 0)], rat(64));
        let gm = gram(GramKind::QPerpProjected, 8).unwrap();
        assert_eq!(gm.add(&gp), gram(GramKind::Plain, 8).unwrap());
        assert!(gram(GramKind::QProjected, 6).is_err());
    }

    #[test]
    fn dlambda_consistency() {
        for d in [2u64, 4, 8, 16] {
            for l in 0..5 {
                assert_eq!(
                    dlambda(GramKind::Plain, l, d),
                    dlambda(GramKind::QProjected, l, d) + dlambda(GramKind::QPerpProjected, l, d)
                );
                assert_eq!(
                    irrep_trace(l, d).unwrap(),
                    rat(IRREP_DIMS[l]) * dlambda(GramKind::Plain, l, d)
                );
            }
        }
        assert_eq!(dlambda(GramKind::QProjected, 2, 4), rat(5));
    }

    #[test]
    fn ranks_match_irrep_support() {
        for d in [2u64, 4, 8] {
            for kind in [GramKind::Plain, GramKind::QProjected, GramKind::QPerpProjected] {
                assert_eq!(gram(kind, d).unwrap().rank(), rank_from_dlambda(kind, d));
            }
        }
        assert_eq!(rank_from_dlambda(GramKind::QPerpProjected, 4), 23);
    }

    #[test]
    fn inversion_equals_characters() {
        for d in [4u64, 8, 16] {
            for kind in [GramKind::Plain, GramKind::QProjected, GramKind::QPerpProjected] {
                let a = weingarten_by_inversion(kind, d).unwrap();
                let b = weingarten_by_characters(kind, d).unwrap();
                assert_eq!(a, b, "kind {kind:?} d {d}");
            }
        }
    }

    #[test]
    fn inverse_property_over_classes() {
        let d = 8;
        let w = weingarten_by_characters(GramKind::Plain, d).unwrap().matrix();
        let g = gram(GramKind::Plain, d).unwrap();
        assert_eq!(w.mul(&g), RatMatrix::identity(24));
    }

    #[test]
    fn singular_flag_at_small_d() {
        let w = weingarten_by_inversion(GramKind::QPerpProjected, 4).unwrap();
        assert!(w.singular());
        let w = weingarten_by_inversion(GramKind::QProjected, 8).unwrap();
        assert!(!w.singular());
    }
}
