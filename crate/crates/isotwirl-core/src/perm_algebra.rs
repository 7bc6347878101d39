//! Exact algebra of S4 acting on four tensor copies of `C^d`.
//!
//! The 24 permutation operators `T_π` are indexed by a frozen global
//! ordering: lexicographic one-line notation. Every coefficient vector in the
//! crate is indexed against [`ALL`].

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// A permutation of the four tensor slots, one-line notation, 0-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Perm(pub [u8; 4]);

/// All 24 permutations in lexicographic one-line order.
pub const ALL: [Perm; 24] = [
    Perm([0, 1, 2, 3]),
    Perm([0, 1, 3, 2]),
    Perm([0, 2, 1, 3]),
    Perm([0, 2, 3, 1]),
    Perm([0, 3, 1, 2]),
    Perm([0, 3, 2, 1]),
    Perm([1, 0, 2, 3]),
    Perm([1, 0, 3, 2]),
    Perm([1, 2, 0, 3]),
    Perm([1, 2, 3, 0]),
    Perm([1, 3, 0, 2]),
    Perm([1, 3, 2, 0]),
    Perm([2, 0, 1, 3]),
    Perm([2, 0, 3, 1]),
    Perm([2, 1, 0, 3]),
    Perm([2, 1, 3, 0]),
    Perm([2, 3, 0, 1]),
    Perm([2, 3, 1, 0]),
    Perm([3, 0, 1, 2]),
    Perm([3, 0, 2, 1]),
    Perm([3, 1, 0, 2]),
    Perm([3, 1, 2, 0]),
    Perm([3, 2, 0, 1]),
    Perm([3, 2, 1, 0]),
];

/// Conjugacy classes of S4 by cycle type.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CycleClass {
    Id,
    Two,
    TwoTwo,
    Three,
    Four,
}

impl CycleClass {
    pub const ALL: [CycleClass; 5] = [
        CycleClass::Id,
        CycleClass::Two,
        CycleClass::TwoTwo,
        CycleClass::Three,
        CycleClass::Four,
    ];

    /// Number of permutations in the class.
    pub fn size(self) -> usize {
        CLASS_SIZES[self as usize]
    }

    /// Number of cycles (fixed points included) on four slots.
    pub fn cycle_count(self) -> u32 {
        match self {
            CycleClass::Id => 4,
            CycleClass::Two => 3,
            CycleClass::TwoTwo | CycleClass::Three => 2,
            CycleClass::Four => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CycleClass::Id => "Id",
            CycleClass::Two => "(ij)",
            CycleClass::TwoTwo => "(ij)(kl)",
            CycleClass::Three => "(ijk)",
            CycleClass::Four => "(ijkl)",
        }
    }
}

pub const CLASS_SIZES: [usize; 5] = [1, 6, 3, 8, 6];

/// Refinement of the cycle classes by how cycles meet the `V` slots {1,2}
/// and the `V†` slots {3,4}. The stabilizer and probe tables are constant on
/// these finer classes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FineClass {
    Id,
    /// The transposition (12).
    Swap12,
    /// The transposition (34).
    Swap34,
    /// Transpositions pairing a `V` slot with a `V†` slot.
    OtherTwo,
    /// 3-cycles whose fixed point is slot 1 or 2.
    ThreeFix12,
    /// 3-cycles whose fixed point is slot 3 or 4.
    ThreeFix34,
    /// (1324) and (1423): `V` and `V†` alternate around the cycle.
    CrossingFour,
    /// The remaining four 4-cycles.
    OtherFour,
    /// The double swap (12)(34).
    Swap12Swap34,
    /// (13)(24) and (14)(23).
    OtherTwoTwo,
}

impl FineClass {
    pub const ALL: [FineClass; 10] = [
        FineClass::Id,
        FineClass::Swap12,
        FineClass::Swap34,
        FineClass::OtherTwo,
        FineClass::ThreeFix12,
        FineClass::ThreeFix34,
        FineClass::CrossingFour,
        FineClass::OtherFour,
        FineClass::Swap12Swap34,
        FineClass::OtherTwoTwo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FineClass::Id => "I",
            FineClass::Swap12 => "(12)",
            FineClass::Swap34 => "(34)",
            FineClass::OtherTwo => "(ij)",
            FineClass::ThreeFix12 => "(ijk)_fix12",
            FineClass::ThreeFix34 => "(ijk)_fix34",
            FineClass::CrossingFour => "(ijkl)_crossing",
            FineClass::OtherFour => "(ijkl)",
            FineClass::Swap12Swap34 => "(12)(34)",
            FineClass::OtherTwoTwo => "(ij)(kl)",
        }
    }
}

impl Perm {
    pub const IDENTITY: Perm = Perm([0, 1, 2, 3]);

    /// Build from 1-based cycles, e.g. `from_cycles(&[&[1, 4, 2, 3]])` is
    /// (1423): 1→4→2→3→1.
    pub fn from_cycles(cycles: &[&[u8]]) -> Perm {
        let mut p = [0u8, 1, 2, 3];
        for c in cycles {
            for k in 0..c.len() {
                let a = c[k] - 1;
                let b = c[(k + 1) % c.len()] - 1;
                p[a as usize] = b;
            }
        }
        Perm(p)
    }

    /// Position in [`ALL`] (Lehmer code).
    pub fn index(self) -> usize {
        let p = self.0;
        let mut idx = 0usize;
        for i in 0..4 {
            let smaller = (i + 1..4).filter(|&j| p[j] < p[i]).count();
            idx = idx * (4 - i) + smaller;
        }
        idx
    }

    pub fn from_index(i: usize) -> Perm {
        ALL[i]
    }

    /// Image of slot `j` (0-based).
    pub fn apply(self, j: usize) -> usize {
        self.0[j] as usize
    }

    /// `self ∘ other`: first `other`, then `self`. Satisfies
    /// `T_{a∘b} = T_a T_b`.
    pub fn compose(self, other: Perm) -> Perm {
        let mut r = [0u8; 4];
        for (j, rj) in r.iter_mut().enumerate() {
            *rj = self.0[other.0[j] as usize];
        }
        Perm(r)
    }

    pub fn inverse(self) -> Perm {
        let mut r = [0u8; 4];
        for j in 0..4 {
            r[self.0[j] as usize] = j as u8;
        }
        Perm(r)
    }

    /// Cycle decomposition including fixed points, each cycle starting at its
    /// smallest slot and following `j → p(j)`.
    pub fn cycles(self) -> Vec<Vec<u8>> {
        let mut seen = [false; 4];
        let mut out = Vec::new();
        for s in 0..4u8 {
            if seen[s as usize] {
                continue;
            }
            let mut c = vec![s];
            seen[s as usize] = true;
            let mut x = self.0[s as usize];
            while x != s {
                c.push(x);
                seen[x as usize] = true;
                x = self.0[x as usize];
            }
            out.push(c);
        }
        out
    }

    pub fn cycle_count(self) -> u32 {
        self.cycles().len() as u32
    }

    pub fn sign(self) -> i64 {
        if (4 - self.cycle_count()) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn class(self) -> CycleClass {
        let mut lens: Vec<usize> = self.cycles().iter().map(|c| c.len()).collect();
        lens.sort_unstable();
        match lens.as_slice() {
            [1, 1, 1, 1] => CycleClass::Id,
            [1, 1, 2] => CycleClass::Two,
            [2, 2] => CycleClass::TwoTwo,
            [1, 3] => CycleClass::Three,
            _ => CycleClass::Four,
        }
    }

    pub fn fine_class(self) -> FineClass {
        match self.class() {
            CycleClass::Id => FineClass::Id,
            CycleClass::Two => {
                if self.0[0] == 1 {
                    FineClass::Swap12
                } else if self.0[2] == 3 {
                    FineClass::Swap34
                } else {
                    FineClass::OtherTwo
                }
            }
            CycleClass::TwoTwo => {
                if self.0 == [1, 0, 3, 2] {
                    FineClass::Swap12Swap34
                } else {
                    FineClass::OtherTwoTwo
                }
            }
            CycleClass::Three => {
                if self.0[0] == 0 || self.0[1] == 1 {
                    FineClass::ThreeFix12
                } else {
                    FineClass::ThreeFix34
                }
            }
            CycleClass::Four => {
                // Crossing: every step of the cycle moves between {0,1} and {2,3}.
                let crossing = (0..4).all(|j| (j < 2) != ((self.0[j] as usize) < 2));
                if crossing {
                    FineClass::CrossingFour
                } else {
                    FineClass::OtherFour
                }
            }
        }
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<Vec<u8>> = self.cycles().into_iter().filter(|c| c.len() > 1).collect();
        if cs.is_empty() {
            return write!(f, "I");
        }
        for c in cs {
            write!(f, "(")?;
            for x in c {
                write!(f, "{}", x + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// `Tr[T_p] = d^{#cycles(p)}` on `(C^d)^{⊗4}`.
pub fn trace_of_perm(p: Perm, d: u64) -> Result<BigInt> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { d, min: 2 });
    }
    Ok(num_traits::pow(BigInt::from(d), p.cycle_count() as usize))
}

/// Characters of S4: rows λ1..λ5, columns Id, (ij), (ij)(kl), (ijk), (ijkl).
/// λ1 is the sign representation and λ5 the trivial one.
pub const CHARACTERS: [[i64; 5]; 5] = [
    [1, -1, 1, 1, -1],
    [3, -1, -1, 0, 1],
    [2, 0, 2, -1, 0],
    [3, 1, -1, 0, -1],
    [1, 1, 1, 1, 1],
];

/// Irrep dimensions d_λ.
pub const IRREP_DIMS: [i64; 5] = [1, 3, 2, 3, 1];

pub fn character(lambda: usize, p: Perm) -> i64 {
    CHARACTERS[lambda][p.class() as usize]
}

/// Coefficients of `Π_λ = (d_λ/24) Σ_π χ^λ(π) T_π` in the permutation basis.
pub fn irrep_projector(lambda: usize) -> Vec<BigRational> {
    ALL.iter()
        .map(|&p| {
            BigRational::new(
                BigInt::from(IRREP_DIMS[lambda] * character(lambda, p)),
                BigInt::from(24),
            )
        })
        .collect()
}

/// `Tr[Π_λ]` on `(C^d)^{⊗4}`.
pub fn irrep_trace(lambda: usize, d: u64) -> Result<BigRational> {
    let coeffs = irrep_projector(lambda);
    let mut acc = BigRational::zero();
    for (c, &p) in coeffs.iter().zip(ALL.iter()) {
        acc += c * BigRational::from_integer(trace_of_perm(p, d)?);
    }
    Ok(acc)
}

/// Group-algebra product: `(a ⋆ b)_ρ = Σ_{π∘σ=ρ} a_π b_σ`.
pub fn convolve(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); 24];
    for (i, &p) in ALL.iter().enumerate() {
        if a[i].is_zero() {
            continue;
        }
        for (j, &s) in ALL.iter().enumerate() {
            out[p.compose(s).index()] += &a[i] * &b[j];
        }
    }
    out
}

/// Product-of-cyclic-traces normal form of `Tr[T_p (X₁⊗X₂⊗X₃⊗X₄)]`.
///
/// Each word lists slot indices (0-based) in trace order: a cycle
/// `(c₁ c₂ … c_m)` with `p(c₁)=c₂` contributes `Tr[X_{c₁} X_{c_m} … X_{c₂}]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceExpr {
    pub words: Vec<Vec<usize>>,
}

pub fn trace_with_operators(p: Perm) -> TraceExpr {
    let inv = p.inverse();
    let words = p
        .cycles()
        .into_iter()
        .map(|c| {
            let start = c[0] as usize;
            let mut w = vec![start];
            let mut x = inv.apply(start);
            while x != start {
                w.push(x);
                x = inv.apply(x);
            }
            w
        })
        .collect();
    TraceExpr { words }
}

impl TraceExpr {
    /// Render with slot labels, e.g. `Tr[V V†]·Tr[V]·Tr[V†]`.
    pub fn render(&self, labels: [&str; 4]) -> String {
        let mut s = String::new();
        for (k, w) in self.words.iter().enumerate() {
            if k > 0 {
                s.push('·');
            }
            s.push_str("Tr[");
            for (i, &slot) in w.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                s.push_str(labels[slot]);
            }
            s.push(']');
        }
        s
    }

    /// Evaluate with a user-supplied cyclic-trace function.
    pub fn evaluate<T, F>(&self, one: T, mut trace_word: F) -> T
    where
        T: core::ops::Mul<Output = T>,
        F: FnMut(&[usize]) -> T,
    {
        let mut acc = one;
        for w in &self.words {
            acc = acc * trace_word(w);
        }
        acc
    }
}

/// Gaussian integers: exact arithmetic for single-qubit slot operators.
pub type Gi = Complex<i64>;

/// A 2×2 matrix over the Gaussian integers. Single-qubit Paulis and
/// computational-basis projectors are exactly representable.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Mat2(pub [[Gi; 2]; 2]);

const fn gi(re: i64, im: i64) -> Gi {
    Complex { re, im }
}

impl Mat2 {
    pub const I: Mat2 = Mat2([[gi(1, 0), gi(0, 0)], [gi(0, 0), gi(1, 0)]]);
    pub const X: Mat2 = Mat2([[gi(0, 0), gi(1, 0)], [gi(1, 0), gi(0, 0)]]);
    pub const Y: Mat2 = Mat2([[gi(0, 0), gi(0, -1)], [gi(0, 1), gi(0, 0)]]);
    pub const Z: Mat2 = Mat2([[gi(1, 0), gi(0, 0)], [gi(0, 0), gi(-1, 0)]]);
    /// |0⟩⟨0|
    pub const P0: Mat2 = Mat2([[gi(1, 0), gi(0, 0)], [gi(0, 0), gi(0, 0)]]);
    /// |1⟩⟨1|
    pub const P1: Mat2 = Mat2([[gi(0, 0), gi(0, 0)], [gi(0, 0), gi(1, 0)]]);

    pub const PAULIS: [Mat2; 4] = [Mat2::I, Mat2::X, Mat2::Y, Mat2::Z];

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[gi(0, 0); 2]; 2];
        for (i, ri) in r.iter_mut().enumerate() {
            for (j, rij) in ri.iter_mut().enumerate() {
                *rij = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }

    pub fn trace(&self) -> Gi {
        self.0[0][0] + self.0[1][1]
    }
}

/// `Tr[T_p (X₁⊗X₂⊗X₃⊗X₄)]` for single-qubit slot operators, exactly.
pub fn slot_trace(p: Perm, ops: &[Mat2; 4]) -> Gi {
    trace_with_operators(p).evaluate(gi(1, 0), |w| {
        let mut m = Mat2::I;
        for &s in w {
            m = m.mul(&ops[s]);
        }
        m.trace()
    })
}

/// `Tr[Q₁ T_p (X₁⊗X₂⊗X₃⊗X₄)]` with the single-qubit Clifford-commutant
/// projector `Q₁ = ¼ Σ_P P^{⊗4}`. Returned as `4·value` to stay integral.
pub fn slot_trace_q_times4(p: Perm, ops: &[Mat2; 4]) -> Gi {
    let mut acc = gi(0, 0);
    for pauli in Mat2::PAULIS.iter() {
        let dressed = [
            pauli.mul(&ops[0]),
            pauli.mul(&ops[1]),
            pauli.mul(&ops[2]),
            pauli.mul(&ops[3]),
        ];
        acc += slot_trace(p, &dressed);
    }
    acc
}

/// A single-qubit factor of a four-slot operator: a sum of terms
/// `coef · T_fold (X₁⊗X₂⊗X₃⊗X₄)`. Folding a permutation accounts for swap
/// operators acting on a pair of slots.
#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub terms: Vec<(i64, Perm, [Mat2; 4])>,
}

impl Site {
    pub fn product(ops: [Mat2; 4]) -> Site {
        Site { terms: vec![(1, Perm::IDENTITY, ops)] }
    }

    pub fn folded(fold: Perm, ops: [Mat2; 4]) -> Site {
        Site { terms: vec![(1, fold, ops)] }
    }

    /// `Tr[T_σ O_site]` as an exact rational (imaginary part must vanish).
    pub fn trace(&self, sigma: Perm) -> BigRational {
        let mut acc = gi(0, 0);
        for (c, fold, ops) in &self.terms {
            acc += slot_trace(sigma.compose(*fold), ops) * *c;
        }
        assert_eq!(acc.im, 0, "site trace is not real");
        BigRational::from_integer(BigInt::from(acc.re))
    }

    /// `Tr[Q₁ T_σ O_site]` as an exact rational.
    pub fn trace_q(&self, sigma: Perm) -> BigRational {
        let mut acc = gi(0, 0);
        for (c, fold, ops) in &self.terms {
            acc += slot_trace_q_times4(sigma.compose(*fold), ops) * *c;
        }
        assert_eq!(acc.im, 0, "site trace is not real");
        BigRational::new(BigInt::from(acc.re), BigInt::from(4))
    }
}

/// Single-qubit `Tr[Q₁ T_p]`; raised to the `N`-th power this is the
/// Clifford-projected Gram entry.
pub fn q_trace_single(p: Perm) -> BigRational {
    Site::product([Mat2::I; 4]).trace_q(p)
}

/// Exact `BigRational` power with a non-negative exponent.
pub fn rpow(x: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_lexicographic_and_indexed() {
        for (i, p) in ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
        }
        for w in ALL.windows(2) {
            assert!(w[0].0 < w[1].0);
        }
    }

    #[test]
    fn involution_and_disjoint_product() {
        let s12 = Perm::from_cycles(&[&[1, 2]]);
        let s34 = Perm::from_cycles(&[&[3, 4]]);
        assert_eq!(s12.compose(s12), Perm::IDENTITY);
        assert_eq!(s12.compose(s34), Perm::from_cycles(&[&[1, 2], &[3, 4]]));
    }

    #[test]
    fn cayley_table_closure_and_associativity() {
        for &a in ALL.iter() {
            assert_eq!(a.compose(a.inverse()), Perm::IDENTITY);
            for &b in ALL.iter() {
                let ab = a.compose(b);
                assert!(ALL.contains(&ab));
                for &c in ALL.iter() {
                    assert_eq!(ab.compose(c), a.compose(b.compose(c)));
                }
            }
        }
    }

    #[test]
    fn class_sizes() {
        let mut counts = [0usize; 5];
        for p in ALL {
            counts[p.class() as usize] += 1;
        }
        assert_eq!(counts, CLASS_SIZES);
    }

    #[test]
    fn fine_class_sizes() {
        let mut counts = alloc::collections::BTreeMap::new();
        for p in ALL {
            *counts.entry(p.fine_class()).or_insert(0) += 1;
        }
        assert_eq!(counts[&FineClass::Id], 1);
        assert_eq!(counts[&FineClass::Swap12], 1);
        assert_eq!(counts[&FineClass::Swap34], 1);
        assert_eq!(counts[&FineClass::OtherTwo], 4);
        assert_eq!(counts[&FineClass::ThreeFix12], 4);
        assert_eq!(counts[&FineClass::ThreeFix34], 4);
        assert_eq!(counts[&FineClass::CrossingFour], 2);
        assert_eq!(counts[&FineClass::OtherFour], 4);
        assert_eq!(counts[&FineClass::Swap12Swap34], 1);
        assert_eq!(counts[&FineClass::OtherTwoTwo], 2);
        assert_eq!(
            Perm::from_cycles(&[&[1, 4, 2, 3]]).fine_class(),
            FineClass::CrossingFour
        );
        assert_eq!(
            Perm::from_cycles(&[&[1, 3, 2, 4]]).fine_class(),
            FineClass::CrossingFour
        );
    }

    #[test]
    fn trace_of_perm_values() {
        assert_eq!(trace_of_perm(Perm::IDENTITY, 4).unwrap(), BigInt::from(256));
        let dd = Perm::from_cycles(&[&[1, 2], &[3, 4]]);
        assert_eq!(trace_of_perm(dd, 2).unwrap(), BigInt::from(4));
        assert!(trace_of_perm(dd, 1).is_err());
    }

    #[test]
    fn character_orthogonality() {
        for l in 0..5 {
            for m in 0..5 {
                let s: i64 = (0..5)
                    .map(|c| CLASS_SIZES[c] as i64 * CHARACTERS[l][c] * CHARACTERS[m][c])
                    .sum();
                assert_eq!(s, if l == m { 24 } else { 0 });
            }
        }
        let dimsum: i64 = (0..5).map(|l| IRREP_DIMS[l] * CHARACTERS[l][0]).sum();
        assert_eq!(dimsum, 24);
    }

    #[test]
    fn projectors_are_orthogonal_idempotents() {
        for l in 0..5 {
            for m in 0..5 {
                let prod = convolve(&irrep_projector(l), &irrep_projector(m));
                let expect = if l == m {
                    irrep_projector(l)
                } else {
                    vec![BigRational::zero(); 24]
                };
                assert_eq!(prod, expect);
            }
        }
        let sym = irrep_projector(4);
        assert!(sym.iter().all(|c| *c == BigRational::new(1.into(), 24.into())));
    }

    #[test]
    fn irrep_traces_sum_to_dimension() {
        for d in [2u64, 4, 8] {
            let mut acc = BigRational::zero();
            for l in 0..5 {
                acc += irrep_trace(l, d).unwrap();
            }
            assert_eq!(acc, BigRational::from_integer(BigInt::from(d.pow(4))));
        }
    }

    #[test]
    fn swap_trick_words() {
        // (1 k k-1 … 2) gives Tr[A1 A2 … Ak].
        let p = Perm::from_cycles(&[&[1, 4, 3, 2]]);
        assert_eq!(trace_with_operators(p).words, vec![vec![0, 1, 2, 3]]);
        let otoc = Perm::from_cycles(&[&[1, 4, 2, 3]]);
        assert_eq!(
            trace_with_operators(otoc).render(["A", "A", "B", "B"]),
            "Tr[A B A B]"
        );
        let e = trace_with_operators(Perm::IDENTITY);
        assert_eq!(e.render(["V", "V", "V†", "V†"]), "Tr[V]·Tr[V]·Tr[V†]·Tr[V†]");
        let s = Perm::from_cycles(&[&[1, 2]]);
        assert_eq!(
            trace_with_operators(s).render(["V", "V†", "1", "1"]),
            "Tr[V V†]·Tr[1]·Tr[1]"
        );
    }

    #[test]
    fn single_qubit_q_traces() {
        // Tr[I Q]=d², Tr[T_(ij) Q]=d, Tr[T_(ij)(kl) Q]=d², Tr[T_(ijk) Q]=1, Tr[T_(ijkl) Q]=d at d=2.
        for p in ALL {
            let expect = match p.class() {
                CycleClass::Id | CycleClass::TwoTwo => 4,
                CycleClass::Two | CycleClass::Four => 2,
                CycleClass::Three => 1,
            };
            assert_eq!(q_trace_single(p), BigRational::from_integer(expect.into()));
        }
    }
}
