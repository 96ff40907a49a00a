//! Exact coordinate arithmetic closed under the 2/3 diagonal split, and the
//! shared vertex database that lets one trial serve many hyperintervals.
//!
//! Every trial coordinate the subdivision scheme can produce is of the form
//! `num / 3^exp` relative to the root domain. Storing coordinates as exact
//! ternary rationals (instead of floats) makes vertex identity exact, which
//! is what allows a single evaluation to be shared by up to `2^N` boxes.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::objective::{Point, Problem, TrialCounter, TrialRecord};

/// Maximum number of 2/3 splits per dimension. `3^75 < 2^120`, so split
/// arithmetic on `u128` numerators cannot wrap below this cap.
pub const DEPTH_CAP: u32 = 75;

/// An exact rational in `[0, 1]` with a power-of-three denominator.
///
/// Canonical form: the exponent is minimal, i.e. the numerator is not
/// divisible by 3 unless the value is 0 (`0/3^0`) or 1 (`1/3^0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TernaryFraction {
    num: u128,
    exp: u32,
}

impl TernaryFraction {
    pub const ZERO: Self = Self { num: 0, exp: 0 };
    pub const ONE: Self = Self { num: 1, exp: 0 };

    /// Builds `num / 3^exp`, canonicalizing. Fails if the value exceeds 1 or
    /// the exponent exceeds [`DEPTH_CAP`].
    pub fn new(num: u128, exp: u32) -> Result<Self> {
        if exp > DEPTH_CAP {
            return Err(Error::DepthOverflow { cap: DEPTH_CAP });
        }
        if num > pow3(exp) {
            return Err(Error::InvalidConfig(format!(
                "ternary fraction {num}/3^{exp} exceeds 1"
            )));
        }
        Ok(Self::canonical(num, exp))
    }

    fn canonical(mut num: u128, mut exp: u32) -> Self {
        while exp > 0 && num.is_multiple_of(3) {
            num /= 3;
            exp -= 1;
        }
        Self { num, exp }
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    /// The fraction as a float. Exact values at the ends, rounded in between.
    pub fn value(&self) -> f64 {
        self.num as f64 / pow3(self.exp) as f64
    }

    /// Exact comparison via a common power-of-three denominator.
    pub fn cmp_exact(&self, other: &Self) -> std::cmp::Ordering {
        let e = self.exp.max(other.exp);
        let a = self.num * pow3(e - self.exp);
        let b = other.num * pow3(e - other.exp);
        a.cmp(&b)
    }

    /// Exact absolute difference `|self - other|`, canonicalized.
    pub fn abs_diff(&self, other: &Self) -> Self {
        let e = self.exp.max(other.exp);
        let a = self.num * pow3(e - self.exp);
        let b = other.num * pow3(e - other.exp);
        Self::canonical(a.abs_diff(b), e)
    }
}

impl fmt::Display for TernaryFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/3^{}", self.num, self.exp)
    }
}

fn pow3(e: u32) -> u128 {
    3u128.pow(e)
}

/// Exact `t_a + (2/3)(t_b - t_a)`, the coordinate produced when a side is
/// split at two thirds of the way from `t_a` to `t_b`. Works for either
/// orientation. Never rounds.
pub fn split_two_thirds(t_a: TernaryFraction, t_b: TernaryFraction) -> Result<TernaryFraction> {
    if t_a == t_b {
        return Err(Error::DegenerateInterval);
    }
    // a + (2/3)(b - a) = (a + 2b) / 3 over a common denominator.
    let e = t_a.exp.max(t_b.exp);
    let a = t_a.num * pow3(e - t_a.exp);
    let b = t_b.num * pow3(e - t_b.exp);
    let out = TernaryFraction::canonical(a + 2 * b, e + 1);
    if out.exp > DEPTH_CAP {
        return Err(Error::DepthOverflow { cap: DEPTH_CAP });
    }
    Ok(out)
}

/// Identity of a trial point: one exact fraction per dimension, relative to
/// the root domain. Equal keys denote identical real-space points.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexKey {
    fractions: Vec<TernaryFraction>,
}

impl VertexKey {
    pub fn new(fractions: Vec<TernaryFraction>) -> Self {
        Self { fractions }
    }

    /// The root domain's lower vertex (all fractions zero).
    pub fn root_lower(dim: usize) -> Self {
        Self {
            fractions: vec![TernaryFraction::ZERO; dim],
        }
    }

    /// The root domain's upper vertex (all fractions one).
    pub fn root_upper(dim: usize) -> Self {
        Self {
            fractions: vec![TernaryFraction::ONE; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.fractions.len()
    }

    pub fn fractions(&self) -> &[TernaryFraction] {
        &self.fractions
    }

    pub fn fraction(&self, j: usize) -> TernaryFraction {
        self.fractions[j]
    }

    /// Returns a copy with coordinate `j` replaced.
    pub fn with_fraction(&self, j: usize, f: TernaryFraction) -> Self {
        let mut fractions = self.fractions.clone();
        fractions[j] = f;
        Self { fractions }
    }
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.fractions.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Maps a key into real space: coordinate `j` is
/// `root_lower[j] + fraction(j) * (root_upper[j] - root_lower[j])`.
pub fn to_real(key: &VertexKey, root_lower: &[f64], root_upper: &[f64]) -> Point {
    debug_assert_eq!(key.dim(), root_lower.len());
    let coords = key
        .fractions
        .iter()
        .zip(root_lower.iter().zip(root_upper))
        .map(|(t, (a, b))| {
            if t.num == 0 {
                *a
            } else if t.exp == 0 {
                *b
            } else {
                a + t.value() * (b - a)
            }
        })
        .collect();
    Point::new(coords).expect("real-space vertex coordinates are finite")
}

/// The shared trial database: at most one immutable record per vertex key.
pub struct VertexDB {
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    index: HashMap<VertexKey, usize>,
    entries: Vec<(VertexKey, TrialRecord)>,
    reuse_hits: u64,
}

impl VertexDB {
    pub fn new(root_lower: Vec<f64>, root_upper: Vec<f64>) -> Self {
        Self {
            root_lower,
            root_upper,
            index: HashMap::new(),
            entries: Vec::new(),
            reuse_hits: 0,
        }
    }

    /// Number of stored records; equals the trial count of the owning run.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lookups that found an existing record instead of evaluating.
    pub fn reuse_hits(&self) -> u64 {
        self.reuse_hits
    }

    pub fn root_lower(&self) -> &[f64] {
        &self.root_lower
    }

    pub fn root_upper(&self) -> &[f64] {
        &self.root_upper
    }

    pub fn contains(&self, key: &VertexKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &VertexKey) -> Option<&TrialRecord> {
        self.index.get(key).map(|&i| &self.entries[i].1)
    }

    /// Record at trial position `i` (insertion order).
    pub fn record(&self, i: usize) -> &TrialRecord {
        &self.entries[i].1
    }

    /// Real-space point named by `key` on this database's root domain.
    pub fn real_point(&self, key: &VertexKey) -> Point {
        to_real(key, &self.root_lower, &self.root_upper)
    }

    /// Trials in evaluation order.
    pub fn trial_log(&self) -> impl Iterator<Item = &TrialRecord> {
        self.entries.iter().map(|(_, r)| r)
    }

    /// Returns the stored record for `key`, invoking `producer` exactly once
    /// if the key is new. The producer receives the key's real-space point.
    /// The returned index is the record's trial position, and the flag says
    /// whether a new evaluation happened.
    pub fn find_or_record(
        &mut self,
        key: VertexKey,
        producer: impl FnOnce(Point) -> Result<TrialRecord>,
    ) -> Result<(usize, bool)> {
        if let Some(&i) = self.index.get(&key) {
            self.reuse_hits += 1;
            return Ok((i, false));
        }
        let point = self.real_point(&key);
        let record = producer(point.clone())?;
        for (want, got) in point.coords().iter().zip(record.point.coords()) {
            if (want - got).abs() > 1e-12 {
                return Err(Error::VertexCollision {
                    expected: point.coords().to_vec(),
                    stored: record.point.coords().to_vec(),
                });
            }
        }
        let i = self.entries.len();
        self.index.insert(key.clone(), i);
        self.entries.push((key, record));
        Ok((i, true))
    }

    /// Convenience producer: evaluate `problem` at the key's point.
    pub fn find_or_evaluate(
        &mut self,
        key: VertexKey,
        problem: &Problem,
        counter: &mut TrialCounter,
    ) -> Result<(usize, bool)> {
        self.find_or_record(key, |p| crate::objective::evaluate(problem, p, counter))
    }

    /// Plain-text dump, one line per vertex in insertion order:
    /// `fractions <TAB> value <TAB> gradient...`.
    pub fn dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for (key, rec) in &self.entries {
            write!(out, "{key}\t{}\t", rec.value)?;
            for (i, g) in rec.gradient.iter().enumerate() {
                if i > 0 {
                    write!(out, " ")?;
                }
                write!(out, "{g}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(num: u128, exp: u32) -> TernaryFraction {
        TernaryFraction::new(num, exp).unwrap()
    }

    #[test]
    fn canonicalization() {
        assert_eq!(tf(0, 5), TernaryFraction::ZERO);
        assert_eq!(tf(243, 5), TernaryFraction::ONE);
        assert_eq!(tf(3, 2), tf(1, 1));
        assert_eq!(tf(6, 3), tf(2, 2));
        assert_eq!(tf(7, 3).numerator(), 7);
    }

    #[test]
    fn split_root_interval() {
        let r = split_two_thirds(TernaryFraction::ZERO, TernaryFraction::ONE).unwrap();
        assert_eq!(r, tf(2, 1));
    }

    #[test]
    fn split_reversed_orientation() {
        let r = split_two_thirds(TernaryFraction::ONE, TernaryFraction::ZERO).unwrap();
        assert_eq!(r, tf(1, 1));
    }

    #[test]
    fn split_nested() {
        // 1/3 + (2/3)(1 - 1/3) = 7/9
        let r = split_two_thirds(tf(1, 1), TernaryFraction::ONE).unwrap();
        assert_eq!(r, tf(7, 2));
    }

    #[test]
    fn split_equal_endpoints_degenerate() {
        assert!(matches!(
            split_two_thirds(tf(1, 1), tf(1, 1)),
            Err(Error::DegenerateInterval)
        ));
    }

    #[test]
    fn split_depth_overflow() {
        // Drive one side to the cap: repeatedly split [x, 1].
        let mut a = TernaryFraction::ZERO;
        let b = TernaryFraction::ONE;
        let mut last = Ok(a);
        for _ in 0..=DEPTH_CAP {
            last = split_two_thirds(a, b);
            match last {
                Ok(v) => a = v,
                Err(_) => break,
            }
        }
        assert!(matches!(last, Err(Error::DepthOverflow { .. })));
    }

    #[test]
    fn to_real_maps_corners_and_interior() {
        let lo = VertexKey::root_lower(3);
        assert_eq!(to_real(&lo, &[0.0; 3], &[1.0; 3]).coords(), &[0.0; 3]);

        let hi = VertexKey::root_upper(2);
        assert_eq!(to_real(&hi, &[-1.0, -1.0], &[2.0, 2.0]).coords(), &[2.0, 2.0]);

        let key = VertexKey::new(vec![tf(2, 1), tf(1, 1)]);
        let p = to_real(&key, &[0.0, 0.0], &[3.0, 3.0]);
        assert!((p.coords()[0] - 2.0).abs() < 1e-15);
        assert!((p.coords()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn find_or_record_invokes_producer_once() {
        let mut db = VertexDB::new(vec![0.0], vec![1.0]);
        let key = VertexKey::new(vec![tf(2, 1)]);
        let mut calls = 0;
        let (i, was_new) = db
            .find_or_record(key.clone(), |p| {
                calls += 1;
                Ok(TrialRecord {
                    value: p.coords()[0],
                    gradient: vec![1.0],
                    point: p,
                })
            })
            .unwrap();
        assert!(was_new);
        assert_eq!(calls, 1);
        assert_eq!(i, 0);

        let (i2, was_new2) = db
            .find_or_record(key, |_| panic!("producer must not run on reuse"))
            .unwrap();
        assert!(!was_new2);
        assert_eq!(i2, 0);
        assert_eq!(db.reuse_hits(), 1);
        assert_eq!(db.len(), 1);
    }

    #[test]
    fn mismatched_record_is_a_collision() {
        let mut db = VertexDB::new(vec![0.0], vec![1.0]);
        let key = VertexKey::new(vec![tf(1, 1)]);
        let err = db
            .find_or_record(key, |_| {
                Ok(TrialRecord {
                    point: Point::new(vec![0.9]).unwrap(),
                    value: 0.0,
                    gradient: vec![0.0],
                })
            })
            .unwrap_err();
        assert!(matches!(err, Error::VertexCollision { .. }));
    }

    #[test]
    fn dump_is_insertion_ordered() {
        let mut db = VertexDB::new(vec![0.0], vec![1.0]);
        for num in [2u128, 1] {
            db.find_or_record(VertexKey::new(vec![tf(num, 1)]), |p| {
                Ok(TrialRecord {
                    value: p.coords()[0],
                    gradient: vec![1.0],
                    point: p,
                })
            })
            .unwrap();
        }
        let mut buf = Vec::new();
        db.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("2/3^1\t"));
        assert!(lines[1].starts_with("1/3^1\t"));
    }

    #[test]
    fn exact_comparison_and_difference() {
        assert_eq!(tf(2, 1).cmp_exact(&tf(5, 2)), std::cmp::Ordering::Greater); // 6/9 > 5/9
        assert_eq!(tf(1, 1).cmp_exact(&tf(3, 2)), std::cmp::Ordering::Equal);
        assert_eq!(tf(2, 1).abs_diff(&tf(1, 1)), tf(1, 1));
        assert_eq!(TernaryFraction::ONE.abs_diff(&tf(7, 2)), tf(2, 2));
    }

    mod properties {
        use super::*;
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use proptest::prelude::*;

        fn ratio(t: TernaryFraction) -> BigRational {
            BigRational::new(
                BigInt::from(t.numerator()),
                BigInt::from(3u8).pow(t.exponent()),
            )
        }

        proptest! {
            /// Any walk through nested subdivisions stays canonical and
            /// agrees with arbitrary-precision rational arithmetic.
            #[test]
            fn split_walk_is_closed_and_exact(choices in proptest::collection::vec(0u8..3, 1..40)) {
                let mut a = TernaryFraction::ZERO;
                let mut b = TernaryFraction::ONE;
                let two_thirds = BigRational::new(BigInt::from(2), BigInt::from(3));
                for c in choices {
                    let u = split_two_thirds(a, b).unwrap();
                    let v = split_two_thirds(b, a).unwrap();
                    prop_assert_eq!(ratio(u), ratio(a) + &two_thirds * (ratio(b) - ratio(a)));
                    prop_assert_eq!(ratio(v), ratio(b) + &two_thirds * (ratio(a) - ratio(b)));
                    for s in [u, v] {
                        prop_assert!(
                            s.numerator() == 0 || s.exponent() == 0 || s.numerator() % 3 != 0,
                            "non-canonical fraction {}", s
                        );
                    }
                    // child diagonals of the 1-D subdivision
                    (a, b) = match c {
                        0 => (a, v),
                        1 => (u, v),
                        _ => (u, b),
                    };
                }
            }

            /// Exact ordering agrees with the float ordering whenever the
            /// float values are distinguishable.
            #[test]
            fn ordering_matches_rationals(na in 0u128..confine(12), ea in 0u32..12, nb in 0u128..confine(12), eb in 0u32..12) {
                let a = TernaryFraction::new(na % (pow3(ea) + 1), ea).unwrap();
                let b = TernaryFraction::new(nb % (pow3(eb) + 1), eb).unwrap();
                prop_assert_eq!(a.cmp_exact(&b), ratio(a).cmp(&ratio(b)));
            }
        }

        fn confine(exp: u32) -> u128 {
            pow3(exp) + 1
        }
    }
}
