//! Lattice-law checking over sample values.

use std::fmt;

use rand::Rng;

use crate::lattice::Lattice;

/// The first law violation found, with the offending inputs.
#[derive(Clone, Debug, PartialEq)]
pub enum LawViolation<S> {
    EmptySample,
    Idempotence(S),
    BottomIdentity(S),
    Commutativity(S, S),
    /// `merge(a, b)` is not an upper bound of `a` (or `leq` disagrees with `merge`).
    UpperBound(S, S),
    Associativity(S, S, S),
}

impl<S> LawViolation<S> {
    pub fn law(&self) -> &'static str {
        match self {
            LawViolation::EmptySample => "non-empty sample",
            LawViolation::Idempotence(_) => "idempotence",
            LawViolation::BottomIdentity(_) => "bottom identity",
            LawViolation::Commutativity(..) => "commutativity",
            LawViolation::UpperBound(..) => "upper bound",
            LawViolation::Associativity(..) => "associativity",
        }
    }
}

impl<S: fmt::Debug> fmt::Display for LawViolation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawViolation::EmptySample => write!(f, "no samples given"),
            LawViolation::Idempotence(a) | LawViolation::BottomIdentity(a) => {
                write!(f, "{} violated by {a:?}", self.law())
            }
            LawViolation::Commutativity(a, b) | LawViolation::UpperBound(a, b) => {
                write!(f, "{} violated by ({a:?}, {b:?})", self.law())
            }
            LawViolation::Associativity(a, b, c) => {
                write!(f, "{} violated by ({a:?}, {b:?}, {c:?})", self.law())
            }
        }
    }
}

/// Number of law instances evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LawReport {
    pub idempotence: usize,
    pub commutativity: usize,
    pub associativity: usize,
}

fn check_single<S: Lattice>(a: &S) -> Result<(), LawViolation<S>> {
    if a.merge(a) != *a {
        return Err(LawViolation::Idempotence(a.clone()));
    }
    if a.merge(&S::bottom()) != *a || S::bottom().merge(a) != *a {
        return Err(LawViolation::BottomIdentity(a.clone()));
    }
    Ok(())
}

fn check_pair<S: Lattice>(a: &S, b: &S) -> Result<(), LawViolation<S>> {
    let ab = a.merge(b);
    if ab != b.merge(a) {
        return Err(LawViolation::Commutativity(a.clone(), b.clone()));
    }
    if ab.merge(a) != ab || !a.leq(&ab) || !b.leq(&ab) || a.leq(b) != (ab == *b) {
        return Err(LawViolation::UpperBound(a.clone(), b.clone()));
    }
    Ok(())
}

fn check_triple<S: Lattice>(a: &S, b: &S, c: &S) -> Result<(), LawViolation<S>> {
    if a.merge(b).merge(c) != a.merge(&b.merge(c)) {
        return Err(LawViolation::Associativity(a.clone(), b.clone(), c.clone()));
    }
    Ok(())
}

/// Checks idempotence on every sample, commutativity on every ordered pair and
/// associativity on every ordered triple. Cubic in the sample size; use
/// [`check_laws_sampled`] for large runs.
pub fn check_laws<S: Lattice>(samples: &[S]) -> Result<LawReport, LawViolation<S>> {
    if samples.is_empty() {
        return Err(LawViolation::EmptySample);
    }
    let mut report = LawReport::default();
    for a in samples {
        check_single(a)?;
        report.idempotence += 1;
    }
    for a in samples {
        for b in samples {
            check_pair(a, b)?;
            report.commutativity += 1;
        }
    }
    for a in samples {
        for b in samples {
            for c in samples {
                check_triple(a, b, c)?;
                report.associativity += 1;
            }
        }
    }
    Ok(report)
}

/// Draws `count` fresh singles, pairs and triples from `gen` and checks the laws
/// on each.
pub fn check_laws_sampled<S, R, G>(
    rng: &mut R,
    mut gen: G,
    count: usize,
) -> Result<LawReport, LawViolation<S>>
where
    S: Lattice,
    R: Rng,
    G: FnMut(&mut R) -> S,
{
    if count == 0 {
        return Err(LawViolation::EmptySample);
    }
    let mut report = LawReport::default();
    for _ in 0..count {
        let a = gen(rng);
        check_single(&a)?;
        report.idempotence += 1;

        let (a, b) = (gen(rng), gen(rng));
        check_pair(&a, &b)?;
        report.commutativity += 1;

        let (a, b, c) = (gen(rng), gen(rng), gen(rng));
        check_triple(&a, &b, &c)?;
        report.associativity += 1;
    }
    Ok(report)
}
