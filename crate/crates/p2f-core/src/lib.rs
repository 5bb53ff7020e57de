//! Execution-free verification and repair for MCL contract programs.
//!
//! The pipeline, front to back:
//!
//! 1. [`lang`] — parse and typecheck `.mcl` sources.
//! 2. [`vcgen`] — translate each routine into per-clause proof obligations
//!    via passification and weakest preconditions.
//! 3. [`solver`] — decide obligations over a bounded integer domain and
//!    enumerate distinct counterexample models for failing ones.
//! 4. [`cex`] — turn solver models into counterexamples: per-program-point
//!    state sequences attached to a proof failure.
//! 5. [`inference`] — infer predicates that hold in the initial state of all
//!    counterexamples of one failure, then compound them by disjunction.
//! 6. [`repair`] — synthesize candidate contract and implementation fixes
//!    from those predicates and keep only candidates that re-verify.

pub mod cex;
pub mod diffutil;
pub mod inference;
pub mod lang;
pub mod repair;
pub mod solver;
pub mod span;
pub mod vcgen;

/// Concrete value of an MCL variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn as_int(self) -> i64 {
        match self {
            Value::Int(n) => n,
            Value::Bool(_) => panic!("expected INTEGER value"),
        }
    }

    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(_) => panic!("expected BOOLEAN value"),
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(true) => write!(f, "True"),
            Value::Bool(false) => write!(f, "False"),
        }
    }
}

/// Euclidean modulo: result in `[0, |divisor|)`; defined as the dividend when
/// the divisor is zero so evaluation is total (the verifier emits a dedicated
/// obligation for zero divisors).
pub fn euclid_mod(a: i64, m: i64) -> i64 {
    if m == 0 {
        a
    } else {
        a.rem_euclid(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclid_mod_is_nonnegative() {
        assert_eq!(euclid_mod(7, 3), 1);
        assert_eq!(euclid_mod(-7, 3), 2);
        assert_eq!(euclid_mod(7, -3), 1);
        assert_eq!(euclid_mod(-7, -3), 2);
        assert_eq!(euclid_mod(24, 24), 0);
    }

    #[test]
    fn euclid_mod_total_on_zero_divisor() {
        assert_eq!(euclid_mod(5, 0), 5);
        assert_eq!(euclid_mod(-5, 0), -5);
    }
}
