//! Reference LTL semantics over lasso traces, written as a direct recursion
//! on (formula, position) with linear scans. Deliberately independent of the
//! two-sweep fixpoint evaluator in the library so the two can cross-check
//! each other.

use cegsyn_core::ltl::{LassoTrace, LtlFormula};

/// Evaluate `f` at `pos` on the infinite word `stem · loop^ω`.
///
/// Every temporal scan is bounded by `stem + loop` further steps: after that
/// many positions the normalized position set has been covered in full, so a
/// witness (or violation) not yet seen never appears.
pub fn naive_eval(f: &LtlFormula, t: &LassoTrace, pos: usize) -> bool {
    let window = t.len();
    match f {
        LtlFormula::True => true,
        LtlFormula::False => false,
        LtlFormula::Atom(name) => *t
            .at(pos)
            .get(name)
            .unwrap_or_else(|| panic!("trace lacks atom `{name}`")),
        LtlFormula::Not(g) => !naive_eval(g, t, pos),
        LtlFormula::And(a, b) => naive_eval(a, t, pos) && naive_eval(b, t, pos),
        LtlFormula::Or(a, b) => naive_eval(a, t, pos) || naive_eval(b, t, pos),
        LtlFormula::Implies(a, b) => !naive_eval(a, t, pos) || naive_eval(b, t, pos),
        LtlFormula::Iff(a, b) => naive_eval(a, t, pos) == naive_eval(b, t, pos),
        LtlFormula::Next(g) => naive_eval(g, t, pos + 1),
        LtlFormula::Globally(g) => (pos..pos + window).all(|j| naive_eval(g, t, j)),
        LtlFormula::Eventually(g) => (pos..pos + window).any(|j| naive_eval(g, t, j)),
        LtlFormula::Until(a, b) => {
            for j in pos..pos + window {
                if naive_eval(b, t, j) {
                    return true;
                }
                if !naive_eval(a, t, j) {
                    return false;
                }
            }
            false
        }
        LtlFormula::WeakUntil(a, b) => {
            for j in pos..pos + window {
                if naive_eval(b, t, j) {
                    return true;
                }
                if !naive_eval(a, t, j) {
                    return false;
                }
            }
            true
        }
        LtlFormula::Release(a, b) => {
            for j in pos..pos + window {
                if !naive_eval(b, t, j) {
                    return false;
                }
                if naive_eval(a, t, j) {
                    return true;
                }
            }
            true
        }
    }
}
