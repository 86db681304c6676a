use super::{Elementary, Expr, Node};

/// Outcome of a zero test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Canonical form is the zero tree; the expression is identically zero.
    Zero,
    /// Nonzero canonical form inside the decidable class.
    NonZero,
    /// Nonzero canonical form outside the decidable class: undecided.
    Unknown,
}

impl Verdict {
    pub fn is_zero(self) -> bool {
        self == Verdict::Zero
    }
}

/// Decide whether `e` vanishes identically.
///
/// Sound: `Zero` is only returned for the zero tree. The verdict is complete
/// (never `Unknown`) for Laurent polynomials in symbols, jet coordinates,
/// opaque function applications, and `sin`/`cos` of a single atom.
pub fn is_zero(e: &Expr) -> Verdict {
    if e.is_zero_literal() {
        return Verdict::Zero;
    }
    if in_decidable_class(e) {
        Verdict::NonZero
    } else {
        Verdict::Unknown
    }
}

fn in_decidable_class(e: &Expr) -> bool {
    !e.any(&|x| match x.node() {
        Node::Fun(Elementary::Exp | Elementary::Log, _) => true,
        Node::Fun(_, arg) => !arg.is_atom(),
        Node::Poly(ts) => ts.iter().any(|t| {
            t.factors
                .iter()
                .any(|f| matches!(f.base.node(), Node::Poly(_) | Node::Num(_)))
        }),
        _ => false,
    })
}
