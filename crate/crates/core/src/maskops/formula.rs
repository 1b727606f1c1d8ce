use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based concept identifier as it appears in the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub u32);

impl ConceptId {
    /// 0-based position in per-concept arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> Self {
        ConceptId(i as u32 + 1)
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "OR")]
    Or,
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "AND_NOT")]
    AndNot,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::Or, Op::And, Op::AndNot];

    #[inline]
    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            Op::Or => a | b,
            Op::And => a & b,
            Op::AndNot => a & !b,
        }
    }

    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            Op::Or => a || b,
            Op::And => a && b,
            Op::AndNot => a && !b,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Op::Or => 0,
            Op::And => 1,
            Op::AndNot => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Or => "OR",
            Op::And => "AND",
            Op::AndNot => "AND NOT",
        }
    }

    pub fn parse(s: &str) -> Result<Op> {
        match s {
            "OR" | "or" => Ok(Op::Or),
            "AND" | "and" => Ok(Op::And),
            "AND_NOT" | "AND NOT" | "and_not" => Ok(Op::AndNot),
            other => Err(Error::InvalidInput(format!("unknown connective {other:?}"))),
        }
    }
}

/// Left-deep formula: `((head op1 t1) op2 t2) ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    head: ConceptId,
    tail: Vec<(Op, ConceptId)>,
}

impl Formula {
    pub fn atom(c: ConceptId) -> Self {
        Formula {
            head: c,
            tail: Vec::new(),
        }
    }

    pub fn new(head: ConceptId, tail: Vec<(Op, ConceptId)>) -> Self {
        Formula { head, tail }
    }

    pub fn extend(&self, op: Op, term: ConceptId) -> Formula {
        let mut tail = Vec::with_capacity(self.tail.len() + 1);
        tail.extend_from_slice(&self.tail);
        tail.push((op, term));
        Formula {
            head: self.head,
            tail,
        }
    }

    pub fn head(&self) -> ConceptId {
        self.head
    }

    pub fn tail(&self) -> &[(Op, ConceptId)] {
        &self.tail
    }

    pub fn arity(&self) -> usize {
        1 + self.tail.len()
    }

    /// Terms in formula order, repeats included.
    pub fn terms(&self) -> impl Iterator<Item = ConceptId> + '_ {
        std::iter::once(self.head).chain(self.tail.iter().map(|&(_, t)| t))
    }

    /// Left prefix of the given arity (1 ≤ arity ≤ self.arity()).
    pub fn prefix(&self, arity: usize) -> Formula {
        Formula {
            head: self.head,
            tail: self.tail[..arity - 1].to_vec(),
        }
    }

    pub fn eval(&self, mut value: impl FnMut(ConceptId) -> bool) -> bool {
        let mut acc = value(self.head);
        for &(op, t) in &self.tail {
            acc = op.eval(acc, value(t));
        }
        acc
    }

    /// Reorders terms inside commutative runs into ascending id order.
    ///
    /// A run is a maximal sequence of identical connectives. For a leading
    /// OR/AND run the head joins the run; AND_NOT runs only permute the
    /// subtracted terms (`(x - a) - b = (x - b) - a`).
    pub fn canonical(&self) -> Formula {
        let mut terms: Vec<ConceptId> = self.terms().collect();
        let ops: Vec<Op> = self.tail.iter().map(|&(op, _)| op).collect();
        let mut i = 0;
        while i < ops.len() {
            let op = ops[i];
            let mut j = i;
            while j < ops.len() && ops[j] == op {
                j += 1;
            }
            // ops[i..j] connect terms[i+1..=j]; the leading run also owns terms[0].
            let start = if i == 0 && op != Op::AndNot { 0 } else { i + 1 };
            terms[start..=j].sort_unstable();
            i = j;
        }
        Formula {
            head: terms[0],
            tail: ops.into_iter().zip(terms.into_iter().skip(1)).collect(),
        }
    }

    /// Total order used to break score ties: shorter arity first, then the
    /// canonical term ids, then the connectives.
    pub fn tie_break_cmp(&self, other: &Formula) -> Ordering {
        self.arity().cmp(&other.arity()).then_with(|| {
            let a = self.canonical();
            let b = other.canonical();
            a.terms()
                .cmp(b.terms())
                .then_with(|| a.tail.iter().map(|t| t.0).cmp(b.tail.iter().map(|t| t.0)))
        })
    }

    /// Space-separated tokens, e.g. `3 OR 7 AND_NOT 2`.
    pub fn to_compact(&self) -> String {
        let mut s = self.head.0.to_string();
        for &(op, t) in &self.tail {
            let name = match op {
                Op::Or => "OR",
                Op::And => "AND",
                Op::AndNot => "AND_NOT",
            };
            s.push_str(&format!(" {name} {}", t.0));
        }
        s
    }

    pub fn parse_compact(text: &str) -> Result<Formula> {
        let bad = || Error::InvalidInput(format!("malformed formula {text:?}"));
        let id = |tok: &str| -> Result<ConceptId> {
            match tok.trim_start_matches('#').parse::<u32>() {
                Ok(v) if v >= 1 => Ok(ConceptId(v)),
                _ => Err(bad()),
            }
        };
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.is_empty() || toks.len().is_multiple_of(2) {
            return Err(bad());
        }
        let head = id(toks[0])?;
        let tail = toks[1..]
            .chunks(2)
            .map(|pair| Ok((Op::parse(pair[0])?, id(pair[1])?)))
            .collect::<Result<_>>()?;
        Ok(Formula { head, tail })
    }

    /// Renders with concept names, e.g. `((sky OR tree) AND NOT car)`.
    pub fn display_with<'a>(&self, name: impl Fn(ConceptId) -> &'a str) -> String {
        let mut s = name(self.head).to_string();
        for &(op, t) in &self.tail {
            s = format!("({s} {} {})", op.as_str(), name(t));
        }
        s
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.terms().map(|t| t.to_string()).collect();
        let mut s = ids[0].clone();
        for (k, &(op, _)) in self.tail.iter().enumerate() {
            s = format!("({s} {} {})", op.as_str(), ids[k + 1]);
        }
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: u32) -> ConceptId {
        ConceptId(i)
    }

    #[test]
    fn canonical_sorts_commutative_runs() {
        let f = Formula::new(c(5), vec![(Op::Or, c(2)), (Op::Or, c(3))]);
        assert_eq!(f.canonical(), Formula::new(c(2), vec![(Op::Or, c(3)), (Op::Or, c(5))]));

        let g = Formula::new(c(5), vec![(Op::AndNot, c(4)), (Op::AndNot, c(1))]);
        assert_eq!(g.canonical(), Formula::new(c(5), vec![(Op::AndNot, c(1)), (Op::AndNot, c(4))]));

        // The compound left side of a later run is not permuted with it.
        let h = Formula::new(c(9), vec![(Op::AndNot, c(1)), (Op::Or, c(3))]);
        assert_eq!(h.canonical(), h);
    }

    #[test]
    fn compact_round_trip() {
        let f = Formula::new(c(3), vec![(Op::Or, c(7)), (Op::AndNot, c(2))]);
        assert_eq!(f.to_compact(), "3 OR 7 AND_NOT 2");
        assert_eq!(Formula::parse_compact(&f.to_compact()).unwrap(), f);
        assert_eq!(Formula::parse_compact("#4").unwrap(), Formula::atom(c(4)));
        for bad in ["", "3 OR", "0", "3 XOR 4", "a"] {
            assert!(Formula::parse_compact(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn tie_break_prefers_shorter_then_smaller_ids() {
        let a = Formula::atom(c(7));
        let b = Formula::new(c(1), vec![(Op::Or, c(2))]);
        assert_eq!(a.tie_break_cmp(&b), Ordering::Less);
        let x = Formula::new(c(3), vec![(Op::Or, c(1))]);
        assert_eq!(b.tie_break_cmp(&x), Ordering::Less);
        let y = Formula::new(c(1), vec![(Op::And, c(2))]);
        assert_eq!(b.tie_break_cmp(&y), Ordering::Less);
        assert_eq!(x.tie_break_cmp(&Formula::new(c(1), vec![(Op::Or, c(3))])), Ordering::Equal);
    }

    #[test]
    fn display_is_left_deep() {
        let f = Formula::new(c(1), vec![(Op::Or, c(2)), (Op::AndNot, c(3))]);
        assert_eq!(f.to_string(), "((#1 OR #2) AND NOT #3)");
        assert_eq!(f.prefix(2).to_string(), "(#1 OR #2)");
    }

    #[test]
    fn eval_folds_left() {
        // (a OR b) AND c with a=1, b=0, c=0 → false; a OR (b AND c) would be true.
        let f = Formula::new(c(1), vec![(Op::Or, c(2)), (Op::And, c(3))]);
        assert!(!f.eval(|t| t == c(1)));
    }
}
