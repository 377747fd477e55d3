//! Program bank: programs indexed by cost and type, plus the signature set
//! used for observational-equivalence pruning.

use std::collections::{BTreeMap, HashSet};
use std::io::{self, Write};

use crate::grammar::{Grammar, TypeId};
use crate::interp::{Program, Signature};

/// A cost quantised to nanounits so equal sums compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CostKey(pub i64);

impl CostKey {
    pub const SCALE: f64 = 1e9;

    pub fn of(cost: f64) -> CostKey {
        CostKey((cost * Self::SCALE).round() as i64)
    }

    pub fn cost(self) -> f64 {
        self.0 as f64 / Self::SCALE
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub program: Program,
    pub sig: Signature,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct Bank {
    by_cost: BTreeMap<CostKey, Vec<Vec<Entry>>>,
    by_type: Vec<Vec<Entry>>,
    seen: Vec<HashSet<Signature>>,
    equivalence: bool,
    rejected: usize,
}

impl Bank {
    pub fn new(types: usize) -> Bank {
        Bank {
            by_cost: BTreeMap::new(),
            by_type: vec![Vec::new(); types],
            seen: vec![HashSet::new(); types],
            equivalence: true,
            rejected: 0,
        }
    }

    /// A bank that keeps every structurally distinct program it is given.
    pub fn disable_equivalence(mut self) -> Bank {
        self.equivalence = false;
        self
    }

    pub fn equivalence(&self) -> bool {
        self.equivalence
    }

    /// Whether a program of type `ty` with this signature would be rejected.
    pub fn is_equivalent(&self, ty: TypeId, sig: &Signature) -> bool {
        self.equivalence && self.seen[ty].contains(sig)
    }

    /// Stores `p` unless its signature was already seen for type `ty`.
    pub fn insert(&mut self, p: Program, ty: TypeId, cost: f64, sig: Signature) -> bool {
        if self.equivalence && !self.seen[ty].insert(sig.clone()) {
            self.rejected += 1;
            return false;
        }
        let n = self.by_type.len();
        let entry = Entry {
            program: p,
            sig,
            cost,
        };
        self.by_cost
            .entry(CostKey::of(cost))
            .or_insert_with(|| vec![Vec::new(); n])[ty]
            .push(entry.clone());
        self.by_type[ty].push(entry);
        true
    }

    /// Programs stored under `key` with return type `ty`, in insertion order.
    pub fn programs_at(&self, key: CostKey, ty: TypeId) -> &[Entry] {
        self.by_cost.get(&key).map_or(&[], |v| &v[ty])
    }

    /// All programs of type `ty`, in insertion order.
    pub fn of_type(&self, ty: TypeId) -> &[Entry] {
        &self.by_type[ty]
    }

    pub fn keys(&self) -> impl DoubleEndedIterator<Item = CostKey> + '_ {
        self.by_cost.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.by_type.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn clear(&mut self) {
        let equivalence = self.equivalence;
        *self = Bank::new(self.by_type.len());
        self.equivalence = equivalence;
    }

    /// One line per program: cost key, type name, prefix notation.
    pub fn dump(&self, grammar: &Grammar, out: &mut impl Write) -> io::Result<()> {
        for (key, per_type) in &self.by_cost {
            for (ty, entries) in per_type.iter().enumerate() {
                for e in entries {
                    writeln!(
                        out,
                        "{} {} {}",
                        key.0,
                        grammar.type_name(ty),
                        e.program.display(grammar)
                    )?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::Value;

    fn sig(s: &str) -> Signature {
        vec![Value::str(s)].into()
    }

    #[test]
    fn duplicate_signature_is_rejected() {
        let mut bank = Bank::new(1);
        assert!(bank.insert(Program::leaf(1000), 0, 9.8165, sig("1000")));
        let concat = Program::new(0, vec![Program::leaf(10), Program::leaf(0)]);
        assert!(!bank.insert(concat.clone(), 0, 34.0, sig("1000")));
        assert_eq!(bank.len(), 1);
        assert_eq!(bank.rejected(), 1);

        let mut open = Bank::new(1).disable_equivalence();
        assert!(open.insert(Program::leaf(1000), 0, 9.8165, sig("1000")));
        assert!(open.insert(concat, 0, 34.0, sig("1000")));
        assert_eq!(open.len(), 2);
    }

    #[test]
    fn lookup_by_key_and_type() {
        let mut bank = Bank::new(2);
        assert!(bank.programs_at(CostKey::of(1.0), 0).is_empty());
        bank.insert(Program::leaf(0), 0, 1.0, sig("a"));
        bank.insert(Program::leaf(1), 1, 1.0, vec![Value::Int(1)].into());
        bank.insert(Program::leaf(2), 0, 1.0 + 1e-12, sig("b"));
        let at = bank.programs_at(CostKey::of(1.0), 0);
        assert_eq!(at.len(), 2);
        assert_eq!(at[0].program, Program::leaf(0));
        assert_eq!(at[1].program, Program::leaf(2));
        assert_eq!(bank.programs_at(CostKey::of(1.0), 1).len(), 1);
        assert_eq!(bank.keys().count(), 1);
        bank.clear();
        assert!(bank.is_empty());
        bank.insert(Program::leaf(0), 0, 2.5, sig("a"));
        assert_eq!(bank.keys().next(), Some(CostKey(2_500_000_000)));
    }

    #[test]
    fn same_additive_expression_gives_same_key() {
        let (a, b, c) = (14.28771, 9.966013, 9.816589);
        assert_eq!(CostKey::of(a + b + c), CostKey::of(a + c + b));
    }
}
