use std::fmt;

use serde::{Serialize, Serializer};

/// Inference rules of the structural operational semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    TFire,
    TNotEnabled,
    TNoFire,
    ListEmpty,
    ListFire,
    ListNoLast,
    ListNo,
    ListFireJunctionFire,
    ListEnd,
    ListFireJunctionNo,
    SdNo,
    SdIntFire,
    SdFire,
    SdInit,
    SdExit,
    And,
    AndInit,
    AndExit,
    OrExtFire,
    OrExtFireOut,
    OrNo,
    OrIntFire,
    OrFire,
    OrInitNoState,
    OrInitEmptyPath,
    OrInit,
    OrExit,
}

impl Rule {
    pub const ALL: [Rule; 27] = [
        Rule::TFire,
        Rule::TNotEnabled,
        Rule::TNoFire,
        Rule::ListEmpty,
        Rule::ListFire,
        Rule::ListNoLast,
        Rule::ListNo,
        Rule::ListFireJunctionFire,
        Rule::ListEnd,
        Rule::ListFireJunctionNo,
        Rule::SdNo,
        Rule::SdIntFire,
        Rule::SdFire,
        Rule::SdInit,
        Rule::SdExit,
        Rule::And,
        Rule::AndInit,
        Rule::AndExit,
        Rule::OrExtFire,
        Rule::OrExtFireOut,
        Rule::OrNo,
        Rule::OrIntFire,
        Rule::OrFire,
        Rule::OrInitNoState,
        Rule::OrInitEmptyPath,
        Rule::OrInit,
        Rule::OrExit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::TFire => "t-FIRE",
            Rule::TNotEnabled => "t-NOT-ENABLED",
            Rule::TNoFire => "t-NO-FIRE",
            Rule::ListEmpty => "T-EMPTY",
            Rule::ListFire => "T-FIRE",
            Rule::ListNoLast => "T-NO-LAST",
            Rule::ListNo => "T-NO",
            Rule::ListFireJunctionFire => "T-FIRE-J-F",
            Rule::ListEnd => "T-END",
            Rule::ListFireJunctionNo => "T-FIRE-J-N",
            Rule::SdNo => "SD-NO",
            Rule::SdIntFire => "SD-INT-FIRE",
            Rule::SdFire => "SD-FIRE",
            Rule::SdInit => "SD-INIT",
            Rule::SdExit => "SD-EXIT",
            Rule::And => "AND",
            Rule::AndInit => "AND-INIT",
            Rule::AndExit => "AND-EXIT",
            Rule::OrExtFire => "OR-EXT-FIRE",
            Rule::OrExtFireOut => "OR-EXT-FIRE-OUT",
            Rule::OrNo => "OR-NO",
            Rule::OrIntFire => "OR-INT-FIRE",
            Rule::OrFire => "OR-FIRE",
            Rule::OrInitNoState => "OR-INIT-NO-STATE",
            Rule::OrInitEmptyPath => "OR-INIT-EMPTY-PATH",
            Rule::OrInit => "OR-INIT",
            Rule::OrExit => "OR-EXIT",
        }
    }

    /// Allowed number of premises. `None` as upper bound means one premise
    /// per parallel substate.
    pub fn arity(self) -> (usize, Option<usize>) {
        use Rule::*;
        match self {
            TFire | TNotEnabled | TNoFire | ListEmpty | OrInitNoState => (0, Some(0)),
            ListFire | ListNoLast | SdInit | SdExit | OrFire | OrInit => (1, Some(1)),
            ListNo | ListFireJunctionFire | ListEnd | SdFire | OrIntFire | OrInitEmptyPath => (2, Some(2)),
            ListFireJunctionNo | SdNo | SdIntFire => (3, Some(3)),
            OrExtFire => (1, Some(2)),
            OrNo | OrExit | OrExtFireOut => (0, Some(1)),
            And | AndInit | AndExit => (1, None),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Proof tree justifying one symbolic step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: String,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn leaf(rule: Rule, conclusion: String) -> Self {
        Derivation { rule, conclusion, premises: Vec::new() }
    }

    pub fn node(rule: Rule, conclusion: String, premises: Vec<Derivation>) -> Self {
        Derivation { rule, conclusion, premises }
    }

    /// Every node satisfies its rule's arity.
    pub fn well_formed(&self) -> bool {
        let (lo, hi) = self.rule.arity();
        let n = self.premises.len();
        n >= lo && hi.is_none_or(|h| n <= h) && self.premises.iter().all(Derivation::well_formed)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn rules(&self) -> Vec<Rule> {
        let mut out = vec![self.rule];
        for p in &self.premises {
            out.extend(p.rules());
        }
        out
    }

    /// Indented text rendering, premises above their conclusion.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s, 0);
        s
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        for p in &self.premises {
            p.render_into(out, depth + 1);
        }
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(&format!("[{}] {}\n", self.rule, self.conclusion));
    }
}
