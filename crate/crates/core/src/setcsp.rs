//! Set-constraints, string sets and the `set-unsat` frustration measure.
//!
//! A set-constraint acts on an ordered tuple of bit positions `J` and lists
//! pairwise-disjoint groups of `|J|`-bit patterns. For a string `x`:
//!
//! - `x` is *bad* when `x|_J` lies in no group;
//! - `y != x` is a *neighbor* of `x` when both restrictions lie in the same
//!   group and the strings agree off `J`;
//! - `x` in `S` is *longing* when some neighbor of `x` is missing from `S`.
//!
//! The frustration of `S` against one constraint is `(|bad| + |longing|)/|S|`
//! and the instance value is the average over constraints. Everything is an
//! exact rational.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{self, BitString, MAX_BITS};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetConstraint {
    j: Vec<usize>,
    groups: Vec<Vec<u64>>,
    group_of: HashMap<u64, usize>,
}

impl SetConstraint {
    /// Builds a constraint from `J` and groups of `|J|`-bit patterns.
    ///
    /// Rejects repeated indices, empty groups, patterns of the wrong width and
    /// any pattern listed twice (within or across groups). An empty group
    /// list is allowed and makes every string bad.
    pub fn new(j: Vec<usize>, groups: Vec<Vec<BitString>>) -> Result<Self> {
        let k = j.len();
        let mut raw = Vec::with_capacity(groups.len());
        for (gi, group) in groups.into_iter().enumerate() {
            let mut pats = Vec::with_capacity(group.len());
            for p in group {
                if p.len() != k {
                    return Err(Error::validation(format!(
                        "group {gi}: pattern {p} has width {} but |J| = {k}",
                        p.len()
                    )));
                }
                pats.push(p.value());
            }
            raw.push(pats);
        }
        Self::from_patterns(j, raw)
    }

    /// Same as [`SetConstraint::new`] with patterns given as packed values
    /// (first position of `J` is the most significant bit).
    pub fn from_patterns(j: Vec<usize>, groups: Vec<Vec<u64>>) -> Result<Self> {
        let k = j.len();
        if k > MAX_BITS {
            return Err(Error::validation(format!("locality {k} too large")));
        }
        let distinct: BTreeSet<usize> = j.iter().copied().collect();
        if distinct.len() != k {
            return Err(Error::validation(format!("J = {j:?} repeats an index")));
        }
        let mut group_of = HashMap::new();
        for (gi, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::validation(format!("group {gi} is empty")));
            }
            for &p in group {
                if p & !bits::mask(k) != 0 {
                    return Err(Error::validation(format!(
                        "group {gi}: pattern {p:#b} wider than |J| = {k}"
                    )));
                }
                if let Some(prev) = group_of.insert(p, gi) {
                    return Err(Error::validation(format!(
                        "pattern {} appears in groups {prev} and {gi}",
                        BitString::from_value(p, k).expect("width checked")
                    )));
                }
            }
        }
        Ok(Self {
            j,
            groups,
            group_of,
        })
    }

    /// The positions the constraint acts on, in order.
    pub fn j(&self) -> &[usize] {
        &self.j
    }

    pub fn locality(&self) -> usize {
        self.j.len()
    }

    pub fn groups(&self) -> impl Iterator<Item = Vec<BitString>> + '_ {
        let k = self.locality();
        self.groups.iter().map(move |g| {
            g.iter()
                .map(|&p| BitString::from_value(p, k).expect("validated"))
                .collect()
        })
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn group_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.groups.iter().map(Vec::len)
    }

    fn check_width(&self, x: &BitString) -> Result<()> {
        match self.j.iter().max() {
            Some(&top) if top >= x.len() => Err(Error::validation(format!(
                "constraint touches bit {top} but the string has {} bits",
                x.len()
            ))),
            _ => Ok(()),
        }
    }

    fn group_index(&self, x: &BitString) -> Option<usize> {
        let local = x.restrict_unchecked(&self.j).value();
        self.group_of.get(&local).copied()
    }

    pub(crate) fn bad_unchecked(&self, x: &BitString) -> bool {
        self.group_index(x).is_none()
    }

    pub(crate) fn neighbors_unchecked(
        &self,
        x: &BitString,
    ) -> impl Iterator<Item = BitString> + '_ {
        let x = *x;
        let local = x.restrict_unchecked(&self.j).value();
        let group: &[u64] = match self.group_of.get(&local) {
            Some(&gi) => &self.groups[gi],
            None => &[],
        };
        group
            .iter()
            .filter(move |&&p| p != local)
            .map(move |&p| x.replace_unchecked(&self.j, p))
    }

    /// True iff `x|_J` is in no group.
    pub fn is_bad(&self, x: &BitString) -> Result<bool> {
        self.check_width(x)?;
        Ok(self.bad_unchecked(x))
    }

    /// All `C`-neighbors of `x`; empty when `x` is bad.
    pub fn neighbors(&self, x: &BitString) -> Result<Vec<BitString>> {
        self.check_width(x)?;
        Ok(self.neighbors_unchecked(x).collect())
    }

    /// True iff some `C`-neighbor of `x` is absent from `s`. `x` must be in `s`.
    pub fn is_longing(&self, x: &BitString, s: &StringSet) -> Result<bool> {
        self.check_width(x)?;
        if !s.contains(x) {
            return Err(Error::Contract(format!("{x} is not a member of the set")));
        }
        Ok(self.neighbors_unchecked(x).any(|y| !s.contains(&y)))
    }

    /// True iff `s` has no bad and no longing member.
    pub fn satisfied_by(&self, s: &StringSet) -> Result<bool> {
        if s.is_empty() {
            return Err(Error::Contract("satisfaction of an empty set".into()));
        }
        let probe = s.iter().next().expect("nonempty");
        self.check_width(&probe)?;
        Ok(s.iter().all(|x| {
            !self.bad_unchecked(&x) && self.neighbors_unchecked(&x).all(|y| s.contains(&y))
        }))
    }
}

/// An ordered collection of set-constraints over `n`-bit strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetCspInstance {
    n: usize,
    constraints: Vec<SetConstraint>,
    epsilon: Option<Rational>,
}

impl SetCspInstance {
    pub fn new(n: usize, constraints: Vec<SetConstraint>) -> Result<Self> {
        if n == 0 || n > MAX_BITS {
            return Err(Error::validation(format!(
                "string width n = {n} must be in 1..={MAX_BITS}"
            )));
        }
        if constraints.is_empty() {
            return Err(Error::validation(
                "an instance needs at least one constraint",
            ));
        }
        for (ci, c) in constraints.iter().enumerate() {
            if let Some(&bad) = c.j().iter().find(|&&i| i >= n) {
                return Err(Error::validation(format!(
                    "constraint {ci} uses bit {bad} but n = {n}"
                )));
            }
        }
        Ok(Self {
            n,
            constraints,
            epsilon: None,
        })
    }

    /// Attaches a promise parameter, which must lie in (0, 1).
    pub fn with_epsilon(mut self, epsilon: Option<Rational>) -> Result<Self> {
        if let Some(e) = epsilon {
            if *e.numer() == 0 || e >= Rational::from_integer(1) {
                return Err(Error::validation("epsilon must lie in (0,1)"));
            }
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    /// Maximum locality over constraints.
    pub fn k(&self) -> usize {
        self.constraints
            .iter()
            .map(SetConstraint::locality)
            .max()
            .unwrap_or(0)
    }

    pub fn epsilon(&self) -> Option<Rational> {
        self.epsilon
    }

    pub fn constraints(&self) -> &[SetConstraint] {
        &self.constraints
    }

    fn check_string(&self, x: &BitString) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::validation(format!(
                "string {x} has width {} but the instance has n = {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Bad for at least one constraint.
    pub fn is_bad(&self, x: &BitString) -> Result<bool> {
        self.check_string(x)?;
        Ok(self.constraints.iter().any(|c| c.bad_unchecked(x)))
    }

    /// Union of the `C`-neighbors over every constraint, sorted and deduplicated.
    pub fn neighbors(&self, x: &BitString) -> Result<Vec<BitString>> {
        self.check_string(x)?;
        Ok(self.neighbors_unchecked(x))
    }

    pub(crate) fn neighbors_unchecked(&self, x: &BitString) -> Vec<BitString> {
        let mut out: Vec<BitString> = self
            .constraints
            .iter()
            .flat_map(|c| c.neighbors_unchecked(x))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("instance JSON: {e}")))?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("serializable")
    }
}

/// A finite set of `n`-bit strings kept in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringSet {
    n: usize,
    members: BTreeSet<u64>,
}

impl StringSet {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            members: BTreeSet::new(),
        }
    }

    pub fn from_strings<I: IntoIterator<Item = BitString>>(n: usize, items: I) -> Result<Self> {
        let mut s = Self::new(n);
        for x in items {
            s.insert(x)?;
        }
        Ok(s)
    }

    /// Members given by packed value; all must be `< 2^n`.
    pub fn from_values<I: IntoIterator<Item = u64>>(n: usize, values: I) -> Result<Self> {
        let mut s = Self::new(n);
        for v in values {
            s.insert(BitString::from_value(v, n)?)?;
        }
        Ok(s)
    }

    /// Inserts `x`; returns whether it was new.
    pub fn insert(&mut self, x: BitString) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::validation(format!(
                "string {x} has width {} in a set of {}-bit strings",
                x.len(),
                self.n
            )));
        }
        Ok(self.members.insert(x.value()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: &BitString) -> bool {
        x.len() == self.n && self.members.contains(&x.value())
    }

    pub fn iter(&self) -> impl Iterator<Item = BitString> + '_ {
        self.members
            .iter()
            .map(move |&v| BitString::from_value(v, self.n).expect("validated on insert"))
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied()
    }

    pub fn is_subset(&self, other: &StringSet) -> bool {
        self.n == other.n && self.members.is_subset(&other.members)
    }

    /// Parses the line format: one bitstring per line, `#` comments, blank
    /// lines ignored, duplicates rejected.
    pub fn parse_lines(text: &str) -> Result<Self> {
        let mut set: Option<StringSet> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let x: BitString = line.parse().map_err(|e: Error| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            let s = set.get_or_insert_with(|| StringSet::new(x.len()));
            let fresh = s.insert(x).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            if !fresh {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("duplicate string {x}"),
                });
            }
        }
        set.ok_or_else(|| Error::Contract("the set file lists no strings".into()))
    }

    pub fn to_lines(&self) -> String {
        self.iter().map(|x| format!("{x}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintFrustration {
    pub bad: usize,
    pub longing: usize,
}

/// Per-constraint bad/longing counts and the aggregate frustration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrustrationReport {
    pub set_size: usize,
    pub per_constraint: Vec<ConstraintFrustration>,
    /// Members bad for at least one constraint.
    pub bad_strings: usize,
    /// Members longing for at least one constraint.
    pub longing_strings: usize,
    pub total: Rational,
}

impl FrustrationReport {
    pub fn constraint_value(&self, i: usize) -> Rational {
        let c = self.per_constraint[i];
        Rational::new((c.bad + c.longing) as u64, self.set_size as u64)
    }

    /// `(|union of bad| + |union of longing|) / |S|`, an upper bound on `total`.
    pub fn union_bound(&self) -> Rational {
        Rational::new(
            (self.bad_strings + self.longing_strings) as u64,
            self.set_size as u64,
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        let per: Vec<_> = self
            .per_constraint
            .iter()
            .enumerate()
            .map(|(i, c)| {
                serde_json::json!({
                    "bad": c.bad,
                    "longing": c.longing,
                    "value": rational::format(&self.constraint_value(i)),
                })
            })
            .collect();
        serde_json::json!({
            "set_size": self.set_size,
            "per_constraint": per,
            "bad_strings": self.bad_strings,
            "longing_strings": self.longing_strings,
            "total": rational::format(&self.total),
        })
    }
}

/// Frustration of `s` against every constraint of `inst`.
pub fn set_unsat(inst: &SetCspInstance, s: &StringSet) -> Result<FrustrationReport> {
    if s.is_empty() {
        return Err(Error::Contract("set-unsat of an empty set".into()));
    }
    if s.n() != inst.n() {
        return Err(Error::validation(format!(
            "set of {}-bit strings evaluated on an instance with n = {}",
            s.n(),
            inst.n()
        )));
    }
    let members: Vec<BitString> = s.iter().collect();
    // Per constraint: a flag per member, 1 = bad, 2 = longing.
    let flags: Vec<Vec<u8>> = inst
        .constraints()
        .par_iter()
        .map(|c| {
            members
                .iter()
                .map(|x| {
                    if c.bad_unchecked(x) {
                        1
                    } else if c.neighbors_unchecked(x).any(|y| !s.contains(&y)) {
                        2
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();

    let per_constraint: Vec<ConstraintFrustration> = flags
        .iter()
        .map(|f| ConstraintFrustration {
            bad: f.iter().filter(|&&v| v == 1).count(),
            longing: f.iter().filter(|&&v| v == 2).count(),
        })
        .collect();
    let bad_strings = (0..members.len())
        .filter(|&i| flags.iter().any(|f| f[i] == 1))
        .count();
    let longing_strings = (0..members.len())
        .filter(|&i| flags.iter().any(|f| f[i] == 2))
        .count();
    let numer: u64 = per_constraint
        .iter()
        .map(|c| (c.bad + c.longing) as u64)
        .sum();
    let total = Rational::new(numer, (inst.m() * members.len()) as u64);
    Ok(FrustrationReport {
        set_size: members.len(),
        per_constraint,
        bad_strings,
        longing_strings,
        total,
    })
}

/// A classical constraint: positions `J` and the allowed `|J|`-bit strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalConstraint {
    pub j: Vec<usize>,
    pub allowed: Vec<BitString>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalCsp {
    pub n: usize,
    pub constraints: Vec<ClassicalConstraint>,
}

impl ClassicalCsp {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation(format!("CSP JSON: {e}")))
    }

    /// Fraction of constraints `x` violates.
    pub fn unsat_fraction(&self, x: &BitString) -> Result<Rational> {
        if x.len() != self.n {
            return Err(Error::validation(format!(
                "{x} is not a {}-bit string",
                self.n
            )));
        }
        let mut violated = 0u64;
        for c in &self.constraints {
            let local = x.restrict(&c.j)?;
            if !c.allowed.contains(&local) {
                violated += 1;
            }
        }
        Ok(Rational::new(
            violated,
            self.constraints.len().max(1) as u64,
        ))
    }

    /// Minimum of [`ClassicalCsp::unsat_fraction`] over all `2^n` strings.
    pub fn min_unsat_fraction(&self) -> Result<Rational> {
        if self.n > 24 {
            return Err(Error::scope(format!(
                "string enumeration for n = {}",
                self.n
            )));
        }
        let mut best: Option<Rational> = None;
        for v in 0..1u64 << self.n {
            let f = self.unsat_fraction(&BitString::from_value(v, self.n)?)?;
            if best.is_none_or(|b| f < b) {
                best = Some(f);
            }
        }
        Ok(best.expect("at least one string"))
    }
}

/// Embeds a classical CSP: every allowed string becomes its own singleton group.
pub fn embed_csp(csp: &ClassicalCsp) -> Result<SetCspInstance> {
    let constraints = csp
        .constraints
        .iter()
        .map(|c| SetConstraint::new(c.j.clone(), c.allowed.iter().map(|&s| vec![s]).collect()))
        .collect::<Result<Vec<_>>>()?;
    SetCspInstance::new(csp.n, constraints)
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    constraints: Vec<ConstraintFile>,
    #[serde(
        default,
        with = "rational::serde_opt",
        skip_serializing_if = "Option::is_none"
    )]
    epsilon: Option<Rational>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintFile {
    j: Vec<usize>,
    y: Vec<Vec<BitString>>,
}

impl From<&SetCspInstance> for InstanceFile {
    fn from(inst: &SetCspInstance) -> Self {
        Self {
            n: inst.n,
            constraints: inst
                .constraints
                .iter()
                .map(|c| ConstraintFile {
                    j: c.j.clone(),
                    y: c.groups().collect(),
                })
                .collect(),
            epsilon: inst.epsilon,
        }
    }
}

impl TryFrom<InstanceFile> for SetCspInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let constraints = file
            .constraints
            .into_iter()
            .map(|c| SetConstraint::new(c.j, c.y))
            .collect::<Result<Vec<_>>>()?;
        SetCspInstance::new(file.n, constraints)?.with_epsilon(file.epsilon)
    }
}
