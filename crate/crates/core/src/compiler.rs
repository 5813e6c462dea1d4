//! Compiles a reversible verification circuit into a 6-local SetCSP instance
//! whose satisfying sets are history sets of accepting computations.
//!
//! Strings have `s = T + w` bits: a unary clock on `[0, T)` followed by the
//! work register `witness || aux || random`. With 0-based positions the
//! emitted families are, in order:
//!
//! | family | `J` | groups |
//! |--------|-----|--------|
//! | clock `t`, `0 <= t <= T-2` | `(t, t+1)` | `{00} {10} {11}` |
//! | aux `j` | `(0, T+p+j)` | `{00} {10} {11}` |
//! | rand `j` | `(0, T+p+a+j)` | `{00,01} {10} {11}` |
//! | prop `1` | `(0, 1) ++ wires` | `{00‖z, 10‖G(z)}`, idle `{11‖z}` |
//! | prop `t`, `1 < t < T` | `(t-2, t-1, t) ++ wires` | `{100‖z, 110‖G(z)}`, idle `{000‖z} {111‖z}` |
//! | prop `T` | `(T-2, T-1) ++ wires` | `{10‖z, 11‖G(z)}`, idle `{00‖z}` |
//! | out | `(T-1, T)` | `{00} {01} {11}` |
//!
//! The idle singletons cover clock values the gate does not move between,
//! so a prop constraint only forbids clock windows no valid clock produces.

use std::fmt;

use crate::bits::{BitString, MAX_BITS};
use crate::circuit::{unary, Gate, MaCircuitSpec, MAX_RANDOM_BITS};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::setcsp::{SetConstraint, SetCspInstance, StringSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintLabel {
    /// Adjacent clock pair `(t, t+1)`, 0-based.
    Clock(usize),
    Aux(usize),
    Rand(usize),
    /// Propagation for gate `t`, 1-based like the gate list.
    Prop(usize),
    Out,
}

impl fmt::Display for ConstraintLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintLabel::Clock(t) => write!(f, "clock:{t}"),
            ConstraintLabel::Aux(j) => write!(f, "aux:{j}"),
            ConstraintLabel::Rand(j) => write!(f, "rand:{j}"),
            ConstraintLabel::Prop(t) => write!(f, "prop:{t}"),
            ConstraintLabel::Out => write!(f, "out"),
        }
    }
}

/// Bit ranges of the compiled string, as `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub gates: usize,
    pub witness: usize,
    pub aux: usize,
    pub random: usize,
}

impl Layout {
    pub fn total_bits(&self) -> usize {
        self.gates + self.witness + self.aux + self.random
    }

    pub fn clock(&self) -> std::ops::Range<usize> {
        0..self.gates
    }

    pub fn witness_range(&self) -> std::ops::Range<usize> {
        self.gates..self.gates + self.witness
    }

    pub fn aux_range(&self) -> std::ops::Range<usize> {
        let s = self.gates + self.witness;
        s..s + self.aux
    }

    pub fn random_range(&self) -> std::ops::Range<usize> {
        let s = self.gates + self.witness + self.aux;
        s..s + self.random
    }

    /// Expected constraint count `(T-1) + a + q + T + 1`.
    pub fn constraint_count(&self) -> usize {
        (self.gates - 1) + self.aux + self.random + self.gates + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledInstance {
    pub instance: SetCspInstance,
    pub layout: Layout,
    pub labels: Vec<ConstraintLabel>,
}

impl CompiledInstance {
    /// `1 / (10 (T+1) q m)`, or `None` when there is no random register.
    pub fn soundness_bound(&self) -> Option<Rational> {
        let q = self.layout.random as u64;
        if q == 0 {
            return None;
        }
        let t = self.layout.gates as u64;
        let m = self.instance.m() as u64;
        Some(Rational::new(1, 10 * (t + 1) * q * m))
    }

    pub fn labels_json(&self) -> String {
        let labels: Vec<String> = self.labels.iter().map(ToString::to_string).collect();
        serde_json::to_string_pretty(&labels).expect("serializable")
    }
}

fn pats(ps: &[&str]) -> Vec<BitString> {
    ps.iter()
        .map(|p| p.parse().expect("literal pattern"))
        .collect()
}

fn pair_constraint(a: usize, b: usize, groups: &[&[&str]]) -> Result<SetConstraint> {
    SetConstraint::new(vec![a, b], groups.iter().map(|g| pats(g)).collect())
}

/// Builds the propagation constraint for a gate given its clock window,
/// the transition patterns and the idle clock patterns (all `window.len()`
/// bits wide, packed).
fn prop_constraint(
    gate: &Gate,
    window: Vec<usize>,
    from: u64,
    to: u64,
    idle: &[u64],
    clock_base: usize,
) -> Result<SetConstraint> {
    let k = gate.arity();
    let wires: Vec<usize> = gate.wires().iter().map(|w| clock_base + w).collect();
    let mut j = window;
    j.extend(wires);
    let mut groups = Vec::new();
    for z in 0..1u64 << k {
        groups.push(vec![(from << k) | z, (to << k) | gate.apply_local(z)]);
    }
    for &c in idle {
        for z in 0..1u64 << k {
            groups.push(vec![(c << k) | z]);
        }
    }
    SetConstraint::from_patterns(j, groups)
}

/// Compiles `spec` into the SetCSP instance over `T + w` bits.
pub fn compile(spec: &MaCircuitSpec) -> Result<CompiledInstance> {
    let t_total = spec.gate_count();
    if t_total < 2 {
        return Err(Error::Unsupported(
            "circuits with a single gate are not compiled; pad circuit with an inverse pair of gates"
                .into(),
        ));
    }
    let layout = Layout {
        gates: t_total,
        witness: spec.witness_bits(),
        aux: spec.aux_bits(),
        random: spec.random_bits(),
    };
    let s = layout.total_bits();
    if s > MAX_BITS {
        return Err(Error::validation(format!(
            "compiled strings would have {s} bits (limit {MAX_BITS})"
        )));
    }

    let mut constraints = Vec::with_capacity(layout.constraint_count());
    let mut labels = Vec::with_capacity(layout.constraint_count());

    for t in 0..t_total - 1 {
        constraints.push(pair_constraint(t, t + 1, &[&["00"], &["10"], &["11"]])?);
        labels.push(ConstraintLabel::Clock(t));
    }
    for (j, bit) in layout.aux_range().enumerate() {
        constraints.push(pair_constraint(0, bit, &[&["00"], &["10"], &["11"]])?);
        labels.push(ConstraintLabel::Aux(j));
    }
    for (j, bit) in layout.random_range().enumerate() {
        constraints.push(pair_constraint(0, bit, &[&["00", "01"], &["10"], &["11"]])?);
        labels.push(ConstraintLabel::Rand(j));
    }
    for (idx, gate) in spec.circuit().gates().iter().enumerate() {
        let t = idx + 1;
        let c = if t == 1 {
            prop_constraint(gate, vec![0, 1], 0b00, 0b10, &[0b11], t_total)?
        } else if t == t_total {
            prop_constraint(gate, vec![t - 2, t - 1], 0b10, 0b11, &[0b00], t_total)?
        } else {
            prop_constraint(
                gate,
                vec![t - 2, t - 1, t],
                0b100,
                0b110,
                &[0b000, 0b111],
                t_total,
            )?
        };
        constraints.push(c);
        labels.push(ConstraintLabel::Prop(t));
    }
    constraints.push(pair_constraint(
        t_total - 1,
        t_total,
        &[&["00"], &["01"], &["11"]],
    )?);
    labels.push(ConstraintLabel::Out);

    debug_assert_eq!(constraints.len(), layout.constraint_count());
    let instance = SetCspInstance::new(s, constraints)?;
    Ok(CompiledInstance {
        instance,
        layout,
        labels,
    })
}

/// `{ unary(t) || G_t...G_1(y, 0^a, r) : r in {0,1}^q, 0 <= t <= T }`.
pub fn history_set(spec: &MaCircuitSpec, y: &BitString) -> Result<StringSet> {
    let q = spec.random_bits();
    if q > MAX_RANDOM_BITS {
        return Err(Error::scope(format!(
            "{q} random bits exceed the enumeration limit {MAX_RANDOM_BITS}"
        )));
    }
    let t_total = spec.gate_count();
    let s = t_total + spec.width();
    if s > MAX_BITS {
        return Err(Error::validation(format!(
            "history strings would have {s} bits"
        )));
    }
    let mut set = StringSet::new(s);
    for rv in 0..1u64 << q {
        let r = BitString::from_value(rv, q)?;
        for (t, snap) in spec.snapshots(y, &r)?.iter().enumerate() {
            set.insert(unary(t, t_total)?.concat(snap)?)?;
        }
    }
    Ok(set)
}

/// The frustration lower bound for rejecting circuits; `None` when `q = 0`.
pub fn soundness_bound(spec: &MaCircuitSpec) -> Result<Option<Rational>> {
    Ok(compile(spec)?.soundness_bound())
}
