//! Reversible circuits over NOT, CNOT and CCNOT.
//!
//! Wires are listed controls first, target last. Every gate is its own
//! inverse, so a circuit is inverted by reversing its gate list.
//!
//! Text format:
//!
//! ```text
//! circuit p=4 a=0 q=0
//! # comment
//! NOT 2
//! CCNOT 0 1 2
//! ```

use std::fmt;
use std::str::FromStr;

use crate::bits::{BitString, MAX_BITS};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest random register we enumerate.
pub const MAX_RANDOM_BITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Not(usize),
    Cnot(usize, usize),
    Ccnot(usize, usize, usize),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::Not(_) => "NOT",
            Gate::Cnot(..) => "CNOT",
            Gate::Ccnot(..) => "CCNOT",
        }
    }

    /// Wires in (controls..., target) order.
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::Not(t) => vec![t],
            Gate::Cnot(c, t) => vec![c, t],
            Gate::Ccnot(c1, c2, t) => vec![c1, c2, t],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::Not(_) => 1,
            Gate::Cnot(..) => 2,
            Gate::Ccnot(..) => 3,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::Not(t) | Gate::Cnot(_, t) | Gate::Ccnot(_, _, t) => t,
        }
    }

    fn validate(&self, width: usize) -> Result<()> {
        let w = self.wires();
        for (i, &a) in w.iter().enumerate() {
            if a >= width {
                return Err(Error::validation(format!(
                    "{} wire {a} out of range for width {width}",
                    self.name()
                )));
            }
            if w[..i].contains(&a) {
                return Err(Error::validation(format!(
                    "{} repeats wire {a}",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// Applies the gate to a full register.
    pub fn apply(&self, x: &BitString) -> Result<BitString> {
        self.validate(x.len())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &BitString) -> BitString {
        let fire = match *self {
            Gate::Not(_) => true,
            Gate::Cnot(c, _) => x.bit(c),
            Gate::Ccnot(c1, c2, _) => x.bit(c1) && x.bit(c2),
        };
        if fire {
            x.flip(self.target()).expect("validated")
        } else {
            *x
        }
    }

    /// Action on the gate's own wires: `z` is an `arity`-bit pattern in
    /// (controls..., target) order.
    pub fn apply_local(&self, z: u64) -> u64 {
        let k = self.arity();
        let controls = z >> 1;
        let all = (1u64 << (k - 1)) - 1;
        if controls == all {
            z ^ 1
        } else {
            z
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for w in self.wires() {
            write!(f, " {w}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReversibleCircuit {
    width: usize,
    gates: Vec<Gate>,
}

impl ReversibleCircuit {
    pub fn new(width: usize, gates: Vec<Gate>) -> Result<Self> {
        if width == 0 || width > MAX_BITS {
            return Err(Error::validation(format!(
                "circuit width {width} not in 1..={MAX_BITS}"
            )));
        }
        if gates.is_empty() {
            return Err(Error::validation("a circuit needs at least one gate"));
        }
        for (i, g) in gates.iter().enumerate() {
            g.validate(width)
                .map_err(|e| Error::validation(format!("gate {}: {e}", i + 1)))?;
        }
        Ok(Self { width, gates })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of gates `T`.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn apply(&self, x: &BitString) -> Result<BitString> {
        if x.len() != self.width {
            return Err(Error::validation(format!(
                "input {x} has width {} but the circuit has {}",
                x.len(),
                self.width
            )));
        }
        Ok(self.gates.iter().fold(*x, |acc, g| g.apply_unchecked(&acc)))
    }

    /// Gates reversed; each gate is self-inverse.
    pub fn invert(&self) -> Self {
        Self {
            width: self.width,
            gates: self.gates.iter().rev().copied().collect(),
        }
    }
}

/// A verification circuit with input layout `witness || aux || random`.
/// The output is work bit 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaCircuitSpec {
    circuit: ReversibleCircuit,
    p: usize,
    a: usize,
    q: usize,
}

impl MaCircuitSpec {
    pub fn new(circuit: ReversibleCircuit, p: usize, a: usize, q: usize) -> Result<Self> {
        if p + a + q != circuit.width() {
            return Err(Error::validation(format!(
                "register layout p={p} a={a} q={q} does not cover width {}",
                circuit.width()
            )));
        }
        Ok(Self { circuit, p, a, q })
    }

    pub fn circuit(&self) -> &ReversibleCircuit {
        &self.circuit
    }

    pub fn witness_bits(&self) -> usize {
        self.p
    }

    pub fn aux_bits(&self) -> usize {
        self.a
    }

    pub fn random_bits(&self) -> usize {
        self.q
    }

    pub fn width(&self) -> usize {
        self.circuit.width()
    }

    pub fn gate_count(&self) -> usize {
        self.circuit.len()
    }

    /// `y || 0^a || r`.
    pub fn initial_state(&self, y: &BitString, r: &BitString) -> Result<BitString> {
        if y.len() != self.p {
            return Err(Error::validation(format!(
                "witness {y} has {} bits, expected {}",
                y.len(),
                self.p
            )));
        }
        if r.len() != self.q {
            return Err(Error::validation(format!(
                "random string {r} has {} bits, expected {}",
                r.len(),
                self.q
            )));
        }
        y.concat(&BitString::zeros(self.a)?)?.concat(r)
    }

    /// Work-register states `s_0, ..., s_T` where `s_t = G_t(s_{t-1})`.
    pub fn snapshots(&self, y: &BitString, r: &BitString) -> Result<Vec<BitString>> {
        let mut state = self.initial_state(y, r)?;
        let mut out = Vec::with_capacity(self.gate_count() + 1);
        out.push(state);
        for g in self.circuit.gates() {
            state = g.apply_unchecked(&state);
            out.push(state);
        }
        Ok(out)
    }

    /// Fraction of random strings for which the final output bit is 1.
    pub fn accept_probability(&self, y: &BitString) -> Result<Rational> {
        if self.q > MAX_RANDOM_BITS {
            return Err(Error::scope(format!(
                "{} random bits exceed the enumeration limit {MAX_RANDOM_BITS}",
                self.q
            )));
        }
        let mut accepted = 0u64;
        for rv in 0..1u64 << self.q {
            let r = BitString::from_value(rv, self.q)?;
            let end = self.circuit.apply(&self.initial_state(y, &r)?)?;
            if end.bit(0) {
                accepted += 1;
            }
        }
        Ok(Rational::new(accepted, 1u64 << self.q))
    }

    /// Best acceptance probability over all `2^p` witnesses and one witness
    /// achieving it (the lexicographically smallest).
    pub fn best_witness(&self) -> Result<(BitString, Rational)> {
        if self.p > 24 {
            return Err(Error::scope(format!(
                "witness enumeration for p = {}",
                self.p
            )));
        }
        let mut best: Option<(BitString, Rational)> = None;
        for yv in 0..1u64 << self.p {
            let y = BitString::from_value(yv, self.p)?;
            let pr = self.accept_probability(&y)?;
            if best.as_ref().is_none_or(|(_, b)| pr > *b) {
                best = Some((y, pr));
            }
        }
        Ok(best.expect("at least one witness"))
    }
}

impl FromStr for MaCircuitSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let perr = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let head = tokens.next().expect("nonempty line");
            if header.is_none() {
                if head != "circuit" {
                    return Err(perr(format!(
                        "expected header `circuit p=.. a=.. q=..`, got {line:?}"
                    )));
                }
                let (mut p, mut a, mut q) = (None, None, None);
                for tok in tokens {
                    let (key, val) = tok
                        .split_once('=')
                        .ok_or_else(|| perr(format!("malformed header field {tok:?}")))?;
                    let val: usize = val
                        .parse()
                        .map_err(|_| perr(format!("non-integer value in {tok:?}")))?;
                    let slot = match key {
                        "p" => &mut p,
                        "a" => &mut a,
                        "q" => &mut q,
                        _ => return Err(perr(format!("unknown header field {key:?}"))),
                    };
                    if slot.replace(val).is_some() {
                        return Err(perr(format!("header field {key:?} given twice")));
                    }
                }
                match (p, a, q) {
                    (Some(p), Some(a), Some(q)) => header = Some((p, a, q)),
                    _ => return Err(perr("header must set p, a and q".into())),
                }
                continue;
            }
            let args = tokens
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| perr(format!("bad wire index {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let gate = match (head, args.as_slice()) {
                ("NOT", &[t]) => Gate::Not(t),
                ("CNOT", &[c, t]) => Gate::Cnot(c, t),
                ("CCNOT", &[c1, c2, t]) => Gate::Ccnot(c1, c2, t),
                ("NOT" | "CNOT" | "CCNOT", _) => {
                    return Err(perr(format!("wrong number of wires for {head}")))
                }
                _ => return Err(perr(format!("unknown gate {head:?}"))),
            };
            let (p, a, q) = header.expect("header parsed");
            gate.validate(p + a + q).map_err(|e| perr(e.to_string()))?;
            gates.push(gate);
        }
        let (p, a, q) = header.ok_or(Error::Parse {
            line: 0,
            message: "missing circuit header".into(),
        })?;
        let circuit = ReversibleCircuit::new(p + a + q, gates)?;
        MaCircuitSpec::new(circuit, p, a, q)
    }
}

impl fmt::Display for MaCircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "circuit p={} a={} q={}", self.p, self.a, self.q)?;
        for g in self.circuit.gates() {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// `1^t 0^(T-t)`.
pub fn unary(t: usize, total: usize) -> Result<BitString> {
    if t > total {
        return Err(Error::validation(format!(
            "unary({t}) needs t <= T = {total}"
        )));
    }
    let ones = BitString::ones(t)?;
    ones.concat(&BitString::zeros(total - t)?)
}

/// Inverse of [`unary`]: `Some(t)` iff `clock` contains no `01`.
pub fn clock_value(clock: &BitString) -> Option<usize> {
    let t = clock.iter().take_while(|&b| b).count();
    clock.iter().skip(t).all(|b| !b).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn four_wire() -> MaCircuitSpec {
        "circuit p=4 a=0 q=0\nNOT 2\nCCNOT 0 1 2\nCCNOT 1 2 3\n"
            .parse()
            .unwrap()
    }

    #[test]
    fn gate_semantics_on_basis_states() {
        assert_eq!(Gate::Not(2).apply(&bs("1110")).unwrap(), bs("1100"));
        assert_eq!(Gate::Ccnot(0, 1, 2).apply(&bs("1100")).unwrap(), bs("1110"));
        assert_eq!(Gate::Ccnot(0, 1, 2).apply(&bs("0100")).unwrap(), bs("0100"));
        let x = bs("10110");
        let g = Gate::Cnot(0, 1);
        assert_eq!(g.apply(&g.apply(&x).unwrap()).unwrap(), x);
    }

    #[test]
    fn gate_rejects_bad_wires() {
        assert!(Gate::Not(4).apply(&bs("1110")).is_err());
        assert!(Gate::Cnot(1, 1).apply(&bs("1110")).is_err());
    }

    #[test]
    fn apply_local_matches_apply() {
        for g in [Gate::Not(0), Gate::Cnot(0, 1), Gate::Ccnot(0, 1, 2)] {
            for z in 0..1u64 << g.arity() {
                let x = BitString::from_value(z, g.arity()).unwrap();
                assert_eq!(g.apply(&x).unwrap().value(), g.apply_local(z));
            }
        }
    }

    #[test]
    fn four_wire_snapshots() {
        let spec = four_wire();
        let snaps = spec.snapshots(&bs("1110"), &bs("")).unwrap();
        let got: Vec<String> = snaps.iter().map(|s| s.to_string()).collect();
        assert_eq!(got, ["1110", "1100", "1110", "1111"]);
        assert_eq!(
            spec.accept_probability(&bs("1110")).unwrap(),
            Rational::from_integer(1)
        );
    }

    #[test]
    fn inverse_pair_snapshots() {
        let c = ReversibleCircuit::new(3, vec![Gate::Not(1), Gate::Not(1)]).unwrap();
        let spec = MaCircuitSpec::new(c, 3, 0, 0).unwrap();
        let snaps = spec.snapshots(&bs("101"), &bs("")).unwrap();
        assert_eq!(snaps, vec![bs("101"), bs("111"), bs("101")]);
    }

    #[test]
    fn accept_probability_cases() {
        // Output is the aux bit, never touched.
        let c = ReversibleCircuit::new(2, vec![Gate::Not(1), Gate::Not(1)]).unwrap();
        let spec = MaCircuitSpec::new(c, 0, 1, 1).unwrap();
        assert_eq!(
            spec.accept_probability(&bs("")).unwrap(),
            Rational::from_integer(0)
        );
        // Copy r_0 onto the output.
        let c = ReversibleCircuit::new(2, vec![Gate::Cnot(1, 0)]).unwrap();
        let spec = MaCircuitSpec::new(c, 0, 1, 1).unwrap();
        assert_eq!(
            spec.accept_probability(&bs("")).unwrap(),
            Rational::new(1, 2)
        );
    }

    #[test]
    fn invert_is_an_involution() {
        let c = ReversibleCircuit::new(
            3,
            vec![Gate::Not(0), Gate::Cnot(0, 2), Gate::Ccnot(0, 2, 1)],
        )
        .unwrap();
        assert_eq!(c.invert().invert(), c);
        let single = ReversibleCircuit::new(3, vec![Gate::Cnot(0, 2)]).unwrap();
        assert_eq!(single.invert(), single);
    }

    #[test]
    fn unary_encoding() {
        assert_eq!(unary(0, 3).unwrap(), bs("000"));
        assert_eq!(unary(2, 3).unwrap(), bs("110"));
        assert_eq!(unary(5, 5).unwrap(), bs("11111"));
        assert!(unary(4, 3).is_err());
        assert_eq!(clock_value(&bs("110")), Some(2));
        assert_eq!(clock_value(&bs("010")), None);
    }

    #[test]
    fn unary_strings_are_exactly_the_01_free_ones() {
        for total in 1..=12 {
            let mut free = 0;
            for v in 0..1u64 << total {
                let x = BitString::from_value(v, total).unwrap();
                if !x.contains_substring("01") {
                    free += 1;
                    let t = clock_value(&x).unwrap();
                    assert_eq!(unary(t, total).unwrap(), x);
                }
            }
            assert_eq!(free, total + 1);
            for t in 0..=total {
                assert!(!unary(t, total).unwrap().contains_substring("01"));
            }
        }
    }

    #[test]
    fn parser_reports_line_numbers() {
        let err = "circuit p=2 a=0 q=0\nNOT 0\nCNOT 0\n"
            .parse::<MaCircuitSpec>()
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = "circuit p=2 a=0 q=0\n# c\nFOO 1\n"
            .parse::<MaCircuitSpec>()
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = "circuit p=2 a=0 q=0\nNOT 2\n"
            .parse::<MaCircuitSpec>()
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!("NOT 0\n".parse::<MaCircuitSpec>().is_err());
        assert!("circuit p=2 a=0\nNOT 0\n".parse::<MaCircuitSpec>().is_err());
    }

    #[test]
    fn text_round_trip() {
        let spec = four_wire();
        assert_eq!(spec.to_string().parse::<MaCircuitSpec>().unwrap(), spec);
    }
}
