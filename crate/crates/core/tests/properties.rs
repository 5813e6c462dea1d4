use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use setcsp::acac::materialize;
use setcsp::circuit::clock_value;
use setcsp::{
    compile, reduce, set_unsat, BitString, Gate, MaCircuitSpec, Rational, ReversibleCircuit,
    SetConstraint, SetCspInstance, StringSet,
};

fn constraint<R: Rng>(rng: &mut R, n: usize) -> SetConstraint {
    let k = rng.gen_range(1..=n.min(3));
    let mut pool: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        pool.swap(i, rng.gen_range(0..=i));
    }
    let mut pats: Vec<u64> = (0..1u64 << k).filter(|_| rng.gen_bool(0.7)).collect();
    for i in (1..pats.len()).rev() {
        pats.swap(i, rng.gen_range(0..=i));
    }
    let mut groups = Vec::new();
    let mut rest = &pats[..];
    while !rest.is_empty() {
        let size = rng.gen_range(1..=rest.len().min(4));
        groups.push(rest[..size].to_vec());
        rest = &rest[size..];
    }
    SetConstraint::from_patterns(pool[..k].to_vec(), groups).unwrap()
}

fn instance(seed: u64, max_n: usize, max_m: usize) -> SetCspInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let cs = (0..m).map(|_| constraint(&mut rng, n)).collect();
    SetCspInstance::new(n, cs).unwrap()
}

fn subset(seed: u64, n: usize) -> StringSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut values: Vec<u64> = (0..1u64 << n).filter(|_| rng.gen_bool(0.4)).collect();
    if values.is_empty() {
        values.push(rng.gen_range(0..1u64 << n));
    }
    StringSet::from_values(n, values).unwrap()
}

fn circuit(seed: u64, width: usize, len: usize) -> ReversibleCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates = (0..len)
        .map(|_| {
            let mut w: Vec<usize> = (0..width).collect();
            for i in (1..width).rev() {
                w.swap(i, rng.gen_range(0..=i));
            }
            match rng.gen_range(0..width.min(3)) {
                0 => Gate::Not(w[0]),
                1 => Gate::Cnot(w[0], w[1]),
                _ => Gate::Ccnot(w[0], w[1], w[2]),
            }
        })
        .collect();
    ReversibleCircuit::new(width, gates).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frustration_is_a_fraction_within_the_union_bound(seed in any::<u64>()) {
        let inst = instance(seed, 6, 4);
        let s = subset(seed, inst.n());
        let r = set_unsat(&inst, &s).unwrap();
        prop_assert!(r.total <= Rational::from_integer(1));
        prop_assert!(r.total <= r.union_bound());
        let g = materialize(&reduce(&inst)).unwrap();
        let members: Vec<u32> = s.values().map(|v| v as u32).collect();
        prop_assert!(r.longing_strings <= g.boundary(&members).unwrap().len());
        prop_assert_eq!(r.bad_strings, members.iter().filter(|&&v| g.is_marked(v as usize)).count());
    }

    #[test]
    fn satisfied_iff_zero_frustration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let c = constraint(&mut rng, n);
        let s = subset(seed, n);
        let inst = SetCspInstance::new(n, vec![c.clone()]).unwrap();
        let zero = set_unsat(&inst, &s).unwrap().total == Rational::from_integer(0);
        prop_assert_eq!(c.satisfied_by(&s).unwrap(), zero);
    }

    #[test]
    fn neighbor_relation_is_symmetric_and_local(seed in any::<u64>(), x in any::<u64>()) {
        let inst = instance(seed, 6, 1);
        let c = &inst.constraints()[0];
        let x = BitString::from_value(x & ((1 << inst.n()) - 1), inst.n()).unwrap();
        for y in c.neighbors(&x).unwrap() {
            prop_assert_ne!(y, x);
            prop_assert!(c.neighbors(&y).unwrap().contains(&x));
            for i in (0..inst.n()).filter(|i| !c.j().contains(i)) {
                prop_assert_eq!(x.get(i).unwrap(), y.get(i).unwrap());
            }
        }
    }

    #[test]
    fn circuits_permute_and_snapshots_follow_gates(seed in any::<u64>(), width in 2usize..=6, len in 1usize..=8) {
        let c = circuit(seed, width, len);
        let mut images: Vec<u64> = (0..1u64 << width)
            .map(|v| c.apply(&BitString::from_value(v, width).unwrap()).unwrap().value())
            .collect();
        images.sort_unstable();
        prop_assert_eq!(images, (0..1u64 << width).collect::<Vec<_>>());

        let spec = MaCircuitSpec::new(c.clone(), width, 0, 0).unwrap();
        let y = BitString::from_value(seed & ((1 << width) - 1), width).unwrap();
        let snaps = spec.snapshots(&y, &BitString::zeros(0).unwrap()).unwrap();
        prop_assert_eq!(snaps.len(), len + 1);
        for (t, snap) in snaps.iter().enumerate() {
            let expected = c.gates()[..t].iter().fold(y, |acc, g| g.apply(&acc).unwrap());
            prop_assert_eq!(*snap, expected);
        }
    }

    #[test]
    fn time_zero_strings_span_a_hypercube(seed in any::<u64>(), q in 1usize..=4) {
        let c = circuit(seed, 2 + q, 3);
        let spec = MaCircuitSpec::new(c, 1, 1, q).unwrap();
        let inst = compile(&spec).unwrap().instance;
        let y = seed & 1;
        let layer: Vec<u64> = (0..1u64 << q).map(|r| (y << (q + 1)) | r).collect();
        let mut edges = 0;
        for &v in &layer {
            let x = BitString::from_value(v, inst.n()).unwrap();
            for nb in inst.neighbors(&x).unwrap() {
                if nb.value() >> (spec.width()) == 0 && layer.contains(&nb.value()) {
                    prop_assert_eq!((nb.value() ^ v).count_ones(), 1);
                    prop_assert!((nb.value() ^ v) < 1 << q);
                    edges += 1;
                }
            }
        }
        // Each edge is seen from both ends.
        prop_assert_eq!(edges, q << q);
    }

    #[test]
    fn invalid_clocks_are_bad(seed in any::<u64>(), x in any::<u64>()) {
        let c = circuit(seed, 3, 4);
        let spec = MaCircuitSpec::new(c, 1, 1, 1).unwrap();
        let inst = compile(&spec).unwrap().instance;
        let x = BitString::from_value(x & ((1 << inst.n()) - 1), inst.n()).unwrap();
        let clock = x.slice(0, spec.gate_count()).unwrap();
        if clock_value(&clock).is_none() {
            prop_assert!(inst.is_bad(&x).unwrap());
        }
    }
}
