//! Exhaustive ground truth for small instances and graphs.
//!
//! Subsets of a vertex list are enumerated as bitmaps (bit `i` = the `i`-th
//! vertex in ascending order). Per-subset quantities such as cut size and
//! volume are filled in incrementally from the subset without its lowest
//! member, so every enumeration is `O(2^k * degree)`.

use num_integer::Integer;
use rayon::prelude::*;

use crate::acac::{materialize, reduce, ExplicitGraph};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::setcsp::{set_unsat, SetCspInstance, StringSet};

/// Largest `n` for which every nonempty subset of `{0,1}^n` is enumerated.
pub const MAX_EXHAUSTIVE_BITS: usize = 4;

/// Largest vertex list enumerated subset-by-subset.
pub const MAX_SUBSET_VERTICES: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimizationResult {
    pub min_value: Rational,
    pub argmin: StringSet,
    pub subsets_examined: u64,
}

/// Bitmask tables for evaluating `set-unsat` on every subset of `{0,1}^n`.
struct SubsetEvaluator {
    m: u64,
    /// Per constraint, bit `x` set iff string `x` is bad.
    bad: Vec<u32>,
    /// Per constraint and string, the mask of its neighbors.
    neighbors: Vec<Vec<u32>>,
}

impl SubsetEvaluator {
    fn new(inst: &SetCspInstance) -> Self {
        let n = inst.n();
        let strings: Vec<BitString> = (0..1u64 << n)
            .map(|v| BitString::from_value(v, n).expect("in range"))
            .collect();
        let mut bad = Vec::with_capacity(inst.m());
        let mut neighbors = Vec::with_capacity(inst.m());
        for c in inst.constraints() {
            let mut bmask = 0u32;
            let mut nb = Vec::with_capacity(strings.len());
            for x in &strings {
                if c.bad_unchecked(x) {
                    bmask |= 1 << x.value();
                }
                nb.push(
                    c.neighbors_unchecked(x)
                        .fold(0u32, |acc, y| acc | 1 << y.value()),
                );
            }
            bad.push(bmask);
            neighbors.push(nb);
        }
        Self {
            m: inst.m() as u64,
            bad,
            neighbors,
        }
    }

    /// Sum over constraints of `|B_C| + |L_C|` for the subset `s`.
    fn numerator(&self, s: u32) -> u64 {
        let mut total = 0u64;
        for (bad, nb) in self.bad.iter().zip(&self.neighbors) {
            total += (s & bad).count_ones() as u64;
            let mut rest = s & !bad;
            while rest != 0 {
                let x = rest.trailing_zeros();
                rest &= rest - 1;
                if nb[x as usize] & !s != 0 {
                    total += 1;
                }
            }
        }
        total
    }

    fn value(&self, s: u32) -> Rational {
        Rational::new(self.numerator(s), self.m * s.count_ones() as u64)
    }
}

fn mask_to_set(n: usize, mask: u32) -> Result<StringSet> {
    StringSet::from_values(n, (0..32u64).filter(|&i| mask >> i & 1 == 1))
}

/// Exact minimum of `set-unsat` over all nonempty `S`, for `n <= 4`.
/// Ties go to the smallest subset bitmap.
pub fn min_set_unsat_exhaustive(inst: &SetCspInstance) -> Result<MinimizationResult> {
    let n = inst.n();
    if n > MAX_EXHAUSTIVE_BITS {
        return Err(Error::scope(format!(
            "exhaustive minimisation needs n <= {MAX_EXHAUSTIVE_BITS}, got {n}"
        )));
    }
    let eval = SubsetEvaluator::new(inst);
    let last: u32 = ((1u64 << (1u64 << n)) - 1) as u32;
    let (min_value, mask) = (1..=last)
        .into_par_iter()
        .map(|s| (eval.value(s), s))
        .reduce_with(|a, b| if b < a { b } else { a })
        .expect("at least one subset");
    Ok(MinimizationResult {
        min_value,
        argmin: mask_to_set(n, mask)?,
        subsets_examined: last as u64,
    })
}

/// Minimum of `set-unsat` over unions of connected components of `G_C`.
///
/// Components are closed under every constraint's neighbor relation, so a
/// union's value is a weighted average of its parts and the minimum is
/// attained by a single component. The search space is restricted, so the
/// result is an upper bound on the true minimum.
pub fn min_set_unsat_components(inst: &SetCspInstance) -> Result<MinimizationResult> {
    let g = materialize(&reduce(inst))?;
    let comps = g.components();
    let n = inst.n();
    let mut best: Option<(Rational, StringSet)> = None;
    for comp in &comps {
        let set = StringSet::from_values(n, comp.iter().map(|&v| v as u64))?;
        let value = set_unsat(inst, &set)?.total;
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, set));
        }
    }
    let (min_value, argmin) = best.expect("at least one component");
    Ok(MinimizationResult {
        min_value,
        argmin,
        subsets_examined: comps.len() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Satisfiability {
    pub satisfiable: bool,
    /// The clean component with the smallest vertex, when one exists.
    pub witness: Option<StringSet>,
    pub clean_components: usize,
}

/// Decides satisfiability by looking for a connected component of `G_C`
/// without bad strings.
pub fn decide_satisfiable(inst: &SetCspInstance) -> Result<Satisfiability> {
    let g = materialize(&reduce(inst))?;
    let clean = clean_components(&g);
    let witness = clean
        .first()
        .map(|c| StringSet::from_values(inst.n(), c.iter().map(|&v| v as u64)))
        .transpose()?;
    Ok(Satisfiability {
        satisfiable: witness.is_some(),
        witness,
        clean_components: clean.len(),
    })
}

/// Components containing no marked vertex.
pub fn clean_components(g: &ExplicitGraph) -> Vec<Vec<u32>> {
    g.components()
        .into_iter()
        .filter(|c| c.iter().all(|&v| !g.is_marked(v as usize)))
        .collect()
}

/// True iff some connected component is entirely unmarked.
pub fn decide_ccc(g: &ExplicitGraph) -> bool {
    !clean_components(g).is_empty()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetScope {
    /// Every nonempty vertex subset; needs at most 20 vertices.
    Exhaustive,
    /// Only unions of connected components (zero-boundary sets).
    ComponentUnions,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcacNoCheck {
    pub holds: bool,
    /// A subset with small boundary and few marks, when the check fails.
    pub counterexample: Option<Vec<u32>>,
}

/// Checks the ACAC no-condition: every nonempty `S` has
/// `|boundary(S)| >= eps |S|` or at least `eps |S|` marked members.
pub fn check_acac_no(
    g: &ExplicitGraph,
    epsilon: Rational,
    scope: SubsetScope,
) -> Result<AcacNoCheck> {
    let (a, b) = (*epsilon.numer(), *epsilon.denom());
    match scope {
        SubsetScope::ComponentUnions => {
            // A union of components passes iff each component does.
            for comp in g.components() {
                let marked = comp.iter().filter(|&&v| g.is_marked(v as usize)).count() as u64;
                if marked * b < a * comp.len() as u64 {
                    return Ok(AcacNoCheck {
                        holds: false,
                        counterexample: Some(comp),
                    });
                }
            }
            Ok(AcacNoCheck {
                holds: true,
                counterexample: None,
            })
        }
        SubsetScope::Exhaustive => {
            let k = g.vertex_count();
            if k > MAX_SUBSET_VERTICES {
                return Err(Error::scope(format!(
                    "exhaustive subset check on {k} vertices (limit {MAX_SUBSET_VERTICES})"
                )));
            }
            let all: Vec<u32> = (0..k as u32).collect();
            let cuts = cut_sizes(g, &all);
            let marks: u32 = all
                .iter()
                .filter(|&&v| g.is_marked(v as usize))
                .fold(0, |acc, &v| acc | 1 << v);
            for s in 1..cuts.len() as u32 {
                let size = s.count_ones() as u64;
                let marked = (s & marks).count_ones() as u64;
                if (cuts[s as usize] as u64) * b < a * size && marked * b < a * size {
                    let members = (0..k as u32).filter(|&i| s >> i & 1 == 1).collect();
                    return Ok(AcacNoCheck {
                        holds: false,
                        counterexample: Some(members),
                    });
                }
            }
            Ok(AcacNoCheck {
                holds: true,
                counterexample: None,
            })
        }
    }
}

/// `|boundary(S)|` in `g` for every subset `S` of `verts`, by bitmap.
fn cut_sizes(g: &ExplicitGraph, verts: &[u32]) -> Vec<u32> {
    let local = local_adjacency(g, verts);
    let mut cut = vec![0u32; 1 << verts.len()];
    for s in 1..cut.len() {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        let inner = (local[low] & rest as u32).count_ones();
        cut[s] = cut[rest] + g.degree(verts[low] as usize) as u32 - 2 * inner;
    }
    cut
}

/// Bit `j` of entry `i` is set iff `verts[i]` and `verts[j]` are adjacent.
fn local_adjacency(g: &ExplicitGraph, verts: &[u32]) -> Vec<u32> {
    verts
        .iter()
        .map(|&v| {
            g.adjacency(v as usize)
                .iter()
                .fold(0u32, |acc, u| match verts.binary_search(u) {
                    Ok(j) => acc | 1 << j,
                    Err(_) => acc,
                })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conductance {
    pub value: Rational,
    /// `false` means the graph is disconnected and `value` is 0 by definition.
    pub connected: bool,
}

/// `min w(boundary S) / vol(S)` over nonempty `S` with `vol(S) <= vol(V)/2`.
pub fn conductance(g: &ExplicitGraph) -> Result<Conductance> {
    let k = g.vertex_count();
    if k > MAX_SUBSET_VERTICES {
        return Err(Error::scope(format!(
            "conductance enumeration on {k} vertices (limit {MAX_SUBSET_VERTICES})"
        )));
    }
    if g.edge_count() == 0 && k == 1 {
        return Err(Error::validation("conductance of a graph without edges"));
    }
    if !g.is_connected() {
        return Ok(Conductance {
            value: Rational::from_integer(0),
            connected: false,
        });
    }
    // Scale weights to integers by the lcm of their denominators; the ratio
    // is unchanged.
    let mut scale = 1u64;
    for v in 0..k {
        for i in 0..g.degree(v) {
            scale = scale.lcm(g.weight_at(v, i).denom());
        }
    }
    let w: Vec<Vec<u64>> = (0..k)
        .map(|v| {
            (0..g.degree(v))
                .map(|i| (g.weight_at(v, i) * scale).to_integer())
                .collect()
        })
        .collect();
    let wdeg: Vec<u64> = w.iter().map(|row| row.iter().sum()).collect();
    let total_vol: u64 = wdeg.iter().sum();

    let size = 1usize << k;
    let mut cut = vec![0u64; size];
    let mut vol = vec![0u64; size];
    let mut best: Option<Rational> = None;
    for s in 1..size {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        let inner: u64 = g
            .adjacency(low)
            .iter()
            .zip(&w[low])
            .filter(|(&u, _)| rest >> u & 1 == 1)
            .map(|(_, &wt)| wt)
            .sum();
        cut[s] = cut[rest] + wdeg[low] - 2 * inner;
        vol[s] = vol[rest] + wdeg[low];
        if vol[s] > 0 && 2 * vol[s] <= total_vol {
            let phi = Rational::new(cut[s], vol[s]);
            if best.is_none_or(|b| phi < b) {
                best = Some(phi);
            }
        }
    }
    let value = best.ok_or_else(|| Error::validation("no subset with positive volume"))?;
    Ok(Conductance {
        value,
        connected: true,
    })
}

/// `min |boundary(A')| / |A'|` over nonempty `A'` inside `a`.
pub fn min_boundary_ratio(g: &ExplicitGraph, a: &[u32]) -> Result<Rational> {
    let mut verts = a.to_vec();
    verts.sort_unstable();
    verts.dedup();
    if verts.is_empty() {
        return Err(Error::validation("min boundary ratio of an empty set"));
    }
    if verts.len() > MAX_SUBSET_VERTICES {
        return Err(Error::scope(format!(
            "boundary-ratio enumeration over {} vertices (limit {MAX_SUBSET_VERTICES})",
            verts.len()
        )));
    }
    if let Some(&bad) = verts.iter().find(|&&v| v as usize >= g.vertex_count()) {
        return Err(Error::validation(format!("vertex {bad} out of range")));
    }
    let cuts = cut_sizes(g, &verts);
    let best = (1..cuts.len())
        .map(|s| Rational::new(cuts[s] as u64, s.count_ones() as u64))
        .min()
        .expect("nonempty");
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setcsp::{embed_csp, ClassicalConstraint, ClassicalCsp, SetConstraint};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn contradictory_pair() -> SetCspInstance {
        embed_csp(&ClassicalCsp {
            n: 1,
            constraints: vec![
                ClassicalConstraint {
                    j: vec![0],
                    allowed: vec![bs("1")],
                },
                ClassicalConstraint {
                    j: vec![0],
                    allowed: vec![bs("0")],
                },
            ],
        })
        .unwrap()
    }

    #[test]
    fn contradictory_pair_minimum_is_one_half() {
        let r = min_set_unsat_exhaustive(&contradictory_pair()).unwrap();
        assert_eq!(r.min_value, Rational::new(1, 2));
        assert_eq!(r.subsets_examined, 3);
        // Ties go to the smallest bitmap, i.e. {0}.
        assert_eq!(r.argmin.iter().collect::<Vec<_>>(), vec![bs("0")]);
        assert!(
            !decide_satisfiable(&contradictory_pair())
                .unwrap()
                .satisfiable
        );
    }

    #[test]
    fn evaluator_agrees_with_set_unsat() {
        let c1 =
            SetConstraint::new(vec![0, 2], vec![vec![bs("00"), bs("11")], vec![bs("01")]]).unwrap();
        let c2 = SetConstraint::new(vec![1], vec![vec![bs("0"), bs("1")]]).unwrap();
        let inst = SetCspInstance::new(3, vec![c1, c2]).unwrap();
        let eval = SubsetEvaluator::new(&inst);
        for s in 1u32..256 {
            let set = mask_to_set(3, s).unwrap();
            assert_eq!(
                eval.value(s),
                set_unsat(&inst, &set).unwrap().total,
                "mask {s:#b}"
            );
        }
    }

    #[test]
    fn satisfiable_instance_has_zero_minimum_and_clean_component() {
        let c = SetConstraint::new(vec![0], vec![vec![bs("0"), bs("1")]]).unwrap();
        let inst = SetCspInstance::new(2, vec![c]).unwrap();
        let r = min_set_unsat_exhaustive(&inst).unwrap();
        assert_eq!(r.min_value, Rational::from_integer(0));
        assert_eq!(set_unsat(&inst, &r.argmin).unwrap().total, r.min_value);
        let d = decide_satisfiable(&inst).unwrap();
        assert!(d.satisfiable);
        assert_eq!(d.clean_components, 2);
        assert_eq!(d.witness.unwrap().len(), 2);
    }

    #[test]
    fn exhaustive_scope_limit() {
        let c = SetConstraint::new(vec![0], vec![vec![bs("0")]]).unwrap();
        let inst = SetCspInstance::new(5, vec![c]).unwrap();
        assert!(matches!(
            min_set_unsat_exhaustive(&inst),
            Err(Error::Scope(_))
        ));
    }

    #[test]
    fn ccc_decisions() {
        let g = ExplicitGraph::path(3).unwrap();
        assert!(decide_ccc(&g));
        let mut marked = ExplicitGraph::new(4, &[(0, 1), (2, 3)], &[0, 3]).unwrap();
        assert!(!decide_ccc(&marked));
        marked.set_marked(3, false);
        assert!(decide_ccc(&marked));
    }

    #[test]
    fn acac_no_checks() {
        let eps = Rational::new(1, 4);
        let clean = ExplicitGraph::path(3).unwrap();
        let r = check_acac_no(&clean, eps, SubsetScope::Exhaustive).unwrap();
        assert!(!r.holds);
        assert!(
            !check_acac_no(&clean, eps, SubsetScope::ComponentUnions)
                .unwrap()
                .holds
        );
        let single = ExplicitGraph::new(1, &[], &[0]).unwrap();
        assert!(
            check_acac_no(&single, Rational::new(1, 1), SubsetScope::Exhaustive)
                .unwrap()
                .holds
        );
        let big = ExplicitGraph::path(21).unwrap();
        assert!(check_acac_no(&big, eps, SubsetScope::Exhaustive).is_err());
    }

    #[test]
    fn conductance_small_graphs() {
        for q in 1..=4 {
            let c = conductance(&ExplicitGraph::hypercube(q).unwrap()).unwrap();
            assert_eq!(c.value, Rational::new(1, q as u64));
            assert!(c.connected);
        }
        // K4: a single vertex gives 3/3, a pair gives 4/6.
        assert_eq!(
            conductance(&ExplicitGraph::complete(4).unwrap())
                .unwrap()
                .value,
            Rational::new(2, 3)
        );
        let two = ExplicitGraph::new(4, &[(0, 1), (2, 3)], &[]).unwrap();
        let c = conductance(&two).unwrap();
        assert_eq!(c.value, Rational::from_integer(0));
        assert!(!c.connected);
    }

    #[test]
    fn weighted_conductance() {
        // Path 0-1-2-3 with weights 1, 3, 1: vol = (1, 4, 4, 1), total 10.
        // {0,1} and {2,3} cut 3 over volume 5; everything else is >= 1.
        let edges = [(0u32, 1u32), (1, 2), (2, 3)];
        let w = [
            Rational::from_integer(1),
            Rational::from_integer(3),
            Rational::from_integer(1),
        ];
        let g = ExplicitGraph::new(4, &edges, &[])
            .unwrap()
            .with_weights(&edges, &w)
            .unwrap();
        assert_eq!(conductance(&g).unwrap().value, Rational::new(3, 5));
    }

    #[test]
    fn boundary_ratio_examples() {
        let star = ExplicitGraph::star(3).unwrap();
        assert_eq!(
            min_boundary_ratio(&star, &[0]).unwrap(),
            Rational::from_integer(3)
        );
        let p3 = ExplicitGraph::path(3).unwrap();
        assert_eq!(
            min_boundary_ratio(&p3, &[0, 2]).unwrap(),
            Rational::from_integer(1)
        );
        assert_eq!(
            min_boundary_ratio(&p3, &[0, 1, 2]).unwrap(),
            Rational::from_integer(0)
        );
        assert!(min_boundary_ratio(&p3, &[]).is_err());
    }

    #[test]
    fn component_search_bounds_exhaustive_from_above() {
        let c1 =
            SetConstraint::new(vec![0, 1], vec![vec![bs("00"), bs("01")], vec![bs("11")]]).unwrap();
        let c2 = SetConstraint::new(vec![1, 2], vec![vec![bs("10"), bs("11")]]).unwrap();
        let inst = SetCspInstance::new(3, vec![c1, c2]).unwrap();
        let exact = min_set_unsat_exhaustive(&inst).unwrap().min_value;
        let comp = min_set_unsat_components(&inst).unwrap().min_value;
        assert!(exact <= comp);
    }
}
