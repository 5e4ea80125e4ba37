//! Seeded random molecule generation for property tests and benchmarks.
//!
//! Generated molecules are connected, simple, and valence-consistent, with
//! an optional aromatic benzene core, heteroatoms, multiple bonds, and
//! extra ring closures. They exercise the featurizer, the group detector,
//! and the coarsener without going through SMILES text.

use crate::smiles::{perceive, Atom, Bond, BondOrder, Molecule};
use rand::Rng;

const ELEMENTS: &[(&str, u32, u32)] = &[
    // (symbol, default valence, weight)
    ("C", 4, 60),
    ("N", 3, 12),
    ("O", 2, 12),
    ("S", 2, 6),
    ("F", 1, 4),
    ("Cl", 1, 4),
    ("P", 3, 2),
];

fn pick_element<R: Rng>(rng: &mut R) -> (&'static str, u32) {
    let total: u32 = ELEMENTS.iter().map(|&(_, _, w)| w).sum();
    let mut roll = rng.random_range(0..total);
    for &(sym, val, w) in ELEMENTS {
        if roll < w {
            return (sym, val);
        }
        roll -= w;
    }
    unreachable!()
}

/// Builds a random connected molecule with 1..=24 heavy atoms and runs the
/// perception passes on it.
pub fn random_molecule<R: Rng>(rng: &mut R) -> Molecule {
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut spare: Vec<u32> = Vec::new(); // remaining valence slots

    // optionally seed with a benzene core
    if rng.random_bool(0.4) {
        for _ in 0..6 {
            let mut a = Atom::new("C", true);
            a.explicit_h = None;
            atoms.push(a);
            spare.push(1); // two aromatic ring bonds use up 3 of 4 slots
        }
        for i in 0..6 {
            bonds.push(Bond::new(i, (i + 1) % 6, BondOrder::Aromatic));
        }
    } else {
        let (sym, val) = pick_element(rng);
        atoms.push(Atom::new(sym, false));
        spare.push(val);
    }

    let target = rng.random_range(1..=24).max(atoms.len());
    while atoms.len() < target {
        let (sym, val) = pick_element(rng);
        let candidates: Vec<usize> = (0..atoms.len()).filter(|&i| spare[i] >= 1).collect();
        let Some(&parent) = candidates.get(rng.random_range(0..candidates.len().max(1))) else {
            break;
        };
        let order = {
            let budget = spare[parent].min(val);
            let roll: f64 = rng.random();
            if budget >= 3 && sym == "C" && roll < 0.05 {
                BondOrder::Triple
            } else if budget >= 2 && roll < 0.20 {
                BondOrder::Double
            } else {
                BondOrder::Single
            }
        };
        let idx = atoms.len();
        atoms.push(Atom::new(sym, false));
        spare.push(val - order.valence());
        spare[parent] -= order.valence();
        bonds.push(Bond::new(parent, idx, order));
    }

    // a few extra single-bond ring closures between non-adjacent atoms
    for _ in 0..rng.random_range(0..3) {
        let n = atoms.len();
        if n < 4 {
            break;
        }
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || spare[a] == 0 || spare[b] == 0 {
            continue;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        if bonds.iter().any(|x| (x.a, x.b) == (lo, hi)) {
            continue;
        }
        // avoid closing a new ring through an aromatic pair; the notation
        // could not express it without kekulization
        if atoms[lo].aromatic && atoms[hi].aromatic {
            continue;
        }
        bonds.push(Bond::new(lo, hi, BondOrder::Single));
        spare[lo] -= 1;
        spare[hi] -= 1;
    }

    let mut m = Molecule::new(atoms, bonds, String::new());
    perceive(&mut m);
    m
}
