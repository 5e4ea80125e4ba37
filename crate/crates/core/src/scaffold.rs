//! Scaffold keys and seeded group-aware splits.
//!
//! The scaffold of a molecule is what remains after iteratively deleting
//! degree-1 heavy atoms (keeping atoms attached through a double bond to a
//! retained atom, the exocyclic `=O` pattern). Ring-free molecules map to
//! the designated EMPTY key; everything else is hashed with an iterative
//! neighborhood-refinement labeling so isomorphic scaffolds collide on the
//! same 64-bit key. A genuine hash collision merges two groups, which only
//! makes the split more conservative.

use crate::hash::Fnv64;
use crate::smiles::{BondOrder, Molecule};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// 64-bit digest of the scaffold subgraph (element labels, bond orders,
/// aromatic flags). `EMPTY` marks ring-free molecules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScaffoldKey(pub u64);

impl ScaffoldKey {
    pub const EMPTY: ScaffoldKey = ScaffoldKey(0);

    pub fn to_hex(self) -> String {
        format!("{:016x}", self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        u64::from_str_radix(s, 16).ok().map(ScaffoldKey)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("ratios must be positive and sum to 1 (got {0:?})")]
    BadRatios([f64; 3]),
    #[error("degenerate split: the {0} partition is empty")]
    DegenerateSplit(&'static str),
    #[error("cannot split an empty dataset")]
    EmptyDataset,
}

/// Disjoint train/valid/test index sets over a dataset, plus the seed and
/// ratios that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratios_milli: [u32; 3],
}

impl SplitAssignment {
    pub fn ratios(&self) -> [f64; 3] {
        self.ratios_milli.map(|r| r as f64 / 1000.0)
    }
}

/// Reduces the molecule to its scaffold and hashes it.
pub fn murcko_scaffold(m: &Molecule) -> ScaffoldKey {
    if !m.atoms.iter().any(|a| a.in_ring) {
        return ScaffoldKey::EMPTY;
    }

    let mut alive = vec![true; m.num_atoms()];
    loop {
        let mut changed = false;
        for i in 0..m.num_atoms() {
            if !alive[i] {
                continue;
            }
            let live_bonds: Vec<usize> = m
                .neighbors(i)
                .iter()
                .filter(|&&(n, _)| alive[n])
                .map(|&(_, bi)| bi)
                .collect();
            if live_bonds.len() == 1 && m.bonds[live_bonds[0]].order != BondOrder::Double {
                alive[i] = false;
                changed = true;
            }
            if live_bonds.is_empty() && m.num_atoms() > 1 {
                // orphaned atom outside the ring system
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if !alive.iter().any(|&a| a) {
        return ScaffoldKey::EMPTY;
    }

    refine_hash(m, &alive)
}

/// Weisfeiler-Lehman style refinement over the induced live subgraph.
/// Chirality is deliberately excluded from the labels.
fn refine_hash(m: &Molecule, alive: &[bool]) -> ScaffoldKey {
    let nodes: Vec<usize> = (0..m.num_atoms()).filter(|&i| alive[i]).collect();
    let mut label: Vec<u64> = vec![0; m.num_atoms()];
    for &i in &nodes {
        let mut h = Fnv64::new();
        h.write(m.atoms[i].symbol.as_bytes());
        h.write(&[u8::from(m.atoms[i].aromatic)]);
        label[i] = h.finish();
    }

    let rounds = nodes.len();
    for _ in 0..rounds {
        let mut next = label.clone();
        for &i in &nodes {
            let mut neigh: Vec<u64> = m
                .neighbors(i)
                .iter()
                .filter(|&&(n, _)| alive[n])
                .map(|&(n, bi)| {
                    let mut h = Fnv64::new();
                    h.write(&[bond_label(m.bonds[bi].order)]);
                    h.write_u64(label[n]);
                    h.finish()
                })
                .collect();
            neigh.sort_unstable();
            let mut h = Fnv64::new();
            h.write_u64(label[i]);
            for v in neigh {
                h.write_u64(v);
            }
            next[i] = h.finish();
        }
        label = next;
    }

    let mut final_labels: Vec<u64> = nodes.iter().map(|&i| label[i]).collect();
    final_labels.sort_unstable();
    let mut h = Fnv64::new();
    h.write_u64(nodes.len() as u64);
    let live_edges = m
        .bonds
        .iter()
        .filter(|b| alive[b.a] && alive[b.b])
        .count();
    h.write_u64(live_edges as u64);
    for v in final_labels {
        h.write_u64(v);
    }
    // reserve 0 for EMPTY
    ScaffoldKey(h.finish().max(1))
}

fn bond_label(order: BondOrder) -> u8 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Groups molecules by scaffold key and assigns whole groups to
/// train/valid/test. Groups larger than half the validation budget go to
/// train first; the rest are shuffled by a seeded generator and assigned
/// greedily: train until its budget is met, then valid, then test.
/// Deterministic for fixed `(keys, seed, ratios)`.
pub fn scaffold_split(
    keys: &[ScaffoldKey],
    seed: u64,
    ratios: [f64; 3],
) -> Result<SplitAssignment, SplitError> {
    if keys.is_empty() {
        return Err(SplitError::EmptyDataset);
    }
    if ratios.iter().any(|&r| r <= 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadRatios(ratios));
    }

    // groups in first-seen order so the pre-shuffle order is input-stable
    let mut group_of_key: std::collections::HashMap<ScaffoldKey, usize> =
        std::collections::HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &key) in keys.iter().enumerate() {
        let gid = *group_of_key.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[gid].push(i);
    }

    let n = keys.len() as f64;
    let train_cap = ratios[0] * n;
    let valid_cap = ratios[1] * n;

    let mut train: Vec<usize> = Vec::new();
    let mut valid: Vec<usize> = Vec::new();
    let mut test: Vec<usize> = Vec::new();

    // groups larger than half the validation budget are offered to train
    // first; both lists are shuffled so ties break by seed
    let (mut big, mut small): (Vec<Vec<usize>>, Vec<Vec<usize>>) = groups
        .into_iter()
        .partition(|g| g.len() as f64 > valid_cap / 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    big.shuffle(&mut rng);
    small.shuffle(&mut rng);

    for g in big.into_iter().chain(small) {
        if (train.len() + g.len()) as f64 <= train_cap {
            train.extend(g);
        } else if (valid.len() + g.len()) as f64 <= valid_cap {
            valid.extend(g);
        } else {
            test.extend(g);
        }
    }

    for (name, part) in [("train", &train), ("valid", &valid), ("test", &test)] {
        if part.is_empty() {
            return Err(SplitError::DegenerateSplit(name));
        }
    }

    train.sort_unstable();
    valid.sort_unstable();
    test.sort_unstable();
    Ok(SplitAssignment {
        train,
        valid,
        test,
        seed,
        ratios_milli: ratios.map(|r| (r * 1000.0).round() as u32),
    })
}
