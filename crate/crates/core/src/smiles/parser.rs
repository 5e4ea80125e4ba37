//! Token stream to `Molecule` construction.

use std::collections::HashMap;

use super::lexer::{tokenize, AtomToken, BondSym, Token, TokenKind};
use super::perception::perceive;
use super::{
    max_valence, Atom, Bond, BondOrder, BondStereo, Molecule, SmilesError, SmilesErrorKind,
};

/// What to do with dot-separated multi-fragment inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisconnectedPolicy {
    /// Raise `Disconnected`.
    #[default]
    Reject,
    /// Keep the fragment with the most heavy atoms (tie: first) and report
    /// the number of dropped fragments in [`Parsed::dropped_fragments`].
    KeepLargest,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub disconnected: DisconnectedPolicy,
}

/// Parse result plus salt-stripping bookkeeping for callers that log it.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub molecule: Molecule,
    pub dropped_fragments: usize,
}

/// Directional mark on a single bond, as written from `bond.a` to `bond.b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Up,
    Down,
}

impl Dir {
    fn flip(self) -> Dir {
        match self {
            Dir::Up => Dir::Down,
            Dir::Down => Dir::Up,
        }
    }
}

struct PendingBond {
    sym: BondSym,
    pos: usize,
}

struct RingOpen {
    atom: usize,
    sym: Option<BondSym>,
    pos: usize,
}

/// Parses a full SMILES string with perception passes applied.
pub fn parse_smiles(smiles: &str) -> Result<Molecule, SmilesError> {
    parse_smiles_with(smiles, ParseOptions::default()).map(|p| p.molecule)
}

/// Parses with explicit fragment policy; runs all perception passes.
pub fn parse_smiles_with(smiles: &str, opts: ParseOptions) -> Result<Parsed, SmilesError> {
    let tokens = tokenize(smiles)?;
    let mut parsed = parse(&tokens, opts)?;
    parsed.molecule.source_smiles = smiles.to_string();
    perceive(&mut parsed.molecule);
    Ok(parsed)
}

/// Builds atoms and bonds from a token stream (branch and ring-closure
/// semantics, default bond orders, stereo tags). Perception passes are not
/// run here; use [`parse_smiles_with`] for the full pipeline.
pub fn parse(tokens: &[Token], opts: ParseOptions) -> Result<Parsed, SmilesError> {
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut dirs: Vec<Option<Dir>> = Vec::new();
    let mut fragment: Vec<usize> = Vec::new(); // fragment id per atom

    let mut prev: Option<usize> = None;
    let mut pending: Option<PendingBond> = None;
    let mut stack: Vec<Option<usize>> = Vec::new();
    let mut rings: HashMap<u16, RingOpen> = HashMap::new();
    let mut current_fragment = 0usize;
    let end = tokens.last().map_or(0, |t| t.pos + 1);

    let add_bond = |bonds: &mut Vec<Bond>,
                        dirs: &mut Vec<Option<Dir>>,
                        a: usize,
                        b: usize,
                        sym: Option<BondSym>,
                        pos: usize,
                        atoms: &[Atom]|
     -> Result<(), SmilesError> {
        if a == b {
            return Err(SmilesError::new(
                pos,
                SmilesErrorKind::BadRingDigit("ring closure bonds an atom to itself"),
            ));
        }
        if bonds
            .iter()
            .any(|x| (x.a, x.b) == (a.min(b), a.max(b)))
        {
            return Err(SmilesError::new(
                pos,
                SmilesErrorKind::BadRingDigit("duplicate bond between the same atoms"),
            ));
        }
        let order = match sym {
            None => {
                if atoms[a].aromatic && atoms[b].aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                }
            }
            Some(BondSym::Single) | Some(BondSym::Up) | Some(BondSym::Down) => BondOrder::Single,
            Some(BondSym::Double) => BondOrder::Double,
            Some(BondSym::Triple) => BondOrder::Triple,
            Some(BondSym::Aromatic) => {
                if !(atoms[a].aromatic && atoms[b].aromatic) {
                    return Err(SmilesError::new(
                        pos,
                        SmilesErrorKind::UnsupportedFeature(
                            "aromatic bond between non-aromatic atoms",
                        ),
                    ));
                }
                BondOrder::Aromatic
            }
        };
        // `a` was written before `b`, so a < b and the stored direction is
        // always read from bond.a to bond.b
        debug_assert!(a < b);
        let dir = match sym {
            Some(BondSym::Up) => Some(Dir::Up),
            Some(BondSym::Down) => Some(Dir::Down),
            _ => None,
        };
        bonds.push(Bond::new(a, b, order));
        dirs.push(dir);
        Ok(())
    };

    for tok in tokens {
        match &tok.kind {
            TokenKind::Atom(at) => {
                let idx = atoms.len();
                atoms.push(atom_from_token(at));
                fragment.push(current_fragment);
                if let Some(p) = prev {
                    let sym = pending.take().map(|p| p.sym);
                    add_bond(&mut bonds, &mut dirs, p, idx, sym, tok.pos, &atoms)?;
                } else if let Some(p) = pending.take() {
                    return Err(SmilesError::new(p.pos, SmilesErrorKind::DanglingBond));
                }
                prev = Some(idx);
            }
            TokenKind::Bond(sym) => {
                if pending.is_some() || prev.is_none() {
                    return Err(SmilesError::new(tok.pos, SmilesErrorKind::DanglingBond));
                }
                pending = Some(PendingBond {
                    sym: *sym,
                    pos: tok.pos,
                });
            }
            TokenKind::RingClosure(digit) => {
                let Some(p) = prev else {
                    return Err(SmilesError::new(
                        tok.pos,
                        SmilesErrorKind::BadRingDigit("ring digit before any atom"),
                    ));
                };
                match rings.remove(digit) {
                    None => {
                        rings.insert(
                            *digit,
                            RingOpen {
                                atom: p,
                                sym: pending.take().map(|b| b.sym),
                                pos: tok.pos,
                            },
                        );
                    }
                    Some(open) => {
                        let close_sym = pending.take().map(|b| b.sym);
                        let sym = match (open.sym, close_sym) {
                            (Some(a), Some(b)) if !ring_syms_agree(a, b) => {
                                return Err(SmilesError::new(
                                    tok.pos,
                                    SmilesErrorKind::BadRingDigit(
                                        "ring closure bond orders disagree",
                                    ),
                                ));
                            }
                            (Some(a), _) => Some(a),
                            (None, Some(b)) => Some(flip_dir_sym(b)),
                            (None, None) => None,
                        };
                        // `sym` is now oriented as written at the opening atom
                        add_bond(&mut bonds, &mut dirs, open.atom, p, sym, open.pos, &atoms)?;
                    }
                }
            }
            TokenKind::BranchOpen => {
                if prev.is_none() || pending.is_some() {
                    return Err(SmilesError::new(tok.pos, SmilesErrorKind::UnterminatedBranch));
                }
                stack.push(prev);
            }
            TokenKind::BranchClose => {
                if pending.is_some() {
                    return Err(SmilesError::new(tok.pos, SmilesErrorKind::DanglingBond));
                }
                match stack.pop() {
                    Some(p) => prev = p,
                    None => {
                        return Err(SmilesError::new(
                            tok.pos,
                            SmilesErrorKind::UnterminatedBranch,
                        ))
                    }
                }
            }
            TokenKind::Dot => {
                if pending.is_some() {
                    return Err(SmilesError::new(tok.pos, SmilesErrorKind::DanglingBond));
                }
                if !stack.is_empty() {
                    return Err(SmilesError::new(
                        tok.pos,
                        SmilesErrorKind::UnsupportedFeature("dot inside a branch"),
                    ));
                }
                prev = None;
                current_fragment += 1;
            }
        }
    }

    if let Some(p) = pending {
        return Err(SmilesError::new(p.pos, SmilesErrorKind::DanglingBond));
    }
    if let Some((digit, open)) = rings.drain().min_by_key(|(_, o)| o.pos) {
        return Err(SmilesError::new(open.pos, SmilesErrorKind::UnclosedRing(digit)));
    }
    if atoms.is_empty() {
        return Err(SmilesError::new(end, SmilesErrorKind::EmptyInput));
    }

    let dropped = if current_fragment > 0 {
        match opts.disconnected {
            DisconnectedPolicy::Reject => {
                return Err(SmilesError::new(0, SmilesErrorKind::Disconnected));
            }
            DisconnectedPolicy::KeepLargest => {
                keep_largest_fragment(&mut atoms, &mut bonds, &mut dirs, &fragment)
            }
        }
    } else {
        0
    };

    resolve_stereo(&mut bonds, &dirs);
    check_valence(&atoms, &bonds)?;

    Ok(Parsed {
        molecule: Molecule::new(atoms, bonds, String::new()),
        dropped_fragments: dropped,
    })
}

fn atom_from_token(at: &AtomToken) -> Atom {
    let mut atom = Atom::new(at.symbol.clone(), at.aromatic);
    atom.formal_charge = at.charge;
    atom.isotope = at.isotope;
    atom.chiral = at.chiral;
    atom.explicit_h = if at.bracket {
        Some(at.explicit_h.unwrap_or(0))
    } else {
        None
    };
    atom
}

/// Ring-bond symbols written at both ends must denote the same bond;
/// opposite slashes are the consistent way to repeat a directional bond.
fn ring_syms_agree(open: BondSym, close: BondSym) -> bool {
    use BondSym::*;
    match (open, close) {
        (Up, Down) | (Down, Up) => true,
        (a, b) => a == b && !matches!(a, Up | Down),
    }
}

/// A directional symbol written at the closing atom reads in the opposite
/// direction from the opening atom's point of view.
fn flip_dir_sym(sym: BondSym) -> BondSym {
    match sym {
        BondSym::Up => BondSym::Down,
        BondSym::Down => BondSym::Up,
        other => other,
    }
}

fn keep_largest_fragment(
    atoms: &mut Vec<Atom>,
    bonds: &mut Vec<Bond>,
    dirs: &mut Vec<Option<Dir>>,
    fragment: &[usize],
) -> usize {
    let nfrag = fragment.iter().max().map_or(1, |m| m + 1);
    let mut sizes = vec![0usize; nfrag];
    for &f in fragment {
        sizes[f] += 1;
    }
    let keep = sizes
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .unwrap();

    let mut remap = vec![usize::MAX; atoms.len()];
    let mut kept_atoms = Vec::with_capacity(sizes[keep]);
    for (i, atom) in atoms.drain(..).enumerate() {
        if fragment[i] == keep {
            remap[i] = kept_atoms.len();
            kept_atoms.push(atom);
        }
    }
    *atoms = kept_atoms;

    let mut kept_bonds = Vec::new();
    let mut kept_dirs = Vec::new();
    for (bond, dir) in bonds.drain(..).zip(dirs.drain(..)) {
        if remap[bond.a] != usize::MAX && remap[bond.b] != usize::MAX {
            let mut b = bond;
            b.a = remap[b.a];
            b.b = remap[b.b];
            kept_bonds.push(b);
            kept_dirs.push(dir);
        }
    }
    *bonds = kept_bonds;
    *dirs = kept_dirs;
    nfrag - 1
}

/// Resolves `/` `\` marks around each double bond into a cis/trans tag.
/// Resolution is local: one directional single bond on each side suffices.
fn resolve_stereo(bonds: &mut [Bond], dirs: &[Option<Dir>]) {
    let n = bonds.len();
    for i in 0..n {
        if bonds[i].order != BondOrder::Double {
            continue;
        }
        let (a, b) = (bonds[i].a, bonds[i].b);
        // direction of a marked neighbor bond, normalized to point at `anchor`
        let mark_at = |anchor: usize, exclude: usize| -> Option<Dir> {
            bonds.iter().zip(dirs).find_map(|(nb, dir)| {
                let dir = (*dir)?;
                if nb.a == anchor && nb.b != exclude {
                    Some(dir.flip()) // written anchor -> other; flip to other -> anchor
                } else if nb.b == anchor && nb.a != exclude {
                    Some(dir)
                } else {
                    None
                }
            })
        };
        // `da` points toward the double bond, `db` away from it; equal
        // written slashes (F/C=C/F) then read as trans.
        let da = mark_at(a, b);
        let db = mark_at(b, a).map(Dir::flip);
        bonds[i].stereo = match (da, db) {
            (Some(x), Some(y)) if x == y => BondStereo::Trans,
            (Some(_), Some(_)) => BondStereo::Cis,
            _ => BondStereo::None,
        };
    }
}

/// Rejects atoms whose explicit bonds (plus bracket hydrogens) exceed the
/// element's maximum valence. Positive charge raises the cap for N and P;
/// elements outside the table are trusted as written.
fn check_valence(atoms: &[Atom], bonds: &[Bond]) -> Result<(), SmilesError> {
    let mut order_sum = vec![0u32; atoms.len()];
    for bond in bonds {
        order_sum[bond.a] += bond.order.valence();
        order_sum[bond.b] += bond.order.valence();
    }
    for (i, atom) in atoms.iter().enumerate() {
        let Some(mut max) = max_valence(&atom.symbol) else {
            continue;
        };
        if matches!(atom.symbol.as_str(), "N" | "P") && atom.formal_charge > 0 {
            max += atom.formal_charge as u32;
        }
        let found = order_sum[i] + u32::from(atom.explicit_h.unwrap_or(0));
        if found > max {
            return Err(SmilesError::new(
                0,
                SmilesErrorKind::ValenceImpossible {
                    symbol: atom.symbol.clone(),
                    found,
                    max,
                },
            ));
        }
    }
    Ok(())
}
