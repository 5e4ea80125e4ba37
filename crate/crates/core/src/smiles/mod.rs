//! SMILES lexing, parsing, and molecular perception.
//!
//! Supports the organic subset (B, C, N, O, P, S, F, Cl, Br, I), bracket
//! atoms with isotope / charge / hydrogen count / chirality, bond symbols
//! `- = # : / \`, ring closures `1`-`9` and `%nn`, branches, and
//! dot-separated fragments (rejected or reduced to the largest fragment,
//! depending on [`DisconnectedPolicy`]). Aromaticity is trusted from
//! lowercase notation; no kekulization is attempted. Anything outside the
//! subset raises `UnsupportedFeature` rather than silently mis-parsing.

mod lexer;
mod parser;
mod perception;
mod writer;

pub use lexer::{tokenize, AtomToken, BondSym, Token, TokenKind};
pub use parser::{
    parse, parse_smiles, parse_smiles_with, DisconnectedPolicy, ParseOptions, Parsed,
};
pub use perception::{
    assign_implicit_hydrogens, perceive, perceive_hybridization, perceive_rings,
};
pub use writer::write_smiles;

use thiserror::Error;

/// Tetrahedral chirality tag as written (`@` / `@@`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChiralTag {
    #[default]
    None,
    /// `@` (anticlockwise)
    Ccw,
    /// `@@` (clockwise)
    Cw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's bond-order sum; aromatic counts 1.
    pub fn valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

/// Cis/trans configuration resolved from local `/` `\` markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BondStereo {
    #[default]
    None,
    Cis,
    Trans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Hybridization {
    Sp,
    Sp2,
    #[default]
    Sp3,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    /// Element symbol in canonical capitalization ("C", "Cl", ...).
    pub symbol: String,
    pub aromatic: bool,
    pub formal_charge: i32,
    /// Hydrogen count stated in a bracket; `None` for organic-subset atoms.
    pub explicit_h: Option<u8>,
    /// Filled by perception; for bracket atoms equals `explicit_h`.
    pub implicit_h: u8,
    pub chiral: ChiralTag,
    pub isotope: Option<u16>,
    pub in_ring: bool,
    pub hybridization: Hybridization,
    /// Count of bonded heavy-atom neighbors, filled by perception.
    pub degree: u8,
}

impl Atom {
    pub fn new(symbol: impl Into<String>, aromatic: bool) -> Self {
        Atom {
            symbol: symbol.into(),
            aromatic,
            formal_charge: 0,
            explicit_h: None,
            implicit_h: 0,
            chiral: ChiralTag::None,
            isotope: None,
            in_ring: false,
            hybridization: Hybridization::Sp3,
            degree: 0,
        }
    }

    pub fn is_carbon(&self) -> bool {
        self.symbol == "C"
    }

    /// Total hydrogen count carried into featurization.
    pub fn total_h(&self) -> u8 {
        self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    /// Endpoint atom indices; unordered, stored with `a < b`.
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
    pub stereo: BondStereo,
    pub conjugated: bool,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Bond {
            a,
            b,
            order,
            in_ring: false,
            stereo: BondStereo::None,
            conjugated: false,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if atom == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// A perceived chemical graph: simple, loopless, heavy atoms only.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub source_smiles: String,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    /// Builds the molecule and its adjacency index. Endpoints must be
    /// distinct, in range, and free of parallel edges.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, source_smiles: String) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (bi, bond) in bonds.iter().enumerate() {
            debug_assert!(bond.a < bond.b && bond.b < atoms.len());
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        Molecule {
            atoms,
            bonds,
            source_smiles,
            adjacency,
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Neighbors of `atom` as `(neighbor_index, bond_index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| bi)
    }

    /// Sum of bond orders at `atom` (aromatic bonds count 1).
    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, bi)| self.bonds[bi].order.valence())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("unknown character '{0}'")]
    UnknownCharacter(char),
    #[error("unterminated bracket atom")]
    UnterminatedBracket,
    #[error("bad ring-closure digit: {0}")]
    BadRingDigit(&'static str),
    #[error("unbalanced branch parenthesis")]
    UnterminatedBranch,
    #[error("ring-closure digit {0} left open at end of input")]
    UnclosedRing(u16),
    #[error("bond symbol with no atom to bond")]
    DanglingBond,
    #[error("explicit valence {found} exceeds maximum {max} for {symbol}")]
    ValenceImpossible {
        symbol: String,
        found: u32,
        max: u32,
    },
    #[error("unsupported SMILES feature: {0}")]
    UnsupportedFeature(&'static str),
    #[error("disconnected (dot-separated) input rejected")]
    Disconnected,
    #[error("empty input")]
    EmptyInput,
}

/// Parse error with a 0-based character offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES error at offset {pos}: {kind}")]
pub struct SmilesError {
    pub pos: usize,
    pub kind: SmilesErrorKind,
}

impl SmilesError {
    pub fn new(pos: usize, kind: SmilesErrorKind) -> Self {
        SmilesError { pos, kind }
    }
}

pub(crate) const ORGANIC_SUBSET: &[&str] = &["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"];

/// Default valence used for implicit-hydrogen assignment.
pub(crate) fn default_valence(symbol: &str) -> Option<u32> {
    Some(match symbol {
        "B" => 3,
        "C" => 4,
        "N" => 3,
        "O" => 2,
        "P" => 3,
        "S" => 2,
        "F" | "Cl" | "Br" | "I" => 1,
        _ => return None,
    })
}

/// Maximum valence accepted before `ValenceImpossible`; permissive enough
/// for common hypervalent forms (sulfonyl S, phosphate P, nitro N).
pub(crate) fn max_valence(symbol: &str) -> Option<u32> {
    Some(match symbol {
        "B" => 3,
        "C" => 4,
        "N" => 5,
        "O" => 3,
        "P" => 5,
        "S" => 6,
        "F" => 1,
        "Cl" | "Br" | "I" => 7,
        _ => return None,
    })
}
