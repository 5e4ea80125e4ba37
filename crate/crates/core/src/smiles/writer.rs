//! Non-canonical SMILES emission.
//!
//! Output parses back to an isomorphic molecule (same atom labels, bond
//! orders, and degrees). Atom order follows a DFS from atom 0, so the text
//! is deterministic but not canonical. Directional stereo marks are not
//! emitted; resolved cis/trans tags live only on the parsed `Bond`.

use super::{BondOrder, ChiralTag, Molecule, ORGANIC_SUBSET};
use std::collections::BTreeSet;

pub fn write_smiles(m: &Molecule) -> String {
    let n = m.num_atoms();
    let mut preorder = vec![usize::MAX; n];
    let mut tree_children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut tree_bond = vec![false; m.num_bonds()];
    let mut roots = Vec::new();
    let mut counter = 0usize;

    for root in 0..n {
        if preorder[root] != usize::MAX {
            continue;
        }
        roots.push(root);
        let mut stack = vec![(root, usize::MAX)];
        while let Some((u, via)) = stack.pop() {
            if preorder[u] != usize::MAX {
                continue;
            }
            preorder[u] = counter;
            counter += 1;
            if via != usize::MAX {
                tree_bond[via] = true;
                let parent = m.bonds[via].other(u);
                tree_children[parent].push((u, via));
            }
            // reverse so the lowest-index neighbor is expanded first
            for &(v, bi) in m.neighbors(u).iter().rev() {
                if preorder[v] == usize::MAX {
                    stack.push((v, bi));
                }
            }
        }
    }

    // Ring-closure bonds: the endpoint visited earlier opens the digit.
    let mut opens_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closes_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (bi, bond) in m.bonds.iter().enumerate() {
        if tree_bond[bi] {
            continue;
        }
        let (open, close) = if preorder[bond.a] < preorder[bond.b] {
            (bond.a, bond.b)
        } else {
            (bond.b, bond.a)
        };
        opens_at[open].push(bi);
        closes_at[close].push(bi);
    }

    let mut digit_of = vec![0u16; m.num_bonds()];
    let mut free: BTreeSet<u16> = (1..100).collect();
    let mut out = String::new();
    for (i, &root) in roots.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        emit(
            m,
            root,
            &tree_children,
            &opens_at,
            &closes_at,
            &mut digit_of,
            &mut free,
            &mut out,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn emit(
    m: &Molecule,
    u: usize,
    tree_children: &[Vec<(usize, usize)>],
    opens_at: &[Vec<usize>],
    closes_at: &[Vec<usize>],
    digit_of: &mut Vec<u16>,
    free: &mut BTreeSet<u16>,
    out: &mut String,
) {
    out.push_str(&atom_str(m, u));
    for &bi in &closes_at[u] {
        push_digit(out, digit_of[bi]);
        free.insert(digit_of[bi]);
    }
    for &bi in &opens_at[u] {
        let digit = *free.iter().next().expect("ring digits exhausted");
        free.remove(&digit);
        digit_of[bi] = digit;
        out.push_str(bond_str(m, bi));
        push_digit(out, digit);
    }
    let children = &tree_children[u];
    for (k, &(child, bi)) in children.iter().enumerate() {
        let last = k + 1 == children.len();
        if !last {
            out.push('(');
        }
        out.push_str(bond_str(m, bi));
        emit(m, child, tree_children, opens_at, closes_at, digit_of, free, out);
        if !last {
            out.push(')');
        }
    }
}

fn push_digit(out: &mut String, digit: u16) {
    if digit < 10 {
        out.push_str(&digit.to_string());
    } else {
        out.push('%');
        out.push_str(&format!("{digit:02}"));
    }
}

fn bond_str(m: &Molecule, bi: usize) -> &'static str {
    let bond = &m.bonds[bi];
    match bond.order {
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => "",
        BondOrder::Single => {
            if m.atoms[bond.a].aromatic && m.atoms[bond.b].aromatic {
                "-"
            } else {
                ""
            }
        }
    }
}

fn atom_str(m: &Molecule, i: usize) -> String {
    let atom = &m.atoms[i];
    let aromatic_bare = matches!(atom.symbol.as_str(), "B" | "C" | "N" | "O" | "P" | "S");
    let needs_bracket = atom.formal_charge != 0
        || atom.isotope.is_some()
        || atom.chiral != ChiralTag::None
        || atom.explicit_h.is_some()
        || !ORGANIC_SUBSET.contains(&atom.symbol.as_str())
        || (atom.aromatic && !aromatic_bare);
    let symbol = if atom.aromatic {
        let mut s = atom.symbol.clone();
        s[..1].make_ascii_lowercase();
        s
    } else {
        atom.symbol.clone()
    };
    if !needs_bracket {
        return symbol;
    }
    let mut s = String::from("[");
    if let Some(iso) = atom.isotope {
        s.push_str(&iso.to_string());
    }
    s.push_str(&symbol);
    match atom.chiral {
        ChiralTag::None => {}
        ChiralTag::Ccw => s.push('@'),
        ChiralTag::Cw => s.push_str("@@"),
    }
    match atom.implicit_h {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match atom.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&c.to_string()),
    }
    s.push(']');
    s
}
