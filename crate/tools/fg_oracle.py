#!/usr/bin/env python3
"""Independent fixture generator for functional-group parity tests.

Implements its own minimal SMILES reader and the marking rules R1-R5 on
top of it, entirely separate from the Rust code paths it is used to
check. Run from the repository root:

    python3 tools/fg_oracle.py > fixtures/fg_parity.jsonl

The curated molecule list below is hand-verified; any edit to the rules
or to the list requires re-verifying the expected groups by hand before
regenerating the fixture file.
"""

import json
import sys

ORGANIC = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}


class Atom:
    def __init__(self, symbol, aromatic):
        self.symbol = symbol  # canonical capitalization, e.g. "N"
        self.aromatic = aromatic


class Mol:
    def __init__(self):
        self.atoms = []
        self.bonds = []  # (i, j, order) with order in {1,2,3,"ar"}

    def add_atom(self, symbol, aromatic):
        self.atoms.append(Atom(symbol, aromatic))
        return len(self.atoms) - 1

    def add_bond(self, i, j, order):
        self.bonds.append((i, j, order))

    def neighbors(self, i):
        out = []
        for a, b, order in self.bonds:
            if a == i:
                out.append((b, order))
            elif b == i:
                out.append((a, order))
        return out


def parse_smiles(s):
    """Subset SMILES reader: organic/aromatic atoms, brackets, branches,
    ring closures 1-9 and %nn, bond symbols - = # : / \\ ."""
    mol = Mol()
    prev = None
    stack = []
    pending = None  # pending bond symbol
    rings = {}
    i = 0
    n = len(s)

    def attach(idx):
        nonlocal prev, pending
        if prev is not None:
            order = bond_order(pending, prev, idx)
            mol.add_bond(prev, idx, order)
        pending = None
        prev = idx

    def bond_order(sym, a, b):
        if sym is None:
            if mol.atoms[a].aromatic and mol.atoms[b].aromatic:
                return "ar"
            return 1
        return {"-": 1, "/": 1, "\\": 1, "=": 2, "#": 3, ":": "ar"}[sym]

    while i < n:
        c = s[i]
        if c == "[":
            j = s.index("]", i)
            body = s[i + 1 : j]
            # strip isotope
            k = 0
            while k < len(body) and body[k].isdigit():
                k += 1
            body = body[k:]
            # element symbol: one or two letters
            if len(body) >= 2 and body[:2] in ("Cl", "Br") or (
                len(body) >= 2 and body[0].isupper() and body[1].islower()
                and body[:2] not in ("C@",)
                and body[1] not in "hH@+-0123456789"
            ):
                sym, rest = body[:2], body[2:]
                aromatic = False
            else:
                sym, rest = body[0], body[1:]
                aromatic = sym.islower()
                sym = sym.capitalize() if aromatic else sym
            idx = mol.add_atom(sym, aromatic)
            attach(idx)
            i = j + 1
        elif c.isalpha():
            if s[i : i + 2] in ("Cl", "Br"):
                sym = s[i : i + 2]
                i += 2
                aromatic = False
            else:
                sym = c
                i += 1
                aromatic = c in AROMATIC_ORGANIC
                if aromatic:
                    sym = c.upper()
                elif sym not in ORGANIC:
                    raise ValueError(f"unsupported atom {sym!r} in {s!r}")
            idx = mol.add_atom(sym, aromatic)
            attach(idx)
        elif c in "-=#:/\\":
            pending = c
            i += 1
        elif c == "(":
            stack.append(prev)
            i += 1
        elif c == ")":
            prev = stack.pop()
            i += 1
        elif c.isdigit() or c == "%":
            if c == "%":
                num = s[i + 1 : i + 3]
                i += 3
            else:
                num = c
                i += 1
            if num in rings:
                other, other_sym = rings.pop(num)
                sym = pending if pending is not None else other_sym
                order = bond_order(sym, other, prev)
                mol.add_bond(other, prev, order)
                pending = None
            else:
                rings[num] = (prev, pending)
                pending = None
        elif c == ".":
            raise ValueError("multi-fragment input not supported by oracle")
        else:
            raise ValueError(f"unexpected char {c!r} in {s!r}")
    if rings:
        raise ValueError(f"unclosed rings in {s!r}")
    return mol


def mark_atoms(mol):
    """Rules R1-R5 over heavy atoms."""
    marked = set()
    # R1: every heteroatom
    for i, a in enumerate(mol.atoms):
        if a.symbol != "C":
            marked.add(i)
    for i, j, order in mol.bonds:
        if order in (2, 3):
            si, sj = mol.atoms[i].symbol, mol.atoms[j].symbol
            # R2: carbon multiple-bonded to a heteroatom (non-aromatic bond)
            if si == "C" and sj != "C":
                marked.add(i)
            if sj == "C" and si != "C":
                marked.add(j)
            # R3: both carbons of a non-aromatic C=C / C#C
            if si == "C" and sj == "C":
                marked.add(i)
                marked.add(j)
    # R4: acetal-like carbons
    has_double = [False] * len(mol.atoms)
    for i, j, order in mol.bonds:
        if order == 2:
            has_double[i] = has_double[j] = True
    for i, a in enumerate(mol.atoms):
        if a.symbol != "C" or a.aromatic:
            continue
        single_ons = 0
        for j, order in mol.neighbors(i):
            if order == 1 and mol.atoms[j].symbol in ("O", "N", "S") and not has_double[j]:
                single_ons += 1
        if single_ons >= 2:
            marked.add(i)
    # R5: all atoms of 3-rings containing a heteroatom
    adj = {i: {j for j, _ in mol.neighbors(i)} for i in range(len(mol.atoms))}
    for i, j, _ in mol.bonds:
        for k in adj[i] & adj[j]:
            if any(mol.atoms[x].symbol != "C" for x in (i, j, k)):
                marked.update((i, j, k))
    return marked


def groups(mol, marked):
    """Connected components of the induced subgraph on marked atoms."""
    seen = set()
    out = []
    for start in sorted(marked):
        if start in seen:
            continue
        comp = {start}
        frontier = [start]
        while frontier:
            x = frontier.pop()
            for y, _ in mol.neighbors(x):
                if y in marked and y not in comp:
                    comp.add(y)
                    frontier.append(y)
        seen |= comp
        out.append(sorted(comp))
    return out


def quotient_node_count(mol, marked):
    """FG groups + connected components of the unmarked remainder."""
    fg = len(groups(mol, marked))
    unmarked = set(range(len(mol.atoms))) - marked
    seen = set()
    comps = 0
    for start in sorted(unmarked):
        if start in seen:
            continue
        comps += 1
        comp = {start}
        frontier = [start]
        while frontier:
            x = frontier.pop()
            for y, _ in mol.neighbors(x):
                if y in unmarked and y not in comp:
                    comp.add(y)
                    frontier.append(y)
        seen |= comp
    return fg + comps


CURATED = [
    "CCCCCC",
    "c1ccccc1",
    "C1CC1",
    "CCO",
    "CC(=O)O",
    "CC(=O)C",
    "CC(=O)OC",
    "CC#N",
    "C=C",
    "CC=CC",
    "C#C",
    "C1CO1",
    "C1CN1",
    "C1CS1",
    "COCOC",
    "CC(OC)OC",
    "c1ccncc1",
    "c1ccc2c(c1)cc[nH]2",
    "CCCl",
    "ClCCl",
    "Fc1ccc(Br)cc1",
    "CN(C)C",
    "CS(=O)(=O)C",
    "OCC(O)CO",
    "Cc1cc(N)c2ccccc2[n+]1CCCCCCCCCC[n+]1c(C)cc(N)c2ccccc21",
]

EXTRA = [
    # reported to stderr only: heavy-atom and quotient-node counts for
    # the two large reference molecules used by parser/coarsener tests
    "CCc1c2c(nc3ccc(OC(=O)N4CCC(N5CCCCC5)CC4)cc13)-c1cc3c(c(=O)n1C2)COC(=O)[C@]3(O)CC",
]


def main():
    for smi in CURATED:
        mol = parse_smiles(smi)
        g = groups(mol, mark_atoms(mol))
        print(json.dumps({"smiles": smi, "groups": g}, separators=(", ", ": ")))
    for smi in CURATED + EXTRA:
        mol = parse_smiles(smi)
        marked = mark_atoms(mol)
        print(
            f"{smi}\n  heavy_atoms={len(mol.atoms)} bonds={len(mol.bonds)} "
            f"marked={sorted(marked)} quotient_nodes={quotient_node_count(mol, marked)}",
            file=sys.stderr,
        )


if __name__ == "__main__":
    main()
