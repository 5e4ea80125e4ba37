//! SMILES tokenizer.

use super::{ChiralTag, SmilesError, SmilesErrorKind};

/// Fully decoded atom token (organic-subset or bracket).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomToken {
    /// Canonical capitalization ("N", "Cl"), even for aromatic atoms.
    pub symbol: String,
    pub aromatic: bool,
    pub bracket: bool,
    pub isotope: Option<u16>,
    pub charge: i32,
    pub explicit_h: Option<u8>,
    pub chiral: ChiralTag,
}

/// Bond symbol as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    /// `/` directional single bond
    Up,
    /// `\` directional single bond
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Atom(AtomToken),
    Bond(BondSym),
    RingClosure(u16),
    BranchOpen,
    BranchClose,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// 0-based character offset of the first byte of the lexeme.
    pub pos: usize,
}

struct Lexer<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, pos: usize, kind: SmilesErrorKind) -> SmilesError {
        SmilesError::new(pos, kind)
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    /// Reads an unsigned decimal run of at most `max_digits`.
    fn digits(&mut self, max_digits: usize) -> Option<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        while self.pos - start < max_digits {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    value = value * 10 + u32::from(c - b'0');
                    self.pos += 1;
                }
                _ => break,
            }
        }
        (self.pos > start).then_some(value)
    }

    fn organic_atom(&mut self) -> Option<AtomToken> {
        let rest = &self.input[self.pos..];
        for sym in ["Cl", "Br"] {
            if rest.starts_with(sym.as_bytes()) {
                self.pos += 2;
                return Some(AtomToken {
                    symbol: sym.to_string(),
                    aromatic: false,
                    bracket: false,
                    isotope: None,
                    charge: 0,
                    explicit_h: None,
                    chiral: ChiralTag::None,
                });
            }
        }
        let c = *rest.first()? as char;
        let (symbol, aromatic) = match c {
            'B' | 'C' | 'N' | 'O' | 'P' | 'S' | 'F' | 'I' => (c.to_string(), false),
            'b' | 'c' | 'n' | 'o' | 'p' | 's' => (c.to_ascii_uppercase().to_string(), true),
            _ => return None,
        };
        self.pos += 1;
        Some(AtomToken {
            symbol,
            aromatic,
            bracket: false,
            isotope: None,
            charge: 0,
            explicit_h: None,
            chiral: ChiralTag::None,
        })
    }

    fn bracket_atom(&mut self, open: usize) -> Result<AtomToken, SmilesError> {
        let isotope = self.digits(3).map(|v| v as u16);

        let sym_pos = self.pos;
        let first = self
            .bump()
            .ok_or_else(|| self.err(open, SmilesErrorKind::UnterminatedBracket))?;
        if !first.is_ascii_alphabetic() {
            return Err(self.err(sym_pos, SmilesErrorKind::UnknownCharacter(first as char)));
        }
        let mut symbol = (first as char).to_string();
        // Two-letter symbols: an uppercase letter followed by a lowercase one,
        // except lowercase letters reserved for bracket fields (h is never an
        // element's second letter in this subset's datasets).
        if let Some(next) = self.peek() {
            if next.is_ascii_lowercase() && first.is_ascii_uppercase() {
                symbol.push(next as char);
                self.pos += 1;
            } else if next.is_ascii_lowercase()
                && first.is_ascii_lowercase()
                && matches!(&symbol[..], "s" | "a")
                && matches!(next, b'e' | b's')
            {
                // aromatic selenium / arsenic: [se], [as]
                symbol.push(next as char);
                self.pos += 1;
            }
        }
        let aromatic = symbol.chars().next().unwrap().is_ascii_lowercase();
        let symbol = if aromatic {
            let mut s = symbol.clone();
            s[..1].make_ascii_uppercase();
            s
        } else {
            symbol
        };

        let mut chiral = ChiralTag::None;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chiral = ChiralTag::Cw;
            } else {
                chiral = ChiralTag::Ccw;
            }
            // extended tags (@TH1, @AL1, @SP1, @TB.., @OH..) are outside the
            // subset; a following 'H' alone is the hydrogen-count field
            let rest = &self.input[self.pos..];
            if rest.len() >= 3
                && matches!(&rest[..2], b"TH" | b"AL" | b"SP" | b"TB" | b"OH")
                && rest[2].is_ascii_digit()
            {
                return Err(self.err(
                    self.pos,
                    SmilesErrorKind::UnsupportedFeature("extended chirality tag"),
                ));
            }
        }

        let mut explicit_h = None;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            explicit_h = Some(self.digits(1).unwrap_or(1) as u8);
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let unit = if sign == b'+' { 1 } else { -1 };
            if let Some(n) = self.digits(1) {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }
        if !(-4..=4).contains(&charge) {
            return Err(self.err(
                open,
                SmilesErrorKind::UnsupportedFeature("charge outside [-4, +4]"),
            ));
        }

        match self.bump() {
            Some(b']') => Ok(AtomToken {
                symbol,
                aromatic,
                bracket: true,
                isotope,
                charge,
                explicit_h,
                chiral,
            }),
            Some(b':') => Err(self.err(
                self.pos - 1,
                SmilesErrorKind::UnsupportedFeature("atom class label"),
            )),
            Some(c) => Err(self.err(self.pos - 1, SmilesErrorKind::UnknownCharacter(c as char))),
            None => Err(self.err(open, SmilesErrorKind::UnterminatedBracket)),
        }
    }
}

/// Lexes a SMILES string into tokens; bracket atoms are fully decoded.
pub fn tokenize(smiles: &str) -> Result<Vec<Token>, SmilesError> {
    if smiles.is_empty() {
        return Err(SmilesError::new(0, SmilesErrorKind::EmptyInput));
    }
    if !smiles.is_ascii() {
        let pos = smiles
            .char_indices()
            .find(|(_, c)| !c.is_ascii())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let c = smiles[pos..].chars().next().unwrap();
        return Err(SmilesError::new(pos, SmilesErrorKind::UnknownCharacter(c)));
    }

    let mut lx = Lexer {
        input: smiles.as_bytes(),
        pos: 0,
    };
    let mut tokens = Vec::new();
    let mut depth: i64 = 0;
    while let Some(c) = lx.peek() {
        let pos = lx.pos;
        let kind = match c {
            b'[' => {
                lx.pos += 1;
                TokenKind::Atom(lx.bracket_atom(pos)?)
            }
            b'-' => {
                lx.pos += 1;
                TokenKind::Bond(BondSym::Single)
            }
            b'=' => {
                lx.pos += 1;
                TokenKind::Bond(BondSym::Double)
            }
            b'#' => {
                lx.pos += 1;
                TokenKind::Bond(BondSym::Triple)
            }
            b':' => {
                lx.pos += 1;
                TokenKind::Bond(BondSym::Aromatic)
            }
            b'/' => {
                lx.pos += 1;
                TokenKind::Bond(BondSym::Up)
            }
            b'\\' => {
                lx.pos += 1;
                TokenKind::Bond(BondSym::Down)
            }
            b'(' => {
                lx.pos += 1;
                depth += 1;
                TokenKind::BranchOpen
            }
            b')' => {
                lx.pos += 1;
                depth -= 1;
                if depth < 0 {
                    return Err(SmilesError::new(pos, SmilesErrorKind::UnterminatedBranch));
                }
                TokenKind::BranchClose
            }
            b'.' => {
                lx.pos += 1;
                TokenKind::Dot
            }
            b'%' => {
                lx.pos += 1;
                let d1 = lx.peek().filter(u8::is_ascii_digit);
                lx.pos += usize::from(d1.is_some());
                let d2 = lx.peek().filter(u8::is_ascii_digit);
                lx.pos += usize::from(d2.is_some());
                match (d1, d2) {
                    (Some(a), Some(b)) => {
                        TokenKind::RingClosure(u16::from(a - b'0') * 10 + u16::from(b - b'0'))
                    }
                    _ => {
                        return Err(SmilesError::new(
                            pos,
                            SmilesErrorKind::BadRingDigit("'%' must be followed by two digits"),
                        ))
                    }
                }
            }
            b'1'..=b'9' => {
                lx.pos += 1;
                TokenKind::RingClosure(u16::from(c - b'0'))
            }
            b'0' => {
                return Err(SmilesError::new(
                    pos,
                    SmilesErrorKind::BadRingDigit("bare ring digit 0"),
                ))
            }
            b'*' => {
                return Err(SmilesError::new(
                    pos,
                    SmilesErrorKind::UnsupportedFeature("wildcard atom"),
                ))
            }
            _ => match lx.organic_atom() {
                Some(atom) => TokenKind::Atom(atom),
                None => {
                    return Err(SmilesError::new(
                        pos,
                        SmilesErrorKind::UnknownCharacter(c as char),
                    ))
                }
            },
        };
        tokens.push(Token { kind, pos });
    }
    if depth != 0 {
        return Err(SmilesError::new(
            smiles.len(),
            SmilesErrorKind::UnterminatedBranch,
        ));
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(smiles: &str) -> Vec<AtomToken> {
        tokenize(smiles)
            .unwrap()
            .into_iter()
            .filter_map(|t| match t.kind {
                TokenKind::Atom(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn simple_chain() {
        let toks = tokenize("CCO").unwrap();
        assert_eq!(toks.len(), 3);
        let a = atoms("CCO");
        assert_eq!(a[0].symbol, "C");
        assert_eq!(a[2].symbol, "O");
        assert!(a.iter().all(|a| !a.aromatic && !a.bracket));
    }

    #[test]
    fn bracket_cation_from_ring_system() {
        // the [n+] bracket inside the aromatic ring system
        let a = atoms("Cc1cc(N)c2ccccc2[n+]1CC");
        let cation = a.iter().find(|a| a.bracket).unwrap();
        assert_eq!(cation.symbol, "N");
        assert!(cation.aromatic);
        assert_eq!(cation.charge, 1);
    }

    #[test]
    fn unterminated_branch_reported_at_end() {
        let err = tokenize("C(C").unwrap_err();
        assert_eq!(err.kind, SmilesErrorKind::UnterminatedBranch);
        assert_eq!(err.pos, 3);
    }

    #[test]
    fn bracket_fields_decoded() {
        let a = atoms("[13CH3-]");
        assert_eq!(a[0].isotope, Some(13));
        assert_eq!(a[0].symbol, "C");
        assert_eq!(a[0].explicit_h, Some(3));
        assert_eq!(a[0].charge, -1);

        let a = atoms("[NH4+]");
        assert_eq!(a[0].explicit_h, Some(4));
        assert_eq!(a[0].charge, 1);

        let a = atoms("[O--]");
        assert_eq!(a[0].charge, -2);
        let a = atoms("[Fe+3]");
        assert_eq!(a[0].symbol, "Fe");
        assert_eq!(a[0].charge, 3);
    }

    #[test]
    fn chirality_tags() {
        let a = atoms("[C@H](C)(N)O");
        assert_eq!(a[0].chiral, ChiralTag::Ccw);
        let a = atoms("[C@@H](C)(N)O");
        assert_eq!(a[0].chiral, ChiralTag::Cw);
    }

    #[test]
    fn percent_ring_closure() {
        let toks = tokenize("C%12CC%12").unwrap();
        let closures: Vec<_> = toks
            .iter()
            .filter_map(|t| match t.kind {
                TokenKind::RingClosure(d) => Some(d),
                _ => None,
            })
            .collect();
        assert_eq!(closures, vec![12, 12]);
    }

    #[test]
    fn errors_carry_offsets() {
        let err = tokenize("CC?C").unwrap_err();
        assert_eq!(err.pos, 2);
        assert_eq!(err.kind, SmilesErrorKind::UnknownCharacter('?'));

        let err = tokenize("C[CH3").unwrap_err();
        assert_eq!(err.kind, SmilesErrorKind::UnterminatedBracket);

        let err = tokenize("C%1C").unwrap_err();
        assert!(matches!(err.kind, SmilesErrorKind::BadRingDigit(_)));
    }

    #[test]
    fn lexeme_concatenation_reproduces_input() {
        // token positions partition the input: re-slicing by consecutive
        // offsets reproduces it exactly
        for smiles in ["CCO", "c1ccccc1", "C/C=C\\C", "[nH]1cccc1", "C%10CC%10", "CC(=O)[O-].[Na+]"] {
            let toks = tokenize(smiles).unwrap();
            let mut rebuilt = String::new();
            for (i, t) in toks.iter().enumerate() {
                let end = toks.get(i + 1).map_or(smiles.len(), |n| n.pos);
                rebuilt.push_str(&smiles[t.pos..end]);
            }
            assert_eq!(rebuilt, smiles);
        }
    }
}
