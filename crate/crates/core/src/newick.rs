//! Strict Newick reader and writer for rooted binary topologies.
//!
//! Dialect:
//!
//! ```text
//! tree    := subtree ';'
//! subtree := leaf | '(' subtree ',' subtree ')'
//! leaf    := [A-Za-z0-9_.-]+
//! ```
//!
//! Whitespace between tokens is skipped. Branch lengths, internal labels and
//! multifurcations are rejected with the byte offset of the offending token.
//! Multi-tree files hold one tree per line; blank lines and lines starting
//! with `#` are ignored.

use std::collections::HashSet;

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::tree::{is_taxon_byte, NodeId, PhyloTree, Taxon, TreeBuilder};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError::new(self.pos, kind)
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            None => self.err(ParseErrorKind::UnexpectedEnd),
            Some(b':') => self.err(ParseErrorKind::BranchLength),
            Some(_) => {
                // Report the full character, not the first byte of it.
                let rest = String::from_utf8_lossy(&self.bytes[self.pos..]);
                let c = rest.chars().next().unwrap_or('\u{FFFD}');
                self.err(ParseErrorKind::UnexpectedChar(c))
            }
        }
    }
}

/// Parses one tree terminated by `;`.
pub fn parse(text: &str) -> Result<PhyloTree, ParseError> {
    let mut cur = Cursor {
        bytes: text.as_bytes(),
        pos: 0,
    };
    cur.skip_ws();
    if cur.peek().is_none() {
        return Err(cur.err(ParseErrorKind::Empty));
    }

    let mut b = TreeBuilder::new();
    let mut seen: HashSet<&str> = HashSet::new();
    // Children collected so far for each open parenthesis.
    let mut open: Vec<Vec<NodeId>> = Vec::new();

    'subtree: loop {
        cur.skip_ws();
        let mut node = match cur.peek() {
            Some(b'(') => {
                cur.pos += 1;
                open.push(Vec::with_capacity(2));
                continue 'subtree;
            }
            Some(c) if is_taxon_byte(c) => {
                let start = cur.pos;
                while cur.peek().is_some_and(is_taxon_byte) {
                    cur.pos += 1;
                }
                let name = &text[start..cur.pos];
                if !seen.insert(name) {
                    return Err(ParseError::new(
                        start,
                        ParseErrorKind::DuplicateTaxon(name.to_string()),
                    ));
                }
                b.leaf(Taxon::new(name).expect("validated bytes"))
            }
            _ => return Err(cur.unexpected()),
        };

        // Close as many groups as the input allows, then either start the
        // next sibling or finish the tree.
        loop {
            cur.skip_ws();
            let Some(children) = open.last_mut() else {
                return match cur.peek() {
                    Some(b';') => {
                        cur.pos += 1;
                        cur.skip_ws();
                        if cur.peek().is_some() {
                            Err(cur.err(ParseErrorKind::TrailingInput))
                        } else {
                            Ok(b.finish(node).expect("parser builds valid trees"))
                        }
                    }
                    None => Err(cur.err(ParseErrorKind::MissingSemicolon)),
                    Some(c) if is_taxon_byte(c) => Err(cur.err(ParseErrorKind::InternalLabel)),
                    _ => Err(cur.unexpected()),
                };
            };
            children.push(node);
            match cur.peek() {
                Some(b',') => {
                    if children.len() >= 2 {
                        return Err(cur.err(ParseErrorKind::NonBinary));
                    }
                    cur.pos += 1;
                    continue 'subtree;
                }
                Some(b')') => {
                    if children.len() != 2 {
                        return Err(cur.err(ParseErrorKind::NonBinary));
                    }
                    let closed = open.pop().expect("nonempty");
                    node = b.join(closed[0], closed[1]);
                    cur.pos += 1;
                    cur.skip_ws();
                    if cur.peek().is_some_and(is_taxon_byte) {
                        return Err(cur.err(ParseErrorKind::InternalLabel));
                    }
                }
                _ => return Err(cur.unexpected()),
            }
        }
    }
}

/// Parses a multi-tree file: one tree per non-blank, non-comment line.
pub fn parse_many(text: &str) -> Result<Vec<PhyloTree>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| {
            let l = line.trim_start();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(i, line)| {
            parse(line).map_err(|source| Error::ParseLine {
                line: i + 1,
                source,
            })
        })
        .collect()
}

/// Writes `t` in stored child order, terminated by `;`.
pub fn serialize(t: &PhyloTree) -> String {
    enum Step {
        Enter(NodeId),
        Comma,
        Close,
    }
    let mut out = String::with_capacity(4 * t.len());
    let mut stack = vec![Step::Enter(t.root())];
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(u) => match t.children(u) {
                None => out.push_str(t.taxon(u).expect("leaf").as_str()),
                Some([l, r]) => {
                    out.push('(');
                    stack.push(Step::Close);
                    stack.push(Step::Enter(r));
                    stack.push(Step::Comma);
                    stack.push(Step::Enter(l));
                }
            },
            Step::Comma => out.push(','),
            Step::Close => out.push(')'),
        }
    }
    out.push(';');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kind(s: &str) -> (usize, ParseErrorKind) {
        let e = parse(s).unwrap_err();
        (e.offset, e.kind)
    }

    #[test]
    fn smallest_shape() {
        let t = parse("((a,b),c);").unwrap();
        assert_eq!(t.leaf_count(), 3);
        let [l, r] = t.children(t.root()).unwrap();
        assert_eq!(
            t.taxa_below(l),
            vec![Taxon::new("a").unwrap(), Taxon::new("b").unwrap()]
        );
        assert_eq!(t.taxon(r).unwrap().as_str(), "c");
        let order: Vec<&str> = t.taxa().map(|x| x.as_str()).collect();
        assert_eq!(order, ["a", "b", "c"]);
    }

    #[test]
    fn single_leaf() {
        let t = parse("a;").unwrap();
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(serialize(&t), "a;");
        assert_eq!(serialize(&parse("x;").unwrap()), "x;");
    }

    #[test]
    fn errors_are_positioned() {
        assert_eq!(kind("((a,b,c),d);"), (5, ParseErrorKind::NonBinary));
        assert_eq!(kind(""), (0, ParseErrorKind::Empty));
        assert_eq!(kind("   \n"), (4, ParseErrorKind::Empty));
        assert_eq!(
            kind("(a,a);"),
            (3, ParseErrorKind::DuplicateTaxon("a".into()))
        );
        assert_eq!(kind("((a,b)x,c);"), (6, ParseErrorKind::InternalLabel));
        assert_eq!(kind("((a,b),c)r;"), (9, ParseErrorKind::InternalLabel));
        assert_eq!(kind("((a:1,b),c);"), (3, ParseErrorKind::BranchLength));
        assert_eq!(kind("((a,b),c)"), (9, ParseErrorKind::MissingSemicolon));
        assert_eq!(kind("((a,b),c);x"), (10, ParseErrorKind::TrailingInput));
        assert_eq!(kind("(a);"), (2, ParseErrorKind::NonBinary));
        assert_eq!(kind("((a,b),"), (7, ParseErrorKind::UnexpectedEnd));
        assert_eq!(kind("('a',b);"), (1, ParseErrorKind::UnexpectedChar('\'')));
        assert_eq!(kind("(é,b);"), (1, ParseErrorKind::UnexpectedChar('é')));
    }

    #[test]
    fn whitespace_is_skipped() {
        let t = parse("  ( ( a , b ) ,\n c ) ; ").unwrap();
        assert_eq!(serialize(&t), "((a,b),c);");
    }

    #[test]
    fn order_preserved() {
        assert_eq!(serialize(&parse("((a,b),c);").unwrap()), "((a,b),c);");
        assert_eq!(serialize(&parse("(c,(b,a));").unwrap()), "(c,(b,a));");
    }

    #[test]
    fn multi_tree_file() {
        let text = "# two trees\n((a,b),c);\n\n  # indented comment\n((a,c),b);\n";
        let trees = parse_many(text).unwrap();
        assert_eq!(trees.len(), 2);
        let err = parse_many("((a,b),c);\n(a,b\n").unwrap_err();
        assert!(matches!(err, Error::ParseLine { line: 2, .. }));
    }

    #[test]
    fn deep_nesting_does_not_overflow() {
        let n = 50_000;
        let mut s = String::new();
        for _ in 0..n {
            s.push('(');
        }
        s.push_str("x0");
        for i in 1..=n {
            s.push_str(&format!(",x{i})"));
        }
        s.push(';');
        let t = parse(&s).unwrap();
        assert_eq!(t.leaf_count(), n + 1);
        assert_eq!(serialize(&t), s);
        assert!(t.canonical().len() > n);
    }

    fn arb_newick() -> impl Strategy<Value = String> {
        let leaf = "[a-z]{1,3}";
        leaf.prop_recursive(6, 40, 2, |inner| {
            (inner.clone(), inner).prop_map(|(l, r)| format!("({l},{r})"))
        })
        .prop_map(|s| format!("{s};"))
    }

    proptest! {
        #[test]
        fn never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let s = String::from_utf8_lossy(&bytes);
            let _ = parse(&s);
        }

        #[test]
        fn never_panics_on_grammar_noise(s in "[(),;a-c: \\n]{0,40}") {
            if let Err(e) = parse(&s) {
                prop_assert!(e.offset <= s.len());
            }
        }

        #[test]
        fn round_trip(s in arb_newick()) {
            // Random labels may repeat; only uniquely-labelled trees are valid.
            if let Ok(t) = parse(&s) {
                let again = parse(&serialize(&t)).unwrap();
                prop_assert!(again.isomorphic(&t));
                prop_assert_eq!(serialize(&again), serialize(&t));
                let n = t.leaf_count();
                if n >= 2 {
                    prop_assert_eq!(t.len() - n, n - 1);
                    prop_assert_eq!(t.edge_count(), 2 * n - 2);
                }
            }
        }
    }
}
