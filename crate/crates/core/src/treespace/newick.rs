use std::collections::HashMap;
use std::fmt::Write;

use super::hierarchy::Hierarchy;
use super::split::Split;
use super::taxa::TaxonSet;
use super::tree::Tree;
use super::TreeError;

/// Pendant length written by the serializer. Pendant lengths are not part of
/// the tree-space point and are discarded on parse.
const PENDANT_LENGTH: &str = "0.1";

struct Node {
    label: Option<String>,
    length: Option<f64>,
    children: Vec<Node>,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, TreeError> {
        Err(TreeError::Newick {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) -> Result<(), TreeError> {
        loop {
            match self.s.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    let mut depth = 0;
                    loop {
                        match self.s.get(self.pos) {
                            None => return self.err("unterminated comment"),
                            Some(b'[') => depth += 1,
                            Some(b']') => {
                                depth -= 1;
                                if depth == 0 {
                                    self.pos += 1;
                                    break;
                                }
                            }
                            _ => {}
                        }
                        self.pos += 1;
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>, TreeError> {
        self.skip_ws()?;
        Ok(self.s.get(self.pos).copied())
    }

    fn subtree(&mut self) -> Result<Node, TreeError> {
        let mut children = Vec::new();
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.subtree()?);
                match self.peek()? {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err("expected ',' or ')'"),
                }
            }
        }
        let label = self.label()?;
        let length = if self.peek()? == Some(b':') {
            self.pos += 1;
            Some(self.number()?)
        } else {
            None
        };
        Ok(Node {
            label,
            length,
            children,
        })
    }

    fn label(&mut self) -> Result<Option<String>, TreeError> {
        match self.peek()? {
            Some(b'\'') => {
                self.pos += 1;
                let mut out = Vec::new();
                loop {
                    match self.s.get(self.pos) {
                        None => return self.err("unterminated quoted label"),
                        Some(b'\'') if self.s.get(self.pos + 1) == Some(&b'\'') => {
                            out.push(b'\'');
                            self.pos += 2;
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some(&c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                    }
                }
                Ok(Some(String::from_utf8_lossy(&out).into_owned()))
            }
            _ => {
                let start = self.pos;
                while let Some(&c) = self.s.get(self.pos) {
                    if c.is_ascii_whitespace() || b"()[]':;,".contains(&c) {
                        break;
                    }
                    self.pos += 1;
                }
                if self.pos == start {
                    Ok(None)
                } else {
                    Ok(Some(
                        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned(),
                    ))
                }
            }
        }
    }

    fn number(&mut self) -> Result<f64, TreeError> {
        self.skip_ws()?;
        let start = self.pos;
        while let Some(&c) = self.s.get(self.pos) {
            if c.is_ascii_digit() || b"+-.eE".contains(&c) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let tok = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("invalid branch length `{tok}`"))
            }
        }
    }
}

fn parse_root(text: &str) -> Result<Node, TreeError> {
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
    };
    let root = p.subtree()?;
    if p.peek()? != Some(b';') {
        return p.err("expected ';'");
    }
    p.pos += 1;
    if p.peek()?.is_some() {
        return p.err("trailing characters after ';'");
    }
    if root.children.is_empty() {
        return p.err("tree has no internal structure");
    }
    Ok(root)
}

/// Leaf labels of a Newick string, in order of appearance.
pub fn newick_labels(text: &str) -> Result<Vec<String>, TreeError> {
    fn walk(n: &Node, out: &mut Vec<String>) -> Result<(), TreeError> {
        if n.children.is_empty() {
            match &n.label {
                Some(l) => out.push(l.clone()),
                None => {
                    return Err(TreeError::Newick {
                        pos: 0,
                        msg: "leaf without label".into(),
                    })
                }
            }
        }
        n.children.iter().try_for_each(|c| walk(c, out))
    }
    let root = parse_root(text)?;
    let mut out = Vec::new();
    walk(&root, &mut out)?;
    Ok(out)
}

/// Parses an unrooted Newick tree over `taxa`.
///
/// Interior edges need lengths; lengths below the contraction tolerance
/// contract the edge. Internal node labels (e.g. support values) are ignored.
pub fn parse_newick(text: &str, taxa: &TaxonSet) -> Result<Tree, TreeError> {
    let root = parse_root(text)?;
    let n = taxa.len();
    let mut seen = 0u64;
    let mut edges: HashMap<Split, f64> = HashMap::new();

    fn walk(
        node: &Node,
        is_root: bool,
        taxa: &TaxonSet,
        seen: &mut u64,
        edges: &mut HashMap<Split, f64>,
    ) -> Result<u64, TreeError> {
        if let Some(len) = node.length {
            if len < 0.0 {
                return Err(TreeError::BadLength(len));
            }
        }
        if node.children.is_empty() {
            let label = node.label.as_deref().ok_or_else(|| TreeError::Newick {
                pos: 0,
                msg: "leaf without label".into(),
            })?;
            let i = taxa
                .index_of(label)
                .ok_or_else(|| TreeError::UnknownTaxon(label.to_string()))?;
            if *seen >> i & 1 == 1 {
                return Err(TreeError::DuplicateTaxon(label.to_string()));
            }
            *seen |= 1 << i;
            return Ok(1 << i);
        }
        let mut mask = 0;
        for c in &node.children {
            mask |= walk(c, false, taxa, seen, edges)?;
        }
        if !is_root {
            if let Ok(s) = Split::from_bits(taxa, mask) {
                let len = node.length.ok_or_else(|| TreeError::Newick {
                    pos: 0,
                    msg: format!("interior edge {} has no length", s.display_with(taxa)),
                })?;
                *edges.entry(s).or_insert(0.0) += len;
            }
        }
        Ok(mask)
    }

    walk(&root, true, taxa, &mut seen, &mut edges)?;
    if seen != taxa.full_mask() {
        let missing = (0..n).find(|i| seen >> i & 1 == 0).unwrap();
        return Err(TreeError::MissingTaxon(taxa.label(missing).to_string()));
    }
    Tree::new(taxa, edges)
}

fn write_label(out: &mut String, label: &str) {
    let plain = !label.is_empty()
        && label
            .bytes()
            .all(|c| !(c.is_ascii_whitespace() || b"()[]':;,".contains(&c)));
    if plain {
        out.push_str(label);
    } else {
        out.push('\'');
        out.push_str(&label.replace('\'', "''"));
        out.push('\'');
    }
}

impl Tree {
    /// Newick text rooted at the first taxon, with pendant lengths 0.1.
    /// Lengths use shortest round-trip formatting, so parsing returns an identical tree.
    pub fn to_newick(&self) -> String {
        let taxa = self.taxa();
        let splits: Vec<Split> = self.splits().collect();
        let h = Hierarchy::new(taxa.len(), &splits);

        fn vertex(out: &mut String, h: &Hierarchy, v: usize, t: &Tree) {
            let taxa = t.taxa();
            let mut first = true;
            for &c in h.children(v) {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push('(');
                vertex(out, h, c, t);
                out.push(')');
                let s = Split::from_bits(taxa, h.bits(c)).unwrap();
                let _ = write!(out, ":{}", t.length(&s));
            }
            let l = h.loose_leaves(v);
            for i in (0..taxa.len()).filter(|i| l >> i & 1 == 1) {
                if !first {
                    out.push(',');
                }
                first = false;
                write_label(out, taxa.label(i));
                let _ = write!(out, ":{PENDANT_LENGTH}");
            }
        }

        let mut out = String::from("(");
        write_label(&mut out, taxa.label(0));
        let _ = write!(out, ":{PENDANT_LENGTH},");
        vertex(&mut out, &h, h.root(), self);
        out.push_str(");");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::fixtures::random_tree;
    use rand::SeedableRng;

    fn t4() -> TaxonSet {
        TaxonSet::numbered(4).unwrap()
    }

    #[test]
    fn one_split() {
        let x = parse_newick("((1:0.1,2:0.1):0.5,3:0.1,4:0.1);", &t4()).unwrap();
        assert_eq!(x.n_edges(), 1);
        let s = Split::from_labels(&t4(), &["1", "2"]).unwrap();
        assert_eq!(x.length(&s), 0.5);
    }

    #[test]
    fn star_and_contraction() {
        assert!(parse_newick("(1:0.1,2:0.1,3:0.1,4:0.1);", &t4())
            .unwrap()
            .is_star());
        let x = parse_newick("((1:0.1,2:0.1):0.0,3:0.1,4:0.1);", &t4()).unwrap();
        assert!(x.is_star());
        assert!(!x.is_resolved());
    }

    #[test]
    fn errors() {
        let t = t4();
        assert!(matches!(
            parse_newick("((1,2):0.5,3,4", &t),
            Err(TreeError::Newick { .. })
        ));
        assert!(matches!(
            parse_newick("((1,9):0.5,3,4);", &t),
            Err(TreeError::UnknownTaxon(_))
        ));
        assert!(matches!(
            parse_newick("((1,1):0.5,3,4);", &t),
            Err(TreeError::DuplicateTaxon(_))
        ));
        assert!(matches!(
            parse_newick("((1,2):-0.5,3,4);", &t),
            Err(TreeError::BadLength(_))
        ));
        assert!(matches!(
            parse_newick("((1,2),3,4);", &t),
            Err(TreeError::Newick { .. })
        ));
        assert!(matches!(
            parse_newick("((1,2):1,3);", &t),
            Err(TreeError::MissingTaxon(_))
        ));
        assert!(parse_newick("", &t).is_err());
        assert!(parse_newick("((1,2):1,3,4); x", &t).is_err());
    }

    #[test]
    fn rooted_input_merges_root_edges() {
        let x = parse_newick("((1:1,2:1):0.25,(3:1,4:1):0.5);", &t4()).unwrap();
        assert_eq!(x.n_edges(), 1);
        assert_eq!(x.edges()[0].1, 0.75);
    }

    #[test]
    fn quoted_labels_comments_and_internal_labels() {
        let t = TaxonSet::new(&["S cer", "it's", "c", "d"]).unwrap();
        let txt = "[a comment]((  'S cer':1, 'it''s':2 )95:0.3[&&NHX],c,d);";
        let x = parse_newick(txt, &t).unwrap();
        assert_eq!(x.n_edges(), 1);
        let y = parse_newick(&x.to_newick(), &t).unwrap();
        assert_eq!(x, y);
        let labels = newick_labels(txt).unwrap();
        assert_eq!(labels, ["S cer", "it's", "c", "d"]);
    }

    #[test]
    fn random_trees_are_compatible_exhaustive_small_n() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 4..=8 {
            let taxa = TaxonSet::numbered(n).unwrap();
            for _ in 0..200 {
                let x = random_tree(&taxa, &mut rng, 0.2);
                let s: Vec<Split> = x.splits().collect();
                for i in 0..s.len() {
                    for j in 0..s.len() {
                        assert!(s[i].is_compatible_with(&s[j]));
                    }
                }
                assert!(s.len() <= n - 3);
            }
        }
    }

    proptest! {
        #[test]
        fn newick_round_trip(seed in any::<u64>(), n in 4usize..12, contract in 0.0f64..0.5) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let taxa = TaxonSet::numbered(n).unwrap();
            let x = random_tree(&taxa, &mut rng, contract);
            let s = x.to_newick();
            let y = parse_newick(&s, &taxa).unwrap();
            prop_assert_eq!(&x, &y);
            prop_assert_eq!(parse_newick(&y.to_newick(), &taxa).unwrap(), y);
        }
    }
}
