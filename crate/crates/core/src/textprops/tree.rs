//! Penn-Treebank bracketed constituency trees.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    pub label: String,
    pub children: Vec<ParseTree>,
    pub leaf: Option<String>,
}

impl ParseTree {
    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        ParseTree {
            label: label.into(),
            children,
            leaf: None,
        }
    }

    pub fn preterminal(label: impl Into<String>, word: impl Into<String>) -> Self {
        ParseTree {
            label: label.into(),
            children: Vec::new(),
            leaf: Some(word.into()),
        }
    }

    /// Leaf tokens, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(leaf) = &self.leaf {
            out.push(leaf);
        }
        for child in &self.children {
            child.collect_leaves(out);
        }
    }

    pub fn leaf_count(&self) -> usize {
        match &self.leaf {
            Some(_) => 1,
            None => self.children.iter().map(ParseTree::leaf_count).sum(),
        }
    }

    /// The same tree with every node's children in reverse order.
    pub fn mirrored(&self) -> ParseTree {
        ParseTree {
            label: self.label.clone(),
            children: self.children.iter().rev().map(ParseTree::mirrored).collect(),
            leaf: self.leaf.clone(),
        }
    }

    pub fn parse(input: &str) -> Result<ParseTree> {
        let mut parser = Parser { src: input, pos: 0 };
        parser.skip_ws();
        let tree = parser.tree()?;
        parser.skip_ws();
        if parser.pos != input.len() {
            return Err(parser.error("trailing input after tree"));
        }
        Ok(tree)
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        if let Some(leaf) = &self.leaf {
            write!(f, " {leaf}")?;
        }
        for child in &self.children {
            write!(f, " {child}")?;
        }
        f.write_str(")")
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::TreeSyntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn atom(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn tree(&mut self) -> Result<ParseTree> {
        if self.peek() != Some('(') {
            return Err(self.error("expected `(`"));
        }
        self.pos += 1;
        self.skip_ws();
        let label = self.atom().to_string();

        let mut children = Vec::new();
        let mut leaf: Option<String> = None;
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.error("unbalanced brackets: missing `)`")),
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some('(') => {
                    if leaf.is_some() {
                        return Err(self.error("node mixes a leaf token with subtrees"));
                    }
                    children.push(self.tree()?);
                }
                Some(_) => {
                    if leaf.is_some() || !children.is_empty() {
                        return Err(self.error("node mixes a leaf token with other content"));
                    }
                    leaf = Some(self.atom().to_string());
                }
            }
        }
        Ok(ParseTree { label, children, leaf })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ptb_example() {
        let t = ParseTree::parse("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))").unwrap();
        assert_eq!(t.label, "S");
        assert_eq!(t.leaves(), ["a", "dog", "runs"]);
        assert_eq!(t.to_string(), "(S (NP (DT a) (NN dog)) (VP (VBZ runs)))");
    }

    #[test]
    fn parses_unlabelled_root() {
        let t = ParseTree::parse("( (S (NN dog)) )").unwrap();
        assert_eq!(t.label, "");
        assert_eq!(t.children.len(), 1);
        assert_eq!(t.leaves(), ["dog"]);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(ParseTree::parse("(S (NP (NN dog))").is_err());
        assert!(ParseTree::parse("(S (NN dog)))").is_err());
        assert!(ParseTree::parse("S (NN dog)").is_err());
        assert!(ParseTree::parse("(NN dog cat)").is_err());
        assert!(ParseTree::parse("(S dog (NN cat))").is_err());
    }

    #[test]
    fn mirror_reverses_leaves() {
        let t = ParseTree::parse("(S (A x) (B (C y) (D z)))").unwrap();
        assert_eq!(t.mirrored().leaves(), ["z", "y", "x"]);
        assert_eq!(t.mirrored().mirrored(), t);
    }
}
