//! Fully parenthesized terms over `⋆`, evaluated in the table of order `2ⁿ`.
//!
//! ```text
//! expr := atom | "(" expr op expr ")"
//! op   := "*" | "⋆"
//! atom := int | int "^(" int ")"      -- x^(k): k-th left power of x
//! ```
//!
//! Whitespace is ignored. Unparenthesized chains such as `1*1*1` are
//! rejected.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::ld::{check_order, Laver};

/// Largest `k` accepted in `x^(k)`; larger powers would build huge trees.
pub const MAX_POWER: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Atom(u64),
    Op(usize, usize),
}

/// A term stored in post-order, so children always precede their parent and
/// structurally equal terms have identical storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdTerm {
    nodes: Vec<Node>,
}

impl LdTerm {
    pub fn atom(x: u64) -> Result<Self> {
        if x == 0 {
            return Err(domain("atoms must be at least 1"));
        }
        Ok(Self {
            nodes: vec![Node::Atom(x)],
        })
    }

    /// `(left ⋆ right)`.
    pub fn op(left: LdTerm, right: LdTerm) -> Self {
        let mut nodes = left.nodes;
        let offset = nodes.len();
        let l = offset - 1;
        nodes.extend(right.nodes.into_iter().map(|n| match n {
            Node::Atom(x) => Node::Atom(x),
            Node::Op(a, b) => Node::Op(a + offset, b + offset),
        }));
        let r = nodes.len() - 1;
        nodes.push(Node::Op(l, r));
        Self { nodes }
    }

    /// `x^(k)` as the left-nested tree `((x⋆x)⋆x)…`.
    pub fn left_power(x: u64, k: u64) -> Result<Self> {
        let mut t = Self::atom(x)?;
        if k == 0 {
            return Err(domain("left powers start at k = 1"));
        }
        if k > MAX_POWER {
            return Err(domain(format!("power {k} exceeds {MAX_POWER}")));
        }
        push_power(&mut t.nodes, x, k);
        Ok(t)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).run()
    }

    pub fn is_atom(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Number of atom occurrences.
    pub fn leaves(&self) -> usize {
        self.nodes.len().div_ceil(2)
    }

    pub fn atoms(&self) -> impl Iterator<Item = u64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Atom(x) => Some(*x),
            Node::Op(..) => None,
        })
    }

    /// Canonical fully parenthesized text; `parse(unparse(t)) == t`.
    pub fn unparse(&self) -> String {
        self.to_string()
    }

    /// Bottom-up evaluation with `⋆ₙ`.
    pub fn eval(&self, engine: &Laver, n: u32) -> Result<u64> {
        let big = check_order(n)?;
        if let Some(x) = self.atoms().find(|&x| x > big) {
            return Err(domain(format!("atom {x} exceeds 2^{n}")));
        }
        let mut values = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match *node {
                Node::Atom(x) => x,
                Node::Op(l, r) => engine.star_prod(n, values[l], values[r])?,
            };
            values.push(v);
        }
        Ok(*values.last().unwrap())
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }
}

fn push_power(nodes: &mut Vec<Node>, x: u64, k: u64) {
    for _ in 1..k {
        let acc = nodes.len() - 1;
        nodes.push(Node::Atom(x));
        nodes.push(Node::Op(acc, acc + 1));
    }
}

/// `eval(s, n) == eval(t, n)`.
pub fn equal_in(engine: &Laver, n: u32, s: &LdTerm, t: &LdTerm) -> Result<bool> {
    Ok(s.eval(engine, n)? == t.eval(engine, n)?)
}

impl fmt::Display for LdTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        enum Step {
            Visit(usize),
            Text(&'static str),
        }
        let mut stack = vec![Step::Visit(self.root())];
        while let Some(step) = stack.pop() {
            match step {
                Step::Text(s) => f.write_str(s)?,
                Step::Visit(i) => match self.nodes[i] {
                    Node::Atom(x) => write!(f, "{x}")?,
                    Node::Op(l, r) => {
                        stack.push(Step::Text(")"));
                        stack.push(Step::Visit(r));
                        stack.push(Step::Text("*"));
                        stack.push(Step::Visit(l));
                        stack.push(Step::Text("("));
                    }
                },
            }
        }
        Ok(())
    }
}

impl FromStr for LdTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

struct Frame {
    left: Option<usize>,
    op_seen: bool,
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    nodes: Vec<Node>,
    stack: Vec<Frame>,
}

impl Parser {
    fn new(text: &str) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            nodes: Vec::new(),
            stack: Vec::new(),
        }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| Error::Syntax {
            pos: start,
            msg: "integer too large".into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    /// Parses an atom, with optional `^(k)`, and appends it.
    fn atom(&mut self) -> Result<()> {
        let start = self.pos;
        let x = self.number()?;
        if x == 0 {
            return Err(Error::Syntax {
                pos: start,
                msg: "atoms must be at least 1".into(),
            });
        }
        self.nodes.push(Node::Atom(x));
        if self.peek() == Some('^') {
            self.pos += 1;
            self.expect('(')?;
            self.skip_ws();
            let kpos = self.pos;
            let k = self.number()?;
            if k == 0 || k > MAX_POWER {
                return Err(Error::Syntax {
                    pos: kpos,
                    msg: format!("power must be in 1..={MAX_POWER}"),
                });
            }
            self.expect(')')?;
            push_power(&mut self.nodes, x, k);
        }
        Ok(())
    }

    fn run(mut self) -> Result<LdTerm> {
        // Iterative so that deeply nested input cannot exhaust the stack.
        loop {
            match self.peek() {
                Some('(') => {
                    self.pos += 1;
                    self.stack.push(Frame {
                        left: None,
                        op_seen: false,
                    });
                    continue;
                }
                Some(c) if c.is_ascii_digit() => self.atom()?,
                Some(_) => return Err(self.error("expected '(' or an integer")),
                None => return Err(self.error("unexpected end of input")),
            }
            // A complete subterm ends at the last node; attach it upward.
            loop {
                let done = self.nodes.len() - 1;
                let Some(top) = self.stack.last_mut() else {
                    if self.peek().is_some() {
                        return Err(self.error("trailing input after term"));
                    }
                    return Ok(LdTerm { nodes: self.nodes });
                };
                match top.left {
                    None => {
                        top.left = Some(done);
                        match self.peek() {
                            Some('*') | Some('⋆') => {
                                self.pos += 1;
                                self.stack.last_mut().unwrap().op_seen = true;
                            }
                            _ => return Err(self.error("expected '*'")),
                        }
                        break;
                    }
                    Some(left) => {
                        debug_assert!(top.op_seen);
                        match self.peek() {
                            Some(')') => self.pos += 1,
                            Some('*') | Some('⋆') => {
                                return Err(self.error("chains must be parenthesized"))
                            }
                            _ => return Err(self.error("expected ')'")),
                        }
                        self.stack.pop();
                        self.nodes.push(Node::Op(left, done));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> LdTerm {
        LdTerm::parse(s).unwrap()
    }

    #[test]
    fn parse_shapes() {
        let one = LdTerm::atom(1).unwrap();
        assert_eq!(t("(1*1)"), LdTerm::op(one.clone(), one.clone()));
        let two = LdTerm::op(one.clone(), one.clone());
        assert_eq!(t("1^(3)"), LdTerm::op(two.clone(), one.clone()));
        assert_eq!(t("((1*1)*(1*1))"), LdTerm::op(two.clone(), two));
        assert_eq!(t(" ( 1 ⋆ 1 ) "), t("(1*1)"));
        assert_eq!(t("1^(1)"), one);
        assert_eq!(t("1^(4)").leaves(), 4);
    }

    #[test]
    fn canonical_form() {
        assert_eq!(t("1^(3)").unparse(), "((1*1)*1)");
        assert_eq!(t("( 2 ⋆(3* 4))").unparse(), "(2*(3*4))");
        for s in ["1", "(1*1)", "((1*2)*(3*(4*5)))"] {
            assert_eq!(t(&t(s).unparse()), t(s));
            assert_eq!(t(s).unparse(), s);
        }
    }

    #[test]
    fn syntax_errors() {
        let pos = |s: &str| match LdTerm::parse(s) {
            Err(Error::Syntax { pos, .. }) => pos,
            other => panic!("{s:?} parsed as {other:?}"),
        };
        assert_eq!(pos("1*1"), 1);
        assert_eq!(pos("(1*1*1)"), 4);
        assert_eq!(pos("(1*1"), 4);
        assert_eq!(pos(""), 0);
        assert_eq!(pos("0"), 0);
        assert_eq!(pos("1^(0)"), 3);
        assert_eq!(pos("(1+1)"), 2);
        assert_eq!(pos("((1*1)"), 6);
        assert_eq!(pos("x"), 0);
    }

    #[test]
    fn deep_nesting_is_fine() {
        let depth = 100_000;
        let s = format!("{}1{}", "(1*".repeat(depth), ")".repeat(depth));
        let term = t(&s);
        assert_eq!(term.leaves(), depth + 1);
        assert_eq!(term.unparse(), s);
    }

    #[test]
    fn evaluation() {
        let l = Laver::global();
        assert_eq!(t("(1*1)").eval(l, 2).unwrap(), 2);
        assert_eq!(t("1^(5)").eval(l, 2).unwrap(), 1);
        assert_eq!(t("1^(17)").eval(l, 4).unwrap(), 1);
        assert!(t("(9*1)").eval(l, 3).is_err());
        assert!(t("(1*1)").eval(l, 0).is_err());
        for n in 1..=4 {
            assert!(equal_in(l, n, &t("(1*(1*1))"), &t("((1*1)*(1*1))")).unwrap());
        }
        assert!(!equal_in(l, 2, &t("1"), &t("(1*1)")).unwrap());
    }
}
