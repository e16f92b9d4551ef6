//! Tokenizer and s-expression reader for PDDL text.
//!
//! Symbols are normalized to lower case and `;` comments are dropped before
//! tokenization. Every node carries the 1-based position of its first
//! character so later stages can report precise diagnostics.

use super::{PddlError, Pos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SExpr {
    Sym(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub(crate) fn pos(&self) -> Pos {
        match self {
            SExpr::Sym(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub(crate) fn as_sym(&self) -> Option<&str> {
        match self {
            SExpr::Sym(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub(crate) fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Sym(..) => None,
        }
    }

    /// Head symbol of a list, if the list is non-empty and starts with a symbol.
    pub(crate) fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(SExpr::as_sym)
    }

    pub(crate) fn describe(&self) -> String {
        match self {
            SExpr::Sym(s, _) => format!("`{s}`"),
            SExpr::List(items, _) => match items.first().and_then(SExpr::as_sym) {
                Some(h) => format!("list `({h} ...)`"),
                None => "list".to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open(Pos),
    Close(Pos),
    Sym(String, Pos),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    let mut current: Option<(String, Pos)> = None;

    fn flush(current: &mut Option<(String, Pos)>, tokens: &mut Vec<Token>) {
        if let Some((s, p)) = current.take() {
            tokens.push(Token::Sym(s.to_lowercase(), p));
        }
    }

    while let Some(c) = chars.next() {
        let pos = Pos { line, col };
        match c {
            ';' => {
                flush(&mut current, &mut tokens);
                // comment runs to end of line; the newline itself is handled below
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
                col += 1;
                continue;
            }
            '(' => {
                flush(&mut current, &mut tokens);
                tokens.push(Token::Open(pos));
            }
            ')' => {
                flush(&mut current, &mut tokens);
                tokens.push(Token::Close(pos));
            }
            c if c.is_whitespace() => flush(&mut current, &mut tokens),
            c => match &mut current {
                Some((s, _)) => s.push(c),
                None => current = Some((c.to_string(), pos)),
            },
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn end_pos(text: &str) -> Pos {
    let line = text.matches('\n').count() + 1;
    let col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Pos { line, col }
}

/// Reads exactly one top-level list from `text`.
pub(crate) fn read(text: &str) -> Result<SExpr, PddlError> {
    let tokens = tokenize(text);
    let eof = end_pos(text);
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut top: Option<SExpr> = None;

    for tok in tokens {
        if top.is_some() {
            let (pos, found) = match &tok {
                Token::Open(p) => (*p, "`(`".to_string()),
                Token::Close(p) => (*p, "`)`".to_string()),
                Token::Sym(s, p) => (*p, format!("`{s}`")),
            };
            return Err(PddlError::Syntax {
                pos,
                expected: "end of input".into(),
                found,
            });
        }
        match tok {
            Token::Open(p) => stack.push((Vec::new(), p)),
            Token::Close(p) => {
                let Some((items, open)) = stack.pop() else {
                    return Err(PddlError::Syntax {
                        pos: p,
                        expected: "`(`".into(),
                        found: "`)`".into(),
                    });
                };
                let list = SExpr::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top = Some(list),
                }
            }
            Token::Sym(s, p) => match stack.last_mut() {
                Some((parent, _)) => parent.push(SExpr::Sym(s, p)),
                None => {
                    return Err(PddlError::Syntax {
                        pos: p,
                        expected: "`(`".into(),
                        found: format!("`{s}`"),
                    })
                }
            },
        }
    }
    if !stack.is_empty() {
        return Err(PddlError::Syntax {
            pos: eof,
            expected: "`)`".into(),
            found: "end of input".into(),
        });
    }
    top.ok_or(PddlError::Syntax {
        pos: eof,
        expected: "`(`".into(),
        found: "end of input".into(),
    })
}
