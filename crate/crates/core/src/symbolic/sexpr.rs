//! Minimal s-expression reader with source positions.

use super::SymbolicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// True if this is an atom equal to `kw`, ignoring ASCII case.
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.as_atom().is_some_and(|a| a.eq_ignore_ascii_case(kw))
    }
}

enum Token {
    Open(Pos),
    Close(Pos),
    Atom(String, Pos),
}

fn tokenize(text: &str) -> Result<Vec<Token>, SymbolicError> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut column = 0;
    let mut chars = text.chars().peekable();
    let mut current: Option<(String, Pos)> = None;
    let flush = |current: &mut Option<(String, Pos)>, tokens: &mut Vec<Token>| {
        if let Some((s, p)) = current.take() {
            tokens.push(Token::Atom(s, p));
        }
    };
    while let Some(c) = chars.next() {
        column += 1;
        let pos = Pos { line, column };
        match c {
            '\n' => {
                flush(&mut current, &mut tokens);
                line += 1;
                column = 0;
            }
            ';' => {
                flush(&mut current, &mut tokens);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
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
            c if c.is_ascii_graphic() => match &mut current {
                Some((s, _)) => s.push(c),
                None => current = Some((c.to_string(), pos)),
            },
            other => {
                return Err(SymbolicError::Lex { pos, message: format!("unexpected character {other:?}") });
            }
        }
    }
    flush(&mut current, &mut tokens);
    Ok(tokens)
}

/// Reads exactly one top-level expression.
pub fn parse(text: &str) -> Result<Sexpr, SymbolicError> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<(Vec<Sexpr>, Pos)> = Vec::new();
    let mut result = None;
    for tok in tokens {
        let finished = match tok {
            Token::Open(p) => {
                if result.is_some() {
                    return Err(SymbolicError::Parse { pos: p, message: "trailing input after expression".into() });
                }
                stack.push((Vec::new(), p));
                None
            }
            Token::Close(p) => {
                let (items, start) = stack
                    .pop()
                    .ok_or(SymbolicError::Parse { pos: p, message: "unbalanced ')'".into() })?;
                Some(Sexpr::List(items, start))
            }
            Token::Atom(s, p) => {
                if stack.is_empty() {
                    return Err(SymbolicError::Parse { pos: p, message: format!("atom {s:?} outside any list") });
                }
                Some(Sexpr::Atom(s, p))
            }
        };
        if let Some(e) = finished {
            match stack.last_mut() {
                Some((items, _)) => items.push(e),
                None => result = Some(e),
            }
        }
    }
    if let Some((_, p)) = stack.last() {
        return Err(SymbolicError::Parse { pos: *p, message: "unclosed '('".into() });
    }
    result.ok_or(SymbolicError::Parse { pos: Pos { line: 1, column: 1 }, message: "empty input".into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_with_comments() {
        let e = parse("; header\n(define (domain x) ; trailing\n  (:requirements :strips))").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_keyword("DEFINE"));
        assert_eq!(items[2].pos(), Pos { line: 3, column: 3 });
    }

    #[test]
    fn unbalanced_reports_position() {
        match parse("(a (b c)") {
            Err(SymbolicError::Parse { pos, .. }) => assert_eq!(pos, Pos { line: 1, column: 1 }),
            other => panic!("unexpected {other:?}"),
        }
        match parse("(a))") {
            Err(SymbolicError::Parse { pos, .. }) => assert_eq!(pos, Pos { line: 1, column: 4 }),
            other => panic!("unexpected {other:?}"),
        }
    }
}
