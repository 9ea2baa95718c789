//! Tokenizer and s-expression reader shared by the plan and relation
//! grammars.

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Int(i64),
    Str(String),
    Symbol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn start() -> Pos {
        Pos { line: 1, col: 1 }
    }
}

pub fn tokenize(text: &str) -> Result<Vec<(Token, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos::start();

    macro_rules! bump {
        ($c:expr) => {{
            if $c == '\n' {
                pos.line += 1;
                pos.col = 1;
            } else {
                pos.col += 1;
            }
        }};
    }

    while let Some(&c) = chars.peek() {
        let start = pos;
        match c {
            c if c.is_whitespace() => {
                chars.next();
                bump!(c);
            }
            ';' => {
                // comment to end of line
                for c in chars.by_ref() {
                    bump!(c);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => {
                chars.next();
                bump!(c);
                out.push((Token::LParen, start));
            }
            ')' => {
                chars.next();
                bump!(c);
                out.push((Token::RParen, start));
            }
            '{' => {
                chars.next();
                bump!(c);
                out.push((Token::LBrace, start));
            }
            '}' => {
                chars.next();
                bump!(c);
                out.push((Token::RBrace, start));
            }
            '"' => {
                chars.next();
                bump!(c);
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => {
                            return Err(ParseError::new(start, "unterminated string literal"))
                        }
                        Some('"') => {
                            bump!('"');
                            break;
                        }
                        Some('\\') => {
                            bump!('\\');
                            match chars.next() {
                                Some('n') => {
                                    bump!('n');
                                    s.push('\n');
                                }
                                Some(e @ ('"' | '\\')) => {
                                    bump!(e);
                                    s.push(e);
                                }
                                Some(e) => {
                                    return Err(ParseError::new(
                                        pos,
                                        format!("unknown escape '\\{e}'"),
                                    ))
                                }
                                None => {
                                    return Err(ParseError::new(
                                        start,
                                        "unterminated string literal",
                                    ))
                                }
                            }
                        }
                        Some(c) => {
                            bump!(c);
                            s.push(c);
                        }
                    }
                }
                out.push((Token::Str(s), start));
            }
            c if is_symbol_char(c) => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if is_symbol_char(d) || d == '#' {
                        s.push(d);
                        chars.next();
                        bump!(d);
                    } else {
                        break;
                    }
                }
                // integer literals are just symbols shaped like numbers
                let digits = s.strip_prefix('-').unwrap_or(&s);
                if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                    let n: i64 = s.parse().map_err(|_| {
                        ParseError::new(start, format!("bad integer literal '{s}'"))
                    })?;
                    out.push((Token::Int(n), start));
                } else {
                    out.push((Token::Symbol(s), start));
                }
            }
            other => {
                return Err(ParseError::new(start, format!("unexpected character '{other}'")))
            }
        }
    }
    Ok(out)
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '-' | '*' | '=' | '<' | '>' | '!')
}

/// A generic s-expression with source positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Int(i64, Pos),
    Str(String, Pos),
    Symbol(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Int(_, p) | Sexp::Str(_, p) | Sexp::Symbol(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            _ => None,
        }
    }
}

/// Reads all top-level s-expressions; braces are not allowed here (they only
/// occur in the relation format, which parses at token level).
pub fn read_all(tokens: &[(Token, Pos)]) -> Result<Vec<Sexp>, ParseError> {
    let mut idx = 0;
    let mut out = Vec::new();
    while idx < tokens.len() {
        let (sexp, next) = read_one(tokens, idx)?;
        out.push(sexp);
        idx = next;
    }
    Ok(out)
}

pub fn read_one(tokens: &[(Token, Pos)], idx: usize) -> Result<(Sexp, usize), ParseError> {
    match tokens.get(idx) {
        None => {
            let pos = tokens.last().map(|(_, p)| *p).unwrap_or(Pos::start());
            Err(ParseError::new(pos, "unexpected end of input"))
        }
        Some((Token::Int(n), p)) => Ok((Sexp::Int(*n, *p), idx + 1)),
        Some((Token::Str(s), p)) => Ok((Sexp::Str(s.clone(), *p), idx + 1)),
        Some((Token::Symbol(s), p)) => Ok((Sexp::Symbol(s.clone(), *p), idx + 1)),
        Some((Token::LParen, p)) => {
            let mut items = Vec::new();
            let mut cur = idx + 1;
            loop {
                match tokens.get(cur) {
                    None => return Err(ParseError::new(*p, "unclosed '('")),
                    Some((Token::RParen, _)) => return Ok((Sexp::List(items, *p), cur + 1)),
                    _ => {
                        let (item, next) = read_one(tokens, cur)?;
                        items.push(item);
                        cur = next;
                    }
                }
            }
        }
        Some((tok, p)) => Err(ParseError::new(*p, format!("unexpected token {tok:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_symbols_ints_strings() {
        let toks = tokenize("(select (= y#3 x) \"a\\\"b\" -5)").unwrap();
        assert_eq!(toks[0].0, Token::LParen);
        assert!(matches!(&toks[1].0, Token::Symbol(s) if s == "select"));
        assert!(matches!(&toks[3].0, Token::Symbol(s) if s == "="));
        assert!(matches!(&toks[4].0, Token::Symbol(s) if s == "y#3"));
        assert!(matches!(&toks[7].0, Token::Str(s) if s == "a\"b"));
        assert!(matches!(&toks[8].0, Token::Int(-5)));
    }

    #[test]
    fn reports_line_and_column() {
        let err = tokenize("(scan R)\n  @oops").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
    }

    #[test]
    fn unclosed_paren_is_an_error() {
        let toks = tokenize("(select (=").unwrap();
        assert!(read_all(&toks).is_err());
    }

    #[test]
    fn comments_are_skipped() {
        let toks = tokenize("; header\n(scan R) ; trailing\n").unwrap();
        let sexps = read_all(&toks).unwrap();
        assert_eq!(sexps.len(), 1);
    }
}
