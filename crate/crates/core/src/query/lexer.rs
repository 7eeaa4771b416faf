use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Dot,
    Comma,
    Star,
    Minus,
    Arrow,
    LeftArrow,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Number(f64),
    Str(String),
    Ident { name: String, quoted: bool },
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Colon => "':'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Comma => "','".into(),
            Tok::Star => "'*'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::LeftArrow => "'<-'".into(),
            Tok::Eq => "'='".into(),
            Tok::Lt => "'<'".into(),
            Tok::Gt => "'>'".into(),
            Tok::Le => "'<='".into(),
            Tok::Ge => "'>='".into(),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Ident { name, .. } => format!("identifier `{name}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, column, message: String| QueryError::Syntax {
        line,
        column,
        message,
        expected: Vec::new(),
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start_col = col;
        let next = chars.get(i + 1).copied();
        let (tok, width) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ':' => (Tok::Colon, 1),
            '.' => (Tok::Dot, 1),
            ',' => (Tok::Comma, 1),
            '*' => (Tok::Star, 1),
            '=' => (Tok::Eq, 1),
            '-' if next == Some('>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '<' if next == Some('=') => (Tok::Le, 2),
            '<' if next == Some('-') => (Tok::LeftArrow, 2),
            '<' => (Tok::Lt, 1),
            '>' if next == Some('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            '"' | '\'' => {
                let mut j = i + 1;
                let mut s = String::new();
                loop {
                    match chars.get(j) {
                        None => {
                            return Err(err(line, start_col, "unterminated string literal".into()))
                        }
                        Some(&q) if q == c => break,
                        Some('\\') => {
                            let escaped = match chars.get(j + 1) {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some(&e @ ('\\' | '"' | '\'')) => e,
                                _ => {
                                    return Err(err(
                                        line,
                                        col + (j - i),
                                        "invalid escape sequence".into(),
                                    ))
                                }
                            };
                            s.push(escaped);
                            j += 2;
                        }
                        Some('\n') => {
                            return Err(err(line, start_col, "newline in string literal".into()))
                        }
                        Some(&other) => {
                            s.push(other);
                            j += 1;
                        }
                    }
                }
                (Tok::Str(s), j + 1 - i)
            }
            '`' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j] != '`' && chars[j] != '\n' {
                    j += 1;
                }
                if chars.get(j) != Some(&'`') {
                    return Err(err(line, start_col, "unterminated quoted identifier".into()));
                }
                let name: String = chars[i + 1..j].iter().collect();
                if name.is_empty() {
                    return Err(err(line, start_col, "empty quoted identifier".into()));
                }
                (Tok::Ident { name, quoted: true }, j + 1 - i)
            }
            d if d.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(char::is_ascii_digit) {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let n: f64 = text
                    .parse()
                    .map_err(|_| err(line, start_col, format!("invalid number `{text}`")))?;
                (Tok::Number(n), j - i)
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let name: String = chars[i..j].iter().collect();
                (Tok::Ident { name, quoted: false }, j - i)
            }
            other => {
                return Err(err(line, start_col, format!("unexpected character `{other}`")));
            }
        };
        out.push(Spanned {
            tok,
            line,
            column: start_col,
        });
        i += width;
        col += width;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}
