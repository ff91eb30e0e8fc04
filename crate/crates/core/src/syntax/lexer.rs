use super::parser::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(String),
    Decimal(String),
    Semi,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Tilde,
    Amp,
    Bar,
    Slash,
    Dot,
    Colon,
    Underscore,
    /// `+{`
    PlusBrace,
    /// `+[`
    PlusBracket,
    /// `*{`
    StarBrace,
    /// `*[`
    StarBracket,
    /// `==`
    EqEq,
    /// `:=`
    Assign,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) | Tok::Decimal(s) => format!("number `{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Tilde => "~",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Slash => "/",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Underscore => "_",
            Tok::PlusBrace => "+{",
            Tok::PlusBracket => "+[",
            Tok::StarBrace => "*{",
            Tok::StarBracket => "*[",
            Tok::EqEq => "==",
            Tok::Assign => ":=",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut push = |tok: Tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Token { tok, line: start_line, col: start_col });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                push(Tok::Ident(s), j - i, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let decimal = j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit();
                if decimal {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let tok = if decimal { Tok::Decimal(s) } else { Tok::Int(s) };
                push(tok, j - i, &mut i, &mut col);
            }
            _ => {
                let next = chars.get(i + 1).copied();
                let (tok, len) = match (c, next) {
                    ('+', Some('{')) => (Tok::PlusBrace, 2),
                    ('+', Some('[')) => (Tok::PlusBracket, 2),
                    ('*', Some('{')) => (Tok::StarBrace, 2),
                    ('*', Some('[')) => (Tok::StarBracket, 2),
                    ('=', Some('=')) => (Tok::EqEq, 2),
                    (':', Some('=')) => (Tok::Assign, 2),
                    (';', _) => (Tok::Semi, 1),
                    (',', _) => (Tok::Comma, 1),
                    ('(', _) => (Tok::LParen, 1),
                    (')', _) => (Tok::RParen, 1),
                    ('[', _) => (Tok::LBracket, 1),
                    (']', _) => (Tok::RBracket, 1),
                    ('{', _) => (Tok::LBrace, 1),
                    ('}', _) => (Tok::RBrace, 1),
                    ('~', _) => (Tok::Tilde, 1),
                    ('&', _) => (Tok::Amp, 1),
                    ('|', _) => (Tok::Bar, 1),
                    ('/', _) => (Tok::Slash, 1),
                    ('.', _) => (Tok::Dot, 1),
                    (':', _) => (Tok::Colon, 1),
                    ('_', _) => (Tok::Underscore, 1),
                    _ => {
                        return Err(ParseError {
                            line,
                            col,
                            kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                        })
                    }
                };
                push(tok, len, &mut i, &mut col);
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn distinguishes_compound_operators() {
        assert_eq!(
            toks("p +{1/2} q *[t] # note\n== :="),
            vec![
                Tok::Ident("p".into()),
                Tok::PlusBrace,
                Tok::Int("1".into()),
                Tok::Slash,
                Tok::Int("2".into()),
                Tok::RBrace,
                Tok::Ident("q".into()),
                Tok::StarBracket,
                Tok::Ident("t".into()),
                Tok::RBracket,
                Tok::EqEq,
                Tok::Assign,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn decimals_need_a_digit_after_the_dot() {
        assert_eq!(toks("0.25"), vec![Tok::Decimal("0.25".into()), Tok::Eof]);
        assert_eq!(toks("1.x"), vec![Tok::Int("1".into()), Tok::Dot, Tok::Ident("x".into()), Tok::Eof]);
    }

    #[test]
    fn reports_position_of_bad_character() {
        let err = tokenize("p ;\n  $").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
    }
}
