use crate::diagnostics::{Position, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    Word(String),
    Str(String),
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Newline,
    Error(String),
    Eof,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Str(_) => "a string".to_owned(),
            Tok::LBracket => "'['".to_owned(),
            Tok::RBracket => "']'".to_owned(),
            Tok::LBrace => "'{'".to_owned(),
            Tok::RBrace => "'}'".to_owned(),
            Tok::Colon => "':'".to_owned(),
            Tok::Comma => "','".to_owned(),
            Tok::Newline => "end of line".to_owned(),
            Tok::Error(_) => "an invalid token".to_owned(),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub span: Span,
    /// First token on its line.
    pub line_start: bool,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn pos(&self) -> Position {
        Position::new(self.line, self.column)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        let mut it = self.chars.clone();
        s.chars().all(|c| it.next() == Some(c))
    }
}

pub(super) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '/' | '.')
}

pub(super) fn tokenize(source: &str) -> Vec<Token> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    let mut line_start = true;

    loop {
        // Horizontal whitespace and comments.
        while let Some(c) = cur.peek() {
            if c == ' ' || c == '\t' || c == '\r' {
                cur.bump();
            } else if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let start = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span: Span::new(start, start),
                line_start,
            });
            return out;
        };

        let tok = match c {
            '\n' => {
                cur.bump();
                Tok::Newline
            }
            '[' => {
                cur.bump();
                Tok::LBracket
            }
            ']' => {
                cur.bump();
                Tok::RBracket
            }
            '{' => {
                cur.bump();
                Tok::LBrace
            }
            '}' => {
                cur.bump();
                Tok::RBrace
            }
            ':' => {
                cur.bump();
                Tok::Colon
            }
            ',' => {
                cur.bump();
                Tok::Comma
            }
            '"' if cur.starts_with("\"\"\"") => lex_block_string(&mut cur),
            '"' => lex_string(&mut cur),
            c if is_word_char(c) => {
                let mut w = String::new();
                while let Some(c) = cur.peek().filter(|&c| is_word_char(c)) {
                    w.push(c);
                    cur.bump();
                }
                Tok::Word(w)
            }
            other => {
                cur.bump();
                Tok::Error(format!("unexpected character {other:?}"))
            }
        };
        let is_newline = tok == Tok::Newline;
        out.push(Token {
            tok,
            span: Span::new(start, cur.pos()),
            line_start,
        });
        line_start = is_newline;
    }
}

fn lex_string(cur: &mut Cursor<'_>) -> Tok {
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.peek() {
            None | Some('\n') => return Tok::Error("unterminated string".to_owned()),
            Some('"') => {
                cur.bump();
                return Tok::Str(s);
            }
            Some('\\') => {
                cur.bump();
                let esc = match cur.peek() {
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('r') => '\r',
                    Some('"') => '"',
                    Some('\\') => '\\',
                    Some(other) if other != '\n' => {
                        cur.bump();
                        // Consume the rest of the string so the error does not
                        // cascade into the following tokens.
                        while cur.peek().is_some_and(|c| c != '\n') {
                            if cur.bump() == Some('"') {
                                break;
                            }
                        }
                        return Tok::Error(format!("invalid escape \\{other}"));
                    }
                    _ => return Tok::Error("unterminated string".to_owned()),
                };
                cur.bump();
                s.push(esc);
            }
            Some(c) => {
                cur.bump();
                s.push(c);
            }
        }
    }
}

fn lex_block_string(cur: &mut Cursor<'_>) -> Tok {
    for _ in 0..3 {
        cur.bump();
    }
    let mut s = String::new();
    loop {
        if cur.starts_with("\"\"\"") {
            for _ in 0..3 {
                cur.bump();
            }
            return Tok::Str(s);
        }
        match cur.bump() {
            Some('\r') if cur.peek() == Some('\n') => {}
            Some(c) => s.push(c),
            None => return Tok::Error("unterminated \"\"\" string".to_owned()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn words_strings_and_punctuation() {
        assert_eq!(
            toks("M5 essential { spec: \"a \\\"b\\\"\\n\" } # c\n"),
            vec![
                Tok::Word("M5".into()),
                Tok::Word("essential".into()),
                Tok::LBrace,
                Tok::Word("spec".into()),
                Tok::Colon,
                Tok::Str("a \"b\"\n".into()),
                Tok::RBrace,
                Tok::Newline,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn block_string_spans_lines() {
        let t = tokenize("spec: \"\"\"one\ntwo\"\"\"\nX");
        assert_eq!(t[2].tok, Tok::Str("one\ntwo".into()));
        assert_eq!(t[4].span.start, Position::new(3, 1));
        assert!(t[4].line_start);
    }

    #[test]
    fn positions_are_one_based_and_count_chars() {
        let t = tokenize("  éé O1 ≥");
        assert_eq!(t[0].tok, Tok::Word("éé".into()));
        assert_eq!(t[0].span.start, Position::new(1, 3));
        assert_eq!(t[1].span.start, Position::new(1, 6));
        assert!(matches!(t[2].tok, Tok::Error(_)));
    }

    #[test]
    fn unterminated_string_stops_at_end_of_line() {
        let t = toks("\"abc\nO1");
        assert!(matches!(t[0], Tok::Error(_)));
        assert_eq!(t[1], Tok::Newline);
        assert_eq!(t[2], Tok::Word("O1".into()));
    }
}
