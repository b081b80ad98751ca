use super::{ErrorKind, ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Identifiers, keywords and numbers: runs of `[A-Za-z0-9_.-]`.
    Word(String),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(_) => "a string".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

/// Splits `src` into tokens. Lexical errors are appended to `errors` and the
/// offending character is skipped, so the token stream always ends in `Eof`.
pub(crate) fn tokenize(file: &str, src: &str, errors: &mut Vec<ParseError>) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let span = |line, column| SourceSpan {
        file: file.to_string(),
        line,
        column,
    };

    while let Some(&c) = chars.peek() {
        let start = span(line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '{' | '}' | '[' | ']' | ',' => {
                chars.next();
                col += 1;
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    _ => Tok::Comma,
                };
                tokens.push(Token { tok, span: start });
            }
            '"' => {
                chars.next();
                col += 1;
                let mut text = String::new();
                let mut closed = false;
                while let Some(c) = chars.next() {
                    match c {
                        '"' => {
                            col += 1;
                            closed = true;
                            break;
                        }
                        '\\' => {
                            let esc_span = span(line, col);
                            col += 1;
                            match chars.peek().copied() {
                                Some(e @ ('"' | '\\' | 'n' | 't' | 'r')) => {
                                    chars.next();
                                    col += 1;
                                    text.push(match e {
                                        'n' => '\n',
                                        't' => '\t',
                                        'r' => '\r',
                                        other => other,
                                    });
                                }
                                other => errors.push(ParseError::new(
                                    esc_span,
                                    ErrorKind::Lex,
                                    match other {
                                        Some(o) => format!("unknown escape `\\{}` in string", o.escape_debug()),
                                        None => "unterminated escape in string".to_string(),
                                    },
                                )),
                            }
                        }
                        '\n' => {
                            // Strings may not span lines; report and resync.
                            line += 1;
                            col = 1;
                            break;
                        }
                        other => {
                            col += 1;
                            text.push(other);
                        }
                    }
                }
                if closed {
                    tokens.push(Token {
                        tok: Tok::Str(text),
                        span: start,
                    });
                } else {
                    errors.push(ParseError::new(
                        start,
                        ErrorKind::Lex,
                        "unterminated string literal",
                    ));
                }
            }
            c if is_word_char(c) => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                tokens.push(Token {
                    tok: Tok::Word(word),
                    span: start,
                });
            }
            other => {
                chars.next();
                col += 1;
                errors.push(ParseError::new(
                    start,
                    ErrorKind::Lex,
                    format!("unexpected character `{}`", other.escape_debug()),
                ));
            }
        }
    }

    tokens.push(Token {
        tok: Tok::Eof,
        span: span(line, col),
    });
    tokens
}
