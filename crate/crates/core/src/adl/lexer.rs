use super::AdlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Ident(String),
    Keyword(Keyword),
    Int(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Star,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Keyword {
    Api,
    Record,
    Exception,
    Enum,
    Service,
    Abstract,
    Optional,
    Optin,
    Mandatory,
    Extends,
    Replaces,
    Nothing,
    As,
    Throws,
    Int32,
    Numeric,
    String,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        Some(match word {
            "api" => Keyword::Api,
            "record" => Keyword::Record,
            "exception" => Keyword::Exception,
            "enum" => Keyword::Enum,
            "service" => Keyword::Service,
            "abstract" => Keyword::Abstract,
            "optional" => Keyword::Optional,
            "optin" => Keyword::Optin,
            "mandatory" => Keyword::Mandatory,
            "extends" => Keyword::Extends,
            "replaces" => Keyword::Replaces,
            "nothing" => Keyword::Nothing,
            "as" => Keyword::As,
            "throws" => Keyword::Throws,
            // `integer` is accepted as a spelling of the 32-bit integer type.
            "int32" | "integer" => Keyword::Int32,
            "numeric" => Keyword::Numeric,
            "string" => Keyword::String,
            _ => return None,
        })
    }

    pub(crate) fn as_str(self) -> &'static str {
        match self {
            Keyword::Api => "api",
            Keyword::Record => "record",
            Keyword::Exception => "exception",
            Keyword::Enum => "enum",
            Keyword::Service => "service",
            Keyword::Abstract => "abstract",
            Keyword::Optional => "optional",
            Keyword::Optin => "optin",
            Keyword::Mandatory => "mandatory",
            Keyword::Extends => "extends",
            Keyword::Replaces => "replaces",
            Keyword::Nothing => "nothing",
            Keyword::As => "as",
            Keyword::Throws => "throws",
            Keyword::Int32 => "int32",
            Keyword::Numeric => "numeric",
            Keyword::String => "string",
        }
    }
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Keyword(k) => format!("`{}`", k.as_str()),
            TokenKind::Int(digits) => format!("integer `{digits}`"),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, AdlError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let (start_line, start_column) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };

        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '/' {
            bump(&mut chars);
            if chars.peek() == Some(&'/') {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
            return Err(AdlError::Syntax {
                line: start_line,
                column: start_column,
                expected: vec!["`//`".into()],
                found: "`/`".into(),
            });
        }

        let kind = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            match Keyword::from_word(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            TokenKind::Int(digits)
        } else {
            let kind = match c {
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '[' => TokenKind::LBracket,
                ']' => TokenKind::RBracket,
                ',' => TokenKind::Comma,
                '.' => TokenKind::Dot,
                '*' => TokenKind::Star,
                other => {
                    return Err(AdlError::Syntax {
                        line: start_line,
                        column: start_column,
                        expected: vec!["token".into()],
                        found: format!("character {other:?}"),
                    })
                }
            };
            bump(&mut chars);
            kind
        };
        tokens.push(Token { kind, line: start_line, column: start_column });
    }
    tokens.push(Token { kind: TokenKind::Eof, line, column });
    Ok(tokens)
}
