//! Recursive descent parser for `.api` source text.

use super::ast::*;
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::AdlError;

/// Parses source text into a syntax tree without running the well-formedness
/// checks. Bounds below 1 are still rejected here since they are a property
/// of a single literal.
pub fn parse_syntax(text: &str) -> Result<ApiDefinition, AdlError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let def = parser.api_definition()?;
    parser.expect_eof()?;
    Ok(def)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, offset: usize) -> &TokenKind {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> AdlError {
        let tok = &self.tokens[self.pos];
        AdlError::Syntax {
            line: tok.line,
            column: tok.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.kind.describe(),
        }
    }

    fn at_keyword(&self, k: Keyword) -> bool {
        *self.peek() == TokenKind::Keyword(k)
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.at_keyword(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, k: Keyword) -> Result<(), AdlError> {
        if self.eat_keyword(k) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{}`", k.as_str())]))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), AdlError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.error(&[&kind.describe()]))
        }
    }

    fn expect_eof(&mut self) -> Result<(), AdlError> {
        if *self.peek() == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn ident(&mut self) -> Result<String, AdlError> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                Ok(name)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn api_definition(&mut self) -> Result<ApiDefinition, AdlError> {
        self.expect_keyword(Keyword::Api)?;
        let mut name = self.ident()?;
        while self.eat(&TokenKind::Dot) {
            name.push('.');
            name.push_str(&self.ident()?);
        }
        self.expect(TokenKind::LBrace)?;
        let mut elements = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            elements.push(self.element()?);
        }
        Ok(ApiDefinition { name, elements })
    }

    fn element(&mut self) -> Result<Element, AdlError> {
        match self.peek() {
            TokenKind::Keyword(Keyword::Enum) => Ok(Element::Enum(self.enum_type()?)),
            TokenKind::Keyword(Keyword::Service) => Ok(Element::Service(self.service()?)),
            TokenKind::Keyword(
                Keyword::Record
                | Keyword::Exception
                | Keyword::Abstract
                | Keyword::Optional
                | Keyword::Optin
                | Keyword::Mandatory,
            ) => Ok(Element::Record(self.record_type()?)),
            _ => Err(self.error(&[
                "`record`",
                "`exception`",
                "`abstract`",
                "optionality modifier",
                "`enum`",
                "`service`",
                "`}`",
            ])),
        }
    }

    fn optionality(&mut self) -> Option<Optionality> {
        let opt = match self.peek() {
            TokenKind::Keyword(Keyword::Mandatory) => Optionality::Mandatory,
            TokenKind::Keyword(Keyword::Optin) => Optionality::Optin,
            TokenKind::Keyword(Keyword::Optional) => Optionality::Optional,
            _ => return None,
        };
        self.advance();
        Some(opt)
    }

    fn record_type(&mut self) -> Result<RecordType, AdlError> {
        let mut is_abstract = false;
        let mut default_optionality = None;
        loop {
            if self.at_keyword(Keyword::Abstract) && !is_abstract {
                self.advance();
                is_abstract = true;
                continue;
            }
            if default_optionality.is_none() {
                if let Some(opt) = self.optionality() {
                    default_optionality = Some(opt);
                    continue;
                }
            }
            break;
        }
        let is_exception = if self.eat_keyword(Keyword::Exception) {
            true
        } else if self.eat_keyword(Keyword::Record) {
            false
        } else {
            return Err(self.error(&["`record`", "`exception`"]));
        };
        let name = self.ident()?;
        let super_type = if self.eat_keyword(Keyword::Extends) { Some(self.ident()?) } else { None };
        let replaces = self.replaces_clause()?;
        let alias = self.as_clause()?;
        self.expect(TokenKind::LBrace)?;
        let mut fields = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            fields.push(self.field()?);
        }
        Ok(RecordType {
            name,
            alias,
            is_abstract,
            is_exception,
            super_type,
            default_optionality,
            fields,
            replaces,
        })
    }

    fn replaces_clause(&mut self) -> Result<Option<Replaces>, AdlError> {
        if !self.eat_keyword(Keyword::Replaces) {
            return Ok(None);
        }
        if self.eat_keyword(Keyword::Nothing) {
            return Ok(Some(Replaces::Nothing));
        }
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                Ok(Some(Replaces::Name(name)))
            }
            _ => Err(self.error(&["identifier", "`nothing`"])),
        }
    }

    fn as_clause(&mut self) -> Result<Option<String>, AdlError> {
        if self.eat_keyword(Keyword::As) {
            Ok(Some(self.ident()?))
        } else {
            Ok(None)
        }
    }

    fn field(&mut self) -> Result<Field, AdlError> {
        let optionality = self.optionality();
        let ty = self.type_ref()?;
        let name = self.ident()?;
        let replaces = if self.eat_keyword(Keyword::Replaces) {
            if self.eat_keyword(Keyword::Nothing) {
                Some(FieldReplaces::Nothing)
            } else {
                let mut names = vec![self.qualified_field_name()?];
                while self.eat(&TokenKind::Comma) {
                    names.push(self.qualified_field_name()?);
                }
                Some(FieldReplaces::Names(names))
            }
        } else {
            None
        };
        let alias = self.as_clause()?;
        Ok(Field { name, alias, ty, optionality, replaces })
    }

    fn qualified_field_name(&mut self) -> Result<FieldPath, AdlError> {
        let first = match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                name
            }
            _ => return Err(self.error(&["identifier", "`nothing`"])),
        };
        if self.eat(&TokenKind::Dot) {
            let field = self.ident()?;
            Ok(FieldPath { owner: Some(first), field })
        } else {
            Ok(FieldPath { owner: None, field: first })
        }
    }

    fn bound(&mut self) -> Result<u32, AdlError> {
        let tok = &self.tokens[self.pos];
        let (line, column) = (tok.line, tok.column);
        match self.peek().clone() {
            TokenKind::Int(digits) => {
                self.advance();
                let value: u64 = digits.parse().unwrap_or(u64::MAX);
                match u32::try_from(value) {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(AdlError::InvalidBound { line, column, value: digits }),
                }
            }
            _ => Err(self.error(&["integer literal"])),
        }
    }

    fn paren_bound(&mut self) -> Result<Option<u32>, AdlError> {
        if self.eat(&TokenKind::LParen) {
            let n = self.bound()?;
            self.expect(TokenKind::RParen)?;
            Ok(Some(n))
        } else {
            Ok(None)
        }
    }

    fn type_ref(&mut self) -> Result<TypeRef, AdlError> {
        let mut ty = match self.peek().clone() {
            TokenKind::Keyword(Keyword::Int32) => {
                self.advance();
                TypeRef::Int32
            }
            TokenKind::Keyword(Keyword::Numeric) => {
                self.advance();
                TypeRef::Numeric(self.paren_bound()?)
            }
            TokenKind::Keyword(Keyword::String) => {
                self.advance();
                TypeRef::String(self.paren_bound()?)
            }
            TokenKind::Ident(name) => {
                self.advance();
                TypeRef::Named(name)
            }
            _ => {
                return Err(self.error(&[
                    "`int32`",
                    "`numeric`",
                    "`string`",
                    "type name",
                    "optionality modifier",
                    "`}`",
                ]))
            }
        };
        loop {
            if self.eat(&TokenKind::Star) {
                ty = TypeRef::List(Box::new(ty), None);
            } else if *self.peek() == TokenKind::LBracket {
                self.advance();
                let n = self.bound()?;
                self.expect(TokenKind::RBracket)?;
                ty = TypeRef::List(Box::new(ty), Some(n));
            } else {
                return Ok(ty);
            }
        }
    }

    fn enum_type(&mut self) -> Result<EnumType, AdlError> {
        self.expect_keyword(Keyword::Enum)?;
        let name = self.ident()?;
        let replaces = self.replaces_clause()?;
        let alias = self.as_clause()?;
        self.expect(TokenKind::LBrace)?;
        let mut members = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            let name = match self.peek().clone() {
                TokenKind::Ident(name) => {
                    self.advance();
                    name
                }
                _ => return Err(self.error(&["enum member", "`}`"])),
            };
            let replaces = self.replaces_clause()?;
            members.push(EnumMember { name, replaces });
        }
        Ok(EnumType { name, alias, members, replaces })
    }

    fn service(&mut self) -> Result<Service, AdlError> {
        self.expect_keyword(Keyword::Service)?;
        let name = self.ident()?;
        let replaces = self.replaces_clause()?;
        let alias = self.as_clause()?;
        self.expect(TokenKind::LBrace)?;
        let mut operations = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            operations.push(self.operation()?);
        }
        Ok(Service { name, alias, operations, replaces })
    }

    fn operation(&mut self) -> Result<ServiceOperation, AdlError> {
        let output = match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                name
            }
            _ => return Err(self.error(&["record type name", "`}`"])),
        };
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let input = self.ident()?;
        self.expect(TokenKind::RParen)?;
        let replaces = self.replaces_clause()?;
        let alias = self.as_clause()?;
        let mut throws = Vec::new();
        if self.eat_keyword(Keyword::Throws) {
            throws.push(self.ident()?);
            while self.eat(&TokenKind::Comma) {
                throws.push(self.ident()?);
            }
        }
        // A lone identifier after `)` that is neither a clause nor the start
        // of the next operation (`Type name (`) is a typo worth reporting.
        if let TokenKind::Ident(_) = self.peek() {
            if !matches!(self.peek_at(1), TokenKind::Ident(_)) {
                return Err(self.error(&["`replaces`", "`as`", "`throws`", "operation", "`}`"]));
            }
        }
        Ok(ServiceOperation { name, alias, input, output, throws, replaces })
    }
}
