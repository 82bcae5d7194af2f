use super::{BinaryOp, Expr, Symbols, UnaryOp};
use crate::error::{ParseError, ParseErrorKind};

/// Parse `source` against the given symbol table.
pub fn parse_with(source: &str, symbols: &Symbols) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
        symbols,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error(ParseErrorKind::Syntax, "unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    symbols: &'a Symbols,
}

impl Parser<'_> {
    fn error(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        self.error_at(kind, self.pos, message)
    }

    fn error_at(
        &self,
        kind: ParseErrorKind,
        offset: usize,
        message: impl Into<String>,
    ) -> ParseError {
        ParseError {
            kind,
            offset,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinaryOp::Add,
                Some(b'-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinaryOp::Mul,
                Some(b'/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::unary(UnaryOp::Neg, self.unary()?));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while self.eat(b'^') {
            let exponent = self.exponent()?;
            base = Expr::binary(BinaryOp::Pow, base, exponent);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::unary(UnaryOp::Neg, self.exponent()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error(ParseErrorKind::Syntax, "expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error(ParseErrorKind::Syntax, "expected an operand")),
            None => Err(self.error(ParseErrorKind::Syntax, "unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(self.error_at(ParseErrorKind::Syntax, start, "malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(self.error_at(ParseErrorKind::Syntax, mark, "malformed exponent"));
            }
        }
        if matches!(self.src.get(self.pos), Some(c) if c.is_ascii_alphabetic() || *c == b'_') {
            return Err(self.error(
                ParseErrorKind::Syntax,
                "implicit multiplication is not supported",
            ));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| self.error_at(ParseErrorKind::Syntax, start, "malformed number"))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");

        if self.peek() == Some(b'(') {
            if let Some(op) = UnaryOp::function(name) {
                self.pos += 1;
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error(ParseErrorKind::Syntax, "expected `)`"));
                }
                return Ok(Expr::unary(op, arg));
            }
        }
        if self.symbols.params.contains(name) {
            return Ok(Expr::Param(name.to_string()));
        }
        if let Some(&i) = self.symbols.aliases.get(name) {
            return self.coordinate(i, start);
        }
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let i: usize = rest.parse().map_err(|_| {
                    self.error_at(
                        ParseErrorKind::CoordinateOutOfRange,
                        start,
                        "coordinate index overflow",
                    )
                })?;
                return self.coordinate(i, start);
            }
        }
        Err(self.error_at(
            ParseErrorKind::UnknownIdentifier,
            start,
            format!("unknown identifier `{name}`"),
        ))
    }

    fn coordinate(&self, i: usize, start: usize) -> Result<Expr, ParseError> {
        if i >= self.symbols.dim {
            return Err(self.error_at(
                ParseErrorKind::CoordinateOutOfRange,
                start,
                format!(
                    "coordinate {i} out of range for dimension {}",
                    self.symbols.dim
                ),
            ));
        }
        Ok(Expr::Coord(i))
    }
}
