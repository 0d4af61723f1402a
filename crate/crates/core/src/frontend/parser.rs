use std::collections::HashSet;

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::FrontendError;

/// Builds a syntax tree from a token sequence ending in an end-of-input marker.
pub fn parse(tokens: &[Token]) -> Result<Program, FrontendError> {
    if tokens.last().map(|t| t.kind) != Some(TokenKind::Eof) {
        return Err(FrontendError::Parse {
            loc: tokens.last().map(|t| t.loc).unwrap_or_default(),
            expected: vec!["end of input".into()],
            found: "missing end-of-input marker".into(),
        });
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        type_names: HashSet::new(),
    };
    let mut items = Vec::new();
    while !p.at_eof() {
        items.push(p.item()?);
    }
    Ok(Program { items })
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    type_names: HashSet<String>,
}

type PResult<T> = Result<T, FrontendError>;

const TYPE_KEYWORDS: &[&str] = &[
    "int", "float", "double", "vector", "complex", "localint", "void",
];

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &'t Token {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = self.peek();
        Err(FrontendError::Parse {
            loc: t.loc,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.to_string(),
        })
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: &str) -> bool {
        if self.peek().is_keyword(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<&'t Token> {
        if self.peek().is_punct(p) {
            Ok(self.bump())
        } else {
            self.error(&[&format!("`{p}`")])
        }
    }

    fn expect_ident(&mut self) -> PResult<&'t Token> {
        if self.peek().kind == TokenKind::Ident {
            Ok(self.bump())
        } else {
            self.error(&["identifier"])
        }
    }

    fn is_type_start_at(&self, ahead: usize) -> bool {
        let t = self.peek_at(ahead);
        match t.kind {
            TokenKind::Keyword => TYPE_KEYWORDS.contains(&t.text.as_str()),
            TokenKind::Ident => self.type_names.contains(&t.text),
            _ => false,
        }
    }

    fn starts_declaration(&self) -> bool {
        self.peek().is_keyword("const") || self.is_type_start_at(0)
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let t = self.peek();
        let base = match t.kind {
            TokenKind::Keyword => match BaseType::from_keyword(&t.text) {
                Some(b) => b,
                None => return self.error(&["type name"]),
            },
            TokenKind::Ident if self.type_names.contains(&t.text) => {
                BaseType::Named(t.text.clone())
            }
            _ => return self.error(&["type name"]),
        };
        self.bump();
        let mut pointers = 0;
        while self.eat_punct("*") {
            pointers += 1;
        }
        Ok(TypeName {
            base,
            pointers,
            loc: t.loc,
        })
    }

    fn item(&mut self) -> PResult<Item> {
        let t = self.peek();
        if t.is_keyword("typedef") {
            return self.typedef().map(Item::Typedef);
        }
        if t.is_keyword("struct") || t.is_keyword("class") || t.is_keyword("union") {
            return self.record().map(Item::Record);
        }
        let is_const = self.eat_keyword("const");
        let ty = self.type_name()?;
        if !is_const
            && self.peek().kind == TokenKind::Ident
            && self.peek_at(1).is_punct("(")
            && (self.peek_at(2).is_punct(")") || self.is_type_start_at(2))
        {
            let name = self.bump();
            return self
                .function_rest(ty, name.text.clone(), t.loc)
                .map(Item::Func);
        }
        self.var_decl_rest(is_const, ty, t.loc).map(Item::Var)
    }

    fn typedef(&mut self) -> PResult<Typedef> {
        let loc = self.bump().loc;
        let ty = self.type_name()?;
        let name = self.expect_ident()?.text.clone();
        let dims = self.dims()?;
        self.expect_punct(";")?;
        self.type_names.insert(name.clone());
        Ok(Typedef {
            ty,
            name,
            dims,
            loc,
        })
    }

    fn dims(&mut self) -> PResult<Vec<Expr>> {
        let mut dims = Vec::new();
        while self.eat_punct("[") {
            dims.push(self.expr()?);
            self.expect_punct("]")?;
        }
        Ok(dims)
    }

    fn record(&mut self) -> PResult<RecordDef> {
        let kw = self.bump();
        let kind = match kw.text.as_str() {
            "struct" => RecordKind::Struct,
            "class" => RecordKind::Class,
            _ => RecordKind::Union,
        };
        let name = self.expect_ident()?.text.clone();
        self.type_names.insert(name.clone());
        let base = if self.eat_punct(":") {
            self.eat_keyword("public");
            Some(self.expect_ident()?.text.clone())
        } else {
            None
        };
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return self.error(&["`}`"]);
            }
            if let Some(m) = self.member(&name)? {
                members.push(m);
            }
        }
        self.expect_punct(";")?;
        Ok(RecordDef {
            kind,
            name,
            base,
            members,
            loc: kw.loc,
        })
    }

    fn member(&mut self, record: &str) -> PResult<Option<Member>> {
        let t = self.peek();
        if self.eat_punct(";") {
            return Ok(None);
        }
        for (kw, access) in [("public", Access::Public), ("private", Access::Private)] {
            if t.is_keyword(kw) {
                self.bump();
                self.expect_punct(":")?;
                return Ok(Some(Member::Access(access, t.loc)));
            }
        }
        if t.kind == TokenKind::Ident && t.text == record && self.peek_at(1).is_punct("(") {
            self.bump();
            let params = self.params()?;
            let mut inits = Vec::new();
            if self.eat_punct(":") {
                loop {
                    let field = self.expect_ident()?;
                    self.expect_punct("(")?;
                    let args = self.call_args()?;
                    inits.push(MemberInit {
                        field: field.text.clone(),
                        args,
                        loc: field.loc,
                    });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            let body = self.block()?;
            return Ok(Some(Member::Ctor(CtorDef {
                name: record.to_string(),
                params,
                inits,
                body,
                loc: t.loc,
            })));
        }
        let is_const = self.eat_keyword("const");
        let ty = self.type_name()?;
        if !is_const && self.peek().kind == TokenKind::Ident && self.peek_at(1).is_punct("(") {
            let name = self.bump().text.clone();
            return self
                .function_rest(ty, name, t.loc)
                .map(|f| Some(Member::Method(f)));
        }
        self.var_decl_rest(is_const, ty, t.loc)
            .map(|d| Some(Member::Field(d)))
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        if self.peek().is_keyword("void") && self.peek_at(1).is_punct(")") {
            self.bump();
            self.bump();
            return Ok(params);
        }
        loop {
            let ty = self.type_name()?;
            let name = self.expect_ident()?;
            params.push(Param {
                ty,
                name: name.text.clone(),
                loc: name.loc,
            });
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn function_rest(&mut self, ret: TypeName, name: String, loc: super::Loc) -> PResult<FuncDef> {
        let params = self.params()?;
        let body = self.block()?;
        Ok(FuncDef {
            ret,
            name,
            params,
            body,
            loc,
        })
    }

    fn var_decl_rest(&mut self, is_const: bool, ty: TypeName, loc: super::Loc) -> PResult<VarDecl> {
        let mut declarators = Vec::new();
        loop {
            let name = self.expect_ident()?;
            let dims = self.dims()?;
            let init = if self.eat_punct("=") {
                Some(Init::Expr(self.assignment()?))
            } else if self.eat_punct("(") {
                Some(Init::Ctor(self.call_args()?))
            } else {
                None
            };
            declarators.push(Declarator {
                name: name.text.clone(),
                dims,
                init,
                loc: name.loc,
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(VarDecl {
            is_const,
            ty,
            declarators,
            loc,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let open = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return self.error(&["`}`"]);
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block {
            stmts,
            loc: open.loc,
        })
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_punct("(")?;
        let e = self.expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let t = self.peek();
        let loc = t.loc;
        if t.is_punct("{") {
            return self.block().map(Stmt::Block);
        }
        if t.is_punct(";") {
            self.bump();
            return Ok(Stmt::Empty(loc));
        }
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "if" => {
                    self.bump();
                    let cond = self.paren_expr()?;
                    let then = Box::new(self.stmt()?);
                    let els = if self.eat_keyword("else") {
                        Some(Box::new(self.stmt()?))
                    } else {
                        None
                    };
                    return Ok(Stmt::If {
                        cond,
                        then,
                        els,
                        loc,
                    });
                }
                "where" => {
                    self.bump();
                    let cond = self.paren_expr()?;
                    let body = Box::new(self.stmt()?);
                    let elsewhere = if self.eat_keyword("elsewhere") {
                        Some(Box::new(self.stmt()?))
                    } else {
                        None
                    };
                    return Ok(Stmt::Where {
                        cond,
                        body,
                        elsewhere,
                        loc,
                    });
                }
                "while" => {
                    self.bump();
                    let cond = self.paren_expr()?;
                    let body = Box::new(self.stmt()?);
                    return Ok(Stmt::While { cond, body, loc });
                }
                "for" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let init = if self.eat_punct(";") {
                        None
                    } else if self.starts_declaration() {
                        let is_const = self.eat_keyword("const");
                        let ty = self.type_name()?;
                        Some(Box::new(Stmt::Decl(self.var_decl_rest(is_const, ty, loc)?)))
                    } else {
                        let e = self.expr()?;
                        self.expect_punct(";")?;
                        Some(Box::new(Stmt::Expr(e)))
                    };
                    let cond = if self.peek().is_punct(";") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    self.expect_punct(";")?;
                    let step = if self.peek().is_punct(")") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    self.expect_punct(")")?;
                    let body = Box::new(self.stmt()?);
                    return Ok(Stmt::For {
                        init,
                        cond,
                        step,
                        body,
                        loc,
                    });
                }
                "return" => {
                    self.bump();
                    let value = if self.peek().is_punct(";") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    self.expect_punct(";")?;
                    return Ok(Stmt::Return(value, loc));
                }
                _ => {}
            }
        }
        if self.starts_declaration() {
            let is_const = self.eat_keyword("const");
            let ty = self.type_name()?;
            return self.var_decl_rest(is_const, ty, loc).map(Stmt::Decl);
        }
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(Stmt::Expr(e))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.binary(1)?;
        let t = self.peek();
        if t.kind == TokenKind::Punct {
            let op = match t.text.as_str() {
                "=" => Some(None),
                "+=" => Some(Some(BinOp::Add)),
                "-=" => Some(Some(BinOp::Sub)),
                "*=" => Some(Some(BinOp::Mul)),
                "/=" => Some(Some(BinOp::Div)),
                "%=" => Some(Some(BinOp::Rem)),
                "&=" => Some(Some(BinOp::BitAnd)),
                "|=" => Some(Some(BinOp::BitOr)),
                "^=" => Some(Some(BinOp::BitXor)),
                "<<=" => Some(Some(BinOp::Shl)),
                ">>=" => Some(Some(BinOp::Shr)),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let rhs = self.assignment()?;
                return Ok(Expr::new(
                    ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)),
                    t.loc,
                ));
            }
        }
        Ok(lhs)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let t = self.peek();
            let Some(op) = (t.kind == TokenKind::Punct)
                .then(|| BinOp::from_symbol(&t.text))
                .flatten()
            else {
                return Ok(lhs);
            };
            let prec = op.precedence();
            if prec < min_prec {
                return Ok(lhs);
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), t.loc);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = self.peek();
        if t.kind == TokenKind::Punct {
            let op = match t.text.as_str() {
                "-" => Some(UnOp::Neg),
                "+" => Some(UnOp::Plus),
                "!" => Some(UnOp::Not),
                "~" => Some(UnOp::BitNot),
                "*" => Some(UnOp::Deref),
                "&" => Some(UnOp::AddrOf),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let e = self.unary()?;
                return Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), t.loc));
            }
            if t.text == "++" || t.text == "--" {
                self.bump();
                let e = self.unary()?;
                return Ok(Expr::new(
                    ExprKind::IncDec {
                        increment: t.text == "++",
                        prefix: true,
                        target: Box::new(e),
                    },
                    t.loc,
                ));
            }
            if t.text == "(" && self.is_type_start_at(1) {
                self.bump();
                let ty = self.type_name()?;
                self.expect_punct(")")?;
                let e = self.unary()?;
                return Ok(Expr::new(ExprKind::Cast(ty, Box::new(e)), t.loc));
            }
        }
        self.postfix()
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.assignment()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let t = self.peek();
            if t.kind != TokenKind::Punct {
                return Ok(e);
            }
            e = match t.text.as_str() {
                "(" => {
                    self.bump();
                    let args = self.call_args()?;
                    Expr::new(ExprKind::Call(Box::new(e), args), t.loc)
                }
                "[" => {
                    self.bump();
                    let idx = self.expr()?;
                    self.expect_punct("]")?;
                    Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), t.loc)
                }
                "." | "->" => {
                    self.bump();
                    let field = self.expect_ident()?.text.clone();
                    Expr::new(
                        ExprKind::Member {
                            base: Box::new(e),
                            field,
                            arrow: t.text == "->",
                        },
                        t.loc,
                    )
                }
                "++" | "--" => {
                    self.bump();
                    Expr::new(
                        ExprKind::IncDec {
                            increment: t.text == "++",
                            prefix: false,
                            target: Box::new(e),
                        },
                        t.loc,
                    )
                }
                _ => return Ok(e),
            };
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek();
        let kind = match t.kind {
            TokenKind::IntLit => ExprKind::Int(t.text.parse().expect("lexer validated literal")),
            TokenKind::FloatLit => {
                if let Some(body) = t.text.strip_suffix(['f', 'F']) {
                    ExprKind::Single(body.parse().expect("lexer validated literal"))
                } else {
                    ExprKind::Double(t.text.parse().expect("lexer validated literal"))
                }
            }
            TokenKind::Ident => ExprKind::Ident(t.text.clone()),
            TokenKind::Punct if t.text == "(" => return self.paren_expr(),
            _ => return self.error(&["expression"]),
        };
        self.bump();
        Ok(Expr::new(kind, t.loc))
    }
}
