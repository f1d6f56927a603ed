//! Parser for the block-structured model language.
//!
//! ```text
//! enum Level { BACHELOR, MASTER }
//! entity User {
//!     UserID : Integer;
//!     LoanedBooks : Loan[*] inverse LoanedUser[1];
//! }
//! actor Member { usecase borrowBook; }
//! service Circulation { borrowBook; }
//! contract Circulation::borrowBook(uid : Integer) : Boolean {
//!     definition:
//!         user = User.allInstances()->any(u | u.UserID = uid);
//!     precondition: user.oclIsUndefined() = false
//!     postcondition: user.LoanedNumber = user.LoanedNumber@pre + 1
//! }
//! ```

use std::sync::Arc;

use super::validate::check_model;
use super::{
    ActorDecl, AssociationDecl, AttributeDecl, ContractDecl, Definition, EntityDecl, EnumDecl,
    Multiplicity, OperationRef, Param, RequirementModel, ServiceDecl, UseCaseDecl,
};
use crate::diag::Diagnostic;
use crate::lexer::{tokenize, Tok};
use crate::ocl::{Expr, ExprKind, ExprParser, Type};

type PResult<T> = Result<T, Diagnostic>;

const ITEM_KEYWORDS: &[&str] = &["enum", "entity", "actor", "service", "contract"];

/// Parses declarations without resolving names or checking types.
/// A syntax error skips to the next top-level declaration so that several
/// errors can be reported at once.
pub fn parse_syntax(source: &str, origin: &str) -> Result<RequirementModel, Vec<Diagnostic>> {
    let file: Arc<str> = Arc::from(origin);
    let toks = tokenize(source, &file).map_err(|d| vec![d])?;
    let mut p = ExprParser::new(&toks);
    let mut model = RequirementModel::default();
    let mut diags = Vec::new();
    while !p.at_eof() {
        if let Err(d) = item(&mut p, &mut model) {
            diags.push(d);
            recover(&mut p);
        }
    }
    if diags.is_empty() {
        Ok(model)
    } else {
        Err(diags)
    }
}

/// Parses, resolves and type checks one model file.
pub fn parse_model(source: &str, origin: &str) -> Result<RequirementModel, Vec<Diagnostic>> {
    check_model(parse_syntax(source, origin)?)
}

/// Parses several files as one model, merged in the order given.
pub fn parse_models<'a>(
    files: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<RequirementModel, Vec<Diagnostic>> {
    let mut parts = Vec::new();
    let mut diags = Vec::new();
    for (source, origin) in files {
        match parse_syntax(source, origin) {
            Ok(m) => parts.push(m),
            Err(d) => diags.extend(d),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    check_model(RequirementModel::merge(parts))
}

fn recover(p: &mut ExprParser<'_>) {
    // always make progress, then stop at the next declaration keyword
    p.bump();
    while !p.at_eof() {
        let at_item = matches!(p.peek(), Tok::Ident(w) if ITEM_KEYWORDS.contains(&w.as_str()));
        if at_item {
            return;
        }
        p.bump();
    }
}

fn item(p: &mut ExprParser<'_>, model: &mut RequirementModel) -> PResult<()> {
    let Tok::Ident(word) = p.peek().clone() else {
        return Err(p.unexpected("a declaration"));
    };
    match word.as_str() {
        "enum" => model.enums.push(enum_decl(p)?),
        "entity" => model.entities.push(entity_decl(p)?),
        "actor" => model.actors.push(actor_decl(p)?),
        "service" => model.services.push(service_decl(p)?),
        "contract" => model.contracts.push(contract_decl(p)?),
        _ => return Err(p.unexpected("`enum`, `entity`, `actor`, `service` or `contract`")),
    }
    Ok(())
}

fn enum_decl(p: &mut ExprParser<'_>) -> PResult<EnumDecl> {
    let span = p.span();
    p.expect_word("enum")?;
    let (name, _) = p.ident()?;
    p.expect(&Tok::LBrace)?;
    let mut literals = Vec::new();
    while p.peek() != &Tok::RBrace {
        let (lit, _) = p.ident()?;
        literals.push(lit);
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.expect(&Tok::RBrace)?;
    if literals.is_empty() {
        return Err(Diagnostic::error(
            crate::diag::DiagCode::SyntaxError,
            span,
            format!("enumeration `{name}` has no literals"),
        ));
    }
    Ok(EnumDecl {
        name,
        literals,
        span,
    })
}

fn multiplicity(p: &mut ExprParser<'_>) -> PResult<Multiplicity> {
    p.expect(&Tok::LBracket)?;
    let m = match p.peek() {
        Tok::Int(1) => Multiplicity::One,
        Tok::Star => Multiplicity::Many,
        _ => return Err(p.unexpected("`1` or `*`")),
    };
    p.bump();
    p.expect(&Tok::RBracket)?;
    Ok(m)
}

fn entity_decl(p: &mut ExprParser<'_>) -> PResult<EntityDecl> {
    let span = p.span();
    p.expect_word("entity")?;
    let (name, _) = p.ident()?;
    p.expect(&Tok::LBrace)?;
    let mut attributes = Vec::new();
    let mut associations = Vec::new();
    while !p.eat(&Tok::RBrace) {
        let (fname, fspan) = p.ident()?;
        p.expect(&Tok::Colon)?;
        let ty = p.type_ref()?;
        if p.peek() == &Tok::LBracket {
            let Type::Object(target) = ty else {
                return Err(p.error("association target must be an entity name"));
            };
            let mult = multiplicity(p)?;
            let inverse = if p.eat_word("inverse") {
                let (inv, _) = p.ident()?;
                Some((inv, multiplicity(p)?))
            } else {
                None
            };
            associations.push(AssociationDecl {
                name: fname,
                target,
                multiplicity: mult,
                inverse,
                span: fspan,
            });
        } else {
            attributes.push(AttributeDecl {
                name: fname,
                ty,
                span: fspan,
            });
        }
        p.expect(&Tok::Semi)?;
    }
    Ok(EntityDecl {
        name,
        attributes,
        associations,
        span,
    })
}

fn actor_decl(p: &mut ExprParser<'_>) -> PResult<ActorDecl> {
    let span = p.span();
    p.expect_word("actor")?;
    let (name, _) = p.ident()?;
    p.expect(&Tok::LBrace)?;
    let mut usecases = Vec::new();
    while !p.eat(&Tok::RBrace) {
        p.expect_word("usecase")?;
        let (uc, uspan) = p.ident()?;
        p.expect(&Tok::Semi)?;
        usecases.push(UseCaseDecl {
            name: uc,
            span: uspan,
        });
    }
    Ok(ActorDecl {
        name,
        usecases,
        span,
    })
}

fn service_decl(p: &mut ExprParser<'_>) -> PResult<ServiceDecl> {
    let span = p.span();
    p.expect_word("service")?;
    let (name, _) = p.ident()?;
    p.expect(&Tok::LBrace)?;
    let mut operations = Vec::new();
    while !p.eat(&Tok::RBrace) {
        let (op, ospan) = p.ident()?;
        p.expect(&Tok::Semi)?;
        operations.push(OperationRef {
            name: op,
            span: ospan,
        });
    }
    Ok(ServiceDecl {
        name,
        operations,
        span,
    })
}

fn section(p: &mut ExprParser<'_>, word: &str) -> bool {
    if p.is_word(word) && p.peek_at(1) == &Tok::Colon {
        p.bump();
        p.bump();
        true
    } else {
        false
    }
}

fn contract_decl(p: &mut ExprParser<'_>) -> PResult<ContractDecl> {
    let span = p.span();
    p.expect_word("contract")?;
    let (service, _) = p.ident()?;
    p.expect(&Tok::ColonColon)?;
    let (operation, _) = p.ident()?;
    p.expect(&Tok::LParen)?;
    let mut inputs = Vec::new();
    if p.peek() != &Tok::RParen {
        loop {
            let (pname, pspan) = p.ident()?;
            p.expect(&Tok::Colon)?;
            let ty = p.type_ref()?;
            inputs.push(Param {
                name: pname,
                ty,
                span: pspan,
            });
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect(&Tok::RParen)?;
    p.expect(&Tok::Colon)?;
    let output = p.type_ref()?;
    p.expect(&Tok::LBrace)?;

    let mut definitions = Vec::new();
    if section(p, "definition") {
        while !p.is_word("precondition") && !p.is_word("postcondition") && p.peek() != &Tok::RBrace
        {
            let (dname, dspan) = p.ident()?;
            let declared = if p.eat(&Tok::Colon) {
                Some(p.type_ref()?)
            } else {
                None
            };
            let init = if p.eat(&Tok::Eq) {
                Some(p.expr()?)
            } else {
                None
            };
            if declared.is_none() && init.is_none() {
                return Err(p.error(format!(
                    "definition `{dname}` needs a type or an initializer"
                )));
            }
            p.expect(&Tok::Semi)?;
            definitions.push(Definition {
                name: dname,
                declared,
                init,
                span: dspan,
            });
        }
    }
    let vacuous = |p: &ExprParser<'_>| Expr::new(ExprKind::BoolLit(true), p.span());
    let precondition = if section(p, "precondition") {
        p.expr()?
    } else {
        vacuous(p)
    };
    let postcondition = if section(p, "postcondition") {
        p.expr()?
    } else {
        vacuous(p)
    };
    p.expect(&Tok::RBrace)?;
    Ok(ContractDecl {
        service,
        operation,
        inputs,
        output,
        definitions,
        precondition,
        postcondition,
        span,
    })
}
