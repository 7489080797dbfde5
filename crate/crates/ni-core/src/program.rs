//! Whole programs: declared outputs, high inputs, assumed extern typings,
//! top-level definitions, and the main expression, plus linking of extern
//! implementations and definitions into a closed term.

use crate::lang::ast::{Expr, Name, Val};
use crate::lang::subst::subst;
use crate::typesys::SecType;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// A parsed `.ni` program.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    /// Output names, in declaration order. Each becomes an observable
    /// location initialized to 0.
    pub outputs: Vec<Name>,
    /// High integer inputs with their declared finite domains.
    pub highs: Vec<(Name, BTreeSet<i64>)>,
    /// Assumed typings for definitions supplied at link time.
    pub externs: Vec<(Name, SecType)>,
    /// Top-level definitions, checked and linked in order.
    pub defs: Vec<(Name, Expr)>,
    /// Implementations for externs, carried alongside the program so a
    /// fixture is self-contained. Ignored by the type checker.
    pub extern_impls: Vec<(Name, Expr)>,
    /// The program body.
    pub main: Expr,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinkError {
    #[error("extern `{0}` has no linked implementation")]
    MissingImplementation(Name),
    #[error("implementation provided for undeclared extern `{0}`")]
    UnknownExtern(Name),
    #[error("`{0}` must be a syntactic value to be linked")]
    NotAValue(Name),
    #[error("unbound name `{0}` in `{1}`")]
    Unbound(Name, Name),
}

impl Program {
    /// Names a definition may refer to, for scope validation.
    pub fn validate(&self) -> Result<(), LinkError> {
        let mut scope: BTreeSet<Name> = self.outputs.iter().cloned().collect();
        scope.extend(self.highs.iter().map(|(n, _)| n.clone()));
        let extern_names: BTreeSet<Name> = self.externs.iter().map(|(n, _)| n.clone()).collect();
        for (name, body) in &self.extern_impls {
            if !extern_names.contains(name) {
                return Err(LinkError::UnknownExtern(name.clone()));
            }
            for fv in body.free_vars() {
                if !scope.contains(&fv) && !extern_names.contains(&fv) {
                    return Err(LinkError::Unbound(fv, name.clone()));
                }
            }
        }
        scope.extend(extern_names);
        for (name, body) in &self.defs {
            for fv in body.free_vars() {
                if !scope.contains(&fv) {
                    return Err(LinkError::Unbound(fv, name.clone()));
                }
            }
            scope.insert(name.clone());
        }
        for fv in self.main.free_vars() {
            if !scope.contains(&fv) {
                return Err(LinkError::Unbound(fv, Name::from("main")));
            }
        }
        Ok(())
    }

    /// Replace each extern implementation, overriding the ones carried by
    /// the program. Fails if an extern remains without a body.
    pub fn link(&self, overrides: &BTreeMap<Name, Expr>) -> Result<Program, LinkError> {
        let mut impls: BTreeMap<Name, Expr> = self
            .extern_impls
            .iter()
            .map(|(n, e)| (n.clone(), e.clone()))
            .collect();
        for (n, e) in overrides {
            impls.insert(n.clone(), e.clone());
        }
        for (name, _) in &self.externs {
            if !impls.contains_key(name) {
                return Err(LinkError::MissingImplementation(name.clone()));
            }
        }
        let mut linked = self.clone();
        linked.extern_impls = self
            .externs
            .iter()
            .map(|(n, _)| (n.clone(), impls[n].clone()))
            .collect();
        Ok(linked)
    }

    /// Produce the main expression with outputs bound to locations and all
    /// externs and definitions substituted in, leaving only the high
    /// variables free. `output_locs` must assign a location to every
    /// output name.
    pub fn closed_main(&self, output_locs: &BTreeMap<Name, u64>) -> Result<Expr, LinkError> {
        let subst_ground = |e: &Expr| -> Expr {
            let mut e = e.clone();
            for (name, loc) in output_locs {
                e = subst(&e, name, &Val::Loc(*loc));
            }
            e
        };

        // Externs first, in declaration order, then defs in order. Each
        // linked body must be a value so substitution is meaningful.
        let mut env: Vec<(Name, Val)> = Vec::new();
        let close = |e: &Expr, env: &[(Name, Val)]| -> Expr {
            let mut e = e.clone();
            for (n, v) in env {
                e = subst(&e, n, v);
            }
            e
        };

        for (name, _) in &self.externs {
            let body = self
                .extern_impls
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, e)| e.clone())
                .ok_or_else(|| LinkError::MissingImplementation(name.clone()))?;
            let body = close(&subst_ground(&body), &env);
            let v = body
             .as_val()
                .ok_or_else(|| LinkError::NotAValue(name.clone()))?;
            env.push((name.clone(), v));
        }
        for (name, body) in &self.defs {
            let body = close(&subst_ground(body), &env);
            let v = body
                .as_val()
                .ok_or_else(|| LinkError::NotAValue(name.clone()))?;
            env.push((name.clone(), v));
        }
        Ok(close(&subst_ground(&self.main), &env))
    }

    pub fn high_names(&self) -> Vec<Name> {
        self.highs.iter().map(|(n, _)| n.clone()).collect()
    }
}
