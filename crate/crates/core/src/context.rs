//! Global typing contexts: ordered declarations and definitions.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entry {
    Decl { name: String, ty: Term },
    Def { name: String, body: Term, ty: Term },
}

impl Entry {
    pub fn name(&self) -> &str {
        match self {
            Entry::Decl { name, .. } | Entry::Def { name, .. } => name,
        }
    }

    pub fn ty(&self) -> &Term {
        match self {
            Entry::Decl { ty, .. } | Entry::Def { ty, .. } => ty,
        }
    }

    pub fn body(&self) -> Option<&Term> {
        match self {
            Entry::Def { body, .. } => Some(body),
            Entry::Decl { .. } => None,
        }
    }
}

/// An ordered context. Extensions share their prefix through an `Arc`, so
/// layering per-transition views on a large base is cheap.
#[derive(Clone, Debug, Default)]
pub struct Context {
    parent: Option<Arc<Context>>,
    entries: Vec<Entry>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("duplicate name `{0}` in context")]
pub struct DuplicateName(pub String);

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    /// A new empty layer on top of `base`.
    pub fn extend(base: &Arc<Context>) -> Context {
        Context {
            parent: Some(base.clone()),
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn push(&mut self, entry: Entry) -> Result<(), DuplicateName> {
        if self.lookup(entry.name()).is_some() {
            return Err(DuplicateName(entry.name().to_owned()));
        }
        self.index.insert(entry.name().to_owned(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn push_decl(&mut self, name: &str, ty: Term) -> Result<(), DuplicateName> {
        self.push(Entry::Decl { name: name.to_owned(), ty })
    }

    pub fn push_def(&mut self, name: &str, body: Term, ty: Term) -> Result<(), DuplicateName> {
        self.push(Entry::Def { name: name.to_owned(), body, ty })
    }

    pub fn lookup(&self, name: &str) -> Option<&Entry> {
        match self.index.get(name) {
            Some(&i) => Some(&self.entries[i]),
            None => self.parent.as_ref().and_then(|p| p.lookup(name)),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// Body of a δ-unfoldable constant.
    pub fn definition(&self, name: &str) -> Option<&Term> {
        self.lookup(name).and_then(Entry::body)
    }

    pub fn len(&self) -> usize {
        self.entries.len() + self.parent.as_ref().map_or(0, |p| p.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries, outermost layer first.
    pub fn entries(&self) -> Vec<&Entry> {
        let mut out = self.parent.as_ref().map_or_else(Vec::new, |p| p.entries());
        out.extend(self.entries.iter());
        out
    }

    pub fn from_entries(entries: impl IntoIterator<Item = Entry>) -> Result<Context, DuplicateName> {
        let mut ctx = Context::new();
        for e in entries {
            ctx.push(e)?;
        }
        Ok(ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_lookup_and_shadowing_rules() {
        let mut base = Context::new();
        base.push_decl("Result", Term::sort(crate::term::Sort::Data(0))).unwrap();
        let base = Arc::new(base);
        let mut layer = Context::extend(&base);
        layer.push_def("x", Term::val(1), Term::val_ty()).unwrap();
        assert!(layer.contains("Result"));
        assert_eq!(layer.definition("x"), Some(&Term::val(1)));
        assert_eq!(layer.push_decl("Result", Term::val_ty()), Err(DuplicateName("Result".into())));
        assert_eq!(layer.len(), 2);
        assert_eq!(layer.entries()[0].name(), "Result");
    }
}
