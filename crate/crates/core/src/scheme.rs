//! Symmetric composition schemes for the split propagators.
//!
//! Both the classical integrator and the quantum propagator are built from a
//! single symmetric second-order substep (half kick / full drift / half kick,
//! or half potential / full hopping / half potential). A [`Composition`]
//! decides how that substep is chained within one time step: plain Strang
//! uses it once, the Yoshida triple jump uses it three times with weights
//! chosen to cancel the third-order error term.
//!
//! Schemes are looked up by name so that configuration files and the command
//! line can select one at runtime.

use std::fmt;
use std::sync::LazyLock;

use crate::error::{Error, Result};

pub trait Composition: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Fractions of the step handed to each successive substep. Sum to one.
    fn weights(&self) -> &[f64];

    fn order(&self) -> u32;

    fn description(&self) -> &'static str;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Strang;

impl Composition for Strang {
    fn name(&self) -> &'static str {
        "strang"
    }

    fn weights(&self) -> &[f64] {
        &[1.0]
    }

    fn order(&self) -> u32 {
        2
    }

    fn description(&self) -> &'static str {
        "single symmetric kick-drift-kick substep per step"
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Yoshida4 {
    weights: [f64; 3],
}

impl Yoshida4 {
    pub fn new() -> Self {
        let cbrt2 = 2f64.cbrt();
        let outer = 1.0 / (2.0 - cbrt2);
        let inner = -cbrt2 / (2.0 - cbrt2);
        Self {
            weights: [outer, inner, outer],
        }
    }
}

impl Default for Yoshida4 {
    fn default() -> Self {
        Self::new()
    }
}

impl Composition for Yoshida4 {
    fn name(&self) -> &'static str {
        "yoshida4"
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn order(&self) -> u32 {
        4
    }

    fn description(&self) -> &'static str {
        "triple-jump composition of the symmetric substep, fourth order"
    }
}

/// Name-indexed collection of composition schemes.
#[derive(Debug, Default)]
pub struct SchemeRegistry {
    entries: Vec<Box<dyn Composition>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        registry.register(Box::new(Strang));
        registry.register(Box::new(Yoshida4::new()));
        registry
    }

    /// Adds a scheme, replacing any existing entry with the same name.
    pub fn register(&mut self, scheme: Box<dyn Composition>) {
        self.entries.retain(|s| s.name() != scheme.name());
        self.entries.push(scheme);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Composition> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|s| s.name())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Composition> {
        self.entries.iter().map(|s| s.as_ref())
    }
}

static BUILTIN: LazyLock<SchemeRegistry> = LazyLock::new(SchemeRegistry::builtin);

pub fn builtin_schemes() -> &'static SchemeRegistry {
    &BUILTIN
}

pub fn lookup(name: &str) -> Result<&'static dyn Composition> {
    BUILTIN
        .get(name)
        .ok_or_else(|| Error::UnknownScheme(name.to_string()))
}

pub const DEFAULT_SCHEME: &str = "yoshida4";
