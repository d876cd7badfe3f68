use indexmap::IndexMap;

use super::{EndstateSolver, FrequencyInformedSolver, MappingSolver, WidrowHoffSolver};
use crate::error::{Error, Result};

/// Solvers keyed by name, in registration order.
pub struct SolverRegistry {
    solvers: IndexMap<&'static str, Box<dyn MappingSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        SolverRegistry { solvers: IndexMap::new() }
    }

    /// Replaces any solver already registered under the same name.
    pub fn register(&mut self, solver: Box<dyn MappingSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn MappingSolver> {
        let key = name.trim().to_ascii_lowercase();
        self.solvers.get(key.as_str()).map(Box::as_ref).ok_or_else(|| Error::UnknownSolver(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn MappingSolver> {
        self.solvers.values().map(Box::as_ref)
    }
}

impl Default for SolverRegistry {
    /// `el`, `fil` and `whl`.
    fn default() -> Self {
        let mut reg = SolverRegistry::empty();
        reg.register(Box::new(EndstateSolver));
        reg.register(Box::new(FrequencyInformedSolver));
        reg.register(Box::new(WidrowHoffSolver));
        reg
    }
}
