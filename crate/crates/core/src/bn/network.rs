use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::BnError;

/// Tolerance for conditional table rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Role a variable plays in a diagnostic network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Disorder,
    Symptom,
    Report,
    Parameter,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub id: String,
    pub states: Vec<String>,
    pub kind: VariableKind,
}

impl Variable {
    pub fn new<S: Into<String>>(
        id: impl Into<String>,
        states: impl IntoIterator<Item = S>,
        kind: VariableKind,
    ) -> Self {
        Variable {
            id: id.into(),
            states: states.into_iter().map(Into::into).collect(),
            kind,
        }
    }

    /// Binary variable with states `absent`, `present`.
    pub fn binary(id: impl Into<String>, kind: VariableKind) -> Self {
        Variable::new(id, ["absent", "present"], kind)
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// Conditional probability table for `child` given `parents`.
///
/// Entries are laid out as `entries[row * |child| + child_state]`, where `row`
/// enumerates parent-state combinations in row-major order over the declared
/// parent order (the last parent varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub child: String,
    pub parents: Vec<String>,
    pub entries: Vec<f64>,
}

impl ConditionalTable {
    pub fn new(child: impl Into<String>, parents: Vec<String>, entries: Vec<f64>) -> Self {
        ConditionalTable {
            child: child.into(),
            parents,
            entries,
        }
    }

    /// Root table from a prior distribution.
    pub fn prior(child: impl Into<String>, distribution: Vec<f64>) -> Self {
        ConditionalTable::new(child, Vec::new(), distribution)
    }
}

/// A validated directed acyclic network of categorical variables.
///
/// Networks are immutable; the `with_*` methods return new networks.
#[derive(Debug, Clone)]
pub struct Network {
    variables: Vec<Variable>,
    tables: Vec<ConditionalTable>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topological: Vec<usize>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.tables == other.tables
    }
}

/// Validates variables and tables and assembles a [`Network`].
pub fn build_network(variables: Vec<Variable>, tables: Vec<ConditionalTable>) -> Result<Network, BnError> {
    let mut index = HashMap::with_capacity(variables.len());
    for (i, var) in variables.iter().enumerate() {
        if var.states.len() < 2 {
            return Err(BnError::InvalidVariable {
                variable: var.id.clone(),
                reason: "a variable needs at least two states".into(),
            });
        }
        let distinct: BTreeSet<&String> = var.states.iter().collect();
        if distinct.len() != var.states.len() {
            return Err(BnError::InvalidVariable {
                variable: var.id.clone(),
                reason: "state labels must be unique".into(),
            });
        }
        if index.insert(var.id.clone(), i).is_some() {
            return Err(BnError::DuplicateVariable(var.id.clone()));
        }
    }

    let mut slots: Vec<Option<ConditionalTable>> = vec![None; variables.len()];
    for table in tables {
        let Some(&i) = index.get(&table.child) else {
            return Err(BnError::UnknownVariable(table.child));
        };
        if slots[i].is_some() {
            return Err(BnError::MalformedTable {
                variable: table.child,
                reason: "more than one table for this variable".into(),
            });
        }
        slots[i] = Some(table);
    }

    let mut ordered = Vec::with_capacity(variables.len());
    let mut parents = Vec::with_capacity(variables.len());
    for (var, slot) in variables.iter().zip(slots) {
        let table = slot.ok_or_else(|| BnError::MissingTable(var.id.clone()))?;
        let mut parent_ids = Vec::with_capacity(table.parents.len());
        let mut rows = 1usize;
        for p in &table.parents {
            let &pi = index.get(p).ok_or_else(|| BnError::MalformedTable {
                variable: var.id.clone(),
                reason: format!("parent `{p}` is not a declared variable"),
            })?;
            if parent_ids.contains(&pi) {
                return Err(BnError::MalformedTable {
                    variable: var.id.clone(),
                    reason: format!("parent `{p}` listed twice"),
                });
            }
            parent_ids.push(pi);
            rows *= variables[pi].cardinality();
        }
        validate_entries(var, &table.entries, rows)?;
        parents.push(parent_ids);
        ordered.push(table);
    }

    let mut children = vec![Vec::new(); variables.len()];
    for (child, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(child);
        }
    }
    let topological = topological_order(&variables, &parents, &children)?;

    Ok(Network {
        variables,
        tables: ordered,
        index,
        parents,
        children,
        topological,
    })
}

fn validate_entries(var: &Variable, entries: &[f64], rows: usize) -> Result<(), BnError> {
    let k = var.cardinality();
    if entries.len() != rows * k {
        return Err(BnError::MalformedTable {
            variable: var.id.clone(),
            reason: format!("expected {} entries, found {}", rows * k, entries.len()),
        });
    }
    for (r, row) in entries.chunks(k).enumerate() {
        if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(BnError::MalformedTable {
                variable: var.id.clone(),
                reason: format!("entry {bad} in row {r} is outside [0, 1]"),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(BnError::MalformedTable {
                variable: var.id.clone(),
                reason: format!("row {r} sums to {sum}"),
            });
        }
    }
    Ok(())
}

// Kahn's algorithm; ready nodes are taken in id order so the result is stable.
fn topological_order(
    variables: &[Variable],
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
) -> Result<Vec<usize>, BnError> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeMap<&str, usize> = indegree
        .iter()
        .enumerate()
        .filter(|(_, d)| **d == 0)
        .map(|(i, _)| (variables[i].id.as_str(), i))
        .collect();
    let mut order = Vec::with_capacity(variables.len());
    while let Some((_, i)) = ready.pop_first() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(variables[c].id.as_str(), c);
            }
        }
    }
    if order.len() == variables.len() {
        Ok(order)
    } else {
        let stuck = (0..variables.len())
            .filter(|&i| indegree[i] > 0)
            .map(|i| variables[i].id.as_str())
            .min()
            .unwrap_or_default();
        Err(BnError::CyclicGraph(stuck.to_string()))
    }
}

impl Network {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn tables(&self) -> &[ConditionalTable] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn require(&self, id: &str) -> Result<usize, BnError> {
        self.index_of(id)
            .ok_or_else(|| BnError::UnknownVariable(id.to_string()))
    }

    pub fn variable(&self, id: &str) -> Option<&Variable> {
        self.index_of(id).map(|i| &self.variables[i])
    }

    pub fn table(&self, id: &str) -> Option<&ConditionalTable> {
        self.index_of(id).map(|i| &self.tables[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub(crate) fn var_at(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub(crate) fn table_at(&self, i: usize) -> &ConditionalTable {
        &self.tables[i]
    }

    pub(crate) fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn child_indices(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Variable indices in a parents-before-children order.
    pub fn topological_order(&self) -> &[usize] {
        &self.topological
    }

    pub fn parents_of(&self, id: &str) -> Option<Vec<&str>> {
        self.index_of(id)
            .map(|i| self.parents[i].iter().map(|&p| self.variables[p].id.as_str()).collect())
    }

    pub fn children_of(&self, id: &str) -> Option<Vec<&str>> {
        self.index_of(id).map(|i| {
            self.children[i]
                .iter()
                .map(|&c| self.variables[c].id.as_str())
                .collect()
        })
    }

    /// All directed edges as `(parent, child)` pairs.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((self.variables[p].id.as_str(), self.variables[c].id.as_str()));
            }
        }
        out
    }

    pub fn ids_of_kind(&self, kind: VariableKind) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.id.as_str())
            .collect()
    }

    pub fn into_parts(self) -> (Vec<Variable>, Vec<ConditionalTable>) {
        (self.variables, self.tables)
    }

    /// New network with extra variables and their tables.
    pub fn with_additions(
        &self,
        variables: impl IntoIterator<Item = Variable>,
        tables: impl IntoIterator<Item = ConditionalTable>,
    ) -> Result<Network, BnError> {
        let mut vars = self.variables.clone();
        vars.extend(variables);
        let mut tabs = self.tables.clone();
        tabs.extend(tables);
        build_network(vars, tabs)
    }

    /// New network where each given table replaces the existing table of its child.
    pub fn with_replaced_tables(&self, tables: impl IntoIterator<Item = ConditionalTable>) -> Result<Network, BnError> {
        let mut tabs = self.tables.clone();
        for t in tables {
            let i = self.require(&t.child)?;
            tabs[i] = t;
        }
        build_network(self.variables.clone(), tabs)
    }
}
