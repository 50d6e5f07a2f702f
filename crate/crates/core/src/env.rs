//! Feature-subset MDP: binary selection states, add/remove actions.
//!
//! With `d` features there are `2d` actions: index `i < d` selects feature
//! `i`, index `d + i` deselects it. Redundant actions leave the state as is.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvState {
    selected: Vec<bool>,
}

impl EnvState {
    pub fn from_selection(selected: Vec<bool>) -> Self {
        EnvState { selected }
    }

    pub fn n_features(&self) -> usize {
        self.selected.len()
    }

    pub fn selected(&self) -> &[bool] {
        &self.selected
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected[i]
    }

    /// Selected feature indices, ascending.
    pub fn subset(&self) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    pub fn subset_size(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    /// The state as a 0/1 input vector for the policy network.
    pub fn as_input(&self) -> Vec<f64> {
        self.selected.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action(pub usize);

impl Action {
    pub fn add(feature: usize) -> Self {
        Action(feature)
    }

    pub fn remove(feature: usize, n_features: usize) -> Self {
        Action(n_features + feature)
    }
}

/// The empty subset over `d` features.
pub fn reset(d: usize) -> Result<EnvState> {
    if d == 0 {
        return Err(Error::invalid("environment needs at least one feature"));
    }
    Ok(EnvState {
        selected: vec![false; d],
    })
}

pub fn step(s: &EnvState, a: Action) -> Result<EnvState> {
    let d = s.n_features();
    if a.0 >= 2 * d {
        return Err(Error::IndexOutOfRange {
            index: a.0,
            len: 2 * d,
        });
    }
    let mut next = s.clone();
    if a.0 < d {
        next.selected[a.0] = true;
    } else {
        next.selected[a.0 - d] = false;
    }
    Ok(next)
}

pub fn subset_of(s: &EnvState) -> Vec<usize> {
    s.subset()
}
