// SPDX-License-Identifier: Apache-2.0

//! Non-speculative and speculative projections of speculative traces.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::muasm::{Marker, TraceEvent};

/// Splits a trace into its non-speculative part (rolled-back transactions
/// and markers removed) and its speculative part (the contents of
/// rolled-back transactions, markers removed).
pub fn project<E: TraceEvent>(trace: &[E]) -> Result<(Vec<E>, Vec<E>)> {
    let mut rollbacks = HashMap::new();
    let mut starts = HashMap::new();
    for (i, e) in trace.iter().enumerate() {
        match e.marker() {
            Some(Marker::Start(id)) => {
                if starts.insert(id, i).is_some() {
                    return Err(Error::Bracketing(format!("transaction {id} starts twice")));
                }
            }
            Some(Marker::Rollback(id))
                if rollbacks.insert(id, i).is_some() => {
                    return Err(Error::Bracketing(format!("transaction {id} rolls back twice")));
                }
            _ => {}
        }
    }
    let mut nse = Vec::new();
    let mut se = Vec::new();
    let mut i = 0;
    while i < trace.len() {
        match trace[i].marker() {
            Some(Marker::Start(id)) => match rollbacks.get(&id) {
                Some(&j) if j > i => {
                    se.extend(trace[i + 1..j].iter().filter(|e| e.marker().is_none()).cloned());
                    i = j + 1;
                }
                Some(_) => {
                    return Err(Error::Bracketing(format!("transaction {id} rolls back before it starts")))
                }
                None => i += 1,
            },
            Some(Marker::Commit(_)) => i += 1,
            Some(Marker::Rollback(id)) => {
                return Err(Error::Bracketing(format!(
                    "rollback of transaction {id} outside its enclosing transaction"
                )))
            }
            None => {
                nse.push(trace[i].clone());
                i += 1;
            }
        }
    }
    Ok((nse, se))
}

/// Non-speculative projection.
pub fn nse<E: TraceEvent>(trace: &[E]) -> Result<Vec<E>> {
    Ok(project(trace)?.0)
}

/// Speculative projection.
pub fn se<E: TraceEvent>(trace: &[E]) -> Result<Vec<E>> {
    Ok(project(trace)?.1)
}
