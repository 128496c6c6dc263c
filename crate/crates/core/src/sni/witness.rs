// SPDX-License-Identifier: Apache-2.0

//! Counterexamples to speculative non-interference.

use serde_json::{json, Map, Value as Json};

use crate::muasm::{Configuration, Trace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeakKind {
    /// A memory access of the speculative projection differs; the index is
    /// the position of that access in the projection.
    Memory { obs_index: usize },
    /// A speculative branch or jump condition differs; the length is that of
    /// the speculative prefix preceding it.
    Control { prefix_len: usize },
}

/// Two indistinguishable initial configurations whose always-mispredict
/// traces differ while their non-speculative traces agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub run_index: usize,
    pub kind: LeakKind,
    pub first: Configuration,
    pub second: Configuration,
    pub traces: [Trace; 2],
}

/// Registers and explicitly set memory cells of a configuration. Anything
/// not listed is zero.
pub fn config_json(c: &Configuration) -> Json {
    let regs: Map<String, Json> = c.regs.iter().map(|(r, v)| (r.name().to_owned(), json!(v))).collect();
    let mem: Map<String, Json> = c.mem.cells().map(|(a, v)| (a.to_string(), json!(v))).collect();
    json!({ "registers": regs, "memory": mem })
}

fn trace_json(t: &Trace) -> Json {
    Json::Array(t.iter().map(|o| Json::String(o.to_string())).collect())
}

impl Witness {
    pub fn to_json(&self) -> Json {
        let mut out = json!({
            "verdict": "INSECURE",
            "runIndex": self.run_index,
            "model1": config_json(&self.first),
            "model2": config_json(&self.second),
            "concretizedTraces": [trace_json(&self.traces[0]), trace_json(&self.traces[1])],
        });
        let obj = out.as_object_mut().expect("object");
        match self.kind {
            LeakKind::Memory { obs_index } => {
                obj.insert("kind".into(), json!("memory"));
                obj.insert("obsIndex".into(), json!(obs_index));
            }
            LeakKind::Control { prefix_len } => {
                obj.insert("kind".into(), json!("control"));
                obj.insert("prefixLen".into(), json!(prefix_len));
            }
        }
        out
    }
}
