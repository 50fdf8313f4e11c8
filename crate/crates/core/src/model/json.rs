//! Model ingestion.
//!
//! Two formats are accepted:
//!
//! * the native schema
//!   `{"n_features", "base_score", "threshold", "trees": [[node, ...], ...]}`
//!   where a node is `{"feat", "thr", "left", "right"}` or `{"leaf"}` and
//!   node 0 is the root;
//! * the JSON array written by XGBoost's `dump_model(..., dump_format="json")`
//!   for numeric splits. A dump carries neither a base score nor a decision
//!   threshold, so both default to 0 and can be overridden afterwards.

use serde::Serialize;
use serde_json::{Map, Value};

use super::{Node, Tree, TreeEnsemble};
use crate::error::{Error, Result};

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses either format; a top-level array is treated as an XGBoost dump.
pub fn parse_model_json(text: &str) -> Result<TreeEnsemble> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        schema(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    match &value {
        Value::Array(_) => parse_xgboost_value(&value, None),
        Value::Object(obj) => parse_native(obj),
        _ => Err(schema("$", "expected an object or an array")),
    }
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| schema(format!("{path}.{key}"), "missing field"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| schema(path, format!("expected a number, found {v}")))?;
    if !x.is_finite() {
        return Err(schema(path, "not finite"));
    }
    Ok(x)
}

fn as_index(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|i| i as usize)
        .ok_or_else(|| schema(path, format!("expected a non-negative integer, found {v}")))
}

fn parse_native(obj: &Map<String, Value>) -> Result<TreeEnsemble> {
    let n_features = as_index(get(obj, "n_features", "$")?, "$.n_features")?;
    let base_score = as_f64(get(obj, "base_score", "$")?, "$.base_score")?;
    let threshold = as_f64(get(obj, "threshold", "$")?, "$.threshold")?;
    let trees_v = get(obj, "trees", "$")?
        .as_array()
        .ok_or_else(|| schema("$.trees", "expected an array"))?;

    let mut trees = Vec::with_capacity(trees_v.len());
    for (t, tree_v) in trees_v.iter().enumerate() {
        let tpath = format!("$.trees[{t}]");
        let nodes_v = tree_v
            .as_array()
            .ok_or_else(|| schema(&tpath, "expected an array of nodes"))?;
        let mut nodes = Vec::with_capacity(nodes_v.len());
        for (i, node_v) in nodes_v.iter().enumerate() {
            let npath = format!("{tpath}[{i}]");
            let node = node_v
                .as_object()
                .ok_or_else(|| schema(&npath, "expected an object"))?;
            if let Some(leaf) = node.get("leaf") {
                nodes.push(Node::leaf(as_f64(leaf, &format!("{npath}.leaf"))?));
            } else {
                let feat = as_index(get(node, "feat", &npath)?, &format!("{npath}.feat"))?;
                let thr = as_f64(get(node, "thr", &npath)?, &format!("{npath}.thr"))?;
                let left = as_index(get(node, "left", &npath)?, &format!("{npath}.left"))?;
                let right = as_index(get(node, "right", &npath)?, &format!("{npath}.right"))?;
                if feat >= n_features {
                    return Err(schema(
                        format!("{npath}.feat"),
                        format!("feature {feat} out of range 0..{n_features}"),
                    ));
                }
                nodes.push(Node::split(feat, thr, left, right));
            }
        }
        trees.push(Tree::new(nodes, n_features).map_err(|e| relocate(e, &tpath))?);
    }
    TreeEnsemble::new(trees, base_score, n_features, threshold)
}

fn relocate(e: Error, prefix: &str) -> Error {
    match e {
        Error::Schema { path, message } => {
            let path = path.strip_prefix("nodes").unwrap_or(&path).to_owned();
            schema(format!("{prefix}{path}"), message)
        }
        other => other,
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum NativeNode {
    Split {
        feat: usize,
        thr: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: f64,
    },
}

#[derive(Serialize)]
struct NativeModel {
    n_features: usize,
    base_score: f64,
    threshold: f64,
    trees: Vec<Vec<NativeNode>>,
}

/// Serializes to the native schema; parsing the output gives back an equal
/// ensemble.
pub fn to_native_json(e: &TreeEnsemble) -> String {
    let model = NativeModel {
        n_features: e.n_features(),
        base_score: e.base_score(),
        threshold: e.threshold(),
        trees: e
            .trees()
            .iter()
            .map(|t| {
                t.nodes()
                    .iter()
                    .map(|n| {
                        if n.is_leaf() {
                            NativeNode::Leaf { leaf: n.value() }
                        } else {
                            NativeNode::Split {
                                feat: n.feature(),
                                thr: n.threshold(),
                                left: n.left(),
                                right: n.right(),
                            }
                        }
                    })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string(&model).expect("model serialization cannot fail")
}

/// Parses an XGBoost JSON dump. Split names are resolved against
/// `feature_names` when given, otherwise they must look like `f<index>`.
/// `n_features` is one past the largest split feature; widen it with
/// [`TreeEnsemble::with_n_features`].
pub fn parse_xgboost_dump(text: &str, feature_names: Option<&[String]>) -> Result<TreeEnsemble> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        schema(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    parse_xgboost_value(&value, feature_names)
}

struct DumpNode {
    split: Option<(usize, f64, u64, u64)>,
    leaf: f64,
}

fn parse_xgboost_value(value: &Value, feature_names: Option<&[String]>) -> Result<TreeEnsemble> {
    let trees_v = value
        .as_array()
        .ok_or_else(|| schema("$", "expected an array of trees"))?;
    let mut raw_trees = Vec::with_capacity(trees_v.len());
    let mut n_features = 0usize;
    for (t, tree_v) in trees_v.iter().enumerate() {
        let mut by_id = std::collections::BTreeMap::new();
        collect_dump_nodes(tree_v, &format!("$[{t}]"), feature_names, &mut by_id)?;
        for node in by_id.values() {
            if let Some((f, ..)) = node.split {
                n_features = n_features.max(f + 1);
            }
        }
        raw_trees.push(by_id);
    }

    let mut trees = Vec::with_capacity(raw_trees.len());
    for (t, by_id) in raw_trees.into_iter().enumerate() {
        let tpath = format!("$[{t}]");
        // Renumber so that the root becomes node 0, in breadth-first order.
        if !by_id.contains_key(&0) {
            return Err(schema(&tpath, "no node with nodeid 0"));
        }
        let mut order = vec![0u64];
        let mut index = std::collections::BTreeMap::new();
        index.insert(0u64, 0usize);
        let mut k = 0;
        while k < order.len() {
            let id = order[k];
            if let Some((_, _, yes, no)) = by_id[&id].split {
                for child in [yes, no] {
                    if !by_id.contains_key(&child) {
                        return Err(schema(
                            &tpath,
                            format!("node {id} references missing child {child}"),
                        ));
                    }
                    if index.insert(child, order.len()).is_some() {
                        return Err(schema(&tpath, format!("node {child} has several parents")));
                    }
                    order.push(child);
                }
            }
            k += 1;
        }
        let nodes = order
            .iter()
            .map(|id| {
                let n = &by_id[id];
                match n.split {
                    Some((f, thr, yes, no)) => Node::split(f, thr, index[&yes], index[&no]),
                    None => Node::leaf(n.leaf),
                }
            })
            .collect();
        trees.push(Tree::new(nodes, n_features).map_err(|e| relocate(e, &tpath))?);
    }
    TreeEnsemble::new(trees, 0.0, n_features, 0.0)
}

fn collect_dump_nodes(
    v: &Value,
    path: &str,
    feature_names: Option<&[String]>,
    out: &mut std::collections::BTreeMap<u64, DumpNode>,
) -> Result<()> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(path, "expected a node object"))?;
    let id = get(obj, "nodeid", path)?
        .as_u64()
        .ok_or_else(|| schema(format!("{path}.nodeid"), "expected a non-negative integer"))?;
    let node = if let Some(leaf) = obj.get("leaf") {
        DumpNode {
            split: None,
            leaf: as_f64(leaf, &format!("{path}.leaf"))?,
        }
    } else {
        if obj.contains_key("categories") || obj.contains_key("categories_nodes") {
            return Err(Error::UnsupportedFeature {
                path: path.to_owned(),
                message: "categorical split".into(),
            });
        }
        let split = get(obj, "split", path)?;
        let feature = match split {
            Value::String(name) => resolve_feature(name, feature_names).ok_or_else(|| {
                schema(format!("{path}.split"), format!("unknown feature '{name}'"))
            })?,
            Value::Number(n) => n
                .as_u64()
                .map(|i| i as usize)
                .ok_or_else(|| schema(format!("{path}.split"), "expected a feature index"))?,
            _ => return Err(schema(format!("{path}.split"), "expected a feature name")),
        };
        let cond = get(obj, "split_condition", path)?;
        if !cond.is_number() {
            return Err(Error::UnsupportedFeature {
                path: format!("{path}.split_condition"),
                message: "non-numeric split condition".into(),
            });
        }
        let thr = as_f64(cond, &format!("{path}.split_condition"))?;
        let yes = as_index(get(obj, "yes", path)?, &format!("{path}.yes"))? as u64;
        let no = as_index(get(obj, "no", path)?, &format!("{path}.no"))? as u64;
        DumpNode {
            split: Some((feature, thr, yes, no)),
            leaf: 0.0,
        }
    };
    if out.insert(id, node).is_some() {
        return Err(schema(
            format!("{path}.nodeid"),
            format!("duplicate nodeid {id}"),
        ));
    }
    if let Some(children) = obj.get("children") {
        let children = children
            .as_array()
            .ok_or_else(|| schema(format!("{path}.children"), "expected an array"))?;
        for (c, child) in children.iter().enumerate() {
            collect_dump_nodes(child, &format!("{path}.children[{c}]"), feature_names, out)?;
        }
    }
    Ok(())
}

fn resolve_feature(name: &str, names: Option<&[String]>) -> Option<usize> {
    if let Some(names) = names {
        if let Some(i) = names.iter().position(|n| n == name) {
            return Some(i);
        }
    }
    name.strip_prefix('f')?.parse().ok()
}
