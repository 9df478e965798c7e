//! JSON checkpoints. Values are written as `f64`, which round-trips both
//! scalar types bit-exactly.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AdamState, BatchNorm, DenseLayer, Network};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub created: u64,
    pub episodes_trained: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub network: Network<T>,
    pub adam: Option<AdamState<T>>,
    pub meta: CheckpointMeta,
}

#[derive(Serialize, Deserialize)]
struct BnRecord {
    gain: Vec<f64>,
    shift: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
    eps: f64,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bn: Option<BnRecord>,
}

#[derive(Serialize, Deserialize)]
struct AdamRecord {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
    alpha: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

fn wide<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn narrow<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::of(x)).collect()
}

fn section_err(section: &str, message: impl Into<String>) -> Error {
    Error::Checkpoint {
        section: section.into(),
        message: message.into(),
    }
}

fn field<D: DeserializeOwned>(root: &mut serde_json::Map<String, Value>, key: &str) -> Result<D> {
    let v = root.remove(key).ok_or_else(|| section_err(key, "missing"))?;
    serde_json::from_value(v).map_err(|e| section_err(key, e.to_string()))
}

pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    net: &Network<T>,
    adam: Option<&AdamState<T>>,
    meta: &CheckpointMeta,
) -> Result<()> {
    let layers: Vec<LayerRecord> = net
        .layers()
        .iter()
        .map(|l| LayerRecord {
            w: l.weights.chunks(l.inputs).map(wide).collect(),
            b: wide(&l.biases),
            bn: l.bn.as_ref().map(|bn| BnRecord {
                gain: wide(&bn.gain),
                shift: wide(&bn.shift),
                mean: wide(&bn.running_mean),
                var: wide(&bn.running_var),
                eps: bn.eps.as_f64(),
            }),
        })
        .collect();
    let mut root = serde_json::Map::new();
    root.insert("arch".into(), serde_json::to_value(net.arch()).expect("serializable"));
    root.insert("layers".into(), serde_json::to_value(layers).expect("serializable"));
    if let Some(a) = adam {
        let rec = AdamRecord {
            m: a.first_moment.iter().map(|v| wide(v)).collect(),
            v: a.second_moment.iter().map(|v| wide(v)).collect(),
            step: a.step_count,
            alpha: a.alpha.as_f64(),
            beta1: a.beta1.as_f64(),
            beta2: a.beta2.as_f64(),
            eps: a.epsilon.as_f64(),
        };
        root.insert("adam".into(), serde_json::to_value(rec).expect("serializable"));
    }
    root.insert("meta".into(), serde_json::to_value(meta).expect("serializable"));
    let text = serde_json::to_string(&Value::Object(root)).expect("serializable");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

/// Loads a checkpoint and checks it against `expected_arch`.
pub fn load_checkpoint<T: Scalar>(path: &Path, expected_arch: &[usize]) -> Result<Checkpoint<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_checkpoint(&text, expected_arch)
}

pub(crate) fn parse_checkpoint<T: Scalar>(text: &str, expected_arch: &[usize]) -> Result<Checkpoint<T>> {
    let root: Value = serde_json::from_str(text).map_err(|e| section_err("document", e.to_string()))?;
    let Value::Object(mut root) = root else {
        return Err(section_err("document", "expected an object"));
    };
    let arch: Vec<usize> = field(&mut root, "arch")?;
    if arch != expected_arch {
        return Err(Error::Shape(format!(
            "checkpoint architecture {arch:?} does not match {expected_arch:?}"
        )));
    }
    let records: Vec<LayerRecord> = field(&mut root, "layers")?;
    let meta: CheckpointMeta = field(&mut root, "meta")?;
    let adam: Option<AdamRecord> = match root.contains_key("adam") {
        true => Some(field(&mut root, "adam")?),
        false => None,
    };

    if records.len() + 1 != arch.len() {
        return Err(section_err(
            "layers",
            format!("{} layers for architecture {arch:?}", records.len()),
        ));
    }
    let last = records.len() - 1;
    let mut layers = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        let (fan_in, fan_out) = (arch[i], arch[i + 1]);
        let bad = |what: &str| section_err("layers", format!("layer {i}: {what}"));
        if rec.w.len() != fan_out || rec.w.iter().any(|r| r.len() != fan_in) {
            return Err(bad("weight matrix shape"));
        }
        if rec.b.len() != fan_out {
            return Err(bad("bias length"));
        }
        let bn = match (rec.bn, i < last) {
            (Some(bn), true) => {
                if [&bn.gain, &bn.shift, &bn.mean, &bn.var]
                    .iter()
                    .any(|v| v.len() != fan_out)
                {
                    return Err(bad("batch-norm vector length"));
                }
                if bn.var.iter().any(|&v| !(v >= 0.0)) || !(bn.eps > 0.0) {
                    return Err(bad("batch-norm variance or epsilon"));
                }
                Some(BatchNorm {
                    gain: narrow(&bn.gain),
                    shift: narrow(&bn.shift),
                    running_mean: narrow(&bn.mean),
                    running_var: narrow(&bn.var),
                    eps: T::of(bn.eps),
                })
            }
            (None, false) => None,
            (Some(_), false) => return Err(bad("unexpected batch-norm on the output layer")),
            (None, true) => return Err(bad("missing batch-norm")),
        };
        layers.push(DenseLayer {
            inputs: fan_in,
            outputs: fan_out,
            weights: rec.w.iter().flat_map(|r| narrow::<T>(r)).collect(),
            biases: narrow(&rec.b),
            bn,
        });
    }
    let network = Network::from_layers(layers)?;

    let adam = match adam {
        None => None,
        Some(a) => {
            let shapes: Vec<usize> = network.param_slices().iter().map(|s| s.len()).collect();
            let fits = |m: &Vec<Vec<f64>>| m.iter().map(Vec::len).eq(shapes.iter().copied());
            if !fits(&a.m) || !fits(&a.v) {
                return Err(section_err("adam", "moment shapes do not match the network"));
            }
            Some(AdamState {
                first_moment: a.m.iter().map(|v| narrow(v)).collect(),
                second_moment: a.v.iter().map(|v| narrow(v)).collect(),
                step_count: a.step,
                alpha: T::of(a.alpha),
                beta1: T::of(a.beta1),
                beta2: T::of(a.beta2),
                epsilon: T::of(a.eps),
            })
        }
    };
    Ok(Checkpoint { network, adam, meta })
}
