//! Line-oriented text format for trained forests.
//!
//! ```text
//! ehsense-forest 1
//! n_trees <n>
//! max_depth <d|none>
//! min_samples_split <n>
//! features_per_split <sqrt|n>
//! seed <u64>
//! channels <SC1,SC2,...>
//! classes <k>
//! class <label>            (k lines, in class-index order)
//! features <f>
//! feature <name>           (f lines)
//! tree <index> <node count>
//! S <feature> <threshold> <impurity decrease>
//! L <class> <count_0> ... <count_k-1>
//! ...                      (nodes in pre-order)
//! end
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! loaded model is bit-identical to the saved one on every platform.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{DecisionTree, FeaturesPerSplit, ForestConfig, ForestModel, Node};
use crate::element::parse_selection;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "ehsense-forest";

pub fn write_model<W: Write>(model: &ForestModel, mut out: W) -> Result<()> {
    model.validate()?;
    for label in model.class_labels.iter().chain(&model.feature_names) {
        if label.is_empty() || label.contains(['\n', '\r']) || label.trim() != label {
            return Err(Error::Validation(format!("name '{label}' cannot be stored in a model file")));
        }
    }
    let cfg = &model.config;
    writeln!(out, "{MAGIC} {MODEL_FORMAT_VERSION}")?;
    writeln!(out, "n_trees {}", cfg.n_trees)?;
    match cfg.max_depth {
        Some(d) => writeln!(out, "max_depth {d}")?,
        None => writeln!(out, "max_depth none")?,
    }
    writeln!(out, "min_samples_split {}", cfg.min_samples_split)?;
    writeln!(out, "features_per_split {}", cfg.features_per_split)?;
    writeln!(out, "seed {}", cfg.seed)?;
    let channels: Vec<&str> = model.channel_selection.iter().map(|k| k.name()).collect();
    writeln!(out, "channels {}", channels.join(","))?;
    writeln!(out, "classes {}", model.class_labels.len())?;
    for c in &model.class_labels {
        writeln!(out, "class {c}")?;
    }
    writeln!(out, "features {}", model.feature_names.len())?;
    for f in &model.feature_names {
        writeln!(out, "feature {f}")?;
    }
    for (t, tree) in model.trees.iter().enumerate() {
        writeln!(out, "tree {t} {}", tree.nodes().len())?;
        for node in tree.nodes() {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    impurity_decrease,
                    ..
                } => writeln!(out, "S {feature} {threshold} {impurity_decrease}")?,
                Node::Leaf { class, counts } => {
                    write!(out, "L {class}")?;
                    for c in counts {
                        write!(out, " {c}")?;
                    }
                    writeln!(out)?;
                }
            }
        }
    }
    writeln!(out, "end")?;
    out.flush()?;
    Ok(())
}

pub fn save_model(model: &ForestModel, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ForestModel> {
    read_model(fs::File::open(path)?)
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    line: usize,
}

impl<R: Read> Lines<R> {
    fn next(&mut self, what: &str) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::parse(self.line, format!("unreadable line: {e}"))),
            None => Err(Error::parse(self.line, format!("unexpected end of file, expected {what}"))),
        }
    }

    /// Reads `<key> <value>` and returns the value text.
    fn keyed(&mut self, key: &str) -> Result<String> {
        let l = self.next(key)?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(format!("expected '{key} ...', found '{l}'"))),
        }
    }

    fn keyed_num<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        v.trim()
            .parse()
            .map_err(|_| self.err(format!("{key}: '{v}' is not a valid number")))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.line, message)
    }
}

fn num<T: std::str::FromStr>(lines: &Lines<impl Read>, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| lines.err(format!("missing {what}")))?;
    tok.parse().map_err(|_| lines.err(format!("{what}: '{tok}' is not a valid number")))
}

pub fn read_model<R: Read>(input: R) -> Result<ForestModel> {
    let mut lines = Lines {
        inner: BufReader::new(input).lines(),
        line: 0,
    };
    let header = lines.next("header")?;
    let version = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| lines.err("not an ehsense forest file"))?;
    if version != MODEL_FORMAT_VERSION.to_string() {
        return Err(lines.err(format!("unsupported model format version '{version}'")));
    }

    let n_trees: usize = lines.keyed_num("n_trees")?;
    let max_depth = match lines.keyed("max_depth")?.trim() {
        "none" => None,
        d => Some(
            d.parse::<usize>()
                .map_err(|_| lines.err(format!("max_depth: '{d}' is not valid")))?,
        ),
    };
    let min_samples_split: usize = lines.keyed_num("min_samples_split")?;
    let fps = lines.keyed("features_per_split")?;
    let features_per_split: FeaturesPerSplit = fps.trim().parse().map_err(|e: Error| lines.err(e.to_string()))?;
    let seed: u64 = lines.keyed_num("seed")?;
    let channels = lines.keyed("channels")?;
    let channel_selection = parse_selection(&channels).map_err(|e| lines.err(e.to_string()))?;

    let n_classes: usize = lines.keyed_num("classes")?;
    let mut class_labels = Vec::with_capacity(n_classes.min(1 << 16));
    for _ in 0..n_classes {
        class_labels.push(lines.keyed("class")?);
    }
    let n_features: usize = lines.keyed_num("features")?;
    let mut feature_names = Vec::with_capacity(n_features.min(1 << 16));
    for _ in 0..n_features {
        feature_names.push(lines.keyed("feature")?);
    }

    let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
    for t in 0..n_trees {
        let head = lines.keyed("tree")?;
        let mut parts = head.split_whitespace();
        let index: usize = num(&lines, parts.next(), "tree index")?;
        if index != t {
            return Err(lines.err(format!("expected tree {t}, found tree {index}")));
        }
        let count: usize = num(&lines, parts.next(), "node count")?;
        if count == 0 {
            return Err(lines.err("tree has no nodes"));
        }
        let mut nodes = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let l = lines.next("tree node")?;
            let mut tok = l.split_whitespace();
            let node = match tok.next() {
                Some("S") => {
                    let feature: usize = num(&lines, tok.next(), "split feature")?;
                    let threshold: f64 = num(&lines, tok.next(), "split threshold")?;
                    let impurity_decrease: f64 = num(&lines, tok.next(), "impurity decrease")?;
                    if let Some(extra) = tok.next() {
                        return Err(lines.err(format!("unexpected trailing token '{extra}'")));
                    }
                    if feature >= n_features || !threshold.is_finite() {
                        return Err(lines.err("split refers to an invalid feature or threshold"));
                    }
                    Node::Split {
                        feature,
                        threshold,
                        impurity_decrease,
                        left: 0,
                        right: 0,
                    }
                }
                Some("L") => {
                    let class: usize = num(&lines, tok.next(), "leaf class")?;
                    let counts = tok
                        .map(|c| c.parse::<u32>().map_err(|_| lines.err(format!("leaf count '{c}' is not valid"))))
                        .collect::<Result<Vec<_>>>()?;
                    if class >= n_classes || counts.len() != n_classes {
                        return Err(lines.err("leaf does not match the class list"));
                    }
                    Node::Leaf { class, counts }
                }
                _ => return Err(lines.err(format!("expected a node line, found '{l}'"))),
            };
            nodes.push(node);
        }
        let tree = DecisionTree::from_preorder(nodes).map_err(|m| lines.err(m))?;
        trees.push(tree);
    }
    let tail = lines.next("end")?;
    if tail.trim() != "end" {
        return Err(lines.err(format!("expected 'end', found '{tail}'")));
    }

    let model = ForestModel {
        trees,
        config: ForestConfig {
            n_trees,
            max_depth,
            min_samples_split,
            features_per_split,
            seed,
        },
        channel_selection,
        class_labels,
        feature_names,
    };
    model.validate().map_err(|e| lines.err(e.to_string()))?;
    Ok(model)
}
