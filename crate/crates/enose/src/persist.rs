//! Versioned plain-text model files: network weights plus the scaler that
//! normalized the training data.
//!
//! Layout, one whitespace-separated row per line, floats at full round-trip
//! precision:
//!
//! ```text
//! ENOSE-MODEL v1
//! dims 7 <Z> 5
//! activation exact              (or: activation table <lower> <upper> <N>)
//! scaler <7 mins> <7 maxs>
//! <Z rows of 7 floats>          W1, one hidden unit per row
//! <Z floats>                    b1
//! <5 rows of Z floats>          W2, one output unit per row
//! <5 floats>                    b2
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::activation::SigmoidTable;
use crate::data::{ChemicalClass, CHANNEL_COUNT};
use crate::network::{ActivationMode, Network, NetworkConfig};
use crate::scaler::Scaler;

pub const MODEL_MAGIC: &str = "ENOSE-MODEL v1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unsupported model version: first line {found:?}, expected {MODEL_MAGIC:?}")]
    UnsupportedVersion { found: String },
    #[error("corrupt model file at line {line}: {what}")]
    Corrupt { line: usize, what: String },
    #[error("dimension mismatch at line {line}: {what}")]
    DimensionMismatch { line: usize, what: String },
    #[error("model files store 7-Z-5 networks; this network is {input}-{hidden}-{output}")]
    UnsupportedShape {
        input: usize,
        hidden: usize,
        output: usize,
    },
}

/// Render a network and its scaler in the model file format.
pub fn model_to_string(network: &Network, scaler: &Scaler) -> Result<String, ModelFileError> {
    let cfg = &network.config;
    if !cfg.is_canonical() {
        return Err(ModelFileError::UnsupportedShape {
            input: cfg.input_size,
            hidden: cfg.hidden_size,
            output: cfg.output_size,
        });
    }
    let z = cfg.hidden_size;
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    out.push_str(&format!("dims {} {} {}\n", cfg.input_size, z, cfg.output_size));
    match &cfg.activation {
        ActivationMode::Exact => out.push_str("activation exact\n"),
        ActivationMode::Table(table) => out.push_str(&format!(
            "activation table {} {} {}\n",
            table.lower(),
            table.upper(),
            table.len()
        )),
    }
    out.push_str("scaler");
    for v in scaler.min().iter().chain(scaler.max()) {
        out.push_str(&format!(" {v}"));
    }
    out.push('\n');
    for row in network.w1.chunks(cfg.input_size) {
        push_row(&mut out, row);
    }
    push_row(&mut out, &network.b1);
    for row in network.w2.chunks(z) {
        push_row(&mut out, row);
    }
    push_row(&mut out, &network.b2);
    Ok(out)
}

fn push_row(out: &mut String, row: &[f64]) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        out.push_str(&format!("{v}"));
        first = false;
    }
    out.push('\n');
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ModelFileError> {
        loop {
            match self.lines.next() {
                Some(line) => {
                    self.line_no += 1;
                    let trimmed = line.trim_end();
                    if trimmed.is_empty() {
                        continue;
                    }
                    return Ok((self.line_no, trimmed));
                }
                None => {
                    return Err(ModelFileError::Corrupt {
                        line: self.line_no,
                        what: format!("unexpected end of file, expected {what}"),
                    })
                }
            }
        }
    }

    fn rest_is_empty(&mut self) -> bool {
        self.lines.all(|l| l.trim_end().is_empty())
    }
}

fn parse_floats(line_no: usize, text: &str, what: &str) -> Result<Vec<f64>, ModelFileError> {
    let mut values = Vec::new();
    for token in text.split_whitespace() {
        let v: f64 = token.parse().map_err(|_| ModelFileError::Corrupt {
            line: line_no,
            what: format!("bad number {token:?} in {what}"),
        })?;
        if !v.is_finite() {
            return Err(ModelFileError::Corrupt {
                line: line_no,
                what: format!("non-finite value in {what}"),
            });
        }
        values.push(v);
    }
    Ok(values)
}

fn expect_row(
    reader: &mut LineReader,
    expected: usize,
    what: &str,
) -> Result<Vec<f64>, ModelFileError> {
    let (line_no, line) = reader.next(what)?;
    let values = parse_floats(line_no, line, what)?;
    if values.len() != expected {
        return Err(ModelFileError::DimensionMismatch {
            line: line_no,
            what: format!("expected {expected} values for {what}, found {}", values.len()),
        });
    }
    Ok(values)
}

/// Parse the model file format back into a network and scaler.
pub fn model_from_str(text: &str) -> Result<(Network, Scaler), ModelFileError> {
    let mut reader = LineReader {
        lines: text.lines(),
        line_no: 0,
    };

    let (_, magic) = reader.next("header")?;
    if magic != MODEL_MAGIC {
        return Err(ModelFileError::UnsupportedVersion {
            found: magic.to_string(),
        });
    }

    let (line_no, dims_line) = reader.next("dims line")?;
    let dims: Vec<&str> = dims_line.split_whitespace().collect();
    if dims.len() != 4 || dims[0] != "dims" {
        return Err(ModelFileError::Corrupt {
            line: line_no,
            what: format!("expected \"dims <in> <hidden> <out>\", found {dims_line:?}"),
        });
    }
    let parse_dim = |s: &str| -> Result<usize, ModelFileError> {
        s.parse().map_err(|_| ModelFileError::Corrupt {
            line: line_no,
            what: format!("bad dimension {s:?}"),
        })
    };
    let input = parse_dim(dims[1])?;
    let hidden = parse_dim(dims[2])?;
    let output = parse_dim(dims[3])?;
    if input != CHANNEL_COUNT || output != ChemicalClass::COUNT {
        return Err(ModelFileError::UnsupportedShape {
            input,
            hidden,
            output,
        });
    }
    if hidden == 0 {
        return Err(ModelFileError::Corrupt {
            line: line_no,
            what: "hidden layer size must be at least 1".to_string(),
        });
    }

    let (line_no, act_line) = reader.next("activation line")?;
    let act: Vec<&str> = act_line.split_whitespace().collect();
    let activation = match act.as_slice() {
        ["activation", "exact"] => ActivationMode::Exact,
        ["activation", "table", lower, upper, entries] => {
            let lower: f64 = lower.parse().map_err(|_| ModelFileError::Corrupt {
                line: line_no,
                what: format!("bad table lower bound {lower:?}"),
            })?;
            let upper: f64 = upper.parse().map_err(|_| ModelFileError::Corrupt {
                line: line_no,
                what: format!("bad table upper bound {upper:?}"),
            })?;
            let entries: usize = entries.parse().map_err(|_| ModelFileError::Corrupt {
                line: line_no,
                what: format!("bad table entry count {entries:?}"),
            })?;
            let table =
                SigmoidTable::new(lower, upper, entries).map_err(|e| ModelFileError::Corrupt {
                    line: line_no,
                    what: e.to_string(),
                })?;
            ActivationMode::Table(table)
        }
        _ => {
            return Err(ModelFileError::Corrupt {
                line: line_no,
                what: format!("expected \"activation exact|table ...\", found {act_line:?}"),
            })
        }
    };

    let (line_no, scaler_line) = reader.next("scaler line")?;
    let scaler_body = scaler_line
        .strip_prefix("scaler")
        .ok_or_else(|| ModelFileError::Corrupt {
            line: line_no,
            what: format!("expected scaler line, found {scaler_line:?}"),
        })?;
    let bounds = parse_floats(line_no, scaler_body, "scaler bounds")?;
    if bounds.len() != 2 * CHANNEL_COUNT {
        return Err(ModelFileError::DimensionMismatch {
            line: line_no,
            what: format!(
                "expected {} scaler bounds, found {}",
                2 * CHANNEL_COUNT,
                bounds.len()
            ),
        });
    }
    let mut min = [0.0; CHANNEL_COUNT];
    let mut max = [0.0; CHANNEL_COUNT];
    min.copy_from_slice(&bounds[..CHANNEL_COUNT]);
    max.copy_from_slice(&bounds[CHANNEL_COUNT..]);
    let scaler = Scaler::from_bounds(min, max).map_err(|e| ModelFileError::Corrupt {
        line: line_no,
        what: e.to_string(),
    })?;

    let config = NetworkConfig::new(hidden)
        .expect("hidden >= 1 checked")
        .with_activation(activation);
    let mut network = Network::zeroed(config);
    for j in 0..hidden {
        let row = expect_row(&mut reader, input, &format!("W1 row {j}"))?;
        network.w1[j * input..(j + 1) * input].copy_from_slice(&row);
    }
    network.b1 = expect_row(&mut reader, hidden, "b1")?;
    for k in 0..output {
        let row = expect_row(&mut reader, hidden, &format!("W2 row {k}"))?;
        network.w2[k * hidden..(k + 1) * hidden].copy_from_slice(&row);
    }
    network.b2 = expect_row(&mut reader, output, "b2")?;

    if !reader.rest_is_empty() {
        return Err(ModelFileError::Corrupt {
            line: reader.line_no + 1,
            what: "trailing content after b2".to_string(),
        });
    }
    Ok((network, scaler))
}

pub fn save_model(
    network: &Network,
    scaler: &Scaler,
    path: impl AsRef<Path>,
) -> Result<(), ModelFileError> {
    let path = path.as_ref();
    let text = model_to_string(network, scaler)?;
    fs::write(path, text).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Network, Scaler), ModelFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_str(&text)
}
