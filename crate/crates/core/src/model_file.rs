//! Plain-text MDP format.
//!
//! ```text
//! mdp
//! # comment
//! label goal goal reached
//! state s0 start init
//! state s1 goal
//! trans s0 go s1 0.9
//! trans s0 go s0 0.1
//! trans s1 go s1 1
//! ```
//!
//! The header must come first; everything else is order-insensitive. A label
//! without a `label` line gets the singleton proposition set `{name}`.
//! Inputs are ordered by first appearance in `trans` lines, outputs by first
//! appearance in `label` or `state` lines.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::mdp::{Alphabet, Distribution, Mdp, MdpError, OutputSymbol, PROB_TOLERANCE};

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: MdpError,
    },
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn syntax(line: usize, msg: impl Into<String>) -> ModelFileError {
    ModelFileError::Syntax {
        line,
        msg: msg.into(),
    }
}

pub fn parse_mdp(text: &str) -> Result<Mdp, ModelFileError> {
    let mut header_seen = false;
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<OutputSymbol> = Vec::new();
    let mut declared: HashMap<String, usize> = HashMap::new();
    let mut states: Vec<(String, String, usize)> = Vec::new();
    let mut initial: Option<(String, usize)> = None;
    let mut trans: Vec<(String, String, String, f64, usize)> = Vec::new();

    let touch_output = |outputs: &mut Vec<OutputSymbol>, name: &str| {
        if !outputs.iter().any(|o| o.name == name) {
            outputs.push(OutputSymbol::named(name));
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if !header_seen {
            if toks != ["mdp"] {
                return Err(syntax(line_no, "expected header `mdp`"));
            }
            header_seen = true;
            continue;
        }
        match toks[0] {
            "mdp" => return Err(syntax(line_no, "duplicate header")),
            "label" => {
                if toks.len() < 2 {
                    return Err(syntax(line_no, "`label` needs a name"));
                }
                let name = toks[1];
                if declared.insert(name.to_string(), line_no).is_some() {
                    return Err(syntax(line_no, format!("label {name} declared twice")));
                }
                let props: BTreeSet<String> = if toks.len() == 2 {
                    BTreeSet::from([name.to_string()])
                } else {
                    toks[2..].iter().map(|s| s.to_string()).collect()
                };
                touch_output(&mut outputs, name);
                let slot = outputs.iter_mut().find(|o| o.name == name).unwrap();
                slot.props = props;
            }
            "state" => {
                let init = match toks.len() {
                    3 => false,
                    4 if toks[3] == "init" => true,
                    _ => return Err(syntax(line_no, "expected `state <name> <label> [init]`")),
                };
                let name = toks[1].to_string();
                if states.iter().any(|(n, _, _)| *n == name) {
                    return Err(syntax(line_no, format!("state {name} declared twice")));
                }
                touch_output(&mut outputs, toks[2]);
                if init {
                    if let Some((prev, l)) = &initial {
                        return Err(syntax(
                            line_no,
                            format!("second initial state (first was {prev} on line {l})"),
                        ));
                    }
                    initial = Some((name.clone(), line_no));
                }
                states.push((name, toks[2].to_string(), line_no));
            }
            "trans" => {
                if toks.len() != 5 {
                    return Err(syntax(line_no, "expected `trans <src> <input> <dst> <prob>`"));
                }
                let prob: f64 = toks[4]
                    .parse()
                    .map_err(|_| syntax(line_no, format!("bad probability `{}`", toks[4])))?;
                if !(0.0..=1.0 + PROB_TOLERANCE).contains(&prob) {
                    return Err(syntax(line_no, format!("probability {prob} outside [0, 1]")));
                }
                if !inputs.iter().any(|i| i == toks[2]) {
                    inputs.push(toks[2].to_string());
                }
                trans.push((
                    toks[1].to_string(),
                    toks[2].to_string(),
                    toks[3].to_string(),
                    prob,
                    line_no,
                ));
            }
            other => return Err(syntax(line_no, format!("unknown directive `{other}`"))),
        }
    }
    if !header_seen {
        return Err(syntax(1, "expected header `mdp`"));
    }
    if states.is_empty() {
        return Err(MdpError::Empty.into());
    }
    let Some((init_name, _)) = initial else {
        return Err(syntax(text.lines().count().max(1), "no state marked `init`"));
    };

    let state_index: HashMap<&str, usize> = states
        .iter()
        .enumerate()
        .map(|(i, (n, _, _))| (n.as_str(), i))
        .collect();
    let alphabet = Alphabet { inputs, outputs };
    let n = states.len();
    let k = alphabet.inputs.len();
    let mut entries: Vec<Vec<Vec<(usize, f64)>>> = vec![vec![Vec::new(); k]; n];
    let mut first_line: Vec<Vec<usize>> = vec![vec![0; k]; n];
    for (src, input, dst, p, line_no) in &trans {
        let s = *state_index
            .get(src.as_str())
            .ok_or_else(|| syntax(*line_no, format!("unknown state {src}")))?;
        let t = *state_index
            .get(dst.as_str())
            .ok_or_else(|| syntax(*line_no, format!("unknown state {dst}")))?;
        let a = alphabet.input_index(input).expect("input registered while reading");
        if entries[s][a].is_empty() {
            first_line[s][a] = *line_no;
        }
        entries[s][a].push((t, *p));
    }
    for (s, row) in entries.iter().enumerate() {
        for (a, e) in row.iter().enumerate() {
            if e.is_empty() {
                return Err(ModelFileError::Invalid {
                    line: states[s].2,
                    source: MdpError::MissingTransition {
                        state: states[s].0.clone(),
                        input: alphabet.inputs[a].clone(),
                    },
                });
            }
            let sum: f64 = e.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(ModelFileError::Invalid {
                    line: first_line[s][a],
                    source: MdpError::BadSum {
                        state: states[s].0.clone(),
                        input: alphabet.inputs[a].clone(),
                        sum,
                    },
                });
            }
        }
    }
    let labels = states
        .iter()
        .map(|(_, l, _)| alphabet.output_index(l).expect("label registered while reading"))
        .collect();
    let names = states.iter().map(|(n, _, _)| n.clone()).collect();
    let trans = entries
        .into_iter()
        .map(|row| row.into_iter().map(Distribution::new).collect())
        .collect();
    let mut mdp = Mdp::from_parts(alphabet, names, labels, state_index[init_name.as_str()], trans)?;
    mdp.renormalize()?;
    Ok(mdp)
}

fn token(s: &str) -> String {
    if s.is_empty() {
        return "_".to_string();
    }
    s.split_whitespace().collect::<Vec<_>>().join("_")
}

/// Serializes in the text format. Every output gets an explicit `label` line
/// so the alphabet survives a round trip.
pub fn write_mdp(mdp: &Mdp) -> String {
    let mut out = String::from("mdp\n");
    let al = mdp.alphabet();
    for o in &al.outputs {
        let _ = write!(out, "label {}", token(&o.name));
        for p in &o.props {
            let _ = write!(out, " {}", token(p));
        }
        out.push('\n');
    }
    for s in 0..mdp.num_states() {
        let _ = write!(
            out,
            "state {} {}",
            token(mdp.state_name(s)),
            token(al.output_name(mdp.label(s)))
        );
        if s == mdp.initial() {
            out.push_str(" init");
        }
        out.push('\n');
    }
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_inputs() {
            for &(t, p) in mdp.dist(s, a).support() {
                let _ = writeln!(
                    out,
                    "trans {} {} {} {}",
                    token(mdp.state_name(s)),
                    token(al.input_name(a)),
                    token(mdp.state_name(t)),
                    p
                );
            }
        }
    }
    out
}

pub fn load_mdp(path: impl AsRef<Path>) -> Result<Mdp, ModelFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mdp(&text)
}

pub fn save_mdp(mdp: &Mdp, path: impl AsRef<Path>) -> Result<(), ModelFileError> {
    let path = path.as_ref();
    std::fs::write(path, write_mdp(mdp)).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::two_state_example;

    #[test]
    fn round_trip_reference_mdp() {
        let m = two_state_example();
        let text = write_mdp(&m);
        let back = parse_mdp(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sum_below_one_reports_line() {
        let text = "mdp\nstate p p init\n# c\ntrans p a p 0.49\ntrans p a p 0.5\n";
        match parse_mdp(text) {
            Err(ModelFileError::Invalid { line, source }) => {
                assert_eq!(line, 4);
                assert!(matches!(source, MdpError::BadSum { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_and_init_rules() {
        assert!(parse_mdp("state p p init\n").is_err());
        assert!(parse_mdp("mdp\nstate p p\ntrans p a p 1\n").is_err());
        assert!(parse_mdp("mdp\nstate p p init\nstate q q init\ntrans p a p 1\ntrans q a q 1\n").is_err());
        let err = parse_mdp("mdp\nstate p p init\ntrans p a r 1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn label_props_and_order_insensitivity() {
        let text = "mdp\ntrans s b s 1\ntrans s a s 1\nstate s hot init\nlabel hot warm danger\n";
        let m = parse_mdp(text).unwrap();
        assert_eq!(m.alphabet().inputs, vec!["b", "a"]);
        assert!(m.props(0).contains("danger"));
        assert!(!m.props(0).contains("hot"));
    }

    #[test]
    fn tiny_renormalization_is_accepted() {
        let m = parse_mdp("mdp\nstate p p init\ntrans p a p 0.3333333333\ntrans p a p 0.6666666667\n")
            .unwrap();
        assert_eq!(m.dist(0, 0).total(), 1.0);
    }
}
