//! SRCKPT checkpoint files.
//!
//! Layout: the text header line `SRCKPT 1`, then per network a text line
//! `net <name> <dim0> <dim1> ...`, a text line with the count of 64-bit
//! parameters, and that many little-endian IEEE-754 values in layer order
//! (weights row-major, then biases). Networks appear in the fixed order
//! actor, critic, target_actor, target_critic. Round trips are bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::ddpg::Agent;
use crate::net::{Mlp, OutputActivation};
use crate::{Error, Result};

const MAGIC: &str = "SRCKPT 1";
const NET_NAMES: [&str; 4] = ["actor", "critic", "target_actor", "target_critic"];

pub fn save_checkpoint(agent: &Agent, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MAGIC}")?;
    for (name, net) in NET_NAMES.iter().zip([
        &agent.actor,
        &agent.critic,
        &agent.target_actor,
        &agent.target_critic,
    ]) {
        write_net(&mut w, name, net)?;
    }
    w.flush()?;
    Ok(())
}

fn write_net<W: Write>(w: &mut W, name: &str, net: &Mlp) -> Result<()> {
    let dims: Vec<String> = net.layer_dims().iter().map(|d| d.to_string()).collect();
    writeln!(w, "net {name} {}", dims.join(" "))?;
    writeln!(w, "{}", net.num_params())?;
    for l in 0..net.weights().len() {
        for &v in &net.weights()[l] {
            w.write_all(&v.to_le_bytes())?;
        }
        for &v in &net.biases()[l] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Loads an agent saved by [`save_checkpoint`]. Output activations are
/// implied by the network role: actors are tanh, critics identity. Optimizer
/// moments start fresh (checkpoints carry parameters only).
pub fn load_checkpoint(path: &Path) -> Result<Agent> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_line(&mut r)?;
    if header != MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint header {header:?}, expected {MAGIC:?}"
        )));
    }
    let mut nets = Vec::with_capacity(4);
    for expected in NET_NAMES {
        let (name, net) = read_net(&mut r)?;
        if name != expected {
            return Err(Error::Format(format!(
                "expected net {expected:?}, found {name:?}"
            )));
        }
        nets.push(net);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after last network".into()));
    }
    let target_critic = nets.pop().unwrap();
    let target_actor = nets.pop().unwrap();
    let critic = nets.pop().unwrap();
    let actor = nets.pop().unwrap();
    let defaults = crate::ddpg::AgentConfig::default();
    Agent::from_networks(
        actor,
        critic,
        target_actor,
        target_critic,
        defaults.lr_actor,
        defaults.lr_critic,
    )
}

fn read_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut line = String::new();
    let n = r.read_line(&mut line)?;
    if n == 0 {
        return Err(Error::Format("unexpected end of checkpoint".into()));
    }
    Ok(line.trim_end_matches('\n').to_string())
}

fn read_net<R: BufRead>(r: &mut R) -> Result<(String, Mlp)> {
    let header = read_line(r)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("net") {
        return Err(Error::Format(format!("expected net line, got {header:?}")));
    }
    let name = parts
        .next()
        .ok_or_else(|| Error::Format("net line missing a name".into()))?
        .to_string();
    let dims: Vec<usize> = parts
        .map(|p| {
            p.parse::<usize>()
                .map_err(|e| Error::Format(format!("bad dim {p:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(Error::Format(format!("net {name:?} has too few dims")));
    }

    let count_line = read_line(r)?;
    let count: usize = count_line
        .parse()
        .map_err(|e| Error::Format(format!("bad parameter count {count_line:?}: {e}")))?;
    let expected: usize = dims.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
    if count != expected {
        return Err(Error::Format(format!(
            "net {name:?} declares {count} parameters, dims imply {expected}"
        )));
    }

    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes).map_err(|_| {
        Error::Format(format!("net {name:?} truncated, wanted {count} parameters"))
    })?;
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));

    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        weights.push((&mut values).take(pair[0] * pair[1]).collect());
        biases.push((&mut values).take(pair[1]).collect());
    }

    let activation = match name.as_str() {
        "actor" | "target_actor" => OutputActivation::Tanh,
        "critic" | "target_critic" => OutputActivation::Identity,
        other => return Err(Error::Format(format!("unknown net name {other:?}"))),
    };
    Ok((name, Mlp::from_parts(dims, activation, weights, biases)?))
}
