//! Short textual specs for weights and potentials.
//!
//! Weights: `moebius`, `squarefree`, `constant:V`, `iid:SEED:v=p,...`,
//! `rotation:v=p,...`, `subst:SOURCE:letter=value,...` (SOURCE is
//! `thue-morse`, `fibonacci` or a substitution JSON file), `file:PATH`.
//! Potentials: `xy`, `affine:a,b,c` or a potential JSON file.

use std::path::Path;

use birkhoff::{FrequencyTable, Potential, Substitution, WeightSequence};

use crate::CliError;

fn parse_f64(what: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("{what}: cannot parse {s:?} as a number")))
}

/// `v=p,v=p,...`
pub fn parse_freqs(s: &str) -> Result<FrequencyTable, CliError> {
    let mut values = Vec::new();
    let mut freqs = Vec::new();
    for pair in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (v, p) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("frequency entry {pair:?} is not of the form value=probability")))?;
        values.push(parse_f64("frequency value", v)?);
        freqs.push(parse_f64("frequency", p)?);
    }
    Ok(FrequencyTable::exact(values, freqs)?)
}

pub fn load_substitution(source: &str) -> Result<Substitution, CliError> {
    Ok(match source {
        "thue-morse" => Substitution::thue_morse(),
        "fibonacci" => Substitution::fibonacci(),
        path => Substitution::from_json_file(Path::new(path))?,
    })
}

/// `letter=value,...`; every letter of the alphabet needs a value.
pub fn letter_values(sub: &Substitution, map: &str) -> Result<Vec<f64>, CliError> {
    let mut out = vec![None; sub.alphabet().len()];
    for pair in map.split(',').filter(|p| !p.trim().is_empty()) {
        let (l, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("map entry {pair:?} is not of the form letter=value")))?;
        let idx = sub
            .letter_index(l.trim())
            .ok_or_else(|| CliError::usage(format!("map: letter {:?} is not in the alphabet {:?}", l.trim(), sub.alphabet())))?;
        out[idx] = Some(parse_f64("map value", v)?);
    }
    out.iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::usage(format!("map: no value for letter {:?}", sub.alphabet()[i]))))
        .collect()
}

pub fn parse_weights(spec: &str) -> Result<WeightSequence, CliError> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "moebius" | "mobius" => WeightSequence::moebius(),
        "squarefree" => WeightSequence::squarefree(),
        "constant" => WeightSequence::constant(parse_f64("constant weight", rest)?)?,
        "iid" => {
            let (seed, table) = rest
                .split_once(':')
                .ok_or_else(|| CliError::usage("iid weights need iid:SEED:v=p,..."))?;
            let seed = seed
                .parse()
                .map_err(|_| CliError::usage(format!("iid seed {seed:?} is not an unsigned integer")))?;
            WeightSequence::iid(seed, parse_freqs(table)?)
        }
        "rotation" => WeightSequence::rotation(parse_freqs(rest)?),
        "subst" => {
            let (source, map) = rest
                .rsplit_once(':')
                .ok_or_else(|| CliError::usage("substitutive weights need subst:SOURCE:letter=value,..."))?;
            let sub = load_substitution(source)?;
            let values = letter_values(&sub, map)?;
            WeightSequence::substitutive(sub, values)?
        }
        "file" => WeightSequence::from_file(Path::new(rest))?,
        other => {
            return Err(CliError::usage(format!(
                "unknown weight kind {other:?}; expected moebius, squarefree, constant, iid, rotation, subst or file"
            )))
        }
    })
}

pub fn parse_potential(spec: &str) -> Result<Potential, CliError> {
    if spec == "xy" {
        return Ok(Potential::xy());
    }
    if let Some(rest) = spec.strip_prefix("affine:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(CliError::usage(format!("affine potential needs affine:a,b,c, got {spec:?}")));
        }
        let a = parse_f64("affine a", parts[0])?;
        let b = parse_f64("affine b", parts[1])?;
        let c = parse_f64("affine c", parts[2])?;
        return Ok(Potential::affine(a, b, c));
    }
    Ok(Potential::from_json_file(Path::new(spec))?)
}
