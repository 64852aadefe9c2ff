//! Scenario files: the model fields at the top level plus an
//! `information_structure` object.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use teamdp::model::Violation;
use teamdp::{validate_model, InformationStructure, TeamModel};

use crate::error::CliError;

pub struct Scenario {
    pub model: TeamModel,
    pub structure: InformationStructure,
    /// Hex SHA-256 of the file bytes.
    pub hash: String,
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let (model, structure) = parse(&bytes)?;
    Ok(Scenario { model, structure, hash })
}

pub fn parse(bytes: &[u8]) -> Result<(TeamModel, InformationStructure), CliError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| CliError::Malformed(e.to_string()))?;
    let Value::Object(mut fields) = value else {
        return Err(CliError::Malformed("scenario must be a JSON object".into()));
    };
    let structure = fields
        .remove("information_structure")
        .ok_or_else(|| CliError::Malformed("missing field `information_structure`".into()))?;
    let structure = InformationStructure::deserialize(structure)
        .map_err(|e| CliError::Malformed(format!("information_structure: {e}")))?;
    let model = TeamModel::deserialize(Value::Object(fields)).map_err(|e| CliError::Malformed(e.to_string()))?;
    Ok((model, structure))
}

pub fn violations(model: &TeamModel, structure: &InformationStructure) -> Vec<Violation> {
    let mut out = validate_model(model);
    out.extend(structure.validate(model.num_members));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = include_str!("../../../scenarios/toy.json");

    #[test]
    fn toy_scenario_is_valid() {
        let (m, s) = parse(TOY.as_bytes()).unwrap();
        assert!(violations(&m, &s).is_empty());
        let toy = teamdp::random::toy_model();
        assert_eq!((m.states.clone(), m.horizon), (toy.states.clone(), toy.horizon));
        for (x, rows) in m.transition.iter().enumerate() {
            for (ju, row) in rows.iter().enumerate() {
                assert!(teamdp::numeric::max_abs_diff(row, toy.transition_row(x, ju)) < 1e-15);
            }
        }
    }

    #[test]
    fn missing_structure_is_malformed() {
        let mut v: Value = serde_json::from_str(TOY).unwrap();
        v.as_object_mut().unwrap().remove("information_structure");
        let err = parse(v.to_string().as_bytes()).err().unwrap();
        assert!(matches!(err, CliError::Malformed(_)));
    }

    #[test]
    fn unknown_fields_are_malformed() {
        let mut v: Value = serde_json::from_str(TOY).unwrap();
        v["extra"] = Value::Bool(true);
        assert!(matches!(parse(v.to_string().as_bytes()), Err(CliError::Malformed(_))));
    }

    #[test]
    fn bad_probabilities_are_violations() {
        let mut v: Value = serde_json::from_str(TOY).unwrap();
        v["initial_dist"] = serde_json::json!([0.7, 0.7]);
        let (m, s) = parse(v.to_string().as_bytes()).unwrap();
        let found = violations(&m, &s);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].path, "initial_dist");
    }
}
