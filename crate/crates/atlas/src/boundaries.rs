//! Region boundary fixture (GeoJSON FeatureCollection keyed by `fips`).

use std::path::{Path, PathBuf};

use atlas_core::{RegionGroup, RegionId, Snapshot};
use serde_json::{json, Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum BoundaryError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone)]
pub struct Boundaries {
    features: Vec<(RegionId, Map<String, Value>)>,
}

impl Boundaries {
    pub fn load(path: &Path) -> Result<Self, BoundaryError> {
        let text = std::fs::read_to_string(path).map_err(|source| BoundaryError::Read {
            path: path.into(),
            source,
        })?;
        Self::from_json(&text).map_err(|message| BoundaryError::Invalid {
            path: path.into(),
            message,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
            return Err("not a FeatureCollection".into());
        }
        let items = doc
            .get("features")
            .and_then(Value::as_array)
            .ok_or("missing `features` array")?;
        let mut features = Vec::with_capacity(items.len());
        for (i, f) in items.iter().enumerate() {
            let Some(obj) = f
                .as_object()
                .filter(|o| o.get("type").and_then(Value::as_str) == Some("Feature"))
            else {
                return Err(format!("feature {i} is not a Feature"));
            };
            let fips = obj
                .get("properties")
                .and_then(|p| p.get("fips"))
                .and_then(Value::as_str)
                .ok_or_else(|| format!("feature {i} has no string `fips` property"))?;
            let id: RegionId = fips.parse().map_err(|e| format!("feature {i}: {e}"))?;
            features.push((id, obj.clone()));
        }
        Ok(Self { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.features.iter().map(|(id, _)| *id)
    }

    /// FeatureCollection restricted to `group` (all features when `None`),
    /// with `fips`, `name`, `state` and `population` set on every feature.
    pub fn collection(&self, group: Option<RegionGroup>, snapshot: &Snapshot) -> Value {
        let features: Vec<Value> = self
            .features
            .iter()
            .filter(|(id, _)| group.is_none_or(|g| g.contains(*id)))
            .map(|(id, feature)| {
                let mut feature = feature.clone();
                let props = feature
                    .entry("properties")
                    .or_insert_with(|| Value::Object(Map::new()))
                    .as_object_mut()
                    .expect("validated properties object");
                let name = props
                    .get("name")
                    .and_then(Value::as_str)
                    .map(str::to_owned)
                    .unwrap_or_else(|| snapshot.name(*id));
                props.insert("fips".into(), json!(id.to_string()));
                props.insert("name".into(), json!(name));
                props.insert("state".into(), json!(id.state_info().postal));
                props.insert("population".into(), json!(snapshot.population(*id)));
                Value::Object(feature)
            })
            .collect();
        json!({ "type": "FeatureCollection", "features": features })
    }
}
