//! Configuration file and environment overrides.

use std::path::Path;

use geobim_core::pipeline::Config;
use serde::{Deserialize, Serialize};

pub const ENV_PORT: &str = "GEOBIM_PORT";
pub const ENV_UPLOAD_CAP: &str = "GEOBIM_UPLOAD_CAP";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub port: u16,
    pub bind: String,
    /// Largest accepted upload body, bytes.
    pub upload_cap_bytes: usize,
    /// Allowed CORS origin; `*` allows any.
    pub cors_origin: String,
    /// Compute longer than this is answered with 202 and a poll token.
    pub async_threshold_ms: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { port: 8080, bind: "127.0.0.1".into(), upload_cap_bytes: 256 * 1024 * 1024, cors_origin: "*".into(), async_threshold_ms: 2000 }
    }
}

/// Pipeline settings at the top level plus a `[server]` table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    #[serde(flatten)]
    pub pipeline: Config,
    pub server: ServerConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Applies `GEOBIM_PORT` and `GEOBIM_UPLOAD_CAP`.
    pub fn apply_env(&mut self) -> Result<(), String> {
        self.apply_vars(std::env::var(ENV_PORT).ok(), std::env::var(ENV_UPLOAD_CAP).ok())
    }

    pub fn apply_vars(&mut self, port: Option<String>, cap: Option<String>) -> Result<(), String> {
        if let Some(p) = port {
            self.server.port = p.trim().parse().map_err(|_| format!("{ENV_PORT}={p:?} is not a port number"))?;
        }
        if let Some(c) = cap {
            self.server.upload_cap_bytes = c.trim().parse().map_err(|_| format!("{ENV_UPLOAD_CAP}={c:?} is not a byte count"))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let c = FileConfig::parse(
            r#"
reference_storey = "00"
strict = true

[footprint]
cut_offset = 1.2
hull_k = 9

[regulation]
max_height_m = 90.0

[[regulation.overhang_limits]]
label = "Hertekade side"
line = [[0.0, 20.0], [30.0, 20.0]]
side = "left"
limit_m = 10.0

[server]
port = 9000
"#,
        )
        .unwrap();
        assert_eq!(c.pipeline.reference_storey, "00");
        assert!(c.pipeline.strict);
        assert_eq!(c.pipeline.footprint.cut_offset, 1.2);
        assert_eq!(c.pipeline.footprint.dbscan_eps, 1.0);
        assert_eq!(c.pipeline.regulation.max_height_m, 90.0);
        assert_eq!(c.pipeline.regulation.base_max_height_m, 17.0);
        assert_eq!(c.pipeline.regulation.overhang_limits.len(), 1);
        assert_eq!(c.server.port, 9000);
    }

    #[test]
    fn defaults_round_trip() {
        let c = FileConfig::default();
        assert_eq!(FileConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn env_overrides() {
        let mut c = FileConfig::default();
        c.apply_vars(Some("9100".into()), Some("1024".into())).unwrap();
        assert_eq!((c.server.port, c.server.upload_cap_bytes), (9100, 1024));
        assert!(c.apply_vars(Some("x".into()), None).is_err());
    }

    #[test]
    fn unknown_values_rejected() {
        assert!(FileConfig::parse("[footprint]\nhull_k = \"seven\"\n").is_err());
    }
}
