use std::time::{SystemTime, UNIX_EPOCH};

use super::scenario::ScenarioFile;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Flat key=value description of one run. Everything except the timestamp
/// is a function of the invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub timestamp_unix: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, scenario: &ScenarioFile, seed: u64, outputs: Vec<String>) -> Self {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario_sha256: scenario.sha256(),
            seed,
            timestamp_unix,
            outputs,
        }
    }

    pub fn render(&self) -> String {
        format!(
            "tool_version={}\ncommand={}\nscenario_sha256={}\nseed={}\ntimestamp_unix={}\noutputs={}\n",
            self.tool_version,
            self.command,
            self.scenario_sha256,
            self.seed,
            self.timestamp_unix,
            self.outputs.join(",")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_flat_key_value() {
        let m = RunManifest {
            tool_version: "0.1.0".into(),
            command: "sweep".into(),
            scenario_sha256: "ab".into(),
            seed: 7,
            timestamp_unix: 1,
            outputs: vec!["sweep.csv".into()],
        };
        let text = m.render();
        assert!(text.lines().all(|l| l.split_once('=').is_some()));
        assert!(text.contains("seed=7\n"));
        assert!(text.ends_with("outputs=sweep.csv\n"));
    }
}
