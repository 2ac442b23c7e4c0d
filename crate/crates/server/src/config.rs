// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use fm2_core::game::{AuthorSplit, GameConfig};
use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    /// Corpus store directory.
    pub corpus: PathBuf,
    /// Sparse index file.
    pub index: PathBuf,
    pub event_log: PathBuf,
    /// Lifetime of a player token.
    pub session_ttl_secs: u64,
    /// `fsync` after every logged event.
    pub sync_log: bool,
    pub game: GameConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            corpus: "data/corpus".into(),
            index: "data/sparse.idx".into(),
            event_log: "data/events.jsonl".into(),
            session_ttl_secs: 24 * 3600,
            sync_log: true,
            game: GameConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ServiceError> {
    value
        .parse()
        .map_err(|_| ServiceError::Config(format!("{key}: cannot parse {value:?}")))
}

impl ServerConfig {
    /// Reads a TOML file (if given), then applies `FM2_*` environment overrides.
    pub fn load(path: Option<&Path>) -> Result<ServerConfig, ServiceError> {
        let mut config = match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p)
                    .map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&raw).map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?
            }
            None => ServerConfig::default(),
        };
        config.apply_env(std::env::vars())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ServiceError> {
        for (key, value) in vars {
            match key.as_str() {
                "FM2_HOST" => self.host = value,
                "FM2_PORT" => self.port = parse(&key, &value)?,
                "FM2_CORPUS" => self.corpus = value.into(),
                "FM2_INDEX" => self.index = value.into(),
                "FM2_EVENT_LOG" => self.event_log = value.into(),
                "FM2_SESSION_TTL_SECS" => self.session_ttl_secs = parse(&key, &value)?,
                "FM2_POT" => self.game.pot = parse(&key, &value)?,
                "FM2_HINT_COST" => self.game.hint_cost = parse(&key, &value)?,
                "FM2_LIKE_BONUS" => self.game.like_bonus = parse(&key, &value)?,
                "FM2_SEED" => self.game.seed = parse(&key, &value)?,
                "FM2_AUTHOR_SPLIT" => {
                    self.game.author_split = match value.as_str() {
                        "equal" => AuthorSplit::Equal,
                        "refuted_only" => AuthorSplit::RefutedOnly,
                        _ => return Err(ServiceError::Config(format!("{key}: expected equal or refuted_only"))),
                    }
                }
                _ => {}
            }
        }
        if self.game.hint_cost == 0 || self.game.pot == 0 {
            return Err(ServiceError::Config("pot and hint cost must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("fm2.toml");
        std::fs::write(&path, "port = 9000\n[game]\npot = 60\nauthor_split = \"refuted_only\"\n").unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        let mut c: ServerConfig = toml::from_str(&raw).unwrap();
        assert_eq!((c.port, c.game.pot, c.game.hint_cost), (9000, 60, 30));
        assert_eq!(c.game.author_split, AuthorSplit::RefutedOnly);
        c.apply_env([
            ("FM2_PORT".to_string(), "9100".to_string()),
            ("FM2_HINT_COST".into(), "20".into()),
            ("FM2_AUTHOR_SPLIT".into(), "equal".into()),
            ("UNRELATED".into(), "x".into()),
        ])
        .unwrap();
        assert_eq!((c.port, c.game.hint_cost), (9100, 20));
        assert_eq!(c.game.author_split, AuthorSplit::Equal);
        assert!(c.apply_env([("FM2_POT".to_string(), "lots".to_string())]).is_err());
    }
}
