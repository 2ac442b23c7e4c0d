// SPDX-License-Identifier: Apache-2.0

//! Opaque player tokens. The game only ever sees a pseudonym derived from
//! the token, so ledgers and logs carry nothing a player typed in.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ServiceError;

pub const TOKEN_HEADER: &str = "x-player-token";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Author,
    Voter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSession {
    pub player_id: String,
    pub role: Role,
    /// Milliseconds since the Unix epoch.
    pub expires_at: u64,
}

pub fn pseudonym(token: &str) -> String {
    let digest = Sha256::digest(token.as_bytes());
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("player-{hex}")
}

fn valid_token(token: &str) -> bool {
    (8..=128).contains(&token.len()) && token.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: HashMap<String, ApiSession>,
    ttl_ms: u64,
}

impl SessionStore {
    pub fn new(ttl_secs: u64) -> SessionStore {
        SessionStore {
            sessions: HashMap::new(),
            ttl_ms: ttl_secs.saturating_mul(1000),
        }
    }

    /// Starts a flow in `role`. Without a token a fresh one is minted.
    /// Returns the token and its session.
    pub fn begin(&mut self, token: Option<&str>, role: Role, now_ms: u64) -> Result<(String, ApiSession), ServiceError> {
        let token = match token {
            Some(t) if !valid_token(t) => {
                return Err(ServiceError::Unauthorized("malformed player token".into()));
            }
            Some(t) => t.to_string(),
            None => format!("{:032x}", rand::random::<u128>()),
        };
        let ttl = self.ttl_ms;
        let session = self.sessions.entry(token.clone()).or_insert_with(|| ApiSession {
            player_id: pseudonym(&token),
            role,
            expires_at: now_ms.saturating_add(ttl),
        });
        if session.expires_at <= now_ms {
            return Err(ServiceError::Unauthorized("player token expired".into()));
        }
        session.role = role;
        Ok((token, session.clone()))
    }

    /// Resolves a token for a follow-up call; `role` restricts which flows
    /// may use it.
    pub fn check(&self, token: Option<&str>, role: Option<Role>, now_ms: u64) -> Result<ApiSession, ServiceError> {
        let token = token.ok_or_else(|| ServiceError::Unauthorized(format!("missing {TOKEN_HEADER} header")))?;
        let session = self
            .sessions
            .get(token)
            .ok_or_else(|| ServiceError::Unauthorized("unknown player token".into()))?;
        if session.expires_at <= now_ms {
            return Err(ServiceError::Unauthorized("player token expired".into()));
        }
        if let Some(r) = role {
            if session.role != r {
                return Err(ServiceError::Forbidden(format!("token is in {:?} mode", session.role)));
            }
        }
        Ok(session.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expiry_and_roles() {
        let mut store = SessionStore::new(10);
        let (token, s) = store.begin(None, Role::Author, 0).unwrap();
        assert_eq!(token.len(), 32);
        assert!(s.player_id.starts_with("player-"));
        assert!(!s.player_id.contains(&token));
        assert!(store.check(Some(&token), Some(Role::Author), 5_000).is_ok());
        assert!(matches!(store.check(Some(&token), Some(Role::Voter), 5_000), Err(ServiceError::Forbidden(_))));
        assert!(matches!(store.check(Some(&token), None, 10_000), Err(ServiceError::Unauthorized(_))));
        assert!(store.begin(Some(&token), Role::Voter, 11_000).is_err());
        assert!(store.check(None, None, 0).is_err());
        assert!(store.begin(Some("bad token!"), Role::Voter, 0).is_err());
    }
}
