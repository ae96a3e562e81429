//! Single-file user store.
//!
//! Every change appends the full record as one JSON line; on load the last
//! line for a user wins. Reads share a lock, writes take it exclusively.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use assocpin_core::board::BoardSpec;
use assocpin_core::credential::{StoredCredential, Vault};
use assocpin_core::profile::ProfileQuestionBank;
use assocpin_core::session::UserEntry;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("user already exists")]
    Duplicate,
    #[error("unknown user")]
    Unknown,
    #[error("{path}:{line}: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("bad vault key file {0}")]
    BadKey(PathBuf),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub credential: StoredCredential,
    pub board: BoardSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileQuestionBank>,
    /// Visible cursor symbols per step; absent means the full board.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_l: Option<usize>,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub failed_attempts: u32,
}

impl UserRecord {
    pub fn new(
        credential: StoredCredential,
        board: BoardSpec,
        profile: Option<ProfileQuestionBank>,
        display_l: Option<usize>,
    ) -> Self {
        UserRecord {
            user_id: credential.user_id.clone(),
            credential,
            board,
            profile,
            display_l,
            created_at: unix_now(),
            failed_attempts: 0,
        }
    }

    pub fn entry(&self) -> UserEntry {
        UserEntry {
            spec: Arc::new(self.board.clone()),
            credential: self.credential.clone(),
            profile: self.profile.clone().map(Arc::new),
        }
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug)]
pub struct UserStore {
    users: RwLock<HashMap<String, UserRecord>>,
    file: Option<Mutex<File>>,
}

impl UserStore {
    pub fn in_memory() -> Self {
        UserStore {
            users: RwLock::new(HashMap::new()),
            file: None,
        }
    }

    /// Open or create the store at `path`, replaying its records.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let mut users = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: UserRecord =
                    serde_json::from_str(&line).map_err(|source| StoreError::Corrupt {
                        path: path.to_owned(),
                        line: i + 1,
                        source,
                    })?;
                users.insert(rec.user_id.clone(), rec);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(UserStore {
            users: RwLock::new(users),
            file: Some(Mutex::new(file)),
        })
    }

    pub fn len(&self) -> usize {
        self.users.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, user_id: &str) -> Option<UserRecord> {
        self.users.read().unwrap().get(user_id).cloned()
    }

    pub fn insert_new(&self, record: UserRecord) -> Result<(), StoreError> {
        let mut users = self.users.write().unwrap();
        if users.contains_key(&record.user_id) {
            return Err(StoreError::Duplicate);
        }
        self.append(&record)?;
        users.insert(record.user_id.clone(), record);
        Ok(())
    }

    /// Apply `f` to a stored record and persist the result.
    pub fn update(
        &self,
        user_id: &str,
        f: impl FnOnce(&mut UserRecord),
    ) -> Result<UserRecord, StoreError> {
        let mut users = self.users.write().unwrap();
        let mut rec = users.get(user_id).cloned().ok_or(StoreError::Unknown)?;
        f(&mut rec);
        self.append(&rec)?;
        users.insert(user_id.to_owned(), rec.clone());
        Ok(rec)
    }

    fn append(&self, record: &UserRecord) -> Result<(), StoreError> {
        if let Some(file) = &self.file {
            let mut line = serde_json::to_vec(record).expect("record serializes");
            line.push(b'\n');
            let mut f = file.lock().unwrap();
            f.write_all(&line)?;
            f.sync_data()?;
        }
        Ok(())
    }
}

/// Read the hex vault key at `path`, creating a fresh one if missing.
pub fn load_or_create_vault(path: &Path) -> Result<Vault, StoreError> {
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        let bytes = hex::decode(text.trim()).map_err(|_| StoreError::BadKey(path.to_owned()))?;
        let key: [u8; 32] = bytes
            .try_into()
            .map_err(|_| StoreError::BadKey(path.to_owned()))?;
        return Ok(Vault::new(key));
    }
    let key = Vault::generate_key();
    let mut opts = OpenOptions::new();
    opts.write(true).create_new(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut f = opts.open(path)?;
    writeln!(f, "{}", hex::encode(key))?;
    Ok(Vault::new(key))
}
