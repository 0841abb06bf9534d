//! Directory-per-kind record store. One JSON file per record, written to a
//! temporary name, synced, then renamed into place.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Prescription,
    Program,
    Scenario,
    SessionLog,
    EvalReport,
    Verdict,
}

impl Kind {
    pub const ALL: [Kind; 6] =
        [Kind::Prescription, Kind::Program, Kind::Scenario, Kind::SessionLog, Kind::EvalReport, Kind::Verdict];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Prescription => "prescription",
            Kind::Program => "program",
            Kind::Scenario => "scenario",
            Kind::SessionLog => "session_log",
            Kind::EvalReport => "eval_report",
            Kind::Verdict => "verdict",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub kind: Kind,
    pub id: String,
    pub created_at: String,
    /// Hex SHA-256 of the compact JSON of `payload`.
    pub digest: String,
    pub payload: Value,
}

impl Record {
    pub fn verify(&self) -> bool {
        digest(&self.payload) == self.digest
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no {kind} with id {id}")]
    NotFound { kind: &'static str, id: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

pub fn digest(payload: &Value) -> String {
    let bytes = serde_json::to_vec(payload).expect("JSON values serialize");
    hex::encode(Sha256::digest(bytes))
}

const TMP_PREFIX: &str = ".tmp-";

pub struct Store {
    root: PathBuf,
    records: RwLock<HashMap<Kind, BTreeMap<String, Record>>>,
    quarantined: RwLock<Vec<String>>,
    ids: Mutex<ulid::Generator>,
    writes: Mutex<()>,
}

impl Store {
    /// Open or create a store. Leftover temporary files are removed and
    /// records that fail to parse or verify are moved to `quarantine/`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        let quarantine = root.join("quarantine");
        fs::create_dir_all(&quarantine).map_err(io(&quarantine))?;
        let mut records = HashMap::new();
        let mut quarantined = Vec::new();
        for kind in Kind::ALL {
            let dir = root.join(kind.as_str());
            fs::create_dir_all(&dir).map_err(io(&dir))?;
            let mut map = BTreeMap::new();
            for entry in fs::read_dir(&dir).map_err(io(&dir))? {
                let path = entry.map_err(io(&dir))?.path();
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                if name.starts_with(TMP_PREFIX) {
                    fs::remove_file(&path).map_err(io(&path))?;
                    continue;
                }
                let good = fs::read(&path)
                    .ok()
                    .and_then(|b| serde_json::from_slice::<Record>(&b).ok())
                    .filter(|r| r.verify() && r.kind == kind && format!("{}.json", r.id) == name);
                match good {
                    Some(r) => {
                        map.insert(r.id.clone(), r);
                    }
                    None => {
                        let to = quarantine.join(format!("{}-{name}", kind.as_str()));
                        fs::rename(&path, &to).map_err(io(&path))?;
                        quarantined.push(format!("{}/{name}", kind.as_str()));
                    }
                }
            }
            records.insert(kind, map);
        }
        Ok(Store {
            root,
            records: RwLock::new(records),
            quarantined: RwLock::new(quarantined),
            ids: Mutex::new(ulid::Generator::new()),
            writes: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn new_id(&self) -> String {
        let mut g = self.ids.lock().expect("id lock");
        match g.generate() {
            Ok(u) => u.to_string(),
            Err(_) => ulid::Ulid::new().to_string(),
        }
    }

    pub fn put(&self, kind: Kind, payload: Value) -> Result<Record, StoreError> {
        let record = Record {
            kind,
            id: self.new_id(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            digest: digest(&payload),
            payload,
        };
        let _guard = self.writes.lock().expect("write lock");
        let dir = self.root.join(kind.as_str());
        let tmp = dir.join(format!("{TMP_PREFIX}{}", record.id));
        let dest = dir.join(format!("{}.json", record.id));
        {
            let mut f = File::create(&tmp).map_err(io(&tmp))?;
            f.write_all(&serde_json::to_vec_pretty(&record).expect("records serialize")).map_err(io(&tmp))?;
            f.sync_all().map_err(io(&tmp))?;
        }
        fs::rename(&tmp, &dest).map_err(io(&dest))?;
        if let Ok(d) = File::open(&dir) {
            let _ = d.sync_all();
        }
        self.records.write().expect("index lock").entry(kind).or_default().insert(record.id.clone(), record.clone());
        Ok(record)
    }

    pub fn get(&self, kind: Kind, id: &str) -> Result<Record, StoreError> {
        self.records
            .read()
            .expect("index lock")
            .get(&kind)
            .and_then(|m| m.get(id))
            .cloned()
            .ok_or_else(|| StoreError::NotFound { kind: kind.as_str(), id: id.to_string() })
    }

    /// Records of one kind in id order, which is creation order.
    pub fn list(&self, kind: Kind) -> Vec<Record> {
        self.records.read().expect("index lock").get(&kind).map(|m| m.values().cloned().collect()).unwrap_or_default()
    }

    pub fn counts(&self) -> BTreeMap<Kind, usize> {
        let r = self.records.read().expect("index lock");
        Kind::ALL.iter().map(|k| (*k, r.get(k).map_or(0, |m| m.len()))).collect()
    }

    pub fn quarantined(&self) -> Vec<String> {
        self.quarantined.read().expect("quarantine lock").clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn put_get_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path()).unwrap();
        let a = s.put(Kind::Scenario, json!({"x": 1})).unwrap();
        let b = s.put(Kind::Scenario, json!({"x": 2})).unwrap();
        assert!(a.id < b.id);
        assert_eq!(s.get(Kind::Scenario, &a.id).unwrap(), a);
        assert!(s.get(Kind::Program, &a.id).is_err());
        drop(s);
        let s = Store::open(dir.path()).unwrap();
        assert_eq!(s.list(Kind::Scenario), vec![a, b]);
        assert_eq!(s.counts()[&Kind::Scenario], 2);
    }

    #[test]
    fn torn_and_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path()).unwrap();
        let a = s.put(Kind::Program, json!({"source": "x"})).unwrap();
        drop(s);
        let pdir = dir.path().join("program");
        fs::write(pdir.join(".tmp-01ABC"), b"{\"kind\": \"prog").unwrap();
        let mut tampered: Record = serde_json::from_slice(&fs::read(pdir.join(format!("{}.json", a.id))).unwrap()).unwrap();
        tampered.payload = json!({"source": "y"});
        fs::write(pdir.join("01TAMPERED.json"), serde_json::to_vec(&Record { id: "01TAMPERED".into(), ..tampered }).unwrap())
            .unwrap();
        fs::write(pdir.join("01GARBAGE.json"), b"not json").unwrap();

        let s = Store::open(dir.path()).unwrap();
        assert_eq!(s.list(Kind::Program), vec![a]);
        let mut q = s.quarantined();
        q.sort();
        assert_eq!(q, vec!["program/01GARBAGE.json", "program/01TAMPERED.json"]);
        assert!(!pdir.join(".tmp-01ABC").exists());
        assert!(dir.path().join("quarantine/program-01TAMPERED.json").exists());
    }
}
