//! Versioned snapshot store with optional file backing.
//!
//! Readers take an `Arc<Snapshot>` and keep a consistent view for as long as
//! they hold it. Writers are serialized; a new snapshot is persisted first
//! and only published once the write succeeded, so a failed upsert leaves
//! the previous version in place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::SystemTime;

use atlas_core::{Record, Snapshot};
use parking_lot::{Mutex, RwLock};

pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: corrupt snapshot: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
}

pub struct Store {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    dir: Option<PathBuf>,
    loaded_mtime: Mutex<Option<SystemTime>>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::with_snapshot(Snapshot::empty())
    }

    pub fn with_snapshot(snapshot: Snapshot) -> Self {
        Self {
            current: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(()),
            dir: None,
            loaded_mtime: Mutex::new(None),
        }
    }

    /// Open (or create) a store rooted at `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        let (snapshot, mtime) = read_snapshot(&dir.join(SNAPSHOT_FILE))?.unwrap_or_default();
        Ok(Self {
            current: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(()),
            dir: Some(dir),
            loaded_mtime: Mutex::new(mtime),
        })
    }

    /// Open read-only: the directory must already exist, nothing is created.
    pub fn open_existing(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(StoreError::Io {
                path: dir,
                source: io::Error::new(io::ErrorKind::NotFound, "data directory does not exist"),
            });
        }
        Self::open(dir)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.current.read())
    }

    /// Apply `records` as one transaction and return the new version.
    pub fn upsert(&self, records: &[Record]) -> Result<u64, StoreError> {
        let _guard = self.writer.lock();
        let next = self.snapshot().apply(records);
        if let Some(dir) = &self.dir {
            let mtime = write_snapshot(dir, &next)?;
            *self.loaded_mtime.lock() = mtime;
        }
        let version = next.version();
        *self.current.write() = Arc::new(next);
        Ok(version)
    }

    /// Pick up a snapshot written by another process. Returns true when a
    /// newer version was published.
    pub fn reload(&self) -> Result<bool, StoreError> {
        let Some(dir) = &self.dir else {
            return Ok(false);
        };
        let path = dir.join(SNAPSHOT_FILE);
        let mtime = fs::metadata(&path).and_then(|m| m.modified()).ok();
        if mtime.is_none() || mtime == *self.loaded_mtime.lock() {
            return Ok(false);
        }
        let _guard = self.writer.lock();
        let Some((snapshot, mtime)) = read_snapshot(&path)? else {
            return Ok(false);
        };
        *self.loaded_mtime.lock() = mtime;
        if snapshot.version() <= self.snapshot().version() {
            return Ok(false);
        }
        *self.current.write() = Arc::new(snapshot);
        Ok(true)
    }
}

fn read_snapshot(path: &Path) -> Result<Option<(Snapshot, Option<SystemTime>)>, StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.into(),
                source,
            })
        }
    };
    let mtime = fs::metadata(path).and_then(|m| m.modified()).ok();
    let snapshot = serde_json::from_slice(&bytes).map_err(|source| StoreError::Corrupt {
        path: path.into(),
        source,
    })?;
    Ok(Some((snapshot, mtime)))
}

fn write_snapshot(dir: &Path, snapshot: &Snapshot) -> Result<Option<SystemTime>, StoreError> {
    let path = dir.join(SNAPSHOT_FILE);
    let tmp = dir.join(format!(".{SNAPSHOT_FILE}.tmp"));
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StoreError::Io { path, source }
    };
    let mut file = io::BufWriter::new(fs::File::create(&tmp).map_err(io_err(&tmp))?);
    serde_json::to_writer(&mut file, snapshot).map_err(|e| StoreError::Io {
        path: tmp.clone(),
        source: e.into(),
    })?;
    file.flush().map_err(io_err(&tmp))?;
    file.get_ref().sync_all().map_err(io_err(&tmp))?;
    drop(file);
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(fs::metadata(&path).and_then(|m| m.modified()).ok())
}

/// `region,metric,date,value` for every stored point.
pub fn export_csv<W: Write>(snapshot: &Snapshot, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["region", "metric", "date", "value"])?;
    for series in snapshot.iter_series() {
        let region = series.region.to_string();
        for p in &series.points {
            w.write_record([
                region.as_str(),
                series.metric.name(),
                &p.date.to_string(),
                &p.value.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The whole snapshot (series, populations, names, crosswalk, POI counts) as
/// canonical JSON. Loadable with `serde_json::from_str::<Snapshot>`.
pub fn export_json(snapshot: &Snapshot) -> String {
    crate::canonical::to_string(snapshot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use atlas_core::{MetricKind, NaiveDate, RegionId};

    fn obs(value: f64) -> Record {
        Record::Observation {
            region: RegionId::County(39173),
            metric: MetricKind::CasesDaily,
            date: NaiveDate::from_ymd_opt(2020, 4, 1).unwrap(),
            value,
        }
    }

    #[test]
    fn reader_keeps_its_snapshot() {
        let store = Store::in_memory();
        store.upsert(&[obs(1.0)]).unwrap();
        let held = store.snapshot();
        store.upsert(&[obs(2.0)]).unwrap();
        let day = NaiveDate::from_ymd_opt(2020, 4, 1).unwrap();
        assert_eq!(
            held.values_at(MetricKind::CasesDaily, day)[&RegionId::County(39173)],
            1.0
        );
        assert_eq!(
            store.snapshot().values_at(MetricKind::CasesDaily, day)[&RegionId::County(39173)],
            2.0
        );
        assert_eq!(store.snapshot().version(), held.version() + 1);
    }

    #[test]
    fn persists_and_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.upsert(&[obs(5.0)]).unwrap();
        let reopened = Store::open(dir.path()).unwrap();
        assert_eq!(*reopened.snapshot(), *store.snapshot());
    }

    #[test]
    fn failed_write_keeps_prior_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.upsert(&[obs(5.0)]).unwrap();
        let before = store.snapshot();
        // a directory where the temp file should go makes the write fail
        fs::create_dir(dir.path().join(format!(".{SNAPSHOT_FILE}.tmp"))).unwrap();
        assert!(store.upsert(&[obs(9.0)]).is_err());
        assert_eq!(store.snapshot(), before);
        assert_eq!(*Store::open(dir.path()).unwrap().snapshot(), *before);
    }

    #[test]
    fn reload_sees_other_writer() {
        let dir = tempfile::tempdir().unwrap();
        let reader = Store::open(dir.path()).unwrap();
        let writer = Store::open(dir.path()).unwrap();
        writer.upsert(&[obs(3.0)]).unwrap();
        assert!(reader.reload().unwrap());
        assert_eq!(reader.snapshot().version(), 1);
        assert!(!reader.reload().unwrap());
    }

    #[test]
    fn csv_export_shape() {
        let snap = Snapshot::empty().apply(&[obs(7.0)]);
        let mut out = Vec::new();
        export_csv(&snap, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "region,metric,date,value\n39173,cases_daily,2020-04-01,7\n"
        );
    }
}
