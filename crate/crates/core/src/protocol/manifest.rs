use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use super::ProtocolError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub speaker_id: String,
    /// As written in the manifest; relative paths resolve against
    /// [`Manifest::root`].
    pub path: PathBuf,
    pub transcript: Option<String>,
}

/// A list of utterances with their speakers and audio files.
///
/// On disk: UTF-8 TSV, one `utterance_id<TAB>speaker_id<TAB>wav_path[<TAB>transcript]`
/// per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    dataset_name: String,
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(
        dataset_name: impl Into<String>,
        root: impl Into<PathBuf>,
        entries: Vec<ManifestEntry>,
    ) -> Result<Self, ProtocolError> {
        let mut seen = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.utterance_id.is_empty() || e.speaker_id.is_empty() {
                return Err(ProtocolError::Invalid(format!(
                    "entry {i} has an empty utterance or speaker id"
                )));
            }
            if seen.insert(e.utterance_id.as_str(), i).is_some() {
                return Err(ProtocolError::Invalid(format!(
                    "duplicate utterance id {}",
                    e.utterance_id
                )));
            }
        }
        Ok(Self {
            dataset_name: dataset_name.into(),
            root: root.into(),
            entries,
        })
    }

    pub fn dataset_name(&self) -> &str {
        &self.dataset_name
    }

    pub fn with_dataset_name(mut self, name: impl Into<String>) -> Self {
        self.dataset_name = name.into();
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, utterance_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.utterance_id == utterance_id)
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.root.join(&entry.path)
        }
    }

    /// Entries grouped by speaker, speakers in sorted order, utterances in
    /// manifest order.
    pub fn by_speaker(&self) -> BTreeMap<&str, Vec<&ManifestEntry>> {
        let mut groups: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
        for e in &self.entries {
            groups.entry(e.speaker_id.as_str()).or_default().push(e);
        }
        groups
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.utterance_id);
            out.push('\t');
            out.push_str(&e.speaker_id);
            out.push('\t');
            out.push_str(&e.path.to_string_lossy());
            if let Some(t) = &e.transcript {
                out.push('\t');
                out.push_str(t);
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ProtocolError> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|source| ProtocolError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Parses and validates a manifest file. The dataset name defaults to the
/// file stem; relative audio paths resolve against the manifest's directory
/// and must exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, ProtocolError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ProtocolError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let parse_err = |line: usize, message: String| ProtocolError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries = Vec::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.splitn(4, '\t').collect();
        if cols.len() < 3 {
            return Err(parse_err(
                line_no,
                format!(
                    "expected at least 3 tab-separated columns, found {}",
                    cols.len()
                ),
            ));
        }
        let (utt, spk, wav) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        if utt.is_empty() || spk.is_empty() || wav.is_empty() {
            return Err(parse_err(
                line_no,
                "empty utterance, speaker or path".into(),
            ));
        }
        if let Some(&prev) = first_line.get(utt) {
            return Err(ProtocolError::DuplicateUtterance {
                path: path.to_path_buf(),
                line: line_no,
                first_line: prev,
                utterance_id: utt.to_string(),
            });
        }
        first_line.insert(utt.to_string(), line_no);
        let entry = ManifestEntry {
            utterance_id: utt.to_string(),
            speaker_id: spk.to_string(),
            path: PathBuf::from(wav),
            transcript: cols.get(3).map(|t| t.trim_end_matches('\r').to_string()),
        };
        let audio = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            root.join(&entry.path)
        };
        if !audio.is_file() {
            return Err(ProtocolError::MissingFile {
                path: path.to_path_buf(),
                line: line_no,
                file: audio,
            });
        }
        entries.push(entry);
    }
    if entries.is_empty() {
        log::warn!("manifest {} has no entries", path.display());
    }
    Manifest::new(name, root, entries)
}
