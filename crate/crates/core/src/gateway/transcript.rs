//! Line-delimited JSON transcripts: a header line, then one record per reply.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GatewayError, Role, TokenCount};

pub const TRANSCRIPT_FORMAT: &str = "invsynth-transcript";
pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// Digest of role and prompt, with `-N` appended for the N-th repeat.
    pub digest: String,
    pub role: Role,
    pub response: String,
    pub tokens: TokenCount,
    #[serde(default)]
    pub latency_ms: u64,
    /// The prompt itself, kept so a replay miss can be diagnosed by diffing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn find(&self, digest: &str) -> Option<&TranscriptEntry> {
        self.entries.iter().find(|e| e.digest == digest)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = header_line();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Transcript, GatewayError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| GatewayError::Transcript("empty transcript".into()))?;
        let header: Header = serde_json::from_str(first)
            .map_err(|e| GatewayError::Transcript(format!("line 1: bad header: {e}")))?;
        if header.format != TRANSCRIPT_FORMAT {
            return Err(GatewayError::Transcript(format!("unknown format `{}`", header.format)));
        }
        if header.version != TRANSCRIPT_VERSION {
            return Err(GatewayError::Transcript(format!(
                "transcript version {} is not supported (expected {TRANSCRIPT_VERSION})",
                header.version
            )));
        }
        let mut entries: Vec<TranscriptEntry> = Vec::new();
        for (idx, line) in lines {
            let entry: TranscriptEntry = serde_json::from_str(line)
                .map_err(|e| GatewayError::Transcript(format!("line {}: {e}", idx + 1)))?;
            if entries.iter().any(|x| x.digest == entry.digest) {
                return Err(GatewayError::Transcript(format!(
                    "line {}: duplicate digest {}",
                    idx + 1,
                    entry.digest
                )));
            }
            entries.push(entry);
        }
        Ok(Transcript { entries })
    }
}

fn header_line() -> String {
    let h = Header {
        format: TRANSCRIPT_FORMAT.into(),
        version: TRANSCRIPT_VERSION,
    };
    format!("{}\n", serde_json::to_string(&h).expect("header serializes"))
}

pub fn load_transcript(path: &Path) -> Result<Transcript, GatewayError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GatewayError::Transcript(format!("{}: {e}", path.display())))?;
    Transcript::parse(&text)
}

/// Appends entries to a transcript file as they happen.
#[derive(Debug)]
pub struct TranscriptWriter {
    path: PathBuf,
    file: File,
}

impl TranscriptWriter {
    /// Creates (truncating) the file and writes the header.
    pub fn create(path: &Path) -> Result<TranscriptWriter, GatewayError> {
        let io = |e: std::io::Error| GatewayError::Transcript(format!("{}: {e}", path.display()));
        let mut file = File::create(path).map_err(io)?;
        file.write_all(header_line().as_bytes()).map_err(io)?;
        Ok(TranscriptWriter {
            path: path.to_path_buf(),
            file,
        })
    }

    /// Continues an existing file after checking its header.
    pub fn append(path: &Path) -> Result<TranscriptWriter, GatewayError> {
        if !path.exists() {
            return TranscriptWriter::create(path);
        }
        let io = |e: std::io::Error| GatewayError::Transcript(format!("{}: {e}", path.display()));
        let mut first = String::new();
        BufReader::new(File::open(path).map_err(io)?)
            .read_line(&mut first)
            .map_err(io)?;
        Transcript::parse(&first)?;
        let file = OpenOptions::new().append(true).open(path).map_err(io)?;
        Ok(TranscriptWriter {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn write(&mut self, entry: &TranscriptEntry) -> Result<(), GatewayError> {
        let io = |e: std::io::Error| GatewayError::Transcript(format!("{}: {e}", self.path.display()));
        let mut line = serde_json::to_string(entry).expect("entry serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(io)?;
        self.file.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(d: &str) -> TranscriptEntry {
        TranscriptEntry {
            digest: d.into(),
            role: Role::Synthesizer,
            response: "```c\nassert(x >= 0);\n```".into(),
            tokens: TokenCount { input: 10, output: 4 },
            latency_ms: 1200,
            prompt: Some("p".into()),
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let t = Transcript {
            entries: vec![entry("aa"), entry("bb")],
        };
        assert_eq!(Transcript::parse(&t.to_jsonl()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Transcript::parse("").is_err());
        assert!(Transcript::parse("{\"format\":\"invsynth-transcript\",\"version\":9}\n").is_err());
        let t = Transcript {
            entries: vec![entry("aa"), entry("aa")],
        };
        assert!(Transcript::parse(&t.to_jsonl()).is_err());
        let full = Transcript {
            entries: vec![entry("aa")],
        }
        .to_jsonl();
        let cut = &full[..full.len() - 20];
        assert!(matches!(Transcript::parse(cut), Err(GatewayError::Transcript(_))));
    }

    #[test]
    fn writer_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        TranscriptWriter::create(&path).unwrap().write(&entry("aa")).unwrap();
        TranscriptWriter::append(&path).unwrap().write(&entry("bb")).unwrap();
        let t = load_transcript(&path).unwrap();
        assert_eq!(t.entries.len(), 2);
    }
}
