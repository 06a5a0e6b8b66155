//! Reading and writing [`IntegerSet`]s.
//!
//! * Text: one decimal integer per line, strictly increasing. The writer
//!   emits a leading `# n_max=K` line, which the reader honours when present
//!   (otherwise `n_max` is the largest element). Blank lines and other `#`
//!   lines are ignored.
//! * EFSET1: the 6 bytes `EFSET1`, `n_max` as a little-endian `u64`, then
//!   `ceil((n_max + 1) / 8)` bytes where bit `k` of the stream (LSB first
//!   within each byte) is `chi_A(k)`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::repfn::IntegerSet;

pub const EFSET_MAGIC: &[u8; 6] = b"EFSET1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetFormat {
    Text,
    Efset1,
}

impl std::str::FromStr for SetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(SetFormat::Text),
            "efset1" | "EFSET1" | "binary" => Ok(SetFormat::Efset1),
            other => Err(Error::param(format!("unknown set format '{other}'"))),
        }
    }
}

pub fn write_text<W: Write>(set: &IntegerSet, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# n_max={}", set.n_max())?;
    for a in set.iter() {
        writeln!(out, "{a}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_text<R: Read>(input: R) -> Result<IntegerSet> {
    let mut declared: Option<usize> = None;
    let mut elements: Vec<usize> = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("n_max=") {
                let v = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(format!("line {}: bad n_max header", lineno + 1)))?;
                declared = Some(v);
            }
            continue;
        }
        if line.starts_with('-') {
            return Err(Error::format(format!("line {}: negative entry '{line}'", lineno + 1)));
        }
        let a: usize = line
            .parse()
            .map_err(|_| Error::format(format!("line {}: '{line}' is not a non-negative integer", lineno + 1)))?;
        if let Some(&prev) = elements.last() {
            if a <= prev {
                return Err(Error::format(format!(
                    "line {}: {a} does not increase on {prev}",
                    lineno + 1
                )));
            }
        }
        elements.push(a);
    }
    let n_max = declared.unwrap_or_else(|| elements.last().copied().unwrap_or(0));
    if let Some(&last) = elements.last() {
        if last > n_max {
            return Err(Error::format(format!(
                "element {last} exceeds declared n_max = {n_max}"
            )));
        }
    }
    IntegerSet::from_elements(n_max, elements)
}

fn payload_len(n_max: usize) -> usize {
    n_max / 8 + 1
}

pub fn write_efset<W: Write>(set: &IntegerSet, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(EFSET_MAGIC)?;
    out.write_all(&(set.n_max() as u64).to_le_bytes())?;
    let mut remaining = payload_len(set.n_max());
    for w in set.words() {
        let bytes = w.to_le_bytes();
        let take = remaining.min(8);
        out.write_all(&bytes[..take])?;
        remaining -= take;
    }
    out.flush()?;
    Ok(())
}

pub fn read_efset<R: Read>(mut input: R) -> Result<IntegerSet> {
    let mut header = [0u8; 14];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::format("file shorter than the EFSET1 header"))?;
    if &header[..6] != EFSET_MAGIC {
        return Err(Error::format("bad magic, expected EFSET1"));
    }
    let n_max = u64::from_le_bytes(header[6..14].try_into().expect("8 bytes"));
    let n_max = usize::try_from(n_max).map_err(|_| Error::format("n_max does not fit in memory"))?;
    let expected = payload_len(n_max);
    let mut payload = Vec::new();
    input.take(expected as u64 + 1).read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(Error::format(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::format("trailing bytes after the EFSET1 payload"));
    }
    let words = payload
        .chunks(8)
        .map(|chunk| {
            let mut bytes = [0u8; 8];
            bytes[..chunk.len()].copy_from_slice(chunk);
            u64::from_le_bytes(bytes)
        })
        .collect();
    IntegerSet::from_words(n_max, words)
        .map_err(|_| Error::format(format!("payload has an element above declared n_max = {n_max}")))
}

pub fn write_set(set: &IntegerSet, path: impl AsRef<Path>, format: SetFormat) -> Result<()> {
    let file = File::create(path)?;
    match format {
        SetFormat::Text => write_text(set, file),
        SetFormat::Efset1 => write_efset(set, file),
    }
}

/// Reads a set; without an explicit format, files starting with the EFSET1
/// magic are binary and everything else is text.
pub fn read_set(path: impl AsRef<Path>, format: Option<SetFormat>) -> Result<IntegerSet> {
    let mut file = File::open(path)?;
    let format = match format {
        Some(f) => f,
        None => {
            let mut probe = Vec::with_capacity(6);
            (&mut file).take(6).read_to_end(&mut probe)?;
            let f = if probe == EFSET_MAGIC {
                SetFormat::Efset1
            } else {
                SetFormat::Text
            };
            return match f {
                SetFormat::Efset1 => read_efset(probe.as_slice().chain(file)),
                SetFormat::Text => read_text(probe.as_slice().chain(file)),
            };
        }
    };
    match format {
        SetFormat::Text => read_text(file),
        SetFormat::Efset1 => read_efset(file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip_efset(set: &IntegerSet) -> IntegerSet {
        let mut buf = Vec::new();
        write_efset(set, &mut buf).unwrap();
        assert_eq!(buf.len(), 14 + payload_len(set.n_max()));
        read_efset(buf.as_slice()).unwrap()
    }

    fn roundtrip_text(set: &IntegerSet) -> IntegerSet {
        let mut buf = Vec::new();
        write_text(set, &mut buf).unwrap();
        read_text(buf.as_slice()).unwrap()
    }

    #[test]
    fn small_roundtrips() {
        let set = IntegerSet::from_elements(5, [0, 2, 5]).unwrap();
        assert_eq!(roundtrip_efset(&set), set);
        assert_eq!(roundtrip_text(&set), set);
        let empty = IntegerSet::empty(70);
        assert_eq!(roundtrip_efset(&empty), empty);
        assert_eq!(roundtrip_text(&empty), empty);
    }

    #[test]
    fn efset_bit_layout() {
        let set = IntegerSet::from_elements(9, [0, 2, 5, 9]).unwrap();
        let mut buf = Vec::new();
        write_efset(&set, &mut buf).unwrap();
        assert_eq!(&buf[..6], b"EFSET1");
        assert_eq!(&buf[6..14], &9u64.to_le_bytes());
        assert_eq!(&buf[14..], &[0b0010_0101, 0b0000_0010]);
    }

    #[test]
    fn efset_errors() {
        let set = IntegerSet::from_elements(100, [1, 50, 99]).unwrap();
        let mut buf = Vec::new();
        write_efset(&set, &mut buf).unwrap();

        let truncated = &buf[..buf.len() - 2];
        assert!(matches!(read_efset(truncated), Err(Error::Format(_))));

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_efset(bad_magic.as_slice()), Err(Error::Format(_))));

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(matches!(read_efset(trailing.as_slice()), Err(Error::Format(_))));

        // n_max = 100 leaves bits 101..103 of the last byte unused.
        let mut stray = buf.clone();
        *stray.last_mut().unwrap() |= 0b1000_0000;
        assert!(matches!(read_efset(stray.as_slice()), Err(Error::Format(_))));

        assert!(matches!(read_efset(&b"EFSET"[..]), Err(Error::Format(_))));
    }

    #[test]
    fn text_errors() {
        assert!(matches!(read_text("1\n3\n2\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_text("1\n1\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_text("-1\n2\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_text("x\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(
            read_text("# n_max=3\n1\n4\n".as_bytes()),
            Err(Error::Format(_))
        ));
        let set = read_text("\n3\n7\n".as_bytes()).unwrap();
        assert_eq!(set.n_max(), 7);
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![3, 7]);
    }

    #[test]
    fn file_roundtrip_with_detection() {
        let dir = tempfile::tempdir().unwrap();
        let set = IntegerSet::from_elements(1000, (0..1000).step_by(7)).unwrap();
        for (name, format) in [("a.efset", SetFormat::Efset1), ("a.txt", SetFormat::Text)] {
            let path = dir.path().join(name);
            write_set(&set, &path, format).unwrap();
            assert_eq!(read_set(&path, None).unwrap(), set);
            assert_eq!(read_set(&path, Some(format)).unwrap(), set);
        }
    }
}
