//! Text formats for token streams and merge tables.
//!
//! Token file: one utterance per line, frames separated by single spaces,
//! each frame's `M` tokens joined by commas. Lines starting with `#` are
//! comments. An empty line is an utterance with no frames. Utterances read
//! back are named by their zero-based position in the file.
//!
//! Merge file: header `DSRM 1 <base_vocab> <target_vocab>`, then one
//! `<left> <right> <new>` rule per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{MergeRule, MergeTable, TokenStream};

pub fn write_token_streams_to<W: Write>(streams: &[TokenStream], mut w: W) -> Result<()> {
    for s in streams {
        let mut line = String::new();
        for (t, frame) in s.frames().enumerate() {
            if t > 0 {
                line.push(' ');
            }
            for (m, tok) in frame.iter().enumerate() {
                if m > 0 {
                    line.push(',');
                }
                line.push_str(&tok.to_string());
            }
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_token_streams(streams: &[TokenStream], path: impl AsRef<Path>) -> Result<()> {
    write_token_streams_to(streams, BufWriter::new(File::create(path)?))
}

pub fn read_token_streams_from<R: BufRead>(r: R) -> Result<Vec<TokenStream>> {
    let mut parsed: Vec<Vec<u32>> = Vec::new();
    let mut n_streams: Option<usize> = None;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') {
            continue;
        }
        let mut tokens = Vec::new();
        if !line.is_empty() {
            for frame in line.split(' ') {
                let before = tokens.len();
                for tok in frame.split(',') {
                    let v = tok.parse::<u32>().map_err(|_| {
                        Error::Format(format!("line {}: bad token {tok:?}", lineno + 1))
                    })?;
                    tokens.push(v);
                }
                let m = tokens.len() - before;
                match n_streams {
                    None => n_streams = Some(m),
                    Some(expected) if expected != m => {
                        return Err(Error::Format(format!(
                            "line {}: frame with {m} tokens in a {expected}-stream file",
                            lineno + 1
                        )))
                    }
                    _ => {}
                }
            }
        }
        parsed.push(tokens);
    }
    let n_streams = n_streams.unwrap_or(1);
    parsed
        .into_iter()
        .enumerate()
        .map(|(i, tokens)| TokenStream::new(i.to_string(), n_streams, tokens))
        .collect()
}

pub fn read_token_streams(path: impl AsRef<Path>) -> Result<Vec<TokenStream>> {
    read_token_streams_from(BufReader::new(File::open(path)?))
}

pub fn write_merge_table_to<W: Write>(table: &MergeTable, mut w: W) -> Result<()> {
    writeln!(w, "DSRM 1 {} {}", table.base_vocab(), table.target_vocab())?;
    for r in table.merges() {
        writeln!(w, "{} {} {}", r.left, r.right, r.new)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_merge_table(table: &MergeTable, path: impl AsRef<Path>) -> Result<()> {
    write_merge_table_to(table, BufWriter::new(File::create(path)?))
}

pub fn read_merge_table_from<R: BufRead>(r: R) -> Result<MergeTable> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Format("empty merge file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (base, target) = match fields.as_slice() {
        ["DSRM", "1", base, target] => (parse_field(base, 1)?, parse_field(target, 1)?),
        ["DSRM", v, ..] => return Err(Error::Format(format!("unsupported merge file version {v}"))),
        _ => return Err(Error::Format("missing DSRM merge header".into())),
    };
    let mut merges = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [l, r, n] = parts.as_slice() else {
            return Err(Error::Format(format!("line {lineno}: expected \"<left> <right> <new>\"")));
        };
        merges.push(MergeRule {
            left: parse_field(l, lineno)?,
            right: parse_field(r, lineno)?,
            new: parse_field(n, lineno)?,
        });
    }
    MergeTable::new(merges, base, target)
}

pub fn read_merge_table(path: impl AsRef<Path>) -> Result<MergeTable> {
    read_merge_table_from(BufReader::new(File::open(path)?))
}

fn parse_field<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("line {lineno}: bad number {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_file_layout() {
        let streams = vec![
            TokenStream::new("a", 2, vec![1, 2, 3, 4]).unwrap(),
            TokenStream::new("b", 2, vec![]).unwrap(),
            TokenStream::new("c", 2, vec![0, 9]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_token_streams_to(&streams, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,2 3,4\n\n0,9\n");
        let back = read_token_streams_from(&buf[..]).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].as_slice(), streams[0].as_slice());
        assert_eq!(back[1].n_streams(), 2);
        assert_eq!(back[2].utterance_id(), "2");
    }

    #[test]
    fn comments_and_single_stream() {
        let text = "# header\n5 5 6\n";
        let back = read_token_streams_from(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].n_streams(), 1);
        assert_eq!(back[0].as_slice(), &[5, 5, 6]);
    }

    #[test]
    fn malformed_token_files() {
        assert!(read_token_streams_from("1,2 3\n".as_bytes()).is_err());
        assert!(read_token_streams_from("1  2\n".as_bytes()).is_err());
        assert!(read_token_streams_from("x\n".as_bytes()).is_err());
        assert!(read_token_streams_from("-1\n".as_bytes()).is_err());
    }

    #[test]
    fn merge_file_round_trip() {
        let t = MergeTable::new(
            vec![MergeRule { left: 1, right: 2, new: 10 }, MergeRule { left: 10, right: 3, new: 11 }],
            10,
            12,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_merge_table_to(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "DSRM 1 10 12\n1 2 10\n10 3 11\n");
        assert_eq!(read_merge_table_from(&buf[..]).unwrap(), t);
    }

    #[test]
    fn malformed_merge_files() {
        assert!(read_merge_table_from("".as_bytes()).is_err());
        assert!(read_merge_table_from("DSRM 2 1 2\n0 0 1\n".as_bytes()).is_err());
        assert!(read_merge_table_from("DSRM 1 1 2\n0 0\n".as_bytes()).is_err());
        assert!(read_merge_table_from("DSRM 1 1 3\n0 0 1\n".as_bytes()).is_err());
    }
}
