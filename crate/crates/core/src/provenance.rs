//! Provenance headers embedded in every output file.

use std::io::{BufRead, Write};

use crate::error::Result;

pub const PREFIX: &str = "# provenance: ";

pub fn write_header<W: Write + ?Sized>(w: &mut W, provenance: &str) -> Result<()> {
    for line in provenance.lines() {
        writeln!(w, "{PREFIX}{line}")?;
    }
    Ok(())
}

/// Returns the provenance text from the leading comment lines, if any.
pub fn read_header<R: BufRead>(reader: R) -> Result<Option<String>> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line?;
        match line.strip_prefix(PREFIX) {
            Some(rest) => lines.push(rest.to_owned()),
            None if line.starts_with('#') => continue,
            None => break,
        }
    }
    Ok((!lines.is_empty()).then(|| lines.join("\n")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let mut buf = Vec::new();
        write_header(&mut buf, "{\"seed\":7}").unwrap();
        buf.extend_from_slice(b"col\n1\n");
        assert_eq!(read_header(buf.as_slice()).unwrap().as_deref(), Some("{\"seed\":7}"));
    }
}
