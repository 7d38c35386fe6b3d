//! FASTA-like sequence files: `>name` header lines followed by sequence
//! lines over `ACGT` (either case). Blank lines are ignored.

use pteem_core::experiments::tfbs::{nucleotide_code, SequenceSet, NUCLEOTIDES};

pub fn parse(text: &str, width: usize) -> Result<SequenceSet, String> {
    let mut names = Vec::new();
    let mut seqs: Vec<Vec<u8>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('>') {
            names.push(name.trim().to_string());
            seqs.push(Vec::new());
            continue;
        }
        let seq = seqs.last_mut().ok_or_else(|| format!("line {}: sequence data before the first '>' header", n + 1))?;
        for (col, b) in line.bytes().enumerate() {
            let code = nucleotide_code(b)
                .ok_or_else(|| format!("line {}, column {}: '{}' is not one of A, C, G, T", n + 1, col + 1, b as char))?;
            seq.push(code);
        }
    }
    if let Some((name, _)) = names.iter().zip(&seqs).find(|(_, s)| s.is_empty()) {
        return Err(format!("sequence '{name}' is empty"));
    }
    SequenceSet::new(names, seqs, width).map_err(|e| e.to_string())
}

pub fn write(set: &SequenceSet) -> String {
    let mut out = String::new();
    for (name, seq) in set.names.iter().zip(&set.sequences) {
        out.push('>');
        out.push_str(name);
        out.push('\n');
        for chunk in seq.chunks(60) {
            out.extend(chunk.iter().map(|&c| NUCLEOTIDES[c as usize] as char));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_multiline_records() {
        let set = parse(">a\nACGT\nacg\n\n>b desc\nTTTT\n", 3).unwrap();
        assert_eq!(set.names, ["a", "b desc"]);
        assert_eq!(set.sequences[0], [0, 1, 2, 3, 0, 1, 2]);
        assert_eq!(set.sequences[1], [3, 3, 3, 3]);
    }

    #[test]
    fn reports_bad_input() {
        assert!(parse("ACGT\n", 2).unwrap_err().contains("line 1"));
        assert!(parse(">a\nACNT\n", 2).unwrap_err().contains("column 3"));
        assert!(parse(">a\n>b\nACGT\n", 2).unwrap_err().contains("'a' is empty"));
        assert!(parse(">a\nAC\n", 3).is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let seq: Vec<u8> = (0..150).map(|i| (i * 7 % 4) as u8).collect();
        let set = SequenceSet::new(vec!["x".into()], vec![seq], 5).unwrap();
        let text = write(&set);
        assert_eq!(parse(&text, 5).unwrap(), set);
        assert_eq!(text.lines().nth(1).unwrap().len(), 60);
    }
}
