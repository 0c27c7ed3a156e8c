//! Monolingual word embeddings in word2vec text format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Ordered, duplicate-free token list. Position is frequency rank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Fails with the first repeated token.
    pub fn new(words: Vec<String>) -> std::result::Result<Self, String> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(w.clone());
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, rank: usize) -> &str {
        &self.words[rank]
    }

    pub fn rank(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    vocab: Vocabulary,
    matrix: DenseMatrix,
    normalized: bool,
}

impl EmbeddingSet {
    pub fn new(vocab: Vocabulary, matrix: DenseMatrix) -> Result<Self> {
        if matrix.rows() != vocab.len() {
            return Err(Error::ShapeMismatch {
                op: "EmbeddingSet::new",
                left: (vocab.len(), 0),
                right: matrix.shape(),
            });
        }
        Ok(Self {
            vocab,
            matrix,
            normalized: false,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.vocab.rank(word).map(|i| self.matrix.row(i))
    }

    /// Scales every row to unit L2 norm. Idempotent.
    pub fn normalize_rows(self) -> Result<Self> {
        match self.matrix.normalize_rows() {
            Ok(matrix) => Ok(Self {
                vocab: self.vocab,
                matrix,
                normalized: true,
            }),
            Err(row) => Err(Error::ZeroNorm(format!(
                "embedding for {:?} (row {row}) has zero norm",
                self.vocab.word(row)
            ))),
        }
    }

    /// Keeps the `n` most frequent words.
    pub fn truncate(&self, n: usize) -> Self {
        if n >= self.len() {
            return self.clone();
        }
        let indices: Vec<usize> = (0..n).collect();
        Self {
            vocab: Vocabulary::new(self.vocab.words[..n].to_vec()).expect("prefix of a valid vocabulary"),
            matrix: self.matrix.select_rows(&indices),
            normalized: self.normalized,
        }
    }
}

pub(crate) fn open_text(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::with_capacity(1 << 20, reader)))
}

/// Reads one line as UTF-8, without the trailing newline. `None` at EOF.
pub(crate) fn read_line(
    reader: &mut dyn BufRead,
    buf: &mut Vec<u8>,
    path: &Path,
    line_no: usize,
) -> Result<Option<String>> {
    buf.clear();
    let n = reader.read_until(b'\n', buf).map_err(|e| Error::io(path, e))?;
    if n == 0 {
        return Ok(None);
    }
    while matches!(buf.last(), Some(b'\n' | b'\r')) {
        buf.pop();
    }
    String::from_utf8(std::mem::take(buf))
        .map(Some)
        .map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: line_no,
            reason: format!("invalid UTF-8 at byte {}", e.utf8_error().valid_up_to()),
        })
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_ascii_whitespace();
    let count = fields.next()?.parse().ok()?;
    let dim = fields.next()?.parse().ok()?;
    fields.next().is_none().then_some((count, dim))
}

/// Loads `word v1 ... vd` rows. A leading `count dim` header is detected and
/// skipped. Row order is kept and read as frequency rank.
pub fn load_word2vec_text(path: impl AsRef<Path>, limit: Option<usize>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let mut reader = open_text(path)?;
    let mut buf = Vec::new();
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_owned(),
        line,
        reason,
    };

    let limit = limit.unwrap_or(usize::MAX);
    let mut words = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut dim: Option<usize> = None;
    let mut line_no = 0;

    while words.len() < limit {
        line_no += 1;
        let Some(line) = read_line(&mut *reader, &mut buf, path, line_no)? else {
            break;
        };
        if line_no == 1 {
            if let Some((_, d)) = parse_header(&line) {
                dim = Some(d);
                continue;
            }
        }
        let line = line.trim_end_matches([' ', '\t']);
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        let before = values.len();
        for (col, field) in fields.enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(line_no, format!("column {}: cannot parse {field:?} as a number", col + 2))
            })?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("column {}: non-finite value", col + 2)));
            }
            values.push(v);
        }
        let got = values.len() - before;
        match dim {
            Some(d) if d != got => {
                return Err(parse_err(line_no, format!("expected {d} values, found {got}")));
            }
            None if got == 0 => {
                return Err(parse_err(line_no, format!("word {word:?} has no vector")));
            }
            None => dim = Some(got),
            _ => {}
        }
        if let Some(first) = seen.insert(word.to_owned(), line_no) {
            return Err(parse_err(
                line_no,
                format!("duplicate word {word:?} (first seen on line {first})"),
            ));
        }
        words.push(word.to_owned());
    }

    if words.is_empty() {
        return Err(Error::Data {
            path: path.to_owned(),
            reason: "no embedding rows".into(),
        });
    }
    let dim = dim.unwrap_or(0);
    let vocab = Vocabulary::new(words).expect("duplicates rejected while reading");
    let matrix = DenseMatrix::new(vocab.len(), dim, values)?;
    log::info!("{}: loaded {} words, d = {dim}", path.display(), vocab.len());
    EmbeddingSet::new(vocab, matrix)
}

/// Writes the set back in word2vec text format with a `count dim` header.
/// Values use the shortest representation that parses back exactly.
pub fn write_word2vec_text(e: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|err| Error::io(path, err))?;
    let mut out = BufWriter::new(file);
    let io = |err| Error::io(path, err);
    writeln!(out, "{} {}", e.len(), e.dim()).map_err(io)?;
    for (word, row) in e.vocab().words().iter().zip(e.matrix().row_iter()) {
        write!(out, "{word}").map_err(io)?;
        for v in row {
            write!(out, " {v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &tempfile::TempDir, name: &str, body: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body).unwrap();
        p
    }

    #[test]
    fn loads_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "v.txt", b"the 1 0\nof 0 1\nand 0.5 0.5\n");
        let e = load_word2vec_text(&p, None).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e.dim(), 2);
        assert_eq!(e.vocab().words(), &["the", "of", "and"]);
        assert!(!e.is_normalized());
        assert_eq!(e.lookup("the"), Some(&[1.0, 0.0][..]));
        assert_eq!(e.lookup("cat"), None);
    }

    #[test]
    fn skips_header_and_takes_dim_from_it() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "v.txt", b"2 3\na 1 2 3 \nb 4 5 6 \n");
        let e = load_word2vec_text(&p, None).unwrap();
        assert_eq!((e.len(), e.dim()), (2, 3));
    }

    #[test]
    fn short_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "v.txt", b"a 1 2 3\nb 4 5\n");
        let err = load_word2vec_text(&p, None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn bad_number_names_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "v.txt", b"a 1 2\nb 4 x\n");
        let err = load_word2vec_text(&p, None).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("column 3"), "{err}");
    }

    #[test]
    fn duplicate_word_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "v.txt", b"a 1 2\nb 4 5\na 0 1\n");
        let err = load_word2vec_text(&p, None).unwrap_err().to_string();
        assert!(err.contains("duplicate word \"a\""), "{err}");
    }

    #[test]
    fn invalid_utf8_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "v.txt", b"a 1 2\n\xff\xfe 4 5\n");
        assert!(matches!(load_word2vec_text(&p, None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn limit_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt.gz");
        let mut enc = flate2::write::GzEncoder::new(File::create(&p).unwrap(), flate2::Compression::fast());
        enc.write_all(b"3 2\na 1 0\nb 0 1\nc 1 1\n").unwrap();
        enc.finish().unwrap();
        let e = load_word2vec_text(&p, Some(2)).unwrap();
        assert_eq!(e.vocab().words(), &["a", "b"]);
    }

    #[test]
    fn rank_equals_row_index() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::new();
        for i in 0..6000 {
            body.push_str(&format!("w{i} {i} 1\n"));
        }
        let p = write_file(&dir, "v.txt", body.as_bytes());
        let e = load_word2vec_text(&p, None).unwrap();
        assert_eq!(e.vocab().rank("w4999"), Some(4999));
        assert_eq!(e.lookup("w4999").unwrap()[0], 4999.0);
        assert_eq!(e.lookup("w0"), Some(e.matrix().row(0)));
    }

    #[test]
    fn normalize_three_four() {
        let vocab = Vocabulary::new(vec!["x".into(), "y".into()]).unwrap();
        let m = DenseMatrix::from_rows(&[[3.0, 4.0], [1.0, 0.0]]).unwrap();
        let e = EmbeddingSet::new(vocab, m).unwrap().normalize_rows().unwrap();
        assert!(e.is_normalized());
        let x = e.lookup("x").unwrap();
        assert!((x[0] - 0.6).abs() < 1e-15 && (x[1] - 0.8).abs() < 1e-15);
        assert_eq!(e.lookup("y").unwrap(), &[1.0, 0.0]);
        let again = e.clone().normalize_rows().unwrap();
        assert!(again.matrix().sub(e.matrix()).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn normalize_rejects_zero_row() {
        let vocab = Vocabulary::new(vec!["ok".into(), "void".into()]).unwrap();
        let m = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        let err = EmbeddingSet::new(vocab, m).unwrap().normalize_rows().unwrap_err();
        assert!(err.to_string().contains("\"void\""));
    }

    #[test]
    fn random_rows_become_unit() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let words = (0..10).map(|i| format!("w{i}")).collect();
        let m = DenseMatrix::from_fn(10, 5, |_, _| rng.random_range(-3.0..3.0)).unwrap();
        let e = EmbeddingSet::new(Vocabulary::new(words).unwrap(), m)
            .unwrap()
            .normalize_rows()
            .unwrap();
        for row in e.matrix().row_iter() {
            let n = crate::numerics::norm(row);
            assert!((n - 1.0).abs() <= 1e-9);
        }
    }
}
