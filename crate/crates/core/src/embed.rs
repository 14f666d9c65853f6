//! Word -> index vocabulary and the trainable embedding matrix.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{derive_rng, salt};

/// Reserved id of the padding symbol ("zero word").
pub const ZERO_WORD_ID: u32 = 0;

/// Bound of the uniform distribution used for random embedding rows.
pub const RANDOM_INIT_BOUND: f64 = 0.05;

/// Word surface to dense id map. Id 0 is reserved for the zero word and maps
/// to no surface; real words get ids 1.. in first-occurrence order. Surfaces
/// are lowercased before lookup and insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_id: HashMap<String, u32>,
    words: Vec<String>, // index i holds the surface for id i + 1
}

impl Vocabulary {
    /// Build from token surfaces: every distinct lowercased surface receives
    /// a unique id >= 1 in first-occurrence order.
    pub fn build<I, S>(surfaces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary {
            word_to_id: HashMap::new(),
            words: Vec::new(),
        };
        for surface in surfaces {
            let lower = surface.as_ref().to_lowercase();
            if !vocab.word_to_id.contains_key(&lower) {
                let id = vocab.words.len() as u32 + 1;
                vocab.word_to_id.insert(lower.clone(), id);
                vocab.words.push(lower);
            }
        }
        vocab
    }

    /// Rebuild from surfaces in id order (id = position + 1).
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut word_to_id = HashMap::with_capacity(words.len());
        for (i, word) in words.iter().enumerate() {
            if word.is_empty() {
                return Err(Error::Validation(format!("vocabulary entry {} is empty", i + 1)));
            }
            if word_to_id.insert(word.clone(), i as u32 + 1).is_some() {
                return Err(Error::Validation(format!("duplicate vocabulary entry {word:?}")));
            }
        }
        Ok(Vocabulary { word_to_id, words })
    }

    /// Total number of ids including the zero word.
    pub fn size(&self) -> usize {
        self.words.len() + 1
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.word_to_id.get(&surface.to_lowercase()).copied()
    }

    /// Lookup with the out-of-vocabulary policy: unknown surfaces map to the
    /// zero word.
    pub fn id_or_zero(&self, surface: &str) -> u32 {
        self.id(surface).unwrap_or(ZERO_WORD_ID)
    }

    pub fn surface(&self, id: u32) -> Option<&str> {
        if id == ZERO_WORD_ID {
            None
        } else {
            self.words.get(id as usize - 1).map(String::as_str)
        }
    }

    /// Surfaces in id order (excluding the zero word).
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Persist as one `word<TAB>id` line per entry.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for (i, word) in self.words.iter().enumerate() {
            writeln!(file, "{word}\t{}", i + 1).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (word, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, line_no, "expected word<TAB>id"))?;
            let id: u32 = id
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad id {id:?}")))?;
            entries.push((id, word.to_string()));
        }
        entries.sort_by_key(|(id, _)| *id);
        for (pos, (id, _)) in entries.iter().enumerate() {
            if *id as usize != pos + 1 {
                return Err(Error::Validation(format!(
                    "vocabulary ids are not dense: expected {}, found {}",
                    pos + 1,
                    id
                )));
            }
        }
        Vocabulary::from_words(entries.into_iter().map(|(_, w)| w).collect())
    }
}

/// The trainable `size x dim` embedding matrix. Row 0 belongs to the zero
/// word; it starts at zero but is updated by gradients like any other row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vectors: Array2<f64>,
}

impl EmbeddingMatrix {
    /// Random initialization: rows 1.. uniform in
    /// `[-RANDOM_INIT_BOUND, RANDOM_INIT_BOUND]`, row 0 zero.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = derive_rng(seed, &[salt::EMBED_INIT]);
        Self::random_with_rng(vocab.size(), dim, &mut rng)
    }

    fn random_with_rng(size: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut vectors = Array2::zeros((size, dim));
        for row in 1..size {
            for col in 0..dim {
                vectors[[row, col]] = rng.random_range(-RANDOM_INIT_BOUND..=RANDOM_INIT_BOUND);
            }
        }
        EmbeddingMatrix { vectors }
    }

    /// Load pretrained vectors in the plain-text `word v1 .. vdim` format.
    /// Vocabulary words found in the file get their vectors verbatim; the
    /// rest are initialized randomly. Returns the matrix and the number of
    /// vocabulary words covered by the file.
    pub fn from_pretrained(
        path: impl AsRef<Path>,
        vocab: &Vocabulary,
        dim: usize,
        seed: u64,
    ) -> Result<(Self, usize)> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut matrix = Self::random(vocab, dim, seed);
        let mut covered = vec![false; vocab.size()];
        let mut file_dim: Option<usize> = None;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .ok_or_else(|| Error::parse(path, line_no, "missing word"))?;
            let values: Vec<&str> = parts.collect();
            match file_dim {
                None => {
                    if values.len() != dim {
                        return Err(Error::Config(format!(
                            "pretrained vectors in {} have {} dimensions, config requires {}",
                            path.display(),
                            values.len(),
                            dim
                        )));
                    }
                    file_dim = Some(values.len());
                }
                Some(expected) if values.len() != expected => {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("expected {} values, found {}", expected, values.len()),
                    ));
                }
                _ => {}
            }
            // Case folding may map several file entries onto one row; the
            // last one wins.
            if let Some(id) = vocab.id(word) {
                let mut row = matrix.vectors.row_mut(id as usize);
                for (col, value) in values.iter().enumerate() {
                    row[col] = value.parse::<f64>().map_err(|_| {
                        Error::parse(path, line_no, format!("bad float {value:?}"))
                    })?;
                }
                covered[id as usize] = true;
            }
        }
        let coverage = covered.iter().filter(|&&c| c).count();
        Ok((matrix, coverage))
    }

    pub fn from_vectors(vectors: Array2<f64>) -> Self {
        EmbeddingMatrix { vectors }
    }

    pub fn size(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, id: u32) -> ArrayView1<'_, f64> {
        self.vectors.row(id as usize)
    }

    pub fn row_mut(&mut self, id: u32) -> ArrayViewMut1<'_, f64> {
        self.vectors.row_mut(id as usize)
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut Array2<f64> {
        &mut self.vectors
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_assigns_dense_first_occurrence_ids() {
        let vocab = Vocabulary::build(
            "We would have to wait until we have collected on those assets".split_whitespace(),
        );
        assert_eq!(vocab.id("we"), Some(1));
        assert_eq!(vocab.id("We"), Some(1));
        assert_eq!(vocab.id("would"), Some(2));
        assert_eq!(vocab.id("have"), Some(3));
        assert_eq!(vocab.id("assets"), Some(10));
        assert_eq!(vocab.size(), 11);
        assert_eq!(vocab.surface(0), None);
    }

    #[test]
    fn empty_corpus_yields_zero_word_only() {
        let vocab = Vocabulary::build(Vec::<&str>::new());
        assert_eq!(vocab.size(), 1);
        assert_eq!(vocab.id_or_zero("anything"), ZERO_WORD_ID);
    }

    #[test]
    fn repeated_word_is_deduplicated() {
        let vocab = Vocabulary::build(std::iter::repeat_n("market", 5));
        assert_eq!(vocab.size(), 2);
    }

    #[test]
    fn vocabulary_round_trips_through_disk() {
        let vocab = Vocabulary::build("a b c d".split_whitespace());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        vocab.save(&path).unwrap();
        let loaded = Vocabulary::load(&path).unwrap();
        assert_eq!(loaded, vocab);
    }

    #[test]
    fn random_init_is_deterministic_and_zeroes_row0() {
        let vocab = Vocabulary::build("a b c".split_whitespace());
        let m1 = EmbeddingMatrix::random(&vocab, 8, 42);
        let m2 = EmbeddingMatrix::random(&vocab, 8, 42);
        assert_eq!(m1, m2);
        assert!(m1.row(0).iter().all(|&v| v == 0.0));
        assert!(m1.row(1).iter().any(|&v| v != 0.0));
        assert!(m1.vectors().iter().all(|v| v.abs() <= RANDOM_INIT_BOUND));
    }

    #[test]
    fn singleton_vocab_gives_zero_matrix() {
        let vocab = Vocabulary::build(Vec::<&str>::new());
        let m = EmbeddingMatrix::random(&vocab, 16, 1);
        assert_eq!(m.size(), 1);
        assert!(m.vectors().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn random_init_sample_mean_is_near_zero() {
        // Mean of n uniform(-b, b) samples has standard error b / sqrt(3 n).
        let words: Vec<String> = (0..10_000).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::build(words.iter().map(String::as_str));
        let m = EmbeddingMatrix::random(&vocab, 300, 9);
        let n = (10_000 * 300) as f64;
        let mean = m.vectors().iter().sum::<f64>() / n;
        let se = RANDOM_INIT_BOUND / (3.0 * n).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} exceeds 3 standard errors {se}");
    }

    #[test]
    fn pretrained_rows_are_copied_verbatim() {
        let vocab = Vocabulary::build("market stress".split_whitespace());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        std::fs::write(&path, "market 0.25 -1.5 3.0\nunrelated 1 2 3\n").unwrap();
        let (m, coverage) = EmbeddingMatrix::from_pretrained(&path, &vocab, 3, 7).unwrap();
        assert_eq!(coverage, 1);
        let id = vocab.id("market").unwrap();
        assert_eq!(m.row(id).to_vec(), vec![0.25, -1.5, 3.0]);
        // "stress" falls back to the random initialization.
        let fallback = EmbeddingMatrix::random(&vocab, 3, 7);
        let sid = vocab.id("stress").unwrap();
        assert_eq!(m.row(sid), fallback.row(sid));
        assert!(m.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_pretrained_file_behaves_as_random_init() {
        let vocab = Vocabulary::build("a b".split_whitespace());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        std::fs::write(&path, "").unwrap();
        let (m, coverage) = EmbeddingMatrix::from_pretrained(&path, &vocab, 4, 3).unwrap();
        assert_eq!(coverage, 0);
        assert_eq!(m, EmbeddingMatrix::random(&vocab, 4, 3));
    }

    #[test]
    fn full_coverage_counts_every_real_word() {
        let vocab = Vocabulary::build("a b".split_whitespace());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        std::fs::write(&path, "a 1 2\nb 3 4\n").unwrap();
        let (_, coverage) = EmbeddingMatrix::from_pretrained(&path, &vocab, 2, 3).unwrap();
        assert_eq!(coverage, vocab.size() - 1);
    }

    #[test]
    fn arity_and_dim_errors_are_distinguished() {
        let vocab = Vocabulary::build("a".split_whitespace());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        std::fs::write(&path, "a 1 2\nb 3\n").unwrap();
        match EmbeddingMatrix::from_pretrained(&path, &vocab, 2, 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match EmbeddingMatrix::from_pretrained(&path, &vocab, 5, 0) {
            Err(Error::Config(_)) => {}
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
