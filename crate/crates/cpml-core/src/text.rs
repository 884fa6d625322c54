//! Bag-of-words featurization of clinical notes: cleanup, tokenization,
//! stop-word filtering, frequency-capped vocabulary and the
//! document-term matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Function words excluded from the vocabulary. Extendable at runtime;
/// iterative curation is served by [`term_histogram`] plus a rebuild.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWordList {
    terms: BTreeSet<String>,
}

/// Seed list of common English function words.
pub(crate) const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "could", "did", "do", "for", "from", "had", "has", "have", "he", "her",
    "his", "if", "in", "into", "is", "it", "its", "no", "not", "of", "on", "or", "our", "she",
    "so", "than", "that", "the", "their", "then", "there", "these", "this", "to", "was", "were",
    "which", "will", "with",
];

impl StopWordList {
    /// The built-in English function-word list.
    pub fn default_english() -> StopWordList {
        StopWordList::from_terms(DEFAULT_STOP_WORDS.iter().copied())
    }

    pub fn empty() -> StopWordList {
        StopWordList {
            terms: BTreeSet::new(),
        }
    }

    /// Builds a list from arbitrary terms; entries are lowercased and inner
    /// whitespace is rejected by splitting (one word per entry).
    pub fn from_terms<'a, I: IntoIterator<Item = &'a str>>(terms: I) -> StopWordList {
        let mut list = StopWordList::empty();
        list.extend(terms);
        list
    }

    pub fn extend<'a, I: IntoIterator<Item = &'a str>>(&mut self, terms: I) {
        for term in terms {
            for word in term.split_whitespace() {
                self.terms.insert(word.to_lowercase());
            }
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains(token)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|s| s.as_str())
    }
}

/// Column dictionary of the document-term matrix. Terms are ordered by
/// descending corpus count, ties broken lexicographically, capped at
/// `max_features`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    max_features: usize,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    /// Column position of a term, if in the vocabulary.
    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    fn from_ordered_terms(terms: Vec<String>, max_features: usize) -> Vocabulary {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            index,
            max_features,
        }
    }

    /// One term per line, line order = column order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for term in &self.terms {
            writeln!(f, "{term}")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut terms = Vec::new();
        for line in f.lines() {
            let line = line?;
            if !line.is_empty() {
                terms.push(line);
            }
        }
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let n = terms.len();
        Ok(Vocabulary::from_ordered_terms(terms, n))
    }
}

/// Sparse document-term count matrix. Each logical row has
/// `vocabulary.len()` columns; only nonzero counts are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTermMatrix {
    pub doc_ids: Vec<String>,
    pub vocabulary: Vocabulary,
    /// Per document: (column, count) pairs sorted by column.
    rows: Vec<Vec<(u32, u32)>>,
}

impl DocumentTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    /// Dense counts of one row.
    pub fn dense_row(&self, i: usize) -> Vec<u32> {
        let mut row = vec![0u32; self.n_terms()];
        for &(col, count) in &self.rows[i] {
            row[col as usize] = count;
        }
        row
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.rows[i].iter().map(|&(_, c)| c as u64).sum()
    }

    /// Dense f64 matrix of the selected rows, in the given order.
    pub fn dense_rows(&self, rows: &[usize]) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((rows.len(), self.n_terms()));
        for (r, &i) in rows.iter().enumerate() {
            for &(col, count) in &self.rows[i] {
                out[[r, col as usize]] = count as f64;
            }
        }
        out
    }

    /// Sparse triplet export: `doc_id,term_index,count`, rows in document
    /// order then column order.
    pub fn save_triplets(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer
            .write_record(["doc_id", "term_index", "count"])
            .map_err(|e| Error::Csv {
                file: path.display().to_string(),
                row: 1,
                message: e.to_string(),
            })?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(col, count) in row {
                writer
                    .write_record([
                        self.doc_ids[i].as_str(),
                        &col.to_string(),
                        &count.to_string(),
                    ])
                    .map_err(|e| Error::Csv {
                        file: path.display().to_string(),
                        row: 0,
                        message: e.to_string(),
                    })?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    /// Rebuilds a matrix from a triplet export. `doc_ids` fixes the row set
    /// and order (documents with no in-vocabulary tokens have no triplets).
    pub fn load_triplets(
        path: &Path,
        doc_ids: Vec<String>,
        vocabulary: Vocabulary,
    ) -> Result<DocumentTermMatrix> {
        let file = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new().from_path(path)?;
        let positions: HashMap<&str, usize> = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut rows: Vec<Vec<(u32, u32)>> = vec![Vec::new(); doc_ids.len()];
        for (i, row) in reader.records().enumerate() {
            let row_no = i + 2;
            let row = row.map_err(|e| Error::Csv {
                file: file.clone(),
                row: row_no,
                message: e.to_string(),
            })?;
            let doc = positions.get(&row[0]).ok_or_else(|| Error::Csv {
                file: file.clone(),
                row: row_no,
                message: format!("unknown doc_id {:?}", &row[0]),
            })?;
            let col: u32 = row[1].parse().map_err(|_| Error::InvalidField {
                file: file.clone(),
                row: row_no,
                column: "term_index".into(),
                message: format!("not an index: {:?}", &row[1]),
            })?;
            if col as usize >= vocabulary.len() {
                return Err(Error::InvalidField {
                    file: file.clone(),
                    row: row_no,
                    column: "term_index".into(),
                    message: format!("index {} out of range for {} terms", col, vocabulary.len()),
                });
            }
            let count: u32 = row[2].parse().map_err(|_| Error::InvalidField {
                file: file.clone(),
                row: row_no,
                column: "count".into(),
                message: format!("not a count: {:?}", &row[2]),
            })?;
            rows[*doc].push((col, count));
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|&(col, _)| col);
        }
        Ok(DocumentTermMatrix {
            doc_ids,
            vocabulary,
            rows,
        })
    }
}

/// Replaces every run of newline/carriage-return characters with a single
/// space; absent text becomes a single space. Nothing else is altered.
pub fn clean_text(raw: Option<&str>) -> String {
    match raw {
        None => " ".to_string(),
        Some(text) => {
            let mut out = String::with_capacity(text.len());
            let mut in_break = false;
            for ch in text.chars() {
                if ch == '\n' || ch == '\r' {
                    if !in_break {
                        out.push(' ');
                        in_break = true;
                    }
                } else {
                    out.push(ch);
                    in_break = false;
                }
            }
            out
        }
    }
}

/// Splits into lowercased maximal runs of alphabetic characters; any
/// non-alphabetic character separates. Tokens shorter than 2 characters are
/// dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphabetic() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else if !current.is_empty() {
            if current.chars().count() >= 2 {
                tokens.push(std::mem::take(&mut current));
            } else {
                current.clear();
            }
        }
    }
    if current.chars().count() >= 2 {
        tokens.push(current);
    }
    tokens
}

/// Corpus frequency of one term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermCount {
    pub token: String,
    /// Number of documents containing the term at least once.
    pub doc_frequency: usize,
    /// Total occurrences across the corpus.
    pub total_count: u64,
}

/// Corpus-wide term frequencies, sorted by total count descending, ties
/// broken lexicographically.
pub fn term_histogram(corpus: &[Vec<String>]) -> Vec<TermCount> {
    let mut totals: BTreeMap<&str, (usize, u64)> = BTreeMap::new();
    for doc in corpus {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for token in doc {
            let entry = totals.entry(token).or_insert((0, 0));
            entry.1 += 1;
            if seen.insert(token) {
                entry.0 += 1;
            }
        }
    }
    let mut table: Vec<TermCount> = totals
        .into_iter()
        .map(|(token, (doc_frequency, total_count))| TermCount {
            token: token.to_string(),
            doc_frequency,
            total_count,
        })
        .collect();
    table.sort_by(|a, b| {
        b.total_count
            .cmp(&a.total_count)
            .then_with(|| a.token.cmp(&b.token))
    });
    table
}

/// Builds the capped vocabulary: stop words out, then the `max_features`
/// highest-count terms (ties lexicographic).
pub fn build_vocabulary(
    corpus: &[Vec<String>],
    stop_words: &StopWordList,
    max_features: usize,
) -> Result<Vocabulary> {
    assert!(max_features >= 1, "max_features must be at least 1");
    let mut kept: Vec<TermCount> = term_histogram(corpus)
        .into_iter()
        .filter(|t| !stop_words.contains(&t.token))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.truncate(max_features);
    let terms = kept.into_iter().map(|t| t.token).collect();
    Ok(Vocabulary::from_ordered_terms(terms, max_features))
}

/// Counts vocabulary terms per document. Out-of-vocabulary tokens are
/// ignored.
pub fn vectorize(
    corpus: &[Vec<String>],
    vocabulary: &Vocabulary,
    doc_ids: &[String],
) -> DocumentTermMatrix {
    assert_eq!(corpus.len(), doc_ids.len(), "one id per document");
    let rows = corpus
        .iter()
        .map(|doc| {
            let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
            for token in doc {
                if let Some(col) = vocabulary.position(token) {
                    *counts.entry(col as u32).or_insert(0) += 1;
                }
            }
            counts.into_iter().collect()
        })
        .collect();
    DocumentTermMatrix {
        doc_ids: doc_ids.to_vec(),
        vocabulary: vocabulary.clone(),
        rows,
    }
}
