use std::collections::{BTreeMap, HashMap};

use super::neighbors::{Neighbor, NeighborList};
use crate::error::{Error, Result};
use crate::trec_io::Corpus;

/// Documents used as queries keep at most this many distinct terms, chosen by
/// descending term frequency.
pub const MAX_QUERY_TERMS: usize = 1024;

/// Lowercases, then splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Posting {
    doc: u32,
    tf: u32,
}

/// In-memory inverted index over a passage collection.
#[derive(Debug, Clone)]
pub struct LexicalIndex {
    doc_ids: Vec<String>,
    doc_lookup: HashMap<String, u32>,
    doc_lens: Vec<u32>,
    avg_doc_len: f64,
    terms: Vec<String>,
    vocab: HashMap<String, u32>,
    postings: Vec<Vec<Posting>>,
    /// Per document: (term id, tf) sorted by term id.
    doc_terms: Vec<Vec<(u32, u32)>>,
}

pub fn build_lexical_index(corpus: &Corpus) -> Result<LexicalIndex> {
    if corpus.texts.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut vocab: HashMap<String, u32> = HashMap::new();
    let mut terms: Vec<String> = Vec::new();
    let mut postings: Vec<Vec<Posting>> = Vec::new();
    let mut doc_ids = Vec::with_capacity(corpus.texts.len());
    let mut doc_lens = Vec::with_capacity(corpus.texts.len());
    let mut doc_terms = Vec::with_capacity(corpus.texts.len());

    // BTreeMap iteration gives ascending doc ids, so postings come out sorted.
    for (doc, (doc_id, text)) in corpus.texts.iter().enumerate() {
        let doc = doc as u32;
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        let tokens = tokenize(text);
        for token in &tokens {
            let id = match vocab.get(token) {
                Some(&id) => id,
                None => {
                    let id = terms.len() as u32;
                    vocab.insert(token.clone(), id);
                    terms.push(token.clone());
                    postings.push(Vec::new());
                    id
                }
            };
            *counts.entry(id).or_default() += 1;
        }
        for (&term, &tf) in &counts {
            postings[term as usize].push(Posting { doc, tf });
        }
        doc_ids.push(doc_id.clone());
        doc_lens.push(tokens.len() as u32);
        doc_terms.push(counts.into_iter().collect());
    }

    let total: u64 = doc_lens.iter().map(|&l| u64::from(l)).sum();
    let avg_doc_len = total as f64 / doc_ids.len() as f64;
    let doc_lookup = doc_ids
        .iter()
        .enumerate()
        .map(|(i, d)| (d.clone(), i as u32))
        .collect();

    Ok(LexicalIndex {
        doc_ids,
        doc_lookup,
        doc_lens,
        avg_doc_len,
        terms,
        vocab,
        postings,
        doc_terms,
    })
}

impl LexicalIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<u32> {
        self.doc_lookup
            .get(doc_id)
            .map(|&i| self.doc_lens[i as usize])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.doc_lookup.contains_key(doc_id)
    }

    /// Postings of `term` as `(doc_id, tf)` in ascending doc id order.
    pub fn postings(&self, term: &str) -> Option<Vec<(&str, u32)>> {
        let &t = self.vocab.get(term)?;
        Some(
            self.postings[t as usize]
                .iter()
                .map(|p| (self.doc_ids[p.doc as usize].as_str(), p.tf))
                .collect(),
        )
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.vocab
            .get(term)
            .map_or(0, |&t| self.postings[t as usize].len())
    }

    /// The term multiset of an indexed document as `(term, tf)`, ascending by term.
    pub fn doc_terms(&self, doc_id: &str) -> Option<Vec<(&str, u32)>> {
        let &d = self.doc_lookup.get(doc_id)?;
        let mut out: Vec<(&str, u32)> = self.doc_terms[d as usize]
            .iter()
            .map(|&(t, tf)| (self.terms[t as usize].as_str(), tf))
            .collect();
        out.sort_unstable();
        Some(out)
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, always positive.
    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Issues `probe` as a query with its own term frequencies as weights and
    /// returns the `k` best-scoring other documents. Only documents sharing at
    /// least one term with the probe are retrieved.
    pub fn bm25_neighbors(
        &self,
        probe: &str,
        k: usize,
        params: Bm25Params,
    ) -> Result<NeighborList> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let &probe_idx = self
            .doc_lookup
            .get(probe)
            .ok_or_else(|| Error::UnknownDocument(probe.to_owned()))?;

        let mut query = self.doc_terms[probe_idx as usize].clone();
        if query.len() > MAX_QUERY_TERMS {
            query.sort_by(|a, b| {
                b.1.cmp(&a.1)
                    .then_with(|| self.terms[a.0 as usize].cmp(&self.terms[b.0 as usize]))
            });
            query.truncate(MAX_QUERY_TERMS);
        }
        // Fixed accumulation order keeps scores bit-reproducible.
        query.sort_by(|a, b| self.terms[a.0 as usize].cmp(&self.terms[b.0 as usize]));

        let Bm25Params { k1, b } = params;
        let mut scores = vec![0.0f64; self.doc_ids.len()];
        let mut touched = vec![false; self.doc_ids.len()];
        for &(term, qtf) in &query {
            let list = &self.postings[term as usize];
            let idf = self.idf(list.len());
            for p in list {
                let tf = f64::from(p.tf);
                let norm = k1
                    * (1.0 - b + b * f64::from(self.doc_lens[p.doc as usize]) / self.avg_doc_len);
                scores[p.doc as usize] += f64::from(qtf) * idf * tf * (k1 + 1.0) / (tf + norm);
                touched[p.doc as usize] = true;
            }
        }

        let mut hits: Vec<Neighbor> = touched
            .iter()
            .enumerate()
            .filter(|&(d, &t)| t && d as u32 != probe_idx)
            .map(|(d, _)| Neighbor {
                doc_id: self.doc_ids[d].clone(),
                score: scores[d],
            })
            .collect();
        Ok(NeighborList::from_unsorted(&mut hits, k))
    }
}

/// Free-function form of [`LexicalIndex::bm25_neighbors`].
pub fn bm25_neighbors(
    index: &LexicalIndex,
    probe: &str,
    k: usize,
    params: Bm25Params,
) -> Result<NeighborList> {
    index.bm25_neighbors(probe, k, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(docs: &[(&str, &str)]) -> Corpus {
        Corpus {
            texts: docs
                .iter()
                .map(|(d, t)| (d.to_string(), t.to_string()))
                .collect(),
            queries: Default::default(),
        }
    }

    /// Textbook BM25 written directly from the formula over raw token lists.
    fn textbook_bm25(docs: &[(&str, &str)], probe: &str, target: &str, p: Bm25Params) -> f64 {
        let toks: BTreeMap<&str, Vec<String>> =
            docs.iter().map(|(d, t)| (*d, tokenize(t))).collect();
        let n = docs.len() as f64;
        let avgdl = toks.values().map(|t| t.len() as f64).sum::<f64>() / n;
        let dl = toks[target].len() as f64;
        let mut query: BTreeMap<&str, f64> = BTreeMap::new();
        for t in &toks[probe] {
            *query.entry(t.as_str()).or_default() += 1.0;
        }
        let mut score = 0.0;
        for (term, qtf) in query {
            let df = toks
                .values()
                .filter(|t| t.iter().any(|x| x == term))
                .count() as f64;
            let tf = toks[target].iter().filter(|x| *x == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += qtf * idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * dl / avgdl));
        }
        score
    }

    const TOY: [(&str, &str); 10] = [
        ("d0", "the quick brown fox jumps over the lazy dog"),
        ("d1", "a quick brown dog outpaces a quick red fox"),
        ("d2", "lazy afternoons in the sun with a sleepy dog"),
        ("d3", "foxes are small omnivorous mammals"),
        ("d4", "the stock market fell sharply on monday"),
        ("d5", "brown bears and red foxes share the forest"),
        ("d6", "the quick brown fox jumps over the lazy cat"),
        ("d7", "dog training tips for lazy owners"),
        ("d8", "monday markets: stocks fell, bonds rose"),
        ("d9", "quick quick quick brown"),
    ];

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("X-y"), ["x", "y"]);
        assert_eq!(tokenize("  Héllo,  WORLD!! 42 "), ["héllo", "world", "42"]);
        assert!(tokenize("--- ...").is_empty());
    }

    #[test]
    fn postings_and_lengths() {
        let index = build_lexical_index(&corpus(&[("d1", "a b a")])).unwrap();
        assert_eq!(index.postings("a").unwrap(), [("d1", 2)]);
        assert_eq!(index.postings("b").unwrap(), [("d1", 1)]);
        assert_eq!(index.doc_len("d1"), Some(3));
        assert!(index.postings("c").is_none());
    }

    #[test]
    fn average_length() {
        let index = build_lexical_index(&corpus(&[("d1", "a b c"), ("d2", "a b c d e")])).unwrap();
        assert_eq!(index.avg_doc_len(), 4.0);
        assert_eq!(index.doc_count(), 2);
    }

    #[test]
    fn lengths_match_term_frequencies() {
        let index = build_lexical_index(&corpus(&TOY)).unwrap();
        for (doc, _) in TOY {
            let sum: u32 = index.doc_terms(doc).unwrap().iter().map(|(_, tf)| tf).sum();
            assert_eq!(Some(sum), index.doc_len(doc));
        }
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(
            build_lexical_index(&Corpus::default()),
            Err(Error::Empty("corpus"))
        ));
    }

    #[test]
    fn scores_match_textbook_formula() {
        let index = build_lexical_index(&corpus(&TOY)).unwrap();
        let p = Bm25Params::default();
        for (probe, _) in TOY {
            let list = index.bm25_neighbors(probe, 100, p).unwrap();
            assert!(list.iter().all(|n| n.doc_id != probe));
            for n in list.iter() {
                let expected = textbook_bm25(&TOY, probe, &n.doc_id, p);
                assert!((n.score - expected).abs() < 1e-9, "{probe}->{}", n.doc_id);
            }
            // Every document sharing a term is retrieved.
            let sharing = TOY
                .iter()
                .filter(|(d, _)| *d != probe && textbook_bm25(&TOY, probe, d, p) > 0.0)
                .count();
            assert_eq!(list.len(), sharing);
        }
    }

    #[test]
    fn identical_text_ranks_first() {
        // d0 and d6 differ in one word; a verbatim copy of d0 must beat d6.
        let mut docs = TOY.to_vec();
        docs[9] = ("d9", "the quick brown fox jumps over the lazy dog");
        let index = build_lexical_index(&corpus(&docs)).unwrap();
        let list = index
            .bm25_neighbors("d0", 5, Bm25Params::default())
            .unwrap();
        assert_eq!(list.entries()[0].doc_id, "d9");
        assert_eq!(list.entries()[1].doc_id, "d6");
    }

    #[test]
    fn single_document_corpus() {
        let index = build_lexical_index(&corpus(&[("d1", "alone here")])).unwrap();
        assert!(index
            .bm25_neighbors("d1", 10, Bm25Params::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unknown_probe_and_k_limit() {
        let index = build_lexical_index(&corpus(&TOY)).unwrap();
        assert!(matches!(
            index.bm25_neighbors("nope", 3, Bm25Params::default()),
            Err(Error::UnknownDocument(_))
        ));
        assert_eq!(
            index
                .bm25_neighbors("d0", 2, Bm25Params::default())
                .unwrap()
                .len(),
            2
        );
        assert!(index
            .bm25_neighbors("d0", 0, Bm25Params::default())
            .is_err());
    }

    #[test]
    fn long_probe_is_capped() {
        let long: String = (0..1500).map(|i| format!("w{i} ")).collect();
        let text = format!("{long} w0 w1");
        let docs = [("p", text.as_str()), ("a", "w0"), ("b", "w999")];
        let index = build_lexical_index(&corpus(&docs)).unwrap();
        let list = index
            .bm25_neighbors("p", 10, Bm25Params::default())
            .unwrap();
        // w0 has tf 2 and survives the cap; w999 sorts after the cutoff.
        let ids: Vec<&str> = list.iter().map(|n| n.doc_id.as_str()).collect();
        assert_eq!(ids, ["a"]);
    }
}
