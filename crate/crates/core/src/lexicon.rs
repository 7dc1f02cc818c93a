//! Category lexicon induction and first-stage term matching.
//!
//! A lexicon term is a lemma that occurs in posts of exactly one category.
//! Per category, candidates are ranked by total frequency (lexicographic
//! tie-break) and the top `ceil(fraction * candidates)` are kept. A post
//! containing a lexicon term is classified without touching the ML model.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Category;
use crate::error::{Error, Result};

/// One induced lexicon entry: the term and its total training frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconTerm {
    pub term: String,
    pub freq: u64,
}

/// Per-category unique-term lexica. Term sets are pairwise disjoint by
/// construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryLexicons {
    pub drop: Vec<LexiconTerm>,
    pub rise: Vec<LexiconTerm>,
    pub other: Vec<LexiconTerm>,
}

impl CategoryLexicons {
    pub fn terms(&self, category: Category) -> &[LexiconTerm] {
        match category {
            Category::ShortTermDrop => &self.drop,
            Category::ShortTermRise => &self.rise,
            Category::Other => &self.other,
        }
    }

    fn terms_mut(&mut self, category: Category) -> &mut Vec<LexiconTerm> {
        match category {
            Category::ShortTermDrop => &mut self.drop,
            Category::ShortTermRise => &mut self.rise,
            Category::Other => &mut self.other,
        }
    }

    pub fn term_set(&self, category: Category) -> BTreeSet<&str> {
        self.terms(category)
            .iter()
            .map(|t| t.term.as_str())
            .collect()
    }

    pub fn total_terms(&self) -> usize {
        self.drop.len() + self.rise.len() + self.other.len()
    }
}

/// Induce the per-category lexica from a tokenized, labeled corpus.
///
/// Candidate terms for a category occur in at least one post of that category
/// and in no post of any other. Candidates are ranked by total occurrence
/// count (descending, ties lexicographic ascending) and the top
/// `ceil(fraction * |candidates|)` survive. A category without candidates
/// yields an empty lexicon and a warning, not an error.
pub fn induce_lexicons(
    corpus: &[(Vec<String>, Category)],
    fraction: f64,
) -> Result<CategoryLexicons> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "lexicon fraction must be in (0, 1], got {fraction}"
        )));
    }
    if corpus.is_empty() {
        return Err(Error::Invalid("cannot induce lexicons from an empty corpus".into()));
    }

    // term -> (categories it appears in, total occurrence count)
    let mut membership: BTreeMap<&str, (BTreeSet<Category>, u64)> = BTreeMap::new();
    for (tokens, category) in corpus {
        for token in tokens {
            let entry = membership.entry(token.as_str()).or_default();
            entry.0.insert(*category);
            entry.1 += 1;
        }
    }

    let mut lexicons = CategoryLexicons::default();
    for category in Category::ALL {
        let mut candidates: Vec<(&str, u64)> = membership
            .iter()
            .filter(|(_, (cats, _))| cats.len() == 1 && cats.contains(&category))
            .map(|(term, (_, freq))| (*term, *freq))
            .collect();
        if candidates.is_empty() {
            log::warn!("category {category} has no unique terms; lexicon left empty");
            continue;
        }
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let keep = ((fraction * candidates.len() as f64).ceil() as usize).max(1);
        candidates.truncate(keep);
        *lexicons.terms_mut(category) = candidates
            .into_iter()
            .map(|(term, freq)| LexiconTerm {
                term: term.to_string(),
                freq,
            })
            .collect();
    }

    debug_assert!(disjoint(&lexicons));
    Ok(lexicons)
}

fn disjoint(lexicons: &CategoryLexicons) -> bool {
    let drop = lexicons.term_set(Category::ShortTermDrop);
    let rise = lexicons.term_set(Category::ShortTermRise);
    let other = lexicons.term_set(Category::Other);
    drop.intersection(&rise).next().is_none()
        && drop.intersection(&other).next().is_none()
        && rise.intersection(&other).next().is_none()
}

/// Match a post's tokens against the lexica.
///
/// The category with the most distinct matched terms wins; a tie between
/// categories (or no match at all) abstains so the ML stage decides. Matched
/// terms are returned sorted, making the result invariant under token
/// permutation.
pub fn match_lexicon(
    tokens: &[String],
    lexicons: &CategoryLexicons,
) -> Option<(Category, Vec<String>)> {
    let token_set: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
    let mut best: Option<(Category, Vec<String>)> = None;
    let mut tied = false;
    for category in Category::ALL {
        let matched: Vec<String> = lexicons
            .terms(category)
            .iter()
            .filter(|t| token_set.contains(t.term.as_str()))
            .map(|t| t.term.clone())
            .collect();
        if matched.is_empty() {
            continue;
        }
        match &best {
            Some((_, prev)) if prev.len() == matched.len() => tied = true,
            Some((_, prev)) if prev.len() < matched.len() => {
                best = Some((category, matched));
                tied = false;
            }
            None => best = Some((category, matched)),
            _ => {}
        }
    }
    if tied {
        return None;
    }
    best.map(|(category, mut terms)| {
        terms.sort();
        (category, terms)
    })
}
