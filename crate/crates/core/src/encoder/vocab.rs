//! Two tokenizers behind one interface: a word-level vocabulary built from
//! a corpus (tests, toy encoder) and a subword vocabulary read from a
//! pretrained encoder's token list.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";
pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabKind {
    WordLevel,
    WordPiece,
}

#[derive(Debug, Clone)]
pub enum Vocabulary {
    WordLevel(WordLevelVocab),
    WordPiece(WordPieceVocab),
}

impl Vocabulary {
    pub fn kind(&self) -> VocabKind {
        match self {
            Vocabulary::WordLevel(_) => VocabKind::WordLevel,
            Vocabulary::WordPiece(_) => VocabKind::WordPiece,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Vocabulary::WordLevel(v) => v.tokens.len(),
            Vocabulary::WordPiece(v) => v.tokens.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pad_id(&self) -> usize {
        match self {
            Vocabulary::WordLevel(_) => 0,
            Vocabulary::WordPiece(v) => v.pad_id,
        }
    }

    pub fn unk_id(&self) -> usize {
        match self {
            Vocabulary::WordLevel(_) => 1,
            Vocabulary::WordPiece(v) => v.unk_id,
        }
    }

    pub fn cls_id(&self) -> usize {
        match self {
            Vocabulary::WordLevel(_) => 2,
            Vocabulary::WordPiece(v) => v.cls_id,
        }
    }

    pub fn sep_id(&self) -> usize {
        match self {
            Vocabulary::WordLevel(_) => 3,
            Vocabulary::WordPiece(v) => v.sep_id,
        }
    }

    /// Token ids for a text, without any control tokens.
    pub fn tokenize(&self, text: &str) -> Vec<usize> {
        match self {
            Vocabulary::WordLevel(v) => v.tokenize(text),
            Vocabulary::WordPiece(v) => v.tokenize(text),
        }
    }

    pub fn token(&self, id: usize) -> &str {
        match self {
            Vocabulary::WordLevel(v) => &v.tokens[id],
            Vocabulary::WordPiece(v) => &v.tokens[id],
        }
    }

    /// Write one token per line; the line number is the id.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tokens = match self {
            Vocabulary::WordLevel(v) => &v.tokens,
            Vocabulary::WordPiece(v) => &v.tokens,
        };
        let mut out = tokens.join("\n");
        out.push('\n');
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path, kind: VocabKind) -> Result<Vocabulary> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let tokens: Vec<String> = text.lines().map(str::to_string).collect();
        match kind {
            VocabKind::WordLevel => Ok(Vocabulary::WordLevel(WordLevelVocab::from_tokens(
                tokens, path,
            )?)),
            VocabKind::WordPiece => Ok(Vocabulary::WordPiece(WordPieceVocab::from_tokens(
                tokens, path,
            )?)),
        }
    }
}

/// Whitespace-word vocabulary with fixed control-token ids
/// (PAD=0, UNK=1, CLS=2, SEP=3). Lowercases on both build and lookup.
#[derive(Debug, Clone)]
pub struct WordLevelVocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl WordLevelVocab {
    /// Build from a corpus: reserved tokens first, then the sorted set of
    /// distinct lowercased words.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> WordLevelVocab {
        let mut words = BTreeSet::new();
        for t in texts {
            for w in t.split_whitespace() {
                words.insert(w.to_lowercase());
            }
        }
        let mut tokens: Vec<String> = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN]
            .iter()
            .map(|s| s.to_string())
            .collect();
        tokens.extend(words);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        WordLevelVocab { tokens, index }
    }

    fn from_tokens(tokens: Vec<String>, path: &Path) -> Result<WordLevelVocab> {
        let expected = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN];
        if tokens.len() < 4 || tokens[..4] != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "word-level vocabulary must start with [PAD] [UNK] [CLS] [SEP]".into(),
            });
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(WordLevelVocab { tokens, index })
    }

    fn tokenize(&self, text: &str) -> Vec<usize> {
        text.split_whitespace()
            .map(|w| {
                self.index
                    .get(&w.to_lowercase())
                    .copied()
                    .unwrap_or(1)
            })
            .collect()
    }
}

/// Greedy longest-match subword tokenizer over a pretrained token list,
/// with the usual uncased preprocessing: control-character cleanup,
/// lowercasing, accent folding, punctuation splitting, and per-character
/// splitting of ideographs.
#[derive(Debug, Clone)]
pub struct WordPieceVocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    pad_id: usize,
    unk_id: usize,
    cls_id: usize,
    sep_id: usize,
    pub lowercase: bool,
    max_word_chars: usize,
}

impl WordPieceVocab {
    pub fn from_tokens(tokens: Vec<String>, path: &Path) -> Result<WordPieceVocab> {
        let index: HashMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let need = |name: &str| -> Result<usize> {
            index.get(name).copied().ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("vocabulary lacks the {name} token"),
            })
        };
        Ok(WordPieceVocab {
            pad_id: need(PAD_TOKEN)?,
            unk_id: need(UNK_TOKEN)?,
            cls_id: need(CLS_TOKEN)?,
            sep_id: need(SEP_TOKEN)?,
            tokens,
            index,
            lowercase: true,
            max_word_chars: 100,
        })
    }

    fn tokenize(&self, text: &str) -> Vec<usize> {
        let mut ids = Vec::new();
        for word in basic_tokenize(text, self.lowercase) {
            self.wordpiece(&word, &mut ids);
        }
        ids
    }

    /// Greedy longest-match segmentation of one word; continuation pieces
    /// carry the `##` prefix. Unsegmentable or over-long words map to UNK.
    fn wordpiece(&self, word: &str, out: &mut Vec<usize>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > self.max_word_chars {
            out.push(self.unk_id);
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let mut piece: String = chars[start..end].iter().collect();
                if start > 0 {
                    piece = format!("##{piece}");
                }
                if let Some(&id) = self.index.get(&piece) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.unk_id);
                    return;
                }
            }
        }
        out.extend(pieces);
    }
}

/// Pre-tokenization shared with the original uncased subword pipeline:
/// drop control characters, normalize whitespace, optionally lowercase and
/// fold accents, isolate punctuation and ideographic characters.
fn basic_tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch == '\u{0}' || ch == '\u{fffd}' || (ch.is_control() && !ch.is_whitespace()) {
            continue;
        }
        if ch.is_whitespace() {
            cleaned.push(' ');
        } else if is_cjk(ch) {
            cleaned.push(' ');
            cleaned.push(ch);
            cleaned.push(' ');
        } else {
            cleaned.push(ch);
        }
    }

    let mut words = Vec::new();
    for raw in cleaned.split_whitespace() {
        let folded: String = if lowercase {
            raw.chars()
                .flat_map(|c| c.to_lowercase())
                .map(fold_accent)
                .collect()
        } else {
            raw.to_string()
        };
        // Split punctuation into standalone tokens.
        let mut current = String::new();
        for ch in folded.chars() {
            if is_punctuation(ch) {
                if !current.is_empty() {
                    words.push(std::mem::take(&mut current));
                }
                words.push(ch.to_string());
            } else {
                current.push(ch);
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
    }
    words
}

/// Map common precomposed Latin letters to their unaccented base. Input is
/// already lowercased. Characters outside the table pass through.
fn fold_accent(c: char) -> char {
    match c {
        'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' | 'ā' | 'ă' | 'ą' => 'a',
        'ç' | 'ć' | 'ĉ' | 'ċ' | 'č' => 'c',
        'ď' | 'đ' => 'd',
        'è' | 'é' | 'ê' | 'ë' | 'ē' | 'ĕ' | 'ė' | 'ę' | 'ě' => 'e',
        'ĝ' | 'ğ' | 'ġ' | 'ģ' => 'g',
        'ĥ' | 'ħ' => 'h',
        'ì' | 'í' | 'î' | 'ï' | 'ĩ' | 'ī' | 'ĭ' | 'į' | 'ı' => 'i',
        'ĵ' => 'j',
        'ķ' => 'k',
        'ĺ' | 'ļ' | 'ľ' | 'ŀ' | 'ł' => 'l',
        'ñ' | 'ń' | 'ņ' | 'ň' => 'n',
        'ò' | 'ó' | 'ô' | 'õ' | 'ö' | 'ø' | 'ō' | 'ŏ' | 'ő' => 'o',
        'ŕ' | 'ŗ' | 'ř' => 'r',
        'ś' | 'ŝ' | 'ş' | 'š' => 's',
        'ţ' | 'ť' | 'ŧ' => 't',
        'ù' | 'ú' | 'û' | 'ü' | 'ũ' | 'ū' | 'ŭ' | 'ů' | 'ű' | 'ų' => 'u',
        'ŵ' => 'w',
        'ý' | 'ÿ' | 'ŷ' => 'y',
        'ź' | 'ż' | 'ž' => 'z',
        other => other,
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}' | '\u{2013}' | '\u{2014}'
                | '\u{2026}' | '\u{00ab}' | '\u{00bb}' | '\u{00a1}' | '\u{00bf}'
        )
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2B73F
        | 0x2B740..=0x2B81F
        | 0x2B820..=0x2CEAF
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}
