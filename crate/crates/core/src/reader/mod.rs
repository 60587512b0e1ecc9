//! PDF text extraction for the read command, and context budgeting of the
//! extracted text.

use std::collections::BTreeMap;

use lopdf::content::Content;
use lopdf::{Dictionary, Document, Encoding, Object, ObjectId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokens::Tokenizer;

pub const TRUNCATION_MARKER: &str = "[... truncated ...]";

/// Share of the post-marker budget kept from the start of the text.
const HEAD_SHARE: f64 = 0.8;

/// Nesting limit for form XObjects; guards against reference cycles.
const MAX_FORM_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedText {
    pub paper_id: String,
    pub text: String,
    pub char_count: usize,
    pub truncated: bool,
    pub dropped_regions: usize,
}

impl ExtractedText {
    pub fn new(paper_id: impl Into<String>, text: String, dropped_regions: usize) -> Self {
        let char_count = text.chars().count();
        Self { paper_id: paper_id.into(), text, char_count, truncated: false, dropped_regions }
    }

    pub fn for_paper(mut self, paper_id: impl Into<String>) -> Self {
        self.paper_id = paper_id.into();
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("corrupt document: {0}")]
    CorruptDocument(String),
    #[error("document is encrypted")]
    EncryptedDocument,
    #[error("document has no text layer")]
    NoTextLayer,
}

/// Extracts page text in page order. Image XObjects, inline images and form
/// XObjects that carry no text are skipped and counted in `dropped_regions`.
pub fn extract_text(bytes: &[u8]) -> Result<ExtractedText, ExtractError> {
    if bytes.is_empty() {
        return Err(ExtractError::CorruptDocument("empty input".into()));
    }
    let doc = Document::load_mem(bytes).map_err(|e| ExtractError::CorruptDocument(e.to_string()))?;
    if doc.is_encrypted() && doc.encryption_state.is_none() {
        return Err(ExtractError::EncryptedDocument);
    }
    let pages = doc.get_pages();
    if pages.is_empty() {
        return Err(ExtractError::CorruptDocument("no pages".into()));
    }
    let mut dropped = 0;
    let mut page_texts = Vec::with_capacity(pages.len());
    for page_id in pages.values() {
        let mut walker = Walker { doc: &doc, out: String::new(), dropped: 0 };
        walker.page(*page_id)?;
        dropped += walker.dropped;
        page_texts.push(tidy(&walker.out));
    }
    let text = page_texts.into_iter().filter(|t| !t.is_empty()).collect::<Vec<_>>().join("\n\n");
    if text.trim().is_empty() {
        return Err(ExtractError::NoTextLayer);
    }
    Ok(ExtractedText::new(String::new(), text, dropped))
}

fn tidy(raw: &str) -> String {
    raw.lines().map(str::trim_end).collect::<Vec<_>>().join("\n").trim().to_string()
}

struct Walker<'a> {
    doc: &'a Document,
    out: String,
    dropped: usize,
}

type Fonts<'a> = BTreeMap<Vec<u8>, Encoding<'a>>;

impl<'a> Walker<'a> {
    fn page(&mut self, page_id: ObjectId) -> Result<(), ExtractError> {
        let fonts = self
            .doc
            .get_page_fonts(page_id)
            .map(|fonts| {
                fonts
                    .into_iter()
                    .filter_map(|(name, dict)| dict.get_font_encoding(self.doc).ok().map(|enc| (name, enc)))
                    .collect()
            })
            .unwrap_or_default();
        let xobjects = self.page_xobjects(page_id);
        let content = self
            .doc
            .get_and_decode_page_content(page_id)
            .map_err(|e| ExtractError::CorruptDocument(format!("page content: {e}")))?;
        self.walk(&content, &fonts, &xobjects, 0);
        Ok(())
    }

    fn page_xobjects(&self, page_id: ObjectId) -> BTreeMap<Vec<u8>, ObjectId> {
        let mut map = BTreeMap::new();
        if let Ok((own, inherited)) = self.doc.get_page_resources(page_id) {
            let mut collect = |res: &Dictionary| self.collect_xobjects(res, &mut map);
            if let Some(res) = own {
                collect(res);
            }
            for id in inherited {
                if let Ok(res) = self.doc.get_dictionary(id) {
                    collect(res);
                }
            }
        }
        map
    }

    fn collect_xobjects(&self, resources: &Dictionary, map: &mut BTreeMap<Vec<u8>, ObjectId>) {
        let Ok(xobj) = resources.get(b"XObject") else { return };
        let Ok((_, xobj)) = self.doc.dereference(xobj) else { return };
        let Ok(dict) = xobj.as_dict() else { return };
        for (name, obj) in dict.iter() {
            if let Ok(id) = obj.as_reference() {
                map.entry(name.clone()).or_insert(id);
            }
        }
    }

    fn walk(
        &mut self,
        content: &Content,
        fonts: &Fonts<'a>,
        xobjects: &BTreeMap<Vec<u8>, ObjectId>,
        depth: usize,
    ) {
        let mut font: Option<&Encoding> = None;
        for op in &content.operations {
            let operands = &op.operands;
            match op.operator.as_str() {
                "Tf" => {
                    font = operands.first().and_then(|o| o.as_name().ok()).and_then(|n| fonts.get(n));
                }
                "Tj" => self.show(operands.first(), font),
                "'" => {
                    self.newline();
                    self.show(operands.first(), font);
                }
                "\"" => {
                    self.newline();
                    self.show(operands.get(2), font);
                }
                "TJ" => {
                    if let Some(Ok(items)) = operands.first().map(Object::as_array) {
                        for item in items {
                            match item {
                                Object::String(..) => self.show(Some(item), font),
                                // Large negative kerning is a word gap.
                                other => {
                                    if number(other).is_some_and(|n| n < -200.0) {
                                        self.space();
                                    }
                                }
                            }
                        }
                    }
                }
                "Td" | "TD" => {
                    if operands.get(1).and_then(number).is_some_and(|ty| ty != 0.0) {
                        self.newline();
                    } else {
                        self.space();
                    }
                }
                "T*" | "Tm" | "ET" => self.newline(),
                "BI" => self.dropped += 1,
                "Do" => {
                    let id = operands.first().and_then(|o| o.as_name().ok()).and_then(|n| xobjects.get(n));
                    if let Some(id) = id {
                        self.xobject(*id, fonts, depth);
                    }
                }
                _ => {}
            }
        }
    }

    fn xobject(&mut self, id: ObjectId, fonts: &Fonts<'a>, depth: usize) {
        let Ok(stream) = self.doc.get_object(id).and_then(Object::as_stream) else { return };
        let subtype = stream.dict.get(b"Subtype").and_then(Object::as_name).unwrap_or(b"");
        match subtype {
            b"Image" => self.dropped += 1,
            b"Form" if depth < MAX_FORM_DEPTH => {
                let data = stream.decompressed_content().unwrap_or_else(|_| stream.content.clone());
                let Ok(content) = Content::decode(&data) else {
                    self.dropped += 1;
                    return;
                };
                let mut inner = BTreeMap::new();
                if let Ok(res) = stream.dict.get(b"Resources").and_then(|r| self.doc.dereference(r)) {
                    if let Ok(res) = res.1.as_dict() {
                        self.collect_xobjects(res, &mut inner);
                    }
                }
                let before = self.out.trim_end().len();
                let dropped_before = self.dropped;
                self.walk(&content, fonts, &inner, depth + 1);
                let wrote_text = self.out.trim_end().len() > before;
                // A form with neither text nor nested images is vector artwork.
                if !wrote_text && self.dropped == dropped_before {
                    self.dropped += 1;
                }
            }
            _ => {}
        }
    }

    fn show(&mut self, obj: Option<&Object>, font: Option<&Encoding>) {
        let Some(Object::String(bytes, _)) = obj else { return };
        let decoded = font
            .and_then(|enc| Document::decode_text(enc, bytes).ok())
            .unwrap_or_else(|| bytes.iter().map(|&b| b as char).collect());
        self.out.push_str(&decoded);
    }

    fn space(&mut self) {
        if !self.out.is_empty() && !self.out.ends_with(char::is_whitespace) {
            self.out.push(' ');
        }
    }

    fn newline(&mut self) {
        if !self.out.is_empty() && !self.out.ends_with('\n') {
            let trimmed = self.out.trim_end_matches(' ').len();
            self.out.truncate(trimmed);
            self.out.push('\n');
        }
    }
}

fn number(obj: &Object) -> Option<f64> {
    match obj {
        Object::Integer(i) => Some(*i as f64),
        Object::Real(r) => Some(f64::from(*r)),
        _ => None,
    }
}

/// Fits `t` into `budget` tokens. Over-budget text keeps a head and a tail
/// around a marker line, all together counting `budget` tokens; text already
/// within budget is returned as is, so the function is idempotent.
pub fn budget_text(t: ExtractedText, budget: usize, tokenizer: &dyn Tokenizer) -> ExtractedText {
    assert!(budget > 0, "reading budget must be positive");
    if tokenizer.count(&t.text) <= budget {
        return t;
    }
    let available = budget.saturating_sub(tokenizer.count(TRUNCATION_MARKER));
    let head_n = (available as f64 * HEAD_SHARE).floor() as usize;
    let tail_n = available - head_n;
    let head = tokenizer.head(&t.text, head_n).trim_end();
    let tail = tokenizer.tail(&t.text, tail_n).trim_start();
    let text = format!("{head}\n{TRUNCATION_MARKER}\n{tail}");
    ExtractedText { char_count: text.chars().count(), text, truncated: true, ..t }
}
