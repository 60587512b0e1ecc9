//! Minimal PDF writer for fixtures: text lines in Helvetica, optionally an
//! image XObject or a vector-only form XObject per page.

use lopdf::content::{Content, Operation};
use lopdf::{dictionary, Document, Object, Stream};

#[derive(Debug, Clone, Default)]
pub struct PdfPage {
    lines: Vec<String>,
    image: bool,
    vector_figure: bool,
}

impl PdfPage {
    pub fn text(lines: &[&str]) -> Self {
        Self { lines: lines.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn from_paragraph(text: &str, words_per_line: usize) -> Self {
        let words: Vec<&str> = text.split_whitespace().collect();
        let lines = words.chunks(words_per_line.max(1)).map(|c| c.join(" ")).collect();
        Self { lines, ..Self::default() }
    }

    pub fn with_image(mut self) -> Self {
        self.image = true;
        self
    }

    pub fn with_vector_figure(mut self) -> Self {
        self.vector_figure = true;
        self
    }
}

fn document(pages: &[PdfPage]) -> Document {
    let mut doc = Document::with_version("1.5");
    let pages_id = doc.new_object_id();
    let font_id = doc.add_object(dictionary! {
        "Type" => "Font",
        "Subtype" => "Type1",
        "BaseFont" => "Helvetica",
        "Encoding" => "WinAnsiEncoding",
    });
    let image_id = doc.add_object(Stream::new(
        dictionary! {
            "Type" => "XObject",
            "Subtype" => "Image",
            "Width" => 2,
            "Height" => 2,
            "ColorSpace" => "DeviceGray",
            "BitsPerComponent" => 8,
        },
        vec![0, 255, 255, 0],
    ));
    let form_id = doc.add_object(Stream::new(
        dictionary! {
            "Type" => "XObject",
            "Subtype" => "Form",
            "BBox" => vec![0.into(), 0.into(), 100.into(), 100.into()],
        },
        b"0 0 m 100 100 l S".to_vec(),
    ));
    let mut kids = Vec::new();
    for page in pages {
        let mut ops = vec![
            Operation::new("BT", vec![]),
            Operation::new("Tf", vec!["F1".into(), 11.into()]),
            Operation::new("Td", vec![72.into(), 720.into()]),
        ];
        for (i, line) in page.lines.iter().enumerate() {
            if i > 0 {
                ops.push(Operation::new("Td", vec![0.into(), (-14).into()]));
            }
            ops.push(Operation::new("Tj", vec![Object::string_literal(line.as_str())]));
        }
        ops.push(Operation::new("ET", vec![]));
        if page.image {
            ops.push(Operation::new("q", vec![]));
            ops.push(Operation::new("cm", vec![200.into(), 0.into(), 0.into(), 150.into(), 72.into(), 300.into()]));
            ops.push(Operation::new("Do", vec!["Im1".into()]));
            ops.push(Operation::new("Q", vec![]));
        }
        if page.vector_figure {
            ops.push(Operation::new("Do", vec!["Fm1".into()]));
        }
        let content = Content { operations: ops }.encode().expect("content encodes");
        let content_id = doc.add_object(Stream::new(dictionary! {}, content));
        let page_id = doc.add_object(dictionary! {
            "Type" => "Page",
            "Parent" => pages_id,
            "Contents" => content_id,
            "Resources" => dictionary! {
                "Font" => dictionary! { "F1" => font_id },
                "XObject" => dictionary! { "Im1" => image_id, "Fm1" => form_id },
            },
            "MediaBox" => vec![0.into(), 0.into(), 612.into(), 792.into()],
        });
        kids.push(page_id.into());
    }
    let count = kids.len() as i64;
    doc.objects.insert(
        pages_id,
        Object::Dictionary(dictionary! { "Type" => "Pages", "Kids" => kids, "Count" => count }),
    );
    let catalog_id = doc.add_object(dictionary! { "Type" => "Catalog", "Pages" => pages_id });
    doc.trailer.set("Root", catalog_id);
    doc
}

fn save(mut doc: Document) -> Vec<u8> {
    let mut out = Vec::new();
    doc.save_to(&mut out).expect("in-memory save");
    out
}

pub fn build_pdf(pages: &[PdfPage]) -> Vec<u8> {
    save(document(pages))
}

/// A document that needs a user password to open.
pub fn build_encrypted_pdf(pages: &[PdfPage], user_password: &str) -> Vec<u8> {
    let mut doc = document(pages);
    doc.trailer.set("ID", vec![Object::string_literal("fixture-id"), Object::string_literal("fixture-id")]);
    let state = lopdf::EncryptionState::try_from(lopdf::EncryptionVersion::V2 {
        document: &doc,
        owner_password: "owner",
        user_password,
        key_length: 128,
        permissions: lopdf::Permissions::all(),
    })
    .expect("encryption parameters are valid");
    doc.encrypt(&state).expect("document encrypts");
    save(doc)
}
