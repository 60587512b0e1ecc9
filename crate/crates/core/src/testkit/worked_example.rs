//! The worked batch-normalization example: one instance, a recorded search,
//! the target's full text, and the three scripted model turns.

use std::path::Path;

use super::pdf::{build_pdf, PdfPage};
use crate::backend::{render_action, ScriptEntry};
use crate::domain::{Action, BenchmarkInstance, PaperDate, PaperMeta};
use crate::gateway::{RecordedProvider, RecordedSearch, SortOrder};

pub const INSTANCE_ID: &str = "worked-example";
pub const BN_ID: &str = "995c5f5e62614fcb4d2796ad2faab969da51713e";
pub const BN_TITLE: &str = "Batch Normalization: Accelerating Deep Network Training by Reducing Internal Covariate Shift";
pub const SECOND_ID: &str = "713bbd21bd4780fc92a69645a8bee2a005cc90dd";
pub const SECOND_TITLE: &str =
    "Comparison of normalization algorithms for cross-batch color segmentation of histopathological images";
pub const SOURCE_ID: &str = "2c03df8b48bf3fa39054345bafabfeff15bfd11d";
pub const QUERY: &str = "batch normalization";
pub const BN_LOCATOR: &str = "documents/batch-norm.pdf";

pub const EXCERPT: &str = "Our implementation for ImageNet follows the practice in [21, 41]. The image is \
resized with its shorter side randomly sampled in [256, 480] for scale augmentation [41]. A 224×224 crop \
is randomly sampled from an image or its horizontal flip, with the per-pixel mean subtracted [21]. The \
standard color augmentation in [21] is used. We adopt batch normalization (BN) [CITATION] right after \
each convolution and before activation.";

pub fn instance() -> BenchmarkInstance {
    BenchmarkInstance {
        instance_id: INSTANCE_ID.into(),
        excerpt: EXCERPT.into(),
        target_title: BN_TITLE.into(),
        target_paper_id: Some(BN_ID.into()),
        source_paper_id: SOURCE_ID.into(),
        source_date: PaperDate::new(2015, 12, 10).expect("valid date"),
        target_year: 2015,
        tags: vec!["Deep Learning Optimization".into()],
    }
}

fn paper(id: &str, title: &str, citations: u64, date: PaperDate, locator: Option<&str>) -> PaperMeta {
    PaperMeta {
        paper_id: id.into(),
        title: title.into(),
        r#abstract: String::new(),
        citation_count: citations,
        pub_date: date,
        fulltext_locator: locator.map(str::to_string),
    }
}

fn date(y: i32, m: u32, d: u32) -> PaperDate {
    PaperDate::new(y, m, d).expect("valid date")
}

/// The index: the two shown results, eight more normalization papers, the
/// source paper itself, and a later paper the filter must hide.
pub fn papers() -> Vec<PaperMeta> {
    let mut out = vec![
        paper(BN_ID, BN_TITLE, 39617, date(2015, 2, 11), Some(BN_LOCATOR)),
        paper(SECOND_ID, SECOND_TITLE, 18, date(2014, 6, 1), None),
        paper(SOURCE_ID, "Deep Residual Learning for Image Recognition", 150000, date(2015, 12, 10), None),
        paper(
            "later00000000000000000000000000000000001",
            "Layer normalization as an alternative to batch normalization",
            9000,
            date(2016, 7, 21),
            None,
        ),
    ];
    for k in 0..8u32 {
        out.push(paper(
            &format!("filler{k:034}"),
            &format!("Normalization study {} for batch statistics", k + 1),
            u64::from(10 - k),
            date(2010 + k as i32 % 5, 1 + k % 12, 1),
            None,
        ));
    }
    out
}

/// Provider order for the query: the source paper and the later paper are
/// interleaved and must be filtered out.
pub fn searches() -> Vec<RecordedSearch> {
    let papers = papers();
    let order = [0usize, 2, 1, 3, 4, 5, 6, 7, 8, 9, 10, 11];
    vec![RecordedSearch {
        query: QUERY.into(),
        sort: SortOrder::Relevance,
        results: order.iter().map(|&i| papers[i].paper_id.clone()).collect(),
    }]
}

pub fn bn_document() -> Vec<u8> {
    build_pdf(&[
        PdfPage::text(&[
            "Batch Normalization: Accelerating Deep Network Training by",
            "Reducing Internal Covariate Shift",
            "Sergey Ioffe, Christian Szegedy",
            "Abstract",
            "Shifting layer input distributions slow down training. We normalize layer inputs",
            "over each mini-batch and make the normalization part of the architecture.",
        ]),
        PdfPage::text(&["Figure 1: validation accuracy over training steps.", "3 Normalization via Mini-Batch Statistics"])
            .with_image(),
    ])
}

/// Scripted replies, keyed by instance id so any config can replay them.
pub fn script() -> Vec<ScriptEntry> {
    [
        (
            "The excerpt places batch normalization after each convolution; search for it by name.",
            Action::SearchRelevance { query: QUERY.into() },
        ),
        (
            "The first result is the batch normalization paper itself; read it to confirm.",
            Action::Read { paper_id: BN_ID.into() },
        ),
        (
            "The full text describes normalizing layer inputs with mini-batch statistics, as the excerpt uses it.",
            Action::Select { paper_id: BN_ID.into() },
        ),
    ]
    .into_iter()
    .map(|(reason, action)| ScriptEntry::reply(INSTANCE_ID, render_action(reason, &action)))
    .collect()
}

/// Writes the recorded-provider directory for this example.
pub fn write_provider_dir(dir: &Path) -> std::io::Result<()> {
    RecordedProvider::write_dir(dir, &papers(), &searches(), &[(BN_LOCATOR.to_string(), bn_document())])
}
