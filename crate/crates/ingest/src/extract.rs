use scraper::{ElementRef, Html, Selector};
use silverqa_core::model::{
    article_id_for_url, normalize_text, Article, Block, BlockKind, LanguageProfile,
};
use silverqa_core::{Error, Result};

use crate::sink::RawPage;

/// Absolute http(s) targets of all anchors, fragments removed, in document
/// order (duplicates kept).
pub fn extract_links(html: &str, base_url: &str) -> Vec<String> {
    let Ok(base) = url::Url::parse(base_url) else {
        return Vec::new();
    };
    let doc = Html::parse_document(html);
    let anchors = Selector::parse("a[href]").expect("static selector");
    doc.select(&anchors)
        .filter_map(|a| a.value().attr("href"))
        .filter_map(|href| base.join(href.trim()).ok())
        .filter(|u| matches!(u.scheme(), "http" | "https"))
        .map(|mut u| {
            u.set_fragment(None);
            u.to_string()
        })
        .collect()
}

fn selector(css: &str) -> Result<Selector> {
    Selector::parse(css).map_err(|e| Error::Config(format!("bad selector `{css}`: {e}")))
}

fn element_text(e: &ElementRef<'_>) -> String {
    normalize_text(&e.text().collect::<String>())
}

/// Value of a decimal digit in any of the common scripts.
fn digit_value(c: char) -> Option<u32> {
    const ZEROS: &[u32] = &[
        0x30, 0x660, 0x6F0, 0x7C0, 0x966, 0x9E6, 0xA66, 0xAE6, 0xB66, 0xBE6, 0xC66, 0xCE6,
        0xD66, 0xDE6, 0xE50, 0xED0, 0xF20, 0x1040, 0x17E0, 0x1810, 0xFF10,
    ];
    let cp = c as u32;
    ZEROS
        .iter()
        .find(|&&z| (z..z + 10).contains(&cp))
        .map(|z| cp - z)
}

/// First run of exactly four digits in `text`, in any supported script.
pub fn parse_year(text: &str) -> Option<i32> {
    let mut run: Vec<u32> = Vec::new();
    let check = |run: &mut Vec<u32>| -> Option<i32> {
        let out = (run.len() == 4).then(|| run.iter().fold(0i32, |acc, d| acc * 10 + *d as i32));
        run.clear();
        out
    };
    for c in text.chars() {
        match digit_value(c) {
            Some(d) => run.push(d),
            None => {
                if let Some(y) = check(&mut run) {
                    return Some(y);
                }
            }
        }
    }
    check(&mut run)
}

fn published_year(doc: &Html, profile: &LanguageProfile) -> Result<Option<i32>> {
    let sel = selector(&profile.selectors.date)?;
    for el in doc.select(&sel) {
        if let Some(y) = el.value().attr("datetime").and_then(parse_year) {
            return Ok(Some(y));
        }
        if let Some(y) = parse_year(&element_text(&el)) {
            return Ok(Some(y + profile.calendar_offset_years as i32));
        }
    }
    Ok(None)
}

/// Turns an HTML page into an article using the profile's selectors.
/// Returns `Ok(None)` when the page has no paragraph text.
pub fn extract_article(page: &RawPage, profile: &LanguageProfile) -> Result<Option<Article>> {
    let html = String::from_utf8_lossy(&page.body);
    if html.trim().is_empty() {
        return Ok(None);
    }
    let doc = Html::parse_document(&html);
    let s = &profile.selectors;
    let sub_sel = selector(&s.subheading)?;
    let para_sel = selector(&s.paragraph)?;
    let block_sel = selector(&format!("{}, {}", s.subheading, s.paragraph))?;

    // Body selectors are alternatives in priority order.
    let mut root = None;
    for alt in s.body.split(',').map(str::trim).filter(|a| !a.is_empty()) {
        if let Some(el) = doc.select(&selector(alt)?).next() {
            root = Some(el);
            break;
        }
    }
    let root = root.unwrap_or_else(|| doc.root_element());

    let title = doc
        .select(&selector(&s.title)?)
        .map(|e| element_text(&e))
        .find(|t| !t.is_empty())
        .or_else(|| {
            doc.select(&selector("title").expect("static selector"))
                .map(|e| element_text(&e))
                .find(|t| !t.is_empty())
        })
        .unwrap_or_default();

    let mut blocks = Vec::new();
    let mut taken = std::collections::HashSet::new();
    for el in root.select(&block_sel) {
        // Text already captured by an enclosing block is not repeated.
        if el.ancestors().any(|a| taken.contains(&a.id())) {
            continue;
        }
        let kind = if sub_sel.matches(&el) {
            BlockKind::Subheading
        } else if para_sel.matches(&el) {
            BlockKind::Paragraph
        } else {
            continue;
        };
        taken.insert(el.id());
        let text = element_text(&el);
        if text.is_empty() {
            continue;
        }
        blocks.push(Block {
            kind,
            text,
            index: blocks.len(),
        });
    }
    if !blocks.iter().any(|b| b.kind == BlockKind::Paragraph) {
        return Ok(None);
    }
    Ok(Some(Article {
        id: article_id_for_url(&page.url),
        url: page.url.clone(),
        title,
        language: profile.code.clone(),
        fetched_at: page.fetched_at,
        published_year: published_year(&doc, profile)?,
        blocks,
    }))
}
