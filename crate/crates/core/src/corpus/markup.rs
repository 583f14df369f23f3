use alloc::string::String;
use alloc::vec::Vec;

use super::CorpusError;

pub const CODE_OPEN: &str = "<code>";
pub const CODE_CLOSE: &str = "</code>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SegmentKind {
    Text,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub kind: SegmentKind,
    pub content: String,
}

impl Segment {
    /// Content as a reader sees it: entities decoded, and for text segments
    /// the surrounding HTML tags removed.
    pub fn plain_text(&self) -> String {
        match self.kind {
            SegmentKind::Code => unescape_entities(&self.content),
            SegmentKind::Text => unescape_entities(&strip_tags(&self.content)),
        }
    }
}

/// A post body as an ordered list of text and code segments.
///
/// Text segments are never empty. A code segment is empty only for a literal
/// `<code></code>`, which keeps [`SegmentedBody::to_markup`] exact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentedBody {
    pub segments: Vec<Segment>,
}

impl SegmentedBody {
    pub fn to_markup(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s.kind {
                SegmentKind::Text => out.push_str(&s.content),
                SegmentKind::Code => {
                    out.push_str(CODE_OPEN);
                    out.push_str(&s.content);
                    out.push_str(CODE_CLOSE);
                }
            }
        }
        out
    }

    pub fn of_kind(&self, kind: SegmentKind) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.kind == kind)
    }

    /// True when some segment of `kind` has visible, non-blank content.
    pub fn has_content(&self, kind: SegmentKind) -> bool {
        self.of_kind(kind).any(|s| !s.plain_text().trim().is_empty())
    }

    pub fn is_bimodal(&self) -> bool {
        self.has_content(SegmentKind::Text) && self.has_content(SegmentKind::Code)
    }
}

/// Splits `markup` at exact `<code>`/`</code>` markers. Nested, stray or
/// unclosed markers are rejected with the byte offset of the offending tag.
pub fn parse_body(markup: &str) -> Result<SegmentedBody, CorpusError> {
    let mut segments = Vec::new();
    let mut rest = markup;
    let mut offset = 0;
    loop {
        let open = rest.find(CODE_OPEN);
        let close = rest.find(CODE_CLOSE);
        match (open, close) {
            (None, None) => {
                push_text(&mut segments, rest);
                break;
            }
            (_, Some(c)) if open.is_none_or(|o| c < o) => {
                return Err(CorpusError::MalformedMarkup {
                    offset: offset + c,
                    reason: "closing code tag without an opening tag",
                });
            }
            (Some(o), _) => {
                push_text(&mut segments, &rest[..o]);
                let inner_start = o + CODE_OPEN.len();
                let inner = &rest[inner_start..];
                let Some(c) = inner.find(CODE_CLOSE) else {
                    return Err(CorpusError::MalformedMarkup {
                        offset: offset + o,
                        reason: "code tag is never closed",
                    });
                };
                if let Some(nested) = inner[..c].find(CODE_OPEN) {
                    return Err(CorpusError::MalformedMarkup {
                        offset: offset + inner_start + nested,
                        reason: "code tag opened inside a code block",
                    });
                }
                segments.push(Segment {
                    kind: SegmentKind::Code,
                    content: String::from(&inner[..c]),
                });
                let consumed = inner_start + c + CODE_CLOSE.len();
                offset += consumed;
                rest = &rest[consumed..];
            }
            (None, Some(_)) => unreachable!("guarded by the arm above"),
        }
    }
    Ok(SegmentedBody { segments })
}

fn push_text(segments: &mut Vec<Segment>, s: &str) {
    if !s.is_empty() {
        segments.push(Segment {
            kind: SegmentKind::Text,
            content: String::from(s),
        });
    }
}

/// Removes `<tag ...>`, `</tag>` and `<!...>` constructs. A `<` not followed
/// by a letter, `/` or `!` is literal text.
fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(lt) = rest.find('<') {
        out.push_str(&rest[..lt]);
        let after = &rest[lt + 1..];
        let starts_tag = after
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!');
        match after.find('>') {
            Some(gt) if starts_tag => {
                // a tag separates words the way whitespace does
                out.push(' ');
                rest = &after[gt + 1..];
            }
            _ => {
                out.push('<');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Decodes the named entities common in post bodies plus numeric
/// references. Unknown entities pass through unchanged.
pub fn unescape_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let decoded = after
            .find(';')
            .filter(|&semi| semi > 0 && semi <= 10)
            .and_then(|semi| decode_entity(&after[..semi]).map(|c| (c, semi)));
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &after[semi + 1..];
            }
            None => {
                out.push('&');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entity(name: &str) -> Option<char> {
    match name {
        "lt" => Some('<'),
        "gt" => Some('>'),
        "amp" => Some('&'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some(' '),
        _ => {
            let num = name.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)
        }
    }
}
