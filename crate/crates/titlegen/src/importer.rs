//! Adapter from the Stack Overflow `Posts.xml` dump to [`QuestionPost`]s.
//!
//! Each `<row>` carries attributes; questions have `PostTypeId="1"`. A
//! question counts as answered when it has an `AcceptedAnswerId` and as
//! closed when it has a `ClosedDate`. Tags come as `<a><b>` or `|a|b|`.

use std::io::BufRead;

use chrono::{NaiveDateTime, TimeZone, Utc};
use quick_xml::events::Event;
use quick_xml::Reader;
use titlegen_core::corpus::QuestionPost;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImportOutcome {
    /// Ascending by id.
    pub posts: Vec<QuestionPost>,
    pub non_questions: usize,
    /// `(row number, reason)` for question rows that could not be read.
    pub invalid: Vec<(usize, String)>,
}

#[derive(Default)]
struct Row {
    id: Option<String>,
    post_type: Option<String>,
    accepted: bool,
    closed: bool,
    date: Option<String>,
    score: Option<String>,
    title: Option<String>,
    body: Option<String>,
    tags: Option<String>,
}

pub fn parse_tags(raw: &str) -> Vec<String> {
    raw.split(['<', '>', '|']).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn parse_date(raw: &str) -> Option<chrono::DateTime<Utc>> {
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .map(|n| Utc.from_utc_datetime(&n))
}

fn to_post(row: Row) -> Result<QuestionPost, String> {
    let id = row.id.ok_or("missing Id")?.parse().map_err(|_| "bad Id")?;
    let date = row.date.ok_or("missing CreationDate")?;
    Ok(QuestionPost {
        id,
        creation_date: parse_date(&date).ok_or_else(|| format!("bad CreationDate {date:?}"))?,
        title: row.title.ok_or("missing Title")?,
        body_markup: row.body.unwrap_or_default(),
        tags: row.tags.as_deref().map(parse_tags).unwrap_or_default(),
        score: row.score.ok_or("missing Score")?.parse().map_err(|_| "bad Score")?,
        has_accepted_answer: row.accepted,
        is_closed: row.closed,
    })
}

pub fn import<R: BufRead>(input: R) -> Result<ImportOutcome, quick_xml::Error> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut out = ImportOutcome::default();
    let mut row_no = 0;
    loop {
        let event = reader.read_event_into(&mut buf)?;
        let e = match &event {
            Event::Eof => break,
            Event::Empty(e) | Event::Start(e) if e.name().as_ref() == b"row" => e,
            _ => {
                buf.clear();
                continue;
            }
        };
        row_no += 1;
        let mut row = Row::default();
        let mut bad = None;
        for attr in e.attributes() {
            let attr = match attr {
                Ok(a) => a,
                Err(err) => {
                    bad = Some(err.to_string());
                    break;
                }
            };
            let value = match attr.unescape_value() {
                Ok(v) => v.into_owned(),
                Err(err) => {
                    bad = Some(err.to_string());
                    break;
                }
            };
            match attr.key.as_ref() {
                b"Id" => row.id = Some(value),
                b"PostTypeId" => row.post_type = Some(value),
                b"AcceptedAnswerId" => row.accepted = true,
                b"ClosedDate" => row.closed = true,
                b"CreationDate" => row.date = Some(value),
                b"Score" => row.score = Some(value),
                b"Title" => row.title = Some(value),
                b"Body" => row.body = Some(value),
                b"Tags" => row.tags = Some(value),
                _ => {}
            }
        }
        buf.clear();
        if row.post_type.as_deref() != Some("1") && bad.is_none() {
            out.non_questions += 1;
            continue;
        }
        match bad.map_or_else(|| to_post(row), Err) {
            Ok(p) => out.posts.push(p),
            Err(reason) => out.invalid.push((row_no, reason)),
        }
    }
    out.posts.sort_by_key(|p| p.id);
    Ok(out)
}
