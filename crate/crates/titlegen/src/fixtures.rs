//! Seeded synthetic corpora. The bundled fixture files under `fixtures/` are
//! these generators' output; a test keeps the two in step.

use std::collections::BTreeSet;

use chrono::{DateTime, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use titlegen_core::corpus::QuestionPost;

const VERBS: &[&str] = &[
    "sort", "parse", "convert", "read", "write", "merge", "split", "filter", "iterate", "serialize", "compare", "copy", "remove", "replace",
    "validate", "format", "load", "find", "count", "reverse",
];
const OBJECTS: &[&str] = &[
    "list", "array", "string", "map", "dictionary", "file", "date", "json", "object", "number", "set", "stream", "queue", "tuple", "url", "csv",
    "image", "thread", "class", "method",
];
const LANGUAGES: &[&str] = &["java", "python", "javascript", "php"];
const OTHER_LANGUAGES: &[&str] = &["ruby", "go"];
const EXCLUDED: &[&str] = &["c#", "html", "c++"];
const TOPICS: &[&str] = &["arrays", "json", "regex", "datetime", "file-io", "sorting", "performance", "unit-testing"];
const FAILURES: &[&str] = &["not work", "throw an exception", "return null", "hang forever", "print nothing"];
const LIBRARIES: &[&str] = &["jackson", "pandas", "lodash", "composer", "guava", "numpy", "jquery", "laravel"];
const FILLER: &[&str] = &[
    "I have been stuck on this for a while.",
    "Any help would be appreciated.",
    "The documentation does not mention this case.",
    "I searched for similar questions but none of them helped.",
    "Here is what I tried so far.",
    "It works for small inputs but not for large ones.",
    "I am new to this language.",
    "The error only shows up in production.",
    "Is there a cleaner way to do it?",
    "My colleague suggested a different approach.",
    "I would prefer not to use an external library.",
    "The output looks correct but the test still fails.",
];

fn timestamp(rng: &mut ChaCha8Rng, from_year: i32, to_year: i32) -> DateTime<Utc> {
    let start = Utc.with_ymd_and_hms(from_year, 1, 1, 0, 0, 0).unwrap().timestamp();
    let end = Utc.with_ymd_and_hms(to_year + 1, 1, 1, 0, 0, 0).unwrap().timestamp();
    Utc.timestamp_opt(rng.random_range(start..end), 0).unwrap()
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).copied().expect("word lists are nonempty")
}

fn code_line(rng: &mut ChaCha8Rng, object: &str, verb: &str) -> String {
    match rng.random_range(0..4) {
        0 => format!("{object}.{verb}(value);"),
        1 => format!("if (count &lt; limit &amp;&amp; {object} != null) {{ {verb}({object}); }}"),
        2 => format!("result = {verb}_{object}(data, {})", rng.random_range(0..100)),
        _ => format!("for item in {object}s:\n    {verb}(item)"),
    }
}

fn paragraphs(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| format!("<p>{}</p>", pick(rng, FILLER))).collect::<Vec<_>>().join("\n")
}

/// Posts covering every filter outcome: off-target, excluded and multiple
/// tags, low scores, closed and unanswered questions, single-modality and
/// overlong bodies, non-interrogative and overlong titles, and a few bodies
/// with broken code markup.
pub fn mixed_corpus(n: usize, seed: u64) -> Vec<QuestionPost> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n as u64)
        .map(|id| {
            let verb = pick(&mut rng, VERBS);
            let object = pick(&mut rng, OBJECTS);
            let lang = if rng.random_bool(0.85) { pick(&mut rng, LANGUAGES) } else { pick(&mut rng, OTHER_LANGUAGES) };
            let mut title = match rng.random_range(0..9) {
                0 => format!("How to {verb} a {object} in {lang}?"),
                1 => format!("How do I {verb} {object} values"),
                2 => format!("What is the best way to {verb} a {object}"),
                3 => format!("Why does my {object} {}?", pick(&mut rng, FAILURES)),
                4 => format!("Which {object} type should I use to {verb} data"),
                5 => format!("When should I {verb} the {object}"),
                6 => format!("{lang} {object} {verb} error"),
                7 => format!("{verb} {object} with {}", pick(&mut rng, LIBRARIES)),
                _ => format!("{object} {verb} performance issue"),
            };
            if rng.random_bool(0.03) {
                title = format!("{title} when the {object} is very large and the program keeps running out of memory on every single attempt I make");
            }

            let n_text = rng.random_range(1..5);
            let text = paragraphs(&mut rng, n_text);
            let n_code = rng.random_range(1..4);
            let code: String = (0..n_code)
                .map(|_| {
                    let n_lines = rng.random_range(1..6);
                    let lines: Vec<String> = (0..n_lines).map(|_| code_line(&mut rng, object, verb)).collect();
                    format!("<pre><code>{}</code></pre>", lines.join("\n"))
                })
                .collect();
            let mut body = match rng.random_range(0..20) {
                0 | 1 => text.clone(),
                2 | 3 => code.clone(),
                _ => format!("<p>I want to {verb} a {object} in {lang}.</p>\n{text}\n{code}"),
            };
            if rng.random_bool(0.06) {
                body.push_str(&paragraphs(&mut rng, 180));
            }
            if rng.random_bool(0.01) {
                body.push_str("<code>unterminated");
            }

            let mut tags = vec![lang.to_string()];
            if rng.random_bool(0.08) {
                tags.push(pick(&mut rng, EXCLUDED).into());
            }
            if rng.random_bool(0.05) {
                let other = pick(&mut rng, LANGUAGES);
                if other != lang {
                    tags.push(other.into());
                }
            }
            tags.push(pick(&mut rng, TOPICS).into());
            QuestionPost {
                id,
                creation_date: timestamp(&mut rng, 2008, 2020),
                title,
                body_markup: body,
                tags,
                score: rng.random_range(-3..=15),
                has_accepted_answer: rng.random_bool(0.75),
                is_closed: rng.random_bool(0.08),
            }
        })
        .collect()
}

fn clean_post(id: u64, date: DateTime<Utc>, lang: &str, title: String, body: String) -> QuestionPost {
    QuestionPost {
        id,
        creation_date: date,
        title,
        body_markup: body,
        tags: vec![lang.to_string()],
        score: 5,
        has_accepted_answer: true,
        is_closed: false,
    }
}

/// Twenty distinct short posts that pass the default filter.
pub fn overfit_pairs() -> Vec<QuestionPost> {
    (0..20u64)
        .map(|i| {
            let i = i as usize;
            let verb = VERBS[i];
            let object = OBJECTS[(i * 7) % OBJECTS.len()];
            let lang = LANGUAGES[i % LANGUAGES.len()];
            let title = format!("how to {verb} a {object} in {lang}");
            let body = format!(
                "<p>I need to {verb} a {object} in {lang} but my code fails.</p>\n<pre><code>{object}.{verb}(value);</code></pre>\n<p>{}</p>",
                FILLER[i % FILLER.len()]
            );
            let date = Utc.with_ymd_and_hms(2019, 1 + (i % 12) as u32, 1 + i as u32, 12, 0, 0).unwrap();
            clean_post(i as u64 + 1, date, lang, title, body)
        })
        .collect()
}

const SYLLABLES: &[&str] = &["zor", "qua", "vex", "lim", "dra", "kup", "tis", "mog", "fen", "yal", "bri", "wux", "pel", "ghu", "nox", "sar"];

fn identifier(rng: &mut ChaCha8Rng) -> String {
    let mut s: String = (0..rng.random_range(2..4)).map(|_| pick(rng, SYLLABLES)).collect();
    s.push_str(&rng.random_range(0..100).to_string());
    s
}

/// Posts whose titles name a one-off identifier that the body mentions
/// exactly twice, once in prose and once in code. The identifier's prose
/// sentence sits at a random place among filler sentences.
pub fn copy_corpus(n: usize, seed: u64) -> Vec<QuestionPost> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    (1..=n as u64)
        .map(|id| {
            let ident = loop {
                let s = identifier(&mut rng);
                if used.insert(s.clone()) {
                    break s;
                }
            };
            let verb = pick(&mut rng, VERBS);
            let object = pick(&mut rng, OBJECTS);
            let lang = pick(&mut rng, LANGUAGES);
            let title = match rng.random_range(0..4) {
                0 => format!("how to {verb} {ident} in {lang}"),
                1 => format!("why does {ident} {}", pick(&mut rng, FAILURES)),
                2 => format!("what does {ident} return"),
                _ => format!("how can i {verb} the {ident} {object}"),
            };
            let n_filler = rng.random_range(1..4);
            let mut sentences: Vec<String> = (0..n_filler).map(|_| pick(&mut rng, FILLER).to_string()).collect();
            let at = rng.random_range(0..=sentences.len());
            sentences.insert(at, format!("I call {ident} on a {object} and want to {verb} it."));
            let text: String = sentences.iter().map(|s| format!("<p>{s}</p>")).collect::<Vec<_>>().join("\n");
            let body = format!("{text}\n<pre><code>{object} = {ident}(data)\nprint({object})</code></pre>");
            clean_post(id, timestamp(&mut rng, 2015, 2020), lang, title, body)
        })
        .collect()
}

/// Posts whose bodies each carry four tokens no other body has, over a
/// shared background vocabulary.
pub fn retrieval_corpus(n: usize, seed: u64) -> Vec<QuestionPost> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n as u64)
        .map(|id| {
            let verb = pick(&mut rng, VERBS);
            let object = pick(&mut rng, OBJECTS);
            let lang = pick(&mut rng, LANGUAGES);
            let unique: Vec<String> = (0..4).map(|k| format!("{}{id}x{k}", pick(&mut rng, SYLLABLES))).collect();
            let body = format!(
                "<p>I want to {verb} the {object} {} before calling {}.</p>\n<p>{}</p>\n<pre><code>{}({object});\n{}.{verb}();</code></pre>",
                unique[0],
                unique[1],
                pick(&mut rng, FILLER),
                unique[2],
                unique[3]
            );
            let title = format!("how to {verb} {object} number {id} in {lang}");
            clean_post(id, timestamp(&mut rng, 2012, 2020), lang, title, body)
        })
        .collect()
}

/// File names and contents of the corpora bundled under `fixtures/`.
pub fn bundled() -> Vec<(&'static str, Vec<QuestionPost>)> {
    vec![
        ("mixed_1000.jsonl", mixed_corpus(1000, 1)),
        ("overfit_20.jsonl", overfit_pairs()),
        ("copy_500.jsonl", copy_corpus(500, 11)),
        ("retrieval_100.jsonl", retrieval_corpus(100, 5)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use titlegen_core::corpus::{passes_quality_filter, FilterConfig};
    use titlegen_core::tokenizer::Tokenizer;

    #[test]
    fn generators_are_seeded() {
        assert_eq!(mixed_corpus(50, 3), mixed_corpus(50, 3));
        assert_ne!(mixed_corpus(50, 3), mixed_corpus(50, 4));
        assert_eq!(copy_corpus(20, 1), copy_corpus(20, 1));
    }

    #[test]
    fn clean_fixtures_pass_the_default_filter() {
        let cfg = FilterConfig::default();
        let tok = Tokenizer::default();
        for post in overfit_pairs().iter().chain(&copy_corpus(200, 1)).chain(&retrieval_corpus(100, 1)) {
            let verdict = passes_quality_filter(post, &cfg, &tok).unwrap();
            assert!(verdict.passed(), "{}: {:?}", post.title, verdict.rejection);
        }
    }

    #[test]
    fn copy_identifiers_are_rare() {
        let tok = Tokenizer::default();
        let posts = copy_corpus(500, 11);
        let titles: BTreeSet<_> = posts.iter().map(|p| &p.title).collect();
        assert_eq!(titles.len(), 500);
        for p in &posts {
            let body = tok.tokenize(&p.body_markup);
            let rare: Vec<_> = tok.tokenize(&p.title).into_iter().filter(|t| t.chars().any(|c| c.is_ascii_digit())).collect();
            assert_eq!(rare.len(), 1);
            assert_eq!(body.iter().filter(|t| **t == rare[0]).count(), 2);
        }
    }
}
