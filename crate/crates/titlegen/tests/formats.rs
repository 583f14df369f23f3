mod common;

use std::fs;

use common::{fixture, repo_root};
use titlegen::config::{Overrides, RunConfig};
use titlegen::pipeline::{IngestReport, Pipeline};
use titlegen_core::corpus::QuestionPost;

#[test]
fn bundled_fixtures_match_their_generators() {
    for (name, posts) in titlegen::fixtures::bundled() {
        let on_disk = fs::read(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(on_disk == titlegen::jsonl::to_bytes(&posts), "{name} is stale; run `cargo run --example write_fixtures`");
    }
}

#[test]
fn example_configs_load() {
    let dir = repo_root().join("configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(Some(&path), |_| None, &Overrides::default()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(repo_root().join(&cfg.paths.corpus).is_file(), "{}", path.display());
        n += 1;
    }
    assert!(n >= 3);
}

const DUMP: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="12" PostTypeId="1" AcceptedAnswerId="13" CreationDate="2014-05-06T07:08:09.100" Score="4" Title="How do I sort a HashMap by value?" Tags="&lt;java&gt;&lt;sorting&gt;" Body="&lt;p&gt;I have a map.&lt;/p&gt;&#xA;&lt;pre&gt;&lt;code&gt;Map&amp;lt;String, Integer&amp;gt; m;&lt;/code&gt;&lt;/pre&gt;" />
  <row Id="13" PostTypeId="2" ParentId="12" CreationDate="2014-05-06T08:00:00.000" Score="9" Body="&lt;p&gt;Use a stream.&lt;/p&gt;" />
  <row Id="10" PostTypeId="1" CreationDate="2013-01-01T00:00:00.000" Score="0" Title="Why is this slow?" Tags="|python|" Body="&lt;p&gt;It is slow.&lt;/p&gt;" />
</posts>
"#;

#[test]
fn xml_dumps_ingest_like_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let xml = dir.path().join("Posts.xml");
    fs::write(&xml, DUMP).unwrap();
    let mut cfg = RunConfig::default();
    cfg.paths.corpus = xml;
    cfg.paths.workdir = dir.path().join("work");
    let p = Pipeline::new(cfg.clone());
    let report = p.ingest().unwrap();
    assert_eq!((report.posts, report.non_questions), (2, 1));
    let posts: Vec<QuestionPost> = titlegen::jsonl::read(&cfg.paths.workdir.join("corpus.jsonl")).unwrap();
    assert_eq!(posts.iter().map(|p| p.id).collect::<Vec<_>>(), [10, 12]);
    assert_eq!(posts[1].body_markup, "<p>I have a map.</p>\n<pre><code>Map&lt;String, Integer&gt; m;</code></pre>");
    assert_eq!(posts[1].tags, ["java", "sorting"]);

    // the same posts as JSON lines give the same corpus
    let jsonl = dir.path().join("posts.jsonl");
    titlegen::jsonl::write(&jsonl, &posts).unwrap();
    let mut cfg2 = cfg.clone();
    cfg2.paths.corpus = jsonl;
    cfg2.paths.workdir = dir.path().join("work2");
    Pipeline::new(cfg2.clone()).ingest().unwrap();
    assert_eq!(fs::read(cfg.paths.workdir.join("corpus.jsonl")).unwrap(), fs::read(cfg2.paths.workdir.join("corpus.jsonl")).unwrap());

    let r: IngestReport = titlegen::jsonl::read_json(&cfg.paths.workdir.join("ingest_report.json")).unwrap();
    assert_eq!(r, report);
}

#[test]
fn duplicate_ids_are_rejected_at_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let mut posts = titlegen::fixtures::overfit_pairs();
    posts[3].id = posts[0].id;
    let path = dir.path().join("dup.jsonl");
    titlegen::jsonl::write(&path, &posts).unwrap();
    let mut cfg = RunConfig::default();
    cfg.paths.corpus = path;
    cfg.paths.workdir = dir.path().join("work");
    let err = Pipeline::new(cfg.clone()).ingest().unwrap_err();
    assert_eq!(err.kind(), "corpus");
    assert!(!cfg.paths.workdir.join("corpus.jsonl").exists());
}

#[test]
fn manifest_traces_reports_to_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_toml(&fs::read_to_string(repo_root().join("configs/overfit.toml")).unwrap()).unwrap();
    cfg.apply(&Overrides::default());
    cfg.paths.corpus = fixture("overfit_20.jsonl");
    cfg.paths.workdir = dir.path().to_path_buf();
    cfg.train.epochs = 1;
    let p = Pipeline::new(cfg.clone());
    p.ingest().unwrap();
    p.filter().unwrap();
    p.split().unwrap();
    p.build_vocab().unwrap();
    p.train().unwrap();
    p.generate(titlegen::pipeline::SplitName::Train).unwrap();
    p.evaluate(titlegen::pipeline::System::Model, titlegen::pipeline::SplitName::Train).unwrap();
    p.report(titlegen::pipeline::SplitName::Train).unwrap();
    let m = p.work.manifest().unwrap();
    let vocab = titlegen::hash::file_sha256(&dir.path().join("vocab.txt")).unwrap();
    let ckpt = titlegen::hash::file_sha256(&dir.path().join("model.ckpt")).unwrap();
    assert_eq!(m.sha("vocab.txt"), Some(vocab.as_str()));
    assert_eq!(m.sha("model.ckpt"), Some(ckpt.as_str()));
    assert_eq!(m.artifacts["model_train.jsonl"].inputs["model.ckpt"], ckpt);
    assert!(m.artifacts.values().all(|a| a.config_hash == cfg.hash()));
    let report: titlegen::pipeline::ComparisonReport = titlegen::jsonl::read_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(report.vocabulary_sha256.as_deref(), Some(vocab.as_str()));
    assert_eq!(report.checkpoint_sha256.as_deref(), Some(ckpt.as_str()));
    assert_eq!(report.config_hash, cfg.hash());
}
