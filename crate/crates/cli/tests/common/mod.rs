//! Small kgv/eng fixture corpus and config helpers.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use bookprobe::lang::Direction;
use bookprobe::prompts::parse_source_line;
use bookprobe_cli::config::{DataPaths, ExperimentConfig, ModelConfig, Task};
use bookprobe_llm::{EndpointProfile, RetryPolicy};

#[path = "../../../llm/tests/support/mod.rs"]
pub mod mock;

pub const TEST_PAIRS: &[(&str, &str, &str)] = &[
    ("t1", "mu kiem.", "They run."),
    ("t2", "bal se kiemun.", "The dog ran away."),
    ("t3", "ma sor koraru.", "He bites the fish."),
    ("t4", "an bal naman.", "I see the dog."),
    ("t5", "mu emun don.", "Their mother's things."),
    ("t6", "sor se kiem koyet.", "The fish already ran off."),
];

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn jsonl(path: &Path, rows: &[serde_json::Value]) {
    let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
    std::fs::write(path, text).unwrap();
}

pub fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    jsonl(
        &p("test.jsonl"),
        &TEST_PAIRS
            .iter()
            .map(|(id, s, t)| serde_json::json!({"id": id, "source": s, "target": t}))
            .collect::<Vec<_>>(),
    );
    jsonl(
        &p("para_book.jsonl"),
        &[
            serde_json::json!({"id": "b1", "source": "bal se sor=at koraru", "target": "The dog has bitten the fish.", "gloss": "dog IAM fish=OBJ bite"}),
            serde_json::json!({"id": "b2", "source": "mu kiem", "target": "They run.", "gloss": "3PL run"}),
            serde_json::json!({"id": "b3", "source": "an naman", "target": "I see.", "gloss": "1SG see"}),
        ],
    );
    jsonl(
        &p("para_train.jsonl"),
        &[serde_json::json!({"id": "p1", "source": "emun don", "target": "mother's things"})],
    );
    std::fs::write(
        p("wordlist.tsv"),
        "mu\tthey\nkiem\trun\nbal\tdog\nsor\tfish\nkoraru\tbite\nan\tI\nnaman\tsee\nemun\tmother\n",
    )
    .unwrap();
    let book = p("book");
    std::fs::create_dir(&book).unwrap();
    let para = "bal se sor=at koraru\ndog IAM fish=OBJ bite\n'The dog has bitten the fish.'\n";
    let prose = "Kalamang verbs do not inflect for tense.\nThe clitic =at marks objects.\n";
    std::fs::write(book.join("book_para.txt"), para).unwrap();
    std::fs::write(book.join("book_non_para.txt"), prose).unwrap();
    std::fs::write(book.join("book_all.txt"), format!("{prose}{para}")).unwrap();
    jsonl(
        &p("igt_train.jsonl"),
        &[
            serde_json::json!({"id": "g1", "transcription": "bal se sor=at koraru", "gloss": "dog IAM fish=OBJ bite", "translation": "'The dog has bitten the fish.'"}),
            serde_json::json!({"id": "g2", "transcription": "mu kiem", "gloss": "3PL run", "translation": "'They run.'"}),
            serde_json::json!({"id": "g3", "transcription": "an sor=at naman", "gloss": "1SG fish=OBJ see", "translation": "'I see the fish.'"}),
        ],
    );
    jsonl(
        &p("igt_test.jsonl"),
        &[
            serde_json::json!({"id": "h1", "transcription": "mu sor=at koraru", "gloss": "3PL fish=OBJ bite", "translation": "'They bite the fish.'"}),
            serde_json::json!({"id": "h2", "transcription": "bal se kiemun", "gloss": "dog IAM run.away", "translation": "'The dog ran away.'"}),
        ],
    );
    Fixture { dir }
}

pub fn config(fx: &Fixture, task: Task, direction: &str, setting: &str, out: &str) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: 1,
        task,
        direction: direction.into(),
        setting: setting.into(),
        data: DataPaths {
            test: fx.path(if task == Task::Gloss { "igt_test.jsonl" } else { "test.jsonl" }),
            book_dir: Some(fx.path("book")),
            wordlist: Some(fx.path("wordlist.tsv")),
            para_book: Some(fx.path("para_book.jsonl")),
            para_train: Some(fx.path("para_train.jsonl")),
            igt_train: Some(fx.path("igt_train.jsonl")),
            grambank_dir: None,
        },
        model: None,
        retrieval_k: None,
        seed: 7,
        out_dir: fx.path(out),
        corruption: None,
        w4w_threshold: 0.5,
        limit: None,
    }
}

pub fn model(url: &str, cache: Option<PathBuf>) -> ModelConfig {
    ModelConfig {
        name: "mock-model".into(),
        profile: EndpointProfile::new("mock", url),
        temperature: 0.0,
        max_output_tokens: 64,
        max_in_flight: 3,
        cache_dir: cache,
        retry: Some(RetryPolicy {
            max_attempts: 2,
            base_delay_ms: 1,
            max_delay_ms: 5,
        }),
    }
}

/// A mock endpoint that answers each translation prompt with the reference
/// of its source sentence, followed by an explanation line.
pub fn echo_server(direction: &str) -> mock::MockServer {
    let dir = Direction::parse(direction).unwrap();
    let mut refs = HashMap::new();
    for (_, kgv, eng) in TEST_PAIRS {
        if dir.source.is_english() {
            refs.insert(eng.to_string(), kgv.to_string());
        } else {
            refs.insert(kgv.to_string(), eng.to_string());
        }
    }
    mock::serve(move |req| {
        let prompt = mock::prompt_of(req);
        let src = parse_source_line(&dir, &prompt).unwrap_or_default();
        let answer = refs.get(&src).cloned().unwrap_or_default();
        (200, mock::chat_body(&format!("{answer}\nExplanation: looked it up.")))
    })
}
