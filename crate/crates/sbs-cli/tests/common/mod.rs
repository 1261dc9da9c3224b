//! Shared end-to-end fixture: a small two-brand corpus spanning three ISO
//! weeks before a Sunday vote, with lexicon, stopwords, polls and official
//! results. Articles carry their signal in the leading 30% and neutral
//! padding afterwards, so truncation stays realistic.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const VOTING_DAY: &str = "2016-06-05";

const PADDING: &str = "lorem ipsum dolor sit amet consectetur adipiscing elit sed do \
    eiusmod tempor incididunt ut labore et dolore magna aliqua enim ad minim veniam \
    quis nostrud exercitation ullamco laboris nisi aliquip ex ea commodo consequat \
    duis aute irure reprehenderit voluptate velit esse cillum fugiat nulla pariatur \
    excepteur sint occaecat cupidatat non proident sunt culpa qui officia deserunt";

/// (id, date, title, body intro) — padding is appended to every body.
const ARTICLES: &[(&str, &str, &str, &str)] = &[
    // ISO week 20 (lag 2)
    (
        "a01",
        "2016-05-16",
        "Mario Rossi leads economy debate",
        "Mario Rossi spoke on taxes and economy. Mario Rossi promised budget reform for Rome today.",
    ),
    (
        "a02",
        "2016-05-17",
        "Luca Bianchi answers on taxes",
        "Luca Bianchi discussed taxes and budget rules. Bianchi criticized economy choices in Rome.",
    ),
    (
        "a03",
        "2016-05-18",
        "Rossi and Bianchi clash over budget",
        "Rossi defended budget reform while Bianchi attacked taxes policy. Economy worries voters in Rome.",
    ),
    // ISO week 21 (lag 1)
    (
        "a04",
        "2016-05-23",
        "Mario Rossi rallies voters in Rome",
        "Mario Rossi promised reform of taxes and budget. Rossi spoke about economy and transport plans.",
    ),
    (
        "a05",
        "2016-05-24",
        "Rossi gains ground in polls",
        "Mario Rossi discussed economy reform with workers. Rossi outlined budget and transport promises today.",
    ),
    (
        "a06",
        "2016-05-25",
        "Luca Bianchi presents transport plan",
        "Luca Bianchi outlined transport rules and budget limits. Bianchi avoided taxes questions from journalists.",
    ),
    (
        "a07",
        "2016-05-27",
        "Rossi and Bianchi face final debate",
        "Rossi pressed Bianchi on taxes and economy. Bianchi answered Rossi about transport and budget.",
    ),
    // ISO week 22, up to the day before the vote (lag 0)
    (
        "a08",
        "2016-05-31",
        "Mario Rossi closes campaign on economy",
        "Mario Rossi repeated budget reform promises. Rossi thanked voters for support on taxes plans.",
    ),
    (
        "a09",
        "2016-06-03",
        "Luca Bianchi makes last appeal",
        "Luca Bianchi asked voters for trust. Bianchi repeated transport and budget promises in Rome.",
    ),
    // Outside the analysis period: must be filtered out.
    (
        "x01",
        "2016-06-05",
        "Exit polls on voting day",
        "Mario Rossi and Luca Bianchi await results while counting starts in Rome.",
    ),
    (
        "x02",
        "2016-04-01",
        "Early season speculation",
        "Mario Rossi considers running while Luca Bianchi stays silent about plans.",
    ),
];

pub fn corpus_jsonl() -> String {
    let mut lines = String::new();
    for (id, date, title, body) in ARTICLES {
        let article = serde_json::json!({
            "id": id,
            "published": date,
            "title": title,
            "body": format!("{body} {PADDING}"),
            "source": "fixture.example",
            "language": "en",
        });
        lines.push_str(&article.to_string());
        lines.push('\n');
    }
    lines
}

pub fn lexicon_json() -> String {
    serde_json::json!({
        "rossi": ["mario rossi", "rossi"],
        "bianchi": ["luca bianchi", "bianchi"],
    })
    .to_string()
}

pub const STOPWORDS: &str = "# fixture stopword list\nthe\nand\non\nfor\nof\nin\na\nan\nto\nwith\nabout\nwhile\nover\nfrom\n";

pub const POLLS_CSV: &str = "date,option,share\n\
2016-05-17,rossi,0.44\n\
2016-05-17,bianchi,0.40\n\
2016-05-17,verdi,0.10\n\
2016-05-18,rossi,0.46\n\
2016-05-18,bianchi,0.38\n\
2016-05-24,rossi,0.45\n\
2016-05-24,bianchi,0.39\n";

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config_path: PathBuf,
}

pub struct FixtureOptions {
    pub with_polls: bool,
    pub with_official: bool,
    pub corpus: Option<String>,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            with_polls: true,
            with_official: true,
            corpus: None,
        }
    }
}

pub fn build_fixture(options: FixtureOptions) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    std::fs::write(
        base.join("corpus.jsonl"),
        options.corpus.unwrap_or_else(corpus_jsonl),
    )
    .unwrap();
    std::fs::write(base.join("lexicon.json"), lexicon_json()).unwrap();
    std::fs::write(base.join("stopwords.txt"), STOPWORDS).unwrap();
    if options.with_polls {
        std::fs::write(base.join("polls.csv"), POLLS_CSV).unwrap();
    }

    let mut config = serde_json::json!({
        "event": {
            "voting_day": VOTING_DAY,
            "analysis_start": "2016-05-16",
            "analysis_end": "2016-06-04",
            "tracked_brands": ["rossi", "bianchi"],
            "keywords": ["rome", "election"],
        },
        "prep": {
            "stopwords_path": "stopwords.txt",
            "stemmer_language": "english",
        },
        "lexicon_path": "lexicon.json",
        "corpus_path": "corpus.jsonl",
        "output_dir": "out",
    });
    if options.with_polls {
        config["polls_path"] = "polls.csv".into();
    }
    if options.with_official {
        config["official_results"] = serde_json::json!({
            "rossi": 0.42,
            "bianchi": 0.38,
            "verdi": 0.20,
        });
    }
    let config_path = base.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    Fixture { dir, config_path }
}

pub fn sbs_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sbs"))
}

pub fn run_sbs(args: &[&str]) -> Output {
    sbs_cmd().args(args).output().expect("sbs binary runs")
}

pub fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

pub fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}
