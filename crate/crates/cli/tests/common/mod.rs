//! Shared fixture plumbing for the CLI tests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmner"))
}

pub fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[allow(dead_code)] // each test target compiles its own copy of this module
pub fn run_err(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        !out.status.success(),
        "command unexpectedly succeeded: {cmd:?}"
    );
    out
}

pub const SAMPLES: &str = concat!(
    r#"{"id":"s1","sentence":"Spurs will play in the Premier League","image_ref":"s1.jpg","image_width":1000,"image_height":1000,"gold":[{"entity":"Spurs","type":"organization","bbox":[405,216,558,324]},{"entity":"Premier League","type":"organization","bbox":null}]}"#,
    "\n",
    r#"{"id":"s2","sentence":"Kevin Durant dunks","image_ref":"s2.jpg","image_width":1000,"image_height":1000,"gold":[{"entity":"Kevin Durant","type":"person","bbox":[100,100,300,400]}]}"#,
    "\n",
    r#"{"id":"s3","sentence":"no entities here","image_ref":"s3.jpg","image_width":1000,"image_height":1000,"gold":[]}"#,
    "\n",
);

pub const COMPLETIONS: &str = concat!(
    // s1: perfect / partial / empty / malformed
    r#"{"sample_id":"s1","completion":"<process>both found</process><answer>(Spurs, organization, (405, 216, 558, 324))\n(Premier League, organization, None)</answer>"}"#,
    "\n",
    r#"{"sample_id":"s1","completion":"<answer>(Spurs, organization, (405, 216, 558, 324))</answer>"}"#,
    "\n",
    r#"{"sample_id":"s1","completion":"<answer></answer>"}"#,
    "\n",
    r#"{"sample_id":"s1","completion":"no tags at all"}"#,
    "\n",
    // s2: perfect / wrong box / wrong entity / malformed
    r#"{"sample_id":"s2","completion":"<answer>(Kevin Durant, person, (100, 100, 300, 400))</answer>"}"#,
    "\n",
    r#"{"sample_id":"s2","completion":"<answer>(Kevin Durant, person, (700, 700, 900, 900))</answer>"}"#,
    "\n",
    r#"{"sample_id":"s2","completion":"<answer>(Iggy, person, None)</answer>"}"#,
    "\n",
    r#"{"sample_id":"s2","completion":"<answer>(broken"}"#,
    "\n",
    // s3: three empty answers and one malformed
    r#"{"sample_id":"s3","completion":"<answer></answer>"}"#,
    "\n",
    r#"{"sample_id":"s3","completion":"<process>nothing to find</process><answer></answer>"}"#,
    "\n",
    r#"{"sample_id":"s3","completion":"<answer></answer>"}"#,
    "\n",
    r#"{"sample_id":"s3","completion":"oops"}"#,
    "\n",
);

pub const PREDICTIONS: &str = concat!(
    r#"{"sample_id":"s1","triples":[{"entity":"Spurs","type":"organization","bbox":[405,216,558,324]},{"entity":"Premier League","type":"organization","bbox":null}]}"#,
    "\n",
    r#"{"sample_id":"s2","completion":"<answer>(Kevin Durant, person, (700, 700, 900, 900))</answer>"}"#,
    "\n",
    r#"{"sample_id":"s3","triples":[]}"#,
    "\n",
);
