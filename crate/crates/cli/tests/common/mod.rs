//! Runs the `dsf` binary inside a scratch directory.

#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    fn from(out: Output) -> Self {
        Self {
            code: out.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        }
    }

    /// Value of a `key=value` line on stdout.
    pub fn kv(&self, key: &str) -> Option<&str> {
        self.stdout.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
    }

    #[track_caller]
    pub fn ok(self) -> Self {
        assert_eq!(self.code, 0, "stdout:\n{}\nstderr:\n{}", self.stdout, self.stderr);
        self
    }
}

pub struct Dsf {
    dir: TempDir,
    config: Option<PathBuf>,
}

impl Dsf {
    pub fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap(), config: None }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, content: impl AsRef<[u8]>) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, content).unwrap();
        p
    }

    pub fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.path(name)).unwrap()
    }

    pub fn with_config(mut self, properties: &str) -> Self {
        self.config = Some(self.write("security.properties", properties));
        self
    }

    pub fn command(&self) -> Command {
        let mut c = Command::new(env!("CARGO_BIN_EXE_dsf"));
        c.current_dir(self.dir.path())
            .env_remove("DSF_CONFIG")
            .env_remove("DSF_KEYS")
            .env_remove("DSF_SQLRAND_PASSWORD")
            .args(["--format", "kv", "--seed", "7", "--keys"])
            .arg(self.path("keys"));
        if let Some(cfg) = &self.config {
            c.arg("--config").arg(cfg);
        }
        c
    }

    pub fn run(&self, args: &[&str]) -> Run {
        self.run_stdin(args, "")
    }

    pub fn run_stdin(&self, args: &[&str], stdin: &str) -> Run {
        let mut child = self
            .command()
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
        Run::from(child.wait_with_output().unwrap())
    }

    pub fn key(&self, id: &str, kind: &str) {
        self.run(&["keys", "gen", "--id", id, "--kind", kind]).ok();
    }

    /// Raw bytes of every stored key, without the kind tag.
    pub fn key_files(&self) -> Vec<Vec<u8>> {
        let dir = self.path("keys");
        fs::read_dir(&dir)
            .map(|rd| rd.map(|e| fs::read(e.unwrap().path()).unwrap()[1..].to_vec()).collect())
            .unwrap_or_default()
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }
}

pub const PEOPLE_CSV: &str = "\
id,zip:str,age:str,disease:str
1,13053,28,flu
2,13068,29,flu
3,13068,21,cold
4,13053,23,cold
5,14853,50,cancer
6,14853,55,flu
";

pub const ZIP_HIERARCHY: &str = "\
13053,1305*,*
13068,1306*,*
14853,1485*,*
";

pub const AGE_HIERARCHY: &str = "\
21,<30,*
23,<30,*
28,<30,*
29,<30,*
50,>=30,*
55,>=30,*
";
