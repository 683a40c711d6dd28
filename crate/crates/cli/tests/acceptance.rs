//! Runs `hardy verify-all` twice with the default configuration and prints
//! one line per acceptance criterion.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use hardy_core::KvDoc;

/// Wall-time limits in seconds for the criteria that carry one.
const LIMITS: [(u8, f64); 2] = [(1, 60.0), (4, 600.0)];

struct Run {
    code: Option<i32>,
    report: KvDoc,
    files: BTreeMap<String, Vec<u8>>,
    seconds: BTreeMap<u8, f64>,
}

fn collect(dir: &Path, prefix: &str, files: &mut BTreeMap<String, Vec<u8>>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let name = format!("{prefix}{}", path.file_name().unwrap().to_string_lossy());
        if path.is_dir() {
            collect(&path, &format!("{name}/"), files);
        } else {
            files.insert(name, std::fs::read(&path).unwrap());
        }
    }
}

fn verify_all(dir: &Path) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_hardy")).arg("verify-all").arg("--out").arg(dir).output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    let mut seconds = BTreeMap::new();
    for line in stderr.lines() {
        // "criterion N (title): status in X s"
        let Some(rest) = line.strip_prefix("criterion ") else { continue };
        let id: u8 = rest.split(' ').next().unwrap().parse().unwrap();
        let secs: f64 = rest.rsplit(" in ").next().unwrap().trim_end_matches(" s").parse().unwrap();
        seconds.insert(id, secs);
    }
    let mut files = BTreeMap::new();
    collect(dir, "", &mut files);
    let report = KvDoc::parse(&String::from_utf8_lossy(&files["verify_report.txt"]));
    Run { code: out.status.code(), report, files, seconds }
}

#[test]
fn acceptance() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = verify_all(a.path());
    let second = verify_all(b.path());

    let mut all = true;
    for id in 1u8..=5 {
        let key = format!("criterion.{id}");
        let mut ok = first.report.get(&key) == Some("pass");
        let secs = first.seconds.get(&id).copied().unwrap_or(f64::NAN);
        let mut timing = format!("{secs:.1} s");
        if let Some(&(_, limit)) = LIMITS.iter().find(|(c, _)| *c == id) {
            ok &= secs <= limit;
            timing = format!("{secs:.1} s of {limit} s");
        }
        all &= ok;
        println!(
            "criterion {id} [{}] {}: {} ({timing})",
            if ok { "PASS" } else { "FAIL" },
            first.report.get(&format!("{key}.title")).unwrap_or("?"),
            first.report.get(&format!("{key}.summary")).unwrap_or("missing from report"),
        );
    }
    let identical = first.files == second.files;
    let differing: Vec<&String> = first
        .files
        .keys()
        .chain(second.files.keys())
        .filter(|k| first.files.get(*k) != second.files.get(*k))
        .collect();
    all &= identical;
    println!(
        "criterion 6 [{}] determinism: {} files compared across two runs, {} differ",
        if identical { "PASS" } else { "FAIL" },
        first.files.len(),
        differing.len()
    );
    println!("verify-all exit codes: {:?} {:?}", first.code, second.code);
    assert!(all, "acceptance criteria failed; differing files: {differing:?}");
    assert_eq!(first.code, Some(0));
}
