use jointprob::behavior::pr_box;
use jointprob::io::BehaviorFile;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = jointprob::cli::run(std::iter::once("jointprob").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pr.json");
    std::fs::write(&p, BehaviorFile::from_behavior(&pr_box()).to_json()).unwrap();
    let p = p.to_str().unwrap();
    assert_eq!(run(&["validate", p]).0, 0);
    assert_eq!(run(&["check-ld", p]).0, 3);
    assert_eq!(run(&["chsh", p]).0, 3);
    assert_eq!(run(&["dup", "cp-check", "--M", "1"]).0, 0);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"settings_a\": 2}").unwrap();
    let (code, out, err) = run(&["check-ld", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty() && err.starts_with("error:"));
    assert_eq!(run(&["check-ld", "/nonexistent/file.json"]).0, 2);
    assert_eq!(run(&["induct", "m", "0a1"]).0, 2);
    assert_eq!(run(&["induct", "m", "01", "--max-len", "25"]).0, 2);
    assert_eq!(run(&["dup", "binomial", "--M", "0"]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
}

#[test]
fn exhausted_search_exits_1() {
    let (code, _, err) = run(&["quantum", "lf-search", "--seed", "1", "--budget", "1", "--settings-a", "2", "--settings-b", "2"]);
    assert_eq!(code, 1);
    assert!(err.contains("1"), "{err}");
}

#[test]
fn csv_has_header_and_rational_cells() {
    let (code, out, _) = run(&["--format", "csv", "dup", "binomial", "--N", "2", "--M", "3"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,weight");
    assert!(lines.contains(&"tails,1/4"));
    assert!(out.ends_with('\n') && !out.contains('\r'));
}
