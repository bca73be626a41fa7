use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qnlp(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnlp")).current_dir(cwd).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn gen_data_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let o = qnlp(tmp.path(), &["gen-data", "--seed", "4", "--out", dir]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["dataset.tsv", "split.txt"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let data = fs::read_to_string(tmp.path().join("a/dataset.tsv")).unwrap();
    assert_eq!(data.lines().count(), 130);
    assert!(data.lines().all(|l| l.starts_with("0\t") || l.starts_with("1\t")));
}

#[test]
fn gen_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qnlp(tmp.path(), &["gen-data", "--count", "1000", "--out", "x"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("980"), "{}", stderr(&o));
    let o = qnlp(tmp.path(), &["gen-data", "--count", "1", "--out", "y"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("both labels"), "{}", stderr(&o));
}

#[test]
fn inspect_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let s = "siva hates thrilling comics";
    let o = qnlp(tmp.path(), &["inspect", s, "--stage", "circuit"]);
    assert!(stdout(&o).starts_with("qubits 7\n"));
    let o = qnlp(tmp.path(), &["inspect", s, "--stage", "rewritten,circuit"]);
    assert!(stdout(&o).contains("\nqubits 4\n"));
    let o = qnlp(tmp.path(), &["inspect", s, "--stage", "types"]);
    assert_eq!(stdout(&o), "siva\tn\nhates\tn.r s n.l\nthrilling\tn n.l\ncomics\tn\n");
    let o = qnlp(tmp.path(), &["inspect", s, "--stage", "diagram", "--format", "dot"]);
    assert!(stdout(&o).starts_with("graph diagram {"));
    let o = qnlp(tmp.path(), &["inspect", "siva comics", "--stage", "diagram"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("residual n n"), "{}", stderr(&o));
    let o = qnlp(tmp.path(), &["inspect", "siva hates dragons"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("dragons"));
}

#[test]
fn run_is_reproducible_and_stays_in_its_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let g = qnlp(tmp.path(), &["gen-data", "--out", "data"]);
    assert!(g.status.success());
    for (profile, iters) in [("classical", "30"), ("quantum-exact", "20"), ("quantum-noisy", "2")] {
        for out in ["r1", "r2"] {
            let o = qnlp(
                tmp.path(),
                &["run", "--profile", profile, "--seed", "3", "--iterations", iters, "--data", "data", "--out", out],
            );
            assert!(o.status.success(), "{profile}: {}", stderr(&o));
            assert!(stdout(&o).contains("test_acc="));
        }
        for f in ["metrics.csv", "params.txt"] {
            assert_eq!(
                fs::read(tmp.path().join("r1").join(f)).unwrap(),
                fs::read(tmp.path().join("r2").join(f)).unwrap(),
                "{profile} {f}"
            );
        }
        assert_eq!(listing(&tmp.path().join("r1")), ["metrics.csv", "params.txt", "summary.txt"]);
        let csv = fs::read_to_string(tmp.path().join("r1/metrics.csv")).unwrap();
        assert!(csv.starts_with("iter,train_loss,train_acc,dev_acc\n"));
        assert!(csv.contains("# test_acc=") && csv.contains("# seed=3"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), iters.parse::<usize>().unwrap() + 2);

        let e = qnlp(tmp.path(), &["eval", "--params", "r1/params.txt", "--data", "data"]);
        assert!(e.status.success(), "{}", stderr(&e));
        assert!(stdout(&e).contains("test_acc="));
    }
    assert_eq!(listing(tmp.path()), ["data", "r1", "r2"]);
}

#[test]
fn bad_run_configs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qnlp(tmp.path(), &["run", "--profile", "quantum-exact", "--noise-p1", "0.1", "--out", "x"]);
    assert!(!o.status.success());
    let o = qnlp(tmp.path(), &["run", "--profile", "quantum-noisy", "--noise-p1", "2", "--iterations", "1", "--out", "y"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("noise"));
    let o = qnlp(tmp.path(), &["run", "--profile", "bogus", "--out", "z"]);
    assert!(!o.status.success());
    assert!(listing(tmp.path()).is_empty());
}
