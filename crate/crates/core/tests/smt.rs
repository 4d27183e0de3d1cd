use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use invsynth_core::eval::holds;
use invsynth_core::lang::{parse_expr_untyped, Expr};
use invsynth_core::smt::{
    encode_query, Prover, SmtSolver, SolverBudget, SolverCommand, SolverConfig, Status,
};

fn e(s: &str) -> Expr {
    parse_expr_untyped(s).unwrap()
}

fn vars(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn solver() -> SmtSolver {
    SmtSolver::from_env().expect("z3 must be installed for the solver tests")
}

#[test]
fn validity_examples() {
    let s = solver();
    let b = SolverBudget::default();
    let v = s
        .check_validity(&e("j > m"), &e("j == m + 1"), &vars(&["j", "m"]), &b)
        .unwrap();
    assert_eq!(v.status, Status::Invalid);
    let model = v.model.unwrap();
    assert!(holds(&e("j > m && !(j == m + 1)"), &model).unwrap());

    let p = e("a >= -(j - 1) && a <= (j - 1)");
    assert_eq!(
        s.check_validity(&p, &p, &vars(&["a", "j"]), &b).unwrap().status,
        Status::Valid
    );
    assert_eq!(
        s.check_validity(&e("j > m && j <= m + 1"), &e("j == m + 1"), &vars(&["j", "m"]), &b)
            .unwrap()
            .status,
        Status::Valid
    );
}

#[test]
fn entailment_examples() {
    let s = solver();
    let b = SolverBudget::default();
    let initial = [e("a >= -(j - 1) && a <= (j - 1)"), e("j > m")];
    assert_eq!(
        s.check_entailment(&initial, &e("j > m"), &vars(&["a", "j", "m"]), &b)
            .unwrap()
            .status,
        Status::Valid
    );
    assert_eq!(
        s.check_entailment(&[], &e("x == x"), &vars(&["x"]), &b).unwrap().status,
        Status::Valid
    );
    assert_eq!(
        s.check_entailment(&[e("a == 0")], &e("a == 1"), &vars(&["a"]), &b)
            .unwrap()
            .status,
        Status::Invalid
    );
}

#[test]
fn truncating_division_matches_evaluator() {
    let s = solver();
    let b = SolverBudget::default();
    // -7 / 2 == -3 and -7 % 2 == -1 under truncation; floor semantics would differ.
    let goal = e("x / 2 == -3 && x % 2 == -1");
    assert_eq!(
        s.check_validity(&e("x == -7"), &goal, &vars(&["x"]), &b).unwrap().status,
        Status::Valid
    );
    assert_eq!(
        s.check_validity(&e("x == 7 && y == -2"), &e("x / y == -3 && x % y == 1"), &vars(&["x", "y"]), &b)
            .unwrap()
            .status,
        Status::Valid
    );
}

#[test]
fn reserved_variable_names() {
    let s = solver();
    let r = s
        .check_validity(&e("div > 3"), &e("div > 5"), &vars(&["div"]), &SolverBudget::default())
        .unwrap();
    assert_eq!(r.status, Status::Invalid);
    assert!(holds(&e("div > 3 && !(div > 5)"), r.model.as_ref().unwrap()).unwrap());
}

#[test]
fn timeout_is_contained() {
    let s = solver();
    let budget = SolverBudget::with_timeout(Duration::from_secs(1));
    let hard = e("x > 0 && y > 0 && z > 0");
    let goal = e("x * x * x + y * y * y != z * z * z");
    let start = Instant::now();
    let r = s.check_validity(&hard, &goal, &vars(&["x", "y", "z"]), &budget).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(2), "took {elapsed:?}");
    assert!(r.status.is_soft(), "got {:?}", r.status);
    // The pool stays usable afterwards.
    let ok = s
        .check_validity(&e("x > 1"), &e("x > 0"), &vars(&["x"]), &budget)
        .unwrap();
    assert_eq!(ok.status, Status::Valid);
}

#[test]
fn missing_solver_is_a_configuration_error() {
    let cfg = SolverConfig {
        command: SolverCommand {
            program: "/nonexistent/solver".into(),
            args: vec![],
        },
        dump_dir: None,
    };
    let err = SmtSolver::new(cfg).err().expect("must fail");
    assert!(err.to_string().contains("unavailable"), "{err}");
}

#[cfg(unix)]
#[test]
fn crashed_process_is_restarted_once() {
    use std::os::unix::fs::PermissionsExt;

    let dir = tempfile::tempdir().unwrap();
    let mark = dir.path().join("crashed");
    let script = dir.path().join("flaky-solver");
    std::fs::write(
        &script,
        format!(
            "#!/bin/bash\nif [ -e '{m}' ]; then exec z3 \"$@\"; fi\ntouch '{m}'\nwhile IFS= read -r line; do\n  case \"$line\" in\n    *get-info*) echo '(:version \"flaky\")';;\n    *check-sat*) exit 1;;\n  esac\ndone\n",
            m = mark.display()
        ),
    )
    .unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let s = SmtSolver::new(SolverConfig {
        command: SolverCommand {
            program: script,
            args: vec!["-in".into(), "-smt2".into()],
        },
        dump_dir: None,
    })
    .unwrap();
    assert_eq!(s.version(), "flaky");
    let r = s
        .check_validity(&e("x > 1"), &e("x > 0"), &vars(&["x"]), &SolverBudget::default())
        .unwrap();
    assert_eq!(r.status, Status::Valid);
}

#[test]
fn dumped_scripts_are_byte_identical() {
    let q1 = encode_query(&e("j > m"), &e("j == m + 1"), &vars(&["m", "j"]), None);
    let q2 = encode_query(&e("j > m"), &e("j == m + 1"), &vars(&["j", "m"]), None);
    assert_eq!(q1.script(5000), q2.script(5000));

    let dir = tempfile::tempdir().unwrap();
    let s = SmtSolver::new(SolverConfig {
        command: SolverCommand::default(),
        dump_dir: Some(dir.path().to_path_buf()),
    })
    .unwrap();
    for _ in 0..2 {
        s.check_validity(&e("j > m"), &e("j == m + 1"), &vars(&["j", "m"]), &SolverBudget::default())
            .unwrap();
    }
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(files[0].as_ref().unwrap().path()).unwrap();
    assert_eq!(text, q1.script(5000));
}

#[test]
fn models_do_not_depend_on_session_history() {
    let s = solver();
    let b = SolverBudget::default();
    let q = || {
        s.check_validity(&e("x + y > 3"), &e("x > 2"), &vars(&["x", "y"]), &b)
            .unwrap()
    };
    let first = q();
    for k in 0..5 {
        s.check_validity(&e(&format!("x > {k}")), &e("x > 0"), &vars(&["x"]), &b)
            .unwrap();
    }
    assert_eq!(first, q());
}
