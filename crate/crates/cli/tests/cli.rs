use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiconj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gallery_oblique_emits_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let gam = dir.path().join("out.gam");
    let o = run(&["gallery", "oblique", "--lambda", "1", "--emit-gamma", gam.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = std::fs::read_to_string(&gam).unwrap();
    let first = text.lines().next().unwrap();
    // three 2D points per tuple
    assert_eq!(first.split(';').count(), 3);
    assert!(first.split(';').all(|p| p.split(',').count() == 2));
    assert!(stdout(&o).contains("check=gamma-on-contact-set verdict=pass"));
}

#[test]
fn gallery_names_with_inline_parameters() {
    assert_eq!(code(&run(&["gallery", "perp:lambda=1"])), 0);
    assert_eq!(code(&run(&["gallery", "improper:udotv=0.5"])), 0);
    assert_eq!(code(&run(&["gallery", "quad:N=3"])), 0);
    assert_eq!(code(&run(&["gallery", "noninv", "--grid", "-3,3,0.1;-3,3,0.1"])), 0);
    assert_eq!(code(&run(&["gallery", "nosuch"])), 2);
}

#[test]
fn improper_input_is_a_usage_error_naming_the_function() {
    // no grid node lies on the short segment
    let o = run(&["cconj", "--method", "fast", "-f", "seg:lambda=0.05", "-f", "quad", "--grid", "-1.1,1.1,0.5"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("seg:lambda=0.05"), "{err}");
    assert!(err.contains("improper"), "{err}");
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = run(&["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stderr).unwrap().contains("Usage"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&run(&["conjugate", "-f", "abs", "--grid", "1,0"])), 2);
    assert_eq!(code(&run(&["conjugate", "-f", "abs"])), 2);
    assert_eq!(code(&run(&["conjugate", "-f", "nosuch", "--grid", "-1,1,0.5"])), 2);
    assert_eq!(code(&run(&["cconj", "-f", "quad", "--grid", "-1,1,0.5", "--method", "slow"])), 2);
    assert_eq!(code(&run(&["verify", "--criterion", "12"])), 2);
}

#[test]
fn tuple_check_pass_and_fail() {
    let pass = run(&["tuple-check", "-f", "quad", "-f", "quad", "--grid", "-2,2,0.1", "--trust", "0.5"]);
    assert_eq!(code(&pass), 0, "{}", stdout(&pass));
    let fail = run(&["tuple-check", "-f", "quad", "-f", "abs", "--grid", "-2,2,0.1"]);
    assert_eq!(code(&fail), 1);
    let s = stdout(&fail);
    assert!(s.contains("verdict=fail") && s.contains("witness="), "{s}");
    assert!(s.ends_with("exit=fail\n"));
}

#[test]
fn conjugate_emits_grid_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.dump");
    let o = run(&[
        "conjugate", "-f", "abs", "--grid", "-2,2,0.5", "--dual", "-1,1,0.5", "--emit",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d=1;count=5;origin=-1;step=0.5");
    // |·|* is the indicator of [−1,1]
    for l in lines {
        assert_eq!(l.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn dump_files_are_accepted_as_functions() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.dump", "d=1;count=3;origin=-1;step=1\ninf\n0\ninf\n");
    let o = run(&["envelope", "-f", &f]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let all_inf = write(dir.path(), "g.dump", "d=1;count=2;origin=0;step=1\ninf\ninf\n");
    assert_eq!(code(&run(&["envelope", "-f", &all_inf])), 2);
}

#[test]
fn prox_of_abs_is_soft_threshold() {
    let o = run(&["prox", "-f", "abs", "--grid", "-2,2,0.25", "--at", "1.5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("witness=0.5\n"), "{}", stdout(&o));
}

#[test]
fn cconj_brute_and_fast_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.dump");
    let b = dir.path().join("b.dump");
    let args = |m: &str, p: &Path| {
        run(&[
            "cconj", "-f", "quad:scale=2", "-f", "abs", "--grid", "-2,2,0.25", "--out", "-1,1,0.25", "--method", m,
            "--emit", p.to_str().unwrap(),
        ])
    };
    assert_eq!(code(&args("fast", &a)), 0);
    assert_eq!(code(&args("brute", &b)), 0);
    let parse = |p: &Path| -> Vec<f64> {
        std::fs::read_to_string(p).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect()
    };
    for (x, y) in parse(&a).iter().zip(parse(&b)) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn contact_holes_and_monotone_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let gam = dir.path().join("q.gam");
    let o = run(&["contact", "-f", "quad", "-f", "quad", "--grid", "-1,1,0.5", "--emit", gam.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    // f = g = q: contact set is the diagonal
    let text = std::fs::read_to_string(&gam).unwrap();
    assert_eq!(text.lines().count(), 5);
    let g = gam.to_str().unwrap();
    assert_eq!(code(&run(&["monotone", "--gamma", g, "--order", "3"])), 0);
    // sums 2x cover [−2,2] at step 1 but not the half-integers
    assert_eq!(code(&run(&["holes", "--gamma", g, "--probe", "-2,2,1"])), 0);
    let h = run(&["holes", "--gamma", g, "--probe", "-2,2,0.25"]);
    assert_eq!(code(&h), 1);
    assert!(stdout(&h).contains("witness=count="));
}

#[test]
fn monotone_violation_and_budget() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "v.gam", "1;0;0\n0;1;1\n");
    let o = run(&["monotone", "--gamma", &g]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("perms="));
    assert_eq!(code(&run(&["monotone", "--gamma", &g, "--order", "3", "--budget", "5"])), 2);
    assert_eq!(code(&run(&["monotone", "--gamma", &g, "--order", "9"])), 2);
    let ok = write(dir.path(), "d.gam", "0;0;0\n1;1;1\n");
    assert_eq!(code(&run(&["monotone", "--gamma", &ok, "--candidate", "2;2;2"])), 0);
    assert_eq!(code(&run(&["monotone", "--gamma", &ok, "--candidate", "2;-2;0"])), 1);
}

#[test]
fn origin_counterexample_fails_order_three() {
    let s3 = 3f64.sqrt() / 2.0;
    let dir = tempfile::tempdir().unwrap();
    let body = format!("-1,0;0.5,{s3};-0.5,{s3}\n0,0;0,0;0,0\n1,0;-0.5,-{s3};0.5,-{s3}\n");
    let g = write(dir.path(), "a.gam", &body);
    assert_eq!(code(&run(&["monotone", "--gamma", &g, "--order", "2"])), 0);
    let o = run(&["monotone", "--gamma", &g, "--order", "3"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("excess=5.0e-01"), "{}", stdout(&o));
}

#[test]
fn probe_conjecture_reports_counts_and_respects_budget() {
    let o = run(&["probe-conjecture", "--samples", "200", "--max-order", "2", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("sampled=200"));
    assert_eq!(code(&run(&["probe-conjecture", "--samples", "200", "--budget", "10"])), 2);
}

#[test]
fn mmot_plan_and_duality() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = write(dir.path(), "m1", "0;0.5\n1;0.5\n");
    let m2 = write(dir.path(), "m2", "0;0.5\n2;0.5\n");
    let plan = dir.path().join("plan");
    let o = run(&["mmot", "--marginal", &m1, "--marginal", &m2, "--emit", plan.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    // comonotone coupling: ⟨1,2⟩/2 = 1
    assert!(stdout(&o).contains("witness=value=1\n"), "{}", stdout(&o));
    assert_eq!(std::fs::read_to_string(&plan).unwrap().lines().count(), 2);
    // q ⊕ q dominates ⟨x,y⟩ but is not tight on the plan
    let d = run(&["mmot", "--marginal", &m1, "--marginal", &m2, "--potential", "quad", "--potential", "quad"]);
    assert_eq!(code(&d), 1);
    assert!(stdout(&d).contains("check=gap-nonnegative verdict=pass"));
    // a potential pair below the cost is infeasible input
    let bad = run(&["mmot", "--marginal", &m1, "--marginal", &m2, "--potential", "const", "--potential", "const"]);
    assert_eq!(code(&bad), 2);
    let m3 = write(dir.path(), "m3", "0;0.3\n1;0.7\n");
    assert_eq!(code(&run(&["mmot", "--marginal", &m1, "--marginal", &m3])), 2);
}

#[test]
fn verify_single_criteria() {
    let o = run(&["verify", "--criterion", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("criterion=2 name=closed-form-h verdict=pass"));
    assert!(!stdout(&o).contains("seconds="));
    // the origin extension is not 3-c-monotone
    assert_eq!(code(&run(&["verify", "--criterion", "9"])), 1);
}

#[test]
fn output_is_deterministic() {
    let cases: [&[&str]; 4] = [
        &["probe-conjecture", "--samples", "300", "--max-order", "3", "--seed", "11"],
        &["gallery", "oblique", "--lambda", "0.7"],
        &["cconj", "-f", "pl:seed=4,pieces=3,slope=2", "-f", "quad", "--grid", "-2,2,0.1"],
        &["verify", "--criterion", "10"],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(code(&a), code(&b));
    }
}
