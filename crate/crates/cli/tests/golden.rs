//! Golden tests: every verb runs once with byte-stable expected output.

use assert_cmd::Command;
use predicates::prelude::*;

fn infrew() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infrew"))
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn check_wo_sp() {
    infrew()
        .args(["check", "wo", &fixture("sp.trs")])
        .assert()
        .success()
        .stdout("WeaklyOrthogonal, 2 critical pairs, all trivial\n");
}

#[test]
fn check_ortho_fails_on_sp() {
    infrew()
        .args(["check", "ortho", &fixture("sp.trs")])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("not orthogonal"));
}

#[test]
fn check_ortho_collapse() {
    infrew()
        .args(["check", "ortho", &fixture("collapse.trs")])
        .assert()
        .success()
        .stdout("Orthogonal, 0 critical pairs\n");
}

#[test]
fn usage_error_is_exit_2() {
    infrew().args(["frobnicate"]).assert().code(2);
}

#[test]
fn critical_pairs_sp() {
    infrew()
        .args(["critical-pairs", &fixture("sp.trs")])
        .assert()
        .success()
        .stdout(
            "outer=ps inner=sp pos=1 left=P(x_in) right=P(x_in) trivial=true\n\
             outer=sp inner=ps pos=1 left=S(x_in) right=S(x_in) trivial=true\n",
        );
}

#[test]
fn redexes_sp_word() {
    infrew()
        .args(["redexes", &fixture("sp.trs"), "--term", "P(S(P(S(x))))"])
        .assert()
        .success()
        .stdout("pos=e rule=ps\npos=1 rule=sp\npos=1.1 rule=ps\n");
}

#[test]
fn clusters_chain_family() {
    infrew()
        .args([
            "clusters",
            &fixture("chain.trs"),
            "--term",
            "rec a = A(a)",
            "--family",
            "e:chain:1",
            "--depth",
            "6",
        ])
        .assert()
        .success()
        .stdout("kind=I extent=inf root=e size=omega trivial=true\n");
}

#[test]
fn clusters_remark_y() {
    infrew()
        .args([
            "clusters",
            &fixture("remark.trs"),
            "--term",
            "f(g(a, a), u, g(a, a))",
            "--depth",
            "4",
        ])
        .assert()
        .success()
        .stdout("kind=Y extent=fin root=e size=4 trivial=true\n");
}

#[test]
fn orthogonalize_chain() {
    infrew()
        .args([
            "orthogonalize",
            &fixture("chain.trs"),
            "--term",
            "A(A(A(A(A(c)))))",
        ])
        .assert()
        .success()
        .stdout(
            "redex@e(chain) -> redex@e(chain)\n\
             redex@1(chain) -> redex@e(chain)\n\
             redex@1.1(chain) -> redex@e(chain)\n",
        );
}

#[test]
fn orthogonalize_idy_drops_y_cluster() {
    infrew()
        .args([
            "orthogonalize",
            &fixture("idy.trs"),
            "--term",
            "f(B(c), B(c))",
            "--redexes",
            "e:idf,1:idb,2:idb",
        ])
        .assert()
        .success()
        .stdout(
            "redex@e(idf) -> UNDEF\n\
             redex@1(idb) -> UNDEF\n\
             redex@2(idb) -> UNDEF\n",
        );
}

#[test]
fn orthogonalize_random_suite() {
    infrew()
        .args([
            "orthogonalize",
            &fixture("bchain.trs"),
            "--term",
            "c",
            "--random",
            "10",
            "--seed",
            "42",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("invariant holds"));
}

#[test]
fn develop_chain_pair() {
    infrew()
        .args([
            "develop",
            &fixture("chain.trs"),
            "--term",
            "A(A(A(A(A(A(c))))))",
            "--redexes",
            "e:chain,1.1.1:chain",
        ])
        .assert()
        .success()
        .stdout("A(A(c))\n");
}

#[test]
fn bullet_chain_finite_and_omega() {
    infrew()
        .args([
            "bullet",
            &fixture("chain.trs"),
            "--term",
            "A(A(A(A(A(c)))))",
        ])
        .assert()
        .success()
        .stdout("A(A(A(c)))\n");
    infrew()
        .args([
            "bullet",
            &fixture("chain.trs"),
            "--term",
            "rec a = A(a)",
            "--family",
            "e:chain:1",
        ])
        .assert()
        .success()
        .stdout("rec r0 = A(r0)\n");
}

#[test]
fn triangle_test_chain() {
    infrew()
        .args([
            "triangle-test",
            &fixture("chain.trs"),
            "--term",
            "A(A(A(A(A(A(A(c)))))))",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("triangle holds"));
}

#[test]
fn diamond_join_chain() {
    infrew()
        .args([
            "diamond-join",
            &fixture("chain.trs"),
            "--term",
            "A(A(A(A(A(A(c))))))",
            "--left",
            "e:chain",
            "--right",
            "1:chain",
        ])
        .assert()
        .success()
        .stdout("join-left= join-right= common=A(A(A(A(c))))\n");
}

#[test]
fn compress_fixture_report() {
    infrew()
        .args(["compress", "--fixture", "fg-omega"])
        .assert()
        .success()
        .stdout(predicate::str::contains(
            "compressed: min-depth=Some(0) steps-at-min=Some(1)",
        ))
        .stdout(predicate::str::contains("--limit(("));
}

#[test]
fn compress_finite_steps() {
    infrew()
        .args([
            "compress",
            &fixture("chain.trs"),
            "--term",
            "A(A(A(A(A(A(A(c)))))))",
            "--steps",
            "e:chain,1:chain",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("min-depth=Some(0)"));
}

#[test]
fn pml_fixture_report() {
    infrew()
        .args(["pml", "--fixture", "fg-omega"])
        .assert()
        .success()
        .stdout(predicate::str::contains("psi: [wrap@e]"));
}

#[test]
fn join_asymmetric() {
    infrew()
        .args([
            "join",
            &fixture("chain.trs"),
            "--term",
            "A(A(A(A(A(A(A(c)))))))",
            "--left",
            "e:chain,e:chain",
            "--right",
            "1:chain",
            "--agree-depth",
            "10",
        ])
        .assert()
        .success()
        .stdout("joined to depth 10: left-continuation=[] right-continuation=[chain@e]\n");
}

#[test]
fn join_refuses_collapsing_system() {
    infrew()
        .args([
            "join",
            &fixture("collapse.trs"),
            "--term",
            "f(a, b)",
            "--left",
            "e:k",
            "--right",
            "e:k",
        ])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("collapsing rule"));
}

#[test]
fn sp_classify_psi() {
    infrew()
        .args(["sp", "classify", "psi"])
        .assert()
        .success()
        .stdout(
            "word: blocks=[(P,1,2),(S,2,2)]\n\
             snorm=inf pnorm=inf\n\
             reduces-to-S^w=true reduces-to-P^w=true\n\
             root-active=true SN-inf=false WN-inf=true\n\
             venn-region=RA-core\n",
        );
}

#[test]
fn sp_classify_table() {
    for (name, region) in [
        ("zeta", "RA-other"),
        ("xi", "RA-other"),
        ("xi_prime", "S-only-non-SN"),
        ("ssp_omega", "SN-to-S"),
    ] {
        infrew()
            .args(["sp", "classify", name])
            .assert()
            .success()
            .stdout(predicate::str::contains(format!("venn-region={region}")));
    }
}

#[test]
fn sp_witness_psi() {
    infrew()
        .args(["sp", "witness", "psi", "--to", "s", "--segments", "2"])
        .assert()
        .success()
        .stdout(
            "w1=PSS sum=+1 steps=[(1,PS)] nf=S\n\
             w2=PPPSSSS sum=+1 steps=[(3,PS),(2,PS),(1,PS)] nf=S\n",
        );
}

#[test]
fn sp_witness_refused_for_zeta() {
    infrew()
        .args(["sp", "witness", "zeta", "--to", "s"])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("norm is finite"));
}

#[test]
fn sp_nf() {
    infrew()
        .args(["sp", "nf", "SSP"])
        .assert()
        .success()
        .stdout("S\n");
    infrew()
        .args(["sp", "nf", "PPS"])
        .assert()
        .success()
        .stdout("P\n");
    infrew()
        .args(["sp", "nf", "PS"])
        .assert()
        .success()
        .stdout("(empty)\n");
}

#[test]
fn lambda_translate_psi() {
    infrew()
        .args(["lambda", "translate", "psi", "--depth", "5"])
        .assert()
        .success()
        .stdout("(\\x0. \\x1. ..-1.. x0 x1) x0\n");
}

#[test]
fn lambda_square() {
    infrew()
        .args(["lambda", "square", "psi", "--pos", "1", "--depth", "12"])
        .assert()
        .success()
        .stdout("square at letter 1: commutes\n");
}

#[test]
fn lambda_wwi() {
    infrew()
        .args(["lambda", "wwi"])
        .assert()
        .success()
        .stdout(predicate::str::contains("-> W W V3 x0 [2 beta steps] ok"))
        .stdout(predicate::str::contains(
            "eta branch -> (W W I) x0 [2 eta steps] ok",
        ));
}

#[test]
fn demo_un_failure() {
    infrew()
        .args(["demo", "un-failure"])
        .assert()
        .success()
        .stdout(predicate::str::contains("snorm=inf pnorm=inf"))
        .stdout(predicate::str::contains(
            "two distinct normal forms reachable from one word",
        ));
}

#[test]
fn demo_collapse() {
    infrew()
        .args(["demo", "collapse"])
        .assert()
        .success()
        .stdout(predicate::str::contains("route 1 limit: rec r0 = f(r0, a)"))
        .stdout(predicate::str::contains("route 2 limit: rec r0 = f(r0, b)"))
        .stdout(predicate::str::contains("bisim-distinct: true"))
        .stdout(predicate::str::contains("join refused"));
}

#[test]
fn json_mode_is_machine_readable() {
    let out = infrew()
        .args(["sp", "classify", "psi", "--format", "json"])
        .assert()
        .success();
    let stdout = String::from_utf8(out.get_output().stdout.clone()).unwrap();
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["venn_region"], "RA-core");
    assert_eq!(v["snorm"], "inf");
}

#[test]
fn nonexistent_rule_file_is_analysis_error() {
    infrew()
        .args(["check", "wo", "/nonexistent/never.trs"])
        .assert()
        .code(1);
}

#[test]
fn non_left_linear_rejected_with_diagnostic() {
    let dir = std::env::temp_dir().join("infrew-nll-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("nll.trs");
    std::fs::write(&path, "r: f(x, x) -> c\n").unwrap();
    infrew()
        .args(["check", "wo", path.to_str().unwrap()])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("not left-linear"))
        .stderr(predicate::str::contains("f(x, x) -> c"));
}
