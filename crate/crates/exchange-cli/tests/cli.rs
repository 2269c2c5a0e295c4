//! End-to-end tests of the `exchange` binary: exit codes, machine output,
//! and input round-trips.

use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exchange"))
}

fn write_file(contents: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().expect("temp file");
    f.write_all(contents.as_bytes()).expect("write");
    f
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

const TABLE4: &str =
    r#"{"n":4,"order":[0,1,2,3],"preferences":[[3,2,1,0],[3,2,1,0],[0,1,2,3],[0,1,2,3]]}"#;
const TABLE1_P: &str = r#"{"n":3,"preferences":[[2,1,0],[0,1,2],[0,1,2]]}"#;

#[test]
fn solve_designator_table4() {
    let profile = write_file(TABLE4);
    let out = bin()
        .args(["solve", "--rule", "designator", "--profile"])
        .arg(profile.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "[3,2,0,1]");
}

#[test]
fn solve_crawler_table1() {
    let profile = write_file(TABLE1_P);
    let out = bin()
        .args(["solve", "--rule", "crawler", "--profile"])
        .arg(profile.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "[2,0,1]");
}

#[test]
fn solve_ttc_identity_on_all_null() {
    let profile = write_file(r#"{"n":3,"preferences":[[0,1,2],[1,0,2],[2,1,0]]}"#);
    let out = bin()
        .args(["solve", "--rule", "ttc", "--profile"])
        .arg(profile.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "[0,1,2]");
}

#[test]
fn solve_rejects_non_single_peaked_designator_input() {
    let profile = write_file(r#"{"n":3,"preferences":[[0,2,1],[0,1,2],[0,1,2]]}"#);
    let out = bin()
        .args(["solve", "--rule", "designator", "--profile"])
        .arg(profile.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_rejects_unparsable_profile() {
    let profile = write_file(r#"{"n":3,"preferences":[[0,2,1]]}"#);
    let out = bin()
        .args(["solve", "--rule", "ttc", "--profile"])
        .arg(profile.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn order_flag_overrides_embedded_order() {
    // Under o_2 < o_1 < o_3 the third agent grabs o_1 immediately and the
    // first crawls over it to o_3, unlike the natural-order run.
    let profile = write_file(TABLE1_P);
    let order = write_file("[1,0,2]");
    let out = bin()
        .args(["solve", "--rule", "crawler", "--profile"])
        .arg(profile.path())
        .arg("--order")
        .arg(order.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "[2,1,0]");
    let out2 = bin()
        .args(["solve", "--rule", "crawler", "--profile"])
        .arg(profile.path())
        .output()
        .unwrap();
    assert_eq!(stdout(&out2).trim(), "[2,0,1]");
}

#[test]
fn trace_designator_table4_format() {
    let profile = write_file(TABLE4);
    let out = bin()
        .args(["trace", "--rule", "designator", "--profile"])
        .arg(profile.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let expected = "step=1 kind=designate leaver=3 takes=o_1 designated=1\n\
                    step=2 kind=designate leaver=4 takes=o_2 designated=1\n\
                    step=3 kind=crawl leaver=1 takes=o_4 designated=-\n\
                    step=4 kind=crawl leaver=2 takes=o_3 designated=-\n\
                    allocation=[3,2,0,1]\n";
    assert_eq!(stdout(&out), expected);
}

#[test]
fn audit_crawler_eba_fails_with_exit_one() {
    let out = bin()
        .args([
            "audit",
            "--rule",
            "crawler",
            "--domain",
            "single-peaked",
            "--n",
            "4",
            "--props",
            "eba",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("\"pass\": false"), "{text}");
}

#[test]
fn audit_designator_four_agent_suite_passes() {
    let out = bin()
        .args([
            "audit",
            "--rule",
            "designator",
            "--domain",
            "single-peaked",
            "--n",
            "4",
            "--props",
            "ir,eff,sp,eua,eba",
            "--jobs",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn audit_empty_props_trivially_passes() {
    let out = bin()
        .args([
            "audit", "--rule", "ttc", "--domain", "single-peaked", "--n", "3", "--props", "",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn audit_unknown_property_is_usage_error() {
    let out = bin()
        .args([
            "audit", "--rule", "ttc", "--domain", "single-peaked", "--n", "3", "--props", "zzz",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audit_output_is_byte_stable() {
    let args = [
        "audit",
        "--rule",
        "crawler",
        "--domain",
        "single-peaked",
        "--n",
        "4",
        "--props",
        "eba,eua",
        "--exhaustive",
    ];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn domain_check_reports_witness_for_mixed_domain() {
    let domain =
        write_file(r#"{"n":3,"prefs":[[0,2,1],[0,1,2],[1,0,2],[2,1,0],[1,2,0]]}"#);
    let out = bin().args(["domain-check", "--domain"]).arg(domain.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("rich = true"), "{text}");
    assert!(text.contains("single-peaked = false"), "{text}");
    assert!(text.contains("o_1 > o_3 > o_2"), "{text}");
}

#[test]
fn domain_check_accepts_single_peaked_domain() {
    let domain = write_file(r#"{"n":3,"prefs":[[0,1,2],[1,0,2],[1,2,0],[2,1,0]]}"#);
    let out = bin().args(["domain-check", "--domain"]).arg(domain.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("recovered order"));
}

#[test]
fn osp_verify_designator_n3() {
    let out = bin()
        .args(["osp-verify", "--game", "designator", "--n", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("outcome equality: 64/64 profiles"), "{text}");
}

#[test]
fn reproduce_known_and_unknown_cases() {
    let ok = bin().args(["reproduce", "--case", "table1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = bin().args(["reproduce", "--case", "bogus"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn profile_json_round_trips_through_the_library() {
    // parse -> serialize -> parse is the identity on profiles.
    let (profile, order) = exchange::core::parse_profile(TABLE4).unwrap();
    let json = exchange::core::profile_to_json(&profile, order.as_ref());
    let (profile2, order2) = exchange::core::parse_profile(&json).unwrap();
    assert_eq!(profile, profile2);
    assert_eq!(
        order.unwrap().objects_in_order(),
        order2.unwrap().objects_in_order()
    );
}
