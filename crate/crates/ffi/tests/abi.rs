use std::ffi::{CStr, CString};
use std::ptr;

use mdsat_ffi::*;

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { mdsat_string_free(p) };
    s
}

fn last_error() -> String {
    let p = mdsat_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut MdsatFormula {
    let c = CString::new(text).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { mdsat_formula_parse_dimacs(c.as_ptr(), &mut f) }, MdsatStatus::Ok);
    f
}

#[test]
fn parse_evaluate_count() {
    let f = parse("p cnf 3 2\n1 2 0\n-1 3 0\n");
    unsafe {
        assert_eq!(mdsat_formula_num_vars(f), 3);
        assert_eq!(mdsat_formula_num_clauses(f), 2);
        let mut sat = false;
        let a = CString::new("101").unwrap();
        assert_eq!(mdsat_formula_evaluate(f, a.as_ptr(), &mut sat), MdsatStatus::Ok);
        assert!(sat);
        let a = CString::new("100").unwrap();
        assert_eq!(mdsat_formula_evaluate(f, a.as_ptr(), &mut sat), MdsatStatus::Ok);
        assert!(!sat);
        let mut count = 0u64;
        assert_eq!(mdsat_formula_count_solutions(f, &mut count), MdsatStatus::Ok);
        assert_eq!(count, 4);
        let mut text = ptr::null_mut();
        assert_eq!(mdsat_formula_to_dimacs(f, &mut text), MdsatStatus::Ok);
        assert!(take_string(text).starts_with("p cnf 3 2"));
        mdsat_formula_free(f);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new("p cnf 2 1\n1 5 0\n").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { mdsat_formula_parse_dimacs(bad.as_ptr(), &mut f) }, MdsatStatus::Parse);
    assert!(f.is_null());
    assert!(last_error().contains("outside"));

    assert_eq!(unsafe { mdsat_formula_parse_dimacs(ptr::null(), &mut f) }, MdsatStatus::NullPointer);

    let kind = CString::new("nope").unwrap();
    assert_eq!(unsafe { mdsat_formula_generate(kind.as_ptr(), 4, 4, 3, 0, &mut f) }, MdsatStatus::InvalidParameter);

    let g = parse("p cnf 30 1\n1 2 3 0\n");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mdsat_solve(g, ptr::null(), 0, &mut json) }, MdsatStatus::CapExceeded);
    unsafe { mdsat_formula_free(g) };
}

#[test]
fn solve_returns_report_json() {
    let kind = CString::new("planted_unique").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { mdsat_formula_generate(kind.as_ptr(), 6, 12, 3, 5, &mut f) }, MdsatStatus::Ok);
    let opts = CString::new(r#"{"theta": "frac:0.8", "plan": "layered"}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mdsat_solve(f, opts.as_ptr(), 9, &mut out) }, MdsatStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(report["status"], "SAT");
    assert_eq!(report["plan"], "layered");
    let a = CString::new(report["assignment"].as_str().unwrap()).unwrap();
    let mut sat = false;
    unsafe {
        assert_eq!(mdsat_formula_evaluate(f, a.as_ptr(), &mut sat), MdsatStatus::Ok);
        assert!(sat);
        let bad = CString::new(r#"{"thetaa": 1}"#).unwrap();
        assert_eq!(mdsat_solve(f, bad.as_ptr(), 9, &mut out), MdsatStatus::Parse);
        mdsat_formula_free(f);
    }
}

#[test]
fn spectral_and_phf() {
    let f = parse("p cnf 3 2\n1 2 0\n-1 3 0\n");
    let grid = CString::new("frac:0.5,5.0").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mdsat_spectral(f, grid.as_ptr(), true, &mut out) }, MdsatStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert!(v[0]["report"]["gap"].as_f64().unwrap() > 0.0);
    assert!(v[1]["error"].is_string());
    unsafe { mdsat_formula_free(f) };

    let mut text = ptr::null_mut();
    let mut verified = false;
    assert_eq!(unsafe { mdsat_phf(10, 3, &mut text, &mut verified) }, MdsatStatus::Ok);
    assert!(verified);
    assert_eq!(take_string(text).lines().count(), 6);
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mdsat.h")).unwrap();
    for name in [
        "MDSAT_STATUS_OK",
        "typedef struct MdsatFormula MdsatFormula",
        "mdsat_formula_parse_dimacs",
        "mdsat_formula_generate",
        "mdsat_formula_free",
        "mdsat_solve",
        "mdsat_spectral",
        "mdsat_phf",
        "mdsat_string_free",
        "mdsat_last_error",
    ] {
        assert!(header.contains(name), "{name}");
    }
    assert!(!unsafe { CStr::from_ptr(mdsat_version()) }.to_bytes().is_empty());
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile_dir();
    let src = dir.join("use_api.c");
    std::fs::write(
        &src,
        "#include \"mdsat.h\"\n\
         int main(void) {\n\
           MdsatFormula *f = 0;\n\
           enum MdsatStatus s = mdsat_formula_parse_dimacs(\"p cnf 1 1\\n1 0\\n\", &f);\n\
           char *json = 0;\n\
           if (s == MDSAT_STATUS_OK) s = mdsat_solve(f, 0, 1, &json);\n\
           mdsat_string_free(json);\n\
           mdsat_formula_free(f);\n\
           return (int)s;\n\
         }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::remove_dir_all(dir).unwrap();
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mdsat-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
