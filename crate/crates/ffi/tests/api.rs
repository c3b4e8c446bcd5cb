use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use nsw_ffi::*;

fn instance(p: u64, n: usize, m: usize, heavy: &[u8]) -> *mut NswInstance {
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { nsw_instance_new(p, n, m, heavy.as_ptr(), &mut inst) }, NswStatus::Ok);
    inst
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(nsw_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn solve_intro_instance() {
    let inst = instance(3, 2, 5, &[1, 1, 0, 0, 0, 1, 1, 0, 0, 0]);
    unsafe {
        assert_eq!(nsw_instance_agents(inst), 2);
        assert_eq!(nsw_instance_goods(inst), 5);
        let mut sol = ptr::null_mut();
        assert_eq!(nsw_solve(inst, 1, &mut sol), NswStatus::Ok);
        assert_eq!(CStr::from_ptr(nsw_solution_product(sol)).to_str().unwrap(), "36");
        assert_eq!(nsw_solution_empty_bundles(sol), 0);
        assert_eq!(nsw_solution_violations(sol), 0);
        let mut values = [0u64; 2];
        assert_eq!(nsw_solution_values_x2(sol, values.as_mut_ptr(), 2), NswStatus::Ok);
        assert_eq!(values, [6, 6]);
        let mut owners = [0usize; 5];
        assert_eq!(nsw_solution_owners(sol, owners.as_mut_ptr(), 5), NswStatus::Ok);
        assert_eq!(owners[0], owners[1]);
        assert_eq!(nsw_solution_owners(sol, owners.as_mut_ptr(), 4), NswStatus::BufferTooSmall);
        assert!(last_error().contains("need 5"));
        let mut json = ptr::null_mut();
        assert_eq!(nsw_solution_json(sol, &mut json), NswStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("\"nsw_product\": \"36\""));
        nsw_string_free(json);
        nsw_solution_free(sol);
        nsw_instance_free(inst);
    }
}

#[test]
fn parse_errors_are_reported() {
    let text = CString::new("{\"version\": 1, \"p\": 3}").unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { nsw_instance_parse(text.as_ptr(), &mut inst) }, NswStatus::Parse);
    assert!(inst.is_null());
    assert!(last_error().contains("line 1"), "{}", last_error());
    let good = CString::new("{\"version\": 1, \"p\": 5, \"n\": 1, \"m\": 1, \"heavy\": [[1]]}").unwrap();
    assert_eq!(unsafe { nsw_instance_parse(good.as_ptr(), &mut inst) }, NswStatus::Ok);
    unsafe { nsw_instance_free(inst) };
}

#[test]
fn invalid_arguments() {
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { nsw_instance_new(4, 1, 1, [0u8].as_ptr(), &mut inst) }, NswStatus::InvalidInstance);
    assert_eq!(unsafe { nsw_instance_new(3, 1, 1, ptr::null(), &mut inst) }, NswStatus::NullArgument);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { nsw_solve(ptr::null(), 1, &mut sol) }, NswStatus::NullArgument);
    unsafe {
        nsw_instance_free(ptr::null_mut());
        nsw_solution_free(ptr::null_mut());
        nsw_string_free(ptr::null_mut());
    }
}

#[test]
fn verify_and_budget() {
    let inst = instance(5, 3, 4, &[1, 0, 1, 0, 0, 1, 1, 0, 1, 1, 0, 0]);
    let mut matches = -1;
    assert_eq!(unsafe { nsw_verify(inst, 1_000_000, &mut matches) }, NswStatus::Ok);
    assert_eq!(matches, 1);
    assert_eq!(unsafe { nsw_verify(inst, 10, &mut matches) }, NswStatus::BudgetExceeded);
    unsafe { nsw_instance_free(inst) };
}

/// Directory holding `libnsw_ffi.a`: the parent of this test's `deps` dir.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let dir = artifact_dir();
    let lib = dir.join("libnsw_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "36 6 6");
}
