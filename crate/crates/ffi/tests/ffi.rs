use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use curvest_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let len = unsafe { curvest_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(len.min(511));
    String::from_utf8(buf).unwrap()
}

#[test]
fn sigma_and_cone_margin() {
    let kappa = [1.0, 2.0, 3.0, 4.0];
    let mut s = 0.0;
    assert_eq!(unsafe { curvest_sigma(kappa.as_ptr(), 4, 3, &mut s) }, CurvestStatus::Ok);
    assert_eq!(s, 50.0);
    let (mut inside, mut margin) = (0, 0.0);
    let v = [1.0, 1.0, -0.4];
    assert_eq!(unsafe { curvest_gamma_margin(v.as_ptr(), 3, 2, &mut inside, &mut margin) }, CurvestStatus::Ok);
    assert_eq!(inside, 1);
    assert!(margin > 0.0);
    let w = [1.0, 1.0, -0.6];
    assert_eq!(unsafe { curvest_gamma_margin(w.as_ptr(), 3, 2, &mut inside, &mut margin) }, CurvestStatus::Ok);
    assert_eq!(inside, 0);
}

#[test]
fn null_pointers_and_bad_input_are_reported() {
    let mut s = 0.0;
    assert_eq!(unsafe { curvest_sigma(ptr::null(), 3, 1, &mut s) }, CurvestStatus::NullPointer);
    assert!(last_error().contains("kappa"));
    let kappa = [1.0];
    assert_eq!(unsafe { curvest_sigma(kappa.as_ptr(), 1, 1, ptr::null_mut()) }, CurvestStatus::NullPointer);
    let (mut inside, mut margin) = (0, 0.0);
    assert_eq!(
        unsafe { curvest_gamma_margin(kappa.as_ptr(), 1, 2, &mut inside, &mut margin) },
        CurvestStatus::InvalidInput
    );
    let mut handle = ptr::null_mut();
    let name = CString::new("nope").unwrap();
    let dims = [3usize];
    assert_eq!(
        unsafe { curvest_sweep_run(name.as_ptr(), 1, 1, dims.as_ptr(), 1, &mut handle) },
        CurvestStatus::InvalidInput
    );
    assert!(handle.is_null());
    unsafe { curvest_sweep_free(ptr::null_mut()) };
}

#[test]
fn hyperboloid_curvatures() {
    let x = [0.3, -0.2];
    let w: f64 = 1.0 + x[0] * x[0] + x[1] * x[1];
    let du = [x[0] / w.sqrt(), x[1] / w.sqrt()];
    let d2u: Vec<f64> = (0..4)
        .map(|j| {
            let (a, b) = (j / 2, j % 2);
            (if a == b { 1.0 } else { 0.0 }) / w.sqrt() - x[a] * x[b] / w.powf(1.5)
        })
        .collect();
    let mut kappa = [0.0; 2];
    let status =
        unsafe { curvest_curvatures(du.as_ptr(), d2u.as_ptr(), 2, CurvestSignature::Minkowski, kappa.as_mut_ptr()) };
    assert_eq!(status, CurvestStatus::Ok);
    assert!(kappa.iter().all(|k| (k - 1.0).abs() < 1e-10), "{kappa:?}");
    let steep = [1.0, 0.5];
    let status =
        unsafe { curvest_curvatures(steep.as_ptr(), d2u.as_ptr(), 2, CurvestSignature::Minkowski, kappa.as_mut_ptr()) };
    assert_eq!(status, CurvestStatus::InvalidInput);
}

#[test]
fn sweep_handle_round_trip() {
    let name = CString::new("ratio").unwrap();
    let dims = [3usize, 4];
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { curvest_sweep_run(name.as_ptr(), 5, 50, dims.as_ptr(), 2, &mut handle) }, CurvestStatus::Ok);
    let (mut rows, mut bad) = (0, 1);
    assert_eq!(unsafe { curvest_sweep_counts(handle, &mut rows, &mut bad) }, CurvestStatus::Ok);
    assert_eq!((rows, bad), (100, 0));
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("r.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { curvest_sweep_write_csv(handle, path.as_ptr()) }, CurvestStatus::Ok);
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(text.lines().count(), 101);
    unsafe { curvest_sweep_free(handle) };
}

#[test]
fn solver_handle_status_codes() {
    let bad =
        CString::new(r#"{"n": 2, "h": 0.3, "boundary": {"preset": "zero"}, "f": {"preset": "constant", "value": 1}}"#)
            .unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { curvest_solver_new(bad.as_ptr(), &mut handle) }, CurvestStatus::InvalidInput);
    let infeasible = CString::new(
        r#"{"box": [[0, 2], [0, 2]], "h": 1.0, "boundary": {"preset": "zero"}, "f": {"preset": "exp_decay", "amplitude": 100}}"#,
    )
    .unwrap();
    assert_eq!(unsafe { curvest_solver_new(infeasible.as_ptr(), &mut handle) }, CurvestStatus::Ok);
    let mut residual = 0.0;
    assert_eq!(unsafe { curvest_solver_solve(handle, 0, 0.0, &mut residual) }, CurvestStatus::NotConverged);
    let mut values = [0.0; 9];
    assert_eq!(
        unsafe { curvest_solver_values(handle, values.as_mut_ptr(), ptr::null_mut(), 9) },
        CurvestStatus::InvalidInput
    );
    unsafe { curvest_solver_free(handle) };
}

/// Builds the static library with the profile of this test binary and
/// returns its path. `cargo test` only builds the rlib of the crate under test.
fn static_library() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|deps| deps.parent()).unwrap().to_path_buf();
    let target_dir = profile_dir.parent().unwrap();
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo)
        .args(["build", "--quiet", "--lib", "-p", "curvest-ffi", "--profile", "test", "--target-dir"])
        .arg(target_dir)
        .status()
        .unwrap();
    assert!(status.success(), "building the static library failed");
    profile_dir.join("libcurvest_ffi.a")
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = static_library();
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
