use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use dyweights_ffi::*;

fn last_error() -> String {
    let p = dw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn power(alpha: f64, depth: u32) -> *mut DwWeight {
    let mut w = ptr::null_mut();
    assert_eq!(
        unsafe { dw_weight_power(alpha, depth, &mut w) },
        DwStatus::Ok
    );
    w
}

#[test]
fn handles_and_characteristics() {
    let one = [1.0; 8];
    let mut w = ptr::null_mut();
    assert_eq!(
        unsafe { dw_weight_from_values(3, one.as_ptr(), 8, &mut w) },
        DwStatus::Ok
    );
    assert_eq!(unsafe { dw_weight_depth(w) }, 3);
    let mut a2 = 0.0;
    assert_eq!(unsafe { dw_char_joint_a2(w, w, &mut a2) }, DwStatus::Ok);
    assert_eq!(a2, 1.0);
    let mut rh1 = -1.0;
    assert_eq!(unsafe { dw_char_rh1(w, &mut rh1) }, DwStatus::Ok);
    assert_eq!(rh1, 0.0);
    let mut vals = [0.0; 8];
    assert_eq!(
        unsafe { dw_weight_values(w, vals.as_mut_ptr(), 8) },
        DwStatus::Ok
    );
    assert_eq!(vals, one);
    assert_eq!(
        unsafe { dw_weight_values(w, vals.as_mut_ptr(), 4) },
        DwStatus::LengthMismatch
    );
    unsafe { dw_weight_free(w) };

    let p = power(0.5, 10);
    let mut ainf = 0.0;
    assert_eq!(unsafe { dw_char_ainfty(p, &mut ainf) }, DwStatus::Ok);
    assert!(ainf >= 1.0);
    unsafe { dw_weight_free(p) };
}

#[test]
fn error_codes() {
    let mut w = ptr::null_mut();
    assert_eq!(
        unsafe { dw_weight_power(1.5, 4, &mut w) },
        DwStatus::InvalidArgument
    );
    assert!(last_error().contains("alpha"));
    assert!(w.is_null());
    assert_eq!(
        unsafe { dw_weight_power(0.5, 40, &mut w) },
        DwStatus::DepthOutOfRange
    );
    let bad = [1.0, -1.0];
    assert_eq!(
        unsafe { dw_weight_from_values(1, bad.as_ptr(), 2, &mut w) },
        DwStatus::NotPositive
    );
    assert_eq!(
        unsafe { dw_weight_from_values(1, ptr::null(), 2, &mut w) },
        DwStatus::NullPointer
    );
    let mut x = 0.0;
    assert_eq!(
        unsafe { dw_char_rh1(ptr::null(), &mut x) },
        DwStatus::NullPointer
    );
    unsafe { dw_weight_free(ptr::null_mut()) };
    unsafe { dw_string_free(ptr::null_mut()) };
}

#[test]
fn json_weight_and_norms() {
    let spec =
        CString::new(r#"{"family":"random-martingale","depth":6,"delta":0.5,"seed":3}"#).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(
        unsafe { dw_weight_from_json(spec.as_ptr(), &mut w) },
        DwStatus::Ok
    );
    let mut est = DwNormEstimate {
        value: 0.0,
        kind: DwEstimateKind::Exact,
        iterations: 0,
        residual: 0.0,
    };
    let b: Vec<f64> = (0..64).map(|j| ((j * 37) % 11) as f64 - 5.0).collect();
    let st = unsafe {
        dw_op_norm(
            DwOperator::Paraproduct,
            DwMethod::Dense,
            w,
            w,
            b.as_ptr(),
            b.len(),
            ptr::null(),
            &mut est,
        )
    };
    assert_eq!(st, DwStatus::Ok);
    assert_eq!(est.kind, DwEstimateKind::Exact);
    let dense = est.value;
    let cfg = DwPowerConfig {
        tol: 0.0,
        max_iters: 0,
        seed: 1,
    };
    let st = unsafe {
        dw_op_norm(
            DwOperator::Paraproduct,
            DwMethod::Power,
            w,
            w,
            b.as_ptr(),
            b.len(),
            &cfg,
            &mut est,
        )
    };
    assert_eq!(st, DwStatus::Ok);
    assert_eq!(est.kind, DwEstimateKind::ConvergedIterative);
    assert!((est.value - dense).abs() < 1e-7 * dense);

    let st = unsafe {
        dw_op_norm(
            DwOperator::Maximal,
            DwMethod::Power,
            w,
            w,
            ptr::null(),
            0,
            &cfg,
            &mut est,
        )
    };
    assert_eq!(st, DwStatus::Ok);
    assert_eq!(est.kind, DwEstimateKind::LowerBound);
    let st = unsafe {
        dw_op_norm(
            DwOperator::Paraproduct,
            DwMethod::Power,
            w,
            w,
            ptr::null(),
            0,
            &cfg,
            &mut est,
        )
    };
    assert_eq!(st, DwStatus::NullPointer);
    unsafe { dw_weight_free(w) };

    let big = power(0.5, 13);
    let st = unsafe {
        dw_op_norm(
            DwOperator::Square,
            DwMethod::Dense,
            big,
            big,
            ptr::null(),
            0,
            &cfg,
            &mut est,
        )
    };
    assert_eq!(st, DwStatus::DenseTooLarge);
    unsafe { dw_weight_free(big) };
}

#[test]
fn checks_over_json() {
    let id = CString::new("CHK-BERE").unwrap();
    let input = CString::new(r#"{"u":{"family":"power","depth":8,"alpha":0.5},"v":{"family":"power","depth":8,"alpha":0.5},"seed":0}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { dw_check_json(id.as_ptr(), input.as_ptr(), &mut out) },
        DwStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { dw_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["check_id"], "CHK-BERE");
    assert_eq!(v["pass"], true);

    let bad = CString::new("CHK-NOPE").unwrap();
    assert_eq!(
        unsafe { dw_check_json(bad.as_ptr(), input.as_ptr(), &mut out) },
        DwStatus::UnknownCheck
    );

    let depths = [3u32];
    let mut fails = usize::MAX;
    assert_eq!(
        unsafe { dw_suite_csv(depths.as_ptr(), 1, 0, &mut out, &mut fails) },
        DwStatus::Ok
    );
    let csv = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { dw_string_free(out) };
    assert_eq!(fails, 0);
    assert!(csv.starts_with("check_id,depth,family,params,seed,lhs,rhs,ratio,pass,kind,tol\n"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dyweights.h")
}

#[test]
fn header_declares_the_abi() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "dw_last_error",
        "dw_string_free",
        "dw_weight_from_values",
        "dw_weight_from_json",
        "dw_weight_power",
        "dw_weight_random",
        "dw_weight_free",
        "dw_weight_values",
        "dw_char_joint_a2",
        "dw_op_norm",
        "dw_check_json",
        "dw_suite_csv",
        "typedef struct DwWeight DwWeight;",
        "DW_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let lib = dir.join("libdyweights_ffi.a");
    lib.exists().then_some(lib)
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "dyweights.h"

int main(void) {
    DwWeight *w = NULL;
    if (dw_weight_power(0.5, 8, &w) != DW_STATUS_OK) return 1;
    double a2 = 0.0;
    if (dw_char_joint_a2(w, w, &a2) != DW_STATUS_OK) return 2;
    DwNormEstimate est;
    if (dw_op_norm(DW_OPERATOR_SQUARE, DW_METHOD_FORM, w, w, NULL, 0, NULL, &est) != DW_STATUS_OK) return 3;
    dw_weight_free(w);
    if (dw_weight_power(2.0, 8, &w) != DW_STATUS_INVALID_ARGUMENT) return 4;
    printf("%.6f %.6f %s\n", a2, est.value, dw_last_error());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let Some(lib) = static_lib() else {
        eprintln!("static library not built; skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    let parts: Vec<&str> = text.split_whitespace().collect();
    let a2: f64 = parts[0].parse().unwrap();
    let w = power(0.5, 8);
    let mut expected = 0.0;
    assert_eq!(
        unsafe { dw_char_joint_a2(w, w, &mut expected) },
        DwStatus::Ok
    );
    unsafe { dw_weight_free(w) };
    assert!((a2 - expected).abs() < 1e-6, "{text}");
    assert!(text.contains("alpha"), "{text}");
}
