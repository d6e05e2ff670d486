use std::ffi::{c_char, CString};
use std::ptr;

use pinns_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { pinns_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn problem(id: &str) -> *mut PinnsProblem {
    let id = CString::new(id).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pinns_problem_new(id.as_ptr(), &mut p) }, PinnsStatus::Ok);
    p
}

#[test]
fn unknown_problem_reports_catalog() {
    let id = CString::new("laplace").unwrap();
    let mut p = ptr::null_mut();
    let s = unsafe { pinns_problem_new(id.as_ptr(), &mut p) };
    assert_eq!(s, PinnsStatus::UnknownProblem);
    assert!(p.is_null());
    assert!(last_error().contains("poisson"));
}

#[test]
fn null_arguments() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pinns_problem_new(ptr::null(), &mut p) }, PinnsStatus::NullPointer);
    assert_eq!(unsafe { pinns_problem_input_dim(ptr::null()) }, 0);
    unsafe { pinns_problem_free(ptr::null_mut()) };
    unsafe { pinns_model_free(ptr::null_mut()) };
}

#[test]
fn exact_values_and_buffer_size() {
    let p = problem("poisson");
    assert_eq!(unsafe { pinns_problem_input_dim(p) }, 2);
    let x = [0.5, 0.5, 0.0, 0.3];
    let mut out = [0.0; 2];
    assert_eq!(
        unsafe { pinns_problem_exact(p, x.as_ptr(), 2, out.as_mut_ptr(), 2) },
        PinnsStatus::Ok
    );
    assert!((out[0] - 1.875).abs() < 1e-14);
    assert_eq!(out[1], 0.0);
    assert_eq!(
        unsafe { pinns_problem_exact(p, x.as_ptr(), 2, out.as_mut_ptr(), 1) },
        PinnsStatus::BufferTooSmall
    );
    unsafe { pinns_problem_free(p) };
}

#[test]
fn train_save_load_eval() {
    let p = problem("poisson");
    let opts = PinnsTrainOptions {
        n_points: 100,
        depth: 2,
        width: 8,
        max_iter: 30,
        seed: 4,
        ..Default::default()
    };
    let mut m = ptr::null_mut();
    let mut sum = PinnsTrainSummary::default();
    assert_eq!(unsafe { pinns_train(p, &opts, &mut m, &mut sum) }, PinnsStatus::Ok);
    assert!(sum.e_t.is_finite() && sum.e_t > 0.0);
    assert!(sum.e_sb.is_nan());
    assert_eq!(unsafe { pinns_model_param_count(m) }, 3 * 8 + 8 * 8 + 8 + 8 + 1);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { pinns_model_save(m, path.as_ptr()) }, PinnsStatus::Ok);
    let mut m2 = ptr::null_mut();
    assert_eq!(unsafe { pinns_model_load(path.as_ptr(), &mut m2) }, PinnsStatus::Ok);

    let x = [0.2, 0.7, 0.9, 0.1];
    let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
    unsafe {
        assert_eq!(pinns_model_eval(m, x.as_ptr(), 2, a.as_mut_ptr(), 2), PinnsStatus::Ok);
        assert_eq!(pinns_model_eval(m2, x.as_ptr(), 2, b.as_mut_ptr(), 2), PinnsStatus::Ok);
    }
    assert_eq!(a, b);

    let mut err = 0.0;
    assert_eq!(unsafe { pinns_model_l2_error(m, p, &mut err) }, PinnsStatus::Ok);
    assert!(err.is_finite() && err > 0.0);

    let stokes = problem("stokes");
    assert_eq!(
        unsafe { pinns_model_l2_error(m, stokes, &mut err) },
        PinnsStatus::InvalidArgument
    );
    unsafe {
        pinns_problem_free(stokes);
        pinns_model_free(m);
        pinns_model_free(m2);
        pinns_problem_free(p);
    }
}

#[test]
fn missing_checkpoint_is_io_error() {
    let path = CString::new("/nonexistent/pinns.json").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pinns_model_load(path.as_ptr(), &mut m) }, PinnsStatus::Io);
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/pinns.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ PinnsProblem *p = 0; PinnsStatus s = pinns_problem_new(\"poisson\", &p); return s == PINNS_STATUS_OK ? 0 : 1; }}\n"
        ),
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match std::process::Command::new(&cc).arg("-fsyntax-only").arg("-Wall").arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler; header check skipped"),
    }
}
