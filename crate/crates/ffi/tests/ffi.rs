use std::ffi::{CStr, CString};
use std::ptr;

use nlslab_ffi::*;

fn grid(n: usize) -> *mut NlsGrid {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_grid_new(3, 20.0, n, &mut g) },
        NlsStatus::Ok
    );
    g
}

fn last_error() -> String {
    let p = nlslab_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(nlslab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn grid_errors_carry_codes_and_messages() {
    let mut g = ptr::null_mut();
    let s = unsafe { nlslab_grid_new(7, 20.0, 64, &mut g) };
    assert_eq!(s, NlsStatus::InvalidArgument);
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let s = unsafe { nlslab_grid_new(3, 20.0, 64, ptr::null_mut()) };
    assert_eq!(s, NlsStatus::NullPointer);
    assert_eq!(unsafe { nlslab_grid_len(ptr::null()) }, 0);
}

#[test]
fn samples_round_trip_through_handles() {
    let g = grid(64);
    let n = unsafe { nlslab_grid_len(g) };
    assert_eq!(n, 64);
    let mut nodes = vec![0.0; n];
    assert_eq!(
        unsafe { nlslab_grid_nodes(g, nodes.as_mut_ptr(), n) },
        NlsStatus::Ok
    );
    assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    let mut short = vec![0.0; n - 1];
    assert_eq!(
        unsafe { nlslab_grid_nodes(g, short.as_mut_ptr(), n - 1) },
        NlsStatus::BufferTooSmall
    );

    let re: Vec<f64> = nodes.iter().map(|r| (-r * r).exp()).collect();
    let im: Vec<f64> = nodes.iter().map(|r| 0.5 * (-r * r).exp()).collect();
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_field_new(g, re.as_ptr(), im.as_ptr(), n, &mut f) },
        NlsStatus::Ok
    );
    let (mut re2, mut im2) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(
        unsafe { nlslab_field_samples(f, re2.as_mut_ptr(), im2.as_mut_ptr(), n) },
        NlsStatus::Ok
    );
    assert_eq!(re, re2);
    assert_eq!(im, im2);

    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_field_new(g, re.as_ptr(), ptr::null(), n - 1, &mut bad) },
        NlsStatus::InvalidArgument
    );
    unsafe {
        nlslab_field_free(f);
        nlslab_grid_free(g);
    }
}

#[test]
fn norms_and_free_propagation() {
    let g = grid(128);
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_field_gaussian(g, 0.5, 1.0, &mut f) },
        NlsStatus::Ok
    );
    let mut a = NlsFieldNorms::default();
    assert_eq!(
        unsafe { nlslab_field_norms(f, 0.05, 2.0, &mut a) },
        NlsStatus::Ok
    );
    assert!(a.mass > 0.0 && a.kinetic > 0.0);
    assert!((a.energy + a.correction - a.critical_energy).abs() < 1e-10 * a.kinetic);
    assert!((a.functional_k - (a.kinetic - a.critical_power)).abs() < 1e-14 * a.kinetic);

    let mut moved = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_field_propagate(f, 0.7, &mut moved) },
        NlsStatus::Ok
    );
    let mut b = NlsFieldNorms::default();
    assert_eq!(
        unsafe { nlslab_field_norms(moved, 0.05, 2.0, &mut b) },
        NlsStatus::Ok
    );
    assert!((a.mass - b.mass).abs() < 1e-10 * a.mass);
    assert!((a.kinetic - b.kinetic).abs() < 1e-10 * a.kinetic);
    unsafe {
        nlslab_field_free(moved);
        nlslab_field_free(f);
        nlslab_grid_free(g);
    }
}

#[test]
fn evolve_and_trace_text_round_trip() {
    let g = grid(128);
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_field_gaussian(g, 0.3, 1.0, &mut f) },
        NlsStatus::Ok
    );
    let mut p = unsafe { std::mem::zeroed::<NlsEvolveParams>() };
    assert_eq!(
        unsafe { nlslab_evolve_params_default(g, 0.05, 0.2, &mut p) },
        NlsStatus::Ok
    );
    p.dt = 1e-3;
    p.stride = 20;
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { nlslab_evolve(f, &p, &mut t) }, NlsStatus::Ok);
    let len = unsafe { nlslab_trace_len(t) };
    assert_eq!(len, 11);
    let mut halt = NlsHalt::BoundaryMass;
    assert_eq!(unsafe { nlslab_trace_halt(t, &mut halt) }, NlsStatus::Ok);
    assert_eq!(halt, NlsHalt::Completed);
    let mut time = 0.0;
    assert_eq!(
        unsafe { nlslab_trace_time(t, len - 1, &mut time) },
        NlsStatus::Ok
    );
    assert!((time - 0.2).abs() < 1e-12);
    assert_eq!(
        unsafe { nlslab_trace_time(t, len, &mut time) },
        NlsStatus::IndexOutOfRange
    );

    let mut text = ptr::null_mut();
    assert_eq!(unsafe { nlslab_trace_to_text(t, &mut text) }, NlsStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_trace_from_text(text, &mut back) },
        NlsStatus::Ok
    );
    let mut text2 = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_trace_to_text(back, &mut text2) },
        NlsStatus::Ok
    );
    unsafe {
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(text2));
    }

    let mut s0 = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_trace_snapshot(back, len - 1, &mut s0) },
        NlsStatus::Ok
    );
    assert_eq!(unsafe { nlslab_field_len(s0) }, 128);

    let mut v = NlsVirial::default();
    assert_eq!(
        unsafe { nlslab_trace_virial(t, 2.0, 0.05, &mut v) },
        NlsStatus::Ok
    );
    assert_eq!(v.rows, len);
    assert!(v.max_residual.is_finite());

    let garbage = CString::new("not a trace").unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_trace_from_text(garbage.as_ptr(), &mut none) },
        NlsStatus::Trace
    );
    assert!(none.is_null());

    unsafe {
        nlslab_field_free(s0);
        nlslab_string_free(text);
        nlslab_string_free(text2);
        nlslab_trace_free(back);
        nlslab_trace_free(t);
        nlslab_field_free(f);
        nlslab_grid_free(g);
    }
}

#[test]
fn scattering_on_linear_run() {
    let g = grid(256);
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { nlslab_field_gaussian(g, 0.05, 1.0, &mut f) },
        NlsStatus::Ok
    );
    let mut p = unsafe { std::mem::zeroed::<NlsEvolveParams>() };
    assert_eq!(
        unsafe { nlslab_evolve_params_default(g, 0.0, 8.0, &mut p) },
        NlsStatus::Ok
    );
    p.dt = 1e-2;
    p.stride = 10;
    p.linear = true;
    p.boundary_limit = 1.0;
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { nlslab_evolve(f, &p, &mut t) }, NlsStatus::Ok);
    let mut sc = NlsScattering::default();
    let s = unsafe { nlslab_trace_scattering(t, 2.0, 1e-3, &mut sc) };
    assert_eq!(s, NlsStatus::Ok, "{}", last_error());
    assert!(sc.scattered);
    assert!(sc.final_residual < 1e-10);
    unsafe {
        nlslab_trace_free(t);
        nlslab_field_free(f);
        nlslab_grid_free(g);
    }
}

#[test]
fn simulate_config_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 3\n[grid]\ndim = 3\nr_max = 20.0\nmodes = 64\n[evolution]\nt_end = 0.05\ndt = 1e-3\nstride = 10\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let c_cfg = CString::new(cfg.to_str().unwrap()).unwrap();
    let c_out = CString::new(out.to_str().unwrap()).unwrap();
    let s = unsafe { nlslab_simulate_config(c_cfg.as_ptr(), c_out.as_ptr()) };
    assert_eq!(
        s,
        NlsStatus::Ok,
        "{}",
        if s == NlsStatus::Ok {
            String::new()
        } else {
            last_error()
        }
    );
    assert!(out.join("trace.txt").exists());
    assert!(out.join("classify.txt").exists());

    let missing = CString::new(dir.path().join("nope.toml").to_str().unwrap()).unwrap();
    let s = unsafe { nlslab_simulate_config(missing.as_ptr(), c_out.as_ptr()) };
    assert_ne!(s, NlsStatus::Ok);
    assert!(!last_error().is_empty());
}

#[test]
fn header_declares_the_entry_points() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nlslab.h")).unwrap();
    for name in [
        "typedef struct NlsGrid NlsGrid;",
        "typedef struct NlsField NlsField;",
        "typedef struct NlsTrace NlsTrace;",
        "NLS_STATUS_OK = 0",
        "nlslab_grid_new(",
        "nlslab_evolve(",
        "nlslab_trace_to_text(",
        "nlslab_last_error_message(",
        "nlslab_simulate_config(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
