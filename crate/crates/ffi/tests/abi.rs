use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use hkit_ffi::*;

fn last_error() -> String {
    let mut need = 0usize;
    unsafe { hkit_last_error(ptr::null_mut(), 0, &mut need) };
    let mut buf = vec![0 as c_char; need];
    assert_eq!(unsafe { hkit_last_error(buf.as_mut_ptr(), need, ptr::null_mut()) }, HKIT_OK);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(hkit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn circle_lift_reaches_minus_four_pi() {
    let n = 4096usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let values: Vec<f64> = times
        .iter()
        .flat_map(|&s| {
            let a = std::f64::consts::TAU * s;
            [a.cos(), a.sin()]
        })
        .collect();
    let mut path = ptr::null_mut();
    assert_eq!(unsafe { hkit_path_new(times.as_ptr(), n + 1, 2, values.as_ptr(), &mut path) }, HKIT_OK);
    let mut lift = ptr::null_mut();
    assert_eq!(unsafe { hkit_horizontal_lift(path, 0.0, &mut lift) }, HKIT_OK);
    let (mut len, mut dim) = (0, 0);
    assert_eq!(unsafe { hkit_path_shape(lift, &mut len, &mut dim) }, HKIT_OK);
    assert_eq!((len, dim), (n + 1, 3));
    let mut buf = vec![0.0; len * dim];
    assert_eq!(unsafe { hkit_path_values(lift, buf.as_mut_ptr(), buf.len() - 1) }, HKIT_ERR_BUFFER);
    assert_eq!(unsafe { hkit_path_values(lift, buf.as_mut_ptr(), buf.len()) }, HKIT_OK);
    assert!((buf[buf.len() - 1] + 4.0 * std::f64::consts::PI).abs() < 1e-6);
    unsafe {
        hkit_path_free(lift);
        hkit_path_free(path);
    }
}

#[test]
fn young_methods_agree_on_rough_pair() {
    let (mut f, mut g) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(hkit_path_weierstrass(0.6, 2, 12, 1 << 12, 1, 1, &mut f), HKIT_OK);
        assert_eq!(hkit_path_weierstrass(0.6, 2, 12, 1 << 12, 1, 2, &mut g), HKIT_OK);
        let (mut a, mut b, mut e) = (0.0, 0.0, 0.0);
        assert_eq!(hkit_young(f, g, HKIT_YOUNG_RS, f64::NAN, f64::NAN, &mut a, &mut e), HKIT_OK);
        assert_eq!(hkit_young(f, g, HKIT_YOUNG_MOLLIFIED, f64::NAN, f64::NAN, &mut b, ptr::null_mut()), HKIT_OK);
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} {b}");
        assert_eq!(hkit_young(f, g, HKIT_YOUNG_RS, 0.4, 0.5, &mut a, &mut e), HKIT_ERR_YOUNG_CONDITION);
        assert!(last_error().contains("Young condition"));
        assert_eq!(hkit_young(f, g, 7, f64::NAN, f64::NAN, &mut a, &mut e), HKIT_ERR_PARSE);
        hkit_path_free(f);
        hkit_path_free(g);
    }
}

#[test]
fn null_and_dimension_errors() {
    let mut out = 0.0;
    let p = [0.0, 0.0, 1.0];
    unsafe {
        assert_eq!(hkit_koranyi_dist(1, p.as_ptr(), ptr::null(), &mut out), HKIT_ERR_NULL);
        assert!(last_error().contains("q"));
        assert_eq!(hkit_koranyi_dist(1, p.as_ptr(), p.as_ptr(), &mut out), HKIT_OK);
        assert_eq!(out, 0.0);
        assert!(last_error().is_empty());
        let q = [1.0, 0.0, 0.0];
        assert_eq!(hkit_koranyi_dist(1, p.as_ptr(), q.as_ptr(), &mut out), HKIT_OK);
        assert!(out > 0.0);
        let mut path = ptr::null_mut();
        assert_eq!(hkit_path_new(p.as_ptr(), 3, 2, ptr::null(), &mut path), HKIT_ERR_NULL);
        hkit_path_free(ptr::null_mut());
        hkit_form_free(ptr::null_mut());
    }
}

#[test]
fn form_roundtrip_and_split() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(hkit_form_random(2, 1, 6, 3, false, &mut w), HKIT_OK);
        let mut need = 0;
        assert_eq!(hkit_form_to_json(w, ptr::null_mut(), 0, &mut need), HKIT_ERR_BUFFER);
        let mut buf = vec![0 as c_char; need];
        assert_eq!(hkit_form_to_json(w, buf.as_mut_ptr(), need, ptr::null_mut()), HKIT_OK);
        let mut back = ptr::null_mut();
        assert_eq!(hkit_form_from_json(buf.as_ptr(), &mut back), HKIT_OK);
        let (mut n0, mut n1) = (0.0, 0.0);
        hkit_form_norm(w, &mut n0);
        hkit_form_norm(back, &mut n1);
        assert_eq!(n0, n1);

        let (mut d, mut dl, mut h) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(hkit_hodge_split(w, &mut d, &mut dl, &mut h), HKIT_OK);
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        hkit_form_norm(d, &mut a);
        hkit_form_norm(dl, &mut b);
        hkit_form_norm(h, &mut c);
        assert!((a * a + b * b + c * c - n0 * n0).abs() < 1e-9 * n0 * n0);
        assert_eq!(hkit_hodge_split(w, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), HKIT_OK);
        for f in [w, back, d, dl, h] {
            hkit_form_free(f);
        }
        let bad = CString::new("{\"k\":2}").unwrap();
        let mut x = ptr::null_mut();
        assert_eq!(hkit_form_from_json(bad.as_ptr(), &mut x), HKIT_ERR_PARSE);
        assert!(x.is_null());
    }
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/hkit.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["hkit_young", "hkit_hodge_split", "HKIT_ERR_PANIC", "typedef struct HkitPath HkitPath"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror", header]).output() else {
        return; // no C compiler available
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
