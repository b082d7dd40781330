use std::ffi::{CStr, CString};
use std::ptr;

use qpaug_ffi::*;

fn last_error() -> String {
    let p = qpaug_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn generated(qp: i32, seed: u64) -> *mut QpaugInstance {
    let mut inst = ptr::null_mut();
    assert_eq!(qpaug_generate(qp, 20, 10, 0.2, 0.2, seed, &mut inst), QpaugStatus::Ok);
    inst
}

#[test]
fn generate_solve_verify() {
    unsafe {
        for qp in [0, 1] {
            let inst = generated(qp, 4);
            let (mut n, mut m) = (0, 0);
            assert_eq!(qpaug_instance_dims(inst, &mut n, &mut m), QpaugStatus::Ok);
            assert_eq!(n, 10);
            assert!(m >= 20);

            let mut sol = ptr::null_mut();
            assert_eq!(qpaug_solve(inst, 0.0, 0, &mut sol), QpaugStatus::Ok);
            let mut r = f64::NAN;
            assert_eq!(qpaug_kkt_max_residual(inst, sol, 1, &mut r), QpaugStatus::Ok);
            assert!(r <= 1e-6, "{r}");

            let mut x = vec![0.0; n];
            assert_eq!(qpaug_solution_x(sol, x.as_mut_ptr(), n - 1), QpaugStatus::BufferTooSmall);
            assert!(last_error().contains("need 10"));
            assert_eq!(qpaug_solution_x(sol, x.as_mut_ptr(), n), QpaugStatus::Ok);
            let mut lam = vec![0.0; m];
            assert_eq!(qpaug_solution_lambda(sol, lam.as_mut_ptr(), m), QpaugStatus::Ok);
            assert!(lam.iter().all(|l| *l >= 0.0));
            let mut obj = 0.0;
            assert_eq!(qpaug_solution_objective(sol, &mut obj), QpaugStatus::Ok);
            assert!(obj.is_finite());

            qpaug_solution_free(sol);
            qpaug_instance_free(inst);
        }
    }
}

#[test]
fn json_round_trip_and_augment() {
    unsafe {
        let inst = generated(1, 9);
        let mut sol = ptr::null_mut();
        assert_eq!(qpaug_solve(inst, 0.0, 0, &mut sol), QpaugStatus::Ok);

        let mut text = ptr::null_mut();
        assert_eq!(qpaug_instance_to_json(inst, sol, &mut text), QpaugStatus::Ok);
        let (mut back, mut back_sol) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(qpaug_instance_from_json(text, &mut back, &mut back_sol), QpaugStatus::Ok);
        assert!(!back_sol.is_null());
        let mut again = ptr::null_mut();
        assert_eq!(qpaug_instance_to_json(back, back_sol, &mut again), QpaugStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        qpaug_string_free(text);
        qpaug_string_free(again);

        let ops = CString::new("drop-cons:0.5,scale-vars:1").unwrap();
        let (mut aug, mut aug_sol) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(qpaug_augment(back, back_sol, ops.as_ptr(), 2, 3, &mut aug, &mut aug_sol), QpaugStatus::Ok);
        assert!(!aug_sol.is_null());
        let mut r = f64::NAN;
        assert_eq!(qpaug_kkt_max_residual(aug, aug_sol, 1, &mut r), QpaugStatus::Ok);
        assert!(r <= 1e-6);

        let (mut view, mut view_sol) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            qpaug_augment(back, ptr::null(), ops.as_ptr(), 2, 3, &mut view, &mut view_sol),
            QpaugStatus::SolutionRequired
        );
        assert!(last_error().contains("drop-cons"));
        let free_ops = CString::new("scale-cons:1,add-cons:0.3").unwrap();
        assert_eq!(
            qpaug_augment(back, ptr::null(), free_ops.as_ptr(), 2, 3, &mut view, &mut view_sol),
            QpaugStatus::Ok
        );
        assert!(view_sol.is_null());

        for h in [inst, back, aug, view] {
            qpaug_instance_free(h);
        }
        for s in [sol, back_sol, aug_sol] {
            qpaug_solution_free(s);
        }
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(qpaug_instance_from_json(ptr::null(), &mut inst, ptr::null_mut()), QpaugStatus::NullPointer);
        let bad = CString::new("{\"name\": 1}").unwrap();
        assert_eq!(qpaug_instance_from_json(bad.as_ptr(), &mut inst, ptr::null_mut()), QpaugStatus::InvalidInput);
        assert!(last_error().contains("malformed"));
        assert_eq!(qpaug_generate(1, 5, 5, 2.0, 0.1, 0, &mut inst), QpaugStatus::InvalidInput);
        assert_eq!(qpaug_instance_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()), QpaugStatus::NullPointer);

        let inst = generated(1, 1);
        let ops = CString::new("warp:1").unwrap();
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(qpaug_augment(inst, ptr::null(), ops.as_ptr(), 1, 0, &mut a, &mut b), QpaugStatus::InvalidInput);
        let mut sol = ptr::null_mut();
        assert_eq!(qpaug_solve(inst, 1e-12, 1, &mut sol), QpaugStatus::NotConverged);
        assert!(sol.is_null());
        qpaug_instance_free(inst);
        qpaug_instance_free(ptr::null_mut());
    }
}
