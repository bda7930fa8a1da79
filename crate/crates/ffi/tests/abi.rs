use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hardyfrac_ffi::*;

fn last_error() -> String {
    unsafe {
        let n = hf_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n + 1];
        hf_last_error_message(buf.as_mut_ptr(), buf.len());
        let bytes: Vec<u8> = buf[..n].iter().map(|c| *c as u8).collect();
        String::from_utf8(bytes).unwrap()
    }
}

#[test]
fn hardy_constant_and_errors() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(hf_hardy_constant(4.0, 3.0, &mut x), HfStatus::Ok);
        assert!((x - 1.0 / 27.0).abs() < 1e-15);
        assert_eq!(hf_hardy_constant(2.0, 3.0, &mut x), HfStatus::InvalidParameter);
        assert!(last_error().contains('p'), "{}", last_error());
        assert_eq!(hf_hardy_constant(4.0, 3.0, ptr::null_mut()), HfStatus::NullPointer);
        assert_eq!(last_error(), "out is null");
        assert_eq!(hf_hardy_constant(4.0, 3.0, &mut x), HfStatus::Ok);
        assert_eq!(last_error(), "");
    }
}

#[test]
fn truncated_error_message() {
    let mut x = 0.0;
    unsafe {
        hf_hardy_constant(f64::NAN, 3.0, &mut x);
        let full = hf_last_error_message(ptr::null_mut(), 0);
        assert!(full > 4);
        let mut buf = [1 as c_char; 4];
        assert_eq!(hf_last_error_message(buf.as_mut_ptr(), 4), full);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn blowup_estimate_case_two() {
    let mut est = HfBlowupEstimate {
        t_m: 0.0,
        case_tag: HfCase::I1,
        delta: 0.0,
        w0: 0.0,
    };
    unsafe {
        assert_eq!(hf_fode_blowup_time(0.5, 3.0, 2.0, &mut est), HfStatus::Ok);
    }
    assert_eq!(est.case_tag, HfCase::II);
    assert!((est.delta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    assert!((est.t_m - 0.75 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn trajectory_lifecycle() {
    let mut est = HfBlowupEstimate {
        t_m: 0.0,
        case_tag: HfCase::I1,
        delta: 0.0,
        w0: 0.0,
    };
    let mut traj: *mut HfTrajectory = ptr::null_mut();
    unsafe {
        hf_fode_blowup_time(0.5, 3.0, 2.0, &mut est);
        // the true solution blows up near t = 3.3e-3, well before the bound
        let st = hf_fode_solve(0.5, 3.0, 2.0, 0.01, 4096, 1.0, 1e8, &mut traj);
        assert_eq!(st, HfStatus::Ok);
        let n = hf_trajectory_len(traj);
        assert!(n > 1);
        let mut t = vec![0.0; n];
        let mut u = vec![0.0; n];
        assert_eq!(
            hf_trajectory_copy(traj, t.as_mut_ptr(), u.as_mut_ptr(), n),
            HfStatus::Ok
        );
        assert_eq!((t[0], u[0]), (0.0, 2.0));
        assert_eq!(
            hf_trajectory_copy(traj, t.as_mut_ptr(), u.as_mut_ptr(), n - 1),
            HfStatus::BufferTooSmall
        );
        let (mut flag, mut time) = (0, 0.0);
        assert_eq!(hf_trajectory_blowup(traj, &mut flag, &mut time), HfStatus::Ok);
        assert_eq!(flag, 1);
        assert!(time > 1e-3 && time <= 0.01 && time < est.t_m);
        hf_trajectory_free(traj);
        hf_trajectory_free(ptr::null_mut());
        assert_eq!(hf_trajectory_len(ptr::null()), 0);
    }
}

#[test]
fn bad_solve_leaves_null_handle() {
    let mut traj: *mut HfTrajectory = ptr::dangling_mut::<HfTrajectory>();
    unsafe {
        assert_eq!(
            hf_fode_solve(1.5, 3.0, 2.0, 1.0, 16, 1.0, 1e8, &mut traj),
            HfStatus::InvalidParameter
        );
    }
    assert!(traj.is_null());
}

#[test]
fn eigenvalue_above_hardy_constant() {
    let (mut lam, mut hardy) = (0.0, 0.0);
    unsafe {
        assert_eq!(hf_hardy_constant(4.0, 3.0, &mut hardy), HfStatus::Ok);
        assert_eq!(hf_eigen_first(4.0, 3.0, 1.0, 100.0, 100, &mut lam), HfStatus::Ok);
    }
    assert!(lam > hardy);
}

#[test]
fn pde_run_from_toml() {
    let cfg =
        CString::new("kind = \"pde\"\n[pde]\nm = 40\nsteps = 20\nhorizon = 0.1\nmu_ratio = 0.5\ntruncation = 100.0\n")
            .unwrap();
    let mut run: *mut HfPdeRun = ptr::null_mut();
    unsafe {
        assert_eq!(hf_pde_solve_toml(cfg.as_ptr(), &mut run), HfStatus::Ok);
        assert_eq!(hf_pde_run_len(run), 21);
        assert_eq!(hf_pde_run_diverged(run), 0);
        assert!((hf_pde_run_final_time(run) - 0.1).abs() < 1e-12);
        let mut l2 = vec![0.0; 21];
        assert_eq!(
            hf_pde_run_norms(run, ptr::null_mut(), l2.as_mut_ptr(), 21),
            HfStatus::Ok
        );
        assert!(l2[20] < l2[0]);
        hf_pde_run_free(run);
        assert_eq!(hf_pde_run_diverged(ptr::null()), -1);
    }
    let bad = CString::new("[pde]\nbogus = 1\n").unwrap();
    let mut run: *mut HfPdeRun = ptr::null_mut();
    unsafe {
        assert_eq!(hf_pde_solve_toml(bad.as_ptr(), &mut run), HfStatus::Config);
    }
    assert!(run.is_null());
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/hardyfrac.h")
}

#[test]
fn header_declares_every_entry_point() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "hf_last_error_message",
        "hf_version",
        "hf_hardy_constant",
        "hf_fode_blowup_time",
        "hf_fode_solve",
        "hf_trajectory_len",
        "hf_trajectory_copy",
        "hf_trajectory_blowup",
        "hf_trajectory_free",
        "hf_eigen_first",
        "hf_pde_solve_toml",
        "hf_pde_run_len",
        "hf_pde_run_final_time",
        "hf_pde_run_diverged",
        "hf_pde_run_norms",
        "hf_pde_run_free",
        "typedef struct HfTrajectory HfTrajectory;",
        "HF_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let src = tempfile_c("#include \"hardyfrac.h\"\nint main(void) { HfBlowupEstimate e; return hf_fode_blowup_time(0.5, 3.0, 2.0, &e) == HF_STATUS_OK ? 0 : 1; }\n");
    let status = Command::new(cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc.to_string());
        }
    }
    Err(())
}

fn tempfile_c(body: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("hardyfrac_header_{}.c", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path
}
