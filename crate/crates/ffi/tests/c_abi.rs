use std::ffi::CStr;
use std::ptr;

use qrc_ffi::*;

fn last_error() -> String {
    let p = qrc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn drive(n: u32, eps: f64, periods: u32) -> *mut QrcDrive {
    let mut d = ptr::null_mut();
    let status = unsafe { qrc_drive_new(n, eps, 0.06, 1.51, periods, &mut d) };
    assert_eq!(status, QrcStatus::Ok);
    d
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(qrc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn invalid_drive_reports_config_error() {
    let mut d = ptr::null_mut();
    let status = unsafe { qrc_drive_new(13, 0.03, 0.06, 1.51, 50, &mut d) };
    assert_eq!(status, QrcStatus::Config);
    assert!(d.is_null());
    assert!(last_error().contains("qubits"), "{}", last_error());
    let status = unsafe { qrc_drive_new(3, 1.5, 0.06, 1.51, 50, &mut d) };
    assert_eq!(status, QrcStatus::Config);
}

#[test]
fn null_handles_are_rejected() {
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { qrc_floquet_operator(ptr::null(), &mut u) }, QrcStatus::NullPointer);
    assert_eq!(unsafe { qrc_unitary_dim(ptr::null()) }, 0);
    unsafe {
        qrc_drive_free(ptr::null_mut());
        qrc_unitary_free(ptr::null_mut());
        qrc_network_free(ptr::null_mut());
    }
}

#[test]
fn single_qubit_perfect_kick_entries() {
    let d = drive(1, 0.0, 1);
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { qrc_floquet_operator(d, &mut u) }, QrcStatus::Ok);
    assert_eq!(unsafe { qrc_unitary_dim(u) }, 2);
    let mut buf = [0.0; 8];
    assert_eq!(unsafe { qrc_unitary_entries(u, buf.as_mut_ptr(), 7) }, QrcStatus::InvalidArgument);
    assert_eq!(unsafe { qrc_unitary_entries(u, buf.as_mut_ptr(), 8) }, QrcStatus::Ok);
    // -i σx
    let expected = [0.0, 0.0, 0.0, -1.0, 0.0, -1.0, 0.0, 0.0];
    for (a, b) in buf.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15, "{buf:?}");
    }
    unsafe {
        qrc_unitary_free(u);
        qrc_drive_free(d);
    }
}

#[test]
fn evolve_preserves_norm_and_flips_basis_state() {
    let d = drive(3, 0.0, 1);
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { qrc_floquet_operator(d, &mut u) }, QrcStatus::Ok);
    let mut input = [0.0; 16];
    input[0] = 1.0;
    let mut output = [0.0; 16];
    assert_eq!(unsafe { qrc_evolve(u, input.as_ptr(), output.as_mut_ptr(), 8) }, QrcStatus::Ok);
    // |000> goes to |111> up to phase
    let p7 = output[14].powi(2) + output[15].powi(2);
    assert!((p7 - 1.0).abs() < 1e-12);

    input[0] = 2.0;
    assert_eq!(
        unsafe { qrc_evolve(u, input.as_ptr(), output.as_mut_ptr(), 8) },
        QrcStatus::InvalidArgument
    );
    assert!(last_error().contains("norm"));
    unsafe {
        qrc_unitary_free(u);
        qrc_drive_free(d);
    }
}

#[test]
fn product_state_and_standardized_readout() {
    let thetas = [std::f64::consts::FRAC_PI_2, 0.0];
    let phis = [std::f64::consts::FRAC_PI_2, 0.0];
    let mut state = [0.0; 8];
    let status = unsafe { qrc_product_state(thetas.as_ptr(), phis.as_ptr(), 2, state.as_mut_ptr(), 8) };
    assert_eq!(status, QrcStatus::Ok);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [h, 0.0, 0.0, h, 0.0, 0.0, 0.0, 0.0];
    for (a, b) in state.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
    let mut z = [0.0; 4];
    assert_eq!(unsafe { qrc_standardized_probabilities(state.as_ptr(), 4, z.as_mut_ptr()) }, QrcStatus::Ok);
    // probabilities (1/2, 1/2, 0, 0): mean 1/4, std 1/4
    for (a, b) in z.iter().zip([1.0, 1.0, -1.0, -1.0]) {
        assert!((a - b).abs() < 1e-12, "{z:?}");
    }
}

#[test]
fn dimer_network_through_the_abi() {
    let d = drive(5, 0.0, 1);
    let mut f = ptr::null_mut();
    let mut net = ptr::null_mut();
    unsafe {
        assert_eq!(qrc_floquet_operator(d, &mut f), QrcStatus::Ok);
        assert_eq!(qrc_network_new(f, &mut net), QrcStatus::Ok);
        assert_eq!(qrc_network_num_edges(net), 16);
        assert_eq!(qrc_network_max_degree(net), 1);
        let mut degrees = [0usize; 32];
        assert_eq!(qrc_network_degrees(net, degrees.as_mut_ptr(), 32), QrcStatus::Ok);
        assert!(degrees.iter().all(|&k| k == 1));
        let (mut slope, mut r2) = (0.0, 0.0);
        assert_eq!(qrc_network_powerlaw(net, &mut slope, &mut r2), QrcStatus::Numerical);
        assert!(last_error().contains("bins"));
        qrc_network_free(net);
        qrc_unitary_free(f);
        qrc_drive_free(d);
    }
}

#[test]
fn disorder_setter_validates() {
    let d = drive(2, 0.03, 1);
    assert_eq!(unsafe { qrc_drive_set_disorder(d, -1.0, 0) }, QrcStatus::Config);
    assert_eq!(unsafe { qrc_drive_set_disorder(d, 0.5, 7) }, QrcStatus::Ok);
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { qrc_propagator(d, &mut u) }, QrcStatus::Ok);
    assert_eq!(unsafe { qrc_unitary_dim(u) }, 4);
    unsafe {
        qrc_unitary_free(u);
        qrc_drive_free(d);
    }
}

#[test]
fn generated_header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qrc.h")).unwrap();
    for name in [
        "qrc_last_error_message",
        "qrc_version",
        "qrc_drive_new",
        "qrc_drive_set_disorder",
        "qrc_drive_free",
        "qrc_floquet_operator",
        "qrc_propagator",
        "qrc_unitary_dim",
        "qrc_unitary_entries",
        "qrc_unitary_free",
        "qrc_evolve",
        "qrc_product_state",
        "qrc_standardized_probabilities",
        "qrc_network_new",
        "qrc_network_num_edges",
        "qrc_network_max_degree",
        "qrc_network_degrees",
        "qrc_network_powerlaw",
        "qrc_network_free",
        "QRC_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links_against_the_shared_library() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // tests run from target/<profile>/deps; the library sits one level up
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    assert!(lib_dir.join("libqrc_ffi.so").exists() || lib_dir.join("libqrc_ffi.dylib").exists());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("dimers");
    let status = std::process::Command::new(cc)
        .arg(manifest.join("tests/c/dimers.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lqrc_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = std::process::Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("edges=8 max_degree=1"), "{stdout}");
}
