use std::ffi::CStr;
use std::ptr;

use cbem_ffi::*;

const SOYBEAN: [u32; 20] = [4, 4, 6, 2, 3, 3, 3, 5, 5, 6, 6, 3, 3, 4, 1, 1, 5, 4, 4, 2];

fn last_error() -> String {
    unsafe { CStr::from_ptr(cbem_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn soybean() -> *mut CbemDataset {
    let mut data = ptr::null_mut();
    let status = unsafe { cbem_dataset_new(6, SOYBEAN.as_ptr(), SOYBEAN.len(), &mut data) };
    assert_eq!(status, CbemStatus::Ok);
    data
}

#[test]
fn soybean_fit_through_the_abi() {
    let data = soybean();
    let config = CbemEmConfig {
        start_rho: 0.1,
        ..cbem_em_config_default()
    };
    let mut fit = ptr::null_mut();
    let mut summary = CbemFitSummary::default();
    unsafe {
        assert_eq!(cbem_dataset_len(data), 20);
        assert_eq!(cbem_dataset_n(data), 6);
        assert_eq!(cbem_em_fit(data, &config, &mut fit), CbemStatus::Ok);
        assert_eq!(cbem_fit_summary(fit, &mut summary), CbemStatus::Ok);
    }
    assert!((summary.p_hat - 0.5869412).abs() < 1e-6);
    assert!((summary.rho_hat - 0.0863572).abs() < 1e-6);
    assert_eq!(summary.iterations, 55);
    assert!(summary.converged_p);

    let mut tau = [f64::NAN; 20];
    let mut small = [0.0; 4];
    unsafe {
        assert_eq!(cbem_fit_responsibilities(fit, tau.as_mut_ptr(), tau.len()), CbemStatus::Ok);
        assert_eq!(
            cbem_fit_responsibilities(fit, small.as_mut_ptr(), small.len()),
            CbemStatus::BufferTooSmall
        );
    }
    assert!(last_error().contains("need 20"));
    for (&y, &t) in SOYBEAN.iter().zip(&tau) {
        assert_eq!(t > 0.0, y == 6);
    }

    let mut grid = CbemGridPoint::default();
    let mut ll = 0.0;
    unsafe {
        assert_eq!(cbem_grid_mle(data, 201, 3, 0.05, &mut grid), CbemStatus::Ok);
        assert_eq!(cbem_log_likelihood(data, 0.5826, 0.1296, &mut ll), CbemStatus::Ok);
        cbem_fit_free(fit);
        cbem_dataset_free(data);
    }
    assert!((grid.log_likelihood - summary.log_likelihood).abs() < 1e-6);
    assert!((ll - -36.54512).abs() < 1e-3);
}

#[test]
fn default_config_when_null() {
    let data = soybean();
    let mut fit = ptr::null_mut();
    unsafe {
        assert_eq!(cbem_em_fit(data, ptr::null(), &mut fit), CbemStatus::Ok);
        assert!(!fit.is_null());
        cbem_fit_free(fit);
        cbem_dataset_free(data);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut data = ptr::null_mut();
    let mut out = 0.0;
    let bad = [1u32, 9];
    unsafe {
        assert_eq!(cbem_dataset_new(6, bad.as_ptr(), 2, &mut data), CbemStatus::OutOfSupport);
        assert!(data.is_null());
        assert_eq!(cbem_dataset_new(6, ptr::null(), 3, &mut data), CbemStatus::NullPointer);
        assert_eq!(cbem_cb_pmf(2, 6, 1.2, 0.0, &mut out), CbemStatus::InvalidArgument);
        assert!(last_error().contains('p'));
        assert_eq!(cbem_cb_pmf(7, 6, 0.5, 0.0, &mut out), CbemStatus::OutOfSupport);
        assert_eq!(cbem_cb_pmf(0, 6, 0.5, 0.0, ptr::null_mut()), CbemStatus::NullPointer);
        assert_eq!(cbem_em_fit(ptr::null(), ptr::null(), &mut ptr::null_mut()), CbemStatus::NullPointer);
        assert_eq!(cbem_dataset_len(ptr::null()), 0);
        cbem_dataset_free(ptr::null_mut());
        cbem_fit_free(ptr::null_mut());

        let cfg = CbemEmConfig {
            start_p: 0.0,
            ..cbem_em_config_default()
        };
        let d = soybean();
        assert_eq!(cbem_em_fit(d, &cfg, &mut ptr::null_mut()), CbemStatus::InvalidArgument);
        cbem_dataset_free(d);

        let msg = CStr::from_ptr(cbem_status_message(CbemStatus::BufferTooSmall));
        assert!(!msg.to_bytes().is_empty());
        assert!(!CStr::from_ptr(cbem_version()).to_bytes().is_empty());
    }
}

#[test]
fn pmf_sample_and_scenario_match_the_library() {
    let mut ours = 0.0;
    let mut bin = 0.0;
    unsafe {
        assert_eq!(cbem_cb_pmf(6, 6, 0.3, 0.4, &mut ours), CbemStatus::Ok);
        assert_eq!(cbem_binomial_pmf(3, 6, 0.5, &mut bin), CbemStatus::Ok);
    }
    let params = cbem::CbParams::new(6, 0.3, 0.4).unwrap();
    assert_eq!(ours, cbem::cb_pmf(6, &params).unwrap());
    assert!((bin - 20.0 / 64.0).abs() < 1e-15);

    let mut data = ptr::null_mut();
    let mut buf = vec![0u32; 50];
    unsafe {
        assert_eq!(cbem_sample(10, 0.5, 0.8, 50, 7, &mut data), CbemStatus::Ok);
        assert_eq!(cbem_dataset_copy_observations(data, buf.as_mut_ptr(), 50), CbemStatus::Ok);
        assert_eq!(cbem_dataset_copy_observations(data, buf.as_mut_ptr(), 49), CbemStatus::BufferTooSmall);
        cbem_dataset_free(data);
    }
    let expected = cbem::sample(&cbem::CbParams::new(10, 0.5, 0.8).unwrap(), 50, 7).unwrap();
    assert_eq!(buf, expected.observations());

    let mut study = CbemStudySummary::default();
    unsafe {
        assert_eq!(
            cbem_run_scenario(10, 0.5, 0.8, 30, 100, 9, ptr::null(), &mut study),
            CbemStatus::Ok
        );
    }
    let scenario = cbem::Scenario::new(cbem::CbParams::new(10, 0.5, 0.8).unwrap(), 30, 100, 9).unwrap();
    let report = cbem::run_scenario(&scenario).unwrap();
    assert_eq!(study.p.bias, report.p.bias);
    assert_eq!(study.rho.rmse, report.rho.rmse);
    assert_eq!(study.degenerate_count, report.degenerate_count);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cbem.h")).unwrap();
    for name in [
        "cbem_dataset_new",
        "cbem_em_fit",
        "cbem_fit_summary",
        "cbem_grid_mle",
        "cbem_run_scenario",
        "CBEM_STATUS_BUFFER_TOO_SMALL",
        "typedef struct CbemDataset CbemDataset",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
