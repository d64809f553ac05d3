//! Exercises the C ABI exactly as a foreign caller would: through the
//! extern "C" functions, raw pointers and status codes.

use gem_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn write_csv(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("data.csv");
    let mut body = String::from("id,cls,age,y1,y2,y3,y4,y5,y6\n");
    for i in 0..16 {
        let cls = if i < 8 { "no" } else { "yes" };
        let age = 30.0 + i as f64 * 2.0;
        let shift = if i < 8 { -1.2 } else { 1.2 };
        let cells: Vec<String> = (0..6)
            .map(|j| {
                let noise = ((i * 13 + j * 7) % 11) as f64 * 0.1 - 0.5;
                if j < 3 {
                    format!("{}", shift + noise)
                } else {
                    format!("{}", noise + age * 0.01)
                }
            })
            .collect();
        body.push_str(&format!("s{i},{cls},{age},{}\n", cells.join(",")));
    }
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn full_pipeline_through_the_c_abi() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path());

    unsafe {
        let version = gem_version();
        assert!(!version.is_null());
        assert!(!CStr::from_ptr(version).to_str().unwrap().is_empty());

        // load
        let mut dataset: *mut GemDataset = ptr::null_mut();
        let path = c(csv.to_str().unwrap());
        let responses = c("y");
        let id = c("id");
        let status =
            gem_dataset_load_csv(path.as_ptr(), responses.as_ptr(), id.as_ptr(), &mut dataset);
        assert_eq!(status, GemStatus::Ok);
        let mut n = 0usize;
        let mut nresp = 0usize;
        assert_eq!(gem_dataset_dims(dataset, &mut n, &mut nresp), GemStatus::Ok);
        assert_eq!((n, nresp), (16, 6));

        // fit
        let mut model: *mut GemModel = ptr::null_mut();
        let formula = c("y ~ cls + age");
        assert_eq!(
            gem_fit(dataset, formula.as_ptr(), &mut model),
            GemStatus::Ok
        );
        assert_eq!(gem_model_term_count(model), 2);
        let name0 = gem_model_term_name(model, 0);
        assert_eq!(CStr::from_ptr(name0).to_str().unwrap(), "cls");
        gem_string_free(name0);

        // ER extraction
        let term = c("cls");
        let mut buffer = vec![0.0f64; n * nresp];
        assert_eq!(
            gem_model_er_matrix(model, term.as_ptr(), buffer.as_mut_ptr(), buffer.len()),
            GemStatus::Ok
        );
        assert!(buffer.iter().any(|&v| v != 0.0));
        // a too-small buffer is refused
        assert_eq!(
            gem_model_er_matrix(model, term.as_ptr(), buffer.as_mut_ptr(), 3),
            GemStatus::BufferTooSmall
        );

        // PCA explained variance
        let mut explvar = [0.0f64; 2];
        assert_eq!(
            gem_model_er_pca_explvar(model, term.as_ptr(), 2, explvar.as_mut_ptr()),
            GemStatus::Ok
        );
        assert!(explvar[0] > 0.0 && explvar[0] <= 1.0);
        assert!(explvar[0] >= explvar[1]);

        // PLS-DA cross-validation: the planted class split is learnable
        let mut errors = [0.0f64; 2];
        let mut selected = 0usize;
        assert_eq!(
            gem_model_er_pls_cv(model, term.as_ptr(), 2, errors.as_mut_ptr(), &mut selected),
            GemStatus::Ok
        );
        assert!((1..=2).contains(&selected));
        assert!(errors[selected - 1] <= 0.25, "errors {errors:?}");

        // elastic net
        let mut lambda_opt = f64::NAN;
        let mut nonzero = usize::MAX;
        assert_eq!(
            gem_model_er_enet_cv(model, term.as_ptr(), 0.5, 30, &mut lambda_opt, &mut nonzero),
            GemStatus::Ok
        );
        assert!(lambda_opt.is_finite() && lambda_opt > 0.0);
        assert!(nonzero <= 6);

        // persist
        let json_path = c(dir.path().join("fit.json").to_str().unwrap());
        assert_eq!(
            gem_model_save_json(model, json_path.as_ptr(), 0),
            GemStatus::Ok
        );
        assert!(dir.path().join("fit.json").exists());

        gem_model_free(model);
        gem_dataset_free(dataset);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        // missing file
        let mut dataset: *mut GemDataset = ptr::null_mut();
        let path = c("/definitely/not/here.csv");
        let responses = c("y");
        let status =
            gem_dataset_load_csv(path.as_ptr(), responses.as_ptr(), ptr::null(), &mut dataset);
        assert_eq!(status, GemStatus::Io);
        let msg = gem_last_error_message();
        assert!(!msg.is_null());
        assert!(CStr::from_ptr(msg).to_str().unwrap().contains("not/here"));

        // null arguments
        let status = gem_dataset_load_csv(
            ptr::null(),
            responses.as_ptr(),
            ptr::null(),
            &mut dataset,
        );
        assert_eq!(status, GemStatus::NullArgument);
        assert_eq!(gem_dataset_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()),
            GemStatus::NullArgument);

        // bad formula surfaces as an argument error
        let dir = tempfile::tempdir().unwrap();
        let csv = write_csv(dir.path());
        let path = c(csv.to_str().unwrap());
        let id = c("id");
        let status =
            gem_dataset_load_csv(path.as_ptr(), responses.as_ptr(), id.as_ptr(), &mut dataset);
        assert_eq!(status, GemStatus::Ok);
        let mut model: *mut GemModel = ptr::null_mut();
        let bad = c("nonsense");
        assert_eq!(
            gem_fit(dataset, bad.as_ptr(), &mut model),
            GemStatus::Argument
        );
        // unknown term
        let formula = c("y ~ cls");
        assert_eq!(gem_fit(dataset, formula.as_ptr(), &mut model), GemStatus::Ok);
        let missing = c("ghost");
        let mut explvar = [0.0f64; 1];
        assert_eq!(
            gem_model_er_pca_explvar(model, missing.as_ptr(), 1, explvar.as_mut_ptr()),
            GemStatus::Argument
        );
        gem_model_free(model);
        gem_dataset_free(dataset);
    }
}

#[test]
fn simulate_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let spec = r#"{
        "factors": [{"name": "f1", "levels": 2}],
        "replicates": 4,
        "n_responses": 3,
        "effects": [{"term": "f1", "responses": [0, 2], "magnitude": 1.0}],
        "noise_sd": 0.1,
        "seed": 9
    }"#;
    unsafe {
        let spec_c = c(spec);
        let out_c = c(out.to_str().unwrap());
        assert_eq!(
            gem_simulate_to_csv(spec_c.as_ptr(), out_c.as_ptr()),
            GemStatus::Ok
        );
        assert!(out.exists());
        assert!(dir.path().join("sim.truth.json").exists());

        let bad = c("{\"oops\": true}");
        assert_eq!(
            gem_simulate_to_csv(bad.as_ptr(), out_c.as_ptr()),
            GemStatus::Argument
        );
    }
}
