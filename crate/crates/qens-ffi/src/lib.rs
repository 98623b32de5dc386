//! C interface to the quantum ensemble toolkit.
//!
//! Handles are opaque pointers owned by this library; every constructor
//! has a matching `_free` and each fallible call returns a [`QensStatus`].
//! Failure details are stored per thread and read back with
//! [`qens_last_error`]. The generated header lives in `include/qens.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use qens::classifier::{run_classifier, ClassifierKind};
use qens::encoding::{encode_training_set, unit_normalize, Dataset, EncodedTrainingSet};
use qens::ensemble::{run_test_mode, run_train_mode, EnsembleConfig};
use qens::error::Error;
use qens::harness::load_dataset;
use qens::stacking::{fit_stacking, predict, OptimizerConfig, StackingModel};

/// Call outcome. Anything other than `Ok` stores a message readable via
/// `qens_last_error` on the calling thread.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QensStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Invalid configuration or argument values.
    InvalidConfig = 2,
    /// The training data is malformed or cannot be learned from.
    BadDataset = 3,
    /// A numeric or simulation failure.
    NumericFailure = 4,
    /// The operating system reported an input/output problem.
    IoFailure = 5,
    /// An internal invariant broke; affected handles are unspecified.
    Panic = 6,
}

/// Classifier selector; pass one of the `QENS_CLASSIFIER_*` constants.
pub type QensClassifier = u32;

pub const QENS_CLASSIFIER_COSINE: QensClassifier = 0;
pub const QENS_CLASSIFIER_DISTANCE: QensClassifier = 1;
pub const QENS_CLASSIFIER_SWAP_TEST: QensClassifier = 2;

/// One classification result. `ancilla_success` is NaN for kinds without
/// a post-selection stage.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct QensPrediction {
    /// Expectation of the favorable-outcome observable, in [0, 1].
    pub expectation: f64,
    /// Probability read directly off the output register.
    pub raw: f64,
    /// Signed decision value; the label is its sign.
    pub score: f64,
    /// Post-selection success probability, NaN when not applicable.
    pub ancilla_success: f64,
    /// Predicted class, +1 or -1.
    pub label: i8,
}

/// Opaque training-set handle.
pub struct QensDataset {
    inner: Dataset,
}

/// Opaque trained-ensemble handle.
pub struct QensEnsemble {
    cfg: EnsembleConfig,
    enc: EncodedTrainingSet,
    model: StackingModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

fn fail(status: QensStatus, message: &str) -> QensStatus {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
    status
}

fn fail_with(err: &Error) -> QensStatus {
    let status = match err {
        Error::Config(_) => QensStatus::InvalidConfig,
        Error::Dataset { .. } | Error::DegenerateLabels => QensStatus::BadDataset,
        Error::Io(_) => QensStatus::IoFailure,
        _ => QensStatus::NumericFailure,
    };
    fail(status, &err.to_string())
}

fn guarded(body: impl FnOnce() -> QensStatus) -> QensStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(QensStatus::Panic, "internal panic; handle state is unspecified"),
    }
}

fn classifier_of(kind: QensClassifier) -> Option<ClassifierKind> {
    match kind {
        QENS_CLASSIFIER_COSINE => Some(ClassifierKind::Cosine),
        QENS_CLASSIFIER_DISTANCE => Some(ClassifierKind::Distance),
        QENS_CLASSIFIER_SWAP_TEST => Some(ClassifierKind::SwapTest),
        _ => None,
    }
}

/// Returns the message of the most recent failing call on this thread,
/// or null when that call succeeded. The pointer stays valid until the
/// next `qens_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qens_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

/// Loads a CSV training set. The file needs a header naming one column
/// `label`, holding -1/+1 (or 0/1) class labels; every other column is a
/// numeric feature.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid location for
/// the new handle. Release the handle with `qens_dataset_free`.
#[no_mangle]
pub unsafe extern "C" fn qens_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut QensDataset,
) -> QensStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            return fail(QensStatus::NullArgument, "path and out must be non-null");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(QensStatus::InvalidConfig, "path is not valid UTF-8");
        };
        match load_dataset(path) {
            Ok(data) => {
                *out = Box::into_raw(Box::new(QensDataset { inner: data }));
                QensStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Builds a training set from a row-major `num_samples` x `num_features`
/// matrix and per-row labels, each +1 or -1.
///
/// # Safety
/// `features` must hold `num_samples * num_features` doubles, `labels`
/// `num_samples` bytes, and `out` a valid location for the new handle.
#[no_mangle]
pub unsafe extern "C" fn qens_dataset_from_arrays(
    features: *const f64,
    labels: *const i8,
    num_samples: usize,
    num_features: usize,
    out: *mut *mut QensDataset,
) -> QensStatus {
    guarded(|| {
        if features.is_null() || labels.is_null() || out.is_null() {
            return fail(
                QensStatus::NullArgument,
                "features, labels and out must be non-null",
            );
        }
        if num_samples == 0 || num_features == 0 {
            return fail(
                QensStatus::InvalidConfig,
                "dataset needs at least one row and one feature column",
            );
        }
        let Some(total) = num_samples.checked_mul(num_features) else {
            return fail(QensStatus::InvalidConfig, "feature matrix size overflows");
        };
        let rows = slice::from_raw_parts(features, total)
            .chunks(num_features)
            .map(<[f64]>::to_vec)
            .collect();
        let labels = slice::from_raw_parts(labels, num_samples).to_vec();
        match Dataset::new(rows, labels) {
            Ok(data) => {
                *out = Box::into_raw(Box::new(QensDataset { inner: data }));
                QensStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Number of training rows; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn qens_dataset_num_samples(data: *const QensDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.len())
}

/// Number of feature columns; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn qens_dataset_num_features(data: *const QensDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.num_features())
}

/// Releases a dataset handle; null is ignored.
///
/// # Safety
/// `data` must be null or an owned handle not used after this call.
#[no_mangle]
pub unsafe extern "C" fn qens_dataset_free(data: *mut QensDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Runs one exact classifier of the given kind against a test vector,
/// which is unit-normalized internally before encoding.
///
/// # Safety
/// `data` must be a live dataset handle, `x` must hold `len` doubles and
/// `out` must be a valid location for the result.
#[no_mangle]
pub unsafe extern "C" fn qens_classify(
    data: *const QensDataset,
    kind: QensClassifier,
    x: *const f64,
    len: usize,
    out: *mut QensPrediction,
) -> QensStatus {
    guarded(|| {
        if data.is_null() || x.is_null() || out.is_null() {
            return fail(QensStatus::NullArgument, "data, x and out must be non-null");
        }
        let Some(kind) = classifier_of(kind) else {
            return fail(QensStatus::InvalidConfig, "unknown classifier selector");
        };
        let data = &(*data).inner;
        let x = slice::from_raw_parts(x, len);
        let result = unit_normalize(x)
            .and_then(|unit| Ok((encode_training_set(data)?, unit)))
            .and_then(|(enc, unit)| run_classifier(kind, &enc, &unit));
        match result {
            Ok(output) => {
                *out = QensPrediction {
                    expectation: output.eo,
                    raw: output.raw,
                    score: output.score,
                    ancilla_success: output.ancilla_success.unwrap_or(f64::NAN),
                    label: output.label,
                };
                QensStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

fn train_ensemble(
    data: &Dataset,
    kind: ClassifierKind,
    control_qubits: usize,
) -> qens::error::Result<QensEnsemble> {
    let enc = encode_training_set(data)?;
    let cfg = EnsembleConfig::new(kind, control_qubits);
    let validation = data
        .rows()
        .iter()
        .map(|row| unit_normalize(row))
        .collect::<qens::error::Result<Vec<_>>>()?;
    let outputs = run_train_mode(&cfg, &enc, &validation)?;
    let (model, _) = fit_stacking(&outputs, data.labels(), &OptimizerConfig::default())?;
    Ok(QensEnsemble { cfg, enc, model })
}

/// Trains an ensemble of 2^`control_qubits` internal classifiers on the
/// given data: exact branch expectations on the training rows, combined
/// by a fitted logistic stacking layer.
///
/// # Safety
/// `data` must be a live dataset handle and `out` a valid location for
/// the new handle. Release the handle with `qens_ensemble_free`.
#[no_mangle]
pub unsafe extern "C" fn qens_ensemble_train(
    data: *const QensDataset,
    kind: QensClassifier,
    control_qubits: usize,
    out: *mut *mut QensEnsemble,
) -> QensStatus {
    guarded(|| {
        if data.is_null() || out.is_null() {
            return fail(QensStatus::NullArgument, "data and out must be non-null");
        }
        let Some(kind) = classifier_of(kind) else {
            return fail(QensStatus::InvalidConfig, "unknown classifier selector");
        };
        match train_ensemble(&(*data).inner, kind, control_qubits) {
            Ok(trained) => {
                *out = Box::into_raw(Box::new(trained));
                QensStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Number of internal branches (2^control_qubits); 0 for a null handle.
///
/// # Safety
/// `ens` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn qens_ensemble_num_branches(ens: *const QensEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.cfg.num_branches())
}

/// Copies the fitted branch weights (nonnegative, summing to 1) into
/// `out`, which must hold exactly `qens_ensemble_num_branches` entries.
///
/// # Safety
/// `ens` must be a live ensemble handle and `out` must hold `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn qens_ensemble_weights(
    ens: *const QensEnsemble,
    out: *mut f64,
    len: usize,
) -> QensStatus {
    guarded(|| {
        if ens.is_null() || out.is_null() {
            return fail(QensStatus::NullArgument, "ens and out must be non-null");
        }
        let weights = &(*ens).model.weights;
        if len != weights.len() {
            return fail(
                QensStatus::InvalidConfig,
                &format!("expected space for {} weights, got {len}", weights.len()),
            );
        }
        ptr::copy_nonoverlapping(weights.as_ptr(), out, len);
        QensStatus::Ok
    })
}

/// Classifies a test vector with a trained ensemble. The score is the
/// fitted logistic logit and the label its sign; `ancilla_success`
/// reports the distance kind's conditional success rate.
///
/// # Safety
/// `ens` must be a live ensemble handle, `x` must hold `len` doubles and
/// `out` must be a valid location for the result.
#[no_mangle]
pub unsafe extern "C" fn qens_ensemble_predict(
    ens: *const QensEnsemble,
    x: *const f64,
    len: usize,
    out: *mut QensPrediction,
) -> QensStatus {
    guarded(|| {
        if ens.is_null() || x.is_null() || out.is_null() {
            return fail(QensStatus::NullArgument, "ens, x and out must be non-null");
        }
        let ens = &*ens;
        let x = slice::from_raw_parts(x, len);
        let result = unit_normalize(x).and_then(|unit| {
            let run = run_test_mode(&ens.cfg, &ens.model.weights, &ens.enc, &unit)?;
            let label = predict(&ens.model, run.eo)?;
            Ok((run, label))
        });
        match result {
            Ok((run, label)) => {
                *out = QensPrediction {
                    expectation: run.eo,
                    raw: run.raw,
                    score: ens.model.scale * run.eo + ens.model.bias,
                    ancilla_success: run.ancilla_success.unwrap_or(f64::NAN),
                    label,
                };
                QensStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Releases an ensemble handle; null is ignored.
///
/// # Safety
/// `ens` must be null or an owned handle not used after this call.
#[no_mangle]
pub unsafe extern "C" fn qens_ensemble_free(ens: *mut QensEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn sample_dataset() -> *mut QensDataset {
        let features = [0.6, 0.8, 1.0, 0.0, 0.0, 1.0, 0.8, 0.6];
        let labels = [1i8, -1, 1, -1];
        let mut out = ptr::null_mut();
        let status = unsafe {
            qens_dataset_from_arrays(features.as_ptr(), labels.as_ptr(), 4, 2, &mut out)
        };
        assert_eq!(status, QensStatus::Ok);
        out
    }

    fn last_error_text() -> String {
        let msg = qens_last_error();
        assert!(!msg.is_null(), "expected an error message");
        unsafe { CStr::from_ptr(msg) }.to_str().unwrap().to_owned()
    }

    #[test]
    fn array_construction_reports_the_shape() {
        let data = sample_dataset();
        unsafe {
            assert_eq!(qens_dataset_num_samples(data), 4);
            assert_eq!(qens_dataset_num_features(data), 2);
            qens_dataset_free(data);
        }
        assert_eq!(unsafe { qens_dataset_num_samples(ptr::null()) }, 0);
    }

    #[test]
    fn null_arguments_are_reported_not_dereferenced() {
        let mut out = ptr::null_mut();
        let status = unsafe { qens_dataset_load_csv(ptr::null(), &mut out) };
        assert_eq!(status, QensStatus::NullArgument);
        assert!(last_error_text().contains("null"));
        assert!(out.is_null());
    }

    #[test]
    fn the_error_slot_clears_on_success() {
        let mut out = ptr::null_mut();
        unsafe { qens_dataset_load_csv(ptr::null(), &mut out) };
        assert!(!qens_last_error().is_null());
        let data = sample_dataset();
        assert!(qens_last_error().is_null());
        unsafe { qens_dataset_free(data) };
    }

    #[test]
    fn bad_labels_are_rejected() {
        let features = [1.0, 0.0, 0.0, 1.0];
        let labels = [1i8, 2];
        let mut out = ptr::null_mut();
        let status = unsafe {
            qens_dataset_from_arrays(features.as_ptr(), labels.as_ptr(), 2, 2, &mut out)
        };
        assert_eq!(status, QensStatus::InvalidConfig);
        assert!(last_error_text().contains("label"));

        let status = unsafe {
            qens_dataset_from_arrays(features.as_ptr(), labels.as_ptr(), 2, 0, &mut out)
        };
        assert_eq!(status, QensStatus::InvalidConfig);
    }

    #[test]
    fn csv_files_load_through_the_boundary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        let mut file = std::fs::File::create(&path).unwrap();
        writeln!(file, "a,b,label").unwrap();
        writeln!(file, "0.6,0.8,0").unwrap();
        writeln!(file, "-0.8,0.6,1").unwrap();
        drop(file);

        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        let mut out = ptr::null_mut();
        let status = unsafe { qens_dataset_load_csv(c_path.as_ptr(), &mut out) };
        assert_eq!(status, QensStatus::Ok);
        unsafe {
            assert_eq!(qens_dataset_num_samples(out), 2);
            assert_eq!(qens_dataset_num_features(out), 2);
            qens_dataset_free(out);
        }

        let missing = CString::new("/nonexistent/toy.csv").unwrap();
        let status = unsafe { qens_dataset_load_csv(missing.as_ptr(), &mut out) };
        assert_eq!(status, QensStatus::IoFailure);
    }

    #[test]
    fn classification_matches_the_library_path() {
        let data = sample_dataset();
        let x = [1.2, -0.9];
        let direct_data = Dataset::new(
            vec![vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.8, 0.6]],
            vec![1, -1, 1, -1],
        )
        .unwrap();
        let enc = encode_training_set(&direct_data).unwrap();
        let unit = unit_normalize(&x).unwrap();

        for (selector, kind) in [
            (QENS_CLASSIFIER_COSINE, ClassifierKind::Cosine),
            (QENS_CLASSIFIER_DISTANCE, ClassifierKind::Distance),
            (QENS_CLASSIFIER_SWAP_TEST, ClassifierKind::SwapTest),
        ] {
            let mut got = QensPrediction {
                expectation: 0.0,
                raw: 0.0,
                score: 0.0,
                ancilla_success: 0.0,
                label: 0,
            };
            let status =
                unsafe { qens_classify(data, selector, x.as_ptr(), x.len(), &mut got) };
            assert_eq!(status, QensStatus::Ok);

            let want = run_classifier(kind, &enc, &unit).unwrap();
            assert_eq!(got.expectation.to_bits(), want.eo.to_bits());
            assert_eq!(got.raw.to_bits(), want.raw.to_bits());
            assert_eq!(got.score.to_bits(), want.score.to_bits());
            assert_eq!(got.label, want.label);
            match want.ancilla_success {
                Some(p) => assert_eq!(got.ancilla_success.to_bits(), p.to_bits()),
                None => assert!(got.ancilla_success.is_nan()),
            }
        }

        let mut got = QensPrediction {
            expectation: 0.0,
            raw: 0.0,
            score: 0.0,
            ancilla_success: 0.0,
            label: 0,
        };
        let status = unsafe { qens_classify(data, 9, x.as_ptr(), x.len(), &mut got) };
        assert_eq!(status, QensStatus::InvalidConfig);
        let zero = [0.0, 0.0];
        let status =
            unsafe { qens_classify(data, 0, zero.as_ptr(), zero.len(), &mut got) };
        assert_eq!(status, QensStatus::NumericFailure);

        unsafe { qens_dataset_free(data) };
    }

    #[test]
    fn ensemble_round_trip_matches_direct_composition() {
        let data = sample_dataset();
        let mut ens = ptr::null_mut();
        let status =
            unsafe { qens_ensemble_train(data, QENS_CLASSIFIER_DISTANCE, 2, &mut ens) };
        assert_eq!(status, QensStatus::Ok);
        assert_eq!(unsafe { qens_ensemble_num_branches(ens) }, 4);

        let mut weights = [0.0f64; 4];
        let status = unsafe { qens_ensemble_weights(ens, weights.as_mut_ptr(), 4) };
        assert_eq!(status, QensStatus::Ok);
        let total: f64 = weights.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9, "weights sum to {total}");
        assert!(weights.iter().all(|&w| w >= 0.0));

        let status = unsafe { qens_ensemble_weights(ens, weights.as_mut_ptr(), 3) };
        assert_eq!(status, QensStatus::InvalidConfig);

        // replay the training pipeline directly; results must agree bit
        // for bit since both sides run the same exact arithmetic
        let direct_data = Dataset::new(
            vec![vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.8, 0.6]],
            vec![1, -1, 1, -1],
        )
        .unwrap();
        let enc = encode_training_set(&direct_data).unwrap();
        let cfg = EnsembleConfig::new(ClassifierKind::Distance, 2);
        let validation: Vec<Vec<f64>> = direct_data
            .rows()
            .iter()
            .map(|r| unit_normalize(r).unwrap())
            .collect();
        let outputs = run_train_mode(&cfg, &enc, &validation).unwrap();
        let (model, _) =
            fit_stacking(&outputs, direct_data.labels(), &OptimizerConfig::default())
                .unwrap();

        let x = [0.8, -0.6];
        let mut got = QensPrediction {
            expectation: 0.0,
            raw: 0.0,
            score: 0.0,
            ancilla_success: 0.0,
            label: 0,
        };
        let status = unsafe { qens_ensemble_predict(ens, x.as_ptr(), x.len(), &mut got) };
        assert_eq!(status, QensStatus::Ok);

        let run = run_test_mode(&cfg, &model.weights, &enc, &x).unwrap();
        assert_eq!(got.expectation.to_bits(), run.eo.to_bits());
        assert_eq!(got.label, predict(&model, run.eo).unwrap());
        let logit = model.scale * run.eo + model.bias;
        assert_eq!(got.score.to_bits(), logit.to_bits());
        assert_eq!(got.label, if got.score >= 0.0 { 1 } else { -1 });

        unsafe {
            qens_ensemble_free(ens);
            qens_dataset_free(data);
        }
    }

    #[test]
    fn single_class_training_reports_bad_data() {
        let features = [1.0, 0.0, 0.0, 1.0];
        let labels = [1i8, 1];
        let mut data = ptr::null_mut();
        let status = unsafe {
            qens_dataset_from_arrays(features.as_ptr(), labels.as_ptr(), 2, 2, &mut data)
        };
        assert_eq!(status, QensStatus::Ok);
        let mut ens = ptr::null_mut();
        let status =
            unsafe { qens_ensemble_train(data, QENS_CLASSIFIER_COSINE, 1, &mut ens) };
        assert_eq!(status, QensStatus::BadDataset);
        assert!(last_error_text().contains("single class"));
        unsafe { qens_dataset_free(data) };
    }
}
