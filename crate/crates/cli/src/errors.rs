//! Short category names for core errors, shown in diagnostics.

use ulw_core::edf::EdfError;
use ulw_core::evaluation::EvalError;
use ulw_core::model::ModelError;
use ulw_core::nn::NnError;
use ulw_core::preprocess::PreprocessError;
use ulw_core::training::TrainError;

fn nn(e: &NnError) -> &'static str {
    match e {
        NnError::ShapeMismatch(_) => "ShapeMismatch",
        NnError::DegenerateBatch(_) => "DegenerateBatch",
        NnError::InvalidParams(_) => "InvalidParams",
        NnError::LabelOutOfRange(_) => "LabelOutOfRange",
    }
}

fn edf(e: &EdfError) -> &'static str {
    match e {
        EdfError::TruncatedHeader { .. } => "TruncatedHeader",
        EdfError::MalformedField { .. } => "MalformedField",
        EdfError::InvariantViolation(_) => "InvariantViolation",
        EdfError::TruncatedData { .. } => "TruncatedData",
        EdfError::NoSuchSignal(_) => "NoSuchSignal",
        EdfError::MalformedTal(_) => "MalformedTal",
        EdfError::NonMonotonicOnsets { .. } => "NonMonotonicOnsets",
        EdfError::OverlappingEvents { .. } => "OverlappingEvents",
        EdfError::MissingChannel(_) => "MissingChannel",
        EdfError::UnsupportedSampleRate { .. } => "UnsupportedSampleRate",
        EdfError::DurationMismatch { .. } => "DurationMismatch",
        EdfError::BadFileName(_) => "BadFileName",
        EdfError::Io(_) => "Io",
    }
}

fn model(e: &ModelError) -> &'static str {
    match e {
        ModelError::BadConfig(_) => "BadConfig",
        ModelError::Nn(inner) => nn(inner),
        ModelError::BadMagic => "BadMagic",
        ModelError::VersionMismatch { .. } => "VersionMismatch",
        ModelError::ChecksumMismatch => "ChecksumMismatch",
        ModelError::CorruptCheckpoint(_) => "CorruptCheckpoint",
        ModelError::Io(_) => "Io",
    }
}

fn preprocess(e: &PreprocessError) -> &'static str {
    match e {
        PreprocessError::InvalidBand { .. } => "InvalidBand",
        PreprocessError::SignalTooShort { .. } => "SignalTooShort",
        PreprocessError::UnknownLabel(_) => "UnknownLabel",
        PreprocessError::AllWake => "AllWake",
        PreprocessError::EpochAlignmentError(_) => "EpochAlignmentError",
        PreprocessError::MissingChannel(_) => "MissingChannel",
        PreprocessError::InvalidDataset(_) => "InvalidDataset",
        PreprocessError::BadMagic => "BadMagic",
        PreprocessError::VersionMismatch { .. } => "VersionMismatch",
        PreprocessError::ChecksumMismatch => "ChecksumMismatch",
        PreprocessError::CorruptCache(_) => "CorruptCache",
        PreprocessError::Edf(inner) => edf(inner),
        PreprocessError::Io(_) => "Io",
    }
}

fn train(e: &TrainError) -> &'static str {
    match e {
        TrainError::BadConfig(_) => "BadConfig",
        TrainError::NonFiniteGradient { .. } => "NonFiniteGradient",
        TrainError::NonFiniteLoss { .. } => "NonFiniteLoss",
        TrainError::TooFewSubjects { .. } => "TooFewSubjects",
        TrainError::EmptySplit { .. } => "EmptySplit",
        TrainError::SubjectLeak(_) => "SubjectLeak",
        TrainError::Model(inner) => model(inner),
        TrainError::Nn(inner) => nn(inner),
    }
}

fn eval(e: &EvalError) -> &'static str {
    match e {
        EvalError::LengthMismatch { .. } => "LengthMismatch",
        EvalError::LabelOutOfRange(_) => "LabelOutOfRange",
        EvalError::EmptyMatrix => "EmptyMatrix",
        EvalError::Csv(_) => "Csv",
    }
}

/// Category of the first core error found in the chain.
pub fn category(err: &anyhow::Error) -> Option<&'static str> {
    err.chain().find_map(|e| {
        if let Some(e) = e.downcast_ref::<TrainError>() {
            Some(train(e))
        } else if let Some(e) = e.downcast_ref::<PreprocessError>() {
            Some(preprocess(e))
        } else if let Some(e) = e.downcast_ref::<ModelError>() {
            Some(model(e))
        } else if let Some(e) = e.downcast_ref::<EdfError>() {
            Some(edf(e))
        } else if let Some(e) = e.downcast_ref::<EvalError>() {
            Some(eval(e))
        } else if let Some(e) = e.downcast_ref::<NnError>() {
            Some(nn(e))
        } else if e.downcast_ref::<serde_json::Error>().is_some() {
            Some("ConfigParse")
        } else {
            None
        }
    })
}

/// `error [Kind]: message chain`.
pub fn render(err: &anyhow::Error) -> String {
    match category(err) {
        Some(kind) => format!("error [{kind}]: {err:#}"),
        None => format!("error: {err:#}"),
    }
}
