//! Stage labels: text mapping, 30-second expansion and wake trimming.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::edf::HypnogramEvent;

/// 60 epochs of 30 s, kept on each side of the main sleep period.
pub const TRIM_MARGIN_EPOCHS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum StageClass {
    Wake = 0,
    N1 = 1,
    N2 = 2,
    N3 = 3,
    Rem = 4,
}

impl StageClass {
    pub const ALL: [StageClass; 5] = [Self::Wake, Self::N1, Self::N2, Self::N3, Self::Rem];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Wake => "W",
            Self::N1 => "N1",
            Self::N2 => "N2",
            Self::N3 => "N3",
            Self::Rem => "REM",
        }
    }
}

impl fmt::Display for StageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StageClass {
    type Err = PreprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "W" | "Wake" | "0" => Ok(Self::Wake),
            "N1" | "1" => Ok(Self::N1),
            "N2" | "2" => Ok(Self::N2),
            "N3" | "3" => Ok(Self::N3),
            "REM" | "R" | "4" => Ok(Self::Rem),
            other => Err(PreprocessError::UnknownLabel(other.to_string())),
        }
    }
}

/// Maps a hypnogram annotation to a class. Stages 3 and 4 merge into N3;
/// movement and unscored epochs map to `None`.
pub fn map_stage_label(stage_text: &str) -> Result<Option<StageClass>, PreprocessError> {
    match stage_text.trim() {
        "Sleep stage W" => Ok(Some(StageClass::Wake)),
        "Sleep stage 1" => Ok(Some(StageClass::N1)),
        "Sleep stage 2" => Ok(Some(StageClass::N2)),
        "Sleep stage 3" | "Sleep stage 4" => Ok(Some(StageClass::N3)),
        "Sleep stage R" => Ok(Some(StageClass::Rem)),
        "Movement time" | "Sleep stage ?" => Ok(None),
        other => Err(PreprocessError::UnknownLabel(other.to_string())),
    }
}

/// Per-epoch outcome of label expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochLabel {
    /// No event covers the epoch.
    Unscored,
    /// Covered by a movement or unknown-stage event.
    Excluded,
    Stage(StageClass),
}

impl EpochLabel {
    pub fn stage(self) -> Option<StageClass> {
        match self {
            Self::Stage(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_covered(self) -> bool {
        !matches!(self, Self::Unscored)
    }
}

/// Expands stage events into one label per `epoch_s`-second epoch. An epoch
/// takes an event's label when the event covers it entirely.
pub fn expand_epoch_labels(
    events: &[HypnogramEvent],
    epoch_s: f64,
) -> Result<Vec<EpochLabel>, PreprocessError> {
    const TOL: f64 = 1e-6;
    let end = events
        .iter()
        .map(|e| e.onset_s + e.duration_s)
        .fold(0.0f64, f64::max);
    let n = (end / epoch_s + TOL).floor() as usize;
    let mut labels = vec![EpochLabel::Unscored; n];
    for e in events {
        let label = match map_stage_label(&e.stage_text)? {
            Some(s) => EpochLabel::Stage(s),
            None => EpochLabel::Excluded,
        };
        let first = (e.onset_s / epoch_s - TOL).ceil().max(0.0) as usize;
        let last = (((e.onset_s + e.duration_s) / epoch_s + TOL).floor() as usize).min(n);
        for slot in labels.iter_mut().take(last).skip(first) {
            *slot = label;
        }
    }
    Ok(labels)
}

/// Main sleep period plus 30 minutes either side, as a half-open range.
pub fn trim_wake(labels: &[StageClass]) -> Result<Range<usize>, PreprocessError> {
    let first = labels
        .iter()
        .position(|&s| s != StageClass::Wake)
        .ok_or(PreprocessError::AllWake)?;
    let last = labels
        .iter()
        .rposition(|&s| s != StageClass::Wake)
        .ok_or(PreprocessError::AllWake)?;
    Ok(first.saturating_sub(TRIM_MARGIN_EPOCHS)..(last + TRIM_MARGIN_EPOCHS + 1).min(labels.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(onset: f64, dur: f64, text: &str) -> HypnogramEvent {
        HypnogramEvent {
            onset_s: onset,
            duration_s: dur,
            stage_text: text.into(),
        }
    }

    #[test]
    fn mapping() {
        assert_eq!(
            map_stage_label("Sleep stage 4").unwrap(),
            Some(StageClass::N3)
        );
        assert_eq!(
            map_stage_label("Sleep stage 3").unwrap(),
            Some(StageClass::N3)
        );
        assert_eq!(
            map_stage_label("Sleep stage R").unwrap(),
            Some(StageClass::Rem)
        );
        assert_eq!(map_stage_label("Movement time").unwrap(), None);
        assert_eq!(map_stage_label("Sleep stage ?").unwrap(), None);
        assert!(matches!(
            map_stage_label("Lights off"),
            Err(PreprocessError::UnknownLabel(_))
        ));
    }

    #[test]
    fn class_indices() {
        for (i, s) in StageClass::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(StageClass::from_index(i), Some(*s));
            assert_eq!(s.name().parse::<StageClass>().unwrap(), *s);
        }
        assert_eq!(StageClass::from_index(5), None);
    }

    #[test]
    fn trim_example() {
        let mut labels = vec![StageClass::Wake; 200];
        labels.extend([StageClass::N2; 100]);
        labels.extend([StageClass::Wake; 200]);
        assert_eq!(trim_wake(&labels).unwrap(), 140..360);
    }

    #[test]
    fn trim_clamps_and_rejects_all_wake() {
        let mut labels = vec![StageClass::Wake; 10];
        labels.extend([StageClass::N1; 5]);
        assert_eq!(trim_wake(&labels).unwrap(), 0..15);
        assert!(matches!(
            trim_wake(&[StageClass::Wake; 4]),
            Err(PreprocessError::AllWake)
        ));
        assert!(matches!(trim_wake(&[]), Err(PreprocessError::AllWake)));
    }

    #[test]
    fn expansion() {
        let events = [
            ev(0.0, 60.0, "Sleep stage W"),
            ev(60.0, 30.0, "Sleep stage ?"),
            ev(90.0, 90.0, "Sleep stage 2"),
            ev(210.0, 30.0, "Sleep stage R"),
        ];
        let labels = expand_epoch_labels(&events, 30.0).unwrap();
        use EpochLabel::*;
        assert_eq!(
            labels,
            vec![
                Stage(StageClass::Wake),
                Stage(StageClass::Wake),
                Excluded,
                Stage(StageClass::N2),
                Stage(StageClass::N2),
                Stage(StageClass::N2),
                Unscored,
                Stage(StageClass::Rem),
            ]
        );
    }

    #[test]
    fn expansion_rejects_unknown_text() {
        assert!(expand_epoch_labels(&[ev(0.0, 30.0, "Sleep stage X")], 30.0).is_err());
    }
}
