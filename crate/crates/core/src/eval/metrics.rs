use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Conversation, DialogueAct};
use crate::error::Result;
use crate::model::{gold_labels, Model};

const N: usize = DialogueAct::COUNT;

/// Counts indexed `[gold][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; N]; N],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (DialogueAct, DialogueAct)>>(pairs: I) -> Self {
        let mut m = Self::new();
        for (g, p) in pairs {
            m.add(g, p);
        }
        m
    }

    pub fn add(&mut self, gold: DialogueAct, predicted: DialogueAct) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    pub fn get(&self, gold: DialogueAct, predicted: DialogueAct) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn rows(&self) -> &[[u64; N]; N] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N).map(|i| self.counts[i][i]).sum()
    }

    /// Per-class F1 in percent, 0 when precision + recall is 0.
    pub fn f1(&self, class: DialogueAct) -> f64 {
        let c = class.index();
        let tp = self.counts[c][c] as f64;
        let predicted: u64 = (0..N).map(|g| self.counts[g][c]).sum();
        let gold: u64 = self.counts[c].iter().sum();
        let p = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let r = if gold == 0 { 0.0 } else { tp / gold as f64 };
        if p + r == 0.0 {
            0.0
        } else {
            100.0 * 2.0 * p * r / (p + r)
        }
    }

    /// CSV with a header row of predicted labels and one row per gold label.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gold\\predicted");
        for a in DialogueAct::ALL {
            write!(s, ",{a}").unwrap();
        }
        s.push('\n');
        for a in DialogueAct::ALL {
            s.push_str(a.name());
            for n in self.counts[a.index()] {
                write!(s, ",{n}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// F1 per class in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClassF1 {
    #[serde(rename = "Accept")]
    pub accept: f64,
    #[serde(rename = "Counteroffer")]
    pub counteroffer: f64,
    #[serde(rename = "Offer")]
    pub offer: f64,
    #[serde(rename = "Other")]
    pub other: f64,
    #[serde(rename = "Refusal")]
    pub refusal: f64,
}

impl PerClassF1 {
    pub fn get(&self, class: DialogueAct) -> f64 {
        self.to_array()[class.index()]
    }

    pub fn to_array(&self) -> [f64; N] {
        [self.accept, self.counteroffer, self.offer, self.other, self.refusal]
    }
}

/// Percent-valued metrics plus the raw confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class_f1: PerClassF1,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let total = confusion.total();
        let accuracy = if total == 0 { 0.0 } else { 100.0 * confusion.trace() as f64 / total as f64 };
        let f = DialogueAct::ALL.map(|a| confusion.f1(a));
        EvalReport {
            accuracy,
            per_class_f1: PerClassF1 { accept: f[0], counteroffer: f[1], offer: f[2], other: f[3], refusal: f[4] },
            macro_f1: f.iter().sum::<f64>() / N as f64,
            confusion,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "accuracy": self.accuracy,
            "per_class_f1": self.per_class_f1,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.rows(),
        })
    }

    pub fn table_header() -> String {
        let mut s = format!("{:<16} {:>8}", "Model", "Accuracy");
        for a in DialogueAct::ALL {
            write!(s, " {:>12}", a.name()).unwrap();
        }
        write!(s, " {:>8}", "Macro-F1").unwrap();
        s
    }

    /// One table row, two decimals per number.
    pub fn table_row(&self, name: &str) -> String {
        let mut s = format!("{:<16} {:>8.2}", name, self.accuracy);
        for f in self.per_class_f1.to_array() {
            write!(s, " {f:>12.2}").unwrap();
        }
        write!(s, " {:>8.2}", self.macro_f1).unwrap();
        s
    }
}

/// Scores `model` on labeled conversations with dropout disabled.
pub fn evaluate(model: &Model, conversations: &[Conversation]) -> Result<EvalReport> {
    let golds: Vec<Vec<DialogueAct>> = conversations.iter().map(gold_labels).collect::<Result<_>>()?;
    let partial: Vec<ConfusionMatrix> = conversations
        .par_iter()
        .zip(golds.par_iter())
        .map(|(c, gold)| {
            let preds = model.predict(c)?;
            Ok(ConfusionMatrix::from_pairs(gold.iter().copied().zip(preds.iter().map(|p| p.label))))
        })
        .collect::<Result<_>>()?;
    let mut total = ConfusionMatrix::new();
    for m in &partial {
        total.merge(m);
    }
    Ok(EvalReport::from_confusion(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use DialogueAct::*;

    #[test]
    fn perfect_predictions() {
        let pairs = DialogueAct::ALL.iter().map(|&a| (a, a));
        let r = EvalReport::from_confusion(ConfusionMatrix::from_pairs(pairs));
        assert_eq!(r.accuracy, 100.0);
        assert_eq!(r.macro_f1, 100.0);
        assert!(r.per_class_f1.to_array().iter().all(|&f| f == 100.0));
    }

    #[test]
    fn constant_other_predictor() {
        // Half the data is Other; predictions are always Other.
        let gold = [Other, Other, Offer, Accept];
        let r = EvalReport::from_confusion(ConfusionMatrix::from_pairs(gold.iter().map(|&g| (g, Other))));
        // P = 0.5, R = 1 -> F1 = 2/3.
        let other = 100.0 * 2.0 / 3.0;
        assert!((r.per_class_f1.other - other).abs() < 1e-12);
        assert_eq!(r.per_class_f1.accept, 0.0);
        assert_eq!(r.per_class_f1.offer, 0.0);
        assert!((r.macro_f1 - other / 5.0).abs() < 1e-12);
        assert_eq!(r.accuracy, 50.0);
    }

    #[test]
    fn json_and_csv_layout() {
        let r = EvalReport::from_confusion(ConfusionMatrix::from_pairs([(Offer, Counteroffer), (Refusal, Refusal)]));
        let text = serde_json::to_string(&r.to_json()).unwrap();
        let order: Vec<usize> = DialogueAct::ALL.iter().map(|a| text.find(&format!("\"{a}\"")).unwrap()).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert_eq!(r.to_json()["confusion"][2][1], 1);
        let csv = r.confusion.to_csv();
        assert!(csv.starts_with("gold\\predicted,Accept,Counteroffer,Offer,Other,Refusal\n"));
        assert!(csv.contains("\nOffer,0,1,0,0,0\n"));
        assert!(EvalReport::table_row(&r, "x").contains("50.00"));
    }
}
