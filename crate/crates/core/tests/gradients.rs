mod common;

use common::{small_model, tiny_conversation};
use dagact::autodiff::{grad_check, grad_check_params, Tensor};
use dagact::data::{Conversation, DialogueAct};
use dagact::model::Architecture;
use proptest::prelude::*;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

type OpFn = fn(&mut dagact::autodiff::Tape, &[dagact::autodiff::Var]) -> dagact::Result<dagact::autodiff::Var>;

fn three_utterances() -> Conversation {
    use DialogueAct::*;
    Conversation::from_parts(
        "g3",
        &[
            ("a", "anyone have wood ?", Some(Offer)),
            ("b", "no", Some(Refusal)),
            ("a", "for clay ?", Some(Counteroffer)),
        ],
    )
}

#[test]
fn every_architecture_passes_a_full_gradient_check() {
    let convs = [tiny_conversation()];
    for arch in Architecture::ALL {
        let model = small_model(arch, &convs, 4, 4, 21);
        let report = grad_check_params(
            arch.name(),
            &model.params,
            |tape| {
                let m = &model;
                m.loss(tape, &convs[0], None)
            },
            STEP,
            TOL,
        )
        .unwrap();
        assert!(report.pass, "{arch}: {report:?}");
    }
}

#[test]
fn bilstm_daglstm_small_case_checks_every_coordinate() {
    let conv = three_utterances();
    let model = small_model(Architecture::BilstmDaglstm, std::slice::from_ref(&conv), 3, 3, 5);
    let report =
        grad_check_params("bilstm-daglstm", &model.params, |tape| model.loss(tape, &conv, None), STEP, TOL).unwrap();
    assert!(report.pass, "{report:?}");
    assert_eq!(report.coordinates, model.params.total_values());
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn elementwise_ops(n in 1usize..5, a in vec_strategy(4), b in vec_strategy(4)) {
        let inputs = vec![Tensor::vector(a[..n].to_vec()), Tensor::vector(b[..n].to_vec())];
        let ops: Vec<(&str, OpFn)> = vec![
            ("add", |t, v| { let s = t.add(v[0], v[1])?; t.sum(s) }),
            ("mul", |t, v| { let s = t.mul(v[0], v[1])?; t.sum(s) }),
            ("scale", |t, v| { let s = t.scale(v[0], -1.7)?; t.sum(s) }),
            ("sigmoid", |t, v| { let s = t.sigmoid(v[0])?; let p = t.mul(s, v[1])?; t.sum(p) }),
            ("tanh", |t, v| { let s = t.tanh(v[0])?; let p = t.mul(s, v[1])?; t.sum(p) }),
            ("concat", |t, v| { let c = t.concat(&[v[0], v[1]])?; let p = t.mul(c, c)?; t.sum(p) }),
            ("add_all", |t, v| { let s = t.add_all(&[v[0], v[1], v[0]])?; let p = t.mul(s, s)?; t.sum(p) }),
        ];
        for (name, f) in ops {
            let r = grad_check(name, f, &inputs, STEP, TOL).unwrap();
            prop_assert!(r.pass, "{:?}", r);
        }
    }

    #[test]
    fn relu_and_max_away_from_kinks(n in 1usize..5, a in vec_strategy(4), b in vec_strategy(4)) {
        // Jitter away from ties and from zero so the one-sided derivatives agree.
        let jitter = |v: &[f64], shift: f64| -> Vec<f64> {
            v.iter().map(|x| if x.abs() < 0.05 { x + shift } else { *x }).collect()
        };
        let a = jitter(&a[..n], 0.1);
        let b: Vec<f64> = jitter(&b[..n], -0.1).iter().zip(&a).map(|(y, x)| if (y - x).abs() < 0.05 { y + 0.2 } else { *y }).collect();
        let inputs = vec![Tensor::vector(a), Tensor::vector(b)];
        let r = grad_check("relu", |t, v| { let s = t.relu(v[0])?; let p = t.mul(s, v[1])?; t.sum(p) }, &inputs, STEP, TOL).unwrap();
        prop_assert!(r.pass, "{:?}", r);
        let r = grad_check("max", |t, v| { let m = t.max(&[v[0], v[1]])?; let p = t.mul(m, m)?; t.sum(p) }, &inputs, STEP, TOL).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn linear_algebra_ops(rows in 1usize..5, cols in 1usize..5, w in vec_strategy(16), x in vec_strategy(4), b in vec_strategy(4)) {
        let inputs = vec![
            Tensor::matrix(rows, cols, w[..rows * cols].to_vec()).unwrap(),
            Tensor::vector(x[..cols].to_vec()),
            Tensor::vector(b[..rows].to_vec()),
        ];
        let r = grad_check("affine", |t, v| { let y = t.affine(v[0], v[1], v[2])?; let s = t.tanh(y)?; t.sum(s) }, &inputs, STEP, TOL).unwrap();
        prop_assert!(r.pass, "{:?}", r);
        let r = grad_check("matvec", |t, v| { let y = t.matvec(v[0], v[1])?; let p = t.mul(y, y)?; t.sum(p) }, &inputs, STEP, TOL).unwrap();
        prop_assert!(r.pass, "{:?}", r);
        let r = grad_check("linear", |t, v| { let y = t.linear(&[(v[0], v[1]), (v[0], v[1])], Some(v[2]))?; let s = t.sigmoid(y)?; t.sum(s) }, &inputs, STEP, TOL).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn softmax_cross_entropy_and_mean(logits in vec_strategy(4), gold in 0usize..4, other in vec_strategy(4)) {
        let inputs = vec![Tensor::vector(logits), Tensor::vector(other)];
        let r = grad_check("softmax_ce", |t, v| Ok(t.softmax_cross_entropy(v[0], gold)?.0), &inputs, STEP, TOL).unwrap();
        prop_assert!(r.pass, "{:?}", r);
        let r = grad_check("mean", |t, v| {
            let a = t.softmax_cross_entropy(v[0], gold)?.0;
            let b = t.softmax_cross_entropy(v[1], 3 - gold)?.0;
            t.mean(&[a, b])
        }, &inputs, STEP, TOL).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }
}
