use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize], scale: f64) -> Tensor {
    Tensor::from_fn(dims, |_| rng.random_range(-scale..scale))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn softmax_of_zeros_is_uniform() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::zeros([2]));
    let y = tape.softmax(x, 0).unwrap();
    assert_eq!(tape.value(y), &[0.5, 0.5]);
}

#[test]
fn identity_matmul_is_noop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_tensor(&mut rng, &[3, 4], 1.0);
    let mut tape = Tape::new();
    let i = tape.constant(Tensor::identity(3));
    let av = tape.constant(a.clone());
    let out = tape.matmul(i, av).unwrap();
    assert_eq!(tape.value(out), a.data());
}

#[test]
fn matmul_reports_both_shapes() {
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::zeros([2, 3]));
    let b = tape.constant(Tensor::zeros([2, 3]));
    let err = tape.matmul(a, b).unwrap_err();
    let msg = alloc::format!("{err}");
    assert!(msg.contains("[2, 3] vs [2, 3]"), "{msg}");
}

#[test]
fn sigmoid_sum_gradient_at_zero_is_quarter() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros([4]), true);
    let s = tape.sigmoid(x);
    let loss = tape.sum_all(s);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.wrt(x).unwrap(), &[0.25; 4]);
}

#[test]
fn sum_gradient_is_ones() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::new([3], vec![1.0, -2.0, 5.0]).unwrap(), true);
    let loss = tape.sum_all(x);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.wrt(x).unwrap(), &[1.0, 1.0, 1.0]);
}

#[test]
fn dot_product_gradient_is_other_operand() {
    let xs = vec![0.5, -1.5, 2.0];
    let ys = vec![3.0, 0.25, -4.0];
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::new([3], xs.clone()).unwrap(), true);
    let y = tape.leaf(Tensor::new([3], ys.clone()).unwrap(), true);
    let p = tape.mul(x, y).unwrap();
    let loss = tape.sum_all(p);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.wrt(x).unwrap(), ys.as_slice());
    assert_eq!(g.wrt(y).unwrap(), xs.as_slice());
}

#[test]
fn backward_rejects_non_scalar() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros([2]), true);
    assert!(matches!(tape.backward(x), Err(TensorError::NonScalarLoss(_))));
}

#[test]
fn backward_rejects_empty_tape() {
    let tape = Tape::new();
    assert!(matches!(tape.backward(Var(0)), Err(TensorError::EmptyTape)));
}

#[test]
fn masked_positions_get_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tape = Tape::new();
    let x = tape.leaf(random_tensor(&mut rng, &[2, 3], 2.0), true);
    let mask = [false, true, false, true, true, false];
    let filled = tape.masked_fill(x, &mask, -1e9).unwrap();
    let y = tape.softmax(filled, 1).unwrap();
    let w = tape.constant(random_tensor(&mut rng, &[2, 3], 1.0));
    let prod = tape.mul(y, w).unwrap();
    let loss = tape.sum_all(prod);
    let g = tape.backward(loss).unwrap();
    let gx = g.wrt(x).unwrap();
    for (gv, m) in gx.iter().zip(mask) {
        if m {
            assert_eq!(*gv, 0.0);
        }
    }
    assert!(gx[0] != 0.0);
}

#[test]
fn no_grad_tape_records_no_gradients() {
    let mut store = ParamStore::new();
    let w = store.insert("w", Tensor::filled([2], 1.0));
    let mut tape = Tape::with_params(&store).no_grad();
    let v = tape.param(w);
    let loss = tape.sum_all(v);
    let g = tape.backward(loss).unwrap();
    assert!(g.param(w).is_none());
}

/// Weighted sum with fixed random weights, so reductions whose plain sum is
/// constant (softmax, layer norm) still have a non-trivial gradient.
fn probe(tape: &mut Tape<'_>, y: Var, seed: u64) -> Result<Var, TensorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_tensor(&mut rng, tape.dims(y), 1.0);
    let wv = tape.constant(w);
    let p = tape.mul(y, wv)?;
    Ok(tape.sum_all(p))
}

fn check_unary(
    name: &str,
    dims: &[usize],
    seed: u64,
    scale: f64,
    op: impl Fn(&mut Tape<'_>, Var) -> Result<Var, TensorError>,
) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let x = store.insert(name, random_tensor(&mut rng, dims, scale));
    let cfg = GradCheckConfig::default();
    grad_check(
        &store,
        |tape: &mut Tape<'_>| {
            let xv = tape.param(x);
            let y = op(tape, xv)?;
            probe(tape, y, seed + 1)
        },
        &cfg,
    )
    .unwrap()
}

#[test]
fn every_primitive_passes_grad_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for round in 0..6u64 {
        let r = rng.random_range(1..5usize);
        let c = rng.random_range(1..6usize);
        let k = rng.random_range(1..4usize);
        let seed = 100 + round * 10;
        let reports = vec![
            check_unary("softmax0", &[r, c], seed, 2.0, |t, x| t.softmax(x, 0)),
            check_unary("softmax1", &[r, c], seed, 2.0, |t, x| t.softmax(x, 1)),
            check_unary("log_softmax", &[r, c], seed, 2.0, |t, x| t.log_softmax(x, 1)),
            check_unary("sigmoid", &[r, c], seed, 3.0, |t, x| Ok(t.sigmoid(x))),
            check_unary("tanh", &[r, c], seed, 2.0, |t, x| Ok(t.tanh(x))),
            check_unary("gelu", &[r, c], seed, 3.0, |t, x| Ok(t.gelu(x))),
            check_unary("exp", &[r, c], seed, 1.0, |t, x| Ok(t.exp(x))),
            check_unary("log", &[r, c], seed, 1.0, |t, x| {
                let y = t.exp(x);
                Ok(t.log(y))
            }),
            check_unary("scale", &[r, c], seed, 1.0, |t, x| Ok(t.scale(x, -1.7))),
            check_unary("add_scalar", &[r, c], seed, 1.0, |t, x| Ok(t.add_scalar(x, 0.3))),
            check_unary("transpose", &[r, c], seed, 1.0, |t, x| t.transpose(x)),
            check_unary("sum0", &[r, c, k], seed, 1.0, |t, x| t.sum(x, 1)),
            check_unary("mean", &[r, c, k], seed, 1.0, |t, x| t.mean(x, 0)),
            check_unary("slice", &[r, c + 2], seed, 1.0, |t, x| t.slice(x, 1, 1, c)),
            check_unary("reshape", &[r, c], seed, 1.0, |t, x| t.reshape(x, [c, r])),
            check_unary("concat", &[r, c], seed, 1.0, |t, x| {
                let y = t.tanh(x);
                t.concat(&[x, y, x], 1)
            }),
            check_unary("concat0", &[r, c], seed, 1.0, |t, x| {
                let y = t.sigmoid(x);
                t.concat(&[y, x], 0)
            }),
            check_unary("self_mul", &[r, c], seed, 1.0, |t, x| t.mul(x, x)),
            check_unary("div", &[r, c], seed, 1.0, |t, x| {
                let d = t.exp(x);
                t.div(x, d)
            }),
            check_unary("sub", &[r, c], seed, 1.0, |t, x| {
                let y = t.tanh(x);
                t.sub(y, x)
            }),
            check_unary("gather", &[r, c], seed, 1.0, |t, x| {
                let idx: Vec<usize> = (0..r).map(|i| (i * 7) % c).collect();
                t.gather(x, &idx)
            }),
            check_unary("mul_const", &[r, c], seed, 1.0, |t, x| {
                let f = (0..r * c).map(|i| (i % 3) as f64 - 0.5).collect();
                t.mul_const(x, f)
            }),
            check_unary("masked_fill", &[r, c], seed, 1.0, |t, x| {
                let mask: Vec<bool> = (0..r * c).map(|i| i % 3 == 1).collect();
                t.masked_fill(x, &mask, 0.25)
            }),
        ];
        for rep in reports {
            assert!(rep.passed(), "round {round}: {:?}", rep.worst());
        }
    }
}

#[test]
fn binary_primitives_pass_grad_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for round in 0..6u64 {
        let m = rng.random_range(1..5usize);
        let k = rng.random_range(1..5usize);
        let n = rng.random_range(1..5usize);
        let v = rng.random_range(2..6usize);
        let mut store = ParamStore::new();
        let a = store.insert("a", random_tensor(&mut rng, &[m, k], 1.0));
        let b = store.insert("b", random_tensor(&mut rng, &[k, n], 1.0));
        let bias = store.insert("bias", random_tensor(&mut rng, &[n], 1.0));
        let gamma = store.insert("gamma", random_tensor(&mut rng, &[n], 1.0));
        let beta = store.insert("beta", random_tensor(&mut rng, &[n], 1.0));
        let table = store.insert("table", random_tensor(&mut rng, &[v, n], 1.0));
        let ids: Vec<usize> = (0..m).map(|i| (i * 3 + round as usize) % v).collect();
        let report = grad_check(
            &store,
            |t: &mut Tape<'_>| {
                let (a, b, bias, gamma, beta, table) =
                    (t.param(a), t.param(b), t.param(bias), t.param(gamma), t.param(beta), t.param(table));
                let p = t.matmul(a, b)?;
                let p = t.add_bias(p, bias)?;
                let e = t.embedding(table, &ids)?;
                let s = t.add(p, e)?;
                let y = t.layer_norm(s, gamma, beta, 1e-5)?;
                probe(t, y, round)
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.passed(), "round {round}: {:?}", report.worst());
    }
}

#[test]
fn layer_norm_grad_error_below_1e6() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut store = ParamStore::new();
    let x = store.insert("x", random_tensor(&mut rng, &[4, 8], 2.0));
    let g = store.insert("g", random_tensor(&mut rng, &[8], 1.5));
    let b = store.insert("b", random_tensor(&mut rng, &[8], 1.0));
    let report = grad_check(
        &store,
        |t: &mut Tape<'_>| {
            let (x, g, b) = (t.param(x), t.param(g), t.param(b));
            let y = t.layer_norm(x, g, b, 1e-5)?;
            probe(t, y, 6)
        },
        &GradCheckConfig::default(),
    )
    .unwrap();
    assert!(report.max_rel_error() < 1e-6, "{:?}", report.worst());
}

#[test]
fn affine_function_is_exact_under_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut store = ParamStore::new();
    let x = store.insert("x", random_tensor(&mut rng, &[3, 4], 1.0));
    let w = random_tensor(&mut rng, &[12], 1.0);
    let report = grad_check(
        &store,
        |t: &mut Tape<'_>| {
            let xv = t.param(x);
            let y = t.mul_const(xv, w.data().to_vec())?;
            let y = t.scale(y, 3.0);
            let y = t.add_scalar(y, 1.0);
            Ok::<_, TensorError>(t.sum_all(y))
        },
        &GradCheckConfig::default(),
    )
    .unwrap();
    // truncation error vanishes for affine f; what is left is roundoff
    // of order f64::EPSILON * |f| / eps
    assert!(report.max_rel_error() < 1e-8, "{:?}", report.worst());
}

/// Five scalar parameters flowing through products, quotients and
/// transcendental functions; gradients checked against central differences.
#[test]
fn composite_five_parameter_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut store = ParamStore::new();
    let ids: Vec<ParamId> = (0..5)
        .map(|i| store.insert(alloc::format!("p{i}"), Tensor::new([1], vec![rng.random_range(0.2..1.5)]).unwrap()))
        .collect();
    let report = grad_check(
        &store,
        |t: &mut Tape<'_>| {
            let p: Vec<Var> = ids.iter().map(|&id| t.param(id)).collect();
            let a = t.mul(p[0], p[1])?;
            let b = t.tanh(p[2]);
            let c = t.div(a, p[3])?;
            let d = t.exp(p[4]);
            let e = t.add(c, b)?;
            let e = t.mul(e, d)?;
            let f = t.sigmoid(e);
            let g = t.log(f);
            let h = t.mul(g, p[0])?;
            Ok::<_, TensorError>(t.sum_all(h))
        },
        &GradCheckConfig::default(),
    )
    .unwrap();
    assert!(report.max_rel_error() < 1e-6, "{:?}", report.worst());
}

#[test]
fn repeated_param_use_accumulates() {
    let mut store = ParamStore::new();
    let w = store.insert("w", Tensor::new([2], vec![3.0, -1.0]).unwrap());
    let mut tape = Tape::with_params(&store);
    let a = tape.param(w);
    let b = tape.param(w);
    assert_eq!(a, b);
    let p = tape.mul(a, b).unwrap();
    let loss = tape.sum_all(p);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.param(w).unwrap(), &[6.0, -2.0]);
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(data in proptest::collection::vec(-30.0f64..30.0, 1..40), cols in 1usize..8) {
        let rows = data.len().div_ceil(cols);
        let mut padded = data.clone();
        padded.resize(rows * cols, 0.0);
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new([rows, cols], padded).unwrap());
        let y = tape.softmax(x, 1).unwrap();
        for r in 0..rows {
            let row = &tape.value(y)[r * cols..(r + 1) * cols];
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_softmax_matches_log_of_softmax(data in proptest::collection::vec(-20.0f64..20.0, 1..32)) {
        let n = data.len();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new([n], data).unwrap());
        let y = tape.softmax(x, 0).unwrap();
        let ly = tape.log(y);
        let ls = tape.log_softmax(x, 0).unwrap();
        prop_assert!(close(tape.value(ly), tape.value(ls), 1e-9));
    }
}
