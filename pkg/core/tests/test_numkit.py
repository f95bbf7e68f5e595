import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import CheckpointError, NonFiniteError, ShapeError
from core.numkit import (
    Adam, ComputationTape, ParameterSet, Tensor, clip, concat, exp, gather, load_checkpoint, log,
    log_softmax, matmul, mean, minimum, pick, precision, save_checkpoint, scatter_add, segment_max,
    sigmoid, softmax, tanh, tsum,
)
from core.numkit.gradcheck import check_gradients


def _param(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


class GradientCheckTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)

    def assertGradientsMatch(self, loss_fn, tensors, tolerance=1e-4):
        self.assertLess(check_gradients(loss_fn, tensors), tolerance)

    def test_affine_tanh(self):
        with precision(np.float64):
            x, w, b = _param(self.rng, 4, 3), _param(self.rng, 3, 2), _param(self.rng, 2)
            self.assertGradientsMatch(lambda: tsum(tanh(x @ w + b)), [x, w, b])

    def test_log_softmax_and_pick(self):
        with precision(np.float64):
            logits = _param(self.rng, 5, 4)
            labels = np.array([0, 3, 1, 1, 2])
            self.assertGradientsMatch(lambda: -mean(pick(log_softmax(logits), np.arange(5), labels)), [logits])

    def test_graph_aggregations(self):
        with precision(np.float64):
            h = _param(self.rng, 5, 3)
            senders = np.array([0, 1, 1, 2, 3, 4])
            receivers = np.array([1, 0, 2, 1, 4, 3])
            segments = np.array([0, 0, 0, 1, 1])

            def loss():
                messages = scatter_add(sigmoid(gather(h, senders)), receivers, 5)
                return tsum(segment_max(concat([h, messages], axis=1), segments, 2))

            self.assertGradientsMatch(loss, [h])

    def test_exp_log_softmax(self):
        with precision(np.float64):
            x = _param(self.rng, 3, 4)
            self.assertGradientsMatch(lambda: tsum(log(softmax(x) + 1.0) * exp(0.1 * x)), [x])

    def test_minimum_and_clip(self):
        with precision(np.float64):
            a = Tensor(np.array([0.5, 1.5, -2.0, 0.9]), requires_grad=True)
            self.assertGradientsMatch(lambda: tsum(minimum(a * 2.0, clip(a, 0.8, 1.2) * 3.0)), [a])


class TensorTests(SimpleTestCase):
    def test_float32_by_default(self):
        self.assertEqual(Tensor([1.0, 2.0]).data.dtype, np.float32)

    def test_precision_context_restores(self):
        with precision(np.float64):
            self.assertEqual(Tensor([1.0]).data.dtype, np.float64)
        self.assertEqual(Tensor([1.0]).data.dtype, np.float32)

    def test_matmul_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_segment_max_empty_segment_is_zero(self):
        out = segment_max(Tensor(np.array([[1.0, -1.0]])), np.array([1]), 2)
        np.testing.assert_array_equal(out.data, [[0.0, 0.0], [1.0, -1.0]])

    def test_gradients_accumulate_only_inside_tape(self):
        w = Tensor(np.array([2.0]), requires_grad=True)
        with ComputationTape() as tape:
            loss = tsum(w * w)
            tape.backward(loss)
        np.testing.assert_allclose(w.grad, [4.0])


class AdamTests(SimpleTestCase):
    def test_first_step_matches_closed_form(self):
        params = ParameterSet()
        w = params.add('w', np.array([1.0]))
        w.grad = np.array([2.0], dtype=np.float32)
        Adam(params, lr=0.1).step()
        # bias-corrected first step moves by lr * sign(grad)
        np.testing.assert_allclose(w.data, [0.9], rtol=1e-6)

    def test_gradient_clipping(self):
        params = ParameterSet()
        w = params.add('w', np.zeros(2))
        w.grad = np.array([300.0, 400.0], dtype=np.float32)
        optimizer = Adam(params, lr=0.1, max_grad_norm=5.0)
        optimizer.step()
        np.testing.assert_allclose(optimizer.state.m['w'], [0.3, 0.4], rtol=1e-5)

    def test_non_finite_gradient_raises(self):
        params = ParameterSet()
        w = params.add('w', np.zeros(1))
        w.grad = np.array([np.nan], dtype=np.float32)
        with self.assertRaises(NonFiniteError):
            Adam(params, lr=0.1).step()

    def test_lr_override(self):
        params = ParameterSet()
        w = params.add('w', np.array([1.0]))
        w.grad = np.array([1.0], dtype=np.float32)
        Adam(params, lr=0.1).step(lr=0.5)
        np.testing.assert_allclose(w.data, [0.5], rtol=1e-6)


class CheckpointTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / 'model.cfxm'

    def tearDown(self):
        self.tmp.cleanup()

    def test_save_and_load(self):
        tensors = {'a.weight': np.arange(6.0).reshape(2, 3), 'a.bias': np.array([0.5, -1.0, 2.0])}
        save_checkpoint(self.path, tensors, {'kind': 'test', 'hidden': 3})
        loaded, meta = load_checkpoint(self.path)
        self.assertEqual(list(loaded), ['a.weight', 'a.bias'])
        np.testing.assert_array_equal(loaded['a.weight'], tensors['a.weight'])
        np.testing.assert_array_equal(loaded['a.bias'], [0.5, -1.0, 2.0])
        self.assertEqual(meta, {'kind': 'test', 'hidden': 3})

    def test_bad_magic(self):
        self.path.write_bytes(b'NOPE' + bytes(16))
        with self.assertRaises(CheckpointError) as ctx:
            load_checkpoint(self.path)
        self.assertEqual(ctx.exception.code, 'bad_magic')

    def test_truncated(self):
        save_checkpoint(self.path, {'w': np.ones((4, 4))})
        self.path.write_bytes(self.path.read_bytes()[:-8])
        with self.assertRaises(CheckpointError) as ctx:
            load_checkpoint(self.path)
        self.assertEqual(ctx.exception.code, 'truncated')

    def test_parameter_set_rejects_wrong_shapes(self):
        params = ParameterSet()
        params.add('w', np.zeros((2, 2)))
        with self.assertRaises(CheckpointError):
            params.load_state_dict({'w': np.zeros((3, 2))})
