import math
import tempfile
import unittest
from pathlib import Path

import torch

from crossbid.base.errors import ConfigError, ContractError, DatasetFormatError, DimensionError
from crossbid.kernel import (
    DTYPE,
    ParamStore,
    adamw_step,
    backward,
    dropout,
    layer_norm,
    linear,
    load_checkpoint,
    matmul,
    relu,
    save_checkpoint,
    softmax_last,
    tensor,
)


def _scalar_store(value: float) -> ParamStore:
    params = ParamStore()
    params.register("p", [value])
    return params


class TestOps(unittest.TestCase):
    def test_matmul_values(self):
        out = matmul(tensor([[1, 0], [0, 1]]), tensor([[3], [4]]))
        self.assertTrue(torch.equal(out, tensor([[3], [4]])))
        self.assertEqual(matmul(tensor([[1, 2]]), tensor([[3], [4]])).item(), 11.0)

    def test_matmul_shape_error_names_both_shapes(self):
        with self.assertRaises(DimensionError) as ctx:
            matmul(torch.zeros(2, 3, dtype=DTYPE), torch.zeros(2, 3, dtype=DTYPE))
        self.assertIn("(2, 3)", str(ctx.exception))

    def test_matmul_gradient(self):
        g = torch.Generator().manual_seed(0)
        a = torch.randn(3, 4, generator=g, dtype=DTYPE, requires_grad=True)
        b = torch.randn(4, 2, generator=g, dtype=DTYPE, requires_grad=True)
        backward(matmul(a, b).sum())
        torch.testing.assert_close(a.grad, torch.ones(3, 2, dtype=DTYPE) @ b.detach().T)
        self.assertTrue(torch.autograd.gradcheck(matmul, (a, b), eps=1e-5, rtol=1e-4))

    def test_softmax(self):
        torch.testing.assert_close(softmax_last(tensor([0.0, 0.0])), tensor([0.5, 0.5]))
        torch.testing.assert_close(softmax_last(tensor([7.0, 7.0, 7.0])), tensor([1 / 3] * 3))
        masked = softmax_last(tensor([0.0, -1e4]))
        self.assertLess(masked[1].item(), 1e-40)

        rows = softmax_last(torch.randn(5, 9, generator=torch.Generator().manual_seed(1), dtype=DTYPE))
        self.assertLess((rows.sum(-1) - 1).abs().max().item(), 1e-12)

    def test_softmax_empty(self):
        with self.assertRaises(DimensionError):
            softmax_last(torch.zeros(3, 0, dtype=DTYPE))

    def test_layer_norm_examples(self):
        out = layer_norm(tensor([1.0, 3.0]), tensor([1.0, 1.0]), tensor([0.0, 0.0]), eps=1e-12)
        torch.testing.assert_close(out, tensor([-1.0, 1.0]))

        h = torch.randn(4, 6, generator=torch.Generator().manual_seed(2), dtype=DTYPE)
        out = layer_norm(h, torch.zeros(6, dtype=DTYPE), torch.full((6,), 5.0, dtype=DTYPE))
        self.assertTrue(torch.equal(out, torch.full((4, 6), 5.0, dtype=DTYPE)))

    def test_layer_norm_statistics(self):
        eps = 1e-5
        ones, zeros = torch.ones(64, dtype=DTYPE), torch.zeros(64, dtype=DTYPE)
        h = torch.randn(8, 64, generator=torch.Generator().manual_seed(3), dtype=DTYPE)
        out = layer_norm(h, ones, zeros, eps)
        self.assertLess(out.mean(-1).abs().max().item(), 1e-10)
        var_in = h.var(-1, unbiased=False)
        torch.testing.assert_close(out.var(-1, unbiased=False), var_in / (var_in + eps), rtol=0, atol=1e-12)

        out = layer_norm(10 * h, ones, zeros, eps)
        self.assertLess((out.var(-1, unbiased=False) - 1).abs().max().item(), 1e-6)

    def test_layer_norm_errors(self):
        with self.assertRaises(DimensionError):
            layer_norm(torch.zeros(2, 3, dtype=DTYPE), torch.ones(2, dtype=DTYPE), torch.zeros(2, dtype=DTYPE))
        with self.assertRaises(ConfigError):
            layer_norm(torch.zeros(3, dtype=DTYPE), torch.ones(3, dtype=DTYPE), torch.zeros(3, dtype=DTYPE), eps=0)

    def test_relu_and_linear(self):
        self.assertTrue(torch.equal(relu(tensor([-1.0, 2.0])), tensor([0.0, 2.0])))
        out = linear(tensor([[1.0, 2.0]]), tensor([[1.0], [1.0]]), tensor([0.5]))
        self.assertEqual(out.item(), 3.5)
        with self.assertRaises(DimensionError):
            linear(tensor([[1.0, 2.0, 3.0]]), tensor([[1.0], [1.0]]))

    def test_dropout(self):
        x = torch.ones(1_000_000, dtype=DTYPE)
        self.assertIs(dropout(x, 0.1, training=False), x)

        out = dropout(x, 0.1, training=True, generator=torch.Generator().manual_seed(4))
        survivors = (out != 0).to(DTYPE).mean().item()
        self.assertAlmostEqual(survivors, 0.9, delta=0.003)
        self.assertAlmostEqual(out.mean().item(), 1.0, delta=0.01)

        again = dropout(x, 0.1, training=True, generator=torch.Generator().manual_seed(4))
        self.assertTrue(torch.equal(out, again))

        for rate in (-0.1, 1.0):
            with self.assertRaises(ConfigError):
                dropout(x, rate, training=True)

    def test_backward(self):
        x = tensor([1.0, -2.0, 3.0], requires_grad=True)
        backward(x.sum())
        self.assertTrue(torch.equal(x.grad, torch.ones(3, dtype=DTYPE)))

        y = tensor([1.0, -2.0, 3.0], requires_grad=True)
        backward((y * y).sum())
        self.assertTrue(torch.equal(y.grad, 2 * y.detach()))

        with self.assertRaises(ContractError):
            backward(y * 2)
        with self.assertRaises(ContractError):
            backward(tensor(1.0))


class TestParamStore(unittest.TestCase):
    def test_register_order_and_duplicates(self):
        params = ParamStore()
        for name in ("b", "a", "c"):
            params.register(name, [0.0])
        self.assertEqual(list(params), ["b", "a", "c"])
        with self.assertRaises(ContractError):
            params.register("a", [1.0])

    def test_moments_start_at_zero(self):
        params = _scalar_store(1.0)
        m, v, step = params.moments("p")
        self.assertEqual((m.item(), v.item(), step), (0.0, 0.0, 0))

    def test_adamw_single_step(self):
        params = _scalar_store(1.0)
        params["p"].grad = tensor([1.0])
        adamw_step(params, lr=0.1, weight_decay=0.0)
        # bias-corrected m_hat = v_hat = 1; eps placement moves the value by ~3e-8
        self.assertAlmostEqual(params["p"].item(), 0.9000000316, delta=1e-7)
        self.assertAlmostEqual(params["p"].item(), 1 - 0.1 / (1 + 1e-8), places=15)
        self.assertEqual(params.moments("p")[2], 1)
        self.assertEqual(params["p"].grad.item(), 0.0)

    def test_adamw_zero_gradient(self):
        params = _scalar_store(2.0)
        params.zero_grad()
        adamw_step(params, lr=0.1, weight_decay=0.0)
        self.assertEqual(params["p"].item(), 2.0)

        params = _scalar_store(2.0)
        params.zero_grad()
        adamw_step(params, lr=0.1, weight_decay=0.01)
        self.assertEqual(params["p"].item(), 2.0 * (1 - 0.1 * 0.01))

    def test_adamw_missing_gradient(self):
        params = ParamStore()
        params.register("encoder.weight", [1.0])
        with self.assertRaises(ContractError) as ctx:
            adamw_step(params, lr=0.1)
        self.assertIn("encoder.weight", str(ctx.exception))

    def test_zero_grad_subset(self):
        params = ParamStore()
        params.register("used", [1.0])
        params.register("skipped", [1.0])
        params.zero_grad(["used"])
        self.assertEqual(params["used"].grad.item(), 0.0)
        self.assertIsNone(params["skipped"].grad)
        with self.assertRaises(ContractError) as ctx:
            adamw_step(params, lr=0.1)
        self.assertIn("skipped", str(ctx.exception))


class TestCheckpoint(unittest.TestCase):
    def _trained_store(self) -> ParamStore:
        params = ParamStore()
        g = torch.Generator().manual_seed(5)
        params.register("w", torch.randn(3, 2, generator=g, dtype=DTYPE))
        params.register("b", torch.randn(2, generator=g, dtype=DTYPE))
        for _ in range(3):
            params.zero_grad()
            backward((params["w"].sum(0) * params["b"]).pow(2).sum())
            adamw_step(params, lr=0.01)
        return params

    def test_round_trip_is_bit_exact(self):
        params = self._trained_store()
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / "ckpt.safetensors", params, {"note": "x"})
            loaded, metadata = load_checkpoint(path)

        self.assertEqual(list(loaded), list(params))
        self.assertEqual(metadata["note"], "x")
        for name in params:
            self.assertTrue(torch.equal(loaded[name], params[name].detach()))
            m0, v0, s0 = params.moments(name)
            m1, v1, s1 = loaded.moments(name)
            self.assertTrue(torch.equal(m0, m1))
            self.assertTrue(torch.equal(v0, v1))
            self.assertEqual(s0, s1)

    def test_resumed_update_matches(self):
        params = self._trained_store()
        with tempfile.TemporaryDirectory() as tmp:
            loaded, _ = load_checkpoint(save_checkpoint(Path(tmp) / "ckpt.safetensors", params))

        for store in (params, loaded):
            for name in store:
                store[name].grad = torch.full_like(store[name], 0.5)
            adamw_step(store, lr=0.01)
        for name in params:
            self.assertTrue(torch.equal(loaded[name], params[name]))

    def test_rejects_foreign_file(self):
        from safetensors.torch import save_file

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "other.safetensors"
            save_file({"x": torch.zeros(1)}, str(path), metadata={"kind": "other"})
            with self.assertRaises(DatasetFormatError):
                load_checkpoint(path)


if __name__ == "__main__":
    unittest.main()
