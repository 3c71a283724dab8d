import math
import unittest

import numpy as np
import torch
from pydantic import ValidationError

from crossbid.auction import CampaignConfig, simulate_episode
from crossbid.base.errors import DimensionError, InferenceError, StepIndexError
from crossbid.dataset import NormStats, SegmentBatch
from crossbid.kernel import DTYPE, ParamStore
from crossbid.loss import LossConfig, action_loss, rtg_loss, total_loss
from crossbid.network import (
    DecisionTransformerPolicy,
    ModelConfig,
    attend,
    attention_mask,
    clb_forward,
    conditioning_rtg,
    encode_inputs,
    extract_block1_embedding,
    init_params,
    loss_free_params,
    masked_cross_attention,
    model_forward,
    rollout_inference,
)
from crossbid.network.layers import feed_forward, norm
from crossbid.network.vanilla import token_stack

INPUT_FIELDS = ("states", "prev_actions", "actions", "rtg")


def random_batch(cfg: ModelConfig, size: int = 2, seed: int = 0, valid: int | None = None) -> SegmentBatch:
    rng = np.random.default_rng(seed)
    m = cfg.window
    mask = np.ones((size, m), dtype=bool)
    timesteps = np.tile(np.arange(m), (size, 1))
    if valid is not None:
        mask[:, :m - valid] = False
        timesteps[:, :m - valid] = 0
    return SegmentBatch.from_arrays(
        states=rng.normal(size=(size, m, cfg.state_dim)),
        prev_actions=rng.normal(size=(size, m)),
        actions=rng.normal(size=(size, m)),
        rtg=rng.normal(size=(size, m)),
        timesteps=timesteps,
        mask=mask,
        penalties=rng.uniform(0.5, 2.0, size),
    )


def perturb(batch: SegmentBatch, positions, seed: int = 1) -> SegmentBatch:
    g = torch.Generator().manual_seed(seed)
    changes = {}
    for name in INPUT_FIELDS:
        x = getattr(batch, name).clone()
        x[:, positions] = x[:, positions] + torch.randn(x[:, positions].shape, generator=g, dtype=DTYPE)
        changes[name] = x
    return batch.replace(**changes)


def set_param(params: ParamStore, name: str, value) -> None:
    with torch.no_grad():
        params[name].copy_(torch.as_tensor(value, dtype=DTYPE))


def zero_params(params: ParamStore) -> None:
    with torch.no_grad():
        for p in params.values():
            p.zero_()


def batch_loss(batch: SegmentBatch, params, cfg: ModelConfig) -> torch.Tensor:
    a_hat, r_hat = model_forward(batch, params, cfg)
    l_a = action_loss(a_hat, batch.actions, batch.penalties, batch.mask)
    l_r = rtg_loss(r_hat, batch.rtg, batch.penalties, batch.mask)
    return total_loss(l_a, l_r, LossConfig())


class TestModelConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = ModelConfig()
        self.assertEqual((cfg.attn_dim, cfg.ff_dim, cfg.num_blocks), (64, 256, 3))

    def test_invalid(self):
        with self.assertRaises(ValidationError):
            ModelConfig(mask_fill=-10.0)
        with self.assertRaises(ValidationError):
            ModelConfig(d_h=8, d_k=4)
        with self.assertRaises(ValidationError):
            ModelConfig(dropout_rate=1.0)


class TestEncoding(unittest.TestCase):
    def setUp(self):
        self.cfg = ModelConfig(d_h=6, num_blocks=1, window=4, horizon=4)
        self.params = init_params(self.cfg)

    def test_zero_weights(self):
        zero_params(self.params)
        for out in encode_inputs(random_batch(self.cfg), self.params, self.cfg):
            self.assertTrue(bool((out == 0).all()))

    def test_decomposition(self):
        batch = random_batch(self.cfg)
        s1, _, _ = encode_inputs(batch, self.params, self.cfg)
        t0 = self.params["encoder.timestep.weight"][batch.timesteps]
        linear_s = batch.states @ self.params["encoder.state.weight"] + self.params["encoder.state.bias"]
        torch.testing.assert_close(s1 - t0, linear_s, rtol=0, atol=1e-12)

    def test_identical_timesteps(self):
        a = random_batch(self.cfg, seed=1)
        b = random_batch(self.cfg, seed=2)
        zero = {name: torch.zeros_like(getattr(a, name)) for name in INPUT_FIELDS}
        s_a, _, _ = encode_inputs(a.replace(**zero), self.params, self.cfg)
        s_b, _, _ = encode_inputs(b.replace(**zero), self.params, self.cfg)
        self.assertTrue(torch.equal(s_a, s_b))

    def test_timestep_out_of_range(self):
        batch = random_batch(self.cfg)
        with self.assertRaises(StepIndexError):
            encode_inputs(batch.replace(timesteps=batch.timesteps + 1), self.params, self.cfg)


class TestAttention(unittest.TestCase):
    def setUp(self):
        self.cfg = ModelConfig(d_h=4, num_blocks=1, window=3, horizon=3)
        self.params = init_params(self.cfg)
        self.prefix = "block0.a.from_s"

    def test_single_position_returns_value_row(self):
        g = torch.Generator().manual_seed(0)
        x, y = torch.randn(1, 1, 4, generator=g, dtype=DTYPE), torch.randn(1, 1, 4, generator=g, dtype=DTYPE)
        out = masked_cross_attention(x, y, self.params, self.prefix, attention_mask(torch.ones(1, 1, dtype=torch.bool)))
        v = y @ self.params[f"{self.prefix}.v.weight"] + self.params[f"{self.prefix}.v.bias"]
        torch.testing.assert_close(out, v, rtol=0, atol=1e-12)

    def test_identical_keys_average_values(self):
        g = torch.Generator().manual_seed(1)
        q = torch.randn(1, 3, 4, generator=g, dtype=DTYPE)
        k = torch.ones(1, 3, 4, dtype=DTYPE)
        v = torch.randn(1, 3, 4, generator=g, dtype=DTYPE)
        out = attend(q, k, v, attention_mask(torch.ones(1, 3, dtype=torch.bool)))
        for i in range(3):
            torch.testing.assert_close(out[0, i], v[0, :i + 1].mean(0), rtol=0, atol=1e-12)

    def test_causal_perturbation(self):
        g = torch.Generator().manual_seed(2)
        x, y = torch.randn(1, 3, 4, generator=g, dtype=DTYPE), torch.randn(1, 3, 4, generator=g, dtype=DTYPE)
        mask = attention_mask(torch.ones(1, 3, dtype=torch.bool))
        out = masked_cross_attention(x, y, self.params, self.prefix, mask)
        x2, y2 = x.clone(), y.clone()
        x2[:, 2] += 5.0
        y2[:, 2] -= 5.0
        out2 = masked_cross_attention(x2, y2, self.params, self.prefix, mask)
        self.assertTrue(torch.equal(out[:, :2], out2[:, :2]))

    def test_mask_shape_error(self):
        x = torch.zeros(1, 3, 4, dtype=DTYPE)
        with self.assertRaises(DimensionError):
            masked_cross_attention(x, x, self.params, self.prefix, torch.zeros(1, 2, 2, dtype=DTYPE))

    def test_mask_rules(self):
        valid = torch.tensor([[False, True, True]])
        mask = attention_mask(valid)
        expected_allowed = torch.tensor([[[False, False, False], [False, True, False], [False, True, True]]])
        self.assertTrue(torch.equal(mask == 0, expected_allowed))
        self.assertTrue(bool((mask[~expected_allowed] == -1e4).all()))

    def test_mask_sufficiency(self):
        g = torch.Generator().manual_seed(3)
        scores = torch.randn(1, 6, 6, generator=g, dtype=DTYPE)
        mask = attention_mask(torch.ones(1, 6, dtype=torch.bool))
        weights = torch.softmax(scores + mask, dim=-1)
        self.assertLess(weights[mask != 0].max().item(), 1e-40)

    def test_padded_queries_zeroed(self):
        g = torch.Generator().manual_seed(4)
        q, k, v = (torch.randn(1, 3, 4, generator=g, dtype=DTYPE) for _ in range(3))
        out = attend(q, k, v, attention_mask(torch.tensor([[False, True, True]])))
        self.assertTrue(bool((out[0, 0] == 0).all()))


def _ln(v: list[float], eps: float = 1e-5) -> list[float]:
    mu = sum(v) / len(v)
    var = sum((x - mu) ** 2 for x in v) / len(v)
    return [(x - mu) / math.sqrt(var + eps) for x in v]


def _vecmat(v: list[float], w: list[list[float]], b: list[float]) -> list[float]:
    return [sum(v[i] * w[i][j] for i in range(len(v))) + b[j] for j in range(len(b))]


class TestCrossLearningBlock(unittest.TestCase):
    W1 = [[1.0, -1.0], [0.5, 1.0]]
    B1 = [0.0, -0.2]
    W2 = [[2.0, 0.0], [1.0, -1.0]]
    B2 = [0.1, 0.0]
    V_SCALE = {"s": {"a": 0.5, "r": -1.0}, "a": {"s": 2.0, "r": 0.25}, "r": {"s": -0.5, "a": 1.5}}
    V_BIAS = [0.3, -0.1]
    INPUTS = {"s": [1.0, 3.0], "a": [-2.0, 0.5], "r": [0.2, 0.4]}

    def _hand_set_block(self) -> tuple[ModelConfig, ParamStore]:
        cfg = ModelConfig(d_h=2, d_ff=2, num_blocks=1, window=1, horizon=1)
        params = init_params(cfg)
        for x, others in self.V_SCALE.items():
            for o, scale in others.items():
                set_param(params, f"block0.{x}.from_{o}.v.weight", [[scale, 0.0], [0.0, scale]])
                set_param(params, f"block0.{x}.from_{o}.v.bias", self.V_BIAS)
            set_param(params, f"block0.{x}.ff1.weight", self.W1)
            set_param(params, f"block0.{x}.ff1.bias", self.B1)
            set_param(params, f"block0.{x}.ff2.weight", self.W2)
            set_param(params, f"block0.{x}.ff2.bias", self.B2)
        return cfg, params

    def _hand_trace(self, x: str) -> list[float]:
        n = _ln(self.INPUTS[x])
        h = list(self.INPUTS[x])
        for scale in self.V_SCALE[x].values():
            h = [h[i] + scale * n[i] + self.V_BIAS[i] for i in range(2)]
        z = [max(u, 0.0) for u in _vecmat(_ln(h), self.W1, self.B1)]
        return _vecmat(z, self.W2, self.B2)

    def test_golden_hand_trace(self):
        cfg, params = self._hand_set_block()
        streams = tuple(torch.tensor([[self.INPUTS[x]]], dtype=DTYPE) for x in ("s", "a", "r"))
        mask = attention_mask(torch.ones(1, 1, dtype=torch.bool))
        out = clb_forward(streams, params, 0, cfg, mask)
        for name, got in zip(("s", "a", "r"), out):
            torch.testing.assert_close(got[0, 0], torch.tensor(self._hand_trace(name), dtype=DTYPE),
                                       rtol=0, atol=1e-12)

    def test_zero_weights_give_zero_output(self):
        cfg = ModelConfig(d_h=4, num_blocks=1, window=3, horizon=3)
        params = init_params(cfg)
        for name in params:
            if ".from_" in name or ".ff" in name or name.endswith("beta"):
                set_param(params, name, torch.zeros_like(params[name]))
        g = torch.Generator().manual_seed(0)
        streams = tuple(torch.randn(2, 3, 4, generator=g, dtype=DTYPE) for _ in range(3))
        out = clb_forward(streams, params, 0, cfg, attention_mask(torch.ones(2, 3, dtype=torch.bool)))
        self.assertTrue(all(bool((o == 0).all()) for o in out))

    def test_residual_identity_path(self):
        cfg = ModelConfig(d_h=4, num_blocks=1, window=3, horizon=3)
        params = init_params(cfg)
        for name in params:
            if ".from_" in name and ".v." in name:
                set_param(params, name, torch.zeros_like(params[name]))
        g = torch.Generator().manual_seed(1)
        streams = tuple(torch.randn(2, 3, 4, generator=g, dtype=DTYPE) for _ in range(3))
        out = clb_forward(streams, params, 0, cfg, attention_mask(torch.ones(2, 3, dtype=torch.bool)))
        for name, x, got in zip(("s", "a", "r"), streams, out):
            expected = feed_forward(norm(x, params, f"block0.{name}.ln_ff", cfg), params, f"block0.{name}", cfg)
            self.assertTrue(torch.equal(got, expected))

    def test_shapes_across_blocks(self):
        cfg = ModelConfig(d_h=8, num_blocks=3, window=5, horizon=5)
        params = init_params(cfg)
        g = torch.Generator().manual_seed(2)
        streams = tuple(torch.randn(2, 5, 8, generator=g, dtype=DTYPE) for _ in range(3))
        mask = attention_mask(torch.ones(2, 5, dtype=torch.bool))
        for b in range(3):
            streams = clb_forward(streams, params, b, cfg, mask)
            self.assertTrue(all(tuple(x.shape) == (2, 5, 8) for x in streams))

    def test_stream_shape_mismatch(self):
        cfg = ModelConfig(d_h=4, num_blocks=1, window=3, horizon=3)
        params = init_params(cfg)
        x = torch.zeros(1, 3, 4, dtype=DTYPE)
        with self.assertRaises(DimensionError):
            clb_forward((x, x, torch.zeros(1, 2, 4, dtype=DTYPE)), params, 0, cfg, attention_mask(torch.ones(1, 3)))


class TestModelForward(unittest.TestCase):
    def _cfg(self, variant: str, **kwargs) -> ModelConfig:
        values = dict(variant=variant, d_h=8, num_blocks=2, window=8, horizon=8)
        values.update(kwargs)
        return ModelConfig(**values)

    def test_untrained_outputs(self):
        for variant in ("clb_dt", "vanilla_dt"):
            cfg = self._cfg(variant)
            a_hat, r_hat = model_forward(random_batch(cfg, size=3), init_params(cfg), cfg)
            self.assertEqual(tuple(a_hat.shape), (3, 8))
            self.assertEqual(tuple(r_hat.shape), (3, 8))
            self.assertTrue(bool(torch.isfinite(a_hat).all() and torch.isfinite(r_hat).all()))

    def test_causality(self):
        for variant in ("clb_dt", "vanilla_dt"):
            cfg = self._cfg(variant)
            params = init_params(cfg)
            batch = random_batch(cfg)
            a_hat, r_hat = model_forward(batch, params, cfg)
            for later in range(1, 8):
                a2, r2 = model_forward(perturb(batch, [later], seed=later), params, cfg)
                with self.subTest(variant=variant, perturbed=later):
                    self.assertTrue(torch.equal(a_hat[:, :later], a2[:, :later]))
                    self.assertTrue(torch.equal(r_hat[:, :later], r2[:, :later]))

    def test_current_action_not_used_for_its_prediction(self):
        cfg = self._cfg("clb_dt")
        params = init_params(cfg)
        batch = random_batch(cfg)
        a_hat, _ = model_forward(batch, params, cfg)
        a2, _ = model_forward(batch.replace(actions=batch.actions + 3.0), params, cfg)
        self.assertTrue(torch.equal(a_hat, a2))

    def test_vanilla_token_count(self):
        cfg = self._cfg("vanilla_dt")
        h = token_stack(random_batch(cfg), init_params(cfg), cfg)
        self.assertEqual(tuple(h.shape), (2, 24, 8))

    def test_padding_perturbation(self):
        for variant in ("clb_dt", "vanilla_dt"):
            cfg = self._cfg(variant)
            params = init_params(cfg)
            batch = random_batch(cfg, valid=5)
            loss = batch_loss(batch, params, cfg)
            changed = batch_loss(perturb(batch, [0, 1, 2], seed=9), params, cfg)
            with self.subTest(variant=variant):
                self.assertEqual(loss.item(), changed.item())

    def test_dropout_only_in_training(self):
        cfg = self._cfg("clb_dt")
        params = init_params(cfg)
        batch = random_batch(cfg)
        eval_a, _ = model_forward(batch, params, cfg)
        train_a, _ = model_forward(batch, params, cfg, training=True, generator=torch.Generator().manual_seed(0))
        again, _ = model_forward(batch, params, cfg, training=True, generator=torch.Generator().manual_seed(0))
        self.assertFalse(torch.equal(eval_a, train_a))
        self.assertTrue(torch.equal(train_a, again))

    def test_parameter_counts(self):
        clb = init_params(self._cfg("clb_dt")).num_parameters()
        vanilla = init_params(self._cfg("vanilla_dt")).num_parameters()
        self.assertGreater(clb, vanilla)


class TestGradients(unittest.TestCase):
    def _check(self, cfg: ModelConfig) -> None:
        params = init_params(cfg)
        names = list(params)
        batch = random_batch(cfg, size=2, seed=5)

        def loss_of(*tensors):
            return batch_loss(batch, dict(zip(names, tensors)), cfg)

        inputs = tuple(params[n].detach().clone().requires_grad_(True) for n in names)
        self.assertTrue(torch.autograd.gradcheck(loss_of, inputs, eps=1e-5, rtol=1e-4, atol=1e-6))

    def test_clb_end_to_end(self):
        self._check(ModelConfig(d_h=4, num_blocks=1, window=3, horizon=3))

    def test_vanilla_end_to_end(self):
        self._check(ModelConfig(variant="vanilla_dt", d_h=4, num_blocks=1, window=3, horizon=3))

    def test_loss_free_params_are_exactly_the_unreached_ones(self):
        for head_stream in ("s", "a"):
            cfg = ModelConfig(d_h=4, num_blocks=2, window=3, horizon=3, head_stream=head_stream)
            params = init_params(cfg)
            batch_loss(random_batch(cfg), params, cfg).backward()
            unreached = {name for name in params if params[name].grad is None}
            self.assertTrue(unreached)
            self.assertEqual(unreached, set(loss_free_params(params, cfg)))

        cfg = ModelConfig(variant="vanilla_dt", d_h=4, num_blocks=2, window=3, horizon=3)
        params = init_params(cfg)
        batch_loss(random_batch(cfg), params, cfg).backward()
        self.assertEqual(loss_free_params(params, cfg), [])
        self.assertTrue(all(params[name].grad is not None for name in params))


class TestEmbedding(unittest.TestCase):
    def test_lengths_and_determinism(self):
        for variant, width in (("clb_dt", 24), ("vanilla_dt", 8)):
            cfg = ModelConfig(variant=variant, d_h=8, num_blocks=2, window=4, horizon=4)
            params = init_params(cfg)
            batch = random_batch(cfg, size=3)
            emb = extract_block1_embedding(batch, params, cfg)
            self.assertEqual(tuple(emb.shape), (3, width))
            self.assertTrue(torch.equal(emb, extract_block1_embedding(batch, params, cfg)))

    def test_zero_model(self):
        for variant in ("clb_dt", "vanilla_dt"):
            cfg = ModelConfig(variant=variant, d_h=4, num_blocks=1, window=3, horizon=3)
            params = init_params(cfg)
            zero_params(params)
            self.assertTrue(bool((extract_block1_embedding(random_batch(cfg), params, cfg) == 0).all()))


class TestRollout(unittest.TestCase):
    CAMPAIGN = CampaignConfig(horizon=6, impressions_per_step=20, budget=30.0, seed=2)

    def setUp(self):
        self.cfg = ModelConfig(d_h=8, num_blocks=1, window=4, horizon=6)
        self.params = init_params(self.cfg)
        self.stats = NormStats(
            state_mean=[0.0] * 7, state_std=[1.0] * 7, rtg_mean=0.0, rtg_std=10.0, max_return=50.0
        )

    def test_conditioning_rtg(self):
        self.assertTrue(np.array_equal(conditioning_rtg(5.0, np.array([1.0, 2.0, 4.0])), [5.0, 4.0, 2.0, 0.0]))

    def test_rtg_bookkeeping(self):
        policy = DecisionTransformerPolicy(self.params, self.cfg, self.stats, target_rtg=20.0)
        log = simulate_episode(policy, self.CAMPAIGN)
        realized = np.concatenate([[0.0], np.cumsum(log.rewards)[:-1]])
        self.assertTrue(np.array_equal(policy.conditioning, np.maximum(20.0 - realized, 0.0)))

    def test_determinism(self):
        a = rollout_inference(self.params, self.cfg, self.stats, self.CAMPAIGN, 20.0)
        b = rollout_inference(self.params, self.cfg, self.stats, self.CAMPAIGN, 20.0)
        self.assertTrue(np.array_equal(a.actions, b.actions))
        self.assertEqual(a.total_value, b.total_value)
        self.assertTrue(all(x >= 0 for x in a.actions))

    def test_zero_head_bids_nothing(self):
        for name in ("head.action.weight", "head.action.bias"):
            set_param(self.params, name, torch.zeros_like(self.params[name]))
        log = rollout_inference(self.params, self.cfg, self.stats, self.CAMPAIGN, 20.0)
        self.assertTrue(np.array_equal(log.actions, np.zeros(6)))
        self.assertEqual(log.total_value, 0.0)

    def test_nan_output_aborts(self):
        set_param(self.params, "head.action.bias", [math.nan])
        with self.assertRaises(InferenceError):
            rollout_inference(self.params, self.cfg, self.stats, self.CAMPAIGN, 20.0)


if __name__ == "__main__":
    unittest.main()
