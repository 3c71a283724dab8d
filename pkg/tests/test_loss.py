import unittest

import numpy as np
import torch

from crossbid.auction import CampaignConfig, EpisodeLog, StepRecord
from crossbid.base.errors import ContractError, DomainError, NumericError
from crossbid.kernel import DTYPE, backward, tensor
from crossbid.loss import (
    LossConfig,
    PenaltyConfig,
    action_loss,
    budget_consumption,
    compute_cpa,
    penalty_bc,
    penalty_cpa,
    rtg_loss,
    total_loss,
    total_penalty,
)

CAMPAIGN = CampaignConfig(budget=100.0, cpa_threshold=1.0, horizon=1)
LITERAL = PenaltyConfig()
CLAMPED = PenaltyConfig(clamp_floor_enabled=True)


def _log(cost: float, value: float) -> EpisodeLog:
    step = StepRecord(
        t=0, action=1.0, state=np.zeros(7), reward=value, cost=cost, wins=1 if value else 0, impressions=1,
        cumulative_cost=cost, cumulative_value=value,
    )
    return EpisodeLog(campaign=CAMPAIGN, steps=[step])


class TestPenalties(unittest.TestCase):
    def test_cpa(self):
        self.assertEqual(compute_cpa(_log(10.0, 5.0)), 2.0)
        self.assertEqual(compute_cpa(_log(0.0, 0.0)), 0.0)

    def test_penalty_cpa(self):
        self.assertEqual(penalty_cpa(1.0, 1.0, LITERAL), 1.0)
        self.assertEqual(penalty_cpa(0.3, 1.0, LITERAL), 1.0)
        self.assertEqual(penalty_cpa(2.0, 1.0, LITERAL), 4.0)
        for alpha, expected in ((1.5, 1.5 ** 1.5), (2.0, 2.25), (3.0, 3.375)):
            self.assertAlmostEqual(penalty_cpa(1.5, 1.0, PenaltyConfig(alpha1=alpha)), expected, places=12)

    def test_penalty_cpa_non_decreasing(self):
        grid = np.linspace(0, 5, 101)
        values = [penalty_cpa(float(c), 1.0, LITERAL) for c in grid]
        self.assertTrue(all(b >= a for a, b in zip(values, values[1:])))

    def test_penalty_bc(self):
        self.assertEqual(penalty_bc(_log(100.0, 1.0), 100.0, 2.0), 1.0)
        self.assertEqual(penalty_bc(_log(50.0, 1.0), 100.0, 2.0), 0.25)
        self.assertEqual(penalty_bc(_log(0.0, 0.0), 100.0, 2.0), 0.0)
        with self.assertRaises(DomainError):
            budget_consumption(_log(0.0, 0.0), 0.0)

    def test_total_penalty_cases(self):
        for cfg in (LITERAL, CLAMPED):
            self.assertEqual(total_penalty(_log(100.0, 200.0), CAMPAIGN, cfg).p_total, 1.0)
        self.assertEqual(total_penalty(_log(100.0, 50.0), CAMPAIGN, LITERAL).p_total, 4.0)

        half = _log(50.0, 25.0)
        self.assertEqual(total_penalty(half, CAMPAIGN, LITERAL).p_total, 1.0)
        self.assertEqual(total_penalty(half, CAMPAIGN, CLAMPED).p_total, 1.0)

        forty = _log(40.0, 20.0)
        self.assertAlmostEqual(total_penalty(forty, CAMPAIGN, LITERAL).p_total, 0.64, places=12)
        self.assertEqual(total_penalty(forty, CAMPAIGN, CLAMPED).p_total, 1.0)

    def test_breakdown_fields(self):
        breakdown = total_penalty(_log(40.0, 20.0), CAMPAIGN, LITERAL)
        self.assertEqual(breakdown.mode, "literal")
        self.assertEqual(breakdown.p_total, breakdown.p_cpa * breakdown.p_bc)
        self.assertEqual(total_penalty(_log(40.0, 20.0), CAMPAIGN, CLAMPED).mode, "clamped")

    def test_clamped_never_below_one(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            cost = float(rng.uniform(0, 100))
            value = float(rng.uniform(0, 100))
            self.assertGreaterEqual(total_penalty(_log(cost, value), CAMPAIGN, CLAMPED).p_total, 1.0)


class TestWeightedLosses(unittest.TestCase):
    def test_exact_prediction(self):
        pred = tensor([[0.5, 1.0]])
        mask = torch.ones(1, 2, dtype=torch.bool)
        self.assertEqual(action_loss(pred, pred.clone(), tensor([3.0]), mask).item(), 0.0)
        self.assertEqual(rtg_loss(pred, pred.clone(), tensor([3.0]), mask).item(), 0.0)

    def test_single_weighted_sample(self):
        loss = action_loss(tensor([[1.5]]), tensor([[1.0]]), tensor([4.0]), torch.ones(1, 1, dtype=torch.bool))
        self.assertEqual(loss.item(), 1.0)

    def test_linear_in_penalty(self):
        g = torch.Generator().manual_seed(0)
        pred, target = torch.randn(4, 3, generator=g, dtype=DTYPE), torch.randn(4, 3, generator=g, dtype=DTYPE)
        p = torch.rand(4, generator=g, dtype=DTYPE) + 0.5
        mask = torch.ones(4, 3, dtype=torch.bool)
        self.assertAlmostEqual(
            action_loss(pred, target, 2 * p, mask).item(), 2 * action_loss(pred, target, p, mask).item(), places=12
        )

    def test_unit_penalty_is_masked_mse(self):
        g = torch.Generator().manual_seed(1)
        pred, target = torch.randn(3, 4, generator=g, dtype=DTYPE), torch.randn(3, 4, generator=g, dtype=DTYPE)
        mask = torch.tensor([[False, True, True, True], [True] * 4, [False, False, False, True]])
        expected = ((pred - target) ** 2)[mask].mean()
        loss = rtg_loss(pred, target, torch.ones(3, dtype=DTYPE), mask)
        self.assertAlmostEqual(loss.item(), expected.item(), places=14)

    def test_hand_computed_three_samples(self):
        pred = tensor([[1.0], [2.0], [0.0]])
        target = tensor([[0.0], [0.0], [3.0]])
        penalties = tensor([1.0, 0.5, 2.0])
        loss = rtg_loss(pred, target, penalties, torch.ones(3, 1, dtype=torch.bool))
        self.assertAlmostEqual(loss.item(), (1 * 1 + 0.5 * 4 + 2 * 9) / 3, places=12)

    def test_masked_positions_ignored(self):
        pred = tensor([[5.0, 1.0]])
        target = tensor([[-7.0, 1.0]])
        mask = torch.tensor([[False, True]])
        self.assertEqual(action_loss(pred, target, tensor([1.0]), mask).item(), 0.0)

    def test_permutation_invariant(self):
        g = torch.Generator().manual_seed(2)
        pred, target = torch.randn(5, 2, generator=g, dtype=DTYPE), torch.randn(5, 2, generator=g, dtype=DTYPE)
        p = torch.rand(5, generator=g, dtype=DTYPE)
        mask = torch.ones(5, 2, dtype=torch.bool)
        perm = torch.tensor([3, 0, 4, 1, 2])
        self.assertAlmostEqual(
            action_loss(pred, target, p, mask).item(),
            action_loss(pred[perm], target[perm], p[perm], mask).item(),
            places=12,
        )

    def test_all_masked(self):
        with self.assertRaises(ContractError):
            action_loss(tensor([[1.0]]), tensor([[0.0]]), tensor([1.0]), torch.zeros(1, 1, dtype=torch.bool))

    def test_total_loss(self):
        self.assertAlmostEqual(total_loss(tensor(1.0), tensor(0.2), LossConfig(rtg_weight=10)).item(), 3.0, places=12)
        with self.assertRaises(NumericError):
            total_loss(tensor(float("nan")), tensor(0.2), LossConfig())

    def test_total_loss_gradient_scales_rtg(self):
        target = tensor([[0.3, -0.2]])
        mask = torch.ones(1, 2, dtype=torch.bool)
        p = tensor([1.5])

        r_hat = tensor([[1.0, 2.0]], requires_grad=True)
        backward(rtg_loss(r_hat, target, p, mask))
        alone = r_hat.grad.clone()

        r_hat = tensor([[1.0, 2.0]], requires_grad=True)
        l_a = action_loss(tensor([[0.0, 0.0]]), tensor([[1.0, 1.0]]), p, mask)
        backward(total_loss(l_a, rtg_loss(r_hat, target, p, mask), LossConfig(rtg_weight=10)))
        torch.testing.assert_close(r_hat.grad, 10 * alone)


if __name__ == "__main__":
    unittest.main()
