"""
质量损失与分类损失测试
"""
import numpy as np
import pytest

from calculation.autodiff import Graph, Tensor, backward
from calculation.autodiff.gradcheck import check_gradients
from calculation.losses import (ScoreBatch, combined_loss, combined_loss_terms, mono_loss, plcc_loss,
                                scene_classification_loss)
from utils.exceptions import ContractError, DimensionError


def batch(pred, gt, requires_grad: bool = False) -> ScoreBatch:
    return ScoreBatch(s_pred=Tensor(np.asarray(pred, dtype=np.float64), requires_grad=requires_grad,
                                    dtype=np.float64), s_gt=np.asarray(gt, dtype=np.float64))


@pytest.mark.unit
class TestMonotonicityLoss:
    """排序铰链损失"""

    def test_reversed_pair(self):
        # 对 (0, 1) 与 (1, 0) 各贡献一次 |2 - 1|
        assert float(mono_loss(batch([1.0, 2.0], [2.0, 1.0])).data) == pytest.approx(2.0)

    def test_correct_order_is_zero(self):
        assert float(mono_loss(batch([0.1, 0.5, 0.9], [1.0, 2.0, 3.0])).data) == 0.0

    def test_ties_in_labels_contribute_nothing(self):
        assert float(mono_loss(batch([3.0, -1.0], [5.0, 5.0])).data) == 0.0

    def test_shift_invariant(self):
        gt = [3.0, 1.0, 2.0, 5.0]
        a = float(mono_loss(batch([0.3, 0.9, 0.1, 0.2], gt)).data)
        b = float(mono_loss(batch([10.3, 10.9, 10.1, 10.2], gt)).data)
        assert a == pytest.approx(b)

    def test_gradient(self):
        scores = batch([0.3, 0.9, 0.1, 0.25], [3.0, 1.0, 2.0, 5.0], requires_grad=True)
        assert check_gradients(lambda: mono_loss(scores), [scores.s_pred], step=1e-6) < 1e-6


@pytest.mark.unit
class TestPLCCLoss:
    """线性相关损失"""

    def test_perfect_correlation(self):
        gt = [1.0, 2.0, 4.0, 3.0]
        assert float(plcc_loss(batch(gt, gt)).data) == pytest.approx(0.0, abs=1e-12)

    def test_anti_correlation(self):
        gt = np.array([1.0, 2.0, 4.0, 3.0])
        assert float(plcc_loss(batch(-gt, gt)).data) == pytest.approx(1.0)

    def test_affine_invariant(self):
        gt = np.array([1.0, 2.0, 4.0, 3.0])
        pred = np.array([0.2, 0.1, 0.7, 0.4])
        a = float(plcc_loss(batch(pred, gt)).data)
        b = float(plcc_loss(batch(3.0 * pred - 7.0, gt)).data)
        assert a == pytest.approx(b)

    def test_constant_prediction(self):
        scores = batch([0.5, 0.5, 0.5], [1.0, 2.0, 3.0], requires_grad=True)
        with Graph() as graph:
            loss = plcc_loss(scores)
        backward(graph, loss, [scores.s_pred])
        assert float(loss.data) == 0.5
        np.testing.assert_array_equal(scores.s_pred.grad, np.zeros(3))

    def test_gradient(self):
        scores = batch([0.3, 0.9, 0.1, 0.25, 0.6], [3.0, 1.0, 2.0, 5.0, 4.0], requires_grad=True)
        assert check_gradients(lambda: plcc_loss(scores), [scores.s_pred]) < 1e-6


def mono_oracle(pred, gt) -> float:
    total = 0.0
    for i in range(len(pred)):
        for j in range(len(pred)):
            if i != j:
                total += max(0.0, (pred[i] - pred[j]) * np.sign(gt[j] - gt[i]))
    return total


def pearson_oracle(x, y) -> float:
    mx, my = sum(x) / len(x), sum(y) / len(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / np.sqrt(sxx * syy)


def random_scores(rng):
    """长度 3..12 的随机批次, 约四分之一的预测含并列值"""
    size = int(rng.integers(3, 13))
    pred = rng.integers(0, 4, size).astype(np.float64) if rng.random() < 0.25 else rng.normal(size=size)
    return pred, rng.uniform(0.0, 100.0, size)


@pytest.mark.unit
class TestLossOracles:
    """与逐对循环 / 两遍 Pearson 的对照"""

    def test_mono_matches_pairwise_loop(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            pred, gt = random_scores(rng)
            gt = np.round(gt / 10.0)    # 标注也含并列
            assert abs(float(mono_loss(batch(pred, gt)).data) - mono_oracle(pred, gt)) < 1e-12

    def test_plcc_matches_two_pass(self):
        rng = np.random.default_rng(2025)
        checked = 0
        for _ in range(1000):
            pred, gt = random_scores(rng)
            loss = float(plcc_loss(batch(pred, gt)).data)
            if pred.var() < 1e-8:
                assert loss == 0.5
                continue
            assert abs(loss - 0.5 * (1.0 - pearson_oracle(pred, gt))) < 1e-12
            checked += 1
        assert checked > 900

    def test_plcc_affine_invariance(self):
        rng = np.random.default_rng(2026)
        for _ in range(1000):
            pred, gt = rng.normal(size=8), rng.uniform(0.0, 100.0, 8)
            a, b = rng.uniform(0.1, 10.0), rng.uniform(-50.0, 50.0)
            base = float(plcc_loss(batch(pred, gt)).data)
            assert abs(float(plcc_loss(batch(a * pred + b, gt)).data) - base) < 1e-10
            assert abs(float(plcc_loss(batch(-a * pred + b, gt)).data) - (1.0 - base)) < 1e-10


@pytest.mark.unit
class TestCombinedLoss:
    """组合损失与输入约束"""

    def test_weighting(self):
        scores = batch([1.0, 2.0, 0.0], [2.0, 1.0, 3.0])
        total, mono, plcc = combined_loss_terms(scores, lam=0.3)
        assert float(total.data) == pytest.approx(0.3 * float(mono.data) + float(plcc.data))
        assert float(combined_loss(scores, lam=0.0).data) == pytest.approx(float(plcc.data))

    def test_default_lambda(self):
        scores = batch([1.0, 2.0, 0.0], [2.0, 1.0, 3.0])
        assert float(combined_loss(scores).data) == pytest.approx(float(combined_loss(scores, lam=0.3).data))

    def test_negative_lambda(self):
        with pytest.raises(ContractError):
            combined_loss(batch([1.0, 2.0], [2.0, 1.0]), lam=-0.1)

    @pytest.mark.parametrize("pred, gt", [
        ([1.0], [1.0]),
        ([1.0, 2.0], [1.0, 2.0, 3.0]),
        ([1.0, np.nan], [1.0, 2.0]),
        ([1.0, 2.0], [np.inf, 2.0]),
    ])
    def test_invalid_batch(self, pred, gt):
        with pytest.raises(ContractError):
            batch(pred, gt)


@pytest.mark.unit
class TestSceneClassificationLoss:
    """场景分类交叉熵"""

    def test_uniform_logits(self):
        logits = Tensor(np.zeros((3, 4)), dtype=np.float64)
        loss = scene_classification_loss(logits, np.array([0, 1, 3]))
        assert float(loss.data) == pytest.approx(np.log(4.0))

    def test_gradient(self):
        logits = Tensor(np.random.default_rng(1).normal(size=(5, 4)), requires_grad=True, dtype=np.float64)
        labels = np.array([0, 3, 2, 2, 1])
        assert check_gradients(lambda: scene_classification_loss(logits, labels), [logits]) < 1e-6

    def test_invalid_labels(self):
        logits = Tensor(np.zeros((2, 4)))
        with pytest.raises(ContractError):
            scene_classification_loss(logits, np.array([0, 4]))
        with pytest.raises(DimensionError):
            scene_classification_loss(logits, np.array([0, 1, 2]))
