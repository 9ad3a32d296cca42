"""
相关系数指标测试
"""
import math

import numpy as np
import pytest
from scipy.stats import pearsonr, spearmanr

from calculation.evaluation import STATUS_NOT_A_RESULT, QualityMetrics
from utils.exceptions import ContractError


@pytest.mark.unit
class TestCorrelation:
    """SRCC / PLCC"""

    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        pred, gt = rng.normal(size=40), rng.normal(size=40)
        assert QualityMetrics.plcc(pred, gt).value == pytest.approx(pearsonr(pred, gt)[0], abs=1e-12)
        assert QualityMetrics.srcc(pred, gt).value == pytest.approx(spearmanr(pred, gt)[0], abs=1e-12)

    def test_ties_use_average_ranks(self):
        np.testing.assert_array_equal(QualityMetrics.ranks([3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0])
        pred, gt = [1.0, 1.0, 2.0, 3.0], [4.0, 3.0, 2.0, 1.0]
        assert QualityMetrics.srcc(pred, gt).value == pytest.approx(spearmanr(pred, gt)[0])

    def test_monotone_transform(self):
        gt = np.array([2.0, 7.0, 1.0, 4.0, 5.0])
        pred = np.array([0.1, 0.8, -0.3, 0.35, 0.4])
        assert QualityMetrics.srcc(np.exp(pred), gt).value == pytest.approx(QualityMetrics.srcc(pred, gt).value)
        assert QualityMetrics.srcc(gt, gt).value == pytest.approx(1.0)
        assert QualityMetrics.srcc(-gt, gt).value == pytest.approx(-1.0)

    def test_plcc_affine_invariant(self):
        gt = np.array([2.0, 7.0, 1.0, 4.0])
        pred = np.array([0.3, 0.1, 0.9, 0.2])
        assert QualityMetrics.plcc(5 * pred + 1, gt).value == pytest.approx(QualityMetrics.plcc(pred, gt).value)

    def test_constant_is_not_a_result(self):
        result = QualityMetrics.srcc([0.5, 0.5, 0.5], [1.0, 2.0, 3.0])
        assert result.value is None
        assert result.status == STATUS_NOT_A_RESULT
        assert not result.ok
        assert math.isnan(result.as_float())
        assert str(result) == STATUS_NOT_A_RESULT
        assert QualityMetrics.plcc([1.0, 2.0], [3.0, 3.0]).status == STATUS_NOT_A_RESULT

    @pytest.mark.parametrize("pred, gt", [
        ([1.0], [1.0]),
        ([1.0, 2.0], [1.0]),
        ([1.0, np.nan], [1.0, 2.0]),
    ])
    def test_invalid_input(self, pred, gt):
        with pytest.raises(ContractError):
            QualityMetrics.srcc(pred, gt)


def average_ranks(values) -> list:
    """逐个计数: 1 + 更小的个数 + (相等的个数 - 1) / 2"""
    return [1.0 + sum(w < v for w in values) + (sum(w == v for w in values) - 1) / 2.0 for v in values]


def pearson_oracle(x, y) -> float:
    mx, my = sum(x) / len(x), sum(y) / len(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


@pytest.mark.unit
class TestCorrelationOracles:
    """与显式平均秩 / 两遍 Pearson 的对照"""

    def test_worked_example_with_tie(self):
        pred, gt = [1.0, 2.0, 2.0, 3.0], [1.0, 3.0, 2.0, 4.0]
        np.testing.assert_array_equal(QualityMetrics.ranks(pred), [1.0, 2.5, 2.5, 4.0])
        assert average_ranks(pred) == [1.0, 2.5, 2.5, 4.0]
        # 中心化秩 [-1.5, 0, 0, 1.5] 与 [-1.5, 0.5, -0.5, 1.5]: ρ = 4.5 / sqrt(4.5 * 5) = sqrt(0.9)
        assert abs(QualityMetrics.srcc(pred, gt).value - math.sqrt(0.9)) < 1e-12
        assert abs(QualityMetrics.srcc(pred, gt).value - pearson_oracle(average_ranks(pred), gt)) < 1e-12

    def test_random_batches(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(1000):
            size = int(rng.integers(2, 13))
            pred = rng.integers(0, 4, size).astype(np.float64) if rng.random() < 0.3 else rng.normal(size=size)
            gt = np.round(rng.uniform(0.0, 10.0, size))
            srcc, plcc = QualityMetrics.srcc(pred, gt), QualityMetrics.plcc(pred, gt)
            np.testing.assert_array_equal(QualityMetrics.ranks(pred), average_ranks(pred))
            assert srcc.value == QualityMetrics.plcc(QualityMetrics.ranks(pred), QualityMetrics.ranks(gt)).value
            if np.ptp(pred) == 0 or np.ptp(gt) == 0:
                assert srcc.status == STATUS_NOT_A_RESULT and plcc.status == STATUS_NOT_A_RESULT
                continue
            assert abs(srcc.value - pearson_oracle(average_ranks(pred), average_ranks(gt))) < 1e-12
            assert abs(plcc.value - pearson_oracle(pred, gt)) < 1e-12
            checked += 1
        assert checked > 800


@pytest.mark.unit
class TestSummary:
    """分组汇总表"""

    def test_groups(self):
        pred = [0.1, 0.2, 0.3, 0.9, 0.5]
        gt = [1.0, 2.0, 3.0, 4.0, 5.0]
        table = QualityMetrics.summarize(pred, gt, groups=["a", "a", "a", "b", "c"])
        assert list(table["group"]) == ["all", "a", "b", "c"]
        assert list(table.columns) == ["group", "count", "srcc", "plcc", "status"]
        row_a = table.set_index("group").loc["a"]
        assert row_a["srcc"] == pytest.approx(1.0)
        assert row_a["status"] == "ok"
        # 单样本组无法计算相关系数
        assert table.set_index("group").loc["b", "status"] == STATUS_NOT_A_RESULT

    def test_without_groups(self):
        table = QualityMetrics.summarize([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
        assert len(table) == 1
        assert table.iloc[0]["srcc"] == pytest.approx(-1.0)
