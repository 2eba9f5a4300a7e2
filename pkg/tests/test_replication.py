import os

import pytest

from bitrel.models.schemas import RunConfig
from bitrel.services import pipeline

pytestmark = pytest.mark.slow

OTHERS = ["Ham", "Tmt", "Cls", "Cos"]


@pytest.fixture(name="summary", scope="module")
def summary_fixture(tmp_path_factory):
    config = RunConfig(
        seed=2024,
        systems=200,
        samples=2000,
        jobs=os.cpu_count() or 1,
        out=tmp_path_factory.mktemp("replication"),
    )
    output = pipeline.run(config)
    assert output.type_counts == {"AND": 40, "LHA": 40, "MIX": 40, "OR": 40, "XOR": 40}
    return output.summary.set_index("metric")


def test_ham_accuracy_is_near_half(summary):
    assert 0.35 <= summary.loc["Ham", "acc"] <= 0.65


MEAN_BALANCED_ORDERING = pytest.mark.xfail(
    reason="soft counts averaged per system favour Tmt and Cls on BACC and BMI; see DESIGN.md, Replication results",
    strict=False,
)


@MEAN_BALANCED_ORDERING
def test_cov_and_dep_have_best_balanced_accuracy(summary):
    for best in ("Cov", "Dep"):
        for other in OTHERS:
            assert summary.loc[best, "bacc"] > summary.loc[other, "bacc"]


def test_cov_and_dep_find_fewer_connections(summary):
    for best in ("Cov", "Dep"):
        assert 0.10 <= summary.loc[best, "tpr"] <= 0.45
        for other in OTHERS:
            assert summary.loc[best, "tpr"] < summary.loc[other, "tpr"]


def test_cov_and_dep_reject_non_connections(summary):
    for best in ("Cov", "Dep"):
        assert summary.loc[best, "tnr"] > summary.loc["Ham", "tnr"]


def test_cov_and_dep_lead_on_mcc(summary):
    for best in ("Cov", "Dep"):
        for other in OTHERS:
            assert summary.loc[best, "mcc"] > summary.loc[other, "mcc"]


@MEAN_BALANCED_ORDERING
def test_cov_and_dep_lead_on_bmi(summary):
    for best in ("Cov", "Dep"):
        for other in OTHERS:
            assert summary.loc[best, "bmi"] > summary.loc[other, "bmi"]


def test_bmi_is_rescaled_balanced_accuracy(summary):
    assert (summary["bmi"] - (2 * summary["bacc"] - 1)).abs().max() < 1e-12
