import numpy as np
import pytest

from genview.settings import RunConfig
from genview.toy.trainer import run_experiment

pytestmark = pytest.mark.slow

SEEDS = range(5)
DRIFT = {"augment.drift_kappa": 2.0}


def reports(**changes):
    config = RunConfig().updated({**DRIFT, **changes})
    data, settings = config.data_config(), config.train_settings()
    return [run_experiment(data, settings, seed) for seed in SEEDS]


def median_accuracy(runs):
    return float(np.median([report.probe_accuracy for report in runs]))


def test_quality_weighting_beats_uniform_weighting():
    changes = {"augment.alpha": 1.0, "adaptive.strategy": "CS(400)"}

    weighted = reports(**changes, **{"quality.enabled": True})
    uniform = reports(**changes, **{"quality.enabled": False})

    assert median_accuracy(weighted) > median_accuracy(uniform)
    for report in weighted:
        assert report.corrupted_weight_win_rate >= 0.95


def test_adaptive_strategy_is_at_least_as_good_as_the_others():
    changes = {"augment.alpha": 1.0, "quality.enabled": False}

    adaptive = reports(**changes, **{"adaptive.strategy": "AS"})
    random_runs = reports(**changes, **{"adaptive.strategy": "RS"})
    constant = reports(**changes, **{"adaptive.strategy": "CS(400)"})

    assert median_accuracy(adaptive) >= median_accuracy(random_runs)
    assert median_accuracy(adaptive) >= median_accuracy(constant)
    flips = [np.mean([r.flip_rate for r in runs]) for runs in (adaptive, constant)]
    assert flips[0] < flips[1]


def test_accuracy_does_not_drop_with_more_generated_views():
    accuracies = [
        median_accuracy(reports(**{"augment.alpha": alpha}))
        for alpha in (0.0, 0.5, 1.0)
    ]

    assert accuracies == sorted(accuracies)
