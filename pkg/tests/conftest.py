"""Shared fixtures.

The heavyweight training fixtures are session-scoped so the acceptance tests
and the unit tests reuse the same runs instead of retraining.
"""
import numpy as np
import pytest

import weightsep as ws


@pytest.fixture(scope="session")
def digits_train():
    return ws.synth_digits(per_class=512, seed=11)


@pytest.fixture(scope="session")
def digits_test():
    return ws.synth_digits(per_class=100, seed=1_000_014)


@pytest.fixture(scope="session")
def blobs_small():
    return ws.synth_blobs(n_classes=3, per_class=40, dim=8, spread=0.02, seed=7)


def trend_config(seed, use_reconstruction=True, **overrides):
    """The shared desk-scale recipe: 784-64-10 digits run whose epsilon
    trajectory decreases while accuracy saturates.  Weight decay 0.01 keeps
    the decision-column norms contracting after the margins saturate, which
    is what makes the per-epoch trend negative at this scale."""
    base = dict(
        layer_dims=(784, 64, 10),
        epochs=30,
        milestones=(15, 25),
        base_lr=0.1,
        weight_decay=0.01,
        lam=0.001,
        batch_size=128,
        seed=seed,
        use_reconstruction=use_reconstruction,
    )
    base.update(overrides)
    return ws.TrainConfig(**base)


@pytest.fixture(scope="session")
def trend_run(digits_train, digits_test):
    """One full run of the trend recipe (seed 1, with reconstruction)."""
    return ws.train(trend_config(1), digits_train, eval_ds=digits_test)


@pytest.fixture(scope="session")
def paired_runs(digits_train, digits_test):
    """Five seeds x {with, without} reconstruction, shared by the epsilon
    comparison and the similarity-direction tests."""
    out = {}
    for use_re in (True, False):
        for seed in (1, 2, 3, 4, 5):
            cfg = trend_config(seed, use_reconstruction=use_re)
            out[(use_re, seed)] = ws.train(cfg, digits_train, eval_ds=digits_test)
    return out


@pytest.fixture(scope="session")
def digits_015(digits_train, digits_test):
    return (
        ws.filter_classes(digits_train, (0, 1, 5)),
        ws.filter_classes(digits_test, (0, 1, 5)),
    )


def epoch_epsilons(artifact):
    """Last logged epsilon of each epoch, in epoch order."""
    by_epoch = {}
    for rec in artifact.records:
        by_epoch[rec.epoch] = rec.epsilon
    return np.array([by_epoch[e] for e in sorted(by_epoch)])
