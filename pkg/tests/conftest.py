import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sparsencut.features import QuantizedImage
from sparsencut.graph import build_graph

settings.register_profile("ci", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=15, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def random_qi(rng, h, w, k) -> QuantizedImage:
    """Random label grid with ids compacted so every cluster is used."""
    return QuantizedImage.from_labels(rng.integers(0, k, size=(h, w)))


def random_image_graph(rng, max_nodes=22, mu=None):
    """Random pixel+color graph with n + k <= max_nodes."""
    while True:
        h, w = rng.integers(1, 5, size=2)
        k = int(rng.integers(1, 4))
        qi = random_qi(rng, int(h), int(w), k)
        if qi.n_pixels + qi.k <= max_nodes and qi.n_pixels >= 2:
            break
    if mu is None:
        mu = float(np.exp(rng.uniform(np.log(0.01), np.log(50.0))))
    return qi, build_graph(qi, mu)


def random_bipartition(rng, n_nodes):
    while True:
        side = rng.random(n_nodes) < 0.5
        if 0 < side.sum() < n_nodes:
            return side


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
