import numpy as np
import pytest

from kscatter import CouplingOperator, PointConfiguration, build_configuration


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)


def random_config(
    rng: np.random.Generator,
    n: int | None = None,
    box: float = 6.0,
    weight_range=(0.2, 5.0),
) -> PointConfiguration:
    """Random diagonal-coupling configuration in a centered box."""
    if n is None:
        n = int(rng.integers(1, 9))
    pts = rng.uniform(-box / 2.0, box / 2.0, (n, 3))
    w = rng.choice([-1.0, 1.0], n) * rng.uniform(*weight_range, n)
    return build_configuration(pts, CouplingOperator.diagonal(w))
