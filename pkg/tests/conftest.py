import pytest

from simfit import ModelSpec, geometric, weibull


@pytest.fixture(scope="session")
def tiny_model() -> ModelSpec:
    """Small all-geometric model; cheap to simulate, every law memoryless."""
    return ModelSpec(N=4,
                     x1=geometric(0.35), y1=geometric(0.45),
                     x2=geometric(0.25), y2=geometric(0.7),
                     z1=geometric(0.3), z2=geometric(0.6))


@pytest.fixture(scope="session")
def bench_model() -> ModelSpec:
    """The benchmark model used throughout the acceptance experiments."""
    return ModelSpec(N=15,
                     x1=weibull(1.5, 0.5), y1=geometric(0.4),
                     x2=weibull(1.5, 0.3), y2=geometric(0.8),
                     z1=geometric(0.3), z2=geometric(0.6))
