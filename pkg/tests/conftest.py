import pytest

from litmus_pricing.core import FunctionSpec, Sensitivity, TimeSlices


@pytest.fixture
def worked_spec():
    """The (900, 100) function used throughout the worked examples."""
    return FunctionSpec(
        "worked",
        "py",
        TimeSlices(900.0, 100.0),
        sens_shared=Sensitivity(0.05, 0.15),
        sens_private=Sensitivity(0.001, 0.003),
        base_l3_misses=50.0,
        l3_sensitivity=0.2,
    )
