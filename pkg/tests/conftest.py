import pytest

import defectsum.weyl as weyl


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    # first kernel invocation compiles the numba backend; do it once here so
    # per-test timings stay meaningful
    weyl.classify_inverse_square_cached(2.0, "inner")
    yield
