import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from fcsim.fit.fieldspec import build_fit_model, parse_fieldspec

from helpers import fieldspec_text


@pytest.fixture(scope="session")
def fit2_tomega():
    return build_fit_model(parse_fieldspec(fieldspec_text(2, formulation="tomega")))


@pytest.fixture(scope="session")
def fit2_astar():
    return build_fit_model(
        parse_fieldspec(fieldspec_text(2, formulation="astar", conductor=None))
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
