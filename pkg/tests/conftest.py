import pathlib

import pytest

from algebroids import Sampler, load_model

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def models_dir():
    return MODELS


@pytest.fixture(scope="session")
def classical():
    return load_model(MODELS / "classical.model")


@pytest.fixture(scope="session")
def lie_algebroid():
    return load_model(MODELS / "lie_algebroid.model")


@pytest.fixture(scope="session")
def generalized():
    return load_model(MODELS / "generalized.model")


@pytest.fixture(scope="session")
def diag_quadratic():
    return load_model(MODELS / "diag_quadratic.model")


@pytest.fixture(scope="session")
def quartic():
    return load_model(MODELS / "quartic.model")


@pytest.fixture(scope="session")
def mismatched():
    return load_model(MODELS / "mismatched.model")


@pytest.fixture(scope="session")
def broken():
    return load_model(MODELS / "broken_compatibility.model")


@pytest.fixture(scope="session")
def all_valid_models(classical, lie_algebroid, generalized):
    return {
        "classical": classical,
        "lie_algebroid": lie_algebroid,
        "generalized": generalized,
    }


@pytest.fixture()
def sampler():
    return Sampler(points=60, seed=7)
