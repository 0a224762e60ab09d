import logging

import pytest

from dagparser.convert import ud_to_dag
from dagparser.fixtures import fixture_sentences, load_fixtures, synthetic_treebank


@pytest.fixture(scope="session")
def cases():
    return load_fixtures()


@pytest.fixture(scope="session")
def sentences():
    return fixture_sentences()


@pytest.fixture(scope="session")
def by_name(cases):
    return {c.name: c for c in cases}


@pytest.fixture(scope="session")
def control(by_name):
    return by_name["control-made"].sentence


@pytest.fixture(scope="session")
def control_graph(control):
    return ud_to_dag(control)


@pytest.fixture(scope="session")
def treebank():
    return synthetic_treebank(50, seed=0)


@pytest.fixture(autouse=True)
def quiet_parser_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="dagparser")

