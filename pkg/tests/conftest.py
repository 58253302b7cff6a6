import os
import sys

import pytest

HERE = os.path.dirname(__file__)
if HERE not in sys.path:
    sys.path.insert(0, HERE)


@pytest.fixture(scope="session")
def ex1():
    from flowbox.sysfile import parse_system

    return parse_system("example1.sys")


@pytest.fixture(scope="session")
def ex2():
    from flowbox.sysfile import parse_system

    return parse_system("example2.sys")
