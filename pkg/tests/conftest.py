import copy

import pytest

from squid_modes.config_loader import get_settings, settings_snapshot
from squid_modes.log import setup_logger

setup_logger("WARNING")


@pytest.fixture(autouse=True)
def restore_settings():
    # commands and flags write into the process-wide settings
    original = copy.deepcopy(settings_snapshot())
    yield
    for section, values in original.items():
        get_settings().set(section.upper(), values)
