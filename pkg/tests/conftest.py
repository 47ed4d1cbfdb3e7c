import time

SESSION_START = time.monotonic()


def pytest_collection_modifyitems(items):
    # acceptance checks include a whole-suite wall-clock bound, so they
    # must run after everything else
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")
