import os

import pytest


def run_all_tests(*args, slow=False):
    """ Run the test suite, forwarding ``args`` to :func:`pytest.main`.

    The closed-world acceptance runs are skipped unless ``slow`` is set.
    """
    marker = [] if slow else ['-m', 'not slow']
    return pytest.main([os.path.dirname(__file__)] + marker + list(args))
