# Copyright (C) 2026 The Sesame Toolkit Authors
# SPDX-License-Identifier: Apache-2.0
"""Energy model construction from coarse battery readings."""

from ._sesame import *  # noqa: F401,F403
from ._sesame import __doc__  # noqa: F401

__version__ = "0.1.0"
