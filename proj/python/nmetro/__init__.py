"""Metropolis multialternative choice: kernels, chains and stopping times."""

from ._nmetro import *  # noqa: F401,F403
from ._nmetro import NmetroError, DEFAULT_SEED  # noqa: F401
