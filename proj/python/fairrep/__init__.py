"""Fair representation learning with provable group fairness certificates."""

from fairrep._fairrep import *  # noqa: F401,F403
from fairrep._fairrep import __doc__  # noqa: F401
