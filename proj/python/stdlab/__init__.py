"""Single-trajectory consistency distillation lab."""

from ._stdlab import *  # noqa: F401,F403
from ._stdlab import __version__  # noqa: F401
