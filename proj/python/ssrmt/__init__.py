"""Self-rewarding GRPO training harness for translation tasks.

The compiled core exposes the prompt protocol, reward shaping, GRPO math,
the synthetic cipher task, oracle scorers, the differentiable toy policy,
and the training/evaluation loops.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
