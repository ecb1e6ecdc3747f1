"""Session types for depth- and name-bounded pi-calculus processes."""

from .parser import parse_env, parse_process, parse_type, print_process, print_type  # noqa: F401
from .syntax import *  # noqa: F401,F403

__version__ = "0.1.0"
