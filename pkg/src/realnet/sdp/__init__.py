"""Semidefinite programming: problem container, solvers, certificates and SDPA I/O."""

from .problem import Block, SdpProblem, equality_rows

__all__ = ["Block", "SdpProblem", "equality_rows"]
