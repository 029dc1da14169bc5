"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class RoadSpreadError(Exception):
    """Base class for every error raised by the package."""


class KernelError(RoadSpreadError, ValueError):
    """Invalid exchange kernel or kernel/parameter mismatch."""


class DomainError(RoadSpreadError, ValueError):
    """A query lies outside the domain where the problem is defined."""


class SolverError(RoadSpreadError, RuntimeError):
    """A numerical procedure failed to converge or produced an inconsistent result."""
