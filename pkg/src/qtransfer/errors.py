"""Exception types shared across the package."""

from __future__ import annotations


class QTransferError(Exception):
    """Base class for all package-specific failures."""


class LayoutMismatchError(QTransferError):
    """Binary operation on states/operators with incompatible layouts."""


class LabelCollisionError(QTransferError):
    """Tensor construction would duplicate a subsystem label."""


class UnknownLabelError(QTransferError):
    """A referenced subsystem label is not part of the layout."""


class InvalidStateError(QTransferError):
    """Constructor invariant violated (norm, hermiticity, trace, positivity)."""


class RankError(QTransferError):
    """Requested rank outside [1, dim]."""


class InfeasibleSpecError(QTransferError):
    """Transfer spec has no unitary realization; carries the feasibility report."""

    def __init__(self, report):
        super().__init__(
            f"no unitary realizes this transfer: max Gram deviation "
            f"{report.max_gram_deviation:.3e} at branch pair {report.offending_pair}"
        )
        self.report = report


class NumericalRankLossError(QTransferError):
    """Input family degenerated below the rank tolerance during orthonormalization."""


class NotRepeatableError(QTransferError):
    """Channel does not preserve the candidate outcome states within tolerance."""


class SpectrumMismatchError(QTransferError):
    """Operators expected to be isospectral have different eigenvalues."""


class NonFactorizingError(QTransferError):
    """Chain branch states are entangled across links beyond tolerance."""


class NonNormalizableError(QTransferError):
    """Requested superposition has (numerically) zero norm."""


class DegenerateSystemError(QTransferError):
    """System entropy too small for the requested redundancy computation."""


class UnsupportedDimensionError(QTransferError):
    """Operation restricted to qubit subsystems received a larger dimension."""


class DegenerateSchmidtError(QTransferError):
    """Reduced-state spectrum is degenerate, so its eigenbasis is ill-defined."""
