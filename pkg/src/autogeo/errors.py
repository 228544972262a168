"""Exception hierarchy shared by all modules."""


class GeometryError(ValueError):
    """Base class for domain violations raised by autogeo."""


class NullSpeed(GeometryError):
    """The velocity is null (or not timelike in the index-2 metric)."""


class ChartViolation(GeometryError):
    """A chart condition (u0 != 0, 1 + v.v > 0) fails."""


class AxisSingular(GeometryError):
    """The velocity is parallel to the frame axis used by a Lagrangian."""


class CrossSingular(GeometryError):
    """u x udot is (nearly) null where the 4/3-power term needs it non-null."""


class StepOutOfRange(GeometryError):
    """A finite-difference step lies outside its allowed interval."""


class NotAnIsometry(GeometryError):
    """A matrix fails R^T G R = G."""


class InconsistentDensity(GeometryError):
    """A covariant EP vector is not annihilated by the velocity."""


class GaugeViolation(GeometryError):
    """A gauge function phi fails u . d(phi)/du = 0."""


class EmptyTrajectory(GeometryError):
    """A trajectory has no samples."""


class StepBudgetExceeded(GeometryError):
    """The requested integration needs more steps than allowed."""


class DomainExit(GeometryError):
    """Integration left the admissible domain.

    ``stage`` names the RK4 stage (1-4), ``"sample"`` (the completed step is
    inadmissible) or ``"overflow"``; ``state`` is the
    last admissible state and ``trajectory`` (set by ``integrate``) holds the
    samples recorded so far.
    """

    def __init__(self, message, stage=None, state=None, trajectory=None):
        super().__init__(message)
        self.stage = stage
        self.state = state
        self.trajectory = trajectory
