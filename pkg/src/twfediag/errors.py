"""Exception hierarchy.

Every anticipated failure mode raises a subclass of :class:`PanelError`,
so callers (including the CLI) can distinguish data/design problems from
genuine bugs.
"""


class PanelError(Exception):
    """Base class for all data, design and estimation errors."""


class EmptyInputError(PanelError):
    """No observations were supplied."""


class DuplicateUnitError(PanelError):
    """The same (unit, group, time) key appears more than once."""


class MissingCellError(PanelError):
    """A group is absent in some period, so the panel of groups is not balanced."""

    def __init__(self, group, time):
        self.group = group
        self.time = time
        super().__init__(f"group {group!r} has no observations at period {time!r}")


class MixedTreatmentInCellError(PanelError):
    """Units within one (group, period) cell carry different treatments."""

    def __init__(self, group, time):
        self.group = group
        self.time = time
        super().__init__(f"treatment varies within cell ({group!r}, {time!r})")


class NonBinaryTreatmentError(PanelError):
    """A treatment value is not 0 or 1 (beyond snapping tolerance)."""


class MissingColumnError(PanelError):
    """An expected column is absent from the input file."""


class CollinearError(PanelError):
    """The treatment regressor is exactly explained by the fixed effects."""


class DegenerateNormalizerError(PanelError):
    """The treated-cell average residual is zero, so weights are undefined."""


class PreconditionNotMetError(PanelError):
    """An operation's precondition does not hold for the given inputs."""


class ConstantCovariateError(PanelError):
    """The covariate has no variation across treated cells."""


class ZeroDispersionError(PanelError):
    """The weights have zero dispersion, so the heterogeneity bound is undefined."""


class ZeroBetaError(PanelError):
    """The coefficient is zero, so the opposite-sign bound is undefined."""


class NoNegativeWeightError(PanelError):
    """All weights are non-negative, so the opposite-sign bound is undefined."""


class InfeasibleError(PanelError):
    """The sign-constrained program has an empty feasible set."""


class NoSwitchersError(PanelError):
    """No cell changes treatment between consecutive periods."""


class NoPlaceboSwitchersError(PanelError):
    """No switcher has a stable treatment history over the placebo window."""


class HorizonTooLargeError(PanelError):
    """The panel is too short for the requested placebo horizon."""


class TooFewGroupsError(PanelError):
    """Fewer than two groups; the cluster bootstrap cannot resample."""


class AllDrawsDegenerateError(PanelError):
    """Every bootstrap replication failed to produce an estimate."""


class InvalidConfigError(PanelError):
    """A simulation configuration value is missing or malformed."""
