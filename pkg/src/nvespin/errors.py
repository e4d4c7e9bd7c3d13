"""Exception hierarchy shared by all modules.

Solver-side failures derive from :class:`SolverError`; the CLI maps them to
exit code 3. Input problems are :class:`ConfigError` (exit 2) and
:class:`DataFormatError` (exit 4).
"""


class NVSpinError(Exception):
    pass


class SolverError(NVSpinError):
    pass


class DimensionCap(SolverError):
    pass


class NotHermitian(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class NonConvergence(SolverError):
    pass


class AmbiguousManifold(SolverError):
    pass


class EmptyAfterDeadTime(SolverError):
    pass


class DegenerateData(SolverError):
    pass


class UnderDetermined(SolverError):
    pass


class RankDeficient(SolverError):
    pass


class NoLarmorAnchor(SolverError):
    pass


class InvalidRegime(SolverError):
    pass


class MinimumNotBracketed(SolverError):
    pass


class ConfigError(NVSpinError):
    pass


class DataFormatError(NVSpinError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
