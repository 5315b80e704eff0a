"""
Error hierarchy shared by the numerical modules and the command line.

Each error carries a stable ``code`` and the process ``exit_status`` the CLI
returns for it, the same way an API error carries its HTTP status.
"""
from typing import Optional


class LabError(Exception):
    code = "LAB_ERROR"
    exit_status = 1

    def __init__(self, message: str, *, step: Optional[int] = None, time: Optional[float] = None):
        super().__init__(message)
        self.message = message
        self.step = step
        self.time = time

    def __str__(self):
        if self.step is None:
            return f"{self.code}: {self.message}"
        return f"{self.code} at step {self.step} (t={self.time!r}): {self.message}"

    def to_dict(self):
        return {
            "code": self.code,
            "exit_status": self.exit_status,
            "message": self.message,
            "step": self.step,
            "time": self.time,
        }


class ConfigError(LabError):
    code = "CONFIG_ERROR"
    exit_status = 2


class NetworkParseError(ConfigError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


# Algebraic preconditions
class DimensionError(LabError):
    code = "DIMENSION_MISMATCH"
    exit_status = 10


class NotHermitianError(LabError):
    code = "NOT_HERMITIAN"
    exit_status = 10


class RankDeficiencyError(LabError):
    code = "RANK_DEFICIENT"
    exit_status = 10


class SizeLimitError(LabError):
    code = "SIZE_LIMIT"
    exit_status = 10


class SectorError(LabError):
    code = "OUTSIDE_SECTOR"
    exit_status = 10


class NormalizationError(LabError):
    code = "NOT_NORMALIZED"
    exit_status = 10


class InvalidTargetError(LabError):
    code = "INVALID_TARGET"
    exit_status = 10


# Engine outcomes
class DegenerateOptimumError(LabError):
    code = "DEGENERATE_OPTIMUM"
    exit_status = 3


class AmbiguousPairingError(LabError):
    code = "AMBIGUOUS_PAIRING"
    exit_status = 4


class InfeasibleError(LabError):
    code = "INFEASIBLE"
    exit_status = 5


class AnnihilationError(LabError):
    code = "ANNIHILATION"
    exit_status = 6


class OutputError(LabError):
    code = "IO_ERROR"
    exit_status = 7


VERIFY_FAILED_STATUS = 8
