"""Excepciones del pipeline CKGP.

Cada etapa lanza su propia subclase de ``CKGPError``; la CLI las traduce a
códigos de salida (ver ``main.py``).
"""
from typing import Optional


class CKGPError(Exception):
    """Base de todos los errores del toolkit."""
    exit_code = 2


class ParseError(CKGPError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class SnapshotVersionError(CKGPError):
    pass


class SnapshotIntegrityError(CKGPError):
    pass


class AlignmentError(CKGPError, ValueError):
    pass


class ExtractionError(CKGPError, ValueError):
    pass


class SamplerError(CKGPError):
    def __init__(self, strategy: str, message: str, achieved: Optional[int] = None):
        self.strategy = strategy
        self.achieved = achieved
        suffix = f" (achieved {achieved})" if achieved is not None else ""
        super().__init__(f"[{strategy}] {message}{suffix}")


class ScorerConfigError(CKGPError, ValueError):
    pass


class NonFiniteLossError(CKGPError, ArithmeticError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-finite loss {value!r} at batch example {index}")


class TrainingError(CKGPError, ValueError):
    pass


class EvaluationError(CKGPError, ValueError):
    pass


class MetricsError(CKGPError, ValueError):
    pass


class ConfigError(CKGPError, ValueError):
    exit_code = 1


class UpstreamMissingError(CKGPError):
    exit_code = 3

    def __init__(self, artifact: str, command: str):
        self.artifact = artifact
        self.command = command
        super().__init__(f"missing {artifact}: run cmd_{command} first")


class UndefinedCorrelationError(CKGPError, ValueError):
    pass


class UnknownHeadError(EvaluationError):
    def __init__(self, head: str, relation: str):
        self.head = head
        super().__init__(f"unknown head {head!r}: not a node of the {relation} relation graph")


class NoCandidatesError(EvaluationError):
    def __init__(self, head: str, relation: str):
        self.head = head
        super().__init__(f"head {head!r} has no candidate tails in the {relation} relation graph")
