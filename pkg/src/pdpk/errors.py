"""Exception hierarchy shared by all pdpk modules."""


class PdpkError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PdpkError):
    """Invalid or inconsistent generator configuration.

    ``problems`` holds one ``(field_path, message)`` pair per violation.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        text = "; ".join(f"{path}: {msg}" if path else msg for path, msg in self.problems)
        super().__init__(text)


class DomainError(PdpkError, ValueError):
    pass


class SingularityError(PdpkError, ArithmeticError):
    pass


class EmptyTargetError(PdpkError, ValueError):
    pass


class NoAdjustableParameterError(PdpkError):
    pass


class InitialisationError(PdpkError):
    pass


class EstimatorError(PdpkError):
    pass


class EmptyRuleSetError(PdpkError, ValueError):
    pass


class SplitInfeasibleError(PdpkError):
    pass


class EmptyGraphError(PdpkError, ValueError):
    pass


class TrainingDivergedError(PdpkError):
    pass


class UnknownIdError(PdpkError, KeyError):
    pass


class EmptyInputError(PdpkError, ValueError):
    pass


class DegenerateCandidateSetError(PdpkError, ValueError):
    pass


class InsufficientQualitiesError(PdpkError, ValueError):
    pass


class TurtleParseError(PdpkError, ValueError):
    pass
