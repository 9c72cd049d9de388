"""
ORC error hierarchy
Every layer raises a subclass of OrcError so the CLI can map them to exit code 2
"""

from typing import Optional


class OrcError(Exception):
    """Base error for the rule engine."""

    def __init__(self, message: str, file: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.file = file
        self.line = line

    def located(self, file: Optional[str] = None, line: Optional[int] = None) -> "OrcError":
        """Attach a file/line location (keeps an existing one)"""
        if self.file is None:
            self.file = file
        if self.line is None:
            self.line = line
        return self

    def diagnostic(self) -> dict:
        return {
            'file': self.file,
            'line': self.line,
            'error': type(self).__name__,
            'message': self.message,
        }


# Frequency layer
class FrequencyError(OrcError):
    pass

class DomainMismatch(FrequencyError):
    pass


# Model layer
class ModelError(OrcError):
    pass

class UnknownType(ModelError):
    pass

class UnknownRole(ModelError):
    pass

class UnknownTime(ModelError):
    pass

class ModelFormatError(ModelError):
    pass


# Logic and path layers
class EvaluationError(OrcError):
    pass

class UnboundVariable(EvaluationError):
    pass

class EmptyProduct(EvaluationError):
    pass


# Constraint layer
class ConstraintError(OrcError):
    pass

class NoJoinPath(ConstraintError):
    pass

class AmbiguousJoinPath(ConstraintError):
    pass

class TypeMismatch(ConstraintError):
    pass

class DegenerateConstraint(ConstraintError):
    pass


# Descriptor layer
class DescriptorError(OrcError):

    def __init__(self, message: str, position: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.position = position

    def diagnostic(self) -> dict:
        data = super().diagnostic()
        data['position'] = self.position
        return data

class LexiconError(DescriptorError):
    pass

class UnknownPhrase(DescriptorError):
    pass

class RuleSyntaxError(DescriptorError):

    def __init__(self, message: str, position: Optional[int] = None, expected=(), **kwargs):
        super().__init__(message, position=position, **kwargs)
        self.expected = tuple(sorted(expected))

class UnresolvableName(DescriptorError):
    pass
