"""
Error types shared by the numerical services
"""
from typing import Any, Dict, Optional


class DomainError(ValueError):
    """Argument outside the domain an operation is defined on"""


class AccuracyError(ArithmeticError):
    """Requested accuracy could not be reached"""

    def __init__(self, message: str, bound: float = float("nan"),
                 diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.bound = bound
        self.diagnostics = diagnostics or {}
