"""
Scenario and domain errors
"""


class ScenarioError(ValueError):
    """Base class for every scenario problem"""
    pass


class ScenarioParseError(ScenarioError):
    """Raised when a scenario file cannot be read or has the wrong shape"""
    pass


class InvariantError(ScenarioError):
    """Raised when a value violates a named invariant"""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"[{invariant}] {message}")
