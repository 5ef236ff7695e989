"""Exception hierarchy shared by the checker, the oracle and the CLI."""


class PatlError(Exception):
    """Base class for every error raised by this package."""


class ModelError(PatlError):
    """A model file could not be read, or its structure is not a valid CGS."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class DistributionError(PatlError, ValueError):
    pass


class IllegalActionError(PatlError):
    """A joint action uses an action that is not legal for some agent."""

    def __init__(self, state, agent, action):
        super().__init__(f"action {action!r} is not legal for agent {agent!r} in state {state!r}")
        self.state = state
        self.agent = agent
        self.action = action


class FormulaSyntaxError(PatlError):
    def __init__(self, message, position=None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")
        self.position = position


class FragmentError(PatlError):
    """The formula is outside the PATL fragment the checker handles."""

    def __init__(self, diagnostic):
        super().__init__(f"formula is not in PATL: {diagnostic}")
        self.diagnostic = diagnostic


class BindingError(PatlError):
    pass


class ProfileError(PatlError):
    pass


class OracleGuardError(PatlError):
    def __init__(self, combinations, guard):
        super().__init__(
            f"brute-force check refused: {combinations} strategy/policy combinations exceed the guard of {guard}"
        )
        self.combinations = combinations
        self.guard = guard


class ConfigError(PatlError, ValueError):
    pass
