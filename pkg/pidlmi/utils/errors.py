# exception hierarchy shared by all pidlmi modules


class PidlmiError(Exception):
    pass


class ConfigError(PidlmiError, ValueError):
    """
    Invalid configuration value. The message names section and field.
    """


class ModelError(PidlmiError, ValueError):
    pass


class CertificateError(PidlmiError, ValueError):
    pass


class StabilityError(PidlmiError):
    pass


class NormMismatchError(PidlmiError):
    def __init__(self, sweep, bisection):
        super().__init__(
            "H-infinity methods disagree: frequency sweep %.12g, Hamiltonian bisection %.12g"
            % (sweep, bisection)
        )
        self.sweep = sweep
        self.bisection = bisection


class SolverError(PidlmiError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class InfeasibleError(SolverError):
    pass


class SimulationError(PidlmiError, ValueError):
    pass


class DivergenceError(SimulationError):
    def __init__(self, time):
        super().__init__("non-finite plant state at t = %.9g s" % time)
        self.time = time
