"""Exceptions shared across the solver, the baselines and the learning loop."""


class InfeasibleError(RuntimeError):
    """No allocation satisfies the constraints.

    ``report`` optionally carries a feasibility report or a list of the
    violated constraints; ``round_index`` is filled in by the learning loop.
    """

    def __init__(self, message, report=None, round_index=None):
        super().__init__(message)
        self.report = report
        self.round_index = round_index

    def __str__(self):
        base = super().__str__()
        if self.round_index is None:
            return base
        return f"round {self.round_index}: {base}"
