"""Exception hierarchy shared by every engine.

Each error carries a stable ``code`` string; the CLI reports it in its
machine-readable error payload.
"""


class BfctlError(Exception):
    code = "Error"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return v.item()
    return v


class ConfigError(BfctlError):
    """Invalid model configuration; ``violations`` lists every problem found."""

    code = "ConfigError"

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{c}: {m}" for c, m in self.violations)
        super().__init__(msg, violations=[{"code": c, "message": m} for c, m in self.violations])

    @property
    def codes(self):
        return [c for c, _ in self.violations]


class EvalDomain(BfctlError):
    code = "EvalDomain"


class Unstable(BfctlError):
    code = "Unstable"


class NearCritical(BfctlError):
    code = "NearCritical"


class RootCountMismatch(BfctlError):
    code = "RootCountMismatch"


class SingularSystem(BfctlError):
    code = "SingularSystem"


class UnknownOutOfRange(BfctlError):
    code = "UnknownOutOfRange"


class InversionUnstable(BfctlError):
    code = "InversionUnstable"


class PreconditionUnmet(BfctlError):
    code = "PreconditionUnmet"


class DivisionDomain(BfctlError):
    code = "DivisionDomain"


class NoConvergence(BfctlError):
    code = "NoConvergence"


class UnknownScenario(BfctlError):
    code = "UnknownScenario"
