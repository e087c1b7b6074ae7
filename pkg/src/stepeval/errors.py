"""Exception hierarchy.

Every error carries the CLI exit code of its family so the command layer can
map failures without a lookup table:

    2  validation (rubric, manifest, templates, inputs)
    3  infeasible optimization
    4  backend failure
    5  verdict parse failure
"""

from __future__ import annotations

from typing import Optional


class StepEvalError(Exception):
    exit_code = 1


# -- validation (exit 2) -----------------------------------------------------


class ValidationError(StepEvalError):
    exit_code = 2


class FileMissing(ValidationError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"file not found: {self.path}")


class MalformedDocument(ValidationError):
    def __init__(self, path, detail: str):
        self.path = str(path)
        self.detail = detail
        super().__init__(f"malformed document {self.path}: {detail}")


class InvalidRubric(ValidationError):
    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"invalid rubric at {field}: {detail}")


class LengthMismatch(ValidationError):
    def __init__(self, expected: int, got: int, what: str = "vector"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} length mismatch: expected {expected}, got {got}")


class NonBinaryEntry(ValidationError):
    def __init__(self, position: int, value):
        self.position = position
        self.value = value
        super().__init__(f"entry {position} is {value!r}, expected 0 or 1")


class MissingImage(ValidationError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"missing image: {self.path}")


class GroundTruthMismatch(ValidationError):
    def __init__(self, trajectory_id: str, detail: str):
        self.trajectory_id = trajectory_id
        super().__init__(f"ground truth of trajectory {trajectory_id!r} invalid: {detail}")


class UnknownView(ValidationError):
    def __init__(self, name: str, timestep: int):
        self.name = name
        self.timestep = timestep
        super().__init__(f"view {name!r} not present at timestep {timestep}")


class IndexOutOfRange(ValidationError):
    def __init__(self, k: int, n: int):
        self.k = k
        self.n = n
        super().__init__(f"subgoal index {k} outside 1..{n}")


class TemplateIncompatible(ValidationError):
    def __init__(self, template_id: str, detail: str):
        self.template_id = template_id
        super().__init__(f"template {template_id!r} incompatible: {detail}")


class PlaceholderUnfilled(ValidationError):
    def __init__(self, template_id: str, placeholder: str):
        self.template_id = template_id
        self.placeholder = placeholder
        super().__init__(f"template {template_id!r} leaves {{{placeholder}}} unfilled")


class UnknownTemplate(ValidationError):
    def __init__(self, template_id: str):
        self.template_id = template_id
        super().__init__(f"unknown template id {template_id!r}")


class MissingGroundTruth(ValidationError):
    def __init__(self, trajectory_id: str):
        self.trajectory_id = trajectory_id
        super().__init__(f"trajectory {trajectory_id!r} has no ground truth")


class EmptyInput(ValidationError):
    def __init__(self, what: str = "input"):
        super().__init__(f"empty {what}")


class UnresolvedTrajectory(ValidationError):
    def __init__(self, trajectory_id: str):
        self.trajectory_id = trajectory_id
        super().__init__(f"verdict refers to unknown trajectory {trajectory_id!r}")


class EmptyAxis(ValidationError):
    def __init__(self, axis: str):
        self.axis = axis
        super().__init__(f"config space axis {axis!r} is empty")


# -- optimization (exit 3) ---------------------------------------------------


class NoFeasibleConfig(StepEvalError):
    exit_code = 3

    def __init__(self, budget: float, min_cost: float):
        self.budget = budget
        self.min_cost = min_cost
        super().__init__(
            f"no configuration within budget {budget:g} per trajectory; "
            f"minimum feasible budget is {min_cost:.6f}"
        )


# -- backend (exit 4) --------------------------------------------------------


class BackendError(StepEvalError):
    exit_code = 4


class BackendUnavailable(BackendError):
    """Transient failure; callers may retry."""


class CacheMiss(BackendUnavailable):
    def __init__(self, digest: str):
        self.digest = digest
        super().__init__(f"cache miss for request {digest}")


class CacheCorrupt(BackendError):
    def __init__(self, path, line_no: int, detail: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"corrupt cache {self.path} line {line_no}: {detail}")


class AuthRejected(BackendError):
    def __init__(self, status: int, body: str = ""):
        self.status = status
        self.body = body
        super().__init__(f"authentication rejected (HTTP {status})")


class ProviderError(BackendError):
    def __init__(self, status: int, payload):
        self.status = status
        self.payload = payload
        super().__init__(f"provider error HTTP {status}: {payload}")


class BudgetExceeded(BackendError):
    def __init__(self, ceiling: float, projected: float):
        self.ceiling = ceiling
        self.projected = projected
        super().__init__(f"projected spend {projected:.6f} exceeds ceiling {ceiling:.6f}")


# -- parsing (exit 5) --------------------------------------------------------


class VerdictParseError(StepEvalError):
    exit_code = 5

    NO_ANSWER_MARKER = "NoAnswerMarker"
    LENGTH_MISMATCH = "LengthMismatch"
    NON_BINARY_TOKEN = "NonBinaryToken"

    def __init__(self, reason: str, raw: str, detail: Optional[str] = None):
        self.reason = reason
        self.raw = raw
        msg = reason if detail is None else f"{reason}: {detail}"
        super().__init__(msg)
