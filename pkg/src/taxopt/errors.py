"""Exception types shared across the package."""


class TaxOptError(Exception):
    """Base class for all taxopt errors."""


class DomainError(TaxOptError):
    """An input value is outside the domain an operation accepts."""


class MissingInputError(TaxOptError):
    """A rule references an input that a taxpayer does not carry."""

    def __init__(self, input_id: str, taxpayer_id: str | None = None):
        self.input_id = input_id
        self.taxpayer_id = taxpayer_id
        where = f" for taxpayer {taxpayer_id!r}" if taxpayer_id else ""
        super().__init__(f"missing input {input_id!r}{where}")


class MissingCharacteristicError(TaxOptError):
    """A group dimension needs a characteristic the taxpayer lacks."""

    def __init__(self, field: str, taxpayer_id: str | None = None):
        self.field = field
        self.taxpayer_id = taxpayer_id
        where = f" for taxpayer {taxpayer_id!r}" if taxpayer_id else ""
        super().__init__(f"missing characteristic {field!r}{where}")


class GroupResolutionError(TaxOptError):
    """A taxpayer's characteristics do not resolve to a group."""

    def __init__(self, dimension: str, value: object):
        self.dimension = dimension
        self.value = value
        super().__init__(
            f"characteristic value {value!r} does not match any group "
            f"of dimension {dimension!r}"
        )


class ValidationError(TaxOptError):
    """A document or population failed validation.

    Carries the individual findings so callers can report them together.
    """

    def __init__(self, issues: list[str]):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class CompileError(TaxOptError):
    """A reform specification cannot be lowered to a linear problem."""


class SolverError(TaxOptError):
    """The solver was driven outside its contract."""
