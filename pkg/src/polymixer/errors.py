class ShapeError(ValueError):
    pass


class DomainError(ValueError):
    pass


class EmptySequenceError(ValueError):
    pass


class BlockSizeError(ValueError):
    pass


class LengthError(ValueError):
    pass


class DegenerateMaskError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class FixtureSchemaError(ValueError):
    pass


class ToleranceBreach(AssertionError):
    """Recomputed fixture output differs from the stored expectation."""

    def __init__(self, max_abs_diff, tolerance, path=None):
        self.max_abs_diff = max_abs_diff
        self.tolerance = tolerance
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(
            f"max abs diff {max_abs_diff:.3e} exceeds tolerance {tolerance:.3e}{where}"
        )
