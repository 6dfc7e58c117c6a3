class DimensionError(ValueError):
    """Vector or operator size does not match the space."""


class UnsupportedKindError(TypeError):
    """Operation is only defined for some kinds of norm (usually polytopal)."""


class NonAbsoluteError(ValueError):
    """A norm expected to be absolute failed one of the absolute-norm axioms."""

    def __init__(self, axiom: str, detail: str = ""):
        self.axiom = axiom
        super().__init__(f"norm is not absolute: property ({axiom}) fails{': ' + detail if detail else ''}")


class OrthogonalityError(ValueError):
    """The pair (a, b) does not meet the single-coordinate pairing condition."""
