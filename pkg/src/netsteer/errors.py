"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside the domain of the operation."""


class IncompleteDataError(KeyError):
    """Expectation data is missing one or more required settings.

    ``missing`` holds the absent setting vectors, node 1 first.
    """

    def __init__(self, missing):
        self.missing = [tuple(int(m) for m in s) for s in missing]
        shown = ", ".join(str(s) for s in self.missing[:8])
        more = "" if len(self.missing) <= 8 else f" (+{len(self.missing) - 8} more)"
        super().__init__(f"missing expectation data for settings: {shown}{more}")

    def __str__(self):
        return self.args[0]


class ResourceLimitError(RuntimeError):
    """The requested enumeration is too large for the chosen method."""
