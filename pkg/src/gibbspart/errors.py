"""Exception types shared across the package.

The CLI maps these to exit codes: ValidationError -> 2, ResourceError
(including BudgetError) -> 3.
"""


class ValidationError(ValueError):
    """Invalid argument or domain violation (bad parameter, bad spec string)."""


class ResourceError(RuntimeError):
    """A configured resource cap (table size, level cap) would be exceeded."""


class BudgetError(ResourceError):
    """An iteration/attempt budget was exhausted before the result converged."""
