"""Exception hierarchy shared across the toolkit.

Every domain failure raises an NsiError subclass.  The CLI maps these to
exit code 2 and a machine-readable JSON record on stderr; anything else
is a usage error (exit 1) or a bug.
"""

from __future__ import annotations


class NsiError(Exception):
    """Base class for all domain errors."""

    #: stable machine-readable identifier, overridden per subclass
    code = "error"

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ProgramSyntaxError(NsiError):
    code = "syntax_error"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column

    def payload(self) -> dict:
        d = super().payload()
        d.update(line=self.line, column=self.column)
        return d


class ArityConflictError(NsiError):
    code = "arity_conflict"

    def __init__(self, symbol: str, seen: int, expected: int):
        super().__init__(
            f"symbol '{symbol}' used with arity {seen} but previously with arity {expected}"
        )
        self.symbol = symbol


class ResourceLimitError(NsiError):
    code = "resource_limit"


class InsufficientDepthError(NsiError):
    code = "insufficient_depth"

    def __init__(self, needed, given: int):
        if needed is None:
            msg = (
                "no finite grounding depth can be certified sufficient for this "
                "input (a body-only variable ranges over an infinite input)"
            )
        else:
            msg = (
                f"grounding depth {given} may miss clause instances with heads in "
                f"the requested prefix; depth >= {needed} is sufficient"
            )
        super().__init__(msg)
        self.needed = needed
        self.given = given

    def payload(self) -> dict:
        d = super().payload()
        d.update(needed=self.needed, given=self.given)
        return d


class OutOfPrefixError(NsiError):
    code = "out_of_prefix"


class UnknownSymbolError(NsiError):
    code = "unknown_symbol"


class DigitAlphabetError(NsiError):
    code = "digit_out_of_alphabet"


class UnknownTailError(NsiError):
    code = "unknown_tail"


class DegenerateNodesError(NsiError):
    code = "degenerate_nodes"


class OutOfDomainError(NsiError):
    code = "out_of_domain"


class NotPropositionalError(NsiError):
    code = "not_propositional"


class DivergenceError(NsiError):
    code = "divergence"


class SelectorError(NsiError):
    code = "selector_contract"
