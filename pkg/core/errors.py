class KrylovError(Exception):
    """Base error. The exit code is what the CLI returns when this escapes a command."""

    exit_code: int = 1


class InputError(KrylovError):
    """Rejected input: bad dimensions, non-Hermitian data, zero seeds, bad grids."""

    exit_code = 2


class InvariantViolation(KrylovError):
    """A hard identity or bound failed."""

    exit_code = 3

    def __init__(self, invariant: str, detail: str) -> None:
        self.invariant = invariant
        self.detail = detail
        super().__init__(f"invariant '{invariant}' violated: {detail}")


class IntegrationError(KrylovError):

    def __init__(self, message: str, last_good_time: float) -> None:
        self.last_good_time = last_good_time
        super().__init__(f"{message} (last good time t={last_good_time:.6g})")


class TruncationCapExceeded(KrylovError):

    def __init__(self, cap: int, tail_mass: float) -> None:
        self.cap = cap
        self.tail_mass = tail_mass
        super().__init__(
            f"truncation cap of {cap} levels reached with tail mass {tail_mass:.3e} still in the buffer"
        )
