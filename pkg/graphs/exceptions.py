from BSonata.exceptions import BSonataError


class RetriesExhausted(BSonataError):
    """No strongly connected sample was drawn within the retry budget."""

    def __init__(self, n, p, attempts):
        self.n = n
        self.p = p
        self.attempts = attempts
        super().__init__(
            f'no strongly connected Erdos-Renyi graph with n={n}, p={p} '
            f'after {attempts} attempts'
        )


class EdgeListError(BSonataError):
    """An edge-list file is malformed."""
