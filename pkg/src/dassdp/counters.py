"""Operation counters used to audit the cost of the fast and reference paths."""

from collections import Counter


class OpCounter:
    """Tally of named operation counts.

    Pass an instance as ``counter=`` to the instrumented functions; each one
    adds the number of elementary operations it performed under a fixed key.
    """

    def __init__(self):
        self.counts = Counter()

    def add(self, key: str, n: int = 1) -> None:
        self.counts[key] += int(n)

    def __getitem__(self, key: str) -> int:
        return self.counts[key]

    def reset(self) -> None:
        self.counts.clear()

    def __repr__(self):
        return f"OpCounter({dict(self.counts)})"
