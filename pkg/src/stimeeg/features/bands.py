"""Standard EEG frequency bands."""

from __future__ import annotations

from dataclasses import dataclass


BAND_NAMES = ("delta", "theta", "alpha", "beta", "gamma")


@dataclass(frozen=True)
class FrequencyBands:
    """Contiguous, non-overlapping [lo, hi) bands below Nyquist."""

    edges: tuple[tuple[str, float, float], ...]

    @classmethod
    def standard(cls, fs: float) -> "FrequencyBands":
        gamma_hi = min(45.0, 0.9 * fs / 2)
        if gamma_hi <= 30.0:
            raise ValueError(f"fs={fs} too low for a non-empty gamma band")
        edges = (
            ("delta", 1.0, 4.0),
            ("theta", 4.0, 8.0),
            ("alpha", 8.0, 13.0),
            ("beta", 13.0, 30.0),
            ("gamma", 30.0, gamma_hi),
        )
        bands = cls(edges)
        bands.validate(fs)
        return bands

    def validate(self, fs: float) -> None:
        for (_, lo, hi), (_, lo2, _) in zip(self.edges, self.edges[1:]):
            if hi != lo2:
                raise ValueError("bands must be contiguous")
        for name, lo, hi in self.edges:
            if not lo < hi:
                raise ValueError(f"band {name} empty")
        if self.edges[-1][2] >= fs / 2:
            raise ValueError("upper band edge must stay below Nyquist")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _, _ in self.edges)

    @property
    def total_range(self) -> tuple[float, float]:
        return self.edges[0][1], self.edges[-1][2]
