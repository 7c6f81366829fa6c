"""Price schedules handed to households and written to prices.csv."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class PriceSchedule:
    """
    Base consumption price and FiT per slot, plus the incentive adjustments.

    `adjust` and `fit_adjust` are either length-T (one adjustment for the whole network)
    or H x T with rows ordered like `home_ids` (individualized incentives).
    """
    base: np.ndarray
    fit: np.ndarray
    adjust: np.ndarray
    fit_adjust: np.ndarray
    home_ids: Tuple[int, ...] = field(default_factory=tuple)

    @classmethod
    def flat(cls, base: np.ndarray, fit: np.ndarray, home_ids: Tuple[int, ...] = ()) -> "PriceSchedule":
        base = np.asarray(base, dtype=float)
        return cls(
            base=base,
            fit=np.asarray(fit, dtype=float),
            adjust=np.zeros_like(base),
            fit_adjust=np.zeros_like(base),
            home_ids=tuple(home_ids),
        )

    def with_adjustments(self, adjust: np.ndarray, fit_adjust: np.ndarray,
                         home_ids: Optional[Tuple[int, ...]] = None) -> "PriceSchedule":
        return PriceSchedule(
            base=self.base,
            fit=self.fit,
            adjust=np.asarray(adjust, dtype=float),
            fit_adjust=np.asarray(fit_adjust, dtype=float),
            home_ids=self.home_ids if home_ids is None else tuple(home_ids),
        )

    @property
    def num_slots(self) -> int:
        return int(self.base.shape[0])

    @property
    def individualized(self) -> bool:
        return self.adjust.ndim == 2

    def _row(self, values: np.ndarray, home_id: Optional[int]) -> np.ndarray:
        if values.ndim == 1:
            return values
        if home_id is None:
            raise ValueError("individualized price schedule needs a home id")
        return values[self.home_ids.index(home_id)]

    def adjust_for(self, home_id: Optional[int] = None) -> np.ndarray:
        return self._row(self.adjust, home_id)

    def fit_adjust_for(self, home_id: Optional[int] = None) -> np.ndarray:
        return self._row(self.fit_adjust, home_id)

    def buy_for(self, home_id: Optional[int] = None) -> np.ndarray:
        """Real-time consumption price: base + adjust."""
        return self.base + self.adjust_for(home_id)

    def fit_for(self, home_id: Optional[int] = None) -> np.ndarray:
        """Real-time feed-in price: fit + fit_adjust."""
        return self.fit + self.fit_adjust_for(home_id)
