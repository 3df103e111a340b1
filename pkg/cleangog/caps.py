"""
Resource caps for the enumerating parts of the toolkit.

Every stage that materializes group elements (image groups, quotient tables,
regular representations) or polynomial coefficients asks a cap monitor first.
Two strategies are provided:
1. Bounded monitoring with warning thresholds and peak tracking
2. No capping (pass-through implementation for exploration)

The cap system is designed to be:
- Thread-safe: the depth search may consult one monitor from several workers
- Explicit: exceeding a cap raises CapExceeded, it never truncates silently
- Observable: usage above the warning threshold is logged
"""

from abc import ABC, abstractmethod
from typing import Dict, Any, Optional
import threading
import logging

from .exceptions import CapExceeded

logger = logging.getLogger(__name__)

# Default limits; depth defaults depend on the prime and live in schemas.RunConfig.
DEFAULT_ELEMENT_CAP = 2 ** 20
DEFAULT_MONOMIAL_CAP = 2 ** 20
DEFAULT_ORDER_CAP = 10 ** 6


class CapMonitor(ABC):
    """
    Abstract base class for all cap monitors.

    Subclasses must implement:
    - check(): report whether a request fits under a named cap
    - admit(): raise CapExceeded when it does not
    - usage(): peak requested sizes per cap

    Why is this important?
    -----------------------------------
    Algorithms take a monitor instead of raw integers, so the same code can run
    under tight caps in tests, generous caps from the CLI, or no caps at all.
    """

    @abstractmethod
    def check(self, cap: str, requested: int) -> Optional[Dict[str, Any]]:
        """
        Check a request against a cap.

        Args:
            cap (str): Cap name ("element", "monomial", "order", "depth")
            requested (int): Size about to be materialized

        Returns:
            Optional[Dict[str, Any]]: Cap information if exceeded, None otherwise.
            The dictionary contains capped, cap, limit and requested.
        """
        pass

    @abstractmethod
    def admit(self, cap: str, requested: int) -> None:
        """
        Admit a request or raise CapExceeded.

        Args:
            cap (str): Cap name
            requested (int): Size about to be materialized
        """
        pass

    @abstractmethod
    def usage(self) -> Dict[str, int]:
        """
        Return the peak admitted size per cap.
        """
        pass

    def limit(self, cap: str) -> Optional[int]:
        """
        Return the configured limit for a cap, or None when uncapped.
        """
        return None


class ElementCapMonitor(CapMonitor):
    """
    Cap monitor with per-cap limits, peak tracking and warning thresholds.

    A request above the limit raises CapExceeded naming the cap; a size request
    above warning_threshold * limit is admitted and logged as a warning. The depth
    cap is a count of levels, so requests under it never warn. Unknown cap names
    are admitted without a limit.

    Thread safety is ensured using a lock.
    """

    def __init__(
        self,
        element_cap: int = DEFAULT_ELEMENT_CAP,
        monomial_cap: int = DEFAULT_MONOMIAL_CAP,
        order_cap: int = DEFAULT_ORDER_CAP,
        depth_cap: Optional[int] = None,
        warning_threshold: float = 0.8,
    ):
        """
        Initialize the monitor.

        Args:
            element_cap (int): Maximum number of group elements materialized at once
            monomial_cap (int): Maximum number of monomials in a truncated series
            order_cap (int): Maximum order of a certificate group
            depth_cap (Optional[int]): Maximum filtration depth, None for no limit
            warning_threshold (float): Fraction of a cap that triggers a warning
        """
        self._limits: Dict[str, int] = {
            "element": element_cap,
            "monomial": monomial_cap,
            "order": order_cap,
        }
        if depth_cap is not None:
            self._limits["depth"] = depth_cap
        for name, value in self._limits.items():
            if value < 1:
                raise ValueError(f"{name} cap must be positive, got {value}")
        self.warning_threshold = warning_threshold
        self._peaks: Dict[str, int] = {}
        self._lock = threading.Lock()

    def limit(self, cap: str) -> Optional[int]:
        return self._limits.get(cap)

    def check(self, cap: str, requested: int) -> Optional[Dict[str, Any]]:
        limit = self._limits.get(cap)
        if limit is None or requested <= limit:
            return None
        return {
            "capped": True,
            "cap": cap,
            "limit": limit,
            "requested": requested,
        }

    def admit(self, cap: str, requested: int) -> None:
        with self._lock:
            info = self.check(cap, requested)
            if info:
                logger.error(f"{cap} cap exceeded: {requested} > {info['limit']}")
                raise CapExceeded(cap, info["limit"], requested)
            self._peaks[cap] = max(self._peaks.get(cap, 0), requested)
            limit = self._limits.get(cap)
            if cap != "depth" and limit is not None and requested > limit * self.warning_threshold:
                logger.warning(f"{cap} usage close to cap: {requested}/{limit}")

    def usage(self) -> Dict[str, int]:
        with self._lock:
            return dict(self._peaks)


class NoCapMonitor(CapMonitor):
    """
    No capping (pass-through implementation).

    Every request is admitted. Useful for exploratory runs where the caller
    accepts that an enumeration may take a long time.
    """

    def check(self, cap: str, requested: int) -> Optional[Dict[str, Any]]:
        return None

    def admit(self, cap: str, requested: int) -> None:
        pass

    def usage(self) -> Dict[str, int]:
        return {}
