"""
Pulse frame structure of the transmitters.
"""

from dataclasses import dataclass, asdict
from typing import Dict, Optional

from src.core.exceptions import InvalidParameters
from src.core.keyrate import DEFAULT_CLOCK_HZ


@dataclass(frozen=True)
class FrameSpec:
    """Signal, reference and vacuum pulses of one frame, and the source clock."""
    signal: int = 400
    reference: int = 600
    vacuum: int = 24
    clock_hz: float = DEFAULT_CLOCK_HZ
    duty: Optional[float] = None  # overrides signal / length when set

    def __post_init__(self) -> None:
        for name in ('signal', 'reference', 'vacuum'):
            if getattr(self, name) < 0:
                raise InvalidParameters(f"Frame {name} count must be >= 0")
        if self.signal == 0:
            raise InvalidParameters("Frame must contain signal pulses")
        if not self.clock_hz > 0:
            raise InvalidParameters(f"Clock rate must be positive, got {self.clock_hz}")
        if self.duty is not None and not 0.0 < self.duty <= 1.0:
            raise InvalidParameters(f"Signal duty must lie in (0, 1], got {self.duty}")

    @property
    def length(self) -> int:
        return self.signal + self.reference + self.vacuum

    @property
    def signal_duty(self) -> float:
        """Fraction of clock slots carrying signal pulses."""
        if self.duty is not None:
            return self.duty
        return self.signal / self.length

    def to_dict(self) -> Dict[str, float]:
        result = asdict(self)
        result['signal_duty'] = self.signal_duty
        return result
