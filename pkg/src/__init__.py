"""Twin-field QKD network key-rate toolkit."""

from .core import KeyRateReport, ProtocolParams, SecurityParams
from .detection import ChannelSpec, DetectionTally, PhaseFilter
