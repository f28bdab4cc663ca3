from src.core.exceptions import (
    ConstraintViolation,
    DegenerateDenominator,
    InfeasibleBounds,
    InfeasibleEverywhere,
    InputFormatError,
    InvalidParameters,
    QNetException,
)
from src.core.params import AoppMeasurement, ProtocolParams, SecurityParams
from src.core.decoy import DecoyBounds, decoy_bounds, expected_pair_counts
from src.core.aopp import AoppEstimate, aopp_estimate
from src.core.keyrate import KeyRateReport, bits_per_second, evaluate_key_rate, key_rate
